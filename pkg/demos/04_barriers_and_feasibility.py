"""Explore the barrier transforms and the feasibility validators.

The head controllers keep two quantities inside open intervals for all
time: the gap error xtilde in (-rho2, rho1) and the combined error
qtilde = vtilde + ell1*xtilde in (-varrho2, varrho1).  The logarithmic
transform below is zero at the origin, strictly increasing, and diverges at
the interval ends, which is what turns the hard constraint into a
boundedness argument.
"""

import dataclasses

from platoonsim.controller import (ConstraintSpec, FollowerGains, HeadGains,
                                   barrier_phi, barrier_psi,
                                   validate_parameters)

CONS = ConstraintSpec(gamma1=9000.0, gamma2=4702.0, d_s=7053.0,
                      sigma1=50.0, sigma2=50.0)
HEAD = HeadGains(ell1=0.01, ell2=2.1, ell3=4.3, ell4=1.0)
FOLLOWER = FollowerGains(l1=0.1, l2=0.1, l3=0.1)


def main():
    rho1, rho2 = CONS.rho1, CONS.rho2
    vr1, vr2 = CONS.varrho(HEAD.ell1)
    print(f"gap-error interval:      (-{rho2:.0f}, {rho1:.0f}) m")
    print(f"combined-error interval: (-{vr2:.2f}, {vr1:.2f}) m/s\n")

    print("gap-error transform phi:")
    for x in (-2350.9, -2000.0, -500.0, 0.0, 500.0, 1500.0, 1946.9):
        phi, slope = barrier_phi(x, rho1, rho2)
        print(f"  xtilde={x:9.1f} m  phi={phi:+9.3f}  dphi/dx={slope:.3e}")

    print("\ncombined-error transform psi:")
    for q in (-30.0, -15.0, 0.0, 10.0, 26.0):
        psi, slope = barrier_psi(q, vr1, vr2)
        print(f"  qtilde={q:7.1f} m/s  psi={psi:+8.3f}  dpsi/dq={slope:.3e}")

    print("\ngain feasibility:")
    print("  benchmark gains:", validate_parameters(FOLLOWER, HEAD, CONS) or "ok")
    for label, head in (
            ("ell2 = 2.0", dataclasses.replace(HEAD, ell2=2.0)),
            ("ell3 = 4.2", dataclasses.replace(HEAD, ell3=4.2)),
            ("ell1 = 0.03", dataclasses.replace(HEAD, ell1=0.03))):
        violations = validate_parameters(FOLLOWER, head, CONS)
        print(f"  {label}:")
        for v in violations:
            print(f"    {v}")


if __name__ == "__main__":
    main()
