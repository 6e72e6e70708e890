"""Walk through the built-in cruise profile.

The virtual lead train follows a piecewise-constant-jerk trajectory:
position, velocity and acceleration are continuous, and the jerk feeds the
first train's head controller directly, so it must stay bounded.  This
script prints the phase plan and samples the profile over the full horizon.
"""

import numpy as np

from platoonsim.presets import paper_s5_profile


def main():
    profile = paper_s5_profile()
    print(f"horizon: {profile.horizon:.0f} s, velocity ceiling {profile.v_max} m/s")
    print(f"start: x0={profile.x0} m, v0={profile.v0} m/s, w0={profile.w0} m/s^2\n")

    print("phase plan:")
    t = 0.0
    for k, phase in enumerate(profile.phases, start=1):
        _, v, w, _ = profile.evaluate(t)
        print(f"  {k}: t={t:7.1f} s  jerk={phase.jerk:+.6f} m/s^3 "
              f"for {phase.duration:5.0f} s   (entering at v={v:5.1f} m/s, "
              f"w={w:+.2f} m/s^2)")
        t += phase.duration

    ts = np.linspace(0.0, profile.horizon, 9)
    print("\nsamples:")
    for t in ts:
        x, v, w, u = profile.evaluate(t)
        print(f"  t={t:7.1f} s  x={x:10.1f} m  v={v:6.2f} m/s  "
              f"w={w:+.3f} m/s^2  u={u:+.6f} m/s^3")

    vs = [profile.evaluate(t)[1] for t in np.linspace(0, profile.horizon, 4801)]
    print(f"\nvelocity envelope over the horizon: [{min(vs):.2f}, {max(vs):.2f}] m/s"
          f" (plateau hits the ceiling exactly: {max(vs) == profile.v_max})")

    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        ts = np.linspace(0, profile.horizon, 2401)
        samples = np.array([profile.evaluate(t) for t in ts])
        fig, axes = plt.subplots(3, 1, sharex=True, figsize=(8, 7))
        for ax, col, label in zip(axes, (1, 2, 3),
                                  ("v0 (m/s)", "w0 (m/s^2)", "u0 (m/s^3)")):
            ax.plot(ts, samples[:, col])
            ax.set_ylabel(label)
            ax.grid(alpha=0.3)
        axes[-1].set_xlabel("t (s)")
        fig.tight_layout()
        fig.savefig("reference_profile.png", dpi=120)
        print("wrote reference_profile.png")
    except ImportError:
        print("matplotlib not available; skipping the plot")


if __name__ == "__main__":
    main()
