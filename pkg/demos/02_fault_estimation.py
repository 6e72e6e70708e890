"""Watch the observer lock onto an actuator fault.

A two-train scenario with fault windows moved early so the whole story fits
in a four-minute simulated horizon: the constant mode switches on at 30 s,
the periodic mode at 60 s, both end before 200 s.  The observer estimates
the effective fault (a force rate) and the unmeasured acceleration; both
errors collapse at the placed convergence rate after every switching
instant.
"""

import dataclasses

import numpy as np

from platoonsim.presets import paper_s5
from platoonsim.simulator import run_scenario


def early_fault_scenario():
    base = paper_s5()
    carriages = []
    for g, carriage in enumerate(base.carriages):
        fault = dataclasses.replace(
            carriage.fault,
            window_const=(30.0 + 5.0 * g, 120.0),
            window_periodic=(60.0 + 5.0 * g, 200.0))
        carriages.append(dataclasses.replace(carriage, fault=fault))
    return dataclasses.replace(
        base, carriages=tuple(carriages), duration=240.0,
        noise=dataclasses.replace(base.noise, enabled=False))


def main():
    config = early_fault_scenario()
    print("running 240 s, nine carriages, faults on from t=30 s ...")
    record, report = run_scenario(config)

    c = 0  # carriage (1,1)
    ef = record.data["f_eff"][:, c]
    ef_hat = record.data["f_eff_hat"][:, c]
    e_w = record.data["e_w"][:, c]
    t = record.t
    print(f"\ncarriage (1,1): effective fault peaks at {np.abs(ef).max():.0f} N/s")
    for window in ((25, 30), (35, 45), (55, 60), (70, 80), (110, 125), (190, 230)):
        sel = (t >= window[0]) & (t < window[1])
        print(f"  t in [{window[0]:3d},{window[1]:3d}) s: "
              f"|E.f - E.f_hat| max = {np.abs(ef - ef_hat)[sel].max():10.3e} N/s,  "
              f"|e_w| max = {np.abs(e_w[sel]).max():9.3e} m/s^2")
    print("\nswitching instants re-excite the error; between them it decays "
          "like exp(-3 t) towards zero.")
    print("hard-bound verdicts on this short horizon:",
          {k: report.verdicts[k] for k in ("R2_hard", "R3_hard")},
          "(convergence verdicts need the full benchmark horizon)")

    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        fig, axes = plt.subplots(2, 1, sharex=True, figsize=(8, 6))
        axes[0].plot(t, ef, label="E.f (true)")
        axes[0].plot(t, ef_hat, "--", label="E.f_hat (estimate)")
        axes[0].set_ylabel("force rate (N/s)")
        axes[0].legend()
        axes[0].grid(alpha=0.3)
        axes[1].semilogy(np.abs(ef - ef_hat) + 1e-18)
        axes[1].set_ylabel("|estimation error| (N/s)")
        axes[1].set_xlabel("sample")
        axes[1].grid(alpha=0.3)
        fig.tight_layout()
        fig.savefig("fault_estimation.png", dpi=120)
        print("wrote fault_estimation.png")
    except ImportError:
        print("matplotlib not available; skipping the plot")


if __name__ == "__main__":
    main()
