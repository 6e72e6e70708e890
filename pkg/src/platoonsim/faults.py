"""Actuator fault signals and their generator model.

Faults are a superposition of a windowed constant mode and a windowed
sinusoid.  Both modes are states of a small autonomous linear generator
(constant + rotation pair), which is the structure the observer exploits:
inside each occurrence window the analytic signal below satisfies the
generator dynamics exactly, and the observer carries an internal copy of
the generator to estimate the fault without bias.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError


@dataclass(frozen=True)
class FaultModel:
    """Parameters of one carriage's actuator fault.

    ``upsilon`` and ``nu*omega`` scale the constant and periodic fault states
    into a force rate (N/s per unit amplitude); the amplitudes ``constant_amp``
    and ``periodic_amp`` are dimensionless.  Each mode is active only inside
    its closed occurrence window ``[t_start, t_end]``.
    """

    omega: float          # rad/s, rotation frequency of the periodic mode
    upsilon: float        # N/s per unit, constant-mode input gain
    nu: float             # s/rad, periodic-mode gain (enters as nu*omega)
    constant_amp: float   # F_c
    periodic_amp: float   # F_p
    phase: float          # rad
    window_const: tuple   # (t_start, t_end), s
    window_periodic: tuple

    def __post_init__(self):
        if self.omega < 0:
            raise ConfigurationError("fault frequency must be nonnegative")
        for name, (t0, t1) in (("window_const", self.window_const),
                               ("window_periodic", self.window_periodic)):
            if t0 > t1:
                raise ConfigurationError(f"{name} has t_start > t_end")


def exosystem_matrix(omega):
    """3x3 generator matrix: zero row for the constant mode, rotation block at ``omega``."""
    return np.array([[0.0, 0.0, 0.0],
                     [0.0, 0.0, omega],
                     [0.0, -omega, 0.0]])


def fault_value(t, model):
    """Fault state (3-vector) at time ``t``.

    f1 is the windowed constant; (f2, f3) is the windowed rotation pair with
    f3 = A*cos(omega*t + phase) and f2 = A*sin(omega*t + phase), the unique
    companion that makes the pair satisfy the generator dynamics inside the
    window.  Only f1 and f3 carry force through the input row; f2 exists for
    the generator's internal consistency.
    """
    f1 = model.constant_amp if model.window_const[0] <= t <= model.window_const[1] else 0.0
    if model.window_periodic[0] <= t <= model.window_periodic[1]:
        arg = model.omega * t + model.phase
        f2 = model.periodic_amp * math.sin(arg)
        f3 = model.periodic_amp * math.cos(arg)
    else:
        f2 = 0.0
        f3 = 0.0
    return np.array([f1, f2, f3])


def effective_fault(t, model, mass):
    """Force-rate and jerk contribution of the fault at time ``t``.

    Returns ``(E.f, C.f)`` where E is the fault input row (N/s) and C = E/m
    is its jerk-level counterpart (m/s^3).
    """
    if mass <= 0:
        raise ConfigurationError("mass must be positive")
    f = fault_value(t, model)
    ef = model.upsilon * f[0] + model.nu * model.omega * f[2]
    return ef, ef / mass


def snap_windows(model, step):
    """Copy of ``model`` with window endpoints snapped to the integration grid.

    Keeps mode switches exactly on step boundaries so fixed-step runs are
    reproducible across step sizes that divide the original endpoints.
    """
    def snap(w):
        return (round(w[0] / step) * step, round(w[1] / step) * step)

    return FaultModel(
        omega=model.omega, upsilon=model.upsilon, nu=model.nu,
        constant_amp=model.constant_amp, periodic_amp=model.periodic_amp,
        phase=model.phase,
        window_const=snap(model.window_const),
        window_periodic=snap(model.window_periodic),
    )


def transition_times(model, horizon):
    """Sorted unique window edges inside (0, horizon): the fault's switching instants."""
    edges = set()
    for t0, t1 in (model.window_const, model.window_periodic):
        for edge in (t0, t1):
            if 0.0 < edge < horizon:
                edges.add(edge)
    return sorted(edges)
