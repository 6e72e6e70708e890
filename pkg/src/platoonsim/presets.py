"""Built-in scenarios.

``paper-s5`` is the shipped three-train, nine-carriage benchmark: identical
80 t carriages, overlapping constant and periodic actuator faults staggered
across the fleet, observer eigenvalues at -3, and a 2400 s cruise profile
that accelerates from 20 m/s to the 92 m/s ceiling, cruises, brakes back
down and cruises again.
"""

from __future__ import annotations

from .controller import ConstraintSpec, FollowerGains, HeadGains
from .errors import ConfigurationError
from .faults import FaultModel
from .model import (CarriageParams, ConsistTopology, CouplerParams,
                    DavisCoefficients)
from .reference import ReferencePhase, ReferenceProfile
from .simulator import MonitorSpec, NoiseSpec, ScenarioConfig

# Constant-fault and periodic-fault occurrence windows (s) per carriage,
# chain order (1,1) ... (3,3).
_CONST_WINDOWS = ((400.0, 1400.0), (600.0, 1500.0), (800.0, 1600.0),
                  (1000.0, 1700.0), (1200.0, 1800.0), (1400.0, 1900.0),
                  (1600.0, 2000.0), (1800.0, 2100.0), (2000.0, 2200.0))
_PERIODIC_WINDOWS = ((500.0, 2300.0), (700.0, 2300.0), (900.0, 2300.0),
                     (1100.0, 2300.0), (1300.0, 2300.0), (1500.0, 2300.0),
                     (1700.0, 2300.0), (1900.0, 2300.0), (2100.0, 2300.0))

_INITIAL_X = (13062.0, 13036.0, 13010.0, 5157.0, 5131.0, 5105.0, 52.0, 26.0, 0.0)
_INITIAL_V = (20.5, 20.2, 20.3, 19.8, 19.9, 20.5, 19.7, 20.5, 20.2)

_SERVICE_DISTANCE = 7053.0  # m, braking from 92 m/s at 0.6 m/s^2
_JERK = 2.0 ** -10          # m/s^3; exactly representable, ramps 0.25 m/s^2 in 256 s


def paper_s5_profile():
    """Default cruise profile: 20 -> 92 m/s, cruise, back to 20 m/s, cruise.

    Starts the virtual lead exactly one service braking distance ahead of the
    first carriage so the leading gap error starts at zero.  The plateau sits
    exactly at the 92 m/s velocity ceiling.
    """
    ramp = ReferencePhase(256.0, _JERK)
    hold_up = ReferencePhase(32.0, 0.0)
    unramp = ReferencePhase(256.0, -_JERK)
    cruise = ReferencePhase(656.0, 0.0)
    return ReferenceProfile(
        x0=_INITIAL_X[0] + _SERVICE_DISTANCE,
        v0=20.0, w0=0.0,
        phases=(ramp, hold_up, unramp, cruise, unramp, hold_up, ramp, cruise),
        v_max=92.0)


def paper_s5():
    """The shipped benchmark scenario (noise on; disable per run if unwanted)."""
    topology = ConsistTopology(carriages_per_train=(3, 3, 3))
    carriages = []
    for g, (i, j) in enumerate(topology.carriage_ids()):
        fault = FaultModel(
            omega=1.0, upsilon=2.0e5, nu=2.0e5,
            constant_amp=1.0, periodic_amp=1.0,
            phase=6.0 * (i - 1) + 2.0 * j,
            window_const=_CONST_WINDOWS[g],
            window_periodic=_PERIODIC_WINDOWS[g])
        carriages.append(CarriageParams(mass=8.0e4, actuator_rate=50.0, fault=fault))
    return ScenarioConfig(
        topology=topology,
        davis=DavisCoefficients(c0=0.01176, c1=0.00077616, c2=1.6e-5),
        coupler=CouplerParams(stiffness=1.6e5, damping=600.0, spacing=26.0),
        carriages=tuple(carriages),
        constraints=ConstraintSpec(gamma1=9000.0, gamma2=4702.0,
                                   d_s=_SERVICE_DISTANCE, sigma1=50.0, sigma2=50.0),
        follower_gains=FollowerGains(l1=0.1, l2=0.1, l3=0.1),
        head_gains=HeadGains(ell1=0.01, ell2=2.1, ell3=4.3, ell4=1.0),
        profile=paper_s5_profile(),
        initial=tuple((x, v, 0.0) for x, v in zip(_INITIAL_X, _INITIAL_V)),
        observer_k1=3.0,
        observer_eigenvalues=(-3.0, -3.0, -3.0, -3.0, -3.0),
        step=0.01,
        duration=2400.0,
        noise=NoiseSpec(enabled=True, variance=0.5, seed=1),
        representation="composite",
        monitor=MonitorSpec(),
    )


PRESETS = {"paper-s5": paper_s5}


def get_preset(name):
    try:
        builder = PRESETS[name]
    except KeyError:
        raise ConfigurationError(
            f"unknown preset {name!r}; available: {sorted(PRESETS)}") from None
    return builder()
