"""Fixed-step closed-loop simulation and requirement monitoring.

One scenario integrates the whole railway network (true carriage dynamics,
per-carriage observers and the distributed control laws) with the classical
fourth-order fixed-step scheme, deterministically: the same configuration
and seed always produce bit-identical output.

Within every derivative evaluation the computation order is fixed by the
data dependencies of the control laws: reference, fault signals, observer
corrections (velocity channel before acceleration channel), then control
inputs in chain order (head to tail, front train to rear train, since each
follower needs the preceding carriage's estimate derivative and each head
needs the front tail's), and finally the state derivatives.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import controller as ctrl
from . import observer as obs
from .controller import ConstraintSpec, FollowerGains, HeadGains, TrainPairErrors
from .errors import ConfigurationError, IntegrationFault, Violation
from .faults import exosystem_matrix, snap_windows, transition_times
from .model import (CarriageParams, ConsistTopology, CouplerParams,
                    DavisCoefficients)
from .reference import ReferenceProfile

REPRESENTATIONS = ("composite", "plant", "both")
CONTROL_LAWS = ("designed", "zero")


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NoiseSpec:
    """Gaussian jerk disturbance: per-carriage, per-step, held across stages."""

    enabled: bool = False
    variance: float = 0.5
    seed: int = 0


@dataclass(frozen=True)
class MonitorSpec:
    """Tail window and tolerances for the convergence verdicts."""

    tail_window: float = 100.0       # s
    tol_xtilde_mean: float = 5.0     # m
    tol_vtilde_mean: float = 0.5     # m/s
    tol_gap_mean: float = 0.5        # m
    tol_vgap_mean: float = 0.2       # m/s


@dataclass(frozen=True)
class ScenarioConfig:
    """Complete description of one simulation run."""

    topology: ConsistTopology
    davis: DavisCoefficients
    coupler: CouplerParams
    carriages: tuple                 # CarriageParams per carriage, chain order
    constraints: ConstraintSpec
    follower_gains: FollowerGains
    head_gains: HeadGains
    profile: ReferenceProfile
    initial: tuple                   # (x, v, w) per carriage, chain order
    observer_initial: Optional[tuple] = None  # (xh, vh, wh, f1, f2, f3) per carriage
    observer_k1: float = 3.0
    observer_eigenvalues: tuple = (-3.0, -3.0, -3.0, -3.0, -3.0)
    observer_gain_override: Optional[tuple] = None  # 5 entries, bypasses synthesis
    step: float = 0.01
    duration: float = 2400.0
    record_stride: int = 1
    noise: NoiseSpec = NoiseSpec()
    representation: str = "composite"
    monitor: MonitorSpec = MonitorSpec()
    abort_on_violation: bool = False
    control_law: str = "designed"


def initial_pair_errors(config):
    """Gap/velocity errors of every train pair at t=0 (pair 1 is against the profile)."""
    nc_per = config.topology.carriages_per_train
    x0p, v0p, _, _ = config.profile.evaluate(0.0)
    out = {}
    start = 0
    front_x, front_v = x0p, v0p
    for i, m_i in enumerate(nc_per, start=1):
        head_x, head_v, _ = config.initial[start]
        out[i] = TrainPairErrors.from_states(front_x, front_v, head_x, head_v,
                                             config.constraints.d_s,
                                             config.head_gains.ell1)
        tail_x, tail_v, _ = config.initial[start + m_i - 1]
        front_x, front_v = tail_x, tail_v
        start += m_i
    return out


def validate_config(config):
    """All feasibility violations of a scenario (empty list means runnable)."""
    out = []
    if config.step <= 0:
        out.append(Violation("step > 0", config.step, 0.0, "integration"))
    if config.duration <= 0:
        out.append(Violation("duration > 0", config.duration, 0.0, "integration"))
    if config.record_stride < 1:
        out.append(Violation("record_stride >= 1", config.record_stride, 1.0, "integration"))
    if config.representation not in REPRESENTATIONS:
        raise ConfigurationError(f"unknown representation {config.representation!r}")
    if config.control_law not in CONTROL_LAWS:
        raise ConfigurationError(f"unknown control law {config.control_law!r}")
    nc = config.topology.total_carriages
    if len(config.carriages) != nc:
        raise ConfigurationError(f"need {nc} carriage parameter sets, got {len(config.carriages)}")
    if len(config.initial) != nc:
        raise ConfigurationError(f"need {nc} initial states, got {len(config.initial)}")
    if config.observer_initial is not None and len(config.observer_initial) != nc:
        raise ConfigurationError("observer_initial length mismatch")
    if config.duration > config.profile.horizon * (1 + 1e-12):
        out.append(Violation("duration <= profile horizon", config.duration,
                             config.profile.horizon, "reference"))
    if config.noise.variance < 0:
        out.append(Violation("noise variance >= 0", config.noise.variance, 0.0, "noise"))
    out.extend(ctrl.validate_parameters(config.follower_gains, config.head_gains,
                                        config.constraints))
    if not any(v.subject == "head gains" or v.subject == "constraints" for v in out):
        out.extend(ctrl.validate_initial(initial_pair_errors(config),
                                         config.constraints, config.head_gains.ell1))
    return out


# ---------------------------------------------------------------------------
# integrator
# ---------------------------------------------------------------------------

def rk4_step(rhs, state, t, h, k1=None):
    """One classical fourth-order step from ``t`` to ``t + h``.

    ``k1`` may be supplied when the derivative at ``t`` has already been
    evaluated.  Raises :class:`IntegrationFault` when the update goes
    non-finite.
    """
    if k1 is None:
        k1 = rhs(t, state)
    k2 = rhs(t + 0.5 * h, state + (0.5 * h) * k1)
    k3 = rhs(t + 0.5 * h, state + (0.5 * h) * k2)
    k4 = rhs(t + h, state + h * k3)
    out = state + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.isfinite(out).all():
        bad = np.flatnonzero(~np.isfinite(out))
        raise IntegrationFault(t, labels=[f"state[{i}]" for i in bad[:8]])
    return out


def inject_disturbance(rng, variance, n_carriages):
    """One step's worth of Gaussian jerk disturbance (held across the step's stages)."""
    return rng.normal(0.0, math.sqrt(variance), size=n_carriages)


# ---------------------------------------------------------------------------
# closed-loop engine
# ---------------------------------------------------------------------------

class _ClosedLoop:
    """Precompiled right-hand side of the full network for one configuration."""

    def __init__(self, config, stale_chain=False):
        self.config = config
        topo = config.topology
        nc = topo.total_carriages
        self.nc = nc
        self.n_trains = topo.train_count
        davis, coupler = config.davis, config.coupler
        self.d_p = coupler.spacing
        self.d_s = config.constraints.d_s
        self.rho1 = config.constraints.rho1
        self.rho2 = config.constraints.rho2
        self.vr1, self.vr2 = config.constraints.varrho(config.head_gains.ell1)
        self.fgains = config.follower_gains
        self.hgains = config.head_gains
        self.c1, self.c2 = davis.c1, davis.c2
        self.c0 = davis.c0
        self.a_stiff, self.b_damp = coupler.stiffness, coupler.damping
        self.zero_control = config.control_law == "zero"
        self.saturate = not config.abort_on_violation
        self.stale_chain = stale_chain

        slices, start = [], 0
        for m_i in topo.carriages_per_train:
            slices.append((start, start + m_i))
            start += m_i
        self.train_slices = tuple(slices)
        self.head_idx = tuple(s for s, _ in slices)
        self.tail_idx = tuple(e - 1 for _, e in slices)
        self.j_of = np.empty(nc, dtype=int)
        self.m_of = np.empty(nc, dtype=int)
        for g, (i, j) in enumerate(topo.carriage_ids()):
            self.j_of[g] = j
            self.m_of[g] = topo.carriages_per_train[i - 1]

        self.mass = np.array([c.mass for c in config.carriages])
        self.rate = np.array([c.actuator_rate for c in config.carriages])
        b_over_m = self.b_damp / self.mass
        interior = (self.j_of > 1) & (self.j_of < self.m_of)
        # B1(v) = bm1 - 2*c2*v ; D1(v) = bm1*v - c2*v^2
        self.bm1 = -(np.where(interior, 2.0, 1.0) * b_over_m) - self.c1 - self.rate
        self.b2 = np.where(self.j_of > 1, b_over_m, 0.0)
        self.b3 = np.where(self.j_of < self.m_of, b_over_m, 0.0)
        self.prev = np.maximum(np.arange(nc) - 1, 0)
        self.next = np.minimum(np.arange(nc) + 1, nc - 1)

        faults = [snap_windows(c.fault, config.step) for c in config.carriages]
        self.omega = np.array([f.omega for f in faults])
        self.upsilon = np.array([f.upsilon for f in faults])
        self.nu_omega = np.array([f.nu * f.omega for f in faults])
        self.f_c = np.array([f.constant_amp for f in faults])
        self.f_p = np.array([f.periodic_amp for f in faults])
        self.f_phi = np.array([f.phase for f in faults])
        self.wc = np.array([f.window_const for f in faults])      # (nc, 2)
        self.wp = np.array([f.window_periodic for f in faults])
        self.snapped_faults = tuple(faults)
        self.e_rows = np.column_stack(
            [self.upsilon, np.zeros(nc), self.nu_omega])
        self.c_rows = self.e_rows / self.mass[:, None]

        gains = []
        cache = {}
        for g, carriage in enumerate(config.carriages):
            key = (tuple(self.c_rows[g]), self.omega[g])
            if key not in cache:
                if config.observer_gain_override is not None:
                    cache[key] = obs.ObserverGains(
                        k1=config.observer_k1,
                        k=tuple(config.observer_gain_override))
                else:
                    a, c = obs.build_augmented_pair(self.c_rows[g],
                                                    exosystem_matrix(self.omega[g]))
                    cache[key] = obs.synthesize_gains(
                        a, c, config.observer_eigenvalues, k1=config.observer_k1)
            gains.append(cache[key])
        self.gains = tuple(gains)
        self.k1g = np.array([g.k1 for g in gains])
        self.k2g = np.array([g.k2 for g in gains])
        self.k3g = np.array([g.k3 for g in gains])
        self.k4g = np.vstack([g.k4 for g in gains])

        has_composite = config.representation in ("composite", "both")
        has_plant = config.representation in ("plant", "both")
        self.has_composite = has_composite
        self.has_plant = has_plant
        self.measure_from_plant = config.representation == "plant"
        offset = 0
        names = (["x", "v", "w"] if has_composite else []) + ["xh", "vh", "wh"]
        self.sl = {}
        for name in names:
            self.sl[name] = slice(offset, offset + nc)
            offset += nc
        self.sl["fh"] = slice(offset, offset + 3 * nc)
        offset += 3 * nc
        if has_plant:
            for name in ("xp", "vp", "tau"):
                self.sl[name] = slice(offset, offset + nc)
                offset += nc
        self.n_states = offset

        self.delta = np.zeros(nc)      # per-step disturbance, set by the driver
        self.violations = []           # barrier saturations seen during stages
        self._last_whdot = np.zeros(nc)

    # -- helpers ------------------------------------------------------------

    def fault_states(self, t):
        """True fault states (nc, 3) at time ``t`` from the windowed closed forms."""
        on_c = (t >= self.wc[:, 0]) & (t <= self.wc[:, 1])
        on_p = (t >= self.wp[:, 0]) & (t <= self.wp[:, 1])
        arg = self.omega * t + self.f_phi
        f = np.zeros((self.nc, 3))
        f[:, 0] = np.where(on_c, self.f_c, 0.0)
        amp = np.where(on_p, self.f_p, 0.0)
        f[:, 1] = amp * np.sin(arg)
        f[:, 2] = amp * np.cos(arg)
        return f

    def coupling_vector(self, x, v):
        """Coupler force on every carriage (telescoped per train)."""
        out = np.zeros(self.nc)
        a, b, d_p = self.a_stiff, self.b_damp, self.d_p
        for s, e in self.train_slices:
            tk = a * (x[s:e - 1] - x[s + 1:e] - d_p) + b * (v[s:e - 1] - v[s + 1:e])
            out[s:e - 1] += tk
            out[s + 1:e] -= tk
        return out

    def stiffness_drift(self, v):
        """b4 coefficient per carriage: stiffness-scaled velocity differences over mass."""
        out = np.zeros(self.nc)
        for s, e in self.train_slices:
            uk = self.a_stiff * (v[s:e - 1] - v[s + 1:e])
            out[s:e - 1] += uk
            out[s + 1:e] -= uk
        return -out / self.mass

    def initial_state(self):
        cfg = self.config
        nc = self.nc
        x0 = np.array([s[0] for s in cfg.initial])
        v0 = np.array([s[1] for s in cfg.initial])
        w0 = np.array([s[2] for s in cfg.initial])
        if cfg.observer_initial is not None:
            oi = np.asarray(cfg.observer_initial, dtype=float)
            xh, vh, wh = oi[:, 0], oi[:, 1], oi[:, 2]
            fh = oi[:, 3:6]
        else:
            # position/velocity are measured, so only the unmeasured channels
            # start with estimation error
            xh, vh, wh = x0.copy(), v0.copy(), np.zeros(nc)
            fh = np.zeros((nc, 3))
        y = np.zeros(self.n_states)
        if self.has_composite:
            y[self.sl["x"]], y[self.sl["v"]], y[self.sl["w"]] = x0, v0, w0
        y[self.sl["xh"]], y[self.sl["vh"]], y[self.sl["wh"]] = xh, vh, wh
        y[self.sl["fh"]] = fh.ravel()
        if self.has_plant:
            y[self.sl["xp"]], y[self.sl["vp"]] = x0, v0
            coupling = self.coupling_vector(x0, v0)
            resist = self.c0 + self.c1 * v0 + self.c2 * v0 * v0
            y[self.sl["tau"]] = self.mass * w0 + coupling + self.mass * resist
        return y

    # -- derivative evaluation ----------------------------------------------

    def evaluate(self, t, y):
        """Derivative vector plus the per-stage diagnostics (controls, faults)."""
        cfg = self.config
        nc = self.nc
        sl = self.sl
        xh = y[sl["xh"]]
        vh = y[sl["vh"]]
        wh = y[sl["wh"]]
        fh = y[sl["fh"]].reshape(nc, 3)
        if self.measure_from_plant:
            xm = y[sl["xp"]]
            vm = y[sl["vp"]]
        else:
            xm = y[sl["x"]]
            vm = y[sl["v"]]

        x0r, v0r, w0r, u0r = cfg.profile.evaluate(t)
        f_true = self.fault_states(t)
        ef_true = self.upsilon * f_true[:, 0] + self.nu_omega * f_true[:, 2]
        cf_true = ef_true / self.mass
        ef_hat = fh[:, 0] * self.upsilon + fh[:, 2] * self.nu_omega
        cf_hat = ef_hat / self.mass

        e_x = xh - xm
        e_v = vh - vm
        mu1 = -self.k1g * e_x - e_v
        b1v = self.bm1 - 2.0 * self.c2 * vm
        b1vh = self.bm1 - 2.0 * self.c2 * vh
        d1_diff = self.bm1 * (vm - vh) - self.c2 * (vm * vm - vh * vh)
        mu2 = (d1_diff + self.k2g * e_v
               + self.b2 * (vm[self.prev] - vh[self.prev])
               + self.b3 * (vm[self.next] - vh[self.next]))
        mu3 = (b1v * mu2 + self.k3g * e_v + (b1vh - b1v) * (wh + mu2)
               + self.b2 * mu2[self.prev] + self.b3 * mu2[self.next])
        mu4 = self.k4g * e_v[:, None]

        xhdot = vh + mu1
        vhdot = wh + mu2

        u = np.zeros(nc)
        whdot = np.empty(nc)
        if self.zero_control:
            whdot = (b1v * wh + self.b2 * wh[self.prev] + self.b3 * wh[self.next]
                     + cf_hat + mu3)
        else:
            record = self._record_violation(t)
            for ti, (s, e) in enumerate(self.train_slices):
                g = s
                if ti == 0:
                    x_f, v_f, wh_f = x0r, v0r, w0r
                    g_front = u0r
                else:
                    fi = self.tail_idx[ti - 1]
                    x_f, v_f, wh_f = xm[fi], vm[fi], wh[fi]
                    g_front = self._last_whdot[fi] if self.stale_chain else whdot[fi]
                xt = (x_f - xm[g]) - self.d_s
                vt = v_f - vm[g]
                wth = wh_f - wh[g]
                self._pair_index = ti + 1
                u[g] = ctrl.head_control(
                    g_front, b1v[g], self.b3[g], wh[g], wh[g + 1], cf_hat[g],
                    mu3[g], xt, vt, wth, self.hgains, self.rho1, self.rho2,
                    self.vr1, self.vr2, saturate=self.saturate, record=record)
                whdot[g] = (b1v[g] * wh[g] + self.b3[g] * wh[g + 1]
                            + cf_hat[g] + u[g] + mu3[g])
                for g in range(s + 1, e):
                    p = g - 1
                    wh_next = wh[g + 1] if g + 1 < e else None
                    u[g] = ctrl.follower_control(
                        xh[g], vh[g], wh[g], xh[p], vh[p], wh[p], wh_next,
                        xhdot[g], vhdot[g], xhdot[p], vhdot[p], whdot[p],
                        b1v[g], self.b2[g], self.b3[g], cf_hat[g], mu3[g],
                        self.fgains, self.d_p)
                    whdot[g] = (b1v[g] * wh[g] + self.b2[g] * wh[p] + cf_hat[g]
                                + u[g] + mu3[g])
                    if wh_next is not None:
                        whdot[g] += self.b3[g] * wh_next
            if self.stale_chain:
                self._last_whdot = whdot.copy()

        dy = np.empty(self.n_states)
        if self.has_composite:
            w = y[sl["w"]]
            dy[sl["x"]] = y[sl["v"]]
            dy[sl["v"]] = w
            dy[sl["w"]] = (b1v * w + self.b2 * w[self.prev] + self.b3 * w[self.next]
                           + cf_true + u + self.delta)
        dy[sl["xh"]] = xhdot
        dy[sl["vh"]] = vhdot
        dy[sl["wh"]] = whdot
        dfh = np.empty((nc, 3))
        dfh[:, 0] = mu4[:, 0]
        dfh[:, 1] = self.omega * fh[:, 2] + mu4[:, 1]
        dfh[:, 2] = -self.omega * fh[:, 1] + mu4[:, 2]
        dy[sl["fh"]] = dfh.ravel()
        if self.has_plant:
            xp, vp, tau = y[sl["xp"]], y[sl["vp"]], y[sl["tau"]]
            coupling = self.coupling_vector(xp, vp)
            resist = self.c0 + self.c1 * vp + self.c2 * vp * vp
            b4 = self.stiffness_drift(vp)
            varpi = (self.mass * u + self.rate * coupling
                     + self.mass * self.rate * resist - self.mass * b4
                     + self.mass * self.delta)
            dy[sl["xp"]] = vp
            dy[sl["vp"]] = (tau - coupling - self.mass * resist) / self.mass
            dy[sl["tau"]] = -self.rate * tau + varpi + ef_true
        return dy, (u, ef_true, ef_hat)

    def rhs(self, t, y):
        return self.evaluate(t, y)[0]

    def _record_violation(self, t):
        if self.config.abort_on_violation:
            return None
        events = self.violations

        def record(kind, value, lo, hi):
            events.append({"t": t, "pair": self._pair_index, "quantity": kind,
                           "value": value, "low": lo, "high": hi})
        return record

    # -- sample-time diagnostics ---------------------------------------------

    def sample_row(self, t, y, stage_diag):
        """All recorded quantities at a sample instant."""
        cfg = self.config
        nc = self.nc
        sl = self.sl
        u, ef_true, ef_hat = stage_diag
        xh = y[sl["xh"]]
        vh = y[sl["vh"]]
        wh = y[sl["wh"]]
        if self.measure_from_plant:
            xm, vm = y[sl["xp"]], y[sl["vp"]]
            tau = y[sl["tau"]]
            coupling = self.coupling_vector(xm, vm)
            resist = self.c0 + self.c1 * vm + self.c2 * vm * vm
            wm = (tau - coupling - self.mass * resist) / self.mass
        else:
            xm, vm, wm = y[sl["x"]], y[sl["v"]], y[sl["w"]]
            coupling = self.coupling_vector(xm, vm)
            resist = self.c0 + self.c1 * vm + self.c2 * vm * vm
            tau = self.mass * wm + coupling + self.mass * resist
        x0r, v0r, _, _ = cfg.profile.evaluate(t)
        eps = np.empty(self.n_trains)
        vt = np.empty(self.n_trains)
        front_x, front_v = x0r, v0r
        for ti, (s, _) in enumerate(self.train_slices):
            eps[ti] = front_x - xm[s]
            vt[ti] = front_v - vm[s]
            fi = self.tail_idx[ti]
            front_x, front_v = xm[fi], vm[fi]
        xt = eps - self.d_s
        qt = vt + self.hgains.ell1 * xt
        row = {
            "x": xm, "v": vm, "w": wm, "tau": tau, "u": u,
            "f_eff": ef_true, "f_eff_hat": ef_hat,
            "e_x": xh - xm, "e_v": vh - vm, "e_w": wh - wm,
            "eps": eps, "xtilde": xt, "vtilde": vt, "qtilde": qt,
        }
        if self.has_plant and not self.measure_from_plant:
            row["plant_x"] = y[sl["xp"]]
            row["plant_v"] = y[sl["vp"]]
            row["plant_tau"] = y[sl["tau"]]
        return row


# ---------------------------------------------------------------------------
# record and report
# ---------------------------------------------------------------------------

_CARRIAGE_FIELDS = ("x", "v", "w", "tau", "u", "f_eff", "f_eff_hat", "e_x", "e_v", "e_w")
_PAIR_FIELDS = ("eps", "xtilde", "vtilde", "qtilde")
_CARRIAGE_UNITS = {"x": "m", "v": "mps", "w": "mps2", "tau": "N", "u": "mps3",
                   "f_eff": "Nps", "f_eff_hat": "Nps", "e_x": "m", "e_v": "mps",
                   "e_w": "mps2"}
_PAIR_UNITS = {"eps": "m", "xtilde": "m", "vtilde": "mps", "qtilde": "mps"}
_PLANT_FIELDS = ("plant_x", "plant_v", "plant_tau")
_PLANT_UNITS = {"plant_x": "m", "plant_v": "mps", "plant_tau": "N"}


@dataclass
class SimulationRecord:
    """Sampled time series of one run (fixed stride, monotone time column)."""

    t: np.ndarray
    carriage_labels: tuple            # (i, j) per carriage, chain order
    data: dict                        # field -> (n_samples, nc) or (n_samples, n_trains)
    step: float
    stride: int

    @property
    def n_trains(self):
        return self.data["eps"].shape[1]

    def column_names(self):
        names = ["t_s"]
        for i, j in self.carriage_labels:
            for f in _CARRIAGE_FIELDS:
                names.append(f"{f}_{_CARRIAGE_UNITS[f]}_{i}_{j}")
        for p in range(1, self.n_trains + 1):
            for f in _PAIR_FIELDS:
                names.append(f"{f}_{_PAIR_UNITS[f]}_{p}")
        if "plant_x" in self.data:
            for i, j in self.carriage_labels:
                for f in _PLANT_FIELDS:
                    names.append(f"{f}_{_PLANT_UNITS[f]}_{i}_{j}")
        return names

    def matrix(self):
        """All columns as one float matrix, in ``column_names`` order."""
        cols = [self.t]
        for c in range(len(self.carriage_labels)):
            for f in _CARRIAGE_FIELDS:
                cols.append(self.data[f][:, c])
        for p in range(self.n_trains):
            for f in _PAIR_FIELDS:
                cols.append(self.data[f][:, p])
        if "plant_x" in self.data:
            for c in range(len(self.carriage_labels)):
                for f in _PLANT_FIELDS:
                    cols.append(self.data[f][:, c])
        return np.column_stack(cols)


@dataclass
class SummaryReport:
    """Verdicts and aggregate statistics, all re-derivable from the record."""

    verdicts: dict
    pair_extrema: dict
    tail_stats: dict
    hard_bound_events: list
    saturation_events: list
    observer_settling: dict
    tolerances: dict
    tail_window: float
    qtilde_within_bounds: bool
    config_hash: str = ""
    seed: Optional[int] = None

    @property
    def all_pass(self):
        return bool(self.verdicts["R1"] and self.verdicts["R2"] and self.verdicts["R3"])

    def to_dict(self):
        return {
            "verdicts": dict(self.verdicts, all=self.all_pass),
            "pair_extrema": self.pair_extrema,
            "tail_stats": self.tail_stats,
            "hard_bound_events": self.hard_bound_events,
            "saturation_events": self.saturation_events,
            "observer_settling": self.observer_settling,
            "tolerances": self.tolerances,
            "tail_window_s": self.tail_window,
            "qtilde_within_bounds": self.qtilde_within_bounds,
            "config_hash": self.config_hash,
            "seed": self.seed,
        }


def monitor_requirements(record, constraints, ell1, d_p, monitor,
                         saturation_events=(), seed=None):
    """Evaluate the three control requirements against a finished record.

    Hard bounds are checked at every sample; convergence is judged by mean
    absolute errors over the trailing ``monitor.tail_window`` seconds.  The
    combined-error bounds are reported as a diagnostic alongside.
    """
    t = record.t
    nt = record.n_trains
    rho1, rho2 = constraints.rho1, constraints.rho2
    varrho1, varrho2 = constraints.varrho(ell1)
    xt = record.data["xtilde"]
    vt = record.data["vtilde"]
    qt = record.data["qtilde"]

    events = []
    for p in range(nt):
        for quantity, series, lo, hi in (
                ("xtilde", xt[:, p], -rho2, rho1),
                ("vtilde", vt[:, p], -constraints.sigma2, constraints.sigma1)):
            bad = np.flatnonzero((series <= lo) | (series >= hi))
            for k in bad[:100]:
                events.append({"t": float(t[k]), "pair": p + 1, "quantity": quantity,
                               "value": float(series[k]), "low": lo, "high": hi})
    r2_hard = not any(e["quantity"] == "xtilde" for e in events)
    r3_hard = not any(e["quantity"] == "vtilde" for e in events)
    qtilde_ok = bool(np.all((qt > -varrho2) & (qt < varrho1)))

    tail = t >= (t[-1] - monitor.tail_window)
    pair_extrema = {}
    xt_tail, vt_tail = {}, {}
    for p in range(nt):
        pair_extrema[p + 1] = {
            "xtilde_min": float(xt[:, p].min()), "xtilde_max": float(xt[:, p].max()),
            "vtilde_min": float(vt[:, p].min()), "vtilde_max": float(vt[:, p].max()),
            "qtilde_min": float(qt[:, p].min()), "qtilde_max": float(qt[:, p].max()),
        }
        xt_tail[p + 1] = float(np.mean(np.abs(xt[tail, p])))
        vt_tail[p + 1] = float(np.mean(np.abs(vt[tail, p])))

    # intra-train gaps between adjacent carriages
    x = record.data["x"]
    v = record.data["v"]
    labels = record.carriage_labels
    gap_tail, vgap_tail = {}, {}
    for c in range(1, len(labels)):
        i, j = labels[c]
        if labels[c - 1][0] != i:
            continue
        gap = x[:, c - 1] - x[:, c]
        vgap = v[:, c - 1] - v[:, c]
        gap_tail[f"{i}_{j}"] = float(np.mean(np.abs(gap[tail] - d_p)))
        vgap_tail[f"{i}_{j}"] = float(np.mean(np.abs(vgap[tail])))

    r1 = (max(gap_tail.values()) < monitor.tol_gap_mean
          and max(vgap_tail.values()) < monitor.tol_vgap_mean)
    r2 = r2_hard and max(xt_tail.values()) < monitor.tol_xtilde_mean
    r3 = r3_hard and max(vt_tail.values()) < monitor.tol_vtilde_mean

    e_w = record.data["e_w"]
    ef_err = record.data["f_eff"] - record.data["f_eff_hat"]
    settling = {}
    for c, (i, j) in enumerate(labels):
        settling[f"{i}_{j}"] = {
            "tail_max_e_w": float(np.max(np.abs(e_w[tail, c]))),
            "tail_max_f_eff_err": float(np.max(np.abs(ef_err[tail, c]))),
        }

    return SummaryReport(
        verdicts={"R1": bool(r1), "R2": bool(r2), "R3": bool(r3),
                  "R2_hard": bool(r2_hard), "R3_hard": bool(r3_hard)},
        pair_extrema=pair_extrema,
        tail_stats={"xtilde_mean_abs": xt_tail, "vtilde_mean_abs": vt_tail,
                    "gap_err_mean_abs": gap_tail, "vgap_mean_abs": vgap_tail},
        hard_bound_events=events,
        saturation_events=list(saturation_events),
        observer_settling=settling,
        tolerances={"xtilde_mean": monitor.tol_xtilde_mean,
                    "vtilde_mean": monitor.tol_vtilde_mean,
                    "gap_mean": monitor.tol_gap_mean,
                    "vgap_mean": monitor.tol_vgap_mean},
        tail_window=monitor.tail_window,
        qtilde_within_bounds=qtilde_ok,
        seed=seed,
    )


def fault_interval_errors(record, config, min_length=100.0, last=10.0):
    """Observer accuracy over the tail of every long fault-transition-free interval.

    For each carriage, splits [0, T] at its fault-window edges and, for every
    maximal interval at least ``min_length`` long, reports the maxima of
    |e_w| and |E.f - E.f_hat| over the final ``last`` seconds (excluding the
    switching instant itself).
    """
    t = record.t
    horizon = float(t[-1])
    e_w = record.data["e_w"]
    ef_err = np.abs(record.data["f_eff"] - record.data["f_eff_hat"])
    ef = np.abs(record.data["f_eff"])
    out = []
    for c, (i, j) in enumerate(record.carriage_labels):
        model = snap_windows(config.carriages[c].fault, config.step)
        edges = [0.0] + transition_times(model, horizon) + [horizon]
        for lo, hi in zip(edges[:-1], edges[1:]):
            if hi - lo < min_length:
                continue
            if hi < horizon:
                mask = (t >= hi - last) & (t < hi)  # stop short of the switch
            else:
                mask = t >= hi - last
            out.append({
                "carriage": (i, j), "interval": (lo, hi),
                "max_e_w": float(np.max(np.abs(e_w[mask, c]))),
                "max_f_eff_err": float(np.max(ef_err[mask, c])),
                "max_f_eff": float(np.max(ef[mask, c])),
            })
    return out


# ---------------------------------------------------------------------------
# scenario driver
# ---------------------------------------------------------------------------

def run_scenario(config, _stale_chain=False):
    """Integrate one scenario and evaluate the requirements.

    Validates the configuration, integrates the closed loop over the full
    horizon with the per-step disturbance held across stages, records every
    ``record_stride``-th step plus the final state, and returns the record
    together with the monitored summary.
    """
    violations = validate_config(config)
    if violations:
        raise ConfigurationError(
            "infeasible scenario:\n" + "\n".join(str(v) for v in violations),
            violations=violations)

    engine = _ClosedLoop(config, stale_chain=_stale_chain)
    h = config.step
    n_steps = int(round(config.duration / h))
    stride = config.record_stride
    sample_steps = list(range(0, n_steps, stride))
    if not sample_steps or sample_steps[-1] != n_steps:
        sample_steps.append(n_steps)
    n_samples = len(sample_steps)

    nc = engine.nc
    nt = engine.n_trains
    data = {f: np.empty((n_samples, nc)) for f in _CARRIAGE_FIELDS}
    for f in _PAIR_FIELDS:
        data[f] = np.empty((n_samples, nt))
    if engine.has_plant and not engine.measure_from_plant:
        for f in _PLANT_FIELDS:
            data[f] = np.empty((n_samples, nc))
    t_out = np.empty(n_samples)

    rng = np.random.default_rng(config.noise.seed)
    noise_on = config.noise.enabled and config.noise.variance > 0.0
    y = engine.initial_state()
    sample_pos = 0
    for step_i in range(n_steps + 1):
        t = step_i * h
        if noise_on:
            engine.delta = inject_disturbance(rng, config.noise.variance, nc)
        take_sample = sample_pos < n_samples and sample_steps[sample_pos] == step_i
        if take_sample or step_i < n_steps:
            k1, diag = engine.evaluate(t, y)
        if take_sample:
            row = engine.sample_row(t, y, diag)
            t_out[sample_pos] = t
            for field_name, values in row.items():
                data[field_name][sample_pos] = values
            sample_pos += 1
        if step_i == n_steps:
            break
        try:
            y = rk4_step(engine.rhs, y, t, h, k1=k1)
        except IntegrationFault as fault:
            raise IntegrationFault(fault.time, labels=fault.labels,
                                   message=f"integration fault at t={t:.6g}s") from fault

    record = SimulationRecord(
        t=t_out,
        carriage_labels=tuple(config.topology.carriage_ids()),
        data=data, step=h, stride=stride)
    report = monitor_requirements(
        record, config.constraints, config.head_gains.ell1, config.coupler.spacing,
        config.monitor, saturation_events=engine.violations,
        seed=config.noise.seed if noise_on else None)
    return record, report
