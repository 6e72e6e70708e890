"""Per-carriage state-fault observer.

Position and velocity are measured; acceleration and the fault state are
not.  The observer copies the composite dynamics plus an internal model of
the fault generator, driven by four correction inputs built from the
measured channels.  In the coordinates (e_v, zeta, e_f) with
zeta = e_w + mu2 - k2*e_v the estimation-error dynamics are exactly linear
and autonomous, governed by the augmented pair assembled below; placing its
closed-loop eigenvalues (plus the decoupled position-error gain k1) makes
the estimation converge regardless of the control input.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import PlacementError
from .faults import exosystem_matrix
from .model import b1_coefficient, coefficient_d


@dataclass(frozen=True)
class ObserverGains:
    """Position-error gain ``k1`` and the stacked gain ``k`` = (k2, k3, k4[0:3])."""

    k1: float
    k: tuple

    def __post_init__(self):
        if self.k1 <= 0:
            raise PlacementError("k1 must be positive")
        if len(self.k) != 5:
            raise PlacementError("stacked gain must have 5 entries")

    @property
    def k2(self):
        return self.k[0]

    @property
    def k3(self):
        return self.k[1]

    @property
    def k4(self):
        return np.asarray(self.k[2:5])

    @property
    def column(self):
        return np.asarray(self.k, dtype=float).reshape(5, 1)


@dataclass
class ObserverState:
    """Estimates of one carriage's position, velocity, acceleration and fault state."""

    x_hat: float
    v_hat: float
    w_hat: float
    f_hat: np.ndarray


@dataclass
class AuxiliaryInputs:
    """Observer correction terms for the four estimate channels."""

    mu1: float
    mu2: float
    mu3: float
    mu4: np.ndarray


# ---------------------------------------------------------------------------
# gain synthesis
# ---------------------------------------------------------------------------

def build_augmented_pair(c_row, s_matrix):
    """Augmented (A, C) of the error dynamics in (e_v, zeta, e_f) coordinates.

    A = [[0, 1, 0], [0, 0, C_row], [0, 0, S]] with the 1x3 fault-to-jerk row
    ``c_row`` and the 3x3 generator ``s_matrix``; C selects the velocity
    error, the only corrected channel.
    """
    c_row = np.asarray(c_row, dtype=float).reshape(3)
    s_matrix = np.asarray(s_matrix, dtype=float).reshape(3, 3)
    a = np.zeros((5, 5))
    a[0, 1] = 1.0
    a[1, 2:] = c_row
    a[2:, 2:] = s_matrix
    c = np.zeros((1, 5))
    c[0, 0] = 1.0
    return a, c


def observability_matrix(a, c):
    rows = [np.asarray(c, dtype=float).reshape(1, -1)]
    for _ in range(a.shape[0] - 1):
        rows.append(rows[-1] @ a)
    return np.vstack(rows)


def check_observability(a, c, rel_tol=1e-8):
    """Full numerical rank of the observability matrix (SVD threshold ``rel_tol``)."""
    sv = np.linalg.svd(observability_matrix(a, c), compute_uv=False)
    if sv[0] == 0.0:
        return False
    return sv[-1] > rel_tol * sv[0]


def characteristic_coefficients(matrix):
    """Monic characteristic polynomial coefficients, highest power first."""
    return np.poly(np.asarray(matrix, dtype=float))


def synthesize_gains(a, c, desired_eigenvalues, k1=3.0):
    """Stacked observer gain placing eig(A + K C) at ``desired_eigenvalues``.

    Works through the transposed (controllable) pair so a fully repeated
    spectrum is handled exactly: the gain comes from evaluating the desired
    characteristic polynomial on the transposed matrix (Ackermann), and the
    result is verified by comparing characteristic-polynomial coefficients,
    which stay well conditioned where individual eigenvalues of a defective
    matrix do not.

    Raises
    ------
    PlacementError
        If the pair is unobservable, a desired eigenvalue has nonnegative
        real part, or the verification fails.
    """
    a = np.asarray(a, dtype=float)
    c = np.asarray(c, dtype=float).reshape(1, -1)
    n = a.shape[0]
    desired = [complex(lam) for lam in desired_eigenvalues]
    if len(desired) != n:
        raise PlacementError(f"need {n} desired eigenvalues, got {len(desired)}")
    if any(lam.real >= 0 for lam in desired):
        raise PlacementError("desired eigenvalues must have negative real parts")
    if k1 <= 0:
        raise PlacementError("k1 must be positive")
    if not check_observability(a, c):
        raise PlacementError("augmented pair is unobservable; cannot place eigenvalues")

    a_t = a.T
    b_t = c.T
    ctrb = np.hstack([np.linalg.matrix_power(a_t, i) @ b_t for i in range(n)])
    poly_at = np.eye(n, dtype=complex)
    for lam in desired:
        poly_at = poly_at @ (a_t - lam * np.eye(n))
    if np.abs(poly_at.imag).max() > 1e-9 * max(1.0, np.abs(poly_at.real).max()):
        raise PlacementError("desired eigenvalues are not closed under conjugation")
    last_row = np.zeros(n)
    last_row[-1] = 1.0
    try:
        row = np.linalg.solve(ctrb.T, last_row)
    except np.linalg.LinAlgError as exc:
        raise PlacementError("controllability matrix is singular") from exc
    k = -(row @ poly_at.real)

    gains = ObserverGains(k1=float(k1), k=tuple(float(v) for v in k))
    _verify_placement(a, c, gains, desired)
    return gains


def _verify_placement(a, c, gains, desired, rel_tol=1e-6):
    closed = a + gains.column @ c
    got = characteristic_coefficients(closed)
    want = np.real(np.poly(np.asarray(desired, dtype=complex)))
    scale = np.maximum(np.abs(want), 1.0)
    err = np.abs(got - want) / scale
    if err.max() > rel_tol:
        raise PlacementError(
            f"placement verification failed: coefficient error {err.max():.3e}")


def closed_loop_matrix(a, c, gains):
    """A + K C for the synthesized stacked gain."""
    return np.asarray(a, dtype=float) + gains.column @ np.asarray(c, dtype=float).reshape(1, -1)


# ---------------------------------------------------------------------------
# correction inputs and observer dynamics
# ---------------------------------------------------------------------------

def auxiliary_mu2(j, m_i, v_meas, v_hat, v_prev, vhat_prev, v_next, vhat_next,
                  gains, carriage, coupler, davis):
    """Velocity-channel correction from measured/estimated velocity differences.

    Neighbour arguments may be ``None`` at the head/tail, where the
    corresponding injection potential is structurally zero.
    """
    d_true = coefficient_d(j, v_meas, m_i, carriage, coupler, davis)
    d_hat = coefficient_d(j, v_hat, m_i, carriage, coupler, davis)
    mu2 = d_true.d1 - d_hat.d1 + gains.k2 * (v_hat - v_meas)
    if j > 1:
        mu2 += (coefficient_d(j, v_prev, m_i, carriage, coupler, davis).d2
                - coefficient_d(j, vhat_prev, m_i, carriage, coupler, davis).d2)
    if j < m_i:
        mu2 += (coefficient_d(j, v_next, m_i, carriage, coupler, davis).d3
                - coefficient_d(j, vhat_next, m_i, carriage, coupler, davis).d3)
    return mu2


def auxiliary_inputs(j, m_i, x_meas, v_meas, est, v_prev, vhat_prev, v_next, vhat_next,
                     mu2_prev, mu2_next, gains, carriage, coupler, davis):
    """All four correction terms for carriage ``j``.

    The acceleration-channel term needs the neighbours' velocity-channel
    corrections, so ``mu2_prev``/``mu2_next`` must already be computed for
    this step (two-phase step contract); pass ``None`` at the boundaries.
    """
    e_x = est.x_hat - x_meas
    e_v = est.v_hat - v_meas
    mu1 = -gains.k1 * e_x + (v_meas - est.v_hat)
    mu2 = auxiliary_mu2(j, m_i, v_meas, est.v_hat, v_prev, vhat_prev,
                        v_next, vhat_next, gains, carriage, coupler, davis)
    b1_true = b1_coefficient(v_meas, j, m_i, carriage, coupler, davis)
    b1_hat = b1_coefficient(est.v_hat, j, m_i, carriage, coupler, davis)
    mu3 = b1_true * mu2 + gains.k3 * e_v + (b1_hat - b1_true) * (est.w_hat + mu2)
    b_over_m = coupler.damping / carriage.mass
    if j > 1:
        mu3 += b_over_m * mu2_prev
    if j < m_i:
        mu3 += b_over_m * mu2_next
    mu4 = gains.k4 * e_v
    return AuxiliaryInputs(mu1=mu1, mu2=mu2, mu3=mu3, mu4=mu4)


def observer_rhs(est, aux, u, what_prev, what_next, v_meas, j, m_i,
                 carriage, coupler, davis):
    """Time derivative of the observer state of carriage ``j``.

    Mirrors the composite dynamics on the estimates (the coefficient of the
    own-acceleration term is evaluated at the measured velocity) plus the
    correction inputs; neighbour estimated accelerations may be ``None`` at
    the boundaries.
    """
    b1 = b1_coefficient(v_meas, j, m_i, carriage, coupler, davis)
    b_over_m = coupler.damping / carriage.mass
    dw = b1 * est.w_hat + float(np.dot(carriage.fault_accel_row, est.f_hat)) + u + aux.mu3
    if j > 1:
        dw += b_over_m * what_prev
    if j < m_i:
        dw += b_over_m * what_next
    df = exosystem_matrix(carriage.fault.omega) @ est.f_hat + aux.mu4
    return ObserverState(x_hat=est.v_hat + aux.mu1,
                         v_hat=est.w_hat + aux.mu2,
                         w_hat=dw,
                         f_hat=df)


# ---------------------------------------------------------------------------
# linear error-dynamics oracle
# ---------------------------------------------------------------------------

def linear_error_oracle(e_x0, e_v0, e_w0, e_f0, mu2_0, gains, a, c, horizon, step):
    """Estimation-error trajectories predicted by the closed linear error system.

    Integrates e_x' = -k1*e_x and xi' = (A + K C) xi with the classical
    fixed-step fourth-order scheme, where xi = (e_v, zeta, e_f) and
    zeta(0) = e_w(0) + mu2(0) - k2*e_v(0).  Returns arrays for t, e_x, e_v
    and e_f sampled at every step; valid over intervals free of fault-window
    transitions, during which the nonlinear closed loop produces exactly
    these errors.
    """
    m = closed_loop_matrix(a, c, gains)
    n_steps = int(round(horizon / step))
    zeta0 = e_w0 + mu2_0 - gains.k2 * e_v0
    xi = np.concatenate([[e_v0, zeta0], np.asarray(e_f0, dtype=float).reshape(3)])
    e_x = e_x0
    # one-step growth factor of the scalar position-error channel under RK4
    z = -gains.k1 * step
    ex_factor = 1.0 + z + z * z / 2.0 + z ** 3 / 6.0 + z ** 4 / 24.0

    t_out = np.empty(n_steps + 1)
    ex_out = np.empty(n_steps + 1)
    ev_out = np.empty(n_steps + 1)
    ef_out = np.empty((n_steps + 1, 3))
    for i in range(n_steps + 1):
        t_out[i] = i * step
        ex_out[i] = e_x
        ev_out[i] = xi[0]
        ef_out[i] = xi[2:5]
        if i == n_steps:
            break
        k1_ = m @ xi
        k2_ = m @ (xi + 0.5 * step * k1_)
        k3_ = m @ (xi + 0.5 * step * k2_)
        k4_ = m @ (xi + step * k3_)
        xi = xi + (step / 6.0) * (k1_ + 2.0 * k2_ + 2.0 * k3_ + k4_)
        e_x *= ex_factor
    return {"t": t_out, "e_x": ex_out, "e_v": ev_out, "e_f": ef_out}
