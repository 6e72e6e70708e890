"""Distributed fault-tolerant control laws.

Followers (every non-head carriage) run a three-step backstepping design on
the estimated states of themselves and the carriage ahead, cancelling the
estimated coupling, fault and observer-correction terms.  Head carriages
run a barrier-transformed tracking law against the tail of the train in
front (or the virtual lead profile for the first train) that keeps the
inter-train gap and a gap/velocity error combination inside prescribed open
intervals for all time, not just asymptotically.

Partial derivatives of the recursively defined virtual commands and of the
barrier composite are obtained by forward-mode differentiation
(:mod:`platoonsim.autodiff`) rather than hand-expanded formulas.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

from .autodiff import Dual, dual_eval, gradient, log  # noqa: F401  (dual_eval re-exported)
from .errors import BarrierDomainError, ConfigurationError, Violation

_SATURATION_MARGIN = 1e-9  # distance to the boundary used when clamping


# ---------------------------------------------------------------------------
# gain and constraint records
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FollowerGains:
    """Backstepping gains of the non-head carriages (all 1/s scale)."""

    l1: float
    l2: float
    l3: float


@dataclass(frozen=True)
class HeadGains:
    """Gains of the barrier-transformed head-carriage law."""

    ell1: float
    ell2: float
    ell3: float
    ell4: float


@dataclass(frozen=True)
class ConstraintSpec:
    """Inter-train distance and velocity-difference constraints.

    ``gamma1`` is the maximum communication radius, ``gamma2`` the emergency
    braking distance, ``d_s`` the service braking distance the gap should
    settle at; ``sigma1``/``sigma2`` bound the velocity difference.
    """

    gamma1: float
    gamma2: float
    d_s: float
    sigma1: float
    sigma2: float

    def __post_init__(self):
        if not (self.gamma2 < self.d_s < self.gamma1):
            raise ConfigurationError(
                f"need gamma2 < d_s < gamma1, got {self.gamma2}, {self.d_s}, {self.gamma1}")
        if self.sigma1 <= 0 or self.sigma2 <= 0:
            raise ConfigurationError("sigma1 and sigma2 must be positive")

    @property
    def rho1(self):
        """Upper bound on the gap error (m)."""
        return self.gamma1 - self.d_s

    @property
    def rho2(self):
        """Magnitude of the lower bound on the gap error (m)."""
        return self.d_s - self.gamma2

    def varrho(self, ell1):
        """Bounds (varrho1, varrho2) of the combined error q = vtilde + ell1*xtilde."""
        return (-ell1 * self.rho2 + self.sigma1, -ell1 * self.rho1 + self.sigma2)


@dataclass
class TrainPairErrors:
    """Gap and velocity errors between a train's head and the tail ahead of it."""

    epsilon: float   # inter-train distance, m
    x_tilde: float   # epsilon - d_s, m
    v_tilde: float   # velocity difference, m/s
    q_tilde: float   # v_tilde + ell1 * x_tilde, m/s

    @classmethod
    def from_states(cls, x_front_tail, v_front_tail, x_head, v_head, d_s, ell1):
        eps = x_front_tail - x_head
        xt = eps - d_s
        vt = v_front_tail - v_head
        return cls(epsilon=eps, x_tilde=xt, v_tilde=vt, q_tilde=vt + ell1 * xt)


# ---------------------------------------------------------------------------
# follower backstepping
# ---------------------------------------------------------------------------

def alpha1(xhat, xhat_prev, vhat_prev, gains, d_p):
    """Virtual velocity command for a follower (affine in its arguments)."""
    z1 = xhat - xhat_prev + d_p
    return vhat_prev - (gains.l1 + 1.0) * z1


def alpha2(xhat, xhat_prev, vhat, vhat_prev, what_prev, gains, d_p):
    """Virtual acceleration command; evaluates on floats or duals.

    Combines damping on the velocity-command error with the feedforward of
    the command's own partial derivatives and the quadratic compensation
    terms that the stability argument pairs with each of them.
    """
    p_x = -(gains.l1 + 1.0)   # d(alpha1)/d(xhat)
    p_xp = gains.l1 + 1.0     # d(alpha1)/d(xhat_prev)
    p_vp = 1.0                # d(alpha1)/d(vhat_prev)
    z1 = xhat - xhat_prev + d_p
    z2 = vhat - (vhat_prev - (gains.l1 + 1.0) * z1)
    return (-gains.l2 * z2 - z1 - 0.5 * z2
            + p_x * vhat - 0.5 * p_x * p_x * z2
            + p_xp * vhat_prev - 0.5 * p_xp * p_xp * z2
            + p_vp * what_prev - 0.5 * p_vp * p_vp * z2)


@functools.lru_cache(maxsize=None)
def alpha2_partials(gains, d_p):
    """Gradient of alpha2 w.r.t. its five state arguments.

    alpha2 is affine, so the gradient is constant; it is still produced by a
    forward-mode sweep (at the origin) and cached per gain set.
    """
    _, grad = gradient(
        lambda a, b, c, d, e: alpha2(a, b, c, d, e, gains, d_p),
        (0.0, 0.0, 0.0, 0.0, 0.0))
    return grad


def z_errors(xhat, vhat, what, xhat_prev, vhat_prev, what_prev, gains, d_p):
    """Backstepping errors (z1, z2, z3) of a follower."""
    z1 = xhat - xhat_prev + d_p
    a1 = alpha1(xhat, xhat_prev, vhat_prev, gains, d_p)
    z2 = vhat - a1
    a2 = alpha2(xhat, xhat_prev, vhat, vhat_prev, what_prev, gains, d_p)
    z3 = what - a2
    return z1, z2, z3


def alpha3(xhat, vhat, what, xhat_prev, vhat_prev, what_prev,
           xhdot, vhdot, xhdot_prev, vhdot_prev, whdot_prev, gains, d_p):
    """Virtual jerk command for a follower.

    The five ``*dot`` arguments are the observer-state derivatives of this
    carriage and the one ahead (so the command is implementable from
    communicated data; the predecessor's derivative already contains its
    control input).
    """
    z1, z2, z3 = z_errors(xhat, vhat, what, xhat_prev, vhat_prev, what_prev, gains, d_p)
    p = alpha2_partials(gains, d_p)
    return (-gains.l3 * z3 - z2
            + p[0] * xhdot + p[1] * xhdot_prev
            + p[2] * vhdot + p[3] * vhdot_prev
            + p[4] * whdot_prev)


def follower_control(xhat, vhat, what, xhat_prev, vhat_prev, what_prev, what_next,
                     xhdot, vhdot, xhdot_prev, vhdot_prev, whdot_prev,
                     b1, b2, b3, cf_hat, mu3, gains, d_p):
    """Control input of a non-head carriage.

    Cancels the estimated acceleration coupling (own, preceding and, unless
    this is the tail, following carriage), the estimated fault jerk and the
    observer correction, then applies the backstepping command.
    ``what_next`` may be ``None`` at the tail where ``b3`` is structurally
    zero.
    """
    a3 = alpha3(xhat, vhat, what, xhat_prev, vhat_prev, what_prev,
                xhdot, vhdot, xhdot_prev, vhdot_prev, whdot_prev, gains, d_p)
    coupling = b1 * what + b2 * what_prev + cf_hat + mu3
    if what_next is not None:
        coupling += b3 * what_next
    return -coupling + a3


# ---------------------------------------------------------------------------
# barrier transforms and head-carriage law
# ---------------------------------------------------------------------------

def _clamp_to_domain(value, upper, lower, saturate, record=None):
    if -lower < value < upper:
        return value
    if not saturate:
        raise BarrierDomainError(value, -lower, upper)
    if record is not None:
        record(value, -lower, upper)
    if value >= upper:
        return upper - _SATURATION_MARGIN
    return -lower + _SATURATION_MARGIN


def _barrier(arg, upper, lower):
    # arg may be a float or a Dual already inside the open interval
    phi = log((upper * lower + upper * arg) / (upper * lower - lower * arg))
    big_phi = 1.0 / (lower + arg) + 1.0 / (upper - arg)
    return phi, big_phi


def barrier_phi(x_tilde, rho1, rho2, saturate=False):
    """Logarithmic gap-error transform and its derivative on (-rho2, rho1).

    Diverges to +/- infinity at the interval ends; the derivative uses the
    partial-fraction form, which stays accurate near the boundaries.
    Raises :class:`BarrierDomainError` outside the open interval unless
    ``saturate`` pulls the argument back to just inside the boundary.
    """
    x = _clamp_to_domain(x_tilde, rho1, rho2, saturate)
    return _barrier(x, rho1, rho2)


def barrier_psi(q_tilde, varrho1, varrho2, saturate=False):
    """Same transform for the combined error on (-varrho2, varrho1)."""
    q = _clamp_to_domain(q_tilde, varrho1, varrho2, saturate)
    return _barrier(q, varrho1, varrho2)


def beta1(x_tilde, v_tilde, gains, rho1, rho2, varrho1, varrho2):
    """Barrier-weighted stabilizing function; evaluates on floats or duals."""
    q_tilde = v_tilde + gains.ell1 * x_tilde
    phi, big_phi = _barrier(x_tilde, rho1, rho2)
    psi, big_psi = _barrier(q_tilde, varrho1, varrho2)
    return -phi * big_phi - gains.ell2 * q_tilde - gains.ell3 * psi * big_psi


def beta_functions(x_tilde, v_tilde, what_tilde, gains, rho1, rho2,
                   varrho1, varrho2, saturate=False, record=None):
    """beta1, beta2 and the partials of beta1 w.r.t. the gap/velocity errors.

    The combined error depends on both arguments, so both partials are
    produced in a single forward-mode sweep.  When ``saturate`` is set,
    out-of-domain arguments are pulled back to just inside the boundary
    (reported through ``record``) so integration stays defined.
    """
    rec_x = (lambda v, lo, hi: record("xtilde", v, lo, hi)) if record else None
    rec_q = (lambda v, lo, hi: record("qtilde", v, lo, hi)) if record else None
    xt = _clamp_to_domain(x_tilde, rho1, rho2, saturate, rec_x)
    qt = v_tilde + gains.ell1 * xt
    qt_eff = _clamp_to_domain(qt, varrho1, varrho2, saturate, rec_q)
    vt = v_tilde + (qt_eff - qt)  # shift so the combined error lands inside
    val, grad = gradient(
        lambda a, b: beta1(a, b, gains, rho1, rho2, varrho1, varrho2), (xt, vt))
    b2 = what_tilde + gains.ell1 * v_tilde - val
    return val, b2, grad[0], grad[1]


def head_control(g_front, b1, b3, what, what_next, cf_hat, mu3,
                 x_tilde, v_tilde, what_tilde, gains, rho1, rho2,
                 varrho1, varrho2, saturate=False, record=None):
    """Control input of a head carriage.

    ``g_front`` is the estimated-acceleration derivative of the tail ahead
    (the virtual lead's jerk for the first train); ``what_tilde`` the
    estimated acceleration difference across the gap.  The remaining terms
    cancel this carriage's own estimated coupling/fault/correction and close
    the loop on the barrier-transformed errors.
    """
    bt1, bt2, pbx, pbv = beta_functions(
        x_tilde, v_tilde, what_tilde, gains, rho1, rho2, varrho1, varrho2,
        saturate=saturate, record=record)
    q_tilde = v_tilde + gains.ell1 * x_tilde
    own = b1 * what + cf_hat + mu3
    if what_next is not None:
        own += b3 * what_next
    return (g_front - own
            + gains.ell1 * what_tilde + gains.ell1 ** 2 * bt2
            - pbx * v_tilde - pbv * what_tilde
            + pbv ** 2 * bt2 + q_tilde - gains.ell4 * bt2)


# ---------------------------------------------------------------------------
# feasibility validation
# ---------------------------------------------------------------------------

def validate_parameters(follower, head, constraints):
    """Check every gain inequality; returns the violations (empty list if feasible)."""
    out = []
    for name, value in (("l1 > 0", follower.l1),
                        ("l2 > 0", follower.l2),
                        ("l3 > 0", follower.l3)):
        if not value > 0.0:
            out.append(Violation(name=name, value=value, bound=0.0, subject="follower gains"))
    if not head.ell1 > 0.0:
        out.append(Violation(name="ell1 > 0", value=head.ell1, bound=0.0, subject="head gains"))
    ell1_cap = min(constraints.sigma2 / constraints.rho1,
                   constraints.sigma1 / constraints.rho2)
    if not head.ell1 < ell1_cap:
        out.append(Violation(name="ell1 < min(sigma2/rho1, sigma1/rho2)",
                             value=head.ell1, bound=ell1_cap, subject="head gains"))
    if not head.ell2 > 2.0:
        out.append(Violation(name="ell2 > 2", value=head.ell2, bound=2.0, subject="head gains"))
    ell3_floor = 2.0 + head.ell2 ** 2 / 2.0
    if not head.ell3 > ell3_floor:
        out.append(Violation(name="ell3 > 2 + ell2^2/2", value=head.ell3,
                             bound=ell3_floor, subject="head gains"))
    if not head.ell4 > 0.5:
        out.append(Violation(name="ell4 > 1/2", value=head.ell4, bound=0.5, subject="head gains"))
    varrho1, varrho2 = constraints.varrho(head.ell1)
    if not varrho1 > 0.0:
        out.append(Violation(name="varrho1 > 0", value=varrho1, bound=0.0, subject="constraints"))
    if not varrho2 > 0.0:
        out.append(Violation(name="varrho2 > 0", value=varrho2, bound=0.0, subject="constraints"))
    return out


def validate_initial(pair_errors, constraints, ell1):
    """Check the strict initial-feasibility intervals for every train pair.

    ``pair_errors`` maps each train index (1-based; pair 1 is against the
    virtual lead) to its :class:`TrainPairErrors` at t=0.
    """
    out = []
    rho1, rho2 = constraints.rho1, constraints.rho2
    varrho1, varrho2 = constraints.varrho(ell1)
    for i, err in pair_errors.items():
        subject = f"train pair {i}"
        if not (-rho2 < err.x_tilde < rho1):
            bound = rho1 if err.x_tilde >= rho1 else -rho2
            out.append(Violation(name=f"xtilde_{i}(0) in (-rho2, rho1)",
                                 value=err.x_tilde, bound=bound, subject=subject))
        if not (-varrho2 < err.q_tilde < varrho1):
            bound = varrho1 if err.q_tilde >= varrho1 else -varrho2
            out.append(Violation(name=f"qtilde_{i}(0) in (-varrho2, varrho1)",
                                 value=err.q_tilde, bound=bound, subject=subject))
    return out
