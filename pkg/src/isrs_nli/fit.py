"""Per-channel effective loss/ISRS parameters.

Each channel's launch-normalised power profile is matched, in linear scale
and with unit weights, to the two-exponential first-order profile

    rho(z) = (1 + T) exp(-alpha z) - T exp(-(alpha + alpha_bar) z)

with T = -P_tot * c_r * f / alpha_bar. The fit runs over (alpha, alpha_bar, T)
and c_r is recovered afterwards.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .core import ChannelPlan, FiberProfile, InputError, NumericalError
from .raman import PowerEvolution

# below this |T| the second exponential carries no weight
T_TILDE_FLOOR = 1e-4
# channels closer than this to the reference frequency cannot carry a slope
CENTER_THRESHOLD = 1e-6  # THz
MAX_ITER = 200
XTOL = 1e-10
# lower bounds on alpha and alpha_bar relative to the seed alpha; profiles
# convex in z (strongly Raman-amplified channels) have their optimum on the
# alpha_bar bound
FLOOR_REL = 1e-3


@dataclass(frozen=True)
class EffectiveParams:
    alpha: float  # 1/km
    alpha_bar: float  # 1/km
    c_r: float  # 1/(W km THz)
    t_tilde: float
    fit_residual: float = 0.0  # RMS of normalised power mismatch
    # why the single-exponential fallback was used: "", "center", "no-isrs"
    # or "degenerate"
    fallback: str = ""

    @classmethod
    def from_slope(cls, alpha, alpha_bar, c_r, f, p_tot, fit_residual=0.0):
        """Build from a Raman slope; T is computed from its definition."""
        t = -p_tot * c_r * f / alpha_bar
        return cls(float(alpha), float(alpha_bar), float(c_r), float(t), fit_residual)


class FitError(NumericalError):
    def __init__(self, msg, params=None, residual=None, channel=None):
        super().__init__(msg)
        self.params = params
        self.residual = residual
        self.channel = channel


def eval_first_order_profile(params: EffectiveParams, z):
    """Normalised first-order power profile; exactly 1 at z = 0."""
    return _model(params.alpha, params.alpha_bar, params.t_tilde, np.asarray(z, dtype=float))


def _model(alpha, alpha_bar, t, z):
    return np.exp(-alpha * z) * (1.0 - t * np.expm1(-alpha_bar * z))


# The optimiser works on (alpha, alpha_bar, s) with s = T * alpha_bar, the
# initial slope of the Raman-induced excess. The profile is smooth in s as
# alpha_bar -> 0, whereas in (alpha_bar, T) that limit is a curved valley with
# T -> inf.

def _q(alpha_bar, z):
    """(1 - exp(-alpha_bar z)) / alpha_bar"""
    return -np.expm1(-alpha_bar * z) / alpha_bar


def _q_derivs(alpha_bar, z):
    """First and second derivative of q in alpha_bar; series for small
    alpha_bar z where the closed forms cancel."""
    x = alpha_bar * z
    small = x < 1e-2
    xs = np.where(small, 1.0, x)
    e = np.exp(-xs)
    h1 = np.where(small, -0.5 + x / 3.0 - x**2 / 8.0 + x**3 / 30.0,
                  (xs * e + np.expm1(-xs)) / xs**2)
    h2 = np.where(small, 1.0 / 3.0 - x / 4.0 + x**2 / 10.0 - x**3 / 36.0,
                  (2.0 - e * (xs**2 + 2.0 * xs + 2.0)) / xs**3)
    return z**2 * h1, z**3 * h2


def _model_s(alpha, alpha_bar, s, z):
    return np.exp(-alpha * z) * (1.0 + s * _q(alpha_bar, z))


def _derivatives(alpha, alpha_bar, s, z, r):
    """Jacobian and the residual-weighted second-derivative matrix."""
    e = np.exp(-alpha * z)
    q = _q(alpha_bar, z)
    q1, q2 = _q_derivs(alpha_bar, z)
    m = e * (1.0 + s * q)
    J = np.column_stack((-z * m, e * s * q1, e * q))
    S = np.empty((3, 3))
    S[0, 0] = r @ (z * z * m)
    S[0, 1] = S[1, 0] = -(r @ (z * e * s * q1))
    S[0, 2] = S[2, 0] = -(r @ (z * e * q))
    S[1, 1] = r @ (e * s * q2)
    S[1, 2] = S[2, 1] = r @ (e * q1)
    S[2, 2] = 0.0
    return J, S


def _levenberg_marquardt(theta, z, y, floor, max_iter=MAX_ITER, xtol=XTOL):
    """Levenberg-damped Newton iteration on (alpha, alpha_bar, s) with alpha
    and alpha_bar projected onto [floor, inf).

    The Gauss-Newton matrix is augmented with the residual curvature term;
    without it convergence is only linear on the large-residual profiles of
    strongly coupled channels. Only cost-decreasing steps are taken.

    Returns (theta, cost, converged).
    """
    lo = np.array([floor, floor, -np.inf])
    theta = np.maximum(np.asarray(theta, dtype=float), lo)
    r = _model_s(*theta, z) - y
    cost = float(r @ r)
    lam = 1e-3
    for _ in range(max_iter):
        J, S = _derivatives(*theta, z, r)
        JTJ = J.T @ J
        H = JTJ + S
        g = J.T @ r
        diag = np.diag(JTJ).copy()
        diag = np.maximum(diag, 1e-12 * max(diag.max(), 1e-300))
        # freeze parameters sitting on their bound with descent pointing into it
        free = ~((theta <= lo) & (g > 0))
        idx = np.flatnonzero(free)
        while True:
            A = H[np.ix_(idx, idx)] + lam * np.diag(diag[idx])
            step = np.zeros(3)
            try:
                c = np.linalg.cholesky(A)
                step[idx] = -np.linalg.solve(c.T, np.linalg.solve(c, g[idx]))
                trial = np.maximum(theta + step, lo)
                r_new = _model_s(*trial, z) - y
                cost_new = float(r_new @ r_new)
                if np.isfinite(cost_new) and cost_new <= cost:
                    break
            except np.linalg.LinAlgError:
                pass
            lam *= 4.0
            if lam > 1e30:
                # no descent direction left: numerically stationary
                return theta, cost, True
        step = trial - theta
        theta, r, cost = trial, r_new, cost_new
        lam = max(lam / 3.0, 1e-15)
        if np.linalg.norm(step) <= xtol * (np.linalg.norm(theta) + xtol) or cost == 0.0:
            return theta, cost, True
    return theta, cost, False


def _single_exponential(alpha, z, y, iters=50):
    """Least-squares alpha for y ~ exp(-alpha z) via Gauss-Newton."""
    for _ in range(iters):
        m = np.exp(-alpha * z)
        J = -z * m
        step = -float(J @ (m - y)) / float(J @ J)
        alpha += step
        if abs(step) <= XTOL * abs(alpha):
            break
    return alpha


def _rms(params: EffectiveParams, z, y) -> float:
    r = eval_first_order_profile(params, z) - y
    return float(np.sqrt(np.mean(r * r)))


def seed_params(z, y, alpha_local=None):
    """Starting point: local loss, alpha_bar = alpha, and the end-of-span
    excess over pure loss."""
    L = z[-1]
    alpha = alpha_local if alpha_local is not None else -math.log(y[-1]) / L
    t = y[-1] * math.exp(alpha * L) - 1.0
    return np.array([alpha, alpha, t])


def fit_effective_params(z, profile, f_i: float, p_tot: float,
                         alpha_local: float | None = None) -> EffectiveParams:
    """Fit one channel's normalised profile ``profile`` sampled at ``z`` [km].

    ``alpha_local`` is the attenuation at the channel frequency, used only as
    a seed hint.
    """
    z = np.asarray(z, dtype=float)
    y = np.asarray(profile, dtype=float)
    if z.shape != y.shape or z.ndim != 1:
        raise InputError("z and profile must be equal-length 1-D arrays")
    if z.size < 10:
        raise InputError("need at least 10 profile samples")
    if z[0] != 0.0 or np.any(np.diff(z) <= 0):
        raise InputError("z samples must start at 0 and increase strictly")
    if not np.all(y > 0):
        raise InputError("profile samples must be positive")
    if not p_tot > 0:
        raise InputError("total power must be positive")

    theta0 = seed_params(z, y, alpha_local)
    theta0[2] *= theta0[1]
    floor = FLOOR_REL * abs(theta0[0])
    theta, cost, ok = _levenberg_marquardt(theta0, z, y, floor)
    alpha, alpha_bar, slope = (float(v) for v in theta)
    t = slope / alpha_bar
    if not ok:
        res = math.sqrt(cost / z.size)
        raise FitError(f"no convergence after {MAX_ITER} iterations (rms {res:.3g})",
                       params=EffectiveParams(alpha, alpha_bar, math.nan, t, res),
                       residual=res)

    if abs(f_i) < CENTER_THRESHOLD:
        fallback = "center"
    elif abs(t) < T_TILDE_FLOOR:
        fallback = "no-isrs"
    elif alpha <= floor or 1.0 + t < 0.0:
        # alpha wants to go non-positive, or the profile would turn negative
        # beyond the span: outside the two-exponential model's validity
        fallback = "degenerate"
    else:
        fallback = ""

    if fallback:
        alpha = _single_exponential(alpha if alpha > floor else theta0[0], z, y)
        if not alpha > 0:
            raise FitError(f"unphysical fitted alpha {alpha:.6g} 1/km",
                           params=EffectiveParams(alpha, alpha, 0.0, 0.0))
        params = EffectiveParams(alpha, alpha, 0.0, 0.0, fallback=fallback)
    else:
        c_r = -slope / (p_tot * f_i)
        params = EffectiveParams.from_slope(alpha, alpha_bar, c_r, f_i, p_tot)
    return replace(params, fit_residual=_rms(params, z, y))


def fit_all(evolution: PowerEvolution, plan: ChannelPlan,
            fiber: FiberProfile | None = None) -> list[EffectiveParams]:
    """Fit every channel of a solved span; errors carry the channel index."""
    if evolution.powers.shape[0] != len(plan):
        raise InputError(
            f"evolution has {evolution.powers.shape[0]} channels, plan has {len(plan)}")
    rho = evolution.normalized()
    f = plan.frequencies
    p_tot = plan.total_power
    a_loc = fiber.attenuation_at(plan.absolute_frequencies) if fiber is not None else [None] * len(plan)
    out = []
    for i in range(len(plan)):
        try:
            out.append(fit_effective_params(evolution.z, rho[i], f[i], p_tot, a_loc[i]))
        except (FitError, InputError) as exc:
            raise FitError(f"channel {i}: {exc}", getattr(exc, "params", None),
                           getattr(exc, "residual", None), channel=i) from exc
    return out
