"""Scalar special functions behind the rate formulas.

Both real branches of the Lambert W function, the Chernoff exponent family
``D_gamma(t) = t log(t/gamma) - t + gamma``, binary entropy, and the crossing
point of two scaled ``D_gamma`` curves.

Every function accepts a float or an array-like and returns the same shape
(a plain ``float`` for scalar input).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.special import entr, xlog1py, xlogy

from .errors import ConsistencyError, DomainError

INV_E = math.exp(-1.0)

_BRANCH_SLACK = 1e-14
_SERIES_RADIUS = 1e-10
_MAX_ITER = 50
_LOG_SWITCH = 1e-6  # |x| below this on the lower branch -> log-domain solve
_LARGE_X = 1e100  # x above this on the principal branch -> log-domain solve

# W = sum c_i p^i with p = +/- sqrt(2 (1 + e x)); principal branch takes +p.
_BRANCH_SERIES = (
    -1.0,
    1.0,
    -1.0 / 3.0,
    11.0 / 72.0,
    -43.0 / 540.0,
    769.0 / 17280.0,
    -221.0 / 8505.0,
    680863.0 / 43545600.0,
    -1963.0 / 204120.0,
    226287557.0 / 37623398400.0,
)


class Branch(enum.Enum):
    PRINCIPAL = 0
    LOWER = -1


def _unwrap(arr: np.ndarray, scalar: bool):
    return float(arr[0]) if scalar else arr


def _as_float_array(x) -> tuple[np.ndarray, bool]:
    arr = np.asarray(x, dtype=float)
    return np.atleast_1d(arr).astype(float, copy=True), arr.ndim == 0


def _branch_series(x: np.ndarray, sign: float) -> np.ndarray:
    q = np.sqrt(np.maximum(2.0 * (1.0 + math.e * x), 0.0)) * sign
    w = np.zeros_like(q)
    for coef in reversed(_BRANCH_SERIES):
        w = w * q + coef
    return w


def _halley(x: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Refine ``w e^w = x`` in place with Halley steps."""
    idx = np.arange(x.size)
    eps = np.finfo(float).eps
    for _ in range(_MAX_ITER):
        if idx.size == 0:
            break
        wi, xi = w[idx], x[idx]
        ew = np.exp(wi)
        f = wi * ew - xi
        wp1 = wi + 1.0
        step = f / (ew * wp1 - (wi + 2.0) * f / (2.0 * wp1))
        step = np.where(np.isfinite(step), step, 0.0)
        wi = wi - step
        w[idx] = wi
        done = (np.abs(step) <= 4.0 * eps * (1.0 + np.abs(wi))) | (f == 0.0)
        idx = idx[~done]
    return w


def w0_from_log(log_x) -> np.ndarray:
    """Principal branch W0(x) for large positive x given as ``log(x)``.

    Solves ``w + log(w) = log_x`` by Newton's method, so ``x`` itself never
    has to be representable.  Intended for ``log_x > 1``.
    """
    L = np.atleast_1d(np.asarray(log_x, dtype=float))
    w = np.maximum(L - np.log(np.maximum(L, 1.0)), 0.5)
    for _ in range(_MAX_ITER):
        step = (w + np.log(w) - L) / (1.0 + 1.0 / w)
        w = np.maximum(w - step, 0.5 * w)
        if np.all(np.abs(step) <= 4.0 * np.finfo(float).eps * w):
            break
    return w


def wm1_from_log(log_negx) -> np.ndarray:
    """Lower branch W_{-1}(x) for tiny negative x given as ``log(-x)``.

    Solves ``u - log(u) = -log_negx`` for ``u = -W_{-1}(x) >= 1`` by Newton's
    method.  Intended for ``log_negx < -1``.
    """
    L = np.atleast_1d(np.asarray(log_negx, dtype=float))
    target = -L
    u = target + np.log(np.maximum(target, 1.0))
    u = np.maximum(u, 1.0 + 1e-3)
    for _ in range(_MAX_ITER):
        step = (u - np.log(u) - target) / (1.0 - 1.0 / u)
        u_new = u - step
        u = np.where(u_new > 1.0, u_new, 0.5 * (u + 1.0))
        if np.all(np.abs(step) <= 4.0 * np.finfo(float).eps * u):
            break
    return -u


def _check_lower_bound(x: np.ndarray, what: str) -> np.ndarray:
    if np.any(np.isnan(x)):
        raise DomainError(f"{what}: NaN argument")
    if np.any(x < -INV_E - _BRANCH_SLACK):
        raise DomainError(f"{what}: argument below -1/e")
    return np.maximum(x, -INV_E)


def lambert_w0(x):
    """Principal branch of the Lambert W function, ``W0(x) >= -1``.

    Defined for ``x >= -1/e``; arguments up to ``1e-14`` below the branch
    point are clamped onto it.
    """
    x, scalar = _as_float_array(x)
    x = _check_lower_bound(x, "lambert_w0")
    w = np.empty_like(x)

    near = (1.0 + math.e * x) <= math.e * _SERIES_RADIUS
    huge = x > _LARGE_X
    body = ~(near | huge)

    w[near] = _branch_series(x[near], 1.0)
    if np.any(huge):
        w[huge] = w0_from_log(np.log(x[huge]))
    if np.any(body):
        xb = x[body]
        guess = np.empty_like(xb)
        low = xb < -0.25
        mid = (~low) & (xb <= 3.0)
        high = xb > 3.0
        guess[low] = _branch_series(xb[low], 1.0)
        guess[mid] = np.log1p(xb[mid]) * (1.0 - np.log1p(np.log1p(xb[mid])) / (2.0 + np.log1p(xb[mid])))
        l1 = np.log(xb[high])
        l2 = np.log(l1)
        guess[high] = l1 - l2 + l2 / l1
        w[body] = _halley(xb, guess)
    w[x == 0.0] = 0.0
    return _unwrap(w, scalar)


def lambert_w_m1(x):
    """Lower branch of the Lambert W function, ``W_{-1}(x) <= -1``.

    Defined for ``-1/e <= x < 0``.
    """
    x, scalar = _as_float_array(x)
    x = _check_lower_bound(x, "lambert_w_m1")
    if np.any(x >= 0.0):
        raise DomainError("lambert_w_m1: argument must be negative")
    w = np.empty_like(x)

    near = (1.0 + math.e * x) <= math.e * _SERIES_RADIUS
    tiny = (-x) < _LOG_SWITCH
    body = ~(near | tiny)

    w[near] = _branch_series(x[near], -1.0)
    if np.any(tiny):
        w[tiny] = wm1_from_log(np.log(-x[tiny]))
    if np.any(body):
        xb = x[body]
        guess = np.empty_like(xb)
        low = xb < -0.25
        guess[low] = _branch_series(xb[low], -1.0)
        l1 = np.log(-xb[~low])
        l2 = np.log(-l1)
        guess[~low] = l1 - l2 + l2 / l1
        w[body] = _halley(xb, guess)
    return _unwrap(w, scalar)


def lambert_w(x, branch: Branch = Branch.PRINCIPAL):
    if branch is Branch.PRINCIPAL:
        return lambert_w0(x)
    return lambert_w_m1(x)


def d_gamma(gamma, t):
    """``D_gamma(t) = t log(t/gamma) - t + gamma``, with ``D_gamma(0) = gamma``.

    Non-negative, zero only at ``t = gamma``.  Computed as
    ``t log1p((t - gamma)/gamma) - (t - gamma)`` near the minimum to keep
    relative accuracy there.
    """
    g = np.asarray(gamma, dtype=float)
    tt = np.asarray(t, dtype=float)
    if np.any(~(g > 0)):
        raise DomainError("d_gamma: gamma must be positive")
    if np.any(~(tt >= 0)):
        raise DomainError("d_gamma: t must be non-negative")
    delta = tt - g
    rel = delta / g
    with np.errstate(divide="ignore", invalid="ignore"):
        near = xlog1py(tt, np.where(np.abs(rel) < 0.5, rel, 0.0))
        far = xlogy(tt, tt) - xlogy(tt, g)
    out = np.maximum(np.where(np.abs(rel) < 0.5, near, far) - delta, 0.0)
    return float(out) if out.ndim == 0 else out


def d_gamma_inverse(gamma, y, upper: bool = True):
    """Solve ``D_gamma(t) = y`` on one side of the minimum.

    ``upper=True`` returns the root ``t >= gamma``.  ``upper=False`` returns the
    root in ``[0, gamma]``; when ``y >= gamma`` no such root exists and 0 is
    returned (``D_gamma(0) = gamma`` is the largest value on that side).
    """
    g = np.asarray(gamma, dtype=float)
    yy = np.asarray(y, dtype=float)
    scalar = g.ndim == 0 and yy.ndim == 0
    g, yy = np.broadcast_arrays(np.atleast_1d(g), np.atleast_1d(yy))
    if np.any(~(g > 0)) or np.any(~(yy >= 0)):
        raise DomainError("d_gamma_inverse: need gamma > 0 and y >= 0")
    arg = (yy / g - 1.0) / math.e
    out = np.zeros(g.shape)
    if upper:
        out = g * np.exp(1.0 + lambert_w0(arg))
    else:
        ok = yy < g
        if np.any(ok):
            a = arg[ok]
            # y -> gamma pushes the argument to 0^-; use the log form there
            out[ok] = g[ok] * np.exp(1.0 + lambert_w_m1(np.minimum(a, -1e-300)))
    return float(out[0]) if scalar else out


def binary_entropy_bits(rho):
    """Binary entropy ``-r log2 r - (1-r) log2(1-r)`` in bits."""
    r = np.asarray(rho, dtype=float)
    if np.any(~((r >= 0) & (r <= 1))):
        raise DomainError("binary_entropy_bits: rho must lie in [0, 1]")
    out = (entr(r) + entr(1.0 - r)) / math.log(2.0)
    return float(out) if out.ndim == 0 else out


class SolutionKind(enum.Enum):
    ROOT = "root"
    NO_ROOT = "no_root"


@dataclass(frozen=True)
class IntersectionSolution:
    """Outcome of :func:`intersection_solve`.

    For ``ROOT``, ``t_star`` is the unique zero in ``[gamma1, gamma2]``.
    For ``NO_ROOT``, ``min_value`` is the (positive) minimum of the function
    over that interval, attained at ``gamma1``.
    """

    kind: SolutionKind
    gamma1: float
    gamma2: float
    c: float
    d: float
    t_star: float | None = None
    min_value: float | None = None
    method: str = ""

    @property
    def has_root(self) -> bool:
        return self.kind is SolutionKind.ROOT


_ROOT_ACCEPT = 1e-13
_ROOT_CHECK = 1e-10


def intersection_phi(t, gamma1, gamma2, c, d):
    """``D_{gamma1}(t) - c D_{gamma2}(t) + d``."""
    return d_gamma(gamma1, t) - c * d_gamma(gamma2, t) + d


def _closed_form_candidates(g1: float, g2: float, c: float, d: float) -> list[float]:
    if c == 1.0:
        return [(g2 - g1 - d) / math.log(g2 / g1)]
    inv = 1.0 / (1.0 - c)
    a = (g1 + d - c * g2) / g1 * inv
    log_ratio = math.log(g2 / g1)
    log_scale = inv * math.log(g1) - c * inv * math.log(g2)
    zs: list[float] = []
    if a == 0.0:
        zs.append(0.0)
    else:
        log_abs_x = math.log(abs(a)) - 1.0 + c * inv * log_ratio
        if a > 0.0:  # argument of W is negative: both branches may apply
            if log_abs_x <= -1.0 + 1e-15:
                x = -math.exp(log_abs_x)
                zs.append(lambert_w0(x))
                if log_abs_x < math.log(_LOG_SWITCH):
                    zs.append(float(wm1_from_log(log_abs_x)[0]))
                else:
                    zs.append(lambert_w_m1(x))
        else:
            if log_abs_x > math.log(_LARGE_X):
                zs.append(float(w0_from_log(log_abs_x)[0]))
            else:
                zs.append(lambert_w0(math.exp(log_abs_x)))
    out = []
    for z in zs:
        with np.errstate(over="ignore"):
            out.append(math.exp(min(log_scale + z + 1.0, 700.0)))
        if z != 0.0:
            out.append(-a * g1 / z)
    return out


def intersection_solve(gamma1: float, gamma2: float, c: float, d: float) -> IntersectionSolution:
    """Locate the zero of ``D_{gamma1}(t) - c D_{gamma2}(t) + d`` on ``[gamma1, gamma2]``.

    A zero exists (and is unique) iff ``d <= c D_{gamma2}(gamma1)``.  The root
    is taken from the Lambert-W closed form, with the branch that lands in
    the interval; if that fails verification the root is bracketed instead.
    """
    g1, g2, c, d = float(gamma1), float(gamma2), float(c), float(d)
    if not (g1 > 0 and g2 >= g1 and math.isfinite(g2)):
        raise DomainError("intersection_solve: need 0 < gamma1 <= gamma2")
    if not (c >= 0 and d >= 0 and math.isfinite(c) and math.isfinite(d)):
        raise DomainError("intersection_solve: need c >= 0 and d >= 0")

    gap = c * d_gamma(g2, g1)
    if d > gap:
        return IntersectionSolution(SolutionKind.NO_ROOT, g1, g2, c, d, min_value=d - gap)
    if g1 == g2:
        return IntersectionSolution(SolutionKind.ROOT, g1, g2, c, d, t_star=g1, method="degenerate")

    def phi(t: float) -> float:
        return intersection_phi(t, g1, g2, c, d)

    best, best_val = None, math.inf
    for t in _closed_form_candidates(g1, g2, c, d):
        if not math.isfinite(t):
            continue
        if t < g1 * (1 - 1e-12) or t > g2 * (1 + 1e-12):
            continue
        t = min(max(t, g1), g2)
        val = abs(phi(t))
        if val < best_val:
            best, best_val = t, val

    method = "closed_form"
    if best is None or best_val > _ROOT_ACCEPT:
        method = "bracket"
        lo, hi = phi(g1), phi(g2)
        if lo >= 0.0:
            best = g1
        elif hi <= 0.0:
            best = g2
        else:
            best = brentq(phi, g1, g2, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
        best_val = abs(phi(best))
    if best_val > _ROOT_CHECK:
        raise ConsistencyError(
            f"intersection_solve: residual {best_val:.3e} at t={best} exceeds {_ROOT_CHECK}"
        )
    return IntersectionSolution(SolutionKind.ROOT, g1, g2, c, d, t_star=best, method=method)
