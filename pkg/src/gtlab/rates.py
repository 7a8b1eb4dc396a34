"""Achievable and converse rates (bits/test) and finite-size test budgets.

Rates are functions of the sparsity exponent ``theta`` (with ``k ~ p**theta``),
the noise level ``rho`` and the Bernoulli design parameter ``nu`` (each item
joins each test with probability ``nu/k``).  Budgets return real-valued test
counts; round up with :meth:`TestBudget.n_tests`.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .special import (
    binary_entropy_bits,
    d_gamma,
    d_gamma_inverse,
    lambert_w0,
    lambert_w_m1,
    w0_from_log,
    wm1_from_log,
)

LOG2 = math.log(2.0)
E_LOG2 = math.e * LOG2
HALF_THETA_WINDOW = 1e-9


class RateKind(enum.Enum):
    ACHIEVABLE = "achievable"
    CONVERSE = "converse"


@dataclass(frozen=True)
class ProblemRegime:
    theta: float
    rho: float
    nu: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.theta < 1.0:
            raise DomainError(f"theta must lie in (0, 1), got {self.theta}")
        if not 0.0 <= self.rho < 1.0:
            raise DomainError(f"rho must lie in [0, 1), got {self.rho}")
        if not self.nu > 0.0:
            raise DomainError(f"nu must be positive, got {self.nu}")


@dataclass(frozen=True)
class RatePoint:
    regime: ProblemRegime
    rate_bits_per_test: float
    kind: RateKind
    branch: str
    params: dict = field(default_factory=dict, compare=False)

    def __float__(self) -> float:
        return self.rate_bits_per_test


@dataclass(frozen=True)
class TestBudget:
    """Per-condition test counts; the budget is their maximum times ``1 + eta``."""

    __test__ = False

    components: dict
    eta: float
    params: dict = field(default_factory=dict, compare=False)

    @property
    def n_required(self) -> float:
        return max(self.components.values())

    @property
    def binding(self) -> str:
        return max(self.components, key=self.components.get)

    @property
    def n_total(self) -> float:
        return self.n_required * (1.0 + self.eta)

    def n_tests(self, multiple: float = 1.0) -> int:
        """Integer test count ``ceil(multiple * n_required * (1 + eta))``."""
        return int(math.ceil(multiple * self.n_total - 1e-9))


def _check_rho(rho: float, *, open_low: bool = True, upper: float = 1.0) -> float:
    rho = float(rho)
    low_ok = rho > 0.0 if open_low else rho >= 0.0
    if not (low_ok and rho < upper):
        raise DomainError(f"rho={rho} outside the admissible range")
    return rho


def _check_theta(theta: float) -> float:
    theta = float(theta)
    if not 0.0 < theta < 1.0:
        raise DomainError(f"theta must lie in (0, 1), got {theta}")
    return theta


def _check_converse_rho(rho: float) -> float:
    rho = float(rho)
    if not 0.0 < rho < 0.5:
        raise DomainError(
            f"converse bounds require 0 < rho < 1/2 (got rho={rho}); "
            "the converse theorem is only stated for noise below one half"
        )
    return rho


# --- capacities ------------------------------------------------------------


def capacity_z(rho: float) -> float:
    """Capacity of the Z (or reverse Z) channel in bits per use."""
    rho = float(rho)
    if not 0.0 <= rho <= 1.0:
        raise DomainError("capacity_z: rho must lie in [0, 1]")
    if rho == 0.0:
        return 1.0
    if rho == 1.0:
        return 0.0
    return math.log2(1.0 + (1.0 - rho) * math.exp(rho * math.log(rho) / (1.0 - rho)))


def capacity_bsc(rho: float) -> float:
    return 1.0 - binary_entropy_bits(rho)


# --- noiseless reference curves --------------------------------------------


def noiseless_dd_rate(theta: float) -> float:
    theta = _check_theta(theta)
    return min(1.0, (1.0 - theta) / theta) / E_LOG2


def noiseless_converse(theta: float) -> float:
    """Bernoulli-design converse ``min{1, (1-theta)/(theta e log 2)}``."""
    theta = _check_theta(theta)
    return min(1.0, (1.0 - theta) / (theta * E_LOG2))


# --- reverse Z channel -----------------------------------------------------


def kappa(theta: float, rho: float) -> float:
    """``-W_{-1}(-rho**(theta/(1-theta)) / e)``, i.e. the root ``kappa >= 1`` of
    ``kappa exp(-kappa) = rho**(theta/(1-theta)) / e``."""
    theta = _check_theta(theta)
    rho = _check_rho(rho)
    log_arg = -1.0 + theta / (1.0 - theta) * math.log(rho)
    if log_arg < math.log(1e-6):
        return -float(wm1_from_log(log_arg)[0])
    return -lambert_w_m1(-math.exp(log_arg))


def theta_crit_rz(rho: float) -> float:
    rho = _check_rho(rho)
    return 1.0 + rho * math.log(rho) / (1.0 - rho)


def theta_opt(rho: float) -> float:
    """Largest ``theta`` at which the reverse-Z achievable rate is still flat."""
    rho = _check_rho(rho)
    t = -math.log1p(-rho) + math.log(-math.log(rho)) + math.log(rho) / (1.0 - rho) + 1.0
    return t / (math.log(rho) + t)


def rz_achievable_rate(theta: float, rho: float) -> RatePoint:
    theta = _check_theta(theta)
    rho = _check_rho(rho)
    regime = ProblemRegime(theta, rho, 1.0)
    t_opt, t_crit = theta_opt(rho), theta_crit_rz(rho)
    if theta <= t_opt:
        return RatePoint(regime, (1.0 - rho) / E_LOG2, RateKind.ACHIEVABLE, "small-theta")
    if theta < t_crit:
        kap = kappa(theta, rho)
        rate = -math.log(rho) / (kap * E_LOG2)
        return RatePoint(regime, rate, RateKind.ACHIEVABLE, "middle", {"kappa": kap})
    rate = (1.0 - theta) * (1.0 - rho) / E_LOG2
    return RatePoint(regime, rate, RateKind.ACHIEVABLE, "COMP")


def rz_converse_rate(theta: float, rho: float) -> RatePoint:
    theta = _check_theta(theta)
    rho = _check_converse_rho(rho)
    regime = ProblemRegime(theta, rho, 1.0)
    if theta < theta_crit_rz(rho):
        cap = capacity_z(rho)
        kap = kappa(theta, rho)
        dd_term = -math.log(rho) / (kap * E_LOG2)
        if cap < dd_term:
            return RatePoint(regime, cap, RateKind.CONVERSE, "capacity", {"kappa": kap})
        return RatePoint(regime, dd_term, RateKind.CONVERSE, "middle", {"kappa": kap})
    rate = (1.0 - theta) * (1.0 - rho) / E_LOG2
    return RatePoint(regime, rate, RateKind.CONVERSE, "COMP")


# --- Z channel -------------------------------------------------------------


@dataclass(frozen=True)
class ZParams:
    s: float
    g: float
    lam: float
    alpha_star: float


def _z_s(rho: float, nu: float) -> float:
    return (1.0 - rho) * math.exp(-nu) / rho


def z_alpha_half(rho: float, nu: float = 1.0) -> float:
    """Optimal first-stage threshold fraction at ``theta = 1/2``."""
    rho = _check_rho(rho)
    s = _z_s(rho, nu)
    return rho * s / math.log1p(s)


def z_params(theta: float, rho: float, nu: float = 1.0) -> ZParams:
    """Branch parameters ``(s, g, lambda, alpha*)`` of the Z-channel rate for ``theta != 1/2``.

    With ``r = theta/(2 theta - 1)``, ``g = (1 + r s) / (1 + s)**r`` and
    ``lambda`` solves ``lambda exp(lambda) = -g/e`` on the principal branch for
    ``theta < 1/2`` and on the lower branch for ``theta > 1/2``.  Everything is
    evaluated in the log domain because ``r`` diverges at ``theta = 1/2``.
    """
    theta = _check_theta(theta)
    rho = _check_rho(rho)
    if theta == 0.5:
        raise DomainError("z_params is singular at theta = 1/2; use z_alpha_half")
    if not nu > 0:
        raise DomainError("nu must be positive")
    s = _z_s(rho, nu)
    r = theta / (2.0 * theta - 1.0)
    lin = 1.0 + r * s
    log1ps = math.log1p(s)

    if lin == 0.0:
        lam, g = 0.0, 0.0
    else:
        # log |g/e|; the Lambert argument -g/e has the sign of -lin
        log_abs = math.log(abs(lin)) - r * log1ps - 1.0
        g = math.copysign(math.exp(min(log_abs + 1.0, 700.0)), lin)
        if theta < 0.5:
            if lin > 0.0:
                lam = lambert_w0(-math.exp(log_abs))
            elif log_abs > math.log(1e100):
                lam = float(w0_from_log(log_abs)[0])
            else:
                lam = lambert_w0(math.exp(log_abs))
        else:
            if log_abs < math.log(1e-6):
                lam = float(wm1_from_log(log_abs)[0])
            else:
                lam = lambert_w_m1(-math.exp(min(log_abs, -1.0)))
    if abs(lam) >= 0.5:
        alpha = -rho * lin / lam
    else:
        alpha = rho * math.exp(r * log1ps + lam + 1.0)
    return ZParams(s, g, lam, alpha)


def _z_first_term_half(s: float) -> float:
    L = math.log1p(s)
    return math.log(s / L) / L - 1.0 / L + 1.0 / s


def _z_second_stage(theta: float, rho: float, nu: float) -> float:
    # shared by the achievable and converse curves so that they agree bit for bit
    return (1.0 - theta) * (1.0 - rho) * nu * math.exp(-nu) / (theta * LOG2)


def z_achievable_rate(theta: float, rho: float, nu: float = 1.0) -> RatePoint:
    theta = _check_theta(theta)
    rho = _check_rho(rho)
    regime = ProblemRegime(theta, rho, nu)
    s = _z_s(rho, nu)
    base = (1.0 - rho) * nu * math.exp(-nu) / LOG2
    if abs(theta - 0.5) <= HALF_THETA_WINDOW:
        first = _z_first_term_half(s)
        params = {"s": s, "alpha_star": z_alpha_half(rho, nu)}
        scale = base
    else:
        zp = z_params(theta, rho, nu)
        first = theta / (2.0 * theta - 1.0) * (zp.alpha_star / z_alpha_half(rho, nu) - 1.0)
        params = {"s": s, "g": zp.g, "lambda": zp.lam, "alpha_star": zp.alpha_star}
        scale = _z_second_stage(theta, rho, nu)
    if first < 1.0:
        return RatePoint(regime, scale * first, RateKind.ACHIEVABLE, "first-stage", params)
    return RatePoint(regime, scale, RateKind.ACHIEVABLE, "second-stage", params)


def z_converse_rate(theta: float, rho: float) -> RatePoint:
    theta = _check_theta(theta)
    rho = _check_converse_rho(rho)
    regime = ProblemRegime(theta, rho, 1.0)
    cap = capacity_z(rho)
    dd_term = _z_second_stage(theta, rho, 1.0)
    if cap < dd_term:
        return RatePoint(regime, cap, RateKind.CONVERSE, "capacity")
    return RatePoint(regime, dd_term, RateKind.CONVERSE, "counting")


def z_crossover_s() -> float:
    """Value of ``s`` above which the Z first-stage term exceeds one as ``theta -> 1``.

    Root of ``(1 + s) log(1 + s) = 2 s``.
    """
    from scipy.optimize import brentq

    return brentq(lambda s: (1.0 + s) * math.log1p(s) - 2.0 * s, 1.0, 100.0, xtol=1e-14)


# --- symmetric channel -----------------------------------------------------


def _sym_w(rho, nu):
    return (1.0 - rho) * np.exp(-nu) + rho * (1.0 - np.exp(-nu))


def _sym_feasible(R, theta, rho, nu):
    """Whether every term of the symmetric-noise rate expression can reach ``R``.

    All arguments are broadcastable arrays; ``R`` is measured in nats per
    ``(1-theta)`` and is strictly positive.
    """
    enu = nu * np.exp(-nu)
    w = _sym_w(rho, nu)
    alpha = d_gamma_inverse(rho, R * theta / nu, upper=True)
    beta = d_gamma_inverse(1.0 - rho, R * theta / enu, upper=False)
    ok = (alpha <= w) & (beta >= rho)
    alpha_c = np.minimum(alpha, w)
    beta_c = np.maximum(beta, rho)
    xi_lo = np.maximum(0.0, 1.0 - nu * d_gamma(w, alpha_c) / R)
    xi_hi = np.minimum(theta, enu * d_gamma(rho, beta_c) / R)
    return ok & (xi_lo <= xi_hi), alpha_c, beta_c, xi_lo


def _sym_best_r(theta, rho, nu, iters: int = 64):
    """Largest feasible ``R`` for each (theta, nu) pair, by bisection."""
    theta, nu = np.broadcast_arrays(np.asarray(theta, float), np.asarray(nu, float))
    w = _sym_w(rho, nu)
    enu = nu * np.exp(-nu)
    hi = np.minimum(nu * d_gamma(rho, w), enu * d_gamma(1.0 - rho, np.full_like(nu, rho))) / theta
    lo = np.zeros_like(hi)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        ok = _sym_feasible(np.maximum(mid, 1e-300), theta, rho, nu)[0]
        lo = np.where(ok, mid, lo)
        hi = np.where(ok, hi, mid)
    return lo


_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
NU_MIN, NU_MAX = 0.02, 4.0


def sym_achievable_curve(thetas, rho: float, nu_points: int = 41, golden_iters: int = 40):
    """Optimized symmetric-noise achievable rate over a grid of ``theta``.

    For each ``theta`` the rate expression is maximized over the thresholds,
    the split ``xi`` and ``nu``.  For fixed ``nu`` the best rate is found by
    bisection on the target value (each threshold is then pinned by inverting
    a ``D_gamma`` term); ``nu`` is chosen by a coarse scan followed by a
    golden-section search.

    Returns ``(rates, params)`` where ``params`` holds arrays ``nu``, ``alpha``,
    ``beta`` and ``xi``.
    """
    rho = _check_rho(rho, upper=0.5)
    thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
    if np.any((thetas <= 0) | (thetas >= 1)):
        raise DomainError("theta must lie in (0, 1)")

    grid = np.linspace(NU_MIN, NU_MAX, nu_points)
    scan = _sym_best_r(thetas[:, None], rho, grid[None, :])
    best = np.argmax(scan, axis=1)
    a = grid[np.maximum(best - 1, 0)]
    b = grid[np.minimum(best + 1, nu_points - 1)]

    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc = _sym_best_r(thetas, rho, c)
    fd = _sym_best_r(thetas, rho, d)
    for _ in range(golden_iters):
        left = fc >= fd  # maximum lies in [a, d]
        a = np.where(left, a, c)
        b = np.where(left, d, b)
        probe = np.where(left, b - _GOLDEN * (b - a), a + _GOLDEN * (b - a))
        fp = _sym_best_r(thetas, rho, probe)
        c, d = np.where(left, probe, d), np.where(left, c, probe)
        fc, fd = np.where(left, fp, fd), np.where(left, fc, fp)
    return _finish_sym(thetas, rho, a, b, scan, grid, best)


def _finish_sym(thetas, rho, a, b, scan, grid, best):
    nu_star = 0.5 * (a + b)
    r_star = _sym_best_r(thetas, rho, nu_star)
    # never report worse than the best coarse grid point
    coarse = scan[np.arange(thetas.size), best]
    use_grid = coarse > r_star
    nu_star = np.where(use_grid, grid[best], nu_star)
    r_star = np.where(use_grid, coarse, r_star)
    _, alpha, beta, xi = _sym_feasible(np.maximum(r_star, 1e-300), thetas, rho, nu_star)
    rates = (1.0 - thetas) / LOG2 * r_star
    return rates, {"nu": nu_star, "alpha": alpha, "beta": beta, "xi": xi}


def sym_rate_expression(theta, rho, nu, alpha, beta, xi) -> float:
    """Symmetric-noise achievable rate for fixed thresholds, split and ``nu``."""
    w = _sym_w(rho, nu)
    enu = nu * math.exp(-nu)
    terms = [
        nu / theta * d_gamma(rho, alpha),
        nu / (1.0 - xi) * d_gamma(w, alpha),
        enu / theta * d_gamma(1.0 - rho, beta),
        enu / xi * d_gamma(rho, beta) if xi > 0 else math.inf,
    ]
    return (1.0 - theta) / LOG2 * min(terms)


def sym_achievable_rate(theta: float, rho: float) -> RatePoint:
    theta = _check_theta(theta)
    rho = _check_rho(rho, upper=0.5)
    rates, params = sym_achievable_curve([theta], rho)
    point = {name: float(v[0]) for name, v in params.items()}
    regime = ProblemRegime(theta, rho, point["nu"])
    return RatePoint(regime, float(rates[0]), RateKind.ACHIEVABLE, "optimized", point)


def sym_converse_rate(theta: float, rho: float) -> RatePoint:
    theta = _check_theta(theta)
    rho = float(rho)
    if not 0.0 < rho or not rho / (1.0 - rho) < 0.5:
        raise DomainError(
            f"symmetric converse requires 0 < rho/(1-rho) < 1/2 (got rho={rho}); "
            "it is built from the reverse-Z converse, which needs noise below one half"
        )
    rz = rz_converse_rate(theta, rho / (1.0 - rho))
    z = z_converse_rate(theta, rho)
    regime = ProblemRegime(theta, rho, 1.0)
    if rz.rate_bits_per_test <= z.rate_bits_per_test:
        return RatePoint(regime, rz.rate_bits_per_test, RateKind.CONVERSE, f"rz-{rz.branch}")
    return RatePoint(regime, z.rate_bits_per_test, RateKind.CONVERSE, f"z-{z.branch}")


# --- test budgets ----------------------------------------------------------


def _check_budget(p: int, k: int, nu: float, eta: float) -> None:
    if not (1 <= k < p):
        raise DomainError(f"need 1 <= k < p, got p={p}, k={k}")
    if not nu > 0:
        raise DomainError("nu must be positive")
    if not eta >= 0:
        raise DomainError("eta must be non-negative")


def sparsity_exponent(p: int, k: int) -> float:
    return math.log(k) / math.log(p)


def test_budget_comp_rz(p: int, k: int, rho: float, nu: float = 1.0, eta: float = 0.0) -> TestBudget:
    """Tests sufficient for COMP under reverse-Z noise."""
    _check_budget(p, k, nu, eta)
    rho = _check_rho(rho, open_low=False)
    n = k * math.log(p) / ((1.0 - rho) * nu * math.exp(-nu))
    return TestBudget({"n_comp": n}, eta)


def test_budget_ndd_rz(
    p: int,
    k: int,
    rho: float,
    nu: float = 1.0,
    beta: float | None = None,
    xi: float | None = None,
    eta: float = 0.0,
) -> TestBudget:
    """Tests sufficient for noisy DD under reverse-Z noise.

    ``beta`` defaults to the midpoint of ``(rho, 1)``.  ``xi`` splits the
    ``k log p`` budget between the stage-one and stage-two non-defective
    conditions; by default it balances the two, capped at ``log k / log p``.
    """
    _check_budget(p, k, nu, eta)
    rho = _check_rho(rho)
    beta = 0.5 * (1.0 + rho) if beta is None else float(beta)
    if not rho < beta < 1.0:
        raise DomainError("beta must lie in (rho, 1)")
    enu = nu * math.exp(-nu)
    logp = math.log(p)
    a = k * logp / ((1.0 - rho) * enu)
    b = k * logp / (enu * d_gamma(rho, beta))
    if xi is None:
        xi = min(a / (a + b), sparsity_exponent(p, k))
    if not 0.0 <= xi <= 1.0:
        raise DomainError("xi must lie in [0, 1]")
    comps = {
        "n1_nd": (1.0 - xi) * a,
        "n2_d": k * math.log(k) / (enu * d_gamma(1.0, beta)),
        "n2_nd": xi * b,
    }
    return TestBudget(comps, eta, {"beta": beta, "xi": xi})


def test_budget_ndd_z(
    p: int, k: int, rho: float, nu: float = 1.0, alpha: float | None = None, eta: float = 0.0
) -> TestBudget:
    """Tests sufficient for noisy DD under Z noise; ``alpha`` defaults to the
    midpoint of ``(rho, zeta)`` with ``zeta = e^-nu + rho (1 - e^-nu)``."""
    _check_budget(p, k, nu, eta)
    rho = _check_rho(rho)
    zeta = math.exp(-nu) + rho * (1.0 - math.exp(-nu))
    alpha = 0.5 * (rho + zeta) if alpha is None else float(alpha)
    if not rho < alpha < zeta:
        raise DomainError("alpha must lie in (rho, zeta)")
    comps = {
        "n1_d": k * math.log(k) / (nu * d_gamma(rho, alpha)),
        "n1_nd": k * math.log(p / k) / (nu * d_gamma(zeta, alpha)),
        "n2_d": k * math.log(k) / ((1.0 - rho) * nu * math.exp(-nu)),
    }
    return TestBudget(comps, eta, {"alpha": alpha, "zeta": zeta})


def test_budget_ndd_sym(
    p: int,
    k: int,
    rho: float,
    nu: float = 1.0,
    alpha: float | None = None,
    beta: float | None = None,
    xi: float | None = None,
    eta: float = 0.0,
) -> TestBudget:
    """Tests sufficient for noisy DD under symmetric noise.

    ``alpha`` must lie below ``w = (1-rho) e^-nu + rho (1 - e^-nu)``, the
    chance that a non-defective sits in a negative test per unit of
    ``nu/k``; it defaults to the midpoint of ``(rho, w)``.  ``beta`` defaults
    to the midpoint of ``(rho, 1 - rho)`` and ``xi`` balances the two
    ``k log p`` conditions as in :func:`test_budget_ndd_rz`.
    """
    _check_budget(p, k, nu, eta)
    rho = _check_rho(rho, upper=0.5)
    w = float(_sym_w(rho, nu))
    alpha = 0.5 * (rho + w) if alpha is None else float(alpha)
    beta = 0.5 if beta is None else float(beta)
    if not rho < alpha < w:
        raise DomainError("alpha must lie in (rho, w)")
    if not rho < beta < 1.0 - rho:
        raise DomainError("beta must lie in (rho, 1 - rho)")
    enu = nu * math.exp(-nu)
    logp = math.log(p)
    a = k * logp / (nu * d_gamma(w, alpha))
    b = k * logp / (enu * d_gamma(rho, beta))
    if xi is None:
        xi = min(a / (a + b), sparsity_exponent(p, k))
    comps = {
        "n1_d": k * math.log(k) / (nu * d_gamma(rho, alpha)),
        "n1_nd": (1.0 - xi) * a,
        "n2_d": k * math.log(k) / (enu * d_gamma(1.0 - rho, beta)),
        "n2_nd": xi * b,
    }
    return TestBudget(comps, eta, {"alpha": alpha, "beta": beta, "xi": xi, "w": w})


def test_budget_dd_noiseless(p: int, k: int, nu: float = 1.0, eta: float = 0.0) -> TestBudget:
    """Noiseless DD budget: ``max(k log(p/k), k log k) / (nu e^-nu)``."""
    _check_budget(p, k, nu, eta)
    enu = nu * math.exp(-nu)
    comps = {"n_neg": k * math.log(p / k) / enu, "n_pos": k * math.log(k) / enu}
    return TestBudget(comps, eta)


def dd_converse_budget_rz(p: int, k: int, rho: float, nu: float = 1.0, eta: float = 0.0) -> float:
    """Test count below which DD fails with probability tending to one under reverse-Z noise."""
    if not (1 <= k < p) or not nu > 0:
        raise DomainError("need 1 <= k < p and nu > 0")
    if not 0.0 <= eta < 1.0:
        raise DomainError("eta must lie in [0, 1)")
    rho = _check_rho(rho, open_low=False)
    return k * math.log(p / k) / (nu * math.exp(-nu) * (1.0 - rho)) * (1.0 - eta)


for _fn in (test_budget_comp_rz, test_budget_ndd_rz, test_budget_ndd_z, test_budget_ndd_sym, test_budget_dd_noiseless):
    _fn.__test__ = False
del _fn
