"""Closed-form counterparts and dual-theory machinery.

Conjugate normal-normal posterior, the Wang distortion that carries the
prior survival to the posterior survival, quantile-composition posterior
updating, Lorenz and survival-integral representations of expectations,
distorted expectations with the Yaari construction, a telescoping
normalization check for distortion derivatives, and the CARA-normal
expected utility with its closed-form optimal weight.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import DataError, DomainError, NumericError, ShapeError
from .models import NormalNormalModel, PortfolioProblem
from .special import normal_cdf, normal_quantile

DEFAULT_M = 4096

_TAIL = 1e-8


# ---------------------------------------------------------------------------
# conjugate posterior and the Wang distortion
# ---------------------------------------------------------------------------

@dataclass
class NormalPosterior:
    """Normal posterior N(mu_star, sigma_star_sq) with its building blocks.

    t = likelihood_variance + n * prior_variance and s = sum(y), so
    mu_star = (sigma^2 mu + alpha^2 s) / t and sigma_star_sq =
    alpha^2 sigma^2 / t.
    """

    mu_star: float
    sigma_star_sq: float
    t: float
    s: float

    def __post_init__(self):
        if not self.sigma_star_sq > 0:
            raise DomainError("sigma_star_sq must be positive")
        if not self.t > 0:
            raise DomainError("t must be positive")

    @property
    def sigma_star(self) -> float:
        return math.sqrt(self.sigma_star_sq)

    def quantile(self, u):
        return self.mu_star + self.sigma_star * normal_quantile(u)

    def cdf(self, x):
        return normal_cdf((np.asarray(x, dtype=np.float64) - self.mu_star)
                          / self.sigma_star)

    def view(self) -> "DistributionView":
        return normal_view(self.mu_star, self.sigma_star)


def conjugate_posterior(model: NormalNormalModel, y) -> NormalPosterior:
    """Exact normal-normal posterior; empty y returns the prior."""
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    n = y.shape[0]
    if n != 0 and n != model.n:
        raise ShapeError(f"y has length {n}, model declares n={model.n}")
    alpha_sq = model.prior_variance
    sigma_sq = model.likelihood_variance
    s = float(y.sum())
    t = sigma_sq + n * alpha_sq
    mu_star = (sigma_sq * model.prior_mean + alpha_sq * s) / t
    sigma_star_sq = alpha_sq * sigma_sq / t
    return NormalPosterior(mu_star=mu_star, sigma_star_sq=sigma_star_sq, t=t, s=s)


@dataclass
class WangDistortion:
    """Distortion g(p) = Phi(lambda1 * Phi^{-1}(p) + lam)."""

    lambda1: float
    lam: float = 0.0

    def __post_init__(self):
        if not self.lambda1 > 0:
            raise DomainError("lambda1 must be positive")

    def __call__(self, p):
        """Evaluate g with exact endpoint values g(0)=0 and g(1)=1."""
        arr = np.asarray(p, dtype=np.float64)
        scalar = arr.ndim == 0
        arr = np.atleast_1d(arr)
        out = np.empty_like(arr)
        zero = arr == 0.0
        one = arr == 1.0
        inner = ~(zero | one)
        out[zero] = 0.0
        out[one] = 1.0
        if np.any(inner):
            out[inner] = wang_g(arr[inner], self)
        return float(out[0]) if scalar else out


def wang_params(model: NormalNormalModel, y) -> WangDistortion:
    """Distortion parameters lambda1 = alpha/sigma_star, lam = alpha*lambda1*(s - n*mu)/t."""
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    post = conjugate_posterior(model, y)
    alpha = math.sqrt(model.prior_variance)
    lambda1 = alpha / post.sigma_star
    lam = alpha * lambda1 * (post.s - y.shape[0] * model.prior_mean) / post.t
    return WangDistortion(lambda1=lambda1, lam=lam)


def _check_open_unit(p, name):
    arr = np.asarray(p, dtype=np.float64)
    if np.any(arr <= 0.0) or np.any(arr >= 1.0):
        raise DomainError(f"{name} must lie strictly inside (0,1)")
    return arr


def wang_g(p, w: WangDistortion):
    """g(p) = Phi(lambda1 * Phi^{-1}(p) + lam) for p strictly inside (0,1)."""
    _check_open_unit(p, "p")
    return normal_cdf(w.lambda1 * normal_quantile(p) + w.lam)


def wang_g_inverse(q, w: WangDistortion):
    """Inverse distortion Phi((Phi^{-1}(q) - lam) / lambda1)."""
    _check_open_unit(q, "q")
    return normal_cdf((normal_quantile(q) - w.lam) / w.lambda1)


def prior_to_posterior_survival_check(theta_grid, model: NormalNormalModel, y) -> float:
    """Worst |posterior survival - g(prior survival)| over the grid.

    The two sides agree identically when g carries the Wang parameters
    derived from the same model and data.
    """
    theta_grid = np.asarray(theta_grid, dtype=np.float64).reshape(-1)
    if theta_grid.size == 0:
        raise DataError("theta grid must be nonempty")
    post = conjugate_posterior(model, y)
    w = wang_params(model, y)
    alpha = math.sqrt(model.prior_variance)
    post_surv = normal_cdf(-(theta_grid - post.mu_star) / post.sigma_star)
    prior_surv = normal_cdf(-(theta_grid - model.prior_mean) / alpha)
    rhs = w(prior_surv)
    return float(np.max(np.abs(post_surv - rhs)))


def posterior_quantile_via_distortion(u, model: NormalNormalModel, y):
    """Posterior quantile through the prior quantile and the distortion.

    Q_post(u) = Q_prior(1 - g_inverse(1 - u)); algebraically equal to
    mu_star + sigma_star * Phi^{-1}(u).
    """
    u = _check_open_unit(u, "u")
    w = wang_params(model, y)
    alpha = math.sqrt(model.prior_variance)
    p = 1.0 - wang_g_inverse(1.0 - u, w)
    return model.prior_mean + alpha * normal_quantile(p)


# ---------------------------------------------------------------------------
# distribution views and expectation representations
# ---------------------------------------------------------------------------

@dataclass
class DistributionView:
    """CDF/quantile pair with declared support bounds.

    The quantile must be the generalized inverse of the cdf; operations
    here assume but do not verify this.
    """

    cdf: Callable
    quantile: Callable
    support: tuple = (-math.inf, math.inf)
    name: str = "distribution"

    def survival(self, x):
        return 1.0 - self.cdf(x)


def normal_view(mean: float = 0.0, sd: float = 1.0) -> DistributionView:
    if not sd > 0:
        raise DomainError("sd must be positive")
    return DistributionView(
        cdf=lambda x: normal_cdf((np.asarray(x, dtype=np.float64) - mean) / sd),
        quantile=lambda p: mean + sd * normal_quantile(p),
        support=(-math.inf, math.inf), name=f"normal({mean},{sd})")


def exponential_view(rate: float = 1.0) -> DistributionView:
    if not rate > 0:
        raise DomainError("rate must be positive")
    return DistributionView(
        cdf=lambda x: -np.expm1(-rate * np.maximum(np.asarray(x, dtype=np.float64), 0.0)),
        quantile=lambda p: -np.log1p(-np.asarray(p, dtype=np.float64)) / rate,
        support=(0.0, math.inf), name=f"exponential({rate})")


def uniform_view(a: float = 0.0, b: float = 1.0) -> DistributionView:
    if not a < b:
        raise DomainError("need a < b")
    return DistributionView(
        cdf=lambda x: np.clip((np.asarray(x, dtype=np.float64) - a) / (b - a), 0.0, 1.0),
        quantile=lambda p: a + (b - a) * np.asarray(p, dtype=np.float64),
        support=(a, b), name=f"uniform({a},{b})")


def lognormal_view(mu: float = 0.0, sigma: float = 1.0) -> DistributionView:
    if not sigma > 0:
        raise DomainError("sigma must be positive")

    def cdf(x):
        x = np.asarray(x, dtype=np.float64)
        out = np.zeros_like(x, dtype=np.float64)
        pos = x > 0
        out = np.where(pos, normal_cdf((np.log(np.where(pos, x, 1.0)) - mu) / sigma), 0.0)
        return out if out.ndim else float(out)

    return DistributionView(
        cdf=cdf,
        quantile=lambda p: np.exp(mu + sigma * normal_quantile(p)),
        support=(0.0, math.inf), name=f"lognormal({mu},{sigma})")


def constant_view(c: float) -> DistributionView:
    return DistributionView(
        cdf=lambda x: (np.asarray(x, dtype=np.float64) >= c).astype(np.float64),
        quantile=lambda p: np.full_like(np.asarray(p, dtype=np.float64), c)
        if np.asarray(p).ndim else float(c),
        support=(c, c), name=f"constant({c})")


def _quantile_integral(dist: DistributionView, u: float, M: int):
    """Midpoint rule for int_0^u quantile(s) ds; also reports the largest term."""
    if u == 0.0:
        return 0.0, 0.0
    s = u * (np.arange(M) + 0.5) / M
    q = np.asarray(dist.quantile(s), dtype=np.float64)
    if not np.all(np.isfinite(q)):
        raise NumericError("quantile evaluation returned non-finite values")
    terms = q * (u / M)
    return float(terms.sum()), float(np.max(np.abs(terms)))


def lorenz_point(dist: DistributionView, u: float, M: int = DEFAULT_M) -> float:
    """Normalized partial quantile integral L(u) = (1/Z) int_0^u quantile(s) ds."""
    if not 0.0 <= u <= 1.0:
        raise DomainError("u must lie in [0,1]")
    if M < 1:
        raise ValueError("M must be >= 1")
    Z, z_peak = _quantile_integral(dist, 1.0, M)
    if z_peak > 0.05 * max(1.0, abs(Z)):
        raise NumericError("quantile integral dominated by a single tail term; "
                           "the mean looks non-integrable")
    if abs(Z) < 1e-300:
        raise NumericError("normalizer E(U) is zero; Lorenz point undefined")
    if u == 0.0:
        return 0.0
    num, _ = _quantile_integral(dist, u, M)
    return num / Z


def expectation_via_survival(dist: DistributionView, M: int = DEFAULT_M) -> float:
    """E(U) as the integral of the survival function over [0, q(1-1e-8)].

    Needs an effectively nonnegative variable, probed through the extreme
    lower quantile rather than the declared support so a normal located
    far above zero still qualifies.
    """
    if M < 1:
        raise ValueError("M must be >= 1")
    if float(np.asarray(dist.quantile(1e-12))) < -1e-8:
        raise DomainError("survival-integral route needs nonnegative support; "
                          "use the quantile-integral route instead")
    upper = float(np.asarray(dist.quantile(1.0 - _TAIL)))
    if not math.isfinite(upper):
        raise NumericError("upper truncation point is non-finite")
    if upper <= 0.0:
        return 0.0
    t = upper * (np.arange(M) + 0.5) / M
    s = np.asarray(dist.survival(t), dtype=np.float64)
    if not np.all(np.isfinite(s)):
        raise NumericError("survival evaluation returned non-finite values")
    return float(s.sum() * upper / M)


def distorted_expectation(dist: DistributionView, g: Callable,
                          M: int = DEFAULT_M) -> float:
    """Dual-theory value int g(S(t)) dt over the payout axis."""
    if M < 1:
        raise ValueError("M must be >= 1")
    if float(np.asarray(dist.quantile(1e-12))) < -1e-8:
        raise DomainError("distorted expectation integrates over nonnegative payouts")
    g0 = float(np.asarray(g(0.0)))
    g1 = float(np.asarray(g(1.0)))
    if abs(g0) > 1e-9 or abs(g1 - 1.0) > 1e-9:
        raise DataError(f"distortion endpoints g(0)={g0}, g(1)={g1} must be 0 and 1")
    upper = float(np.asarray(dist.quantile(1.0 - _TAIL)))
    if upper <= 0.0:
        return 0.0
    t = upper * (np.arange(M) + 0.5) / M
    s = np.clip(np.asarray(dist.survival(t), dtype=np.float64), 0.0, 1.0)
    vals = np.asarray(g(s), dtype=np.float64)
    if not np.all(np.isfinite(vals)):
        raise NumericError("distortion evaluation returned non-finite values")
    return float(vals.sum() * upper / M)


def yaari_g(u: Callable, dist: DistributionView, bracket_tol: float = 1e-12) -> Callable:
    """Distortion carrying S_X to S_{u(X)}: g(p) = S_X(u_inv(S_X_inv(p))).

    The utility u must be strictly increasing on the support; its inverse
    is computed by bisection. Returned g maps 0 to 0 and 1 to 1 exactly.
    """
    lo_q = float(np.asarray(dist.quantile(1e-12)))
    hi_q = float(np.asarray(dist.quantile(1.0 - 1e-12)))
    probe = np.linspace(lo_q, hi_q, 33)
    uprobe = np.asarray([float(u(x)) for x in probe])
    if not np.all(np.diff(uprobe) > 0):
        raise DataError("utility must be strictly increasing on the support")

    def u_inverse(t: float) -> float:
        a, b = lo_q, hi_q
        fa, fb = float(u(a)), float(u(b))
        lo_s, hi_s = dist.support
        k = 0
        while fa > t and k < 200:
            if math.isfinite(lo_s) and a <= lo_s:
                break
            a = a - max(1.0, abs(a))
            if math.isfinite(lo_s):
                a = max(a, lo_s)
            fa = float(u(a))
            k += 1
        k = 0
        while fb < t and k < 200:
            if math.isfinite(hi_s) and b >= hi_s:
                break
            b = b + max(1.0, abs(b))
            if math.isfinite(hi_s):
                b = min(b, hi_s)
            fb = float(u(b))
            k += 1
        if fa > t:
            return a
        if fb < t:
            return b
        for _ in range(200):
            mid = 0.5 * (a + b)
            if float(u(mid)) < t:
                a = mid
            else:
                b = mid
            if b - a <= bracket_tol * max(1.0, abs(a), abs(b)):
                break
        return 0.5 * (a + b)

    def g(p):
        arr = np.asarray(p, dtype=np.float64)
        scalar = arr.ndim == 0
        arr = np.atleast_1d(arr)
        if np.any(arr < 0.0) or np.any(arr > 1.0):
            raise DomainError("distortion argument must lie in [0,1]")
        out = np.empty_like(arr)
        for i, pi in enumerate(arr):
            if pi == 0.0:
                out[i] = 0.0
            elif pi == 1.0:
                out[i] = 1.0
            else:
                t = float(np.asarray(dist.quantile(1.0 - pi)))
                x = u_inverse(t)
                out[i] = float(np.asarray(dist.survival(x)))
        out = np.clip(out, 0.0, 1.0)
        return float(out[0]) if scalar else out

    return g


def silver_normalization(g: Callable, dist: Optional[DistributionView] = None,
                         M: int = DEFAULT_M, h: float = 1e-6) -> float:
    """Integral of g'(1 - tau) over the unit interval; telescopes to 1.

    Equals int g'(S_X(t)) dF_X(t) for any continuous distribution after
    the tau substitution, so `dist` does not enter the computation.
    Derivative stencils that would leave [0,1] are clipped (a warning is
    issued); g must therefore be defined at 0 and 1.
    """
    if M < 1:
        raise ValueError("M must be >= 1")
    if not h > 0:
        raise ValueError("h must be positive")
    tau = (np.arange(M) + 0.5) / M
    p = 1.0 - tau
    up = p + h
    down = p - h
    clipped = bool(np.any(up > 1.0) or np.any(down < 0.0))
    if clipped:
        warnings.warn("derivative stencil clipped at the unit interval boundary",
                      RuntimeWarning, stacklevel=2)
    up = np.clip(up, 0.0, 1.0)
    down = np.clip(down, 0.0, 1.0)
    gu = np.asarray(g(up), dtype=np.float64)
    gd = np.asarray(g(down), dtype=np.float64)
    deriv = (gu - gd) / (up - down)
    if not np.all(np.isfinite(deriv)):
        raise NumericError("distortion derivative evaluated non-finite")
    return float(deriv.mean())


# ---------------------------------------------------------------------------
# CARA portfolio closed forms
# ---------------------------------------------------------------------------

def cara_normal_eu(weight, problem: PortfolioProblem):
    """Closed-form expected CARA utility -exp(-gamma*m + gamma^2 w^2 sigma^2 / 2)."""
    arr = np.asarray(weight, dtype=np.float64)
    lo, hi = problem.weight_domain
    if np.any(arr < lo) or np.any(arr > hi):
        raise DomainError(f"weight outside the domain [{lo}, {hi}]")
    gamma = problem.risk_aversion
    m = (1.0 - arr) * problem.risk_free + arr * problem.return_mean
    out = -np.exp(-gamma * m + 0.5 * gamma * gamma * arr * arr
                  * problem.return_sd ** 2)
    return float(out) if arr.ndim == 0 else out


class ClampedWeight(float):
    """Float carrying a flag saying whether domain clamping changed it."""

    clamped: bool = False
    raw: float = 0.0

    def __new__(cls, value: float, clamped: bool, raw: float):
        obj = super().__new__(cls, value)
        obj.clamped = bool(clamped)
        obj.raw = float(raw)
        return obj


def kelly_weight(problem: PortfolioProblem) -> ClampedWeight:
    """Optimal weight (mu - r_f) / (sigma^2 gamma), clamped to the domain."""
    raw = (problem.return_mean - problem.risk_free) / (
        problem.return_sd ** 2 * problem.risk_aversion)
    lo, hi = problem.weight_domain
    value = min(max(raw, lo), hi)
    return ClampedWeight(value, clamped=(value != raw), raw=raw)
