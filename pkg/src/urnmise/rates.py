"""log10-space evaluation of the posterior and prior MISE order bounds.

Every O(.) constant is taken as 1, so the values are orders, not calibrated
errors.  A term that is too small for a double (its exponent overflows) is
returned as ``NEG_INF``; no function here returns NaN for valid input.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .model import BasePrior, ParamSchedules, base_convolution

NEG_INF = -math.inf
LN10 = math.log(10.0)
# exponents beyond this overflow a double, so e**-x is below every representable log10
_LN_EXPONENT_LIMIT = math.log(np.finfo(float).max)


def log10_sum(terms, axis=None):
    """log10 of sum(10**terms), tolerating NEG_INF entries."""
    x = np.asarray(terms, dtype=float)
    mx = np.max(x, axis=axis, keepdims=True)
    safe = np.where(np.isfinite(mx), mx, 0.0)
    with np.errstate(divide="ignore"):
        out = np.log10(np.sum(10.0 ** (x - safe), axis=axis, keepdims=True)) + safe
    out = np.where(np.isneginf(mx), NEG_INF, out)
    out = np.squeeze(out, axis=axis) if axis is not None else out.reshape(())
    return float(out) if out.ndim == 0 else out


def _log10_1p(x):
    return math.log1p(x) / LN10


def _log10_one_minus_inv(m):
    """n-independent factor log10(1 - 1/M); NEG_INF at M = 1."""
    if m <= 1.0:
        return NEG_INF
    return math.log1p(-1.0 / m) / LN10


def tail_exponent(c, log_sigma_sq):
    """c**2 / (4 sigma_n**2), or inf once it no longer fits in a double."""
    ln_x = math.log(c * c / 4.0) - log_sigma_sq
    if ln_x > _LN_EXPONENT_LIMIT:
        return math.inf
    return math.exp(ln_x)


def log10_tail_bound(log10_ratio, c, log_sigma_sq):
    """log10 of ratio * exp(-c**2 / (4 sigma_n**2)), the B_n / B_M form."""
    x = tail_exponent(c, log_sigma_sq)
    if math.isinf(x):
        return NEG_INF
    return log10_ratio - x / LN10


@dataclass(frozen=True)
class RateInputs:
    n: float
    schedules: ParamSchedules = ParamSchedules()
    bp: BasePrior = BasePrior()
    p: Optional[int] = None

    def __post_init__(self):
        if not self.n >= 2:
            raise ValueError(f"n must be >= 2, got {self.n!r}")
        if self.p is not None and self.p < 1:
            raise ValueError("p must be >= 1")


@dataclass(frozen=True)
class RateTerms:
    """log10 values of every bound term at one sample size."""

    n: float
    alpha: float
    m: float
    alpha_frac_sq: float
    B_n: float
    eps_star_n: float
    sigma_n_sq: float
    empty_term: float
    M_B_M: float
    eps_star_M: float
    H0_log: float
    p_B_n: Optional[float] = None
    M_p_B_M: Optional[float] = None
    eps_L_n: Optional[float] = None
    eps_L_M: Optional[float] = None


def log10_h0(bp: BasePrior, a, c):
    mass = bp.mass(-a - c, a + c)
    return math.log10(mass) if mass > 0 else NEG_INF


def rate_terms(ri: RateInputs) -> RateTerms:
    """All bound terms for the EW and SB posterior MISE orders at ``ri.n``.

    eps*_n is calibrated to n**-r; eps*_M then follows from the exact ratio
    eps*_M / eps*_n = ((alpha+M)/alpha)**M (alpha/(alpha+n))**n H0**(n-M).
    The large-p variants are added when ``ri.p`` is set, with eps^L_n
    calibrated the same way.
    """
    s = ri.schedules
    n = float(ri.n)
    alpha = s.alpha(n)
    m = s.m_real(n)
    lr_n = _log10_1p(n / alpha)
    lr_m = _log10_1p(m / alpha)
    log_s2 = s.log_sigma_n_sq(n)
    h0 = log10_h0(ri.bp, s.a, s.c)
    eps_n = -s.r * math.log10(n)
    b_n = log10_tail_bound(lr_n, s.c, log_s2)
    b_m = log10_tail_bound(lr_m, s.c, log_s2)

    def eps_m(h0_weight):
        if math.isinf(h0) and h0_weight > 0:
            return NEG_INF
        return eps_n - n * lr_n + m * lr_m + h0_weight * h0

    log_one_minus = _log10_one_minus_inv(m)
    empty = NEG_INF if math.isinf(log_one_minus) else n * log_one_minus + m * lr_m

    extra = {}
    if ri.p is not None:
        lp = math.log10(ri.p)
        extra = dict(
            p_B_n=lp + b_n,
            M_p_B_M=math.log10(m) + lp + b_m,
            eps_L_n=eps_n,
            eps_L_M=eps_m(ri.p * (n - m)),
        )
    return RateTerms(
        n=n,
        alpha=alpha,
        m=m,
        alpha_frac_sq=-2.0 * lr_n,
        B_n=b_n,
        eps_star_n=eps_n,
        sigma_n_sq=log_s2 / LN10,
        empty_term=empty,
        M_B_M=math.log10(m) + b_m,
        eps_star_M=eps_m(n - m),
        H0_log=h0,
        **extra,
    )


def mise_order_ew(rt: RateTerms) -> float:
    """log10[(alpha/(alpha+n))^2 + B_n + eps*_n + sigma_n^2]."""
    return log10_sum([rt.alpha_frac_sq, rt.B_n, rt.eps_star_n, rt.sigma_n_sq])


def mise_order_sb(rt: RateTerms) -> float:
    """log10[(1-1/M)^n ((alpha+M)/alpha)^M + M B_M + eps*_M + sigma_n^2]."""
    return log10_sum([rt.empty_term, rt.M_B_M, rt.eps_star_M, rt.sigma_n_sq])


class ConfigurationError(ValueError):
    pass


def mise_order_largep(rt: RateTerms, which: str) -> float:
    """Large-p-small-n MISE order for ``which`` in {"EW", "SB"}."""
    if rt.p_B_n is None:
        raise ConfigurationError("rate terms were computed without a data dimension p")
    tag = which.upper()
    if tag == "EW":
        return log10_sum([rt.alpha_frac_sq, rt.p_B_n, rt.eps_L_n, rt.sigma_n_sq])
    if tag == "SB":
        return log10_sum([rt.empty_term, rt.M_p_B_M, rt.eps_L_M, rt.sigma_n_sq])
    raise ValueError(f"unknown model {which!r}")


class ComparisonRatios(NamedTuple):
    ratio1: float
    cond2_holds: bool
    ratio3: float


def comparison_ratios(n, schedules: ParamSchedules, bp: BasePrior = BasePrior()) -> ComparisonRatios:
    """Term-by-term EW vs SB comparisons with M = ceil(n**b).

    ratio1 = log10(eps*_M / eps*_n); cond2 is M(alpha+M) < alpha+n, i.e.
    B_n > M B_M; ratio3 = log10 of the empty term over (alpha/(alpha+n))^2.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    n = float(n)
    alpha = schedules.alpha(n)
    m = float(math.ceil(n**schedules.b - 1e-12))
    lr_n = _log10_1p(n / alpha)
    lr_m = _log10_1p(m / alpha)
    h0 = log10_h0(bp, schedules.a, schedules.c)
    ratio1 = -n * lr_n + m * lr_m + (n - m) * h0
    log_one_minus = _log10_one_minus_inv(m)
    ratio3 = NEG_INF if math.isinf(log_one_minus) else n * log_one_minus + m * lr_m + 2.0 * lr_n
    return ComparisonRatios(ratio1, m * (alpha + m) < alpha + n, ratio3)


# ---------------------------------------------------------------------------
# optimisation over alpha with sigma_n^2 = n^-t


def mise_ew_opt1(alpha, n, t, c, r):
    """log10 of the EW order with sigma_n^2 = n**-t as a function of alpha (vectorised)."""
    alpha = np.asarray(alpha, dtype=float)
    lr = np.log1p(n / alpha) / LN10
    nt = float(n) ** t
    ln = math.log10(n)
    terms = np.stack(
        np.broadcast_arrays(-2.0 * lr, lr - c * c * nt / (4.0 * LN10), -r * ln, -t * ln),
        axis=-1,
    )
    return log10_sum(terms, axis=-1)


class OptimalAlpha(NamedTuple):
    alpha_star: float
    log10_alpha_star: float
    log10_mise_opt: float


def optimal_alpha_ew(n, t, c, r) -> OptimalAlpha:
    """Minimiser alpha* = n (1 / (1 - e**(-c^2 n^t / 12) / 2**(1/3)) - 1) and the order there.

    With x = alpha/(alpha+n) the alpha-dependent part is x^2 + e^{-c^2 n^t/4}/x,
    minimised at x^3 = e^{-c^2 n^t/4}/2, where both pieces sum to 3 x^2.
    ``alpha_star`` underflows to 0.0 once x is below the double range; its
    log10 stays finite.
    """
    if n < 2 or t <= 0 or c <= 0:
        raise ValueError("need n >= 2, t > 0, c > 0")
    ln_x = -c * c * float(n) ** t / 12.0 - math.log(2.0) / 3.0
    # alpha* = n x / (1 - x)
    ln_alpha = math.log(n) + ln_x - math.log(-math.expm1(ln_x))
    alpha_star = math.exp(ln_alpha) if ln_alpha > -745.0 else 0.0
    ln10n = math.log10(n)
    mise = log10_sum([math.log10(3.0) + 2.0 * ln_x / LN10, -r * ln10n, -t * ln10n])
    return OptimalAlpha(alpha_star, ln_alpha / LN10, mise)


def mise_ew_opt2_printed(n, t, c, r) -> float:
    """The optimised EW order exactly as printed, including the constant 2**(1/3) e**(c^2).

    That constant does not shrink with n; :func:`optimal_alpha_ew` evaluates
    the order at alpha* directly instead.
    """
    ln10n = math.log10(n)
    first = 2.0 * (-c * c * float(n) ** t / 12.0 - math.log(2.0) / 3.0) / LN10
    const = math.log10(2.0) / 3.0 + c * c / LN10
    return log10_sum([first, const, -r * ln10n, -t * ln10n])


# ---------------------------------------------------------------------------
# reference rates and ordering


class RateOrdering(NamedTuple):
    sb: float
    ew: float
    fmise: float
    br_gvv: float

    @property
    def holds(self):
        return self.sb < self.ew < self.fmise < self.br_gvv


def fmise(n):
    """log10 n**(-2/5), the optimal frequentist kernel MISE rate."""
    return -0.4 * math.log10(n)


def br_gvv(n):
    """log10 of n**(-2/5) (log n)**(4/5), the best Hellinger posterior rate for DP mixtures."""
    return -0.4 * math.log10(n) + 0.8 * math.log10(math.log(n))


def rate_ordering(n, schedules: ParamSchedules, bp: BasePrior = BasePrior()) -> RateOrdering:
    rt = rate_terms(RateInputs(n, schedules, bp))
    return RateOrdering(mise_order_sb(rt), mise_order_ew(rt), fmise(n), br_gvv(n))


def ordering_regime(schedules: ParamSchedules) -> bool:
    """Parameter regime r < 2/5, t < 2/5, omega < 4/5 under which the ordering is claimed."""
    return schedules.r < 0.4 and schedules.t < 0.4 and schedules.omega < 0.8


# ---------------------------------------------------------------------------
# prior predictive MISE


def h_opt_prior(m) -> float:
    """Stationary point (4M)**(-1/5) of 1/(M h) + h**4."""
    if not m > 0:
        raise ValueError("M must be positive")
    return (4.0 * m) ** -0.2


def prior_mise(which, n_or_m, alpha, h) -> float:
    """log10 prior MISE order: 1/(N h) + 1/(alpha+1) + h^4.

    N is M for "SB" and alpha + n for "EW".
    """
    h = np.asarray(h, dtype=float)
    if np.any(h <= 0):
        raise ValueError("bandwidth h must be positive")
    tag = which.upper()
    if tag == "SB":
        size = float(n_or_m)
    elif tag == "EW":
        size = alpha + float(n_or_m)
    else:
        raise ValueError(f"unknown model {which!r}")
    out = np.log10(1.0 / (size * h) + 1.0 / (alpha + 1.0) + h**4)
    return float(out) if out.ndim == 0 else out


def prior_mise_opt(which, n_or_m, alpha) -> float:
    """Prior MISE order at the optimal bandwidth for the model."""
    size = float(n_or_m) if which.upper() == "SB" else alpha + float(n_or_m)
    return prior_mise(which, n_or_m, alpha, h_opt_prior(size))


# ---------------------------------------------------------------------------
# wrong-model regimes


class Regime(str, enum.Enum):
    BOTH_CONSISTENT = "BOTH_CONSISTENT"
    EW_WRONG_SB_OK = "EW_WRONG_SB_OK"
    BOTH_CAN_BE_WRONG = "BOTH_CAN_BE_WRONG"


def wrong_model_check(omega, b, s=3.0, uses_Cn_condition=True) -> Regime:
    """Classify (alpha = n**omega, M = n**b) by which models may converge to the wrong density.

    EW is misled once alpha outgrows n (omega > 1).  SB additionally needs
    b > 1 and omega - b > b; with ``uses_Cn_condition`` the pooled-variance
    growth condition must also have s > 2.
    """
    if omega <= 1:
        return Regime.BOTH_CONSISTENT
    sb_wrong = b > 1 and omega - b > b
    if uses_Cn_condition:
        sb_wrong = sb_wrong and s > 2
    return Regime.BOTH_CAN_BE_WRONG if sb_wrong else Regime.EW_WRONG_SB_OK


def wrong_model_target(bp: BasePrior, k, y):
    """Limit density of a misled model: the N(mu0, k^2 + sigma0^2) density."""
    if not k > 0:
        raise ValueError("k must be positive")
    return base_convolution(bp, k, y)


def empty_limit_log10(omega, b, n) -> float:
    """log10[(alpha/(alpha+M))^M (1 - 1/M)^n] for alpha = n**omega, M = n**b."""
    n = float(n)
    alpha, m = n**omega, n**b
    return -m * _log10_1p(m / alpha) + n * _log10_one_minus_inv(m)
