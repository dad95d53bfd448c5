"""Closed-form densities for the true model and the EW / SB estimators.

All evaluators accept a scalar ``y`` or an array of evaluation points and
return an array of the same shape (a float for scalar input).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# exp(-745) is the smallest exponent that still yields a nonzero double
_EXP_FLOOR = -745.0
_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


class ShapeError(ValueError):
    """Array arguments have incompatible lengths or dimensions."""


def _validate_positive(value, name):
    if not (np.isfinite(value) and value > 0):
        raise ValueError(f"{name} must be a positive finite number, got {value!r}")


@dataclass(frozen=True)
class BasePrior:
    """Gaussian base measure G0 = N(mu0, sigma0**2) of the Dirichlet process."""

    mu0: float = 2.0
    sigma0: float = 1.0

    def __post_init__(self):
        if not np.isfinite(self.mu0):
            raise ValueError(f"mu0 must be finite, got {self.mu0!r}")
        _validate_positive(self.sigma0, "sigma0")

    def sample(self, rng, size=None):
        return rng.normal(self.mu0, self.sigma0, size=size)

    def mass(self, lo, hi):
        """G0 probability of the interval [lo, hi]."""
        from scipy.special import ndtr

        z_lo = (lo - self.mu0) / self.sigma0
        z_hi = (hi - self.mu0) / self.sigma0
        if z_lo > 0:  # use the upper tail, where ndtr keeps precision
            z_lo, z_hi = -z_hi, -z_lo
        return float(ndtr(z_hi) - ndtr(z_lo))


@dataclass(frozen=True)
class TrueDensity:
    """Data-generating density: a finite atom mixture F0 convolved with N(0, k**2).

    ``atoms`` are the mixing locations and ``weights`` their probabilities.
    Every atom must lie in [-a - c, a + c].
    """

    atoms: tuple
    weights: tuple
    k: float = 1.0
    a: float = 1.0
    c: float = 0.5

    def __post_init__(self):
        atoms = tuple(float(x) for x in np.atleast_1d(self.atoms))
        weights = tuple(float(w) for w in np.atleast_1d(self.weights))
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "weights", weights)
        _validate_positive(self.k, "k")
        _validate_positive(self.a, "a")
        _validate_positive(self.c, "c")
        if len(atoms) == 0 or len(atoms) != len(weights):
            raise ShapeError("atoms and weights must be nonempty and of equal length")
        if any(w < 0 for w in weights) or abs(math.fsum(weights) - 1.0) > 1e-12:
            raise ValueError("F0 weights must be nonnegative and sum to 1")
        bound = self.a + self.c
        for x in atoms:
            if not -bound <= x <= bound:
                raise ValueError(f"atom {x} lies outside [-{bound}, {bound}]")

    @classmethod
    def point_mass(cls, loc=0.0, **kw):
        return cls(atoms=(loc,), weights=(1.0,), **kw)

    @property
    def support(self):
        return (-self.a - self.c, self.a + self.c)


@dataclass(frozen=True)
class ParamSchedules:
    """Growth schedules indexed by sample size n.

    alpha = n**omega, M = n**b, sigma_n**2 = c**2 / (4 exp(n**t)), target
    eps*_n = n**-r and b_n = bn_ratio * sigma_n.  ``a``, ``c`` and ``k`` must
    agree with the :class:`TrueDensity` the schedules are used with.
    """

    omega: float = 0.05
    b: float = 0.2
    t: float = 2.0
    r: float = 3.0
    c1: float = 0.1
    k: float = 1.0
    a: float = 1.0
    c: float = 0.5
    bn_ratio: float = 0.5

    def __post_init__(self):
        for name in ("omega", "b", "t", "r", "c1", "k", "a", "c", "bn_ratio"):
            if not np.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.omega <= 0:
            raise ValueError("omega must be positive")
        if self.b < 0:
            raise ValueError("b must be nonnegative")
        for name in ("t", "r", "c1", "k", "a", "c"):
            _validate_positive(getattr(self, name), name)
        if not 0 < self.bn_ratio < 1:
            raise ValueError("bn_ratio must lie in (0, 1)")
        if not self.c1 < self.a:
            raise ValueError("c1 must be smaller than a")

    def alpha(self, n):
        return float(n) ** self.omega

    def m_real(self, n):
        """Component bound n**b as a real number (used by the rate bounds)."""
        return float(n) ** self.b

    def m_count(self, n):
        """Integer component count ceil(n**b), floored at 2 for the sampler."""
        return max(2, math.ceil(float(n) ** self.b - 1e-12))

    def log_sigma_n_sq(self, n):
        """Natural log of sigma_n**2; finite even when sigma_n underflows."""
        return math.log(self.c**2 / 4.0) - float(n) ** self.t

    def sigma_n(self, n):
        return math.exp(0.5 * self.log_sigma_n_sq(n))

    def b_n(self, n):
        return self.bn_ratio * self.sigma_n(n)

    def eps_n(self, n):
        """Prior tail mass P(sigma > sigma_n) used by the samplers: n**-r, kept in (0, 1/2]."""
        return min(0.5, float(n) ** -self.r)


def normal_kernel(y, loc, scale):
    """Normal density (1/scale) * phi((y - loc) / scale), broadcasting over inputs.

    The exponent is clamped at -745: anything smaller evaluates to exactly 0.
    """
    z = (np.asarray(y, dtype=float) - loc) / scale
    expo = -0.5 * z * z
    out = np.where(expo < _EXP_FLOOR, 0.0, np.exp(np.maximum(expo, _EXP_FLOOR)))
    return out / (scale * math.sqrt(2.0 * math.pi))


def normal_logpdf(y, loc, scale):
    z = (np.asarray(y, dtype=float) - loc) / scale
    return -0.5 * z * z - np.log(scale) - _LOG_SQRT_2PI


def _finish(y, values):
    return float(values) if np.ndim(y) == 0 else values


def f0_eval(td: TrueDensity, y):
    """Evaluate the true density sum_j w_j (1/k) phi((y - theta_j) / k)."""
    yy = np.asarray(y, dtype=float)
    out = np.zeros_like(yy)
    for loc, w in zip(td.atoms, td.weights):
        if w > 0:
            out = out + w * normal_kernel(yy, loc, td.k)
    return _finish(y, out)


def f0_sample(td: TrueDensity, n: int, seed=None) -> np.ndarray:
    """Draw ``n`` i.i.d. observations from the true density."""
    if n < 1:
        raise ValueError("f0_sample needs n >= 1 (empty request)")
    rng = np.random.default_rng(seed)
    idx = rng.choice(len(td.atoms), size=n, p=np.asarray(td.weights))
    return np.asarray(td.atoms)[idx] + td.k * rng.standard_normal(n)


def base_convolution(bp: BasePrior, scale: float, y):
    """Integral of (1/scale) phi((y - theta)/scale) against G0.

    Closed form: the N(mu0, scale**2 + sigma0**2) density at ``y``.
    """
    if not scale > 0:
        raise ValueError(f"scale must be positive, got {scale!r}")
    return _finish(y, normal_kernel(y, bp.mu0, math.hypot(scale, bp.sigma0)))


def ew_density_eval(theta, sigma, alpha, bp: BasePrior, k, y):
    """EW predictive density.

    (alpha/(alpha+n)) A_n + (1/(alpha+n)) sum_i (1/(sigma+k)) phi((y - theta_i)/(sigma+k)),
    where A_n is :func:`base_convolution` at scale sigma + k and n = len(theta).
    """
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha!r}")
    theta = np.asarray(theta, dtype=float).ravel()
    n = theta.size
    scale = sigma + k
    yy = np.asarray(y, dtype=float)
    a_n = normal_kernel(yy, bp.mu0, math.hypot(scale, bp.sigma0))
    if n == 0:
        return _finish(y, a_n)
    kern = normal_kernel(yy[..., None], theta, scale).sum(axis=-1)
    return _finish(y, (alpha * a_n + kern) / (alpha + n))


def sb_density_eval(theta, weights, sigma, k, y):
    """SB mixture density sum_i pi_i (1/(sigma+k)) phi((y - theta_i)/(sigma+k)).

    ``weights=None`` gives the plain SB estimator with pi_i = 1/M; passing the
    uniform vector explicitly takes the identical arithmetic path.
    """
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    m = theta.size
    if weights is None:
        weights = np.full(m, 1.0 / m)
    else:
        weights = np.atleast_1d(np.asarray(weights, dtype=float))
        if weights.shape != theta.shape:
            raise ShapeError(f"{weights.size} weights for {m} atoms")
    kern = normal_kernel(np.asarray(y, dtype=float)[..., None], theta, sigma + k)
    return _finish(y, np.sum(kern * weights, axis=-1))


def mv_product_density_eval(theta_matrix, sigma, k, y):
    """p-variate SB density (1/M) sum_i prod_l (1/(sigma+k)) phi((y_l - theta_il)/(sigma+k)).

    ``theta_matrix`` has shape (M, p); ``y`` has shape (p,) or (..., p).
    """
    theta = np.asarray(theta_matrix, dtype=float)
    if theta.ndim == 1:
        theta = theta[:, None]
    if theta.ndim != 2:
        raise ShapeError("theta_matrix must be M x p")
    m, p = theta.shape
    yy = np.asarray(y, dtype=float)
    if yy.ndim == 0:
        yy = yy[None]
    if yy.shape[-1] != p:
        raise ShapeError(f"y has dimension {yy.shape[-1]}, atoms have {p}")
    kern = normal_kernel(yy[..., None, :], theta, sigma + k).prod(axis=-1)
    out = np.sum(kern * np.full(m, 1.0 / m), axis=-1)
    return float(out) if out.ndim == 0 else out


def polya_urn_sample(alpha: float, bp: BasePrior, m: int, seed=None) -> np.ndarray:
    """Sequential Polya-urn draw of m atoms from the DP(alpha G0) marginal."""
    if m < 1:
        raise ValueError("m must be >= 1")
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    rng = np.random.default_rng(seed)
    fresh = bp.sample(rng, size=m)
    u = rng.random(m)
    pick = rng.integers(0, np.maximum(np.arange(m), 1))
    atoms = np.empty(m)
    atoms[0] = fresh[0]
    for j in range(1, m):
        # copy with probability j / (alpha + j)
        if u[j] * (alpha + j) < j:
            atoms[j] = atoms[pick[j]]
        else:
            atoms[j] = fresh[j]
    return atoms


def expected_distinct(alpha: float, m: int) -> float:
    """Prior mean number of distinct atoms among m urn draws."""
    j = np.arange(m)
    return float(np.sum(alpha / (alpha + j)))
