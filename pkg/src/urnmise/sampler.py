"""Gibbs samplers for the EW and SB posteriors and posterior MISE summaries.

Both samplers use the marginal Polya-urn conditionals: each atom is redrawn
from a mixture of point masses on the other atoms and a fresh draw from the
conjugate G0-posterior.  The kernel scale sigma is updated by griddy Gibbs.

Allocations ``z`` are 0-based component indices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.special import logsumexp

from .model import (
    BasePrior,
    TrueDensity,
    f0_eval,
    normal_kernel,
    normal_logpdf,
    sb_density_eval,
)

_LOG_2PI = math.log(2.0 * math.pi)


class ChainNumericError(FloatingPointError):
    """Raised when a conditional weight vector is not finite."""

    def __init__(self, index, what="likelihood"):
        super().__init__(f"non-finite {what} at index {index}")
        self.index = index


class InsufficientSampleError(ValueError):
    pass


@dataclass(frozen=True)
class SigmaPrior:
    """Two-piece prior on the kernel scale sigma.

    With probability 1 - eps_n, sigma ~ Uniform(0, sigma_n]; otherwise
    sigma = sigma_n * (1 + E) with E ~ Exp(1).  ``grid`` holds the support
    points of the griddy-Gibbs update.
    """

    sigma_n: float
    eps_n: float
    bn_ratio: float = 0.5
    grid: np.ndarray = field(default=None, repr=False, compare=False)

    @property
    def b_n(self):
        return self.bn_ratio * self.sigma_n

    def cdf(self, s):
        s = np.asarray(s, dtype=float)
        below = (1.0 - self.eps_n) * np.clip(s, 0.0, self.sigma_n) / self.sigma_n
        above = 1.0 - self.eps_n * np.exp(-np.maximum(s - self.sigma_n, 0.0) / self.sigma_n)
        return np.where(s <= self.sigma_n, below, above)

    def interval_mass(self, lo, hi):
        return float(self.cdf(hi) - self.cdf(lo))

    def logpdf(self, s):
        s = np.asarray(s, dtype=float)
        inside = math.log1p(-self.eps_n) - math.log(self.sigma_n)
        tail = math.log(self.eps_n) - math.log(self.sigma_n) - (s - self.sigma_n) / self.sigma_n
        out = np.where(s <= self.sigma_n, inside, tail)
        return np.where(s > 0, out, -np.inf)

    def sample(self, rng, size=None):
        u = rng.random(size)
        body = self.sigma_n * (1.0 - rng.random(size))
        tail = self.sigma_n * (1.0 + rng.exponential(size=size))
        return np.where(u < self.eps_n, tail, body)


def make_sigma_prior(sigma_n, eps_n, bn_ratio=0.5, grid_size=200) -> SigmaPrior:
    """Build the sigma prior and its griddy-Gibbs grid.

    The grid is log-spaced over [b_n / 10, 20 sigma_n].
    """
    if not 0 < eps_n < 1:
        raise ValueError(f"eps_n must lie in (0, 1), got {eps_n!r}")
    if not sigma_n > 0:
        raise ValueError(f"sigma_n must be positive, got {sigma_n!r}")
    if not 0 < bn_ratio < 1:
        raise ValueError("bn_ratio must lie in (0, 1)")
    if grid_size < 2:
        raise ValueError("grid_size must be >= 2")
    lo = bn_ratio * sigma_n / 10.0
    grid = np.geomspace(lo, 20.0 * sigma_n, grid_size)
    return SigmaPrior(sigma_n=float(sigma_n), eps_n=float(eps_n), bn_ratio=float(bn_ratio), grid=grid)


@dataclass
class EwState:
    theta: np.ndarray
    sigma: float

    def copy(self):
        return EwState(self.theta.copy(), self.sigma)


@dataclass
class SbState:
    z: np.ndarray
    theta: np.ndarray
    sigma: float
    weights: Optional[np.ndarray] = None

    @property
    def m(self):
        return self.theta.size

    def counts(self):
        return np.bincount(self.z, minlength=self.theta.size)

    def copy(self):
        w = None if self.weights is None else self.weights.copy()
        return SbState(self.z.copy(), self.theta.copy(), self.sigma, w)


@dataclass
class PosteriorSummary:
    grid: np.ndarray
    mean_density: np.ndarray
    var_density: np.ndarray
    mise2: float
    empty_component_freq: float = 0.0


# ---------------------------------------------------------------------------
# conjugate normal pieces


def _conjugate_posterior(total, count, sigma, bp: BasePrior):
    """Mean and variance of theta | data under N(theta, sigma^2) likelihood and G0."""
    prec = 1.0 / bp.sigma0**2 + count / sigma**2
    mean = (bp.mu0 / bp.sigma0**2 + total / sigma**2) / prec
    return mean, 1.0 / prec


def _log_marginal(ys, sigma, bp: BasePrior):
    """log of the integral of prod_t N(y_t; theta, sigma^2) dG0(theta)."""
    m = ys.size
    if m == 0:
        return 0.0
    ybar = ys.mean()
    ss = float(np.sum((ys - ybar) ** 2))
    # the cluster mean carries all information about theta
    v = sigma**2 / m + bp.sigma0**2
    return (
        -0.5 * (m - 1) * (_LOG_2PI + 2.0 * math.log(sigma))
        - 0.5 * math.log(m)
        - ss / (2.0 * sigma**2)
        - 0.5 * (_LOG_2PI + math.log(v))
        - (ybar - bp.mu0) ** 2 / (2.0 * v)
    )


def _log_lik_at(ys, atoms, sigma):
    """log prod_t N(y_t; atom, sigma^2) for every candidate atom."""
    m = ys.size
    if m == 0:
        return np.zeros_like(atoms)
    ybar = ys.mean()
    ss = float(np.sum((ys - ybar) ** 2))
    return -0.5 * m * (_LOG_2PI + 2.0 * math.log(sigma)) - (ss + m * (ybar - atoms) ** 2) / (2.0 * sigma**2)


def _normalize(logw, index):
    if not np.all(np.isfinite(logw) | (logw == -np.inf)) or np.all(logw == -np.inf):
        raise ChainNumericError(index)
    return np.exp(logw - logsumexp(logw))


def ew_theta_weights(i, theta, data, sigma, alpha, bp: BasePrior, use_likelihood=True):
    """Conditional law of theta_i in the EW chain.

    Returns probabilities over ``[theta_l for l != i] + [fresh]``; a fresh
    value is drawn from the conjugate G0-posterior given data[i].
    """
    others = np.delete(np.asarray(theta, dtype=float), i)
    if use_likelihood:
        logw = np.append(
            normal_logpdf(data[i], others, sigma),
            math.log(alpha) + float(normal_logpdf(data[i], bp.mu0, math.hypot(sigma, bp.sigma0))),
        )
    else:
        logw = np.append(np.zeros(others.size), math.log(alpha))
    return _normalize(logw, i)


def sb_theta_weights(j, z, theta, data, sigma, alpha, bp: BasePrior):
    """Conditional law of atom j in the SB chain.

    Returns probabilities over ``[theta_l for l != j] + [fresh]``, the urn
    prior tilted by the likelihood of the data allocated to component j.
    """
    theta = np.asarray(theta, dtype=float)
    m = theta.size
    ys = np.asarray(data, dtype=float)[np.asarray(z) == j]
    others = np.delete(theta, j)
    log_denom = math.log(alpha + m - 1)
    logw = np.append(
        _log_lik_at(ys, others, sigma) - log_denom,
        math.log(alpha) - log_denom + _log_marginal(ys, sigma, bp),
    )
    return _normalize(logw, j)


def _pick(probs, u):
    idx = int(np.searchsorted(np.cumsum(probs), u * probs.sum(), side="right"))
    return min(idx, probs.size - 1)


def _sigma_update(rng, sp: SigmaPrior, resid_ss, n, use_likelihood=True):
    grid = sp.grid
    logw = sp.logpdf(grid) + np.log(np.gradient(grid))
    if use_likelihood:
        logw = logw - n * np.log(grid) - resid_ss / (2.0 * grid**2)
    if not np.any(np.isfinite(logw)):
        raise ChainNumericError("sigma", "sigma grid weight")
    return float(grid[_pick(np.exp(logw - logsumexp(logw)), rng.random())])


# ---------------------------------------------------------------------------
# EW chain


def ew_gibbs_step(
    state: EwState,
    data,
    alpha,
    bp: BasePrior,
    sp: SigmaPrior,
    seed=None,
    *,
    update_sigma=True,
    refresh_clusters=True,
    use_likelihood=True,
) -> EwState:
    """One full sweep of the EW sampler: every theta_i, then sigma.

    ``refresh_clusters`` adds a redraw of each distinct atom value from its
    conjugate posterior given all data sharing it; it leaves the target
    invariant and speeds up mixing.  ``use_likelihood=False`` turns the data
    weight off and samples the Polya-urn prior.
    """
    rng = np.random.default_rng(seed)
    y = np.asarray(data, dtype=float)
    theta = np.array(state.theta, dtype=float)
    n = y.size
    if theta.size != n:
        raise ValueError(f"{theta.size} atoms for {n} observations")
    if not np.all(np.isfinite(y)):
        raise ChainNumericError(int(np.flatnonzero(~np.isfinite(y))[0]))
    sigma = state.sigma
    log_alpha = math.log(alpha)
    s2 = sigma**2
    post_var = 1.0 / (1.0 / bp.sigma0**2 + 1.0 / s2)
    post_mean = post_var * (bp.mu0 / bp.sigma0**2 + y / s2)
    fresh_logw = log_alpha + normal_logpdf(y, bp.mu0, math.hypot(sigma, bp.sigma0))
    u = rng.random(n)
    eps = rng.standard_normal(n)

    for i in range(n):
        if use_likelihood:
            logw = -0.5 * (y[i] - theta) ** 2 / s2
            logw[i] = fresh_logw[i] + 0.5 * _LOG_2PI + math.log(sigma)
        else:
            logw = np.zeros(n)
            logw[i] = log_alpha
        mx = logw.max()
        if not np.isfinite(mx):
            raise ChainNumericError(i)
        w = np.exp(logw - mx)
        pick = _pick(w, u[i])
        if pick == i:
            if use_likelihood:
                theta[i] = post_mean[i] + math.sqrt(post_var) * eps[i]
            else:
                theta[i] = bp.mu0 + bp.sigma0 * eps[i]
        else:
            theta[i] = theta[pick]

    if refresh_clusters:
        values, inv = np.unique(theta, return_inverse=True)
        if use_likelihood:
            counts = np.bincount(inv, minlength=values.size)
            totals = np.bincount(inv, weights=y, minlength=values.size)
            mean, var = _conjugate_posterior(totals, counts, sigma, bp)
            values = mean + np.sqrt(var) * rng.standard_normal(values.size)
        else:
            values = bp.sample(rng, size=values.size)
        theta = values[inv]

    if update_sigma:
        sigma = _sigma_update(rng, sp, float(np.sum((y - theta) ** 2)), n, use_likelihood)
    return EwState(theta, sigma)


# ---------------------------------------------------------------------------
# SB chain


def sb_gibbs_step(
    state: SbState,
    data,
    alpha,
    bp: BasePrior,
    sp: SigmaPrior,
    seed=None,
    *,
    beta=None,
    update_sigma=True,
) -> SbState:
    """One sweep of the SB sampler: allocations, atoms, sigma, then weights.

    When ``state.weights`` is set the modified model is used: allocations
    are weighted by pi and pi | z ~ Dirichlet(beta + counts).
    """
    rng = np.random.default_rng(seed)
    y = np.asarray(data, dtype=float)
    if not np.all(np.isfinite(y)):
        raise ChainNumericError(int(np.flatnonzero(~np.isfinite(y))[0]))
    theta = np.array(state.theta, dtype=float)
    m = theta.size
    if m < 1:
        raise ValueError("SB model needs M >= 1")
    sigma = state.sigma
    weights = None if state.weights is None else np.array(state.weights, dtype=float)
    if weights is not None:
        if beta is None:
            raise ValueError("modified SB state needs the Dirichlet parameters beta")
        beta = np.asarray(beta, dtype=float)
        if beta.shape != (m,) or np.any(beta <= 0):
            raise ValueError("beta must be M positive values")

    # allocations are conditionally independent given atoms and sigma
    logits = -0.5 * (y[:, None] - theta[None, :]) ** 2 / sigma**2
    if weights is not None:
        with np.errstate(divide="ignore"):
            logits = logits + np.log(weights)[None, :]
    mx = logits.max(axis=1, keepdims=True)
    if not np.all(np.isfinite(mx)):
        raise ChainNumericError(int(np.flatnonzero(~np.isfinite(mx[:, 0]))[0]))
    cum = np.cumsum(np.exp(logits - mx), axis=1)
    u = rng.random(y.size)[:, None] * cum[:, -1:]
    z = np.minimum((cum <= u).sum(axis=1), m - 1)

    for j in range(m):
        probs = sb_theta_weights(j, z, theta, y, sigma, alpha, bp)
        pick = _pick(probs, rng.random())
        if pick == m - 1:
            members = y[z == j]
            mean, var = _conjugate_posterior(members.sum(), members.size, sigma, bp)
            theta[j] = mean + math.sqrt(var) * rng.standard_normal()
        else:
            theta[j] = theta[pick if pick < j else pick + 1]

    if update_sigma:
        sigma = _sigma_update(rng, sp, float(np.sum((y - theta[z]) ** 2)), y.size)

    if weights is not None:
        weights = rng.dirichlet(beta + np.bincount(z, minlength=m))
    return SbState(z, theta, sigma, weights)


# ---------------------------------------------------------------------------
# chain drivers


def run_ew_chain(data, alpha, bp, sp, burn_in=1000, retained=4000, seed=None, init=None, **kw):
    rng = np.random.default_rng(seed)
    y = np.asarray(data, dtype=float)
    state = init.copy() if init is not None else EwState(y.copy(), 0.5 * sp.sigma_n)
    draws = []
    for sweep in range(burn_in + retained):
        state = ew_gibbs_step(state, y, alpha, bp, sp, rng, **kw)
        if sweep >= burn_in:
            draws.append(state)
    return draws


def initial_sb_state(data, m, sigma, beta=None) -> SbState:
    """Atoms at evenly spaced data quantiles, each point allocated to its nearest atom."""
    y = np.asarray(data, dtype=float)
    theta = np.quantile(y, (np.arange(m) + 0.5) / m)
    z = np.argmin(np.abs(y[:, None] - theta[None, :]), axis=1)
    weights = None if beta is None else np.asarray(beta, dtype=float) / np.sum(beta)
    return SbState(z, theta, sigma, weights)


def run_sb_chain(data, m, alpha, bp, sp, burn_in=1000, retained=4000, seed=None, init=None, beta=None, **kw):
    rng = np.random.default_rng(seed)
    y = np.asarray(data, dtype=float)
    state = init.copy() if init is not None else initial_sb_state(y, m, 0.5 * sp.sigma_n, beta)
    draws = []
    for sweep in range(burn_in + retained):
        state = sb_gibbs_step(state, y, alpha, bp, sp, rng, beta=beta, **kw)
        if sweep >= burn_in:
            draws.append(state)
    return draws


# ---------------------------------------------------------------------------
# summaries


def density_draws(draws, model, grid, *, k, alpha=None, bp=None) -> np.ndarray:
    """Evaluate the model's density estimator on ``grid`` for every draw (D x G)."""
    grid = np.asarray(grid, dtype=float)
    tag = model.upper()
    rows = []
    for s in draws:
        if tag == "EW":
            # tied atoms contribute identical kernels
            vals, counts = np.unique(s.theta, return_counts=True)
            scale = s.sigma + k
            kern = normal_kernel(grid[:, None], vals, scale) @ counts
            a_n = normal_kernel(grid, bp.mu0, math.hypot(scale, bp.sigma0))
            rows.append((alpha * a_n + kern) / (alpha + s.theta.size))
        elif tag == "SB":
            rows.append(sb_density_eval(s.theta, s.weights, s.sigma, k, grid))
        else:
            raise ValueError(f"unknown model tag {model!r}")
    return np.asarray(rows)


def summarize_density_draws(values, grid, f0_values, empty_freq=0.0) -> PosteriorSummary:
    """Posterior mean, variance and f0-weighted MISE from a D x G array of densities."""
    values = np.asarray(values, dtype=float)
    if values.ndim != 2 or values.shape[0] < 2:
        raise InsufficientSampleError("need at least 2 posterior draws")
    grid = np.asarray(grid, dtype=float)
    if np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be strictly increasing")
    # shift by the first draw so identical draws give exactly zero spread
    dev = values - values[0]
    mean = values[0] + dev.mean(axis=0)
    var = dev.var(axis=0)
    f0v = np.asarray(f0_values, dtype=float)
    mise2 = float(np.trapezoid((var + (mean - f0v) ** 2) * f0v, grid))
    return PosteriorSummary(grid, mean, var, max(mise2, 0.0), float(empty_freq))


def posterior_density_summary(draws, model, grid, f0: TrueDensity, *, alpha=None, bp=None) -> PosteriorSummary:
    """MISE2 = integral of [Var(f_hat | Y) + (E(f_hat | Y) - f0)^2] f0 dy over ``grid``.

    ``draws`` are chain states of the given ``model`` ("EW" or "SB").
    """
    if len(draws) < 2:
        raise InsufficientSampleError("need at least 2 posterior draws")
    values = density_draws(draws, model, grid, k=f0.k, alpha=alpha, bp=bp)
    empty = 0.0
    if model.upper() == "SB":
        empty = empty_component_frequency(draws, draws[0].theta.size)
    return summarize_density_draws(values, grid, f0_eval(f0, np.asarray(grid, dtype=float)), empty)


def pooled_within_variance(data, z):
    """Split the MLE variance of ``data`` into within- and between-group parts."""
    y = np.asarray(data, dtype=float)
    z = np.asarray(z)
    if y.size == 0:
        raise ValueError("pooled_within_variance needs nonempty data")
    if z.shape != y.shape:
        raise ValueError("data and allocations differ in length")
    _, inv = np.unique(z, return_inverse=True)
    counts = np.bincount(inv)
    means = np.bincount(inv, weights=y) / counts
    n = y.size
    within = float(np.sum((y - means[inv]) ** 2)) / n
    between = float(np.sum(counts * (means - y.mean()) ** 2)) / n
    return within, between


def empty_component_frequency(chain: Sequence[SbState], m) -> float:
    """Fraction of draws in which at least one of the m components holds no data."""
    if len(chain) == 0:
        return 0.0
    hits = sum(np.bincount(s.z, minlength=m)[:m].min() == 0 for s in chain)
    return hits / len(chain)


def distinct_count(theta) -> int:
    return int(np.unique(theta).size)
