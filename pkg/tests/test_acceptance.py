"""Acceptance criteria 1-12, each at its stated tolerance.

Every test prints (and records for the terminal summary) one PASS/FAIL
line, then asserts.  Run standalone with ``python3 tests/test_acceptance.py``.
"""

import math
import sys
import time
from pathlib import Path

import numpy as np
import pytest
from scipy import integrate, stats

sys.path.insert(0, str(Path(__file__).parent))

import oracles  # noqa: E402
from acceptance_report import record  # noqa: E402
from urnmise.config import parse_config  # noqa: E402
from urnmise.experiment import run_posterior_experiment, run_rate_curves  # noqa: E402
from urnmise.model import (  # noqa: E402
    BasePrior,
    ParamSchedules,
    TrueDensity,
    base_convolution,
    ew_density_eval,
    f0_eval,
    mv_product_density_eval,
    sb_density_eval,
)
from urnmise.rates import (  # noqa: E402
    RateInputs,
    Regime,
    comparison_ratios,
    empty_limit_log10,
    h_opt_prior,
    mise_ew_opt1,
    mise_order_ew,
    mise_order_sb,
    optimal_alpha_ew,
    prior_mise_opt,
    rate_ordering,
    rate_terms,
    wrong_model_check,
    wrong_model_target,
)
from urnmise.sampler import (  # noqa: E402
    EwState,
    make_sigma_prior,
    pooled_within_variance,
    run_ew_chain,
    run_sb_chain,
)


def _slope(x, y):
    return float(np.polyfit(np.log10(x), y, 1)[0])


def test_criterion_01_rate_figures():
    t0 = time.perf_counter()
    ns = np.geomspace(10, 1e6, 61)
    post_ok = prior_ok = True
    for omega in (0.05, 0.1):
        for t in (2.0, 5.0):
            s = ParamSchedules(omega=omega, b=0.2, t=t, r=3.0)
            for n in ns:
                rt = rate_terms(RateInputs(n, s))
                post_ok &= mise_order_sb(rt) < mise_order_ew(rt)
                prior_ok &= prior_mise_opt("EW", n, rt.alpha) < prior_mise_opt("SB", rt.m, rt.alpha)
    elapsed = time.perf_counter() - t0
    ok = post_ok and prior_ok and elapsed < 1.0
    record(1, ok, f"posterior SB<EW={post_ok}, prior EW<SB={prior_ok}, {elapsed:.3f}s")
    assert ok


def test_criterion_02_anchor_values():
    rt = rate_terms(RateInputs(10))
    ref = oracles.log10_terms(10, **oracles.DEFAULTS)
    ew, sb = mise_order_ew(rt), mise_order_sb(rt)
    ref_ew, ref_sb = oracles.mise_ew(10, **oracles.DEFAULTS), oracles.mise_sb(10, **oracles.DEFAULTS)
    checks = [
        abs(rt.H0_log + 0.511) <= 1e-3 and abs(ref["H0"] + 0.511) <= 1e-3,
        abs(rt.empty_term + 3.72) <= 0.05 and abs(ref["empty_term"] + 3.72) <= 0.05,
        abs(ew + 1.95) <= 0.05 and abs(ref_ew + 1.95) <= 0.05,
        abs(sb + 3.72) <= 0.05 and abs(ref_sb + 3.72) <= 0.05,
        abs(rt.H0_log - ref["H0"]) < 1e-9 and abs(rt.empty_term - ref["empty_term"]) < 1e-9,
        abs(ew - ref_ew) < 1e-9 and abs(sb - ref_sb) < 1e-9,
    ]
    ok = all(checks)
    record(2, ok, f"H0={rt.H0_log:.4f} empty={rt.empty_term:.3f} ew={ew:.3f} sb={sb:.3f} (oracle agrees to 1e-9)")
    assert ok


def test_criterion_03_comparison_ratios():
    t0 = time.perf_counter()
    ns = np.geomspace(1e2, 1e8, 25)
    good = [comparison_ratios(n, ParamSchedules(omega=0.1, b=0.2)) for n in ns]
    r1 = [g.ratio1 for g in good]
    r3 = [g.ratio3 for g in good]
    dec1 = all(b < a for a, b in zip(r1, r1[1:]))
    dec3 = all(b < a for a, b in zip(r3, r3[1:]))
    cond2 = all(g.cond2_holds for g in good)
    bad = [comparison_ratios(n, ParamSchedules(omega=0.1, b=0.6)).ratio3 for n in ns]
    bad_fails = not all(b < a for a, b in zip(bad, bad[1:]))
    elapsed = time.perf_counter() - t0
    ok = dec1 and dec3 and cond2 and bad_fails and elapsed < 1.0
    record(3, ok, f"ratio1 dec={dec1}, ratio3 dec={dec3}, cond2={cond2}, b=0.6 breaks ratio3={bad_fails}, {elapsed:.3f}s")
    assert ok


def test_criterion_04_bandwidth():
    ms = np.geomspace(1e2, 1e6, 21)
    slope = _slope(ms, np.log10([h_opt_prior(m) for m in ms]))
    worst = 0.0
    for m in (1e2, 1e3, 1e4, 1e6):
        h = h_opt_prior(m)
        grid = np.linspace(0.5 * h, 2 * h, 300_001)
        best = grid[np.argmin(1.0 / (m * grid) + grid**4)]
        worst = max(worst, abs(best - h) / h)
    ok = abs(slope + 0.2) <= 0.005 and worst <= 1e-4
    record(4, ok, f"h_opt slope={slope:.5f}, grid minimiser rel. error={worst:.2e}")
    assert ok


def test_criterion_05_optimal_alpha():
    rng = np.random.default_rng(2024)
    grid = np.geomspace(1e-16, 1e4, 10_000)
    step = math.log10(grid[1] / grid[0])
    misses = 0
    for _ in range(20):
        n = float(rng.uniform(10, 1000))
        t = float(rng.uniform(0.1, 0.5))
        c = float(rng.uniform(0.5, 1.5))
        res = optimal_alpha_ew(n, t, c, 5.0)
        best = grid[np.argmin(mise_ew_opt1(grid, n, t, c, 5.0))]
        misses += abs(math.log10(best) - res.log10_alpha_star) > step
    ns = np.geomspace(1e3, 1e6, 13)
    slope = _slope(ns, [optimal_alpha_ew(n, 0.4, 2.0, 1.0).log10_mise_opt for n in ns])
    ok = misses == 0 and abs(slope + 0.4) <= 0.02
    record(5, ok, f"grid mismatches={misses}/20, optimised EW slope={slope:.4f}")
    assert ok


def test_criterion_06_rate_ordering():
    res = rate_ordering(1e6, ParamSchedules(omega=0.3, b=0.35, t=0.3, r=0.3))
    ok = res.holds
    record(6, ok, f"SB={res.sb:.3f} EW={res.ew:.3f} FMISE={res.fmise:.3f} BR_GVV={res.br_gvv:.3f} at n=1e6")
    assert ok


def _quad(f):
    return integrate.quad(f, -np.inf, np.inf, epsabs=1e-13, epsrel=1e-12, limit=200)[0]


def test_criterion_07_oracle_equivalence():
    rng = np.random.default_rng(77)
    conv_err = 0.0
    for _ in range(100):
        bp = BasePrior(float(rng.uniform(-3, 3)), float(rng.uniform(0.2, 3)))
        scale = float(rng.uniform(0.2, 3))
        y = float(rng.uniform(-6, 6))
        want = _quad(lambda th: stats.norm.pdf(y, th, scale) * stats.norm.pdf(th, bp.mu0, bp.sigma0))
        conv_err = max(conv_err, abs(base_convolution(bp, scale, y) - want),
                       abs(wrong_model_target(bp, scale, y) - want))

    bp = BasePrior(2.0, 1.0)
    td = TrueDensity((-0.75, 0.75), (0.5, 0.5))
    theta = rng.normal(size=6)
    pi = rng.dirichlet(np.ones(6))
    tmv = rng.normal(size=(4, 2))
    ys = np.linspace(-14, 14, 2801)
    mv_vals = mv_product_density_eval(tmv, 0.3, 1.0, np.stack(np.meshgrid(ys, ys, indexing="ij"), axis=-1))
    totals = [
        _quad(lambda y: f0_eval(td, y)),
        _quad(lambda y: ew_density_eval(theta, 0.4, 1.7, bp, 1.0, y)),
        _quad(lambda y: sb_density_eval(theta, None, 0.4, 1.0, y)),
        _quad(lambda y: sb_density_eval(theta, pi, 0.4, 1.0, y)),
        _quad(lambda y: base_convolution(bp, 1.3, y)),
        _quad(lambda y: wrong_model_target(bp, 1.0, y)),
        float(integrate.simpson(integrate.simpson(mv_vals, x=ys, axis=1), x=ys)),
    ]
    norm_err = max(abs(t - 1.0) for t in totals)

    pool_err = 0.0
    for _ in range(1000):
        n = int(rng.integers(1, 40))
        y = rng.normal(size=n) * rng.uniform(0.1, 10)
        z = rng.integers(0, 6, size=n)
        w, b = pooled_within_variance(y, z)
        pool_err = max(pool_err, abs(w + b - y.var()))
    ok = conv_err < 1e-10 and norm_err < 1e-8 and pool_err < 1e-12
    record(7, ok, f"convolution err={conv_err:.1e}, normalisation err={norm_err:.1e}, pooled split err={pool_err:.1e}")
    assert ok


def test_criterion_08_sampler_properties():
    t0 = time.perf_counter()
    bp = BasePrior(0.0, 1.0)
    sp = make_sigma_prior(1.0, 0.01)
    draws = run_ew_chain([5.0], 1e12, bp, sp, burn_in=10, retained=10_000, seed=8,
                         init=EwState(np.array([5.0]), 1.0), update_sigma=False)
    mean = float(np.mean([d.theta[0] for d in draws]))
    conj_ok = abs(mean - 2.5) <= 0.05

    locked = all(
        np.unique(run_ew_chain([-1.0, 1.0], 1e-12, bp, sp, burn_in=0, retained=1, seed=s)[0].theta).size == 1
        for s in range(50)
    )
    # alpha huge: every atom is a fresh draw, so no two coincide
    fresh = all(
        np.unique(run_ew_chain(np.linspace(-1, 1, 10), 1e12, bp, sp, burn_in=0, retained=1, seed=s)[0].theta).size == 10
        for s in range(50)
    )

    rng = np.random.default_rng(8)
    y = np.concatenate([rng.normal(-5, 0.3, 20), rng.normal(5, 0.3, 20)])
    truth = np.repeat([0, 1], 20)
    sb = run_sb_chain(y, 2, 1.0, BasePrior(0.0, 5.0), make_sigma_prior(0.5, 1e-3), burn_in=500, retained=2000, seed=12)
    purity = float(np.mean([max(np.mean(d.z == truth), np.mean(d.z != truth)) for d in sb]))
    elapsed = time.perf_counter() - t0
    ok = conj_ok and locked and fresh and purity >= 0.95 and elapsed < 30
    record(8, ok, f"conjugate mean={mean:.4f}, urn-lock={locked}, fresh={fresh}, purity={purity:.4f}, {elapsed:.1f}s")
    assert ok


DESK_TREND = """
mode = simulate
t = 0.1
k = 0.3
n_list = 50, 200, 800
reps = 8
burn_in = 300
retained = 700
seed = 1
"""


@pytest.mark.slow
def test_criterion_09_desk_trend(tmp_path):
    t0 = time.perf_counter()
    cfg = parse_config(DESK_TREND + f"out_prefix = {tmp_path / 'desk'}\n")
    res = run_posterior_experiment(cfg)
    elapsed = time.perf_counter() - t0
    ew, sb = res.mean_mise("EW"), res.mean_mise("SB")
    se = np.array([s["se_mise2"] for s in res.summary])
    dec = bool(np.all(np.diff(ew) < 0) and np.all(np.diff(sb) < 0))
    ok = dec and np.all(np.isfinite(se)) and elapsed < 600
    fmt = lambda v: "/".join(f"{x:.4f}" for x in v)  # noqa: E731
    record(9, ok, f"EW MISE2 {fmt(ew)}, SB MISE2 {fmt(sb)} (n=50/200/800), se finite, {elapsed:.0f}s")
    assert ok


def test_criterion_10_wrong_model(tmp_path):
    text = "mode = simulate\nomega = 2\nt = 0.1\nn_list = 500\nreps = 1\nburn_in = 200\nretained = 500\nseed = 1\n"
    res = run_posterior_experiment(parse_config(text + f"out_prefix = {tmp_path / 'wm'}\n"))
    sup = res.wrong_model[500]["EW_sup"]
    regimes = (
        wrong_model_check(0.5, 0.2) is Regime.BOTH_CONSISTENT
        and wrong_model_check(2.0, 0.3) is Regime.EW_WRONG_SB_OK
        and wrong_model_check(3.0, 1.2, 3.0) is Regime.BOTH_CAN_BE_WRONG
    )
    ok = sup < 0.02 and regimes
    record(10, ok, f"EW sup distance to G0 convolution={sup:.4f}, regime examples={regimes}")
    assert ok


def test_criterion_11_empty_limit():
    val = empty_limit_log10(3.0, 1.2, 1e6)
    ok = abs(val) < 0.01
    record(11, ok, f"log10[(a/(a+M))^M (1-1/M)^n] at n=1e6 = {val:.5f}")
    assert ok


def test_criterion_12_determinism(tmp_path):
    rates = "mode = rates\nomega = 0.05\nt = 2\n"
    sim = "mode = simulate\nt = 0.1\nn_list = 20, 40\nreps = 2\nburn_in = 20\nretained = 30\nseed = 11\n"
    same = True
    for text, kind, files in ((rates, "rates", ("rates.csv", "rates.svg")), (sim, "sim", ("sim.csv", "sim.svg"))):
        for run in ("a", "b"):
            cfg = parse_config(text + f"out_prefix = {tmp_path / (kind + run)}\n")
            (run_rate_curves if kind == "rates" else run_posterior_experiment)(cfg)
        for f in files:
            same &= (tmp_path / f"{kind}a_{f}").read_bytes() == (tmp_path / f"{kind}b_{f}").read_bytes()
    record(12, same, f"byte-identical CSV and SVG across two runs={same}")
    assert same


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
