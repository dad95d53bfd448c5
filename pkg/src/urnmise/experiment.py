"""Rate-curve and posterior-simulation experiments with CSV / SVG output."""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import ExperimentConfig
from .model import f0_sample
from .rates import (
    RateInputs,
    br_gvv,
    fmise,
    mise_order_ew,
    mise_order_largep,
    mise_order_sb,
    prior_mise_opt,
    rate_terms,
    wrong_model_target,
)
from .sampler import (
    ChainNumericError,
    make_sigma_prior,
    posterior_density_summary,
    run_ew_chain,
    run_sb_chain,
)
from .svg import CurveSet, emit_plot

RATE_COLUMNS = (
    "log10_alpha_frac_sq",
    "log10_B_n",
    "log10_eps_star_n",
    "log10_sigma_n_sq",
    "log10_empty",
    "log10_M_B_M",
    "log10_eps_star_M",
    "log10_mise_ew",
    "log10_mise_sb",
    "log10_prior_ew",
    "log10_prior_sb",
    "log10_fmise",
    "log10_br_gvv",
)
LARGEP_COLUMNS = (
    "log10_p_B_n",
    "log10_M_p_B_M",
    "log10_eps_L_n",
    "log10_eps_L_M",
    "log10_mise_ew_largep",
    "log10_mise_sb_largep",
)
SIM_COLUMNS = ("n", "rep", "model", "mise2", "empty_freq", "status")

# series drawn in the rate figure, keyed by legend label
_PLOT_SERIES = {
    "EW": "log10_mise_ew",
    "SB": "log10_mise_sb",
    "EW prior": "log10_prior_ew",
    "SB prior": "log10_prior_sb",
    "n^-2/5": "log10_fmise",
    "n^-2/5 (log n)^4/5": "log10_br_gvv",
}


def _num(v) -> str:
    return repr(float(v))


def _out(cfg: ExperimentConfig, suffix) -> Path:
    path = Path(f"{cfg.out_prefix}_{suffix}")
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


# ---------------------------------------------------------------------------
# analytic rate curves


def rate_row(n, cfg: ExperimentConfig) -> dict:
    s = cfg.schedules
    rt = rate_terms(RateInputs(n, s, cfg.bp, cfg.p))
    row = {
        "log10_alpha_frac_sq": rt.alpha_frac_sq,
        "log10_B_n": rt.B_n,
        "log10_eps_star_n": rt.eps_star_n,
        "log10_sigma_n_sq": rt.sigma_n_sq,
        "log10_empty": rt.empty_term,
        "log10_M_B_M": rt.M_B_M,
        "log10_eps_star_M": rt.eps_star_M,
        "log10_mise_ew": mise_order_ew(rt),
        "log10_mise_sb": mise_order_sb(rt),
        "log10_prior_ew": prior_mise_opt("EW", n, rt.alpha),
        "log10_prior_sb": prior_mise_opt("SB", rt.m, rt.alpha),
        "log10_fmise": fmise(n),
        "log10_br_gvv": br_gvv(n),
    }
    if cfg.p is not None:
        row.update(
            log10_p_B_n=rt.p_B_n,
            log10_M_p_B_M=rt.M_p_B_M,
            log10_eps_L_n=rt.eps_L_n,
            log10_eps_L_M=rt.eps_L_M,
            log10_mise_ew_largep=mise_order_largep(rt, "EW"),
            log10_mise_sb_largep=mise_order_largep(rt, "SB"),
        )
    return row


def compute_rate_curves(cfg: ExperimentConfig) -> CurveSet:
    rows = [rate_row(n, cfg) for n in cfg.n_list]
    cols = RATE_COLUMNS + (LARGEP_COLUMNS if cfg.p is not None else ())
    return CurveSet(np.asarray(cfg.n_list, dtype=float), {c: [r[c] for r in rows] for c in cols})


def write_rate_csv(curves: CurveSet, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        # all O(.) constants are set to 1: the values are orders, not calibrated errors
        w.writerow(["n", *curves.series])
        for i, n in enumerate(curves.x):
            w.writerow([_num(n), *(_num(v[i]) for v in curves.series.values())])


def read_rate_csv(path) -> CurveSet:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    data = np.array([[float(x) for x in r] for r in body], dtype=float).reshape(len(body), len(header))
    return CurveSet(data[:, 0], {name: data[:, j] for j, name in enumerate(header) if j > 0})


def plot_curves(curves: CurveSet, path, title=""):
    series = {label: curves.series[col] for label, col in _PLOT_SERIES.items() if col in curves.series}
    return emit_plot(CurveSet(curves.x, series, title=title), path)


def run_rate_curves(cfg: ExperimentConfig) -> CurveSet:
    """Evaluate every rate term over ``cfg.n_list``; write ``<prefix>_rates.csv`` and ``.svg``."""
    curves = compute_rate_curves(cfg)
    write_rate_csv(curves, _out(cfg, "rates.csv"))
    s = cfg.schedules
    plot_curves(curves, _out(cfg, "rates.svg"), title=f"MISE orders (omega={s.omega:g}, b={s.b:g}, t={s.t:g}, r={s.r:g})")
    return curves


# ---------------------------------------------------------------------------
# posterior simulation


@dataclass
class ReplicateResult:
    n: int
    rep: int
    rows: list
    mean_density: dict = field(default_factory=dict)


@dataclass
class SimulationResult:
    rows: list
    summary: list
    grid: np.ndarray
    wrong_model: dict = field(default_factory=dict)
    paths: list = field(default_factory=list)

    def mean_mise(self, model):
        return np.array([s["mean_mise2"] for s in self.summary if s["model"] == model])


def replicate_seeds(seed, n, rep):
    """Child seeds (data, EW chain, SB chain) for one (n, replicate) cell.

    Derived by SeedSequence hashing, so results do not depend on which worker
    runs the cell or in what order.  The data seed depends on ``rep`` only:
    every n of a replicate uses a prefix of the same i.i.d. stream, which
    makes the differences between sample sizes far less noisy.
    """
    data = np.random.SeedSequence(entropy=seed, spawn_key=(int(rep),))
    ew, sb = np.random.SeedSequence(entropy=seed, spawn_key=(int(rep), int(n))).spawn(2)
    return data, ew, sb


def eval_grid(cfg: ExperimentConfig):
    lo, hi = cfg.grid_bounds()
    return np.linspace(lo, hi, cfg.grid_points)


def _status(exc):
    return f"failed: {type(exc).__name__}: {exc}".replace(",", ";").replace("\n", " ")


def run_replicate(cfg: ExperimentConfig, n, rep) -> ReplicateResult:
    s = cfg.schedules
    data_ss, ew_ss, sb_ss = replicate_seeds(cfg.seed, n, rep)
    grid = eval_grid(cfg)
    alpha = s.alpha(n)
    out = ReplicateResult(n, rep, [])
    try:
        y = f0_sample(cfg.td, max(cfg.n_list), np.random.default_rng(data_ss))[:n]
        sp = make_sigma_prior(s.sigma_n(n), s.eps_n(n), s.bn_ratio, cfg.sigma_grid_size)
    except (ValueError, FloatingPointError) as exc:
        for model in ("EW", "SB"):
            out.rows.append(dict(n=n, rep=rep, model=model, mise2=math.nan, empty_freq=math.nan, status=_status(exc)))
        return out

    runs = (
        ("EW", lambda: run_ew_chain(y, alpha, cfg.bp, sp, cfg.burn_in, cfg.retained, np.random.default_rng(ew_ss))),
        ("SB", lambda: run_sb_chain(y, s.m_count(n), alpha, cfg.bp, sp, cfg.burn_in, cfg.retained,
                                    np.random.default_rng(sb_ss))),
    )
    for model, run in runs:
        try:
            summ = posterior_density_summary(run(), model, grid, cfg.td, alpha=alpha, bp=cfg.bp)
        except (ChainNumericError, FloatingPointError, ValueError) as exc:
            out.rows.append(dict(n=n, rep=rep, model=model, mise2=math.nan, empty_freq=math.nan, status=_status(exc)))
            continue
        out.rows.append(dict(n=n, rep=rep, model=model, mise2=summ.mise2,
                             empty_freq=summ.empty_component_freq, status="ok"))
        out.mean_density[model] = summ.mean_density
    return out


def _run_task(task):
    return run_replicate(*task)


def _summarize(rows, n_list):
    summary = []
    for n in n_list:
        for model in ("EW", "SB"):
            ok = [r for r in rows if r["n"] == n and r["model"] == model and r["status"] == "ok"]
            vals = np.array([r["mise2"] for r in ok])
            empty = np.array([r["empty_freq"] for r in ok])
            k = vals.size
            summary.append(dict(
                n=n,
                model=model,
                mean_mise2=float(vals.mean()) if k else math.nan,
                se_mise2=float(vals.std(ddof=1) / math.sqrt(k)) if k > 1 else math.nan,
                mean_empty_freq=float(empty.mean()) if k else math.nan,
                ok_reps=k,
            ))
    return summary


def _write_dicts(path, columns, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_num(r[c]) if isinstance(r[c], float) else r[c] for c in columns])


def run_posterior_experiment(cfg: ExperimentConfig, workers: int = 1) -> SimulationResult:
    """Run EW and SB chains for every (n, replicate) and write the MISE tables.

    Files: ``<prefix>_sim.csv`` (one row per n, rep, model),
    ``<prefix>_sim_summary.csv`` (mean and standard error over replicates),
    ``<prefix>_sim.svg`` and, when omega > 1, ``<prefix>_wrong_model.csv``
    with replicate-averaged posterior mean densities next to the G0-convolution
    limit.
    """
    tasks = [(cfg, n, rep) for n in cfg.n_list for rep in range(cfg.reps)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_task, tasks))
    else:
        results = [_run_task(t) for t in tasks]
    results.sort(key=lambda r: (r.n, r.rep))

    rows = [row for r in results for row in r.rows]
    summary = _summarize(rows, cfg.n_list)
    grid = eval_grid(cfg)
    res = SimulationResult(rows, summary, grid)

    res.paths.append(_out(cfg, "sim.csv"))
    _write_dicts(res.paths[-1], SIM_COLUMNS, rows)
    res.paths.append(_out(cfg, "sim_summary.csv"))
    _write_dicts(res.paths[-1], ("n", "model", "mean_mise2", "se_mise2", "mean_empty_freq", "ok_reps"), summary)

    with np.errstate(divide="ignore"):
        series = {m: np.log10(res.mean_mise(m)) for m in ("EW", "SB")}
    res.paths.append(_out(cfg, "sim.svg"))
    emit_plot(CurveSet(cfg.n_list, series, title="empirical posterior MISE (log10)"), res.paths[-1])

    if cfg.schedules.omega > 1:
        target = wrong_model_target(cfg.bp, cfg.td.k, grid)
        wm_rows = []
        for n in cfg.n_list:
            entry = {"target": target}
            for model in ("EW", "SB"):
                curves = [r.mean_density[model] for r in results if r.n == n and model in r.mean_density]
                mean = np.mean(curves, axis=0) if curves else np.full(grid.size, math.nan)
                entry[model] = mean
                entry[f"{model}_sup"] = float(np.max(np.abs(mean - target)))
            res.wrong_model[n] = entry
            for j, yv in enumerate(grid):
                wm_rows.append(dict(n=n, y=float(yv), ew_mean_density=float(entry["EW"][j]),
                                    sb_mean_density=float(entry["SB"][j]), target=float(target[j])))
        res.paths.append(_out(cfg, "wrong_model.csv"))
        _write_dicts(res.paths[-1], ("n", "y", "ew_mean_density", "sb_mean_density", "target"), wm_rows)
    return res


def run_comparison(cfg: ExperimentConfig, workers: int = 1):
    """Analytic orders and empirical MISE side by side on the same n values."""
    curves = run_rate_curves(cfg)
    sim = run_posterior_experiment(cfg, workers)
    with np.errstate(divide="ignore"):
        joined = CurveSet(cfg.n_list, {
            "log10_mise_ew": curves.series["log10_mise_ew"],
            "log10_mise_sb": curves.series["log10_mise_sb"],
            "log10_empirical_ew": np.log10(sim.mean_mise("EW")),
            "log10_empirical_sb": np.log10(sim.mean_mise("SB")),
        })
    write_rate_csv(joined, _out(cfg, "compare.csv"))
    labels = dict(zip(("EW order", "SB order", "EW empirical", "SB empirical"), joined.series.values()))
    emit_plot(CurveSet(joined.x, labels, title="orders vs empirical MISE (log10)"), _out(cfg, "compare.svg"))
    return curves, sim, joined
