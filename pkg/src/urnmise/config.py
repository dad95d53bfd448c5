"""Flat ``key = value`` experiment configuration."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Optional

from .model import BasePrior, ParamSchedules, TrueDensity


class Mode(str, enum.Enum):
    RATES = "rates"
    SIMULATE = "simulate"
    COMPARE = "compare"


class ConfigError(ValueError):
    """Invalid configuration; the message names the key and, when known, the line."""

    def __init__(self, key, message, line=None):
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"{key}{where}: {message}")
        self.key = key
        self.line = line


DEFAULT_F0_ATOMS = "-0.75:0.5;0.75:0.5"


@dataclass(frozen=True)
class ExperimentConfig:
    mode: Mode
    schedules: ParamSchedules = field(default_factory=ParamSchedules)
    bp: BasePrior = field(default_factory=BasePrior)
    td: TrueDensity = field(default_factory=lambda: parse_atoms(DEFAULT_F0_ATOMS))
    n_list: tuple = (10, 100, 1000, 10_000, 100_000, 1_000_000)
    reps: int = 8
    burn_in: int = 1000
    retained: int = 4000
    sigma_grid_size: int = 200
    seed: int = 0
    grid_min: Optional[float] = None
    grid_max: Optional[float] = None
    grid_points: int = 401
    out_prefix: str = "urnmise"
    p: Optional[int] = None

    def grid_bounds(self):
        """Evaluation grid; defaults to [-a-c-6k, a+c+6k]."""
        half = self.schedules.a + self.schedules.c + 6.0 * self.schedules.k
        lo = -half if self.grid_min is None else self.grid_min
        hi = half if self.grid_max is None else self.grid_max
        return lo, hi

    def with_overrides(self, **kw):
        return replace(self, **{k: v for k, v in kw.items() if v is not None})


def parse_atoms(text, k=1.0, a=1.0, c=0.5) -> TrueDensity:
    locs, weights = [], []
    for part in text.split(";"):
        part = part.strip()
        if not part:
            continue
        loc, _, w = part.partition(":")
        locs.append(float(loc))
        weights.append(float(w) if w else 1.0)
    return TrueDensity(tuple(locs), tuple(weights), k=k, a=a, c=c)


_SCHEDULE_KEYS = ("omega", "b", "t", "r", "a", "c", "c1", "k", "bn_ratio")
_FLOAT_KEYS = _SCHEDULE_KEYS + ("mu0", "sigma0", "grid_min", "grid_max")
_INT_KEYS = ("reps", "burn_in", "retained", "sigma_grid_size", "seed", "grid_points", "p")
_KNOWN = set(_FLOAT_KEYS) | set(_INT_KEYS) | {"mode", "n_list", "out_prefix", "f0_atoms"}


def _to_int(raw):
    value = float(raw)
    if value != int(value):
        raise ValueError("not an integer")
    return int(value)


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate a config file body.

    Lines are ``key = value``; ``#`` starts a comment.  Unknown keys,
    unparsable values and violated invariants raise :class:`ConfigError`.
    """
    raw, lines = {}, {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep:
            raise ConfigError(key or "<blank>", "expected 'key = value'", lineno)
        if key not in _KNOWN:
            raise ConfigError(key, "unknown key", lineno)
        raw[key] = value.strip()
        lines[key] = lineno

    values = {}
    for key, text_value in raw.items():
        try:
            if key in _FLOAT_KEYS:
                values[key] = float(text_value)
            elif key in _INT_KEYS:
                values[key] = _to_int(text_value)
            elif key == "n_list":
                values[key] = tuple(_to_int(x) for x in text_value.split(",") if x.strip())
            elif key == "mode":
                values[key] = Mode(text_value.lower())
            else:
                values[key] = text_value
        except ValueError as exc:
            raise ConfigError(key, f"cannot parse {text_value!r}: {exc}", lines[key]) from None

    def fail(key, msg):
        raise ConfigError(key, msg, lines.get(key))

    if "mode" not in values:
        fail("mode", "missing (one of rates, simulate, compare)")

    sched_kw = {k: values[k] for k in _SCHEDULE_KEYS if k in values}
    try:
        schedules = ParamSchedules(**sched_kw)
    except ValueError as exc:
        # ParamSchedules messages start with the offending field name
        first = str(exc).split()[0]
        fail(first if first in _SCHEDULE_KEYS else "schedules", str(exc))
    try:
        bp = BasePrior(values.get("mu0", 2.0), values.get("sigma0", 1.0))
    except ValueError as exc:
        fail("sigma0" if "sigma0" in str(exc) else "mu0", str(exc))
    try:
        td = parse_atoms(values.get("f0_atoms", DEFAULT_F0_ATOMS), schedules.k, schedules.a, schedules.c)
    except ValueError as exc:
        fail("f0_atoms", str(exc))

    n_list = values.get("n_list", ExperimentConfig.n_list)
    if not n_list:
        fail("n_list", "must be nonempty")
    if any(n < 2 for n in n_list):
        fail("n_list", "every n must be >= 2")
    if any(b <= a for a, b in zip(n_list, n_list[1:])):
        fail("n_list", "must be strictly increasing")
    for key, low in (("reps", 1), ("retained", 2), ("burn_in", 0), ("sigma_grid_size", 2), ("grid_points", 2), ("p", 1)):
        if key in values and values[key] < low:
            fail(key, f"must be >= {low}")
    if "seed" in values and not 0 <= values["seed"] < 2**64:
        fail("seed", "must be a 64-bit unsigned integer")

    cfg = ExperimentConfig(
        mode=values["mode"],
        schedules=schedules,
        bp=bp,
        td=td,
        n_list=tuple(n_list),
        **{k: values[k] for k in ("reps", "burn_in", "retained", "sigma_grid_size", "seed",
                                  "grid_min", "grid_max", "grid_points", "out_prefix", "p") if k in values},
    )
    lo, hi = cfg.grid_bounds()
    if not lo < hi:
        fail("grid_max", "grid_max must exceed grid_min")
    return cfg


def load_config(path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
