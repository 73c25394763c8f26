"""JSON run configuration with unit-bearing field names and line-aware errors.

Example::

    {
      "seed": 7,
      "n_anchors": 6,
      "k_rounds": 2,
      "c_sigma_m": [1, 5, 10, 20],
      "trials": 500,
      "methods": ["MLE", "LLS", "SQLS", "CCCP"],
      "nlos": {"probability": 0.2, "bias_max_m": 5.0}
    }

All fields are optional; see :data:`DEFAULTS`.
"""
from __future__ import annotations

import json
import re
from dataclasses import asdict, dataclass

from .bench import ExperimentSpec
from .errors import ConfigError
from .estimators import METHODS

DEFAULTS = {
    "seed": 0,
    "n_anchors": 6,
    "k_rounds": 2,
    "c_sigma_m": [10.0],
    "gamma_ratio": 1.0,
    "trials": 500,
    "methods": ["MLE", "LLS", "SQLS", "CCCP"],
    "nlos": None,
    "turnaround_s": 1e-6,
    "skew": 1.0001,
    "c_m_per_s": 3e8,
    "fix_duplicate_anchor": False,
    "cccp_max_outer": 3,
    "workers": 1,
    "target_m": None,
    "noise_scale": 1.0,
    "trace": {"inits": 50, "max_outer": 10},
    "detail": False,
}


@dataclass(frozen=True)
class RunConfig:
    seed: int
    n_anchors: int
    k_rounds: int
    c_sigma_m: tuple
    gamma_ratio: float
    trials: int
    methods: tuple
    nlos_probability: float
    nlos_bias_max_m: float
    turnaround_s: float
    skew: float
    c_m_per_s: float
    fix_duplicate_anchor: bool
    cccp_max_outer: int
    workers: int
    target_m: tuple | None
    noise_scale: float
    trace_inits: int
    trace_max_outer: int
    detail: bool

    def spec(self) -> ExperimentSpec:
        return ExperimentSpec(
            n_anchors=self.n_anchors, rounds=self.k_rounds, noise_grid=self.c_sigma_m,
            trials=self.trials, methods=self.methods, master_seed=self.seed,
            nlos_probability=self.nlos_probability, nlos_bias_max_m=self.nlos_bias_max_m,
            turnaround_s=self.turnaround_s, skew=self.skew, c=self.c_m_per_s,
            gamma_ratio=self.gamma_ratio, fix_duplicate_anchor=self.fix_duplicate_anchor,
            cccp_max_outer=self.cccp_max_outer, workers=self.workers,
            noise_scale=self.noise_scale)

    def effective(self) -> dict:
        """JSON-ready dict in the input schema, every field resolved."""
        d = asdict(self)
        out = {k: d[k] for k in DEFAULTS if k in d}
        out["c_sigma_m"] = list(self.c_sigma_m)
        out["methods"] = list(self.methods)
        out["target_m"] = None if self.target_m is None else list(self.target_m)
        out["nlos"] = (None if self.nlos_probability == 0 else
                       {"probability": self.nlos_probability, "bias_max_m": self.nlos_bias_max_m})
        out["trace"] = {"inits": self.trace_inits, "max_outer": self.trace_max_outer}
        return out


def _line_of(text, key):
    if text is None:
        return None
    m = re.search(r'"%s"\s*:' % re.escape(key), text)
    return text.count("\n", 0, m.start()) + 1 if m else None


def _is_int(v):
    return isinstance(v, int) and not isinstance(v, bool)


def _is_num(v):
    return (isinstance(v, (int, float)) and not isinstance(v, bool))


def from_dict(raw: dict, text=None) -> RunConfig:
    """Validate a parsed config; ``text`` (the source) is only used for line numbers."""
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "top level must be a JSON object", 1)

    def fail(key, msg):
        raise ConfigError(key, msg, _line_of(text, key))

    for key in raw:
        if key not in DEFAULTS:
            fail(key, "unknown field")
    cfg = {**DEFAULTS, **raw}

    for key in ("seed", "n_anchors", "k_rounds", "trials", "cccp_max_outer", "workers"):
        if not _is_int(cfg[key]):
            fail(key, "must be an integer")
    for key in ("gamma_ratio", "turnaround_s", "skew", "c_m_per_s", "noise_scale"):
        if not _is_num(cfg[key]):
            fail(key, "must be a number")
    if not isinstance(cfg["fix_duplicate_anchor"], bool):
        fail("fix_duplicate_anchor", "must be true or false")
    if not isinstance(cfg["detail"], bool):
        fail("detail", "must be true or false")
    if cfg["seed"] < 0:
        fail("seed", "must be non-negative")
    if cfg["noise_scale"] < 0:
        fail("noise_scale", "must be non-negative")

    grid = cfg["c_sigma_m"]
    grid = [grid] if _is_num(grid) else grid
    if not isinstance(grid, list) or not grid or not all(_is_num(v) and v > 0 for v in grid):
        fail("c_sigma_m", "must be a positive number or a non-empty list of positive numbers")

    methods = cfg["methods"]
    if isinstance(methods, str):
        methods = [methods]
    if not isinstance(methods, list) or not methods or not all(
            isinstance(m, str) and m.upper() in METHODS for m in methods):
        fail("methods", f"must be a non-empty list drawn from {list(METHODS)}")

    nlos = cfg["nlos"]
    prob, bias = 0.0, 5.0
    if nlos is not None:
        if not isinstance(nlos, dict) or set(nlos) - {"probability", "bias_max_m"}:
            fail("nlos", "must be null or an object with 'probability' and 'bias_max_m'")
        prob = nlos.get("probability", 0.0)
        bias = nlos.get("bias_max_m", 5.0)
        if not _is_num(prob) or not 0 <= prob <= 1:
            fail("probability", "must be a number in [0, 1]")
        if not _is_num(bias) or bias < 0:
            fail("bias_max_m", "must be a non-negative number")

    target = cfg["target_m"]
    if target is not None:
        if not isinstance(target, list) or len(target) != 2 or not all(_is_num(v) for v in target):
            fail("target_m", "must be null or a list of two numbers")
        target = tuple(float(v) for v in target)

    trace = cfg["trace"]
    if not isinstance(trace, dict) or set(trace) - {"inits", "max_outer"}:
        fail("trace", "must be an object with 'inits' and 'max_outer'")
    trace = {**DEFAULTS["trace"], **trace}
    for key in ("inits", "max_outer"):
        if not _is_int(trace[key]) or trace[key] < 1:
            fail(key, "must be a positive integer")

    rc = RunConfig(
        seed=cfg["seed"], n_anchors=cfg["n_anchors"], k_rounds=cfg["k_rounds"],
        c_sigma_m=tuple(float(v) for v in grid), gamma_ratio=float(cfg["gamma_ratio"]),
        trials=cfg["trials"], methods=tuple(m.upper() for m in methods),
        nlos_probability=float(prob), nlos_bias_max_m=float(bias),
        turnaround_s=float(cfg["turnaround_s"]), skew=float(cfg["skew"]),
        c_m_per_s=float(cfg["c_m_per_s"]), fix_duplicate_anchor=cfg["fix_duplicate_anchor"],
        cccp_max_outer=cfg["cccp_max_outer"], workers=cfg["workers"], target_m=target,
        noise_scale=float(cfg["noise_scale"]), trace_inits=trace["inits"],
        trace_max_outer=trace["max_outer"], detail=cfg["detail"])
    # range checks live on ExperimentSpec; re-raise them with a line number
    try:
        rc.spec()
    except ConfigError as exc:
        key = {"nlos": "probability"}.get(exc.field, exc.field)
        raise ConfigError(exc.field, str(exc).split(": ", 1)[-1], _line_of(text, key)) from None
    return rc


def loads(text: str) -> RunConfig:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("<json>", exc.msg, exc.lineno) from None
    return from_dict(raw, text)


def load(path) -> RunConfig:
    if path is None:
        return from_dict({})
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError("<file>", f"cannot read {path}: {exc.strerror}") from None
    return loads(text)


def dumps(rc: RunConfig) -> str:
    return json.dumps(rc.effective(), indent=2, sort_keys=True) + "\n"
