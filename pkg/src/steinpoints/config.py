"""Experiment configuration: a structured key-value file (YAML or JSON).

Schema (all keys optional unless noted)::

    target:
      kind: gaussian_mixture | gp | igarch          # required
      weights / means / covariances                 # gaussian_mixture only
      data: path/to/file.csv                        # gp (x,y) or igarch (y)
      synth_seed: 0                                 # used when data is absent
      noise_sd: 0.1                                 # gp only
      sigma1_sq_init: null                          # igarch only
    method: stein-greedy | stein-herding | stein-greedy-n | stein-herding-n
            | med | svgd | mc-baseline              # required
    n_points: 100
    eval_budget: null                               # required for *-n methods
    seeds: [0]
    kernel: {family: imq, alpha: 1.0, beta: -0.5}
    sweep: {alpha_multipliers: [...], betas: [...], eta: 1.0}
    box: {lower: [...], upper: [...]}
    optimizer:
      kind: mc | nm | gs
      n0: 100
      fixed_grid: false
      proposal: {n_init, n_test, n_delay, mu0, sigma0, lam}
    c2: null
    med: {delta: null}
    svgd: {master_step, momentum, n_iterations}
    mc: {sampler: auto | iid | rwm, thin: 1, burn_in: 1000}
    reference: {n: 2000, seed: 0, cache_dir: null, burn_in, thin, proposal_sd}
    output: runs/out

Per-target defaults for the box, proposal and sweep base scale are filled
in by ``ExperimentConfig.resolve``.
"""

from __future__ import annotations

import copy
import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, List, Optional

import numpy as np
import yaml

METHODS = ("stein-greedy", "stein-herding", "stein-greedy-n", "stein-herding-n",
           "med", "svgd", "mc-baseline")
TARGET_KINDS = ("gaussian_mixture", "gp", "igarch")


class ConfigError(ValueError):
    """A config field is missing or invalid; ``field`` names it."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


# settings per target; mirrors the published experimental setup
TARGET_DEFAULTS = {
    "gaussian_mixture": {
        "box": {"lower": [-5.0, -5.0], "upper": [5.0, 5.0]},
        "proposal": {"mu0": [0.0, 0.0], "sigma0": [[25.0, 0.0], [0.0, 25.0]], "lam": 1.0},
        "eta": 1.0, "svgd_step": 0.1, "rwm_sd": 1.0,
    },
    "gp": {
        "box": {"lower": [-5.0, -13.0], "upper": [5.0, -7.0]},
        "proposal": {"mu0": [0.0, -10.0], "sigma0": [[25.0, 0.0], [0.0, 25.0]], "lam": 1.0},
        "eta": 1.0, "svgd_step": 0.1, "rwm_sd": 0.3,
    },
    "igarch": {
        "box": {"lower": [0.002, 0.05], "upper": [0.04, 0.2]},
        "proposal": {"mu0": [0.021, 0.125], "sigma0": [[1e-4, 0.0], [0.0, 1e-3]], "lam": 1e-5},
        "eta": 1e-5, "svgd_step": 1e-3, "rwm_sd": [2e-3, 1e-2],
    },
}


def _sub(d, key, path):
    v = d.get(key)
    if v is None:
        return {}
    if not isinstance(v, dict):
        raise ConfigError(f"{path}{key}", "expected a mapping")
    return v


def _check_keys(d: dict, allowed, path: str):
    for k in d:
        if k not in allowed:
            raise ConfigError(f"{path}{k}", "unknown field")


def _num(v, name, *, positive=False, integer=False, minimum=None):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(name, f"expected a number, got {v!r}")
    if integer and int(v) != v:
        raise ConfigError(name, f"expected an integer, got {v!r}")
    if positive and not v > 0:
        raise ConfigError(name, f"must be positive, got {v!r}")
    if minimum is not None and v < minimum:
        raise ConfigError(name, f"must be >= {minimum}, got {v!r}")
    return int(v) if integer else float(v)


def _vec(v, name, dim=None):
    try:
        a = np.asarray(v, dtype=float).ravel()
    except (TypeError, ValueError):
        raise ConfigError(name, f"expected a list of numbers, got {v!r}") from None
    if dim is not None and a.shape != (dim,):
        raise ConfigError(name, f"expected {dim} values, got {a.size}")
    if not np.all(np.isfinite(a)):
        raise ConfigError(name, "values must be finite")
    return [float(x) for x in a]


@dataclass
class TargetConfig:
    kind: str
    weights: Optional[List[float]] = None
    means: Optional[list] = None
    covariances: Optional[list] = None
    data: Optional[str] = None
    synth_seed: int = 0
    noise_sd: float = 0.1
    sigma1_sq_init: Optional[float] = None

    @property
    def dim(self) -> int:
        if self.kind == "gaussian_mixture" and self.means is not None:
            return len(self.means[0])
        return 2

    @property
    def name(self) -> str:
        if self.data is not None:
            return f"{self.kind}-{Path(self.data).stem}"
        if self.kind == "gaussian_mixture":
            return self.kind if self.means is None else f"{self.kind}-custom"
        return f"{self.kind}-synth{self.synth_seed}"


@dataclass
class ExperimentConfig:
    target: TargetConfig
    method: str
    n_points: int = 100
    eval_budget: Optional[int] = None
    seeds: List[int] = field(default_factory=lambda: [0])
    kernel: dict = field(default_factory=lambda: {"family": "imq", "alpha": 1.0, "beta": -0.5})
    sweep: Optional[dict] = None
    box: Optional[dict] = None
    optimizer: dict = field(default_factory=dict)
    c2: Optional[float] = None
    med: dict = field(default_factory=dict)
    svgd: dict = field(default_factory=dict)
    mc: dict = field(default_factory=dict)
    reference: dict = field(default_factory=dict)
    output: Optional[str] = None
    base_dir: Optional[str] = field(default=None, repr=False)

    # -- loading ---------------------------------------------------------------
    @classmethod
    def from_dict(cls, raw: dict, base_dir=None) -> "ExperimentConfig":
        if not isinstance(raw, dict):
            raise ConfigError("<root>", "config must be a mapping")
        raw = copy.deepcopy(raw)
        raw.pop("version", None)
        _check_keys(raw, {f.name for f in fields(cls)} - {"base_dir"}, "")
        if "target" not in raw:
            raise ConfigError("target", "required field is missing")
        t = raw.pop("target")
        if not isinstance(t, dict):
            raise ConfigError("target", "expected a mapping")
        _check_keys(t, {f.name for f in fields(TargetConfig)}, "target.")
        if "kind" not in t:
            raise ConfigError("target.kind", "required field is missing")
        if "method" not in raw:
            raise ConfigError("method", "required field is missing")
        cfg = cls(target=TargetConfig(**t), base_dir=None if base_dir is None else str(base_dir),
                  **raw)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        path = Path(path)
        if not path.exists():
            raise ConfigError("--config", f"file not found: {path}")
        text = path.read_text(encoding="utf-8")
        try:
            raw = json.loads(text) if path.suffix == ".json" else yaml.safe_load(text)
        except (json.JSONDecodeError, yaml.YAMLError) as err:
            raise ConfigError("--config", f"cannot parse {path}: {err}") from None
        if isinstance(raw, dict) and "config" in raw and "seed" in raw:
            raw = raw["config"]  # a run manifest
        return cls.from_dict(raw, base_dir=path.parent)

    # -- validation and defaults -----------------------------------------------
    def validate(self) -> None:
        t = self.target
        if t.kind not in TARGET_KINDS:
            raise ConfigError("target.kind", f"must be one of {TARGET_KINDS}, got {t.kind!r}")
        if self.method not in METHODS:
            raise ConfigError("method", f"must be one of {METHODS}, got {self.method!r}")
        self.n_points = _num(self.n_points, "n_points", integer=True, minimum=1)
        if self.method.endswith("-n"):
            if self.eval_budget is None:
                raise ConfigError("eval_budget", f"required for method {self.method}")
        if self.eval_budget is not None:
            self.eval_budget = _num(self.eval_budget, "eval_budget", integer=True, positive=True)
        if not isinstance(self.seeds, list) or not self.seeds:
            raise ConfigError("seeds", "expected a non-empty list of integers")
        self.seeds = [_num(s, f"seeds[{i}]", integer=True, minimum=0)
                      for i, s in enumerate(self.seeds)]
        if t.kind == "gaussian_mixture" and t.means is not None:
            if t.weights is None or t.covariances is None:
                raise ConfigError("target.weights", "means, weights and covariances go together")
        if t.kind != "gaussian_mixture" and t.data is not None:
            if not self.data_path().exists():
                raise ConfigError("target.data", f"file not found: {self.data_path()}")
        t.noise_sd = _num(t.noise_sd, "target.noise_sd", positive=True)
        d = t.dim
        if self.box is not None:
            _check_keys(self.box, {"lower", "upper"}, "box.")
            lo = _vec(self.box.get("lower"), "box.lower", d)
            hi = _vec(self.box.get("upper"), "box.upper", d)
            if not all(a < b for a, b in zip(lo, hi)):
                raise ConfigError("box", f"need lower < upper componentwise, got {lo} and {hi}")
        _check_keys(self.kernel, {"family", "alpha", "beta"}, "kernel.")
        from .kernels import KernelParams
        try:
            KernelParams(self.kernel.get("family", "imq"), self.kernel.get("alpha", 1.0),
                         self.kernel.get("beta"))
        except ValueError as err:
            raise ConfigError("kernel", str(err)) from None
        if self.sweep is not None:
            _check_keys(self.sweep, {"alpha_multipliers", "betas", "eta", "family"}, "sweep.")
            if "eta" in self.sweep and self.sweep["eta"] is not None:
                _num(self.sweep["eta"], "sweep.eta", positive=True)
        _check_keys(self.optimizer, {"kind", "n0", "fixed_grid", "proposal"}, "optimizer.")
        if self.optimizer.get("kind", "mc") not in ("mc", "nm", "gs"):
            raise ConfigError("optimizer.kind", "must be mc, nm or gs")
        _check_keys(self.optimizer.get("proposal") or {},
                    {"n_init", "n_test", "n_delay", "mu0", "sigma0", "lam"}, "optimizer.proposal.")
        if self.c2 is not None:
            _num(self.c2, "c2", positive=True)
        _check_keys(self.med, {"delta"}, "med.")
        if self.med.get("delta") is not None and _num(self.med["delta"], "med.delta") < 1:
            raise ConfigError("med.delta", "must be >= 1")
        _check_keys(self.svgd, {"master_step", "momentum", "n_iterations"}, "svgd.")
        _check_keys(self.mc, {"sampler", "thin", "burn_in"}, "mc.")
        if self.mc.get("sampler", "auto") not in ("auto", "iid", "rwm"):
            raise ConfigError("mc.sampler", "must be auto, iid or rwm")
        if self.mc.get("sampler") == "iid" and t.kind != "gaussian_mixture":
            raise ConfigError("mc.sampler", "iid sampling needs the gaussian_mixture target")
        _check_keys(self.reference, {"n", "seed", "cache_dir", "burn_in", "thin", "proposal_sd",
                                     "path"}, "reference.")
        if "n" in self.reference:
            _num(self.reference["n"], "reference.n", integer=True, minimum=1)

    def data_path(self) -> Path:
        p = Path(self.target.data)
        if not p.is_absolute() and self.base_dir is not None and not p.exists():
            p = Path(self.base_dir) / p
        return p

    def resolve(self) -> "ExperimentConfig":
        """Copy with every default filled in, suitable for a run manifest."""
        c = copy.deepcopy(self)
        tdef = TARGET_DEFAULTS[c.target.kind]
        d = c.target.dim
        if c.box is None:
            if d != 2:
                raise ConfigError("box", f"no default box for a {d}-dimensional mixture")
            c.box = copy.deepcopy(tdef["box"])
        c.box = {"lower": _vec(c.box["lower"], "box.lower", d),
                 "upper": _vec(c.box["upper"], "box.upper", d)}
        from .kernels import KernelParams
        k = KernelParams(c.kernel.get("family", "imq"), c.kernel.get("alpha", 1.0),
                         c.kernel.get("beta"))
        c.kernel = k.as_dict()
        opt = {"kind": "mc", "n0": 100, "fixed_grid": False, **c.optimizer}
        prop = dict(opt.get("proposal") or {})
        base = {"n_init": 3, "n_test": 20, "n_delay": 20}
        if d == 2:
            base.update(tdef["proposal"])
        else:
            width = np.array(c.box["upper"]) - np.array(c.box["lower"])
            base.update({"mu0": list((np.array(c.box["upper"]) + np.array(c.box["lower"])) / 2),
                         "sigma0": np.diag((width / 2) ** 2).tolist(), "lam": 1.0})
        base.update(prop)
        opt["proposal"] = base
        c.optimizer = opt
        sw = {"alpha_multipliers": [0.1, 0.5, 1.0, 2.0, 4.0, 8.0],
              "betas": [-0.1, -0.3, -0.5, -0.7, -0.9], "eta": tdef["eta"],
              "family": c.kernel["family"]}
        sw.update({k: v for k, v in (c.sweep or {}).items() if v is not None})
        c.sweep = sw
        c.med = {"delta": None, **c.med}
        c.svgd = {"master_step": tdef["svgd_step"], "momentum": 0.9, "n_iterations": 500,
                  **c.svgd}
        c.mc = {"sampler": "auto", "thin": 1, "burn_in": 1000, **c.mc}
        c.reference = {"n": 2000, "seed": 0, "cache_dir": None, "burn_in": 5000, "thin": 100,
                       "proposal_sd": tdef["rwm_sd"], "path": None, **c.reference}
        return c

    def to_dict(self) -> dict:
        out = asdict(self)
        out.pop("base_dir")
        if self.target.data is not None and self.base_dir is not None:
            out["target"]["data"] = str(self.data_path().resolve())
        return out


def seed_for(cfg: ExperimentConfig, override: Optional[int]) -> int:
    return cfg.seeds[0] if override is None else int(override)


def dump_json(obj: Any, path) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")
