"""Simulation configuration: YAML text <-> validated SimConfig.

Layout (every section except ``model`` and ``leslie`` is optional)::

    model: SBM-EL                 # preset name, or {theta, theta1, theta2, chi, a0_filter}
    alpha: 1.0
    mu4: 1.0
    chi_form: b00bis              # or e_rel
    leslie: {mu1: 0.1, mu2: -0.55, mu3: 0.45, mu5: 0.3, mu6: 0.2}
    case: 1
    grid: {dim: 2, n_modes: 32, length: 6.283185307179586}
    time: {dt: 0.005, t_end: 1.0, scheme: imex1, record_every: 1, snapshot_every: 0}
    init:
      velocity: {kind: taylor_green, amplitude: 1.0}
      director: {kind: perturbed_constant, vector: [1.0, 0.0], amplitude: 0.1, seed: 1}
    forcing: {kind: decaying, delta: 0.5, profile: {kind: taylor_green, amplitude: 1.0e-5}}
    output: {csv_path: run.csv, snapshot_dir: null}
    tolerances: {maxp: 1.0e-6, budget: null, blowup_threshold: 1.0e8}
    extra_norms: [[u, 1.0], [d, 2.0]]
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import yaml

from .coefficients import PRESETS, LeslieCoefficients, ModelParams, preset, validate_constraints
from .dynamics import SCHEMES

VELOCITY_KINDS = ("zero", "taylor_green", "random_solenoidal")
DIRECTOR_KINDS = ("constant", "perturbed_constant", "random_unit")
FORCING_KINDS = ("zero", "steady", "decaying")


class ConfigError(ValueError):
    """Malformed or invalid configuration."""


@dataclass(frozen=True)
class GridConfig:
    dim: int = 2
    n_modes: int = 32
    length: float = 2 * math.pi


@dataclass(frozen=True)
class TimeConfig:
    dt: float = 1e-3
    t_end: float = 1.0
    scheme: str = "imex1"
    record_every: int = 1
    snapshot_every: int = 0


@dataclass(frozen=True)
class OutputConfig:
    csv_path: str | None = None
    snapshot_dir: str | None = None


@dataclass(frozen=True)
class Tolerances:
    maxp: float = 1e-6
    budget: float | None = None
    blowup_threshold: float = 1e8


@dataclass(frozen=True)
class SimConfig:
    model: str | dict
    leslie: LeslieCoefficients
    alpha: float = 1.0
    mu4: float = 1.0
    chi_form: str = "b00bis"
    grid: GridConfig = field(default_factory=GridConfig)
    time: TimeConfig = field(default_factory=TimeConfig)
    init: dict = field(default_factory=lambda: {
        "velocity": {"kind": "zero"},
        "director": {"kind": "constant", "vector": [1.0, 0.0]},
    })
    forcing: dict = field(default_factory=lambda: {"kind": "zero"})
    output: OutputConfig = field(default_factory=OutputConfig)
    tolerances: Tolerances = field(default_factory=Tolerances)
    extra_norms: tuple = ()

    @property
    def case(self):
        return self.leslie.case

    @property
    def lambda1(self):
        return self.leslie.lambda1

    @property
    def lambda2(self):
        return self.leslie.lambda2

    @property
    def params(self) -> ModelParams:
        if isinstance(self.model, str):
            return preset(self.model, self.alpha, self.mu4, self.chi_form)
        m = self.model
        return ModelParams(m["theta"], m["theta1"], m["theta2"], m.get("chi", 0), self.alpha, self.mu4,
                           m.get("a0_filter", 0.0), self.chi_form)

    @property
    def validation(self):
        return validate_constraints(self.leslie, self.mu4)


# -- coercion helpers ------------------------------------------------------------


def _num(value, name, kind=float):
    if isinstance(value, bool):
        raise ConfigError(f"{name}: expected a number, got {value!r}")
    try:
        out = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{name}: expected a number, got {value!r}") from None
    if not math.isfinite(out):
        raise ConfigError(f"{name}: must be finite, got {value!r}")
    if kind is int:
        if out != int(out):
            raise ConfigError(f"{name}: expected an integer, got {value!r}")
        return int(out)
    return out


def _section(data, key, required=False):
    val = data.get(key)
    if val is None:
        if required:
            raise ConfigError(f"missing required section {key!r}")
        return {}
    if not isinstance(val, dict):
        raise ConfigError(f"section {key!r} must be a mapping")
    return val


def _check_keys(section, allowed, where):
    unknown = set(section) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {', '.join(sorted(map(str, unknown)))}")


def _vector(value, dim, name):
    if not isinstance(value, (list, tuple)) or len(value) != dim:
        raise ConfigError(f"{name}: expected a list of {dim} numbers")
    return [_num(v, name) for v in value]


def _velocity_init(spec, where):
    spec = dict(spec)
    kind = spec.get("kind", "zero")
    if kind not in VELOCITY_KINDS:
        raise ConfigError(f"{where}.kind must be one of {', '.join(VELOCITY_KINDS)}, got {kind!r}")
    out = {"kind": kind}
    if kind == "taylor_green":
        _check_keys(spec, ("kind", "amplitude"), where)
        out["amplitude"] = _num(spec.get("amplitude", 1.0), f"{where}.amplitude")
    elif kind == "random_solenoidal":
        _check_keys(spec, ("kind", "amplitude", "spectrum_slope", "seed", "kmax"), where)
        if "seed" not in spec:
            raise ConfigError(f"{where}: random initialisers need an explicit seed")
        out["amplitude"] = _num(spec.get("amplitude", 1.0), f"{where}.amplitude")
        out["spectrum_slope"] = _num(spec.get("spectrum_slope", -3.0), f"{where}.spectrum_slope")
        out["seed"] = _num(spec["seed"], f"{where}.seed", int)
        if spec.get("kmax") is not None:
            out["kmax"] = _num(spec["kmax"], f"{where}.kmax")
    else:
        _check_keys(spec, ("kind",), where)
    return out


def _director_init(spec, dim):
    where = "init.director"
    spec = dict(spec)
    kind = spec.get("kind", "constant")
    if kind not in DIRECTOR_KINDS:
        raise ConfigError(f"{where}.kind must be one of {', '.join(DIRECTOR_KINDS)}, got {kind!r}")
    out = {"kind": kind}
    if kind in ("constant", "perturbed_constant"):
        out["vector"] = _vector(spec.get("vector", [1.0] + [0.0] * (dim - 1)), dim, f"{where}.vector")
    if kind == "constant":
        _check_keys(spec, ("kind", "vector"), where)
        return out
    if "seed" not in spec:
        raise ConfigError(f"{where}: random initialisers need an explicit seed")
    out["seed"] = _num(spec["seed"], f"{where}.seed", int)
    out["spectrum_slope"] = _num(spec.get("spectrum_slope", -3.0), f"{where}.spectrum_slope")
    if spec.get("kmax") is not None:
        out["kmax"] = _num(spec["kmax"], f"{where}.kmax")
    if kind == "perturbed_constant":
        _check_keys(spec, ("kind", "vector", "amplitude", "seed", "spectrum_slope", "kmax", "max_abs"), where)
        out["amplitude"] = _num(spec.get("amplitude", 0.1), f"{where}.amplitude")
        if spec.get("max_abs") is not None:
            out["max_abs"] = _num(spec["max_abs"], f"{where}.max_abs")
    else:
        _check_keys(spec, ("kind", "seed", "spectrum_slope", "kmax"), where)
    return out


def _forcing(spec):
    spec = dict(spec)
    _check_keys(spec, ("kind", "profile", "delta"), "forcing")
    kind = spec.get("kind", "zero")
    if kind not in FORCING_KINDS:
        raise ConfigError(f"forcing.kind must be one of {', '.join(FORCING_KINDS)}, got {kind!r}")
    out = {"kind": kind}
    if kind == "zero":
        return out
    prof = spec.get("profile")
    if not isinstance(prof, dict):
        raise ConfigError("forcing.profile must be a velocity initialiser mapping")
    out["profile"] = _velocity_init(prof, "forcing.profile")
    if out["profile"]["kind"] == "zero":
        raise ConfigError("forcing.profile must not be zero for steady or decaying forcing")
    if kind == "decaying":
        delta = _num(spec.get("delta", 0.5), "forcing.delta")
        if not 0 < delta < 1:
            raise ConfigError(f"forcing.delta must lie in (0, 1), got {delta}")
        out["delta"] = delta
    return out


def _model(value):
    if isinstance(value, str):
        if value not in PRESETS:
            raise ConfigError(f"unknown preset {value!r}; valid names: {', '.join(PRESETS)}")
        return value
    if isinstance(value, dict):
        _check_keys(value, ("theta", "theta1", "theta2", "chi", "a0_filter"), "model")
        missing = [k for k in ("theta", "theta1", "theta2") if k not in value]
        if missing:
            raise ConfigError(f"model: missing {', '.join(missing)}")
        out = {k: _num(value[k], f"model.{k}") for k in ("theta", "theta1", "theta2")}
        out["chi"] = _num(value.get("chi", 0), "model.chi", int)
        out["a0_filter"] = _num(value.get("a0_filter", 0.0), "model.a0_filter")
        return out
    raise ConfigError("model must be a preset name or a mapping of exponents")


def config_from_dict(data) -> SimConfig:
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a mapping at top level")
    _check_keys(data, ("model", "alpha", "mu4", "chi_form", "leslie", "case", "grid", "time", "init",
                       "forcing", "output", "tolerances", "extra_norms"), "top level")
    if "model" not in data:
        raise ConfigError("missing required key 'model'")
    model = _model(data["model"])
    les = _section(data, "leslie", required=True)
    _check_keys(les, ("mu1", "mu2", "mu3", "mu5", "mu6"), "leslie")
    missing = [k for k in ("mu1", "mu2", "mu3", "mu5", "mu6") if k not in les]
    if missing:
        raise ConfigError(f"leslie: missing {', '.join(missing)}")
    case = _num(data.get("case", 1), "case", int)
    if case not in (1, 2):
        raise ConfigError(f"case must be 1 or 2, got {case}")
    leslie = LeslieCoefficients(*(_num(les[k], f"leslie.{k}") for k in ("mu1", "mu2", "mu3", "mu5", "mu6")),
                                case=case)

    g = _section(data, "grid")
    _check_keys(g, ("dim", "n_modes", "length"), "grid")
    grid = GridConfig(_num(g.get("dim", 2), "grid.dim", int), _num(g.get("n_modes", 32), "grid.n_modes", int),
                      _num(g.get("length", 2 * math.pi), "grid.length"))
    if grid.dim not in (2, 3):
        raise ConfigError(f"grid.dim must be 2 or 3, got {grid.dim}")
    if grid.n_modes < 8 or grid.n_modes % 2:
        raise ConfigError(f"grid.n_modes must be an even integer >= 8, got {grid.n_modes}")
    if not grid.length > 0:
        raise ConfigError("grid.length must be positive")

    tm = _section(data, "time")
    _check_keys(tm, ("dt", "t_end", "scheme", "record_every", "snapshot_every"), "time")
    time = TimeConfig(_num(tm.get("dt", 1e-3), "time.dt"), _num(tm.get("t_end", 1.0), "time.t_end"),
                      str(tm.get("scheme", "imex1")), _num(tm.get("record_every", 1), "time.record_every", int),
                      _num(tm.get("snapshot_every", 0), "time.snapshot_every", int))
    if not time.dt > 0 or time.t_end < 0:
        raise ConfigError("time.dt must be positive and time.t_end non-negative")
    if time.scheme not in SCHEMES:
        raise ConfigError(f"time.scheme must be one of {', '.join(SCHEMES)}")
    if time.record_every < 1 or time.snapshot_every < 0:
        raise ConfigError("time.record_every must be >= 1 and time.snapshot_every >= 0")

    ini = _section(data, "init")
    _check_keys(ini, ("velocity", "director"), "init")
    init = {
        "velocity": _velocity_init(ini.get("velocity") or {"kind": "zero"}, "init.velocity"),
        "director": _director_init(ini.get("director") or {"kind": "constant"}, grid.dim),
    }
    forcing = _forcing(data.get("forcing") or {"kind": "zero"})

    out = _section(data, "output")
    _check_keys(out, ("csv_path", "snapshot_dir"), "output")
    output = OutputConfig(*(None if out.get(k) is None else str(out[k]) for k in ("csv_path", "snapshot_dir")))

    tol = _section(data, "tolerances")
    _check_keys(tol, ("maxp", "budget", "blowup_threshold"), "tolerances")
    tolerances = Tolerances(_num(tol.get("maxp", 1e-6), "tolerances.maxp"),
                            None if tol.get("budget") is None else _num(tol["budget"], "tolerances.budget"),
                            _num(tol.get("blowup_threshold", 1e8), "tolerances.blowup_threshold"))

    norms = []
    for item in data.get("extra_norms") or ():
        if not isinstance(item, (list, tuple)) or len(item) != 2 or item[0] not in ("u", "v", "d"):
            raise ConfigError("extra_norms entries must be [field, s] with field in u, v, d")
        norms.append((str(item[0]), _num(item[1], "extra_norms.s")))

    alpha = _num(data.get("alpha", 1.0), "alpha")
    mu4 = _num(data.get("mu4", 1.0), "mu4")
    chi_form = str(data.get("chi_form", "b00bis"))
    cfg = SimConfig(model, leslie, alpha, mu4, chi_form, grid, time, init, forcing, output, tolerances,
                    tuple(norms))
    try:
        cfg.params
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    report = cfg.validation
    if not report.passed:
        names = "; ".join(f"{c.name} ({c.expression}, slack {c.slack:.6g})" for c in report.violated_constraints)
        raise ConfigError(f"coefficient constraints violated: {names}")
    return cfg


def load_yaml(text):
    try:
        return yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark is not None else ""
        problem = getattr(exc, "problem", None) or str(exc)
        raise ConfigError(f"syntax error{where}: {problem}") from None


def parse_config(text) -> SimConfig:
    """Parse and fully validate YAML configuration text."""
    return config_from_dict(load_yaml(text))


def parse_config_unchecked(text) -> tuple:
    """(config or None, error message or None, constraint report or None) without raising.

    Used by ``validate`` to print the report even when constraints fail.
    """
    data = load_yaml(text)
    try:
        return config_from_dict(data), None, None
    except ConfigError as exc:
        report = None
        if isinstance(data, dict) and isinstance(data.get("leslie"), dict):
            try:
                les = data["leslie"]
                case = _num(data.get("case", 1), "case", int)
                leslie = LeslieCoefficients(*(_num(les[k], k) for k in ("mu1", "mu2", "mu3", "mu5", "mu6")),
                                            case=case)
                report = validate_constraints(leslie, _num(data.get("mu4", 1.0), "mu4"))
            except (ConfigError, KeyError, ValueError):
                report = None
        return None, str(exc), report


def config_to_dict(cfg: SimConfig) -> dict:
    les = cfg.leslie
    return {
        "model": cfg.model if isinstance(cfg.model, str) else dict(cfg.model),
        "alpha": cfg.alpha,
        "mu4": cfg.mu4,
        "chi_form": cfg.chi_form,
        "leslie": {"mu1": les.mu1, "mu2": les.mu2, "mu3": les.mu3, "mu5": les.mu5, "mu6": les.mu6},
        "case": les.case,
        "grid": asdict(cfg.grid),
        "time": asdict(cfg.time),
        "init": {k: dict(v) for k, v in cfg.init.items()},
        "forcing": dict(cfg.forcing),
        "output": asdict(cfg.output),
        "tolerances": asdict(cfg.tolerances),
        "extra_norms": [[f, s] for f, s in cfg.extra_norms],
    }


def emit_config(cfg: SimConfig) -> str:
    return yaml.safe_dump(config_to_dict(cfg), sort_keys=False, default_flow_style=None)
