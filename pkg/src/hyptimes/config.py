"""Plain ``key = value`` experiment configuration.

Blank lines and ``#`` comments are ignored.  Every key has a default (see
:data:`DEFAULTS`); unknown keys are errors.  Parsing reports all violations
at once, each prefixed with its line number when it comes from the file.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from typing import Optional

from .errors import ConfigError
from .hyperbolic import HTParams, b_bound
from .maps import BUILTINS

SCHEMA_VERSION = 1

COMMANDS = ("scan", "h-stats", "density", "birkhoff", "example-series", "example-verify",
            "suggest-sigma")


def _floats(text):
    return tuple(float(v) for v in text.split(",") if v.strip())


def _ints(text):
    return tuple(int(v) for v in text.split(",") if v.strip())


# key -> (parser, default, help)
DEFAULTS = {
    "command": (str, "scan", "subcommand to run"),
    "map": (str, "paper-sqrt", "builtin map name or piecewise map label"),
    "map_kind": (str, "builtin", "builtin or piecewise"),
    "map_params": (str, "", "map parameters, e.g. c=3 or knots=0:0,0.5:1,1:0"),
    "beta": (float, None, "override the map's declared beta"),
    "singular_points": (_floats, None, "override the map's singular set (comma list)"),
    "sigma": (float, None, "contraction rate in (0,1)"),
    "delta": (float, 0.1, "recurrence truncation radius"),
    "b": (float, None, "recurrence exponent; default 0.99 * min{1/2, 1/(4 beta)}"),
    "x0": (float, 0.3, "initial point for single-orbit commands"),
    "N": (int, 1000, "orbit length"),
    "T": (int, 1024, "cutoff for the first hyperbolic time"),
    "T_grid": (_ints, None, "cutoffs for the growth table (comma list)"),
    "n": (int, 50, "push-forward steps, or orbit length for suggest-sigma"),
    "n_samples": (int, 10000, "ensemble size"),
    "n_orbits": (int, 4, "orbits averaged by suggest-sigma"),
    "bins": (int, 64, "histogram bins"),
    "k": (int, 256, "Ulam partition size"),
    "samples_per_cell": (int, 1000, "Monte Carlo samples per Ulam cell"),
    "density_method": (str, "pushforward", "pushforward or ulam"),
    "ulam_method": (str, "auto", "auto, branches or montecarlo"),
    "tol": (float, 1e-12, "power iteration L1 tolerance"),
    "max_iter": (int, 100000, "power iteration cap"),
    "p": (float, 1.0, "moment order"),
    "k_min": (int, 10, "smallest k in the tail fit"),
    "i_max": (int, None, "outer truncation of the tail double sum; default T"),
    "mode": (str, "float", "exact or float"),
    "seed": (int, 0, "random seed"),
    "output": (str, "-", "CSV path, '-' for stdout"),
    "summary": (str, None, "JSON summary path (h-stats, suggest-sigma)"),
    "report": (str, None, "run report JSON path"),
}


@dataclass(frozen=True)
class ExperimentConfig:
    command: str = "scan"
    map: str = "paper-sqrt"
    map_kind: str = "builtin"
    map_params: str = ""
    beta: Optional[float] = None
    singular_points: Optional[tuple] = None
    sigma: Optional[float] = None
    delta: float = 0.1
    b: Optional[float] = None
    x0: float = 0.3
    N: int = 1000
    T: int = 1024
    T_grid: Optional[tuple] = None
    n: int = 50
    n_samples: int = 10000
    n_orbits: int = 4
    bins: int = 64
    k: int = 256
    samples_per_cell: int = 1000
    density_method: str = "pushforward"
    ulam_method: str = "auto"
    tol: float = 1e-12
    max_iter: int = 100000
    p: float = 1.0
    k_min: int = 10
    i_max: Optional[int] = None
    mode: str = "float"
    seed: int = 0
    output: str = "-"
    summary: Optional[str] = None
    report: Optional[str] = None

    def map_spec(self) -> dict:
        return {"name": self.map, "kind": self.map_kind, "params": self.map_params,
                "beta": self.beta, "singular_points": self.singular_points}

    def build_map(self):
        from .maps import from_spec
        return from_spec(self.map_spec())

    def ht_params(self) -> HTParams:
        if self.sigma is None:
            raise ConfigError(["sigma is required for this command"])
        return HTParams.for_map(self.build_map(), self.sigma, self.delta, self.b)

    def to_dict(self) -> dict:
        return asdict(self)


def _declared_beta(values: dict):
    if values.get("beta") is not None:
        return values["beta"]
    name = values.get("map", "paper-sqrt")
    if values.get("map_kind", "builtin") == "builtin" and name in BUILTINS:
        return BUILTINS[name]().beta
    return 0.0


def parse_lines(text: str, source: str = "config") -> tuple:
    """Split ``key = value`` lines; returns ``(raw, where, violations)``."""
    raw, where, problems = {}, {}, []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep:
            problems.append(f"{source}:{lineno}: expected 'key = value', got {line!r}")
            continue
        if key not in DEFAULTS:
            problems.append(f"{source}:{lineno}: unknown key {key!r}")
            continue
        raw[key] = value.strip()
        where[key] = f"{source}:{lineno}"
    return raw, where, problems


def build_config(raw: dict, where: Optional[dict] = None, problems=()) -> ExperimentConfig:
    """Convert raw strings to a validated :class:`ExperimentConfig`."""
    where = where or {}
    problems = list(problems)
    values = {}
    for key, text in raw.items():
        if key not in DEFAULTS:
            problems.append(f"unknown key {key!r}")
            continue
        parser = DEFAULTS[key][0]
        loc = where.get(key, key)
        try:
            values[key] = None if text in ("", "none", "None") else parser(text)
        except ValueError:
            problems.append(f"{loc}: cannot parse {key} = {text!r} as {parser.__name__.strip('_')}")

    def at(key):
        return where.get(key, key)

    cmd = values.get("command", "scan")
    if cmd not in COMMANDS:
        problems.append(f"{at('command')}: unknown command {cmd!r}; choose from {', '.join(COMMANDS)}")
    if values.get("map_kind", "builtin") == "builtin" and values.get("map", "paper-sqrt") not in BUILTINS:
        problems.append(f"{at('map')}: unknown builtin map {values.get('map')!r}")
    sigma = values.get("sigma")
    if sigma is not None and not 0 < sigma < 1:
        problems.append(f"{at('sigma')}: sigma must lie in (0,1), got {sigma}")
    delta = values.get("delta", 0.1)
    if delta is not None and not delta > 0:
        problems.append(f"{at('delta')}: delta must be positive, got {delta}")
    if values.get("b") is not None:
        beta = _declared_beta(values)
        bound = b_bound(beta)
        if not 0 < values["b"] < bound:
            problems.append(f"{at('b')}: b must satisfy 0 < b < min{{1/2, 1/(4*beta)}} = {bound:g} "
                            f"(beta = {beta:g}), got {values['b']}")
    for key in ("N", "T", "n", "n_samples", "n_orbits", "bins", "samples_per_cell", "max_iter"):
        if key in values and values[key] is not None and values[key] < 1:
            problems.append(f"{at(key)}: {key} must be a positive integer, got {values[key]}")
    if values.get("k") is not None and values["k"] < 2:
        problems.append(f"{at('k')}: k must be at least 2")
    if values.get("mode", "float") not in ("exact", "float"):
        problems.append(f"{at('mode')}: mode must be exact or float")
    if values.get("density_method", "pushforward") not in ("pushforward", "ulam"):
        problems.append(f"{at('density_method')}: density_method must be pushforward or ulam")
    if problems:
        raise ConfigError(problems)
    return ExperimentConfig(**{k: v for k, v in values.items() if v is not None})


def parse_config(text: str, overrides: Optional[dict] = None, source: str = "config") -> ExperimentConfig:
    """Parse config text, then apply ``overrides`` (raw strings; they win)."""
    raw, where, problems = parse_lines(text, source)
    for key, value in (overrides or {}).items():
        raw[key] = value
        where[key] = f"--{key}"
    return build_config(raw, where, problems)


@dataclass
class RunReport:
    command: str
    config: dict
    summary: dict = field(default_factory=dict)
    artifacts: dict = field(default_factory=dict)
    wall_clock: float = 0.0
    steps: int = 0
    schema_version: int = SCHEMA_VERSION

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "RunReport":
        data = json.loads(text)
        names = {f.name for f in fields(cls)}
        config = data.get("config", {})
        for key in ("singular_points", "T_grid"):
            if isinstance(config.get(key), list):
                config[key] = tuple(config[key])
        return cls(**{k: v for k, v in data.items() if k in names})
