"""Declarative experiment configuration.

A run is described by a single JSON document: the measure as a tagged
object, the model numbers, the initial state, grids, and per-subcommand
options. Values omitted from the file fall back to defaults here, and
dotted-path overrides from the command line edit the raw document before
validation so every input goes through the same checks.
"""

import dataclasses
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigParseError, ConfigValidationError
from .measures import (Atoms, GaussianTrunc, Semicircle, SpectralMeasure,
                       Tabulated, Uniform, make_measure)
from .state import TwoLevelState

_KNOWN_KEYS = frozenset({
    "measure", "s", "v", "E", "rho0", "n", "samples", "seed", "times",
    "taus", "contour", "out", "beta", "window", "bins", "threshold",
})
_GRID_KEYS = frozenset({"start", "stop", "points"})
_CONTOUR_KEYS = frozenset({"eta1", "eta2", "x", "tol"})


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid given as endpoints plus a point count."""

    start: float
    stop: float
    points: int

    def values(self):
        return np.linspace(self.start, self.stop, self.points)


@dataclass(frozen=True)
class ContourOverrides:
    """Optional contour geometry; None means pick automatically."""

    eta1: float = None
    eta2: float = None
    x: float = None
    tol: float = None

    def any_geometry(self):
        return any(v is not None for v in (self.eta1, self.eta2, self.x))


@dataclass(eq=False)
class ExperimentConfig:
    measure: SpectralMeasure
    splitting: float
    coupling: float
    energy: float
    rho0: np.ndarray
    n: int = 400
    samples: int = 50
    seed: int = 0
    times: GridSpec = field(default_factory=lambda: GridSpec(0.0, 10.0, 101))
    taus: GridSpec = field(default_factory=lambda: GridSpec(0.0, 2.0, 81))
    contour: ContourOverrides = field(default_factory=ContourOverrides)
    out_dir: str = "runs"
    beta: float = 1.0
    window: float = None
    bins: int = 64
    threshold: float = 0.05


def _number(raw, key, default=None, minimum=None, optional=False):
    if key not in raw or raw[key] is None:
        if default is None and not optional:
            raise ConfigValidationError(f"missing config key '{key}'")
        return default
    try:
        value = float(raw[key])
    except (TypeError, ValueError):
        raise ConfigValidationError(
            f"config key '{key}' must be a number, got {raw[key]!r}")
    if not np.isfinite(value):
        raise ConfigValidationError(f"config key '{key}' must be finite")
    if minimum is not None and value < minimum:
        raise ConfigValidationError(
            f"config key '{key}' must be >= {minimum}, got {value}")
    return value


def _integer(raw, key, default, minimum):
    if key not in raw or raw[key] is None:
        return default
    value = raw[key]
    if not isinstance(value, int) or isinstance(value, bool):
        raise ConfigValidationError(
            f"config key '{key}' must be an integer, got {value!r}")
    if value < minimum:
        raise ConfigValidationError(
            f"config key '{key}' must be >= {minimum}, got {value}")
    return value


def _parse_rho0(raw):
    if "rho0" not in raw or raw["rho0"] is None:
        return np.diag([1.0 + 0j, 0.0])
    spec = raw["rho0"]
    try:
        if isinstance(spec, dict):
            re = np.asarray(spec["re"], dtype=float)
            im = np.asarray(spec.get("im", np.zeros_like(re)), dtype=float)
            matrix = re + 1j * im
        else:
            matrix = np.asarray(spec, dtype=complex)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigValidationError(
            f"config key 'rho0' is not a 2x2 matrix: {exc}") from exc
    if matrix.shape != (2, 2):
        raise ConfigValidationError(
            f"config key 'rho0' must be 2x2, got shape {matrix.shape}")
    TwoLevelState(matrix).validate()
    return matrix


def _parse_grid(raw, key, default):
    if key not in raw or raw[key] is None:
        return default
    spec = raw[key]
    if not isinstance(spec, dict):
        raise ConfigValidationError(
            f"config key '{key}' must be an object with start/stop/points")
    unknown = set(spec) - _GRID_KEYS
    if unknown:
        raise ConfigValidationError(
            f"unknown key '{key}.{sorted(unknown)[0]}'")
    start = _number(spec, "start", default=default.start)
    stop = _number(spec, "stop", default=default.stop)
    points = _integer(spec, "points", default=default.points, minimum=1)
    if stop < start or (points > 1 and stop == start):
        raise ConfigValidationError(
            f"config key '{key}' must be increasing: "
            f"start={start}, stop={stop}")
    return GridSpec(start=start, stop=stop, points=points)


def _parse_contour(raw):
    if "contour" not in raw or raw["contour"] is None:
        return ContourOverrides()
    spec = raw["contour"]
    if not isinstance(spec, dict):
        raise ConfigValidationError("config key 'contour' must be an object")
    unknown = set(spec) - _CONTOUR_KEYS
    if unknown:
        raise ConfigValidationError(
            f"unknown key 'contour.{sorted(unknown)[0]}'")
    kw = {}
    for name in sorted(_CONTOUR_KEYS):
        value = _number(spec, name, optional=True)
        if value is not None and value <= 0:
            raise ConfigValidationError(
                f"config key 'contour.{name}' must be > 0, got {value}")
        kw[name] = value
    return ContourOverrides(**kw)


def from_dict(raw) -> ExperimentConfig:
    """Validate a raw config document and fill defaults.

    Errors name the offending key so failures in nested objects are
    attributable without reading a traceback.
    """
    if not isinstance(raw, dict):
        raise ConfigValidationError("config document must be an object")
    unknown = set(raw) - _KNOWN_KEYS
    if unknown:
        raise ConfigValidationError(f"unknown config key '{sorted(unknown)[0]}'")
    if "measure" not in raw:
        raise ConfigValidationError("missing config key 'measure'")
    measure = make_measure(raw["measure"])
    seed = _integer(raw, "seed", default=0, minimum=0)
    if seed >= 2 ** 64:
        raise ConfigValidationError("config key 'seed' must fit in 64 bits")
    window = _number(raw, "window", optional=True)
    if window is not None and window <= 0:
        raise ConfigValidationError(
            f"config key 'window' must be > 0, got {window}")
    threshold = _number(raw, "threshold", default=0.05)
    if threshold <= 0:
        raise ConfigValidationError(
            f"config key 'threshold' must be > 0, got {threshold}")
    out = raw.get("out", "runs")
    if not isinstance(out, str) or not out:
        raise ConfigValidationError("config key 'out' must be a nonempty path")
    return ExperimentConfig(
        measure=measure,
        splitting=_number(raw, "s"),
        coupling=_number(raw, "v", minimum=0.0),
        energy=_number(raw, "E"),
        rho0=_parse_rho0(raw),
        n=_integer(raw, "n", default=400, minimum=1),
        samples=_integer(raw, "samples", default=50, minimum=1),
        seed=seed,
        times=_parse_grid(raw, "times", GridSpec(0.0, 10.0, 101)),
        taus=_parse_grid(raw, "taus", GridSpec(0.0, 2.0, 81)),
        contour=_parse_contour(raw),
        out_dir=out,
        beta=_number(raw, "beta", default=1.0),
        window=window,
        bins=_integer(raw, "bins", default=64, minimum=2),
        threshold=threshold,
    )


def read_raw(path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            return json.load(handle)
    except OSError as exc:
        raise ConfigParseError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigParseError(f"config {path} is not valid JSON: {exc}") from exc


def load_config(path) -> ExperimentConfig:
    return from_dict(read_raw(path))


def apply_override(raw, item):
    """Apply one dotted-path override 'a.b.c=value' to a raw document.

    The value is parsed as JSON when possible, otherwise kept as a bare
    string, so both --set s=0.3 and --set out=results work.
    """
    key, sep, text = item.partition("=")
    if not sep or not key:
        raise ConfigValidationError(
            f"override must look like key=value, got {item!r}")
    try:
        value = json.loads(text)
    except json.JSONDecodeError:
        value = text
    parts = key.split(".")
    node = raw
    for part in parts[:-1]:
        child = node.get(part)
        if child is None:
            child = {}
            node[part] = child
        if not isinstance(child, dict):
            raise ConfigValidationError(
                f"cannot override '{key}': '{part}' is not an object")
        node = child
    node[parts[-1]] = value
    return raw


def apply_overrides(raw, items):
    for item in items:
        apply_override(raw, item)
    return raw


def measure_spec(measure) -> dict:
    """Tagged-object form of a measure, inverse of make_measure."""
    if isinstance(measure, Atoms):
        return {"type": "atoms",
                "locations": [float(x) for x in measure.locations],
                "weights": [float(w) for w in measure.weights]}
    if isinstance(measure, Semicircle):
        return {"type": "semicircle", "radius": float(measure.radius)}
    if isinstance(measure, Uniform):
        return {"type": "uniform", "a": float(measure.a),
                "b": float(measure.b)}
    if isinstance(measure, GaussianTrunc):
        return {"type": "gaussian", "sigma": float(measure.sigma),
                "truncation": float(measure.halfwidth)}
    if isinstance(measure, Tabulated):
        return {"type": "tabulated",
                "grid": [float(x) for x in measure.grid],
                "values": [float(x) for x in measure.values]}
    raise ConfigValidationError(
        f"cannot serialize measure of type {type(measure).__name__}")


def config_to_dict(cfg: ExperimentConfig) -> dict:
    """Canonical JSON-ready form; load(dump(cfg)) equals cfg."""
    return {
        "measure": measure_spec(cfg.measure),
        "s": cfg.splitting,
        "v": cfg.coupling,
        "E": cfg.energy,
        "rho0": {"re": cfg.rho0.real.tolist(), "im": cfg.rho0.imag.tolist()},
        "n": cfg.n,
        "samples": cfg.samples,
        "seed": cfg.seed,
        "times": dataclasses.asdict(cfg.times),
        "taus": dataclasses.asdict(cfg.taus),
        "contour": dataclasses.asdict(cfg.contour),
        "out": cfg.out_dir,
        "beta": cfg.beta,
        "window": cfg.window,
        "bins": cfg.bins,
        "threshold": cfg.threshold,
    }


def dumps_config(cfg: ExperimentConfig) -> str:
    return json.dumps(config_to_dict(cfg), indent=2, sort_keys=True)
