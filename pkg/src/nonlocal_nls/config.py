"""Run configuration: a flat sectioned key/value document.

Example::

    [run]
    equation = focusing
    t_end = 1

    [initial]
    kind = soliton
    omega = 1

    [grid]
    N = 1024
    L = auto

Sections are ``run``, ``initial``, ``grid``, ``stepper`` and ``experiment``; the
accepted keys of each are listed in ``README.md``.  Keys are case-insensitive.
Unknown sections or keys are errors, and every error names the line it refers
to.  Overrides (``section.key=value``, as given on the command line) are applied
before validation, so they are checked exactly like file contents.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import Optional

from . import analytic as an
from .experiments import auto_half_length
from .integrator import MODELS, StepperConfig
from .nonlinearity import SignFlag


class ConfigError(ValueError):
    """Invalid configuration; ``line`` is the 1-based line number when known."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


# -- value converters ---------------------------------------------------------------


def parse_real(text: str) -> float:
    """A float, also accepting a ratio such as ``1/16``."""
    try:
        value = float(Fraction(text.strip())) if "/" in text else float(text)
    except (ValueError, ZeroDivisionError):
        raise ValueError(f"expected a real number, got {text!r}") from None
    if not math.isfinite(value):
        raise ValueError(f"expected a finite number, got {text!r}")
    return value


def parse_int(text: str) -> int:
    try:
        return int(text.strip())
    except ValueError:
        raise ValueError(f"expected an integer, got {text!r}") from None


def parse_bool(text: str) -> bool:
    v = text.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def parse_real_list(text: str) -> list:
    return [parse_real(t) for t in text.split(",") if t.strip()]


def parse_int_list(text: str) -> list:
    return [parse_int(t) for t in text.split(",") if t.strip()]


def _str(text: str) -> str:
    return text.strip()


RUN_KEYS = {"equation": _str, "t_end": parse_real, "output_dir": _str, "model": _str}
GRID_KEYS = {"n": parse_int, "l": _str}
STEPPER_KEYS = {
    "scheme": _str,
    "dt0": parse_real,
    "adaptive": parse_bool,
    "dt_min": parse_real,
    "amplitude_threshold": parse_real,
    "conservation_tol": parse_real,
    "dealias": parse_bool,
    "monitor_stride": parse_int,
}
KIND_PARAMS = {
    "soliton": ("omega",),
    "one_param": ("alpha",),
    "two_param": ("alpha", "beta"),
    "perturbed_soliton": ("omega", "delta"),
    "zero": (),
}
EXPERIMENT_KEYS = {
    "small_data_blowup": {
        "alpha": parse_real,
        "n": parse_int,
        "l": parse_real,
        "t_end": parse_real,
        "sweep_alphas": parse_real_list,
        "simulate_sweep": parse_bool,
    },
    "soliton_instability": {
        "omega": parse_real,
        "delta": parse_real,
        "n": parse_int,
        "l": parse_real,
        "t_end": parse_real,
    },
    "even_equivalence": {
        "omega": parse_real,
        "t_end": parse_real,
        "n": parse_int,
        "l": parse_real,
        "zero_data": parse_bool,
    },
    "defocusing_probe": {
        "kind": _str,
        "omega": parse_real,
        "alpha": parse_real,
        "beta": parse_real,
        "delta": parse_real,
        "t_end": parse_real,
        "n": parse_int,
        "l": parse_real,
    },
    "h1_convergence": {"omega": parse_real, "deltas": parse_real_list, "n": parse_int, "l": parse_real},
    "norm_scaling": {"alphas": parse_real_list, "ks": parse_int_list, "n": parse_int},
    "offcenter_boundedness": {
        "alpha": parse_real,
        "beta": parse_real,
        "x0": parse_real,
        "n_uniform": parse_int,
    },
}
SECTIONS = ("run", "initial", "grid", "stepper", "experiment")
DEFAULT_N = 1024


def catalog_datum(kind: str, params: dict):
    """Build a catalog initial datum from its kind name and parameters."""
    if kind not in KIND_PARAMS:
        raise ValueError(f"unknown initial kind {kind!r}; expected one of {tuple(KIND_PARAMS)}")
    missing = [k for k in KIND_PARAMS[kind] if k not in params]
    if missing:
        raise ValueError(f"initial kind {kind!r} needs {', '.join(missing)}")
    extra = sorted(set(params) - set(KIND_PARAMS[kind]))
    if extra:
        raise ValueError(f"initial kind {kind!r} does not take {', '.join(extra)}")
    if kind == "soliton":
        return an.SolitonParams(params["omega"])
    if kind == "one_param":
        return an.one_param(params["alpha"])
    if kind == "two_param":
        return an.TwoSolitonParams(params["alpha"], params["beta"])
    if kind == "perturbed_soliton":
        return an.PerturbedSolitonParams(params["omega"], params["delta"])
    return an.ZeroData()


@dataclass(frozen=True)
class ExperimentSpec:
    name: str
    params: dict = field(default_factory=dict)


@dataclass(frozen=True)
class RunConfig:
    equation: SignFlag = SignFlag.FOCUSING
    kind: Optional[str] = None
    params: dict = field(default_factory=dict)
    samples_file: Optional[Path] = None
    N: Optional[int] = None
    L: Optional[float] = None
    L_auto: bool = False
    stepper: StepperConfig = field(default_factory=StepperConfig)
    stepper_overrides: dict = field(default_factory=dict)
    t_end: Optional[float] = None
    output_dir: Optional[Path] = None
    model: str = "nonlocal"
    experiment: Optional[ExperimentSpec] = None

    def datum(self):
        return catalog_datum(self.kind, self.params) if self.kind else None

    def initial_field(self):
        from .grid import make_grid
        from .io import read_samples

        if self.samples_file is not None:
            return read_samples(self.samples_file)
        return an.sample_exact(self.datum(), 0.0, make_grid(self.N, self.L))

    def to_dict(self) -> dict:
        """Resolved settings, as recorded in output reports."""
        out = {"equation": self.equation.name.lower(), "model": self.model, "t_end": self.t_end}
        if self.samples_file is not None:
            out["initial"] = {"samples_file": str(self.samples_file)}
        elif self.kind is not None:
            out["initial"] = {"kind": self.kind, **self.params}
        if self.N is not None:
            out["grid"] = {"N": self.N, "L": self.L, "L_auto": self.L_auto}
        if self.experiment is not None:
            out["experiment"] = {"name": self.experiment.name, **self.experiment.params}
        return out


# -- parsing ------------------------------------------------------------------------------


def _line_index(text: str) -> dict:
    """Map ``(section, key)`` and ``(section, None)`` to 1-based line numbers."""
    index: dict = {}
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line[0] in "#;":
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip().lower()
            index.setdefault((section, None), lineno)
            continue
        for sep in ("=", ":"):
            if sep in line:
                key = line.split(sep, 1)[0].strip().lower()
                index.setdefault((section, key), lineno)
                break
    return index


def _parser_from_text(text: str) -> configparser.ConfigParser:
    cp = configparser.ConfigParser(interpolation=None, strict=True, default_section="\x00unused")
    try:
        cp.read_string(text, source="<config>")
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError("key outside any [section]", exc.lineno) from None
    except configparser.ParsingError as exc:
        lineno = exc.errors[0][0] if exc.errors else None
        raise ConfigError("malformed line; expected 'key = value'", lineno) from None
    except configparser.DuplicateSectionError as exc:
        raise ConfigError(f"duplicate section [{exc.section}]", exc.lineno) from None
    except configparser.DuplicateOptionError as exc:
        raise ConfigError(f"duplicate key {exc.option!r} in [{exc.section}]", exc.lineno) from None
    return cp


def _apply_overrides(cp: configparser.ConfigParser, overrides) -> set:
    touched = set()
    for item in overrides or ():
        if isinstance(item, tuple):
            dotted, value = item
        else:
            dotted, sep, value = str(item).partition("=")
            if not sep:
                raise ConfigError(f"override {item!r} must look like section.key=value")
        section, dot, key = dotted.strip().lower().partition(".")
        if not dot or not key:
            raise ConfigError(f"override {dotted!r} must name section.key")
        if not cp.has_section(section):
            cp.add_section(section)
        cp.set(section, key, str(value))
        touched.add((section, key))
    return touched


def _convert(schema: dict, section: str, items: dict, where) -> dict:
    out = {}
    for key, text in items.items():
        if key not in schema:
            raise ConfigError(f"unknown key {key!r} in [{section}]", where(section, key))
        try:
            out[key] = schema[key](text)
        except ValueError as exc:
            raise ConfigError(f"[{section}] {key}: {exc}", where(section, key)) from None
    return out


def parse_config(text: str, overrides=None, base_dir=None) -> RunConfig:
    """Parse and validate a configuration document.

    ``overrides`` is an iterable of ``"section.key=value"`` strings (or
    ``(dotted_key, value)`` pairs) that replace or add keys.  Relative paths are
    resolved against ``base_dir`` when given.
    """
    cp = _parser_from_text(text)
    touched = _apply_overrides(cp, overrides)
    index = _line_index(text)

    def where(section, key=None):
        if (section, key) in touched:
            return None
        return index.get((section, key)) or index.get((section, None))

    for section in cp.sections():
        if section not in SECTIONS:
            raise ConfigError(f"unknown section [{section}]; expected one of {SECTIONS}", where(section.lower()))
    sec = {name: dict(cp.items(name)) if cp.has_section(name) else {} for name in SECTIONS}

    run = _convert(RUN_KEYS, "run", sec["run"], where)
    try:
        equation = SignFlag.parse(run.get("equation", "focusing"))
    except ValueError as exc:
        raise ConfigError(str(exc), where("run", "equation")) from None
    model = run.get("model", "nonlocal")
    if model not in MODELS:
        raise ConfigError(f"model must be one of {MODELS}, got {model!r}", where("run", "model"))
    t_end = run.get("t_end")
    if t_end is not None and not t_end > 0:
        raise ConfigError(f"t_end must be positive, got {t_end}", where("run", "t_end"))

    def resolve(path_text: str) -> Path:
        p = Path(path_text)
        return p if p.is_absolute() or base_dir is None else Path(base_dir) / p

    output_dir = resolve(run["output_dir"]) if "output_dir" in run else None

    stepper_overrides = _convert(STEPPER_KEYS, "stepper", sec["stepper"], where)
    try:
        stepper = replace(StepperConfig(), **stepper_overrides)
    except ValueError as exc:
        first = next(iter(stepper_overrides), None)
        raise ConfigError(f"[stepper] {exc}", where("stepper", first)) from None

    experiment = None
    if sec["experiment"]:
        items = dict(sec["experiment"])
        name = items.pop("name", None)
        if name is None:
            raise ConfigError("[experiment] needs a 'name' key", where("experiment"))
        if name not in EXPERIMENT_KEYS:
            raise ConfigError(
                f"unknown experiment {name!r}; expected one of {tuple(EXPERIMENT_KEYS)}",
                where("experiment", "name"),
            )
        experiment = ExperimentSpec(name, _convert(EXPERIMENT_KEYS[name], "experiment", items, where))

    initial = dict(sec["initial"])
    samples_file = initial.pop("samples_file", None)
    kind = initial.pop("kind", None)
    if samples_file is not None and (kind is not None or initial):
        raise ConfigError("conflicting initial data: give either a catalog kind or samples_file", where("initial"))
    if experiment is not None and (samples_file is not None or kind is not None):
        raise ConfigError("conflicting initial data: the experiment sets its own initial data", where("initial"))
    if samples_file is None and kind is None:
        if initial:
            raise ConfigError("[initial] parameters given without a kind", where("initial"))
        if experiment is None:
            raise ConfigError("missing initial data: set [initial] kind or samples_file", where("initial"))

    params = {}
    datum = None
    if kind is not None:
        kind = kind.strip()
        for key, text in initial.items():
            try:
                params[key] = parse_real(text)
            except ValueError as exc:
                raise ConfigError(f"[initial] {key}: {exc}", where("initial", key)) from None
        try:
            datum = catalog_datum(kind, params)
        except ValueError as exc:
            raise ConfigError(str(exc), where("initial", "kind")) from None

    grid = _convert(GRID_KEYS, "grid", sec["grid"], where)
    N = L = None
    L_auto = False
    if samples_file is not None:
        if grid:
            raise ConfigError("the grid is read from samples_file; drop the [grid] keys", where("grid"))
    elif datum is not None:
        N = grid.get("n", DEFAULT_N)
        if N < 8 or N & (N - 1):
            raise ConfigError(f"N must be a power of two >= 8, got {N}", where("grid", "n"))
        l_text = grid.get("l", "auto")
        if l_text.lower() == "auto":
            L, L_auto = auto_half_length(datum.decay_rate), True
        else:
            try:
                L = parse_real(l_text)
            except ValueError as exc:
                raise ConfigError(f"[grid] L: {exc}", where("grid", "l")) from None
            if not L > 0:
                raise ConfigError(f"L must be positive, got {L}", where("grid", "l"))

    return RunConfig(
        equation=equation,
        kind=kind,
        params=params,
        samples_file=resolve(samples_file.strip()) if samples_file is not None else None,
        N=N,
        L=L,
        L_auto=L_auto,
        stepper=stepper,
        stepper_overrides=stepper_overrides,
        t_end=t_end,
        output_dir=output_dir,
        model=model,
        experiment=experiment,
    )


def load_config(path, overrides=None) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        return parse_config(text, overrides, base_dir=path.parent)
    except ConfigError as exc:
        err = ConfigError(f"{path}: {exc}")
        err.line = exc.line
        raise err from None
