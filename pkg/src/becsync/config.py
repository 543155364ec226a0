"""Flat ``key = value`` experiment configs.

One key per line, ``#`` starts a comment, values are bare text.  Every file
carries ``schema_version`` and names its ``experiment`` (the CLI subcommand
may supply the latter).  Resolution checks the file against the schema of the
chosen experiment: unknown keys are rejected, required keys must be present,
numbers must be finite and inside their ranges.  Errors name the key and,
when the value came from a file, its line and column.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

SCHEMA_VERSION = 1

EXPERIMENTS = (
    "meanfield-run", "phase-portrait", "ms-scan", "amplitude-map", "spectrum",
    "fock-evolve", "coherent-evolve", "q-snapshot", "measures",
)

_KEY_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")
REQUIRED = object()


class ConfigError(ValueError):
    """Invalid configuration; ``key`` names the offending entry when known."""

    def __init__(self, message, key=None, line=None, column=None):
        self.key, self.line, self.column = key, line, column
        loc = ""
        if line is not None:
            loc = f"line {line}" + (f", column {column}" if column is not None else "")
        if key is not None:
            prefix = f"key {key!r}" + (f" ({loc})" if loc else "")
        else:
            prefix = loc
        super().__init__(f"{prefix}: {message}" if prefix else message)


@dataclass(frozen=True)
class Entry:
    """A raw value with the place it came from."""

    text: str
    line: int | None = None
    column: int | None = None  # of the value
    key_column: int | None = None


@dataclass(frozen=True)
class Field:
    kind: str  # real, int, bool, str, choice, list
    default: object = REQUIRED
    choices: tuple = ()
    low: float | None = None
    high: float | None = None
    low_open: bool = False
    doc: str = ""


def _real(default=REQUIRED, low=None, high=None, low_open=False, doc=""):
    return Field("real", default, low=low, high=high, low_open=low_open, doc=doc)


def _int(default=REQUIRED, low=None, high=None, doc=""):
    return Field("int", default, low=low, high=high, doc=doc)


def _choice(choices, default=REQUIRED, doc=""):
    return Field("choice", default, choices=tuple(choices), doc=doc)


def _list(choices, default, doc=""):
    return Field("list", tuple(default), choices=tuple(choices), doc=doc)


# --- observables ----------------------------------------------------------

INFO_VARIANTS = ("paper", "von_neumann", "direct", "wehrl")

FOCK_OBSERVABLES = (
    "n_A", "var_n_A", "var_x_minus", "var_p_minus", "s_c", "s_c_bound", "s_c_paper",
    "energy", "norm", "populations", "coefficients",
) + tuple(f"i_ab_{v}" for v in INFO_VARIANTS)

COHERENT_OBSERVABLES = (
    "n_A", "n_B", "var_n_A", "x_A", "p_A", "x_B", "p_B", "a_A", "a_B",
    "mean_x_minus", "mean_p_minus", "var_x_minus", "var_p_minus", "s_c", "s_c_bound",
    "energy", "norm",
) + tuple(f"i_ab_{v}" for v in INFO_VARIANTS)

# --- schemas --------------------------------------------------------------

_MF_DEFAULT = {"alpha0_re": 1 / math.sqrt(6), "alpha0_im": 2 / math.sqrt(6),
         "beta0_re": 0.0, "beta0_im": 1 / math.sqrt(6)}

_COMMON = {
    "schema_version": _int(REQUIRED, doc="config format version"),
    "experiment": _choice(EXPERIMENTS, doc="experiment name"),
    "output": Field("str", "", doc="data CSV path; defaults to <experiment>.csv"),
}

_MF_COUPLING = {
    "delta_bar": _real(0.0, doc="scaled detuning"),
    "g_bar": _real(1.0, low=0.0, low_open=True, doc="scaled tunnelling, frequency unit"),
    "chi": _real(0.0, doc="nonlinear coupling"),
}

_MF_STATE = {k: _real(v, doc="initial amplitude component") for k, v in _MF_DEFAULT.items()}
_MF_STATE["normalize"] = Field("bool", False, doc="rescale the initial amplitudes onto the unit shell")

_MF_RUN = {
    "t_max": _real(REQUIRED, low=0.0, low_open=True, doc="end of the run (scaled time)"),
    "samples": _int(2001, low=2, doc="output samples including both ends"),
    "rel_tol": _real(1e-12, low=1e-14, high=1e-4, doc="integrator relative tolerance"),
    "transient": _real(-1.0, doc="leading span dropped from amplitudes; negative means 20% of run"),
    "window": _real(-1.0, doc="analysis window after the transient; negative means to the end"),
}

# scans trade two digits of integrator accuracy for speed; areas still agree to ~1e-9
_SCAN_TOL = _real(1e-10, low=1e-14, high=1e-4, doc="integrator relative tolerance")

_Q_COUPLING = {
    "delta": _real(0.0, doc="detuning"),
    "g": _real(1.0, low=0.0, low_open=True, doc="tunnelling, frequency unit"),
    "chi": _real(0.0, doc="nonlinear coupling"),
}

_Q_STATE = {
    "state": _choice(("fock", "coherent"), "fock", doc="initial-state family"),
    "N": _int(-1, low=-1, doc="atom number (fock)"),
    "j0": _int(-1, low=-1, doc="initial atoms in mode A (fock); negative means N"),
    "alpha0_re": _real(0.0, doc="coherent amplitude of mode A (coherent)"),
    "alpha0_im": _real(0.0, doc="coherent amplitude of mode A (coherent)"),
    "n_trunc": _int(-1, low=-1, doc="total-number truncation (coherent)"),
    "max_deficit": _real(1e-2, low=0.0, high=1.0, doc="largest tolerated truncation loss"),
}

_Q_TIME = {
    "t_max": _real(REQUIRED, low=0.0, low_open=True, doc="end of the run in units of time_unit"),
    "samples": _int(2001, low=2, doc="output samples including both ends"),
    "time_unit": _choice(("paper", "natural"), "natural",
                         doc="paper: pi/(1+(N-1)chi/g) (fixed N only); natural: 1/g"),
    "transient": _real(-1.0, doc="leading span dropped from amplitude metrics; negative means 20%"),
}

_GRID = {
    "n_r": _int(120, low=2, doc="radial Gauss-Legendre nodes"),
    "n_theta": _int(96, low=1, doc="angular nodes"),
    "r_max": _real(0.0, low=0.0, doc="grid radius; 0 chooses max(sqrt(4(n+1)), 6)"),
    "kl_n_r": _int(40, low=2, doc="radial nodes per mode for the joint (direct) integral"),
    "kl_n_theta": _int(40, low=1, doc="angular nodes per mode for the joint (direct) integral"),
}

SCHEMAS: dict[str, dict[str, Field]] = {
    "meanfield-run": {**_MF_COUPLING, **_MF_STATE, **_MF_RUN},
    "phase-portrait": {
        **_MF_COUPLING,
        "n_orbits": _int(12, low=1, doc="random orbits"),
        "rng_seed": _int(0, low=0, doc="seed of the 64-bit generator"),
        "t_max": _real(30.0, low=0.0, low_open=True, doc="orbit length"),
        "samples": _int(1501, low=2, doc="samples per orbit"),
        "separatrix": Field("bool", True, doc="append orbits seeded at phi=pi/2, 3pi/2"),
    },
    "ms-scan": {
        **{k: v for k, v in _MF_COUPLING.items() if k != "chi"},
        **_MF_STATE,
        **{**_MF_RUN, "t_max": _real(200.0, low=0.0, low_open=True, doc="run length per point"),
           "samples": _int(4001, low=2, doc="samples per point"), "rel_tol": _SCAN_TOL},
        "chi_start": _real(REQUIRED, doc="first chi"),
        "chi_stop": _real(REQUIRED, doc="last chi"),
        "n_chi": _int(200, low=1, doc="chi points"),
        "workers": _int(1, low=1, doc="worker processes"),
    },
    "amplitude-map": {
        "g_bar": _MF_COUPLING["g_bar"],
        **_MF_STATE,
        **{**_MF_RUN, "t_max": _real(100.0, low=0.0, low_open=True, doc="run length per point"),
           "rel_tol": _SCAN_TOL},
        "delta_start": _real(REQUIRED, doc="first delta_bar"),
        "delta_stop": _real(REQUIRED, doc="last delta_bar"),
        "n_delta": _int(41, low=1, doc="delta_bar points"),
        "chi_start": _real(REQUIRED, doc="first chi"),
        "chi_stop": _real(REQUIRED, doc="last chi"),
        "n_chi": _int(41, low=1, doc="chi points"),
        "workers": _int(1, low=1, doc="worker processes"),
    },
    "spectrum": {
        "N": _int(REQUIRED, low=0, doc="atom number"),
        "delta": _real(0.0), "g": _Q_COUPLING["g"],
        "chi_start": _real(-1.0), "chi_stop": _real(0.0),
        "n_chi": _int(101, low=1, doc="chi points"),
    },
    "fock-evolve": {
        "N": _int(REQUIRED, low=0, doc="atom number"),
        "j0": _Q_STATE["j0"],
        **_Q_COUPLING, **_Q_TIME,
        "observables": _list(FOCK_OBSERVABLES, ("n_A", "s_c", "s_c_bound"), doc="output columns"),
    },
    "coherent-evolve": {
        "alpha0_re": _real(REQUIRED), "alpha0_im": _real(0.0),
        "n_trunc": _int(REQUIRED, low=0, doc="total-number truncation"),
        "max_deficit": _Q_STATE["max_deficit"],
        **_Q_COUPLING,
        **{k: v for k, v in _Q_TIME.items() if k != "time_unit"},
        **_GRID,
        "observables": _list(COHERENT_OBSERVABLES, ("n_A", "n_B", "s_c"), doc="output columns"),
    },
    "q-snapshot": {
        **_Q_STATE, **_Q_COUPLING, **_GRID,
        "time": _real(0.0, doc="snapshot time in units of time_unit"),
        "time_unit": _Q_TIME["time_unit"],
        "mode": _choice(("A", "B"), "A", doc="which marginal"),
        "convention": _choice(("standard", "paper"), "standard", doc="marginal weights and measure"),
    },
    "measures": {
        **_Q_STATE, **_Q_COUPLING, **_Q_TIME, **_GRID,
        "variance": _choice(("exact", "paper"), "exact", doc="error-variance formulas"),
        "info_variants": _list(INFO_VARIANTS, ("paper", "von_neumann"), doc="mutual-information columns"),
    },
}

for _s in SCHEMAS.values():
    for _k, _f in _COMMON.items():
        _s.setdefault(_k, _f)


# --- parsing --------------------------------------------------------------

def parse_text(text: str, source="<config>") -> dict[str, Entry]:
    """Split config text into raw entries, rejecting malformed lines."""
    entries: dict[str, Entry] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        if not line.strip():
            continue
        if "=" not in line:
            col = len(line) - len(line.lstrip()) + 1
            raise ConfigError(f"expected 'key = value' in {source}", line=lineno, column=col)
        key_part, value_part = line.split("=", 1)
        key = key_part.strip()
        key_col = len(key_part) - len(key_part.lstrip()) + 1
        if not key:
            raise ConfigError("missing key before '='", line=lineno, column=key_col)
        if not _KEY_RE.match(key):
            bad = next(i for i, ch in enumerate(key) if not (ch.isalnum() or ch == "_") or (i == 0 and ch.isdigit()))
            raise ConfigError(f"invalid character {key[bad]!r} in key", key=key, line=lineno,
                              column=key_col + bad)
        value = value_part.strip()
        val_col = len(key_part) + 2 + (len(value_part) - len(value_part.lstrip()))
        if key in entries:
            raise ConfigError(f"duplicate key (first set on line {entries[key].line})", key=key,
                              line=lineno, column=key_col)
        entries[key] = Entry(value, lineno, val_col, key_col)
    return entries


def _stringify(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (list, tuple)):
        return ",".join(str(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def load_file(path) -> dict[str, Entry]:
    """Read a config file, or the ``config`` echoed in a JSON metadata sidecar."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror or exc}") from exc
    if path.suffix == ".json":
        try:
            meta = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc.msg}", line=exc.lineno, column=exc.colno) from exc
        cfg = meta.get("config") if isinstance(meta, dict) else None
        if not isinstance(cfg, dict):
            raise ConfigError("JSON file has no 'config' object")
        return {str(k): Entry(_stringify(v)) for k, v in cfg.items()}
    return parse_text(text, str(path))


def parse_override(item: str) -> tuple[str, Entry]:
    if "=" not in item:
        raise ConfigError(f"override {item!r} is not key=value")
    key, value = item.split("=", 1)
    key = key.strip()
    if not _KEY_RE.match(key):
        raise ConfigError("invalid override key", key=key)
    return key, Entry(value.strip())


# --- resolution -----------------------------------------------------------

def _convert(key, f: Field, e: Entry):
    text = e.text

    def fail(msg):
        raise ConfigError(msg, key=key, line=e.line, column=e.column)

    if f.kind == "str":
        return text
    if f.kind == "bool":
        low = text.lower()
        if low in ("true", "yes", "1", "on"):
            return True
        if low in ("false", "no", "0", "off"):
            return False
        fail(f"expected true or false, got {text!r}")
    if f.kind == "choice":
        if text not in f.choices:
            fail(f"expected one of {', '.join(f.choices)}; got {text!r}")
        return text
    if f.kind == "list":
        items = tuple(x.strip() for x in text.split(",") if x.strip())
        for x in items:
            if x not in f.choices:
                fail(f"unknown item {x!r}; allowed: {', '.join(f.choices)}")
        return items
    if f.kind == "int":
        try:
            v = int(text)
        except ValueError:
            try:
                fv = float(text)
            except ValueError:
                fail(f"expected an integer, got {text!r}")
            if not (math.isfinite(fv) and fv == int(fv)):
                fail(f"expected an integer, got {text!r}")
            v = int(fv)
    else:
        try:
            v = float(text)
        except ValueError:
            fail(f"expected a real number, got {text!r}")
        if not math.isfinite(v):
            fail(f"must be finite, got {text!r}")
    if f.low is not None and (v < f.low or (f.low_open and v == f.low)):
        fail(f"out of range: must be {'>' if f.low_open else '>='} {f.low:g}, got {text}")
    if f.high is not None and v > f.high:
        fail(f"out of range: must be <= {f.high:g}, got {text}")
    return v


@dataclass
class ExperimentConfig:
    experiment: str
    params: dict = field(default_factory=dict)
    schema_version: int = SCHEMA_VERSION

    def __getitem__(self, key):
        return self.params[key]

    def echo(self) -> dict:
        """JSON-ready resolved config (lists become lists)."""
        return {k: list(v) if isinstance(v, tuple) else v for k, v in sorted(self.params.items())}

    def to_text(self) -> str:
        """Config-file text that resolves back to this config."""
        return "".join(f"{k} = {_stringify(v)}\n" for k, v in sorted(self.params.items()))

    def output_path(self) -> Path:
        return Path(self.params.get("output") or f"{self.experiment}.csv")

    def with_values(self, **updates) -> "ExperimentConfig":
        return resolve({k: Entry(_stringify(v)) for k, v in {**self.params, **updates}.items()})


def _check_conditional(exp, params):
    if exp in ("q-snapshot", "measures"):
        if params["state"] == "fock":
            if params["N"] < 0:
                raise ConfigError("required when state = fock", key="N")
        else:
            if params["n_trunc"] < 0:
                raise ConfigError("required when state = coherent", key="n_trunc")
            if params.get("time_unit") == "paper":
                raise ConfigError("paper time unit needs a fixed atom number", key="time_unit")
    if "j0" in params and params.get("N", -1) >= 0 and params["j0"] > params["N"]:
        raise ConfigError(f"must not exceed N = {params['N']}", key="j0")


def resolve(entries: dict[str, Entry], experiment: str | None = None) -> ExperimentConfig:
    """Check raw entries against the experiment schema and apply defaults."""
    entries = dict(entries)
    if "experiment" in entries:
        e = entries["experiment"]
        name = e.text
        if name not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {name!r}", key="experiment", line=e.line, column=e.column)
        if experiment is not None and name != experiment:
            raise ConfigError(f"file is for {name!r} but {experiment!r} was requested",
                              key="experiment", line=e.line, column=e.column)
    elif experiment is None:
        raise ConfigError("missing required key", key="experiment")
    else:
        name = experiment
        entries["experiment"] = Entry(name)
    schema = SCHEMAS[name]
    for key, e in entries.items():
        if key not in schema:
            raise ConfigError(f"unknown key for experiment {name!r}", key=key, line=e.line,
                              column=e.key_column)
    params = {}
    for key, f in schema.items():
        if key in entries:
            params[key] = _convert(key, f, entries[key])
        elif f.default is REQUIRED:
            raise ConfigError("missing required key", key=key)
        else:
            params[key] = f.default
    if params["schema_version"] != SCHEMA_VERSION:
        e = entries["schema_version"]
        raise ConfigError(f"unsupported schema version {params['schema_version']} "
                          f"(this build reads {SCHEMA_VERSION})", key="schema_version",
                          line=e.line, column=e.column)
    _check_conditional(name, params)
    return ExperimentConfig(name, params, params["schema_version"])


def load_config(path=None, overrides=(), experiment=None) -> ExperimentConfig:
    """File entries, then ``key=value`` overrides (which win), then resolution."""
    entries = load_file(path) if path is not None else {}
    for item in overrides:
        key, e = parse_override(item)
        entries[key] = e
    return resolve(entries, experiment)
