"""Run configuration: TOML schema, validation, and defaults.

The schema is strict: unknown sections or keys anywhere in the file are
rejected so typos cannot silently fall back to defaults.  The bundled
default file carries the reference device.
"""

import copy
import importlib.resources
import math

try:
    import tomllib
except ModuleNotFoundError:          # Python < 3.11
    import tomli as tomllib
from dataclasses import dataclass, field

from .circuit import CircuitParams, FluxoniumParams
from .errors import ConfigError

GRID_UNIT_NS = 1000.0 / 384.0

# section -> key -> validator; a validator is (predicate, description)
_POS = (lambda v: isinstance(v, (int, float)) and v > 0, "positive number")
_NONNEG = (lambda v: isinstance(v, (int, float)) and v >= 0, "non-negative number")
_NUM = (lambda v: isinstance(v, (int, float)), "number")
_POSINT = (lambda v: isinstance(v, int) and v > 0, "positive integer")
_NONNEG_INT = (lambda v: isinstance(v, int) and v >= 0, "non-negative integer")
_STR = (lambda v: isinstance(v, str) and v != "", "non-empty string")

_SCHEMA = {
    "qubit_a": {"e_j": _POS, "e_c": _POS, "e_l": _POS},
    "qubit_b": {"e_j": _POS, "e_c": _POS, "e_l": _POS},
    "coupler": {"e_jc": _POS, "e_cc": _POS, "e_cm": _POS, "e_l": _POS},
    "model": {
        "keep": (lambda v: isinstance(v, list) and len(v) == 4
                 and all(isinstance(k, int) and k >= 2 for k in v),
                 "list of four integers >= 2"),
        "ho_dim": _POSINT,
        "landscape_keep": (lambda v: isinstance(v, list) and len(v) == 4
                           and all(isinstance(k, int) and k >= 2 for k in v),
                           "list of four integers >= 2"),
        "landscape_ho_dim": _POSINT,
    },
    "decoherence": {
        "t1_a_us": _POS, "t1_b_us": _POS, "t2_a_us": _POS, "t2_b_us": _POS,
        "dephasing_time": (lambda v: v in ("t2e", "t2star"),
                           '"t2e" or "t2star"'),
    },
    "drive": {
        "f_a_mhz": _POS, "f_b_mhz": _POS,
        "iswap_units": _POSINT, "bswap_units": _POSINT,
        "x_a_units": _POSINT, "x_b_units": _POSINT,
        "theta_ce": _NUM,
    },
    "flux": {
        "phi_c_start": _NUM, "phi_c_stop": _NUM, "phi_c_points": _POSINT,
        "map_phi_s_inner": _POS, "map_phi_s_outer": _POS,
        "map_phi_s_steps": _POSINT,
        "map_phi_c_start": _NUM, "map_phi_c_stop": _NUM,
        "map_phi_c_points": _POSINT,
    },
    "crosstalk": {"xi_over_2pi_a": _NUM, "xi_over_2pi_b": _NUM},
    "benchmarking": {
        "depths": (lambda v: isinstance(v, list) and len(v) >= 2
                   and all(isinstance(d, int) and d >= 1 for d in v)
                   and all(b > a for a, b in zip(v, v[1:])),
                   "strictly increasing list of positive integers"),
        "trials": _POSINT,
        "depolarizing_per_layer": (lambda v: isinstance(v, (int, float))
                                   and 0.0 < v <= 1.0, "number in (0, 1]"),
    },
    "run": {"seed": _NONNEG_INT, "threads": _NONNEG_INT, "out": _STR},
}


@dataclass(frozen=True)
class RunConfig:
    """Validated configuration; `raw` is the merged plain-dict echo."""

    circuit: CircuitParams
    keep: tuple
    ho_dim: int
    landscape_keep: tuple
    landscape_ho_dim: int
    t1_us: tuple          # (a, b)
    t2_us: tuple          # (a, b)
    dephasing_time: str
    f_a_mhz: float
    f_b_mhz: float
    gate_units: dict      # name -> integer multiple of GRID_UNIT_NS
    theta_ce: float
    flux: dict
    xi_over_2pi: tuple    # (a, b)
    bench_depths: tuple
    bench_trials: int
    bench_p_layer: float
    seed: int
    threads: int
    out: str
    raw: dict = field(repr=False)

    def gate_tau_ns(self, name):
        """Duration of a named gate in ns, exact on the waveform grid."""
        return self.gate_units[name] * GRID_UNIT_NS


def _validate(data):
    if not isinstance(data, dict):
        raise ConfigError("top level of config must be a table")
    for section, content in data.items():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown config section [{section}]")
        if not isinstance(content, dict):
            raise ConfigError(f"[{section}] must be a table")
        for key, value in content.items():
            if key not in _SCHEMA[section]:
                raise ConfigError(f"unknown config key {section}.{key}")
            pred, desc = _SCHEMA[section][key]
            if not pred(value):
                raise ConfigError(
                    f"config key {section}.{key} must be {desc}, got {value!r}")
            if isinstance(value, float) and not math.isfinite(value):
                raise ConfigError(f"config key {section}.{key} is not finite")


def _merge(base, override):
    out = copy.deepcopy(base)
    for section, content in override.items():
        out.setdefault(section, {}).update(content)
    return out


def _default_raw():
    ref = importlib.resources.files("fluxcoupler.data") / "default.toml"
    with ref.open("rb") as f:
        return tomllib.load(f)


def load_config(path=None, overrides=None):
    """Load and validate a config file, filling gaps from the default.

    With no path, returns the bundled default configuration.  `overrides`
    is an optional section -> {key: value} dict merged last (validated
    like file content); the command line funnels its flags through it.
    """
    base = _default_raw()
    _validate(base)
    if path is not None:
        try:
            with open(path, "rb") as f:
                user = tomllib.load(f)
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}")
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid TOML: {exc}")
        _validate(user)
        base = _merge(base, user)
    if overrides:
        _validate(overrides)
        base = _merge(base, overrides)
    return _build(base)


def _build(raw):
    circuit = CircuitParams(
        qubit_a=FluxoniumParams(**raw["qubit_a"]),
        qubit_b=FluxoniumParams(**raw["qubit_b"]),
        e_jc=raw["coupler"]["e_jc"],
        e_cc=raw["coupler"]["e_cc"],
        e_cm=raw["coupler"]["e_cm"],
        e_l=raw["coupler"]["e_l"],
    )
    dec = raw["decoherence"]
    drive = raw["drive"]
    bench = raw["benchmarking"]
    return RunConfig(
        circuit=circuit,
        keep=tuple(raw["model"]["keep"]),
        ho_dim=raw["model"]["ho_dim"],
        landscape_keep=tuple(raw["model"]["landscape_keep"]),
        landscape_ho_dim=raw["model"]["landscape_ho_dim"],
        t1_us=(dec["t1_a_us"], dec["t1_b_us"]),
        t2_us=(dec["t2_a_us"], dec["t2_b_us"]),
        dephasing_time=dec["dephasing_time"],
        f_a_mhz=drive["f_a_mhz"],
        f_b_mhz=drive["f_b_mhz"],
        gate_units={
            "iswap": drive["iswap_units"], "bswap": drive["bswap_units"],
            "x_a": drive["x_a_units"], "x_b": drive["x_b_units"],
        },
        theta_ce=drive["theta_ce"],
        flux=dict(raw["flux"]),
        xi_over_2pi=(raw["crosstalk"]["xi_over_2pi_a"],
                     raw["crosstalk"]["xi_over_2pi_b"]),
        bench_depths=tuple(bench["depths"]),
        bench_trials=bench["trials"],
        bench_p_layer=bench["depolarizing_per_layer"],
        seed=raw["run"]["seed"],
        threads=raw["run"]["threads"],
        out=raw["run"]["out"],
        raw=raw,
    )


def config_echo(cfg):
    """Plain-dict copy of the effective configuration for output provenance."""
    return copy.deepcopy(cfg.raw)
