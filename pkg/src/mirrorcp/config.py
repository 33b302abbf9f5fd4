"""Run configuration: JSON parsing, validation, canonical serialization.

A config file is a JSON object with the sections below; every section is
optional and falls back to the defaults of the matching record.

.. code-block:: json

    {
      "atom":    {"q": 1, "m": 1, "Omega": 1, "M": 1},
      "thermal": {"beta": "inf", "beta_bar": "inf", "k_max": 64, "sum_tol": 1e-10},
      "trap":    {"omega_trap": [2, 2, 2], "z_bar": 5, "include_cp_shift": true, "gamma": 0.1},
      "grid":    {"t0": 0, "dt": 0.04, "n": 17501, "eps": null},
      "scan":    {"zmin": 0.01, "zmax": 100, "zsteps": 25, "temperatures": [[0, 0]]},
      "noise":   {"kernel": "frozen", "include_free": false},
      "ensemble": {"count": 1000, "burn_in": 0.2},
      "seed": 0,
      "output":  {"path": null, "format": "csv"}
    }

Infinite inverse temperatures are written as the string ``"inf"``. A scan is
either an explicit ``"z"`` list or a log-spaced ``zmin/zmax/zsteps`` range.
Temperatures are ``[T_field, T_osc]`` pairs; ``0`` means zero temperature.
"""
import hashlib
import json
import math
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .errors import ConfigError, DomainError
from .noise import KERNELS
from .params import AtomParams, ThermalConfig, TimeGrid, TrapConfig

__all__ = ["ScanSpec", "NoiseSpec", "EnsembleSpec", "OutputSpec", "RunConfig", "load_config",
           "parse_config", "dump_config", "config_hash"]

_TOP_KEYS = ("atom", "thermal", "trap", "grid", "scan", "noise", "ensemble", "seed", "output")


def _encode(value):
    if isinstance(value, float) and math.isinf(value):
        return "inf" if value > 0 else "-inf"
    if isinstance(value, tuple):
        return [_encode(v) for v in value]
    if isinstance(value, list):
        return [_encode(v) for v in value]
    if isinstance(value, dict):
        return {k: _encode(v) for k, v in value.items()}
    return value


def _decode_number(value, where):
    if isinstance(value, bool):
        raise ConfigError(f"{where}: expected a number, got a boolean")
    if isinstance(value, str):
        if value.strip().lower() in ("inf", "infinity", "+inf"):
            return math.inf
        raise ConfigError(f"{where}: expected a number or 'inf', got {value!r}")
    if not isinstance(value, (int, float)):
        raise ConfigError(f"{where}: expected a number, got {type(value).__name__}")
    return float(value)


@dataclass(frozen=True)
class ScanSpec:
    """Heights and temperatures to sweep."""

    z: tuple = None
    zmin: float = 0.01
    zmax: float = 100.0
    zsteps: int = 25
    temperatures: tuple = ((0.0, 0.0),)

    def z_values(self):
        if self.z is not None:
            return np.array(self.z, dtype=float)
        return np.geomspace(self.zmin, self.zmax, self.zsteps)

    def validate(self):
        if self.z is not None:
            if len(self.z) == 0:
                raise ConfigError("scan.z: empty list of heights")
        else:
            if not (self.zmin > 0 and self.zmax >= self.zmin):
                raise ConfigError("scan: need 0 < zmin <= zmax")
            if int(self.zsteps) != self.zsteps or self.zsteps < 1:
                raise ConfigError("scan.zsteps: must be an integer >= 1")
        if len(self.temperatures) == 0:
            raise ConfigError("scan.temperatures: empty list")
        for i, pair in enumerate(self.temperatures):
            if len(pair) != 2 or any((not math.isfinite(t)) or t < 0 for t in pair):
                raise ConfigError(f"scan.temperatures[{i}]: need [T_field, T_osc] with finite T >= 0")


@dataclass(frozen=True)
class NoiseSpec:
    kernel: str = "frozen"
    eps: float = None
    include_free: bool = False


@dataclass(frozen=True)
class EnsembleSpec:
    count: int = 1000
    burn_in: float = 0.2


@dataclass(frozen=True)
class OutputSpec:
    path: str = None
    format: str = "csv"


@dataclass(frozen=True)
class RunConfig:
    """Everything a CLI run needs; see the module docstring for the JSON form."""

    atom: AtomParams = field(default_factory=AtomParams)
    thermal: ThermalConfig = field(default_factory=ThermalConfig)
    trap: TrapConfig = None
    grid: TimeGrid = None
    scan: ScanSpec = field(default_factory=ScanSpec)
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    ensemble: EnsembleSpec = field(default_factory=EnsembleSpec)
    seed: int = 0
    output: OutputSpec = field(default_factory=OutputSpec)

    def to_dict(self):
        out = {}
        for f in fields(self):
            val = getattr(self, f.name)
            out[f.name] = None if val is None else (asdict(val) if hasattr(val, "__dataclass_fields__") else val)
        return _encode(out)

    def with_overrides(self, **kw):
        from dataclasses import replace

        return replace(self, **kw)


def _section(data, name, cls, numeric=(), where=None):
    where = where or name
    raw = data.get(name)
    if raw is None:
        return None
    if not isinstance(raw, dict):
        raise ConfigError(f"{where}: expected an object")
    known = {f.name for f in fields(cls)}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"{where}: unknown field(s) {sorted(unknown)}")
    kwargs = {}
    for key, value in raw.items():
        if key in numeric and value is not None:
            kwargs[key] = _decode_number(value, f"{where}.{key}")
        else:
            kwargs[key] = value
    try:
        return cls(**kwargs)
    except DomainError as exc:
        raise ConfigError(f"{where}: {exc}") from exc
    except TypeError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def parse_config(data):
    """Build a :class:`RunConfig` from a decoded JSON object."""
    if not isinstance(data, dict):
        raise ConfigError("config: top level must be a JSON object")
    unknown = set(data) - set(_TOP_KEYS)
    if unknown:
        raise ConfigError(f"config: unknown section(s) {sorted(unknown)}")
    atom = _section(data, "atom", AtomParams, ("q", "m", "Omega", "M")) or AtomParams()
    thermal = _section(data, "thermal", ThermalConfig, ("beta", "beta_bar", "sum_tol")) or ThermalConfig()
    trap_raw = data.get("trap")
    trap = None
    if trap_raw is not None:
        if not isinstance(trap_raw, dict):
            raise ConfigError("trap: expected an object")
        tr = dict(trap_raw)
        if "omega_trap" in tr:
            om = tr["omega_trap"]
            if not isinstance(om, list) or len(om) != 3:
                raise ConfigError("trap.omega_trap: need a list of three frequencies")
            tr["omega_trap"] = tuple(_decode_number(w, "trap.omega_trap") for w in om)
        trap = _section({"trap": tr}, "trap", TrapConfig, ("z_bar", "gamma"))
    grid = _section(data, "grid", TimeGrid, ("t0", "dt", "eps"))
    scan_raw = data.get("scan") or {}
    if not isinstance(scan_raw, dict):
        raise ConfigError("scan: expected an object")
    sc = dict(scan_raw)
    if "z" in sc and sc["z"] is not None:
        if not isinstance(sc["z"], list):
            raise ConfigError("scan.z: expected a list")
        sc["z"] = tuple(_decode_number(v, "scan.z") for v in sc["z"])
    if "temperatures" in sc:
        temps = sc["temperatures"]
        if not isinstance(temps, list):
            raise ConfigError("scan.temperatures: expected a list of [T_field, T_osc] pairs")
        sc["temperatures"] = tuple(
            tuple(_decode_number(t, f"scan.temperatures[{i}]") for t in (pair if isinstance(pair, list) else [pair]))
            for i, pair in enumerate(temps)
        )
    scan = _section({"scan": sc}, "scan", ScanSpec, ("zmin", "zmax")) or ScanSpec()
    scan.validate()
    noise = _section(data, "noise", NoiseSpec, ("eps",)) or NoiseSpec()
    if noise.kernel not in KERNELS:
        raise ConfigError(f"noise.kernel: must be one of {KERNELS}")
    if noise.eps is not None and not noise.eps > 0:
        raise ConfigError("noise.eps: must be > 0")
    ens = _section(data, "ensemble", EnsembleSpec, ("burn_in",)) or EnsembleSpec()
    if isinstance(ens.count, bool) or not isinstance(ens.count, int) or ens.count < 1:
        raise ConfigError("ensemble.count: must be a positive integer")
    seed = data.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        raise ConfigError("seed: must be a non-negative integer")
    output = _section(data, "output", OutputSpec) or OutputSpec()
    if output.format != "csv":
        raise ConfigError("output.format: only 'csv' is supported")
    return RunConfig(atom, thermal, trap, grid, scan, noise, ens, seed, output)


def load_config(path):
    """Read and parse a JSON config file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return parse_config(data)


def dump_config(cfg):
    """Canonical JSON text (sorted keys, two-space indent)."""
    return json.dumps(cfg.to_dict(), sort_keys=True, indent=2)


def config_hash(cfg):
    """SHA-256 of the canonical JSON text, ignoring the output section.

    Two runs that differ only in where they write their results share a hash.
    """
    data = cfg.to_dict()
    data.pop("output")
    return hashlib.sha256(json.dumps(data, sort_keys=True, indent=2).encode("utf-8")).hexdigest()
