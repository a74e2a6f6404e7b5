"""TOML run configuration with strict keys and unit-suffixed names.

Example::

    scenario = "bell_psi_minus"
    output_dir = "out"
    record_every = 5

    [overrides]
    delta_minus_ghz = 2717

    [geometry]
    preset = "trimer_fig1"
    refractive_index = 1.5

    [evolve]
    initial = "010"
    t_final_ps = 5.0
"""
from __future__ import annotations

import inspect
from dataclasses import asdict, dataclass, field, fields

import tomli
import tomli_w

from . import geometry as geo
from .scenarios import SCENARIOS, TRIMER_REGIMES

UNIT_SUFFIXES = ("_ghz", "_thz", "_ps", "_nm", "_ns", "_debye")
DIMENSIONLESS = {"grid_points": int, "top_k": int, "window_multiple": int, "long_multiple": int,
                 "periods": float, "regime": str}


class ConfigError(ValueError):
    pass


def _unit_of(key: str) -> str | None:
    for suf in UNIT_SUFFIXES:
        if key.endswith(suf):
            return suf
    return None


def _base(key: str) -> str:
    suf = _unit_of(key)
    return key[: -len(suf)] if suf else key


def _scenario_kwargs(name: str) -> dict:
    fn = getattr(SCENARIOS[name], "__wrapped__", SCENARIOS[name])
    out = {}
    for p in inspect.signature(fn).parameters.values():
        if p.name == "trimer_w":
            continue
        out[p.name] = p.default
    return out


def override_schema() -> dict:
    """Every accepted override key mapped to its Python type."""
    schema = {}
    for name in SCENARIOS:
        for key, default in _scenario_kwargs(name).items():
            if key in DIMENSIONLESS:
                schema[key] = DIMENSIONLESS[key]
            elif _unit_of(key):
                schema[key] = float
            else:  # pragma: no cover - guards against unsuffixed physical kwargs
                raise AssertionError(f"scenario keyword {key!r} lacks a unit suffix")
    return schema


def _check_key(key: str, allowed, where: str):
    if key in allowed:
        return
    base = _base(key)
    for k in allowed:
        if _base(k) == base and _unit_of(k):
            raise ConfigError(f"unit-suffix mismatch in {where}: {key!r} should be {k!r}")
    raise ConfigError(f"unknown key {key!r} in {where}")


def _coerce(key, value, typ, where):
    if typ is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where}.{key} must be a number, got {value!r}")
        return float(value)
    if typ is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{where}.{key} must be an integer, got {value!r}")
        return int(value)
    if typ is str:
        if not isinstance(value, str):
            raise ConfigError(f"{where}.{key} must be a string, got {value!r}")
        return value
    raise AssertionError(typ)


_POSITIVE = ("dt_ps", "t_final_ps", "v12_ghz", "gamma_ghz", "omega1_ghz", "omega2_ghz", "grid_points",
             "top_k", "window_multiple", "periods")


def validate_overrides(raw: dict) -> dict:
    schema = override_schema()
    out = {}
    for key, value in raw.items():
        _check_key(key, schema, "overrides")
        v = _coerce(key, value, schema[key], "overrides")
        if key in _POSITIVE and not v > 0:
            raise ConfigError(f"overrides.{key} must be positive, got {v}")
        if key == "omega_ghz" and v < 0:
            raise ConfigError("overrides.omega_ghz must be non-negative")
        if key == "long_multiple" and v < 0:
            raise ConfigError("overrides.long_multiple must be non-negative")
        if key == "regime" and v not in TRIMER_REGIMES:
            raise ConfigError(f"overrides.regime must be one of {sorted(TRIMER_REGIMES)}")
        out[key] = v
    return out


@dataclass(frozen=True)
class SiteConfig:
    position_nm: tuple
    orientation: tuple
    dipole_debye: float = geo.PBI_DIPOLE_DEBYE
    nu_thz: float = geo.PBI_NU_THZ
    t1_ns: float = geo.PBI_T1_NS


@dataclass(frozen=True)
class GeometryConfig:
    preset: str | None = None
    refractive_index: float = geo.DEFAULT_REFRACTIVE_INDEX
    rwa_frequency: bool = False
    sites: tuple = ()

    def build(self) -> geo.MolecularArray:
        if self.preset is not None:
            arr = geo.PRESETS[self.preset](refractive_index=self.refractive_index)
            return geo.MolecularArray(arr.sites, self.refractive_index, self.rwa_frequency)
        sites = tuple(geo.DipoleSite(s.position_nm, s.orientation, s.dipole_debye, s.nu_thz, s.t1_ns)
                      for s in self.sites)
        return geo.MolecularArray(sites, self.refractive_index, self.rwa_frequency)


@dataclass(frozen=True)
class EvolveConfig:
    initial: str = "01"
    t_final_ps: float = 5.0
    dt_ps: float | None = None
    omega_ghz: float = 0.0
    nu_l_thz: float | None = None
    method: str = "rk4"


@dataclass(frozen=True)
class RunConfig:
    scenario: str | None = None
    output_dir: str | None = None
    record_every: int = 1
    overrides: dict = field(default_factory=dict)
    geometry: GeometryConfig | None = None
    evolve: EvolveConfig | None = None


_TOP_KEYS = {"scenario", "output_dir", "record_every", "overrides", "geometry", "evolve"}


def _parse_geometry(raw: dict) -> GeometryConfig:
    allowed = {"preset", "refractive_index", "rwa_frequency", "sites"}
    for k in raw:
        _check_key(k, allowed, "geometry")
    preset = raw.get("preset")
    if preset is not None and preset not in geo.PRESETS:
        raise ConfigError(f"geometry.preset must be one of {sorted(geo.PRESETS)}")
    n = _coerce("refractive_index", raw.get("refractive_index", geo.DEFAULT_REFRACTIVE_INDEX), float, "geometry")
    if n < 1:
        raise ConfigError("geometry.refractive_index must be >= 1")
    rwa = raw.get("rwa_frequency", False)
    if not isinstance(rwa, bool):
        raise ConfigError("geometry.rwa_frequency must be true or false")
    sites = []
    site_keys = {f.name for f in fields(SiteConfig)}
    for k, s in enumerate(raw.get("sites", [])):
        where = f"geometry.sites[{k}]"
        if not isinstance(s, dict):
            raise ConfigError(f"{where} must be a table")
        for key in s:
            _check_key(key, site_keys, where)
        for vec in ("position_nm", "orientation"):
            if vec not in s:
                raise ConfigError(f"{where} is missing {vec!r}")
            if not isinstance(s[vec], list) or len(s[vec]) != 3:
                raise ConfigError(f"{where}.{vec} must be a list of three numbers")
        scal = {key: _coerce(key, s[key], float, where) for key in ("dipole_debye", "nu_thz", "t1_ns") if key in s}
        for key, v in scal.items():
            if not v > 0:
                raise ConfigError(f"{where}.{key} must be positive")
        sites.append(SiteConfig(tuple(_coerce("position_nm", x, float, where) for x in s["position_nm"]),
                                tuple(_coerce("orientation", x, float, where) for x in s["orientation"]),
                                **scal))
    if preset is None and not sites:
        raise ConfigError("geometry needs either a preset or a list of sites")
    if preset is not None and sites:
        raise ConfigError("geometry takes a preset or explicit sites, not both")
    cfg = GeometryConfig(preset, n, rwa, tuple(sites))
    try:
        cfg.build()
    except geo.GeometryError as exc:
        raise ConfigError(f"geometry: {exc}") from exc
    return cfg


def _parse_evolve(raw: dict) -> EvolveConfig:
    allowed = {f.name for f in fields(EvolveConfig)}
    out = {}
    for key, value in raw.items():
        _check_key(key, allowed, "evolve")
        if key in ("initial", "method"):
            out[key] = _coerce(key, value, str, "evolve")
        else:
            out[key] = _coerce(key, value, float, "evolve")
    cfg = EvolveConfig(**out)
    if set(cfg.initial) - {"0", "1"}:
        raise ConfigError("evolve.initial must be a bitstring such as '010'")
    if not cfg.t_final_ps > 0 or (cfg.dt_ps is not None and not cfg.dt_ps > 0):
        raise ConfigError("evolve.t_final_ps and evolve.dt_ps must be positive")
    if cfg.omega_ghz < 0:
        raise ConfigError("evolve.omega_ghz must be non-negative")
    if cfg.method not in ("rk4", "expm"):
        raise ConfigError("evolve.method must be 'rk4' or 'expm'")
    return cfg


def from_dict(raw: dict) -> RunConfig:
    for key in raw:
        _check_key(key, _TOP_KEYS, "config")
    scenario = raw.get("scenario")
    if scenario is not None and scenario not in SCENARIOS:
        raise ConfigError(f"scenario must be one of {sorted(SCENARIOS)}, got {scenario!r}")
    output_dir = raw.get("output_dir")
    if output_dir is not None:
        output_dir = _coerce("output_dir", output_dir, str, "config")
    record_every = _coerce("record_every", raw.get("record_every", 1), int, "config")
    if record_every < 1:
        raise ConfigError("record_every must be >= 1")
    overrides = validate_overrides(raw.get("overrides", {}))
    if scenario is not None:
        accepted = _scenario_kwargs(scenario)
        bad = sorted(set(overrides) - set(accepted))
        if bad:
            raise ConfigError(f"overrides {bad} do not apply to scenario {scenario!r}")
    geometry = _parse_geometry(raw["geometry"]) if "geometry" in raw else None
    evolve = _parse_evolve(raw["evolve"]) if "evolve" in raw else None
    return RunConfig(scenario, output_dir, record_every, overrides, geometry, evolve)


def parse_config(text: str) -> RunConfig:
    try:
        raw = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"config parse error: {exc}") from exc
    return from_dict(raw)


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def _drop_none(obj):
    if isinstance(obj, dict):
        return {k: _drop_none(v) for k, v in obj.items() if v is not None}
    if isinstance(obj, (list, tuple)):
        return [_drop_none(v) for v in obj]
    return obj


def to_dict(cfg: RunConfig) -> dict:
    d = _drop_none(asdict(cfg))
    if cfg.geometry is not None and not cfg.geometry.sites:
        d["geometry"].pop("sites", None)
    if not d.get("overrides"):
        d.pop("overrides", None)
    return d


def emit_config(cfg: RunConfig) -> str:
    """TOML text that :func:`parse_config` maps back onto ``cfg``."""
    return tomli_w.dumps(to_dict(cfg))


def apply_sets(cfg: RunConfig, assignments) -> RunConfig:
    """Merge ``key=value`` strings (values parsed as TOML) into the overrides."""
    extra = {}
    for item in assignments or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        try:
            extra[key.strip()] = tomli.loads(f"v = {value.strip()}")["v"]
        except tomli.TOMLDecodeError:
            extra[key.strip()] = value.strip()
    raw = to_dict(cfg)
    raw["overrides"] = {**raw.get("overrides", {}), **extra}
    return from_dict(raw)


PRESET_CONFIGS = {name: RunConfig(scenario=name) for name in SCENARIOS}
PRESET_CONFIGS["bell_psi_minus_fig"] = RunConfig(scenario="bell_psi_minus", overrides={"delta_minus_ghz": 2717.0})
PRESET_CONFIGS["trimer_fig1_evolve"] = RunConfig(geometry=GeometryConfig(preset="trimer_fig1"),
                                                 evolve=EvolveConfig(initial="010", t_final_ps=5.0))
PRESET_CONFIGS["custom_dimer"] = RunConfig(
    output_dir="out", record_every=2,
    geometry=GeometryConfig(sites=(SiteConfig((0.0, 0.0, 0.0), (1.0, 0.0, 0.0)),
                                   SiteConfig((2.2, 0.0, 0.0), (0.0, 1.0, 0.0), nu_thz=522.5))),
    evolve=EvolveConfig(initial="01", t_final_ps=3.0, dt_ps=0.005))
