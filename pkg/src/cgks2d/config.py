"""Run configuration: key=value files with command-line overrides."""

import hashlib
from dataclasses import dataclass, fields

from .recon import METHOD_GG, METHOD_GHOST, METHOD_ONESIDED


class ConfigError(ValueError):
    pass


_METHODS = (METHOD_GG, METHOD_GHOST, METHOD_ONESIDED)


@dataclass
class RunConfig:
    case: str = None
    method: str = None            # None -> case default
    cfl: float = None
    t_end: float = None
    max_steps: int = None
    steady_tol: float = 1e-6
    mesh_file: str = None
    mesh_n: int = None
    mesh_wall_h: float = None
    mesh_n_circ: int = None
    mesh_n_rad: int = None
    flux: str = None              # smooth | full
    nonlinear: bool = None
    viscosity_law: str = None     # constant | sutherland
    out_dir: str = "out"
    output_interval: int = 100
    field_format: str = "vtk"     # vtk | csv
    seed: int = 0                 # reserved; numerics do not use it
    threads: int = 1

    def mesh_overrides(self):
        over = {}
        if self.mesh_n is not None:
            over["n"] = self.mesh_n
        if self.mesh_wall_h is not None:
            over["wall_h"] = self.mesh_wall_h
        if self.mesh_n_circ is not None:
            over["n_circ_pts"] = self.mesh_n_circ
        if self.mesh_n_rad is not None:
            over["n_rad_pts"] = self.mesh_n_rad
        return over


_BOOLS = {"true": True, "false": False, "1": True, "0": False,
          "yes": True, "no": False}


def _convert(name, ftype, raw):
    try:
        if ftype is bool:
            return _BOOLS[raw.lower()]
        return ftype(raw)
    except (ValueError, KeyError):
        raise ConfigError("bad value %r for key %r" % (raw, name))


def parse_config(text=None, overrides=None):
    """Build a RunConfig from key=value text plus override pairs.

    Lines starting with # (or trailing # comments) are ignored.
    Unknown keys raise ConfigError naming the key.
    """
    types = {f.name: f.type for f in fields(RunConfig)}
    for name, t in list(types.items()):
        if t in ("str", str):
            types[name] = str
        elif t in ("int", int):
            types[name] = int
        elif t in ("float", float):
            types[name] = float
        elif t in ("bool", bool):
            types[name] = bool
    values = {}

    def feed(key, raw):
        key = key.strip()
        raw = raw.strip()
        if key not in types:
            raise ConfigError("unknown configuration key %r" % key)
        values[key] = _convert(key, types[key], raw)

    if text:
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError("line %d is not key=value: %r"
                                  % (lineno, line))
            feed(*line.split("=", 1))
    for key, raw in (overrides or {}).items():
        if raw is not None:
            feed(key, str(raw))

    cfg = RunConfig(**values)
    if cfg.case is None:
        raise ConfigError("missing required key 'case'")
    if cfg.method is not None and cfg.method not in _METHODS:
        raise ConfigError("method must be one of %s" % (", ".join(_METHODS)))
    if cfg.cfl is not None and cfg.cfl <= 0:
        raise ConfigError("cfl must be positive")
    if cfg.flux is not None and cfg.flux not in ("smooth", "full"):
        raise ConfigError("flux must be 'smooth' or 'full'")
    if cfg.field_format not in ("vtk", "csv"):
        raise ConfigError("field_format must be 'vtk' or 'csv'")
    return cfg


def config_text(cfg):
    lines = []
    for f in fields(RunConfig):
        v = getattr(cfg, f.name)
        if v is None:
            continue
        lines.append("%s=%s" % (f.name, v))
    return "\n".join(lines) + "\n"


def config_hash(cfg):
    return hashlib.sha256(config_text(cfg).encode()).hexdigest()[:16]
