"""Run configuration: TOML in, validated dataclasses out.

An empty file yields the reference configuration of the weld-monitoring
study (``data/reference.toml``).  Validation errors name the offending
field path, e.g. ``probe.tau_step``.
"""
from __future__ import annotations

import hashlib
import math
import sys
from dataclasses import asdict, dataclass, field, fields, replace
from importlib import resources
from pathlib import Path

import numpy as np
import tomli_w

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .geometry import CrackSet, ProbingLine, SlabGeometry
from .monitor import MonitorConfig, ProbeSettings


class ConfigError(ValueError):
    def __init__(self, path: str, msg: str):
        super().__init__(f"{path}: {msg}" if path else msg)
        self.path = path


@dataclass
class GeometryBlock:
    a: float = 8.0
    b: float = 0.4
    c: float = 0.2
    shift: list = field(default_factory=lambda: [-4.0, -0.2])


@dataclass
class CracksBlock:
    # joined (welded) intervals, user frame; cracks fill the rest of x2 = c
    joined: list = field(default_factory=lambda: [[-1.5, -1.0]])
    width: float = 0.04
    target_elements: int = 30720
    refine: int = 2


@dataclass
class ForcingBlock:
    kind: str = "sin3"
    mode: str = "top-bottom"
    exclusion: float = 0.05
    frequency: int = 3


@dataclass
class ProbeBlock:
    tau_min: float = 1.0
    tau_max: float = 5.0
    tau_step: float = 0.1
    xi1_min: float = -4.0
    xi1_max: float = 4.0
    xi1_step: float = 0.05
    min_standoff: float = 0.5
    max_standoff: float = 2.0
    scale: float = 2.5
    center: float = 0.0
    base: float = 0.0
    delta: float | None = None
    prominence: float = 0.02
    search_radius: float | None = 1.0
    threads: int = 1


@dataclass
class NoiseBlock:
    enabled: bool = False
    level: float = 2e-4
    seed: int = 0
    min_standoff: float = 0.75


@dataclass
class MonitorBlock:
    pressure_points: list = field(default_factory=lambda: [-1.25, 1.25])
    nuggets: list = field(default_factory=lambda: [[-1.5, -1.0], [1.0, 1.5]])
    gap_threshold: float = 1.5
    left_step: float = 0.25
    right_step: float = 0.2
    max_rounds: int = 8


@dataclass
class OutputBlock:
    run_dir: str = "runs/default"
    formats: list = field(default_factory=lambda: ["csv", "svg"])


@dataclass
class RunConfig:
    geometry: GeometryBlock = field(default_factory=GeometryBlock)
    cracks: CracksBlock = field(default_factory=CracksBlock)
    forcing: ForcingBlock = field(default_factory=ForcingBlock)
    probe: ProbeBlock = field(default_factory=ProbeBlock)
    noise: NoiseBlock = field(default_factory=NoiseBlock)
    monitor: MonitorBlock = field(default_factory=MonitorBlock)
    output: OutputBlock = field(default_factory=OutputBlock)

    # -- derived objects -------------------------------------------------
    def slab(self) -> SlabGeometry:
        g = self.geometry
        return SlabGeometry(g.a, g.b, g.c, tuple(g.shift))

    def crack_set(self) -> CrackSet:
        s = self.geometry.shift[0]
        joined = [(lo - s, hi - s) for lo, hi in self.cracks.joined]
        return CrackSet.from_joined(joined, self.geometry.c, self.geometry.a)

    def probing_line(self) -> ProbingLine:
        p = self.probe
        floor = self.noise.min_standoff if self.noise.enabled else p.min_standoff
        return ProbingLine(floor, p.max_standoff, p.scale, p.center, p.base)

    def tau_grid(self) -> np.ndarray:
        p = self.probe
        return _grid(p.tau_min, p.tau_max, p.tau_step)

    def xi1_grid(self) -> np.ndarray:
        p = self.probe
        return _grid(p.xi1_min, p.xi1_max, p.xi1_step)

    def probe_settings(self) -> ProbeSettings:
        c, f, p, n = self.cracks, self.forcing, self.probe, self.noise
        return ProbeSettings(
            crack_width=c.width, target_elements=c.target_elements, refine=c.refine,
            forcing_mode=f.mode, exclusion=f.exclusion, frequency=f.frequency,
            line=self.probing_line(), tau_grid=tuple(self.tau_grid()),
            xi1_grid=tuple(self.xi1_grid()), prominence=p.prominence,
            search_radius=p.search_radius,
            noise_level=n.level if n.enabled else 0.0, seed=n.seed, threads=p.threads)

    def monitor_config(self) -> MonitorConfig:
        m = self.monitor
        return MonitorConfig(tuple(m.pressure_points), tuple(tuple(v) for v in m.nuggets),
                             m.gap_threshold, ((m.left_step, m.right_step),), m.max_rounds)

    # -- serialisation ---------------------------------------------------
    def to_dict(self) -> dict:
        def strip(d):
            return {k: (strip(v) if isinstance(v, dict) else v)
                    for k, v in d.items() if v is not None}
        return strip(asdict(self))

    def to_toml(self) -> str:
        return tomli_w.dumps(self.to_dict())

    def digest(self) -> str:
        return hashlib.sha256(self.to_toml().encode()).hexdigest()[:16]

    def with_overrides(self, **blocks) -> "RunConfig":
        """``cfg.with_overrides(noise={"enabled": True})`` returns a validated copy."""
        new = self
        for name, vals in blocks.items():
            new = replace(new, **{name: replace(getattr(new, name), **vals)})
        validate(new)
        return new


def _grid(lo, hi, step):
    n = int(math.floor((hi - lo) / step + 1e-9))
    return np.round(lo + step * np.arange(n + 1), 10)


_BLOCKS = {f.name: f.default_factory for f in fields(RunConfig)}


def _coerce(path, value, default, ftype):
    if isinstance(default, bool) or ftype == "bool":
        if not isinstance(value, bool):
            raise ConfigError(path, f"expected a boolean, got {value!r}")
        return value
    if isinstance(default, int) and ftype == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(path, f"expected an integer, got {value!r}")
        return value
    if ftype in ("float", "float | None"):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(path, f"expected a number, got {value!r}")
        if not math.isfinite(value):
            raise ConfigError(path, "must be finite")
        return float(value)
    if ftype == "str":
        if not isinstance(value, str):
            raise ConfigError(path, f"expected a string, got {value!r}")
        return value
    if ftype == "list":
        if not isinstance(value, list):
            raise ConfigError(path, f"expected an array, got {value!r}")
        return value
    return value


def from_dict(data: dict) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("", "top level must be a table")
    blocks = {}
    for name, factory in _BLOCKS.items():
        proto = factory()
        raw = data.get(name, {})
        if not isinstance(raw, dict):
            raise ConfigError(name, "expected a table")
        known = {f.name: f for f in fields(proto)}
        for key in raw:
            if key not in known:
                raise ConfigError(f"{name}.{key}", "unknown field")
        vals = {}
        for key, f in known.items():
            if key in raw:
                vals[key] = _coerce(f"{name}.{key}", raw[key], getattr(proto, key), f.type)
        blocks[name] = replace(proto, **vals)
    for key in data:
        if key not in _BLOCKS:
            raise ConfigError(key, "unknown section")
    cfg = RunConfig(**blocks)
    validate(cfg)
    return cfg


def _interval_list(path, ivs):
    out = []
    for k, iv in enumerate(ivs):
        if (not isinstance(iv, list) or len(iv) != 2
                or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in iv)):
            raise ConfigError(f"{path}[{k}]", "expected [lo, hi]")
        if not iv[0] < iv[1]:
            raise ConfigError(f"{path}[{k}]", "needs lo < hi")
        out.append([float(iv[0]), float(iv[1])])
    return out


def validate(cfg: RunConfig) -> None:
    g = cfg.geometry
    for k in ("a", "b"):
        if not getattr(g, k) > 0:
            raise ConfigError(f"geometry.{k}", "must be positive")
    if not 0 < g.c < g.b:
        raise ConfigError("geometry.c", "must lie strictly between 0 and b")
    if len(g.shift) != 2:
        raise ConfigError("geometry.shift", "expected two numbers")
    g.shift = [float(v) for v in g.shift]

    c = cfg.cracks
    c.joined = _interval_list("cracks.joined", c.joined)
    for k, (lo, hi) in enumerate(c.joined):
        if lo < g.shift[0] - 1e-12 or hi > g.shift[0] + g.a + 1e-12:
            raise ConfigError(f"cracks.joined[{k}]", "outside the slab")
    if not 0 < c.width < min(g.c, g.b - g.c):
        raise ConfigError("cracks.width", "must be positive and fit inside the slab")
    if c.target_elements < 100:
        raise ConfigError("cracks.target_elements", "must be at least 100")
    if c.refine < 0:
        raise ConfigError("cracks.refine", "must be non-negative")

    f = cfg.forcing
    if f.kind != "sin3":
        raise ConfigError("forcing.kind", "only 'sin3' is supported")
    if f.mode not in ("top-bottom", "top", "full"):
        raise ConfigError("forcing.mode", "one of 'top-bottom', 'top', 'full'")
    if not 0 <= f.exclusion < min(g.a, g.b) / 2:
        raise ConfigError("forcing.exclusion", "must be in [0, min(a, b)/2)")
    if f.frequency < 1:
        raise ConfigError("forcing.frequency", "must be positive")

    p = cfg.probe
    for lo, hi, st, name in ((p.tau_min, p.tau_max, p.tau_step, "tau"),
                             (p.xi1_min, p.xi1_max, p.xi1_step, "xi1")):
        if not st > 0:
            raise ConfigError(f"probe.{name}_step", "must be positive")
        if not hi >= lo:
            raise ConfigError(f"probe.{name}_max", f"must be >= {name}_min")
    if p.tau_min < 0:
        raise ConfigError("probe.tau_min", "must be non-negative")
    if len(cfg.tau_grid()) < 3:
        raise ConfigError("probe.tau_step", "tau grid needs at least 3 values")
    if not 0 < p.min_standoff <= p.max_standoff:
        raise ConfigError("probe.min_standoff", "need 0 < min_standoff <= max_standoff")
    if not p.scale > 0:
        raise ConfigError("probe.scale", "must be positive")
    if p.delta is not None and p.delta < 0:
        raise ConfigError("probe.delta", "must be non-negative")
    if not 0 < p.prominence < 1:
        raise ConfigError("probe.prominence", "must lie in (0, 1)")
    if p.search_radius is not None and not p.search_radius > 0:
        raise ConfigError("probe.search_radius", "must be positive")
    if p.threads < 1:
        raise ConfigError("probe.threads", "must be at least 1")
    top = g.shift[1] + g.b
    if p.base + min(p.min_standoff, cfg.noise.min_standoff) <= top:
        raise ConfigError("probe.base", "probing line must stay above the slab")

    n = cfg.noise
    if n.level < 0:
        raise ConfigError("noise.level", "must be non-negative")
    if n.seed < 0:
        raise ConfigError("noise.seed", "must be non-negative")
    if not n.min_standoff > 0:
        raise ConfigError("noise.min_standoff", "must be positive")

    m = cfg.monitor
    m.nuggets = _interval_list("monitor.nuggets", m.nuggets)
    m.pressure_points = [float(x) for x in m.pressure_points]
    if len(m.nuggets) != len(m.pressure_points):
        raise ConfigError("monitor.nuggets", "one nugget per pressure point")
    for k, (x, (lo, hi)) in enumerate(zip(m.pressure_points, m.nuggets)):
        if not lo <= x <= hi:
            raise ConfigError(f"monitor.pressure_points[{k}]", "must lie inside its nugget")
        if not g.shift[0] < x < g.shift[0] + g.a:
            raise ConfigError(f"monitor.pressure_points[{k}]", "outside the slab")
    if m.gap_threshold < 0:
        raise ConfigError("monitor.gap_threshold", "must be non-negative")
    for k in ("left_step", "right_step"):
        if getattr(m, k) < 0:
            raise ConfigError(f"monitor.{k}", "must be non-negative")
    if m.max_rounds < 1:
        raise ConfigError("monitor.max_rounds", "must be at least 1")

    for k, fmt in enumerate(cfg.output.formats):
        if fmt not in ("csv", "svg"):
            raise ConfigError(f"output.formats[{k}]", "one of 'csv', 'svg'")


def loads(text: str) -> RunConfig:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError("", f"TOML syntax error: {exc}") from None
    return from_dict(data)


def load(path) -> RunConfig:
    return loads(Path(path).read_text())


def reference_text() -> str:
    return resources.files(__package__).joinpath("data/reference.toml").read_text()


def reference() -> RunConfig:
    return loads(reference_text())
