"""Scripted spot-weld monitoring loop.

For each pressure point a weld nugget (joined interval) is opened, then the
loop probes the slab, reads the nearest profile maxima on both sides of the
point and grows the nugget until the detected gap reaches the threshold.
"""
from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from .fem import CauchyData, Mesh, NeumannData, build_mesh, neumann_sin3, solve_neumann
from .geometry import CrackSet, GeometryError, ProbingLine, SlabGeometry
from .probe import add_noise
from .profiler import Profile, TipEstimate, detect_tips, sweep_profile

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ProbeSettings:
    """Everything needed to go from a crack state to detected tips (user frame)."""

    crack_width: float = 0.04
    target_elements: int = 30720
    refine: int = 2
    forcing_mode: str = "top-bottom"
    exclusion: float = 0.05
    frequency: int = 3
    line: ProbingLine = field(default_factory=ProbingLine)
    tau_grid: tuple = tuple(np.round(np.arange(1.0, 5.0 + 1e-9, 0.1), 10))
    xi1_grid: tuple = tuple(np.round(np.arange(-4.0, 4.0 + 1e-9, 0.05), 10))
    window: tuple | None = None
    prominence: float = 0.02
    search_radius: float | None = 1.0
    noise_level: float = 0.0
    seed: int = 0
    threads: int = 1


@dataclass(frozen=True)
class MonitorConfig:
    pressure_points: tuple = (-1.25, 1.25)
    nuggets: tuple = ((-1.5, -1.0), (1.0, 1.5))
    gap_threshold: float = 1.5
    schedule: tuple = ((0.25, 0.2),)
    max_rounds: int = 8

    def __post_init__(self):
        if self.gap_threshold < 0:
            raise ValueError("gap threshold must be non-negative")
        if self.max_rounds < 1:
            raise ValueError("max_rounds must be at least 1")
        if len(self.nuggets) != len(self.pressure_points):
            raise ValueError("one initial nugget per pressure point is required")
        for lo, hi in self.schedule:
            if lo < 0 or hi < 0:
                raise ValueError("evolution steps must be non-negative")
        for x, (lo, hi) in zip(self.pressure_points, self.nuggets):
            if not lo <= x <= hi:
                raise ValueError(f"pressure point {x} lies outside its nugget [{lo}, {hi}]")

    def step(self, k: int):
        """Growth applied before round ``k`` (1-based; round 1 has none)."""
        return self.schedule[min(k - 2, len(self.schedule) - 1)]


def _merge(intervals):
    out = []
    for lo, hi in sorted(intervals):
        if out and lo <= out[-1][1]:
            out[-1][1] = max(out[-1][1], hi)
        else:
            out.append([lo, hi])
    return [tuple(iv) for iv in out]


def _clean(cracks: CrackSet, joined) -> CrackSet:
    joined = [(max(0.0, lo), min(cracks.a, hi)) for lo, hi in _merge(joined)]
    joined = [(round(lo, 12), round(hi, 12)) for lo, hi in joined if hi > lo]
    return CrackSet.from_joined(joined, cracks.line_height, cracks.a)


def open_nugget(cracks: CrackSet, lo: float, hi: float) -> CrackSet:
    """Add the joined interval ``[lo, hi]`` (slab frame)."""
    return _clean(cracks, list(cracks.joined) + [(lo, hi)])


def evolve_gap(cracks: CrackSet, x_star: float, left_step: float,
               right_step: float) -> CrackSet:
    """Grow the joined interval containing ``x_star`` (slab frame).

    Neighbouring cracks shrink and disappear once consumed; joined
    intervals that meet are merged.
    """
    if left_step < 0 or right_step < 0:
        raise ValueError("steps must be non-negative")
    joined = list(cracks.joined)
    hit = [k for k, (lo, hi) in enumerate(joined) if lo <= x_star <= hi]
    if not hit:
        raise GeometryError(f"x*={x_star} lies on a crack, not in a joined interval")
    lo, hi = joined[hit[0]]
    joined[hit[0]] = (lo - left_step, hi + right_step)
    return _clean(cracks, joined)


def _user(intervals, shift):
    return [[round(lo + shift, 12), round(hi + shift, 12)] for lo, hi in intervals]


@dataclass
class StateResult:
    cauchy: CauchyData
    profile: Profile
    tips: TipEstimate


def probe_state(geom: SlabGeometry, cracks: CrackSet, settings: ProbeSettings,
                noise_seed=None, g_hook: Callable[[Mesh], NeumannData] | None = None,
                ) -> StateResult:
    """Mesh, solve, optionally perturb the trace, and sweep the profile.

    Tip detection needs a pressure point and is done by the caller; here
    ``tips`` is left empty.
    """
    mesh = build_mesh(geom, cracks, settings.crack_width, settings.target_elements,
                      settings.refine)
    g = g_hook(mesh) if g_hook else neumann_sin3(mesh, settings.exclusion,
                                                 settings.forcing_mode, settings.frequency)
    cd = solve_neumann(mesh, g)
    if settings.noise_level > 0:
        cd = add_noise(cd, settings.noise_level,
                       settings.seed if noise_seed is None else noise_seed)
    prof = sweep_profile(cd, geom, settings.line, np.asarray(settings.xi1_grid),
                         np.asarray(settings.tau_grid), settings.window, settings.threads)
    return StateResult(cd, prof, TipEstimate(None, None))


def round_seed(seed: int, point: int, round_no: int) -> np.random.SeedSequence:
    """Independent, reproducible noise stream per (pressure point, round)."""
    return np.random.SeedSequence([seed, point, round_no])


@dataclass
class RoundRecord:
    point: int
    x_star: float
    round: int
    cracks: list
    joined: list
    x_left: float | None
    x_right: float | None
    gap: float | None
    decision: str
    artifacts: dict = field(default_factory=dict)
    error: str | None = None


@dataclass
class MonitorLog:
    rounds: list = field(default_factory=list)
    verdicts: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def for_point(self, point: int):
        return [r for r in self.rounds if r.point == point]

    def to_dict(self):
        return {"meta": self.meta, "verdicts": self.verdicts,
                "rounds": [asdict(r) for r in self.rounds]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def run_monitor(geom: SlabGeometry, cracks: CrackSet, cfg: MonitorConfig,
                settings: ProbeSettings, meta=None,
                g_hook=None, on_round=None) -> MonitorLog:
    """Run the monitoring loop for every pressure point in order.

    Coordinates in ``cfg`` are user frame.  A failing forward solve or sweep
    aborts only the affected pressure point.  ``on_round(record, result)``
    is called after every round (artifact writers hook in here).
    """
    out = MonitorLog(meta=dict(meta or {}))
    shift = geom.origin_shift[0]
    state = cracks
    for j, (x_star, (nlo, nhi)) in enumerate(zip(cfg.pressure_points, cfg.nuggets)):
        xs = x_star - shift
        state = open_nugget(state, nlo - shift, nhi - shift)
        verdict = "failure"
        for k in range(1, cfg.max_rounds + 1):
            if k > 1:
                state = evolve_gap(state, xs, *cfg.step(k))
            rec = RoundRecord(j, x_star, k, _user(state.intervals, shift),
                              _user(state.joined, shift),
                              None, None, None, "continue")
            try:
                res = probe_state(geom, state, settings, round_seed(settings.seed, j, k), g_hook)
            except Exception as exc:  # solver or sweep failure ends this point only
                log.error("point %d round %d failed: %s", j, k, exc)
                rec.decision, rec.error = "error", f"{type(exc).__name__}: {exc}"
                out.rounds.append(rec)
                verdict = "error"
                break
            tips = detect_tips(res.profile, x_star, settings.prominence, settings.search_radius)
            res.tips = tips
            rec.x_left, rec.x_right, rec.gap = tips.x_left, tips.x_right, tips.gap
            if rec.gap is not None and rec.gap >= cfg.gap_threshold:
                rec.decision = "success"
            elif k == cfg.max_rounds:
                rec.decision = "failure"
            if on_round is not None:
                on_round(rec, res)
            out.rounds.append(rec)
            log.info("x*=%g round %d: tips (%s, %s) gap %s -> %s", x_star, k,
                     rec.x_left, rec.x_right, rec.gap, rec.decision)
            if rec.decision == "success":
                verdict = "success"
                break
        out.verdicts[str(x_star)] = verdict
    return out
