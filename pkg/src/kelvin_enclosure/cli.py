"""Command line front end: ``solve | probe | monitor | oracle | plot``.

Failures exit non-zero with a one-line JSON object on stderr.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import config as cfgmod
from .artifacts import (profile_svg, read_profile, write_cauchy, write_indicator,
                        write_profile)
from .fem import build_mesh, neumann_sin3, solve_neumann, write_mesh
from .monitor import run_monitor
from .oracle import OracleCase, verify_tip_limit
from .probe import ProbeConfig, add_noise, indicator, indicator_partial
from .profiler import detect_tips, profile_maxima, sweep_profile

log = logging.getLogger("kelvin_enclosure")


def _tau_range(text: str) -> tuple[float, float, float]:
    try:
        lo, hi, step = (float(v) for v in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError("expected LO:HI:STEP") from None
    return lo, hi, step


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError("expected comma-separated numbers") from None


def _load_config(args) -> cfgmod.RunConfig:
    cfg = cfgmod.load(args.config) if args.config else cfgmod.reference()
    noise, probe = {}, {}
    if getattr(args, "seed", None) is not None:
        noise["seed"] = args.seed
    if getattr(args, "noise", None) is not None:
        noise["enabled"] = args.noise != 0
        if args.noise > 0:
            noise["level"] = args.noise
    if getattr(args, "tau", None) is not None:
        probe.update(zip(("tau_min", "tau_max", "tau_step"), args.tau))
    if getattr(args, "delta", None) is not None:
        probe["delta"] = args.delta
    if getattr(args, "threads", None) is not None:
        probe["threads"] = args.threads
    return cfg.with_overrides(noise=noise, probe=probe)


def _header(cfg: cfgmod.RunConfig, command: str) -> dict:
    return {"tool": f"kelvin-enclosure {__version__}", "command": command,
            "config_sha256": cfg.digest(), "seed": cfg.noise.seed,
            "noise": repr(cfg.noise.level) if cfg.noise.enabled else "0"}


def _out_dir(args, cfg) -> Path:
    out = Path(args.out or cfg.output.run_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _forward(cfg: cfgmod.RunConfig):
    st = cfg.probe_settings()
    mesh = build_mesh(cfg.slab(), cfg.crack_set(), st.crack_width, st.target_elements, st.refine)
    g = neumann_sin3(mesh, st.exclusion, st.forcing_mode, st.frequency)
    cd = solve_neumann(mesh, g)
    if st.noise_level > 0:
        cd = add_noise(cd, st.noise_level, st.seed)
    return cd


def cmd_solve(args) -> dict:
    cfg = _load_config(args)
    out = _out_dir(args, cfg)
    cd = _forward(cfg)
    write_mesh(cd.mesh, out / "mesh.txt")
    write_cauchy(out / "cauchy.csv", cd, _header(cfg, "solve"))
    (out / "config.toml").write_text(cfg.to_toml())
    return {"nodes": len(cd.mesh.nodes), "elements": cd.mesh.n_elements,
            "residual": cd.residual, "out": str(out)}


def cmd_probe(args) -> dict:
    cfg = _load_config(args)
    out = _out_dir(args, cfg)
    cd = _forward(cfg)
    geom = cfg.slab()
    hdr = _header(cfg, "probe")
    (out / "config.toml").write_text(cfg.to_toml())
    if args.xi1 is not None:
        line = cfg.probing_line()
        xi_user = np.array([args.xi1, float(line.height_fn(args.xi1))])
        xi = geom.to_slab(xi_user)
        pc = ProbeConfig(tuple(xi), cfg.tau_grid(), cfg.probe.delta)
        if cfg.probe.delta is None:
            s = indicator(cd, pc)
        else:
            s = indicator_partial(cd, pc, geom.c)
        write_indicator(out / "indicator.csv", s, hdr)
        return {"xi_user": xi_user.tolist(), "valid": int(s.valid.sum()), "out": str(out)}
    if cfg.probe.delta is not None:
        raise ValueError("--delta applies to single-position probes (use --xi1)")
    st = cfg.probe_settings()
    prof = sweep_profile(cd, geom, st.line, np.asarray(st.xi1_grid), np.asarray(st.tau_grid),
                         threads=st.threads)
    write_profile(out / "profile.csv", prof, hdr)
    xs = prof.xi1_grid
    maxima = [[float(xs[lo]), float(xs[hi])] for lo, hi, _ in profile_maxima(prof, st.prominence)]
    if "svg" in cfg.output.formats:
        tips = [t for iv in cfg.cracks.joined for t in iv]
        (out / "profile.svg").write_text(profile_svg(prof, true_tips=tips, title="profile"))
    return {"maxima": maxima, "out": str(out)}


def cmd_monitor(args) -> dict:
    cfg = _load_config(args)
    out = _out_dir(args, cfg)
    (out / "config.toml").write_text(cfg.to_toml())
    hdr = _header(cfg, "monitor")

    def save(rec, res):
        d = out / f"point{rec.point}_round{rec.round}"
        d.mkdir(exist_ok=True)
        h = dict(hdr, x_star=repr(rec.x_star), round=rec.round)
        write_profile(d / "profile.csv", res.profile, h)
        rec.artifacts["profile_csv"] = str(d / "profile.csv")
        if "svg" in cfg.output.formats:
            tips = [t for iv in rec.joined for t in iv]
            (d / "profile.svg").write_text(profile_svg(
                res.profile, res.tips, tips, f"x* = {rec.x_star}, round {rec.round}"))
            rec.artifacts["profile_svg"] = str(d / "profile.svg")

    # the configured joined intervals are the pre-existing state; nuggets
    # are opened by the monitor itself
    cracks = cfg.crack_set() if args.keep_initial else \
        cfg.with_overrides(cracks={"joined": []}).crack_set()
    mlog = run_monitor(cfg.slab(), cracks, cfg.monitor_config(), cfg.probe_settings(),
                       meta=hdr, on_round=save)
    (out / "monitor.json").write_text(mlog.to_json() + "\n")
    return {"verdicts": mlog.verdicts,
            "rounds": [[r.x_star, r.round, r.x_left, r.x_right, r.decision]
                       for r in mlog.rounds], "out": str(out)}


def cmd_oracle(args) -> dict:
    kw = {}
    if args.tau is not None:
        kw["tau_list"] = tuple(args.tau)
    case = OracleCase(args.n, args.s0, args.alpha, args.eta, **kw)
    rep = verify_tip_limit(case, args.tolerance)
    print(rep.text())
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(rep.to_json() + "\n")
    return {"passed": rep.passed, "slow": rep.slow}


def cmd_plot(args) -> dict:
    header, prof = read_profile(args.profile)
    tips = None
    if args.pressure_point is not None:
        tips = detect_tips(prof, args.pressure_point, args.prominence, args.search_radius)
    out = Path(args.out or Path(args.profile).with_suffix(".svg"))
    out.write_text(profile_svg(prof, tips, args.true_tip or (), args.title or ""))
    return {"out": str(out)}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="kelvin-enclosure", description=__doc__)
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, noise=True):
        sp.add_argument("--config", help="TOML run configuration (default: reference)")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--threads", type=int)
        if noise:
            sp.add_argument("--seed", type=int, help="noise seed")
            sp.add_argument("--noise", type=float, nargs="?", const=-1.0,
                            help="enable trace noise (optionally give the relative level; 0 disables)")

    s = sub.add_parser("solve", help="forward solve; writes mesh and Cauchy data")
    common(s)
    s.set_defaults(func=cmd_solve)

    s = sub.add_parser("probe", help="indicator at one position or a full profile sweep")
    common(s)
    s.add_argument("--tau", type=_tau_range, help="LO:HI:STEP")
    s.add_argument("--xi1", type=float, help="single probe position (user frame)")
    s.add_argument("--delta", type=float, help="partial-boundary cutoff below the crack line")
    s.set_defaults(func=cmd_probe)

    s = sub.add_parser("monitor", help="run the weld-monitoring loop")
    common(s)
    s.add_argument("--keep-initial", action="store_true",
                   help="start from the configured joined intervals instead of a crack-only line")
    s.set_defaults(func=cmd_monitor)

    s = sub.add_parser("oracle", help="numerical check of the tip-integral limit")
    s.add_argument("--n", type=int, default=1)
    s.add_argument("--s0", type=float, default=1.0)
    s.add_argument("--alpha", type=float, default=0.0)
    s.add_argument("--eta", type=float, default=None)
    s.add_argument("--tau", type=_float_list, help="comma-separated increasing tau values")
    s.add_argument("--tolerance", type=float, default=0.02)
    s.add_argument("--out", help="JSON report path")
    s.set_defaults(func=cmd_oracle)

    s = sub.add_parser("plot", help="render a profile CSV as SVG")
    s.add_argument("profile")
    s.add_argument("--out")
    s.add_argument("--pressure-point", type=float, help="mark the detected tips around it")
    s.add_argument("--prominence", type=float, default=0.02)
    s.add_argument("--search-radius", type=float, default=1.0)
    s.add_argument("--true-tip", type=float, action="append")
    s.add_argument("--title")
    s.set_defaults(func=cmd_plot)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        result = args.func(args)
    except cfgmod.ConfigError as exc:
        print(json.dumps({"error": "config", "field": exc.path, "message": str(exc)}),
              file=sys.stderr)
        return 2
    except Exception as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 1
    print(json.dumps(result, sort_keys=True))
    if args.command == "oracle" and not result["passed"]:
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
