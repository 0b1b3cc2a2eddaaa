"""Crack-gap detection in a thin slab with Kelvin-transformed exponential probes."""
from .fem import CauchyData, Mesh, build_mesh, neumann_sin3, solve_neumann
from .geometry import CrackSet, ProbingLine, SlabGeometry
from .monitor import MonitorConfig, ProbeSettings, run_monitor
from .oracle import OracleCase, verify_tip_limit
from .probe import ProbeConfig, indicator, indicator_partial
from .profiler import Profile, detect_tips, sweep_profile

__version__ = "0.1.0"
