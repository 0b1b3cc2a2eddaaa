"""Profile sweep and tip picking for the first welding stage.

The slope of log|I| along the probing line has local maxima near the crack
tips.  The nearest maxima either side of the pressure point are reported as
the current gap; an SVG of the profile is written next to this script.
"""
from pathlib import Path

import numpy as np

from kelvin_enclosure import config
from kelvin_enclosure.artifacts import profile_svg
from kelvin_enclosure.monitor import probe_state
from kelvin_enclosure.profiler import detect_tips, profile_maxima

cfg = config.reference().with_overrides(probe={"threads": 4})
st = cfg.probe_settings()
res = probe_state(cfg.slab(), cfg.crack_set(), st)
prof = res.profile

print("qualifying maxima (xi1 plateau ranges):")
for lo, hi, prom in profile_maxima(prof, st.prominence):
    print(f"  [{prof.xi1_grid[lo]:+.2f}, {prof.xi1_grid[hi]:+.2f}]  prominence {prom:.3f}")

tips = detect_tips(prof, -1.25, st.prominence, st.search_radius)
print(f"gap around x* = -1.25: ({tips.x_left}, {tips.x_right}), true (-1.5, -1.0)")

out = Path(__file__).with_name("profile_start.svg")
out.write_text(profile_svg(prof, tips, [-1.5, -1.0], "start stage, x* = -1.25"))
print("wrote", out)
