"""The full monitoring loop with the reference configuration.

Each pressure point gets a nugget; the loop grows it by fixed steps,
re-solves, re-profiles and stops once the detected gap reaches 1.5.  The
table compares the rounds matching the published start / middle / end
stages with the published estimates.
"""
from kelvin_enclosure import config
from kelvin_enclosure.monitor import run_monitor

PUBLISHED = {-1.25: {(-1.5, -1.0): (-1.40, -1.00), (-1.75, -0.8): (-1.65, -0.85),
                     (-2.25, -0.4): (-2.15, -0.45)},
             1.25: {(1.0, 1.5): (1.05, 1.35), (0.75, 1.7): (0.90, 1.55),
                    (0.25, 2.1): (0.35, 1.90)}}

cfg = config.reference().with_overrides(cracks={"joined": []}, probe={"threads": 4})
log = run_monitor(cfg.slab(), cfg.crack_set(), cfg.monitor_config(), cfg.probe_settings())

print(f"{'x*':>6} {'round':>5} {'true gap':>16} {'detected':>16} {'published':>16}  decision")
for r in log.rounds:
    true = next(tuple(iv) for iv in r.joined if iv[0] <= r.x_star <= iv[1])
    pub = PUBLISHED[r.x_star].get(true)
    det = f"({r.x_left}, {r.x_right})"
    print(f"{r.x_star:6.2f} {r.round:5d} {str(true):>16} {det:>16} {str(pub or ''):>16}  {r.decision}")
print("verdicts:", log.verdicts)
