"""Large-tau limit of the tip integral, and why n = 2 converges slowly.

The scaled ratio to the closed-form limit behaves like 1 + c1 / tau with
c1 = -i p (p + 1) A, p = n - 1/2.  For n = 2 this gives |c1| ~ 5.3, so the
ratio only gets within 2% of one beyond tau ~ 265.
"""
from kelvin_enclosure.oracle import OracleCase, first_correction, scaled_ratio, verify_tip_limit

for n, s0, alpha in [(1, 1.0, 0.0), (2, 1.0, 0.0), (1, 1.0, 0.8), (1, 2.0, -0.8)]:
    case = OracleCase(n, s0, alpha)
    print(verify_tip_limit(case).text())
    c1 = first_correction(case)
    for tau in (100.0, 300.0, 1000.0):
        r = scaled_ratio(case, tau)
        print(f"  tau={tau:6.0f}  |ratio-1| = {abs(r - 1):.4f}   |c1|/tau = {abs(c1) / tau:.4f}")
    print()
