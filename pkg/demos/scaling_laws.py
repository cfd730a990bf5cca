"""Scaling families A, B, C against the necessary conditions.

For each family the measured log-log slope of the norm ratio is compared
with the exponent gap the region predicts. A negative gap means the ratio
blows up as eps -> 0, so the point lies outside the region.
"""

from sphavg.experiments import ScalingFamily, predicted_gap, run_scaling
from sphavg.region import ExponentPoint

EPS = [2.0**-k for k in range(4, 10)]

CASES = [
    ("B", "3/5 3/5 ; 2/5", EPS),
    ("B", "1/2 1/2 ; 1/2", EPS),
    ("B", "1/2 1 ; 0", EPS[:5]),
    ("A", "1/2 1/2 ; 1", [2, 4, 8, 16, 32, 64]),
    ("C", "1/2 1/2 ; 1/2", [2.0**-k for k in range(3, 7)]),
]

if __name__ == "__main__":
    for tag, text, scales in CASES:
        fam = ScalingFamily(tag, 2)
        point = ExponentPoint.parse(text)
        rep = run_scaling(fam, point, scales, check_witness=predicted_gap(fam, point) >= 0)
        print(rep.summary_line())
        for scale, ratio, witness in rep.rows:
            print(f"    scale={scale:<12.6g} ratio={ratio:<12.6g} T={witness:.6g}")
