"""Walk through the necessary region for n = 2 and n = 3.

Prints the vertex catalogue with the boundedness table, then the diagonal
slice and a few dual pairs.
"""

from sphavg.region import (
    build_region,
    classify,
    diagonal_slice,
    dual_point,
    endpoint_catalogue,
    named_points,
)


def show_catalogue(n):
    region = build_region(n)
    records = endpoint_catalogue(n)
    print(f"n={n}: {len(region.inequalities)} inequalities, {len(records)} vertices")
    for rec in records:
        c = rec.classification
        print(f"  {rec.name:>4}  {str(rec.point):<24} strong={c.strong:<7} weak={c.weak}")


def show_slice(n):
    region = build_region(n)
    corners = ", ".join(f"{v.name}=({v.s}, {v.t})" for v in diagonal_slice(region))
    print(f"diagonal slice n={n}: {corners}")


def show_duals():
    pts = named_points(2)
    for name in ("B", "E", "C", "P", "M"):
        p = pts[name]
        d = dual_point(p, 1)
        print(f"  {name} {p}  ->  {d}  strong: {classify(p).strong} / {classify(d).strong}")


if __name__ == "__main__":
    for n in (2, 3):
        show_catalogue(n)
        show_slice(n)
        print()
    print("duals for j = 1:")
    show_duals()
