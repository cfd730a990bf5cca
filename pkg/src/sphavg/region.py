"""Exact geometry of the necessary exponent region.

Points are written in reciprocal coordinates ``(1/p_1, ..., 1/p_n; 1/r)``.
All arithmetic is done with :class:`fractions.Fraction`; floating point is
only used to pre-screen candidate facet subsets during vertex enumeration,
and every reported vertex is re-derived and re-checked exactly.

Slot indices in the public API are 1-based, matching the usual
``p_1, ..., p_n`` notation.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .rational import parse_rational, rank_exact, solve_exact, to_json, from_json

__all__ = [
    "ExponentPoint",
    "LinearInequality",
    "NecessaryRegion",
    "Membership",
    "NotInRegionError",
    "Classification",
    "EndpointRecord",
    "SliceVertex",
    "MAX_ENUMERATION_N",
    "build_region",
    "contains",
    "enumerate_vertices",
    "dual_point",
    "permute",
    "orbit",
    "named_points",
    "endpoint_catalogue",
    "classify",
    "diagonal_slice",
]

MAX_ENUMERATION_N = 6

FAMILIES = ("i", "ii", "iii", "box-lower", "box-upper")


@dataclass(frozen=True)
class ExponentPoint:
    """A point ``(x_1, ..., x_n; xr)`` with ``x_j = 1/p_j`` and ``xr = 1/r``."""

    x: tuple[Fraction, ...]
    xr: Fraction

    def __post_init__(self):
        x = tuple(Fraction(v) for v in self.x)
        xr = Fraction(self.xr)
        if len(x) < 2:
            raise ValueError(f"need at least 2 slots, got {len(x)}")
        for v in x + (xr,):
            if not 0 <= v <= 1:
                raise ValueError(f"coordinate {v} outside [0, 1]")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "xr", xr)

    @property
    def n(self) -> int:
        return len(self.x)

    @property
    def coords(self) -> tuple[Fraction, ...]:
        return self.x + (self.xr,)

    @classmethod
    def from_coords(cls, coords: Sequence) -> "ExponentPoint":
        coords = list(coords)
        return cls(tuple(coords[:-1]), coords[-1])

    @classmethod
    def parse(cls, text: str) -> "ExponentPoint":
        """Parse ``"3/5 3/5 ; 2/5"``. Decimals are rejected."""
        if text.count(";") != 1:
            raise ValueError("expected exactly one ';' separating the r-slot")
        left, right = text.split(";")
        tokens = left.split()
        rtok = right.split()
        if len(rtok) != 1:
            raise ValueError("expected exactly one value after ';'")
        xs = [parse_rational(t, i) for i, t in enumerate(tokens)]
        xr = parse_rational(rtok[0], len(tokens))
        return cls(tuple(xs), xr)

    def __str__(self) -> str:
        return " ".join(str(v) for v in self.x) + " ; " + str(self.xr)

    def to_json(self) -> dict:
        return {"x": [to_json(v) for v in self.x], "xr": to_json(self.xr)}

    @classmethod
    def from_json(cls, obj) -> "ExponentPoint":
        if isinstance(obj, str):
            return cls.parse(obj)
        return cls(tuple(from_json(v) for v in obj["x"]), from_json(obj["xr"]))

    def sort_key(self):
        return self.coords

    def is_diagonal(self) -> bool:
        return len(set(self.x)) == 1


@dataclass(frozen=True)
class LinearInequality:
    """``coeff_x . x + coeff_xr * xr <= rhs``."""

    coeff_x: tuple[Fraction, ...]
    coeff_xr: Fraction
    rhs: Fraction
    family: str
    indices: tuple[int, ...] = ()

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")

    def lhs(self, point: ExponentPoint) -> Fraction:
        return sum((a * v for a, v in zip(self.coeff_x, point.x)), Fraction(0)) + self.coeff_xr * point.xr

    def slack(self, point: ExponentPoint) -> Fraction:
        return self.rhs - self.lhs(point)

    @property
    def normal(self) -> tuple[Fraction, ...]:
        return self.coeff_x + (self.coeff_xr,)

    @property
    def label(self) -> str:
        if self.family == "i":
            return "(i)"
        if self.family == "ii":
            return f"(ii) k={self.indices[0]}"
        if self.family == "iii":
            return f"(iii) k={self.indices[0]},l={self.indices[1]}"
        slot = self.indices[0]
        return f"{self.family} {'r' if slot == 0 else slot}"

    def to_json(self) -> dict:
        return {
            "family": self.family,
            "indices": list(self.indices),
            "label": self.label,
            "coeff_x": [to_json(v) for v in self.coeff_x],
            "coeff_xr": to_json(self.coeff_xr),
            "rhs": to_json(self.rhs),
        }


@dataclass(frozen=True)
class NecessaryRegion:
    n: int
    inequalities: tuple[LinearInequality, ...]

    def family(self, name: str) -> list[LinearInequality]:
        return [q for q in self.inequalities if q.family == name]

    def to_json(self) -> dict:
        return {"n": self.n, "inequalities": [q.to_json() for q in self.inequalities]}


def build_region(n: int) -> NecessaryRegion:
    """All necessary inequalities for ``n`` slots plus the unit-cube bounds.

    Box facets carry ``indices=(j,)`` with ``j`` in ``1..n`` for the p-slots and
    ``0`` for the r-slot.
    """
    if not isinstance(n, (int, np.integer)) or n < 2:
        raise ValueError(f"n must be an integer >= 2, got {n!r}")
    n = int(n)
    one, two, zero = Fraction(1), Fraction(2), Fraction(0)
    ineqs = [LinearInequality(tuple([-one] * n), one, zero, "i")]
    for k in range(n):
        c = [one] * n
        c[k] = two
        ineqs.append(LinearInequality(tuple(c), -two, Fraction(n - 1), "ii", (k + 1,)))
    for k, l in itertools.combinations(range(n), 2):
        c = [one] * n
        c[k] = c[l] = two
        ineqs.append(LinearInequality(tuple(c), -one, Fraction(n), "iii", (k + 1, l + 1)))
    for slot in list(range(1, n + 1)) + [0]:
        e = [zero] * n
        er = zero
        if slot == 0:
            er = one
        else:
            e[slot - 1] = one
        ineqs.append(LinearInequality(tuple(-v for v in e), -er, zero, "box-lower", (slot,)))
        ineqs.append(LinearInequality(tuple(e), er, one, "box-upper", (slot,)))
    return NecessaryRegion(n, tuple(ineqs))


@dataclass(frozen=True)
class Membership:
    member: bool
    tight: tuple[LinearInequality, ...]
    violated: tuple[LinearInequality, ...]

    def to_json(self) -> dict:
        return {
            "member": self.member,
            "tight": [q.label for q in self.tight],
            "violated": [q.label for q in self.violated],
        }


class NotInRegionError(ValueError):
    def __init__(self, point: ExponentPoint, violated: Sequence[LinearInequality]):
        self.point = point
        self.violated = tuple(violated)
        labels = ", ".join(q.label for q in self.violated)
        super().__init__(f"point ({point}) violates {labels}")


def _check_dim(region: NecessaryRegion, point: ExponentPoint):
    if point.n != region.n:
        raise ValueError(f"point has {point.n} slots, region has {region.n}")


def contains(region: NecessaryRegion, point: ExponentPoint) -> Membership:
    _check_dim(region, point)
    tight, violated = [], []
    for q in region.inequalities:
        s = q.slack(point)
        if s == 0:
            tight.append(q)
        elif s < 0:
            violated.append(q)
    return Membership(not violated, tuple(tight), tuple(violated))


# --------------------------------------------------------------------------
# vertex enumeration


def _integer_system(region: NecessaryRegion):
    A = np.array([[float(v) for v in q.normal] for q in region.inequalities])
    b = np.array([float(q.rhs) for q in region.inequalities])
    return A, b


def _candidate_subsets(region: NecessaryRegion, chunk: int = 100_000):
    """Facet subsets whose float solution is nonsingular and feasible.

    All coefficients are small integers, so a nonsingular subsystem has
    ``|det| >= 1``; the 0.5 cut cannot misclassify.
    """
    A, b = _integer_system(region)
    m, d = A.shape
    combos = itertools.combinations(range(m), d)
    found = {}
    while True:
        flat = np.fromiter(
            itertools.chain.from_iterable(itertools.islice(combos, chunk)), dtype=np.int64
        )
        if flat.size == 0:
            break
        idx = flat.reshape(-1, d)
        sub = A[idx]
        keep = np.abs(np.linalg.det(sub)) > 0.5
        if not keep.any():
            continue
        idx = idx[keep]
        sol = np.linalg.solve(sub[keep], b[idx][..., None])[..., 0]
        feasible = np.all(sol @ A.T <= b + 1e-7, axis=1)
        for row, x in zip(idx[feasible], sol[feasible]):
            key = tuple(np.round(x, 6))
            found.setdefault(key, tuple(row))
    return list(found.values())


def enumerate_vertices(region: NecessaryRegion) -> list[ExponentPoint]:
    """Exact vertex set, sorted lexicographically."""
    if region.n > MAX_ENUMERATION_N:
        raise ValueError(
            f"vertex enumeration is limited to n <= {MAX_ENUMERATION_N} (got n={region.n})"
        )
    ineqs = region.inequalities
    vertices = set()
    for subset in _candidate_subsets(region):
        rows = [list(ineqs[i].normal) for i in subset]
        sol = solve_exact(rows, [ineqs[i].rhs for i in subset])
        if sol is None:
            continue
        if any(not 0 <= v <= 1 for v in sol):
            continue
        point = ExponentPoint.from_coords(sol)
        if contains(region, point).member:
            vertices.add(point)
    return sorted(vertices, key=ExponentPoint.sort_key)


def tight_rank(region: NecessaryRegion, point: ExponentPoint) -> int:
    """Rank of the normals of the facets tight at ``point``."""
    tight = contains(region, point).tight
    return rank_exact([list(q.normal) for q in tight])


# --------------------------------------------------------------------------
# symmetries


def dual_point(point: ExponentPoint, j: int) -> ExponentPoint:
    """Exponent point of the ``j``-th adjoint: swap ``1/p_j`` with ``1 - 1/r``."""
    if not 1 <= j <= point.n:
        raise ValueError(f"slot {j} outside 1..{point.n}")
    x = list(point.x)
    xj = x[j - 1]
    x[j - 1] = 1 - point.xr
    return ExponentPoint(tuple(x), 1 - xj)


def permute(point: ExponentPoint, perm: Sequence[int]) -> ExponentPoint:
    """Return the point with ``x'_i = x_{perm[i]}`` (``perm`` is 1-based)."""
    perm = tuple(int(p) for p in perm)
    if sorted(perm) != list(range(1, point.n + 1)):
        raise ValueError(f"{perm} is not a permutation of 1..{point.n}")
    return ExponentPoint(tuple(point.x[p - 1] for p in perm), point.xr)


def orbit(point: ExponentPoint) -> list[ExponentPoint]:
    """All distinct coordinate permutations of ``point`` (sorted)."""
    pts = {ExponentPoint(p, point.xr) for p in set(itertools.permutations(point.x))}
    return sorted(pts, key=ExponentPoint.sort_key)


def orbit_key(point: ExponentPoint) -> tuple:
    return (tuple(sorted(point.x, reverse=True)), point.xr)


def canonical(point: ExponentPoint) -> ExponentPoint:
    return ExponentPoint(tuple(sorted(point.x, reverse=True)), point.xr)


# --------------------------------------------------------------------------
# named points


def _pt(x, xr) -> ExponentPoint:
    return ExponentPoint(tuple(Fraction(v) for v in x), Fraction(xr))


def named_points(n: int) -> dict[str, ExponentPoint]:
    """Named points in their conventional slot positions.

    For ``n = 2`` these are the thirteen listed endpoints with primes marking
    the swapped copies. For ``n >= 3`` one representative per type is given
    (the distinguished slot is last); ``N``, ``N*1`` and ``N*3`` are added for
    ``n = 3`` even though they are not vertices.
    """
    F = Fraction
    if n == 2:
        return {
            "O": _pt((0, 0), 0),
            "E": _pt((0, F(1, 2)), 0),
            "E'": _pt((F(1, 2), 0), 0),
            "B": _pt((F(1, 3), F(1, 3)), 0),
            "K": _pt((0, 1), F(1, 2)),
            "K'": _pt((1, 0), F(1, 2)),
            "M": _pt((F(3, 5), F(3, 5)), F(2, 5)),
            "C": _pt((0, 1), 1),
            "C'": _pt((1, 0), 1),
            "P": _pt((F(1, 2), 1), 1),
            "P'": _pt((1, F(1, 2)), 1),
            "G": _pt((F(1, 3), 1), F(2, 3)),
            "G'": _pt((1, F(1, 3)), F(2, 3)),
        }
    if n < 2:
        raise ValueError("n must be >= 2")
    q = F(n - 1, n)
    b = F(n - 1, n + 1)
    a = F(n + 1, n + 2)
    pts = {
        "O": _pt([0] * n, 0),
        "B": _pt([b] * n, 0),
        "M": _pt([F(n + 1, n + 3)] * n, F(2, n + 3)),
        "E": _pt([q] * (n - 1) + [0], 0),
        "P": _pt([q] * (n - 1) + [1], 1),
        "K": _pt([q] * (n - 2) + [1, 0], F(1, n)),
        "A": _pt([a] * n, 1),
        "A*": _pt([a] * (n - 1) + [0], F(1, n + 2)),
        "C": _pt([0] * (n - 1) + [1], 1),
        "Z": _pt([1] * (n - 1) + [0], 1),
        "Z*": _pt([1] * (n - 2) + [0, 0], 0),
        "G": _pt([b] * (n - 1) + [1], F(2, n + 1)),
    }
    if n == 3:
        pts["N"] = _pt((F(3, 5), F(3, 5), F(1, 5)), 0)
        pts["N*1"] = _pt((1, F(3, 5), F(1, 5)), F(2, 5))
        pts["N*3"] = _pt((F(3, 5), F(3, 5), 1), F(4, 5))
    return pts


def _stem(name: str) -> str:
    return name.rstrip("'")


# --------------------------------------------------------------------------
# classification

YES, NO, UNKNOWN = "yes", "no", "unknown"


@dataclass(frozen=True)
class Classification:
    strong: str = UNKNOWN
    restricted: str = UNKNOWN
    weak: str = UNKNOWN
    restricted_weak: str = UNKNOWN
    source: str = "not settled"

    def __post_init__(self):
        for name in ("strong", "restricted", "weak", "restricted_weak"):
            if getattr(self, name) not in (YES, NO, UNKNOWN):
                raise ValueError(f"{name} must be yes/no/unknown")
        if self.strong == YES and (self.restricted != YES or self.weak != YES):
            raise ValueError("strong type implies restricted and weak type")
        if YES in (self.restricted, self.weak) and self.restricted_weak != YES:
            raise ValueError("restricted or weak type implies restricted weak type")

    @classmethod
    def closed(cls, source: str, strong=UNKNOWN, restricted=UNKNOWN, weak=UNKNOWN,
               restricted_weak=UNKNOWN) -> "Classification":
        """Build a record and propagate the positive implications upward."""
        if strong == YES:
            restricted = weak = YES
        if YES in (restricted, weak):
            restricted_weak = YES
        return cls(strong, restricted, weak, restricted_weak, source)

    def to_json(self) -> dict:
        return {
            "strong": self.strong,
            "restricted": self.restricted,
            "weak": self.weak,
            "restricted_weak": self.restricted_weak,
            "source": self.source,
        }


STRONG_N2 = "n=2 endpoint result"
STRONG_N3 = "n>=3 endpoint result"
INTERP = "interpolation between settled endpoints"


def _endpoint_table(n: int) -> dict[str, Classification]:
    """Verdicts keyed by name stem."""
    if n == 2:
        src = STRONG_N2
        strong = Classification.closed(src, strong=YES)
        restricted_only = Classification.closed(src, strong=NO, restricted=YES)
        return {
            "O": strong,
            "C": strong,
            "M": strong,
            "P": restricted_only,
            "G": restricted_only,
            "E": restricted_only,
            "B": restricted_only,
            "K": Classification.closed(src, strong=NO, weak=YES),
        }
    src = STRONG_N3
    strong = Classification.closed(src, strong=YES)
    table = {name: strong for name in ("O", "B", "M", "A", "A*", "C", "Z", "Z*", "G")}
    table["E"] = Classification.closed(src, restricted=YES)
    table["P"] = Classification.closed(src, restricted=YES)
    table["K"] = Classification.closed(src, restricted_weak=YES)
    if n == 3:
        nsrc = "n=3 boundary point N and its duals"
        for name in ("N", "N*1", "N*3"):
            table[name] = Classification.closed(nsrc, strong=YES)
    return table


def _orbit_lookup(n: int) -> dict[tuple, str]:
    """Map orbit keys of named points to their stems."""
    return {orbit_key(p): _stem(name) for name, p in named_points(n).items()}


def _on_open_segment(p: ExponentPoint, a: ExponentPoint, b: ExponentPoint) -> bool:
    d = [bv - av for av, bv in zip(a.coords, b.coords)]
    t = None
    for pv, av, dv in zip(p.coords, a.coords, d):
        if dv == 0:
            if pv != av:
                return False
            continue
        tv = (pv - av) / dv
        if t is None:
            t = tv
        elif tv != t:
            return False
    return t is not None and 0 < t < 1


def _on_open_segment_orbit(p: ExponentPoint, a: ExponentPoint, b: ExponentPoint) -> bool:
    for perm in itertools.permutations(range(1, p.n + 1)):
        if _on_open_segment(p, permute(a, perm), permute(b, perm)):
            return True
    return False


def _diagonal_verdict(point: ExponentPoint) -> Classification | None:
    n = point.n
    if not point.is_diagonal():
        return None
    if n >= 3:
        return Classification.closed("diagonal region, n>=3 (Bak-Shim)", strong=YES)
    s, t = point.x[0], point.xr
    pts = named_points(2)
    M = (pts["M"].x[0], pts["M"].xr)
    B = (pts["B"].x[0], pts["B"].xr)
    H = (Fraction(1, 2), Fraction(1, 4))
    # on segment MB?  M=(3/5,2/5), B=(1/3,0): t = (3/2)(s - 1/3)
    on_mb_line = t == Fraction(3, 2) * (s - B[0]) and B[0] <= s <= M[0]
    if on_mb_line and s >= H[0]:
        return Classification.closed("segment MH (Bak-Shim)", strong=YES)
    if on_mb_line:
        # open segment HB: only restricted type is established
        return Classification.closed("segment MB (Oberlin, restricted type)", restricted=YES)
    A = (Fraction(3, 4), Fraction(1))
    on_am = (t - M[1]) * (A[0] - M[0]) == (s - M[0]) * (A[1] - M[1]) and M[0] <= s <= A[0]
    if on_am:
        return Classification.closed("segment AM (Bak-Shim)", strong=YES)
    return Classification.closed("diagonal region off AM, MB (Oberlin)", strong=YES)


def classify(point: ExponentPoint) -> Classification:
    """Boundedness verdicts encoded from the stated results only.

    Lookup order: named endpoints (up to permutation), explicitly treated
    segments and faces, diagonal results, then interior points. Any other
    boundary point is ``unknown``.
    """
    n = point.n
    region = build_region(n)
    cert = contains(region, point)
    if not cert.member:
        raise NotInRegionError(point, cert.violated)

    stem = _orbit_lookup(n).get(orbit_key(point))
    table = _endpoint_table(n)
    if stem is not None and stem in table:
        return table[stem]

    pts = named_points(n)
    if n == 2:
        if _on_open_segment_orbit(point, pts["B"], pts["E"]):
            return Classification.closed("open segment BE counterexample", strong=NO)
        if _on_open_segment_orbit(point, pts["C"], pts["P"]):
            return Classification.closed("open segment CP argument", strong=YES)
        if _on_open_segment_orbit(point, pts["P"], pts["P'"]):
            return Classification.closed("segment PP' by interpolation (remark)", strong=YES)
        if 0 in point.x:
            # face OEKC and its mirror, minus E and K (handled above)
            return Classification.closed("face OEKC remark", strong=YES)
    if n == 3 and _on_open_segment_orbit(point, pts["N"], pts["B"]):
        return Classification.closed("segment NB (n=3)", strong=YES)

    diag = _diagonal_verdict(point)
    if diag is not None:
        return diag

    if not cert.tight:
        return Classification.closed(INTERP, strong=YES)
    return Classification()


# --------------------------------------------------------------------------
# catalogue


@dataclass(frozen=True)
class EndpointRecord:
    point: ExponentPoint
    name: str
    orbit_id: ExponentPoint
    classification: Classification

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "point": self.point.to_json(),
            "text": str(self.point),
            "orbit_id": str(self.orbit_id),
            "classification": self.classification.to_json(),
        }


def _member_names(n: int) -> dict[ExponentPoint, str]:
    """Name every orbit member of every named point.

    The conventional representative keeps the bare stem; for ``n = 2`` the
    primed names (G', K', ...) are used; otherwise members are numbered ``stem#2``,
    ``stem#3``, ... in lexicographic order.
    """
    names = {}
    named = named_points(n)
    if n == 2:
        return {p: name for name, p in named.items()}
    for name, p in named.items():
        names[p] = name
        others = [q for q in orbit(p) if q != p]
        for i, q in enumerate(others, start=2):
            names.setdefault(q, f"{name}#{i}")
    return names


def endpoint_catalogue(n: int, vertices: Iterable[ExponentPoint] | None = None) -> list[EndpointRecord]:
    """Every vertex with its name, orbit representative and classification.

    Vertices not covered by the named list are labelled ``V1, V2, ...`` by
    orbit.
    """
    if vertices is None:
        vertices = enumerate_vertices(build_region(n))
    names = _member_names(n)
    extra: dict[tuple, str] = {}
    records = []
    for v in vertices:
        name = names.get(v)
        if name is None:
            key = orbit_key(v)
            if key not in extra:
                extra[key] = f"V{len(extra) + 1}"
            name = extra[key]
        records.append(EndpointRecord(v, name, canonical(v), classify(v)))
    return records


# --------------------------------------------------------------------------
# diagonal slice


@dataclass(frozen=True)
class SliceVertex:
    name: str
    s: Fraction
    t: Fraction

    def to_json(self) -> dict:
        return {"name": self.name, "inv_p": to_json(self.s), "inv_r": to_json(self.t)}


def slice_named(n: int) -> dict[str, tuple[Fraction, Fraction]]:
    F = Fraction
    return {
        "O": (F(0), F(0)),
        "B": (F(n - 1, n + 1), F(0)),
        "M": (F(n + 1, n + 3), F(2, n + 3)),
        "A": (F(n + 1, n + 2), F(1)),
        "F": (F(1, n), F(1)),
    }


def diagonal_slice(region: NecessaryRegion) -> list[SliceVertex]:
    """Vertices of the region restricted to ``x_1 = ... = x_n``.

    Returned counter-clockwise in ``(1/p, 1/r)`` coordinates starting from
    the origin.
    """
    lines = {}
    for q in region.inequalities:
        a, c = sum(q.coeff_x, Fraction(0)), q.coeff_xr
        if a == 0 and c == 0:
            continue
        lines[(a, c, q.rhs)] = None
    lines = list(lines)
    verts = set()
    for (a1, c1, b1), (a2, c2, b2) in itertools.combinations(lines, 2):
        sol = solve_exact([[a1, c1], [a2, c2]], [b1, b2])
        if sol is None:
            continue
        s, t = sol
        if all(a * s + c * t <= b for a, c, b in lines):
            verts.add((s, t))
    lookup = {v: k for k, v in slice_named(region.n).items()}
    cx = sum(float(s) for s, _ in verts) / len(verts)
    cy = sum(float(t) for _, t in verts) / len(verts)
    start = math.atan2(-cy, -cx)

    def angle(v):
        a = math.atan2(float(v[1]) - cy, float(v[0]) - cx) - start
        return a % (2 * math.pi)

    ordered = sorted(verts, key=angle)
    return [SliceVertex(lookup.get(v, "?"), v[0], v[1]) for v in ordered]
