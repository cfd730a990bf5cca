"""Exact rational helpers shared by the geometry and CLI layers."""

from __future__ import annotations

import re
from fractions import Fraction

_RATIONAL_RE = re.compile(r"^[+-]?\d+(/\d+)?$")


class RationalParseError(ValueError):
    """Raised when a token is not an integer or an ``a/b`` rational.

    ``position`` is the 0-based index of the offending token.
    """

    def __init__(self, message: str, position: int):
        super().__init__(message)
        self.position = position


def parse_rational(token: str, position: int = 0) -> Fraction:
    token = token.strip()
    if not _RATIONAL_RE.match(token):
        raise RationalParseError(
            f"token {position} ({token!r}) is not an integer or a/b rational", position
        )
    try:
        return Fraction(token)
    except ZeroDivisionError:
        raise RationalParseError(f"token {position} ({token!r}) has zero denominator", position)


def to_json(q: Fraction) -> dict:
    return {"num": q.numerator, "den": q.denominator}


def from_json(obj) -> Fraction:
    if isinstance(obj, dict):
        return Fraction(int(obj["num"]), int(obj["den"]))
    if isinstance(obj, int):
        return Fraction(obj)
    if isinstance(obj, str):
        return parse_rational(obj)
    raise TypeError(f"cannot read rational from {obj!r}")


def solve_exact(rows: list[list[Fraction]], rhs: list[Fraction]) -> list[Fraction] | None:
    """Gauss-Jordan elimination over the rationals; ``None`` if singular."""
    size = len(rows)
    aug = [list(map(Fraction, r)) + [Fraction(b)] for r, b in zip(rows, rhs)]
    for col in range(size):
        pivot = next((r for r in range(col, size) if aug[r][col] != 0), None)
        if pivot is None:
            return None
        aug[col], aug[pivot] = aug[pivot], aug[col]
        piv = aug[col][col]
        aug[col] = [v / piv for v in aug[col]]
        for r in range(size):
            if r != col and aug[r][col] != 0:
                factor = aug[r][col]
                aug[r] = [a - factor * c for a, c in zip(aug[r], aug[col])]
    return [aug[r][size] for r in range(size)]


def rank_exact(rows: list[list[Fraction]]) -> int:
    mat = [list(map(Fraction, r)) for r in rows]
    if not mat:
        return 0
    ncols = len(mat[0])
    rank = 0
    for col in range(ncols):
        pivot = next((r for r in range(rank, len(mat)) if mat[r][col] != 0), None)
        if pivot is None:
            continue
        mat[rank], mat[pivot] = mat[pivot], mat[rank]
        for r in range(len(mat)):
            if r != rank and mat[r][col] != 0:
                factor = mat[r][col] / mat[rank][col]
                mat[r] = [a - factor * c for a, c in zip(mat[r], mat[rank])]
        rank += 1
    return rank
