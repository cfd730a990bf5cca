"""Quadrature for the multilinear spherical average and its relatives.

For functions ``f_1, ..., f_n`` on the line and vectors ``v_1, ..., v_n``,

    T_v(f)(x) = int_{S^{n-1}} prod_j f_j(x - v_j . sigma) dsigma(sigma)

with ``dsigma`` the normalized surface measure; the standard basis gives
``T``. The circle (n = 2) uses an equally weighted angle grid, evaluated
lazily and pruned to the arcs where one bounded input can be nonzero, so
resolutions of 2^26 stay cheap. Higher spheres use a product grid built
from ``sigma = (sin(phi) eta, sgn(sin(phi)) cos(phi))`` with ``eta`` on the
sphere one dimension down and weight ``|sin(phi)|^(n-2)``.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .functions import TestFunction, lp_norm
from .region import ExponentPoint

__all__ = [
    "ResolutionWarning",
    "SphereGrid",
    "build_grid",
    "VectorFamily",
    "TruncationMask",
    "XGrid",
    "eval_T",
    "eval_T_v",
    "eval_U",
    "profile",
    "adjoint_family",
    "support_windows",
    "auto_xgrid",
    "pairing",
    "discrete_lr_norm",
    "norm_ratio",
    "sphere_fourier",
]

MAX_GRID_N = 5
CHUNK = 1 << 20
_PAD = 2


class ResolutionWarning(UserWarning):
    """Grid too coarse for the requested frequency or scale."""


@dataclass(frozen=True, eq=False)
class SphereGrid:
    """Quadrature rule for the normalized measure on ``S^(n-1)``.

    For ``n = 2`` the nodes are ``(cos t_k, sin t_k)`` with
    ``t_k = 2 pi k / resolution`` and are generated on demand.
    """

    n: int
    resolution: int
    polar: int = 0
    _nodes: np.ndarray | None = field(default=None, repr=False)
    _weights: np.ndarray | None = field(default=None, repr=False)

    @property
    def is_circle(self) -> bool:
        return self._nodes is None

    @property
    def size(self) -> int:
        return self.resolution if self.is_circle else len(self._weights)

    @property
    def nodes(self) -> np.ndarray:
        if self.is_circle:
            return _circle_nodes(np.arange(self.resolution), self.resolution)
        return self._nodes

    @property
    def weights(self) -> np.ndarray:
        if self.is_circle:
            return np.full(self.resolution, 1.0 / self.resolution)
        return self._weights

    @property
    def spacing(self) -> float:
        """Coarsest angular spacing between neighbouring nodes."""
        if self.is_circle:
            return 2 * math.pi / self.resolution
        return max(2 * math.pi / self.resolution, math.pi / self.polar)


def _circle_nodes(k: np.ndarray, N: int) -> np.ndarray:
    theta = k * (2.0 * np.pi / N)
    return np.stack([np.cos(theta), np.sin(theta)], axis=-1)


def build_grid(n: int, resolution: int, *, polar_resolution: int | None = None,
               symmetric: bool = False) -> SphereGrid:
    """Build a quadrature grid on ``S^(n-1)``.

    Parameters
    ----------
    n : int
        Ambient dimension, ``2 <= n <= 5``.
    resolution : int
        Number of angle nodes on the circle factor.
    polar_resolution : int, optional
        Number of midpoint nodes in ``phi`` for ``n >= 3`` (rounded up to
        even). Defaults to ``resolution // 2``.
    symmetric : bool
        For ``n >= 3``, symmetrize the node set over all coordinate
        permutations so permuting the inputs of ``T`` is exact up to
        rounding.
    """
    if resolution < 8:
        raise ValueError("resolution must be >= 8")
    if n < 2:
        raise ValueError("n must be >= 2")
    if n > MAX_GRID_N:
        raise ValueError(f"n = {n} > {MAX_GRID_N}: grid size grows too fast")
    if n == 2:
        return SphereGrid(2, int(resolution))
    m = polar_resolution if polar_resolution is not None else resolution // 2
    m = max(2, m + (m % 2))
    sub = build_grid(n - 1, resolution, polar_resolution=polar_resolution)
    phi = -np.pi / 2 + (np.arange(m) + 0.5) * (np.pi / m)
    s, c = np.sin(phi), np.cos(phi)
    eta = sub.nodes
    nodes = np.empty((m, len(eta), n))
    nodes[:, :, : n - 1] = s[:, None, None] * eta[None, :, :]
    nodes[:, :, n - 1] = (np.sign(s) * c)[:, None]
    weights = (np.abs(s) ** (n - 2))[:, None] * sub.weights[None, :]
    nodes = nodes.reshape(-1, n)
    weights = weights.reshape(-1)
    if symmetric:
        perms = list(itertools.permutations(range(n)))
        nodes = np.concatenate([nodes[:, list(p)] for p in perms])
        weights = np.tile(weights, len(perms))
    weights = weights / weights.sum()
    return SphereGrid(n, int(resolution), m, nodes, weights)


@dataclass(frozen=True, eq=False)
class VectorFamily:
    """Rows ``v_1, ..., v_n`` of an invertible matrix."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("vector family must be n vectors in R^n")
        norms = np.linalg.norm(m, axis=1)
        if np.any(norms == 0) or abs(np.linalg.det(m)) / np.prod(norms) <= 1e-10:
            raise ValueError("vectors are linearly dependent")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def standard(cls, n: int) -> "VectorFamily":
        return cls(np.eye(n))

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def is_standard(self) -> bool:
        return bool(np.array_equal(self.matrix, np.eye(self.n)))

    def to_json(self) -> list:
        return self.matrix.tolist()


def adjoint_family(v: VectorFamily, j: int) -> VectorFamily:
    """Vectors realizing the ``j``-th adjoint (1-based) of ``T_v``.

    ``<T_v(..., f_j, ...), h> = <T_w(..., h, ...), f_j>`` with
    ``w_j = -v_j`` and ``w_i = v_i - v_j``.
    """
    if not 1 <= j <= v.n:
        raise ValueError("slot index out of range")
    m = v.matrix
    w = m - m[j - 1]
    w[j - 1] = -m[j - 1]
    return VectorFamily(w)


@dataclass(frozen=True)
class TruncationMask:
    """Keep only nodes with ``|v_j . sigma| > eps`` (``j`` is 1-based)."""

    j: int
    eps: float

    def __post_init__(self):
        if not 0 < self.eps < 1:
            raise ValueError("eps must lie in (0, 1)")
        if self.j < 1:
            raise ValueError("slot index is 1-based")


def _check_inputs(fs: Sequence[TestFunction], grid: SphereGrid, v: VectorFamily | None):
    if len(fs) != grid.n:
        raise ValueError(f"expected {grid.n} functions, got {len(fs)}")
    if v is not None and v.n != grid.n:
        raise ValueError("vector family dimension does not match grid")


def _circle_candidates(N: int, vec: np.ndarray, c1: float, c2: float) -> np.ndarray | None:
    """Indices of angle nodes with ``c1 <= vec . sigma <= c2`` (padded).

    Returns ``None`` when the whole circle is a candidate.
    """
    R = math.hypot(vec[0], vec[1])
    lo, hi = c1 / R, c2 / R
    if lo > 1 or hi < -1:
        return np.empty(0, dtype=np.int64)
    a1 = math.acos(min(hi, 1.0))
    a2 = math.acos(max(lo, -1.0))
    phi = math.atan2(vec[1], vec[0])
    scale = N / (2 * math.pi)
    pieces = []
    total = 0
    for a, b in ((phi + a1, phi + a2), (phi - a2, phi - a1)):
        k0 = math.floor(a * scale) - _PAD
        k1 = math.ceil(b * scale) + _PAD
        total += k1 - k0 + 1
        if total >= N:
            return None
        pieces.append(np.arange(k0, k1 + 1, dtype=np.int64) % N)
    return np.unique(np.concatenate(pieces))


def _circle_index_sets(fs, x: float, v: np.ndarray, N: int) -> Iterator[np.ndarray] | None:
    best = None
    for j, f in enumerate(fs):
        lo, hi = f.bounds()
        if not (math.isfinite(lo) and math.isfinite(hi)):
            continue
        if lo == hi:
            return iter(())
        idx = _circle_candidates(N, v[j], x - hi, x - lo)
        if idx is not None and (best is None or len(idx) < len(best)):
            best = idx
            if len(best) == 0:
                return iter(())
    if best is None:
        return None
    return iter([best[i:i + CHUNK] for i in range(0, len(best), CHUNK)])


def _node_chunks(fs, x: float, grid: SphereGrid, v: np.ndarray):
    """Yield ``(nodes, weights)`` blocks covering every node that can contribute."""
    if grid.is_circle:
        N = grid.resolution
        w = 1.0 / N
        sets = _circle_index_sets(fs, x, v, N)
        if sets is None:
            sets = (np.arange(i, min(i + CHUNK, N), dtype=np.int64) for i in range(0, N, CHUNK))
        for k in sets:
            yield _circle_nodes(k, N), None, w
        return
    nodes, weights = grid.nodes, grid.weights
    for i in range(0, len(weights), CHUNK):
        yield nodes[i:i + CHUNK], weights[i:i + CHUNK], None


def _accumulate(fs, x: float, grid: SphereGrid, v: VectorFamily | None,
                mask: TruncationMask | None) -> float:
    mat = np.eye(grid.n) if v is None else v.matrix
    standard = v is None or v.is_standard
    total = 0.0
    for nodes, weights, w in _node_chunks(fs, x, grid, mat):
        proj = nodes if standard else nodes @ mat.T
        prod = np.ones(len(nodes))
        for j, f in enumerate(fs):
            vals = np.asarray(f(x - proj[:, j]), dtype=float)
            # exact hits on a singular center are a null set: skip them
            vals[np.isinf(vals)] = 0.0
            prod *= vals
        if mask is not None:
            if mask.j > grid.n:
                raise ValueError("truncation slot out of range")
            prod[np.abs(proj[:, mask.j - 1]) <= mask.eps] = 0.0
        if weights is None:
            total += float(np.sum(prod)) * w
        else:
            total += float(np.dot(prod, weights))
    return total


def eval_T(fs: Sequence[TestFunction], x: float, grid: SphereGrid) -> float:
    """``T(f_1, ..., f_n)(x)`` by quadrature on ``grid``."""
    _check_inputs(fs, grid, None)
    return _accumulate(fs, float(x), grid, None, None)


def eval_T_v(fs: Sequence[TestFunction], x: float, grid: SphereGrid, v: VectorFamily) -> float:
    """``T_v(f_1, ..., f_n)(x)``; equals :func:`eval_T` for the standard basis."""
    _check_inputs(fs, grid, v)
    return _accumulate(fs, float(x), grid, v, None)


def eval_U(fs: Sequence[TestFunction], x: float, grid: SphereGrid, v: VectorFamily,
           mask: TruncationMask) -> float:
    """``T_v`` restricted to ``{|v_j . sigma| > eps}``."""
    _check_inputs(fs, grid, v)
    return _accumulate(fs, float(x), grid, v, mask)


@dataclass(frozen=True)
class XGrid:
    """Union of uniform windows ``[lo, hi)`` with per-window step (left endpoints)."""

    windows: tuple[tuple[float, float, float], ...]

    def __post_init__(self):
        clean = []
        for lo, hi, step in self.windows:
            lo, hi, step = float(lo), float(hi), float(step)
            if not (hi > lo and step > 0):
                raise ValueError("each window needs lo < hi and step > 0")
            clean.append((lo, hi, step))
        if not clean:
            raise ValueError("x-grid needs at least one window")
        clean.sort()
        for (_, h0, _), (l1, _, _) in zip(clean, clean[1:]):
            if l1 < h0:
                raise ValueError("x-grid windows overlap")
        object.__setattr__(self, "windows", tuple(clean))

    @classmethod
    def uniform(cls, lo: float, hi: float, step: float) -> "XGrid":
        return cls(((lo, hi, step),))

    @property
    def extent(self) -> tuple[float, float]:
        return self.windows[0][0], self.windows[-1][1]

    def points(self) -> tuple[np.ndarray, np.ndarray]:
        """Sample points and their cell widths."""
        xs, ds = [], []
        for lo, hi, step in self.windows:
            m = max(1, int(math.ceil((hi - lo) / step - 1e-9)))
            xs.append(lo + step * np.arange(m))
            ds.append(np.full(m, step))
        return np.concatenate(xs), np.concatenate(ds)

    def to_json(self) -> list:
        return [list(w) for w in self.windows]


def profile(fs: Sequence[TestFunction], xs, grid: SphereGrid, v: VectorFamily | None = None) -> np.ndarray:
    """``T_v(f)(x)`` for each ``x`` in ``xs``."""
    _check_inputs(fs, grid, v)
    return np.array([_accumulate(fs, float(x), grid, v, None) for x in np.asarray(xs, dtype=float)])


def support_windows(fs: Sequence[TestFunction], v: VectorFamily | None = None,
                    cells: int = 1 << 16) -> list[tuple[float, float]]:
    """Closed intervals that together contain the support of ``T_v(f)``.

    Scans the hull ``cap_j [lo_j - |v_j|, hi_j + |v_j|]`` in small cells. For
    the standard basis a cell survives only if the box of admissible
    ``sigma`` meets the unit sphere; other families keep the whole hull.
    """
    n = len(fs)
    mat = np.eye(n) if v is None else v.matrix
    bounds = np.array([f.bounds() for f in fs], dtype=float)
    if np.any(bounds[:, 0] == bounds[:, 1]):
        return []
    radii = np.linalg.norm(mat, axis=1)
    lo = np.max(bounds[:, 0] - radii)
    hi = np.min(bounds[:, 1] + radii)
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise ValueError("T has unbounded support for these inputs")
    if lo >= hi:
        return []
    if v is not None and not v.is_standard:
        return [(lo, hi)]
    widths = bounds[:, 1] - bounds[:, 0]
    delta = min((hi - lo) / cells, float(np.min(widths)) / 8)
    m = int(math.ceil((hi - lo) / delta))
    x0 = lo + delta * np.arange(m)
    x1 = x0 + delta
    # sigma_j in [x0 - hi_j, x1 - lo_j]
    a = x0[:, None] - bounds[None, :, 1]
    b = x1[:, None] - bounds[None, :, 0]
    nearest = np.clip(0.0, a, b)
    min_norm = np.sqrt(np.sum(nearest**2, axis=1))
    max_norm = np.sqrt(np.sum(np.maximum(np.abs(a), np.abs(b)) ** 2, axis=1))
    keep = (min_norm <= 1 + 1e-12) & (max_norm >= 1 - 1e-12)
    out = []
    i = 0
    while i < m:
        if keep[i]:
            j = i
            while j + 1 < m and keep[j + 1]:
                j += 1
            out.append((x0[i] - delta, x1[j] + delta))
            i = j + 1
        else:
            i += 1
    merged = []
    for w in out:
        if merged and w[0] <= merged[-1][1]:
            merged[-1] = (merged[-1][0], max(merged[-1][1], w[1]))
        else:
            merged.append(w)
    return merged


def auto_xgrid(fs: Sequence[TestFunction], v: VectorFamily | None = None,
               points_per_window: int = 256) -> XGrid:
    """x-grid over :func:`support_windows` with ``points_per_window`` samples each."""
    wins = support_windows(fs, v)
    if not wins:
        raise ValueError("T vanishes identically for these inputs")
    return XGrid(tuple((lo, hi, (hi - lo) / points_per_window) for lo, hi in wins))


def discrete_lr_norm(values: np.ndarray, widths: np.ndarray, r: float) -> float:
    """Left-endpoint Riemann ``L^r`` norm; ``r = inf`` takes the max."""
    values = np.abs(np.asarray(values, dtype=float))
    if math.isinf(r):
        return float(values.max()) if len(values) else 0.0
    return float(np.sum(widths * values**r) ** (1.0 / r))


def pairing(fs: Sequence[TestFunction], h: TestFunction, grid: SphereGrid, xgrid: XGrid,
            v: VectorFamily | None = None) -> float:
    """``sum_m dx_m T_v(f)(x_m) h(x_m)``.

    All nonzero inputs must sit inside the x-window shrunk by 2 on each side.
    """
    lo, hi = xgrid.extent
    for f in list(fs) + [h]:
        flo, fhi = f.bounds()
        if flo == fhi:
            continue
        if flo < lo + 2 or fhi > hi - 2:
            raise ValueError(f"support of {f!r} escapes the x-window [{lo}, {hi})")
    if h.bounds()[0] == h.bounds()[1]:
        return 0.0
    xs, ds = xgrid.points()
    hv = np.asarray(h(xs), dtype=float)
    keep = hv != 0
    vals = profile(fs, xs[keep], grid, v)
    return float(np.sum(ds[keep] * vals * hv[keep]))


def norm_ratio(fs: Sequence[TestFunction], point: ExponentPoint, grid: SphereGrid,
               xgrid: XGrid) -> float:
    """``||T(f)||_{L^r(xgrid)} / prod_j ||f_j||_{p_j}`` at the exponent point."""
    if point.n != len(fs):
        raise ValueError("point dimension does not match the number of functions")
    denom = 1.0
    for f, xj in zip(fs, point.x):
        p = math.inf if xj == 0 else 1 / float(xj)
        nv = lp_norm(f, p)
        denom *= nv.value
    if denom == 0 or not math.isfinite(denom):
        raise ValueError(f"product of input norms is {denom}")
    xs, ds = xgrid.points()
    vals = profile(fs, xs, grid)
    r = math.inf if point.xr == 0 else 1 / float(point.xr)
    return discrete_lr_norm(vals, ds, r) / denom


def sphere_fourier(n: int, xi, grid: SphereGrid) -> complex:
    """``int exp(-2 pi i xi . sigma) dsigma`` by quadrature.

    Emits :class:`ResolutionWarning` when ``|xi| > resolution / 8``.
    """
    xi = np.asarray(xi, dtype=float)
    if grid.n != n or xi.shape != (n,):
        raise ValueError("frequency and grid dimension must match n")
    if np.linalg.norm(xi) > grid.resolution / 8:
        warnings.warn(
            f"|xi| = {np.linalg.norm(xi):.6g} exceeds resolution/8 = {grid.resolution / 8:g}",
            ResolutionWarning,
            stacklevel=2,
        )
    if not np.any(xi):
        return complex(1.0)
    total = 0j
    if grid.is_circle:
        N = grid.resolution
        for i in range(0, N, CHUNK):
            nodes = _circle_nodes(np.arange(i, min(i + CHUNK, N)), N)
            total += np.sum(np.exp(-2j * np.pi * (nodes @ xi)))
        return complex(total / N)
    nodes, weights = grid.nodes, grid.weights
    for i in range(0, len(weights), CHUNK):
        total += np.dot(weights[i:i + CHUNK], np.exp(-2j * np.pi * (nodes[i:i + CHUNK] @ xi)))
    return complex(total)
