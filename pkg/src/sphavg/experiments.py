"""Scaling laws, logarithmic blow-up probes and Fourier decay runs.

Each runner returns an :class:`ExperimentReport` whose verdict is a pure
function of the measured samples and the tolerance stored in the report.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .functions import Constant, Indicator, PowerLog, TestFunction
from .region import ExponentPoint
from .spherical import (
    SphereGrid,
    VectorFamily,
    auto_xgrid,
    build_grid,
    eval_T,
    eval_T_v,
    norm_ratio,
    sphere_fourier,
)

__all__ = [
    "ResolutionError",
    "ScalingFamily",
    "family_functions",
    "predicted_gap",
    "witness_slope",
    "required_grid",
    "FitResult",
    "fit_loglog",
    "ExperimentReport",
    "run_scaling",
    "BlowupProbe",
    "required_blowup_resolution",
    "run_blowup",
    "run_decay",
]

SQRT_HALF = math.sqrt(0.5)
# nodes per characteristic length of the smallest feature
NODES_PER_FEATURE = 64
BLOWUP_NODES_PER_FEATURE = 128


class ResolutionError(ValueError):
    """The grid cannot resolve the smallest requested scale."""


@dataclass(frozen=True)
class ScalingFamily:
    """Extremal input families: A (large box), B (near pole), C (tangent box)."""

    tag: str
    n: int

    def __post_init__(self):
        if self.tag not in ("A", "B", "C"):
            raise ValueError(f"unknown scaling family {self.tag!r}")
        if self.n < 2:
            raise ValueError("n must be >= 2")

    def to_json(self) -> dict:
        return {"tag": self.tag, "n": self.n}


def family_functions(family: ScalingFamily, scale: float) -> list[TestFunction]:
    """Inputs of the family at scale ``L`` (A) or ``eps`` (B, C)."""
    n = family.n
    s = float(scale)
    if family.tag == "A":
        if s < 2:
            raise ValueError("family A needs L >= 2")
        return [Indicator.of(-s, s) for _ in range(n)]
    if not 0 < s <= 0.125:
        raise ValueError("families B and C need 0 < eps <= 1/8")
    small = Indicator.of(-s, s)
    if family.tag == "B":
        return [small] * (n - 1) + [Indicator.of(1 - 2 * s * s, 1 + 2 * s * s)]
    e2 = s * s
    return [Indicator.of(SQRT_HALF - e2, SQRT_HALF + e2),
            Indicator.of(-SQRT_HALF - e2, -SQRT_HALF + e2)] + [small] * (n - 2)


def predicted_gap(family: ScalingFamily, point: ExponentPoint) -> Fraction:
    """Exact exponent gap; nonnegative iff the matching necessary inequality holds.

    For B and C this is the exponent of ``eps`` in the norm ratio. For A the
    ratio behaves like ``L^(1/r - sum 1/p_j)``; the gap is reported as the
    exponent in ``1/L``, i.e. ``sum 1/p_j - 1/r``, so that the sign
    convention agrees with the other two families.
    """
    if point.n != family.n:
        raise ValueError("point dimension does not match family")
    n, x, xr = family.n, point.x, point.xr
    if family.tag == "A":
        return sum(x, Fraction(0)) - xr
    if family.tag == "B":
        return (n - 1 + 2 * xr) - (sum(x[:-1], Fraction(0)) + 2 * x[-1])
    return (n + xr) - (sum(x[2:], Fraction(0)) + 2 * x[0] + 2 * x[1])


def witness_slope(family: ScalingFamily) -> int:
    """Expected log-log slope of ``T(f)(0)`` in the scale parameter."""
    return {"A": 0, "B": family.n - 1, "C": family.n}[family.tag]


def required_grid(family: ScalingFamily, scale: float) -> dict:
    """Smallest grid parameters that resolve the family at ``scale``.

    Circle grids need ``NODES_PER_FEATURE`` nodes per ``eps^2`` arc (both B
    and C contain an ``eps^2``-wide input). Product grids need the polar
    spacing to resolve ``eps`` (B) or ``eps^2`` (C).
    """
    s = float(scale)
    if family.tag == "A":
        return {"resolution": 4096} if family.n == 2 else {"resolution": 64, "polar_resolution": 64}
    if family.n == 2:
        return {"resolution": _pow2(NODES_PER_FEATURE / (s * s))}
    feature = s if family.tag == "B" else s * s
    return {"resolution": 256, "polar_resolution": int(math.ceil(NODES_PER_FEATURE * math.pi / 2 / feature))}


def _pow2(v: float) -> int:
    return 1 << max(3, math.ceil(math.log2(v)))


def _check_grid(grid: SphereGrid, need: dict):
    if grid.is_circle:
        if grid.resolution < need["resolution"]:
            raise ResolutionError(
                f"resolution {grid.resolution} < required {need['resolution']}"
            )
    elif grid.polar < need.get("polar_resolution", 0):
        raise ResolutionError(
            f"polar resolution {grid.polar} < required {need['polar_resolution']}"
        )


@dataclass(frozen=True)
class FitResult:
    slope: float
    intercept: float
    r_squared: float
    residual_max: float

    def to_json(self) -> dict:
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "r_squared": self.r_squared,
            "residual_max": self.residual_max,
        }


def fit_loglog(xs: Sequence[float], ys: Sequence[float]) -> FitResult:
    """Least-squares line through ``(log x, log y)``."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.shape != ys.shape or xs.ndim != 1 or len(xs) < 3:
        raise ValueError("need two equal-length sequences with at least 3 samples")
    if np.any(xs <= 0) or np.any(ys <= 0) or not np.all(np.isfinite(ys)):
        raise ValueError("log-log fit needs positive finite samples")
    lx, ly = np.log(xs), np.log(ys)
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    ss_res = float(np.sum(resid**2))
    r2 = 1.0 if ss_tot == 0 else max(0.0, 1.0 - ss_res / ss_tot)
    return FitResult(float(slope), float(intercept), r2, float(np.max(np.abs(resid))))


@dataclass
class ExperimentReport:
    """Samples, fit and verdict of one run."""

    kind: str
    config: dict
    columns: tuple[str, ...]
    rows: list[tuple]
    fit: FitResult | None
    predicted: Fraction | float | None
    tolerance: float
    passed: bool
    details: dict = field(default_factory=dict)

    def summary_line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        head = f"{verdict} {self.kind}"
        label = self.config.get("label")
        if label:
            head += f" [{label}]"
        if self.fit is not None and self.predicted is not None:
            return (f"{head}: fitted {self.fit.slope:.6g} vs predicted "
                    f"{_fmt_pred(self.predicted)} (tol {self.tolerance:g})")
        return f"{head}: {self.details.get('summary', '')}".rstrip(": ")

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "config": self.config,
            "columns": list(self.columns),
            "rows": [list(r) for r in self.rows],
            "fit": None if self.fit is None else self.fit.to_json(),
            "predicted": None if self.predicted is None else _fmt_pred(self.predicted),
            "tolerance": self.tolerance,
            "passed": self.passed,
            "details": self.details,
        }


def _fmt_pred(p) -> str:
    return str(p) if isinstance(p, Fraction) else f"{p:.12g}"


def run_scaling(family: ScalingFamily, point: ExponentPoint, scales: Sequence[float],
                grid: SphereGrid | None = None, *, points_per_window: int = 256,
                tolerance: float = 0.1, witness_tolerance: float = 0.1,
                check_witness: bool = True, measure_ratio: bool = True) -> ExperimentReport:
    """Measure the family's norm ratio and witness value across scales.

    Parameters
    ----------
    grid : SphereGrid, optional
        Fixed grid for every scale; it must resolve the smallest scale or a
        :class:`ResolutionError` is raised. When omitted, each scale gets the
        grid from :func:`required_grid`.
    points_per_window : int
        x-samples per support window of ``T(f)``.
    tolerance, witness_tolerance : float
        Allowed deviation of the fitted ratio / witness slopes.

    Notes
    -----
    Ratio slopes are fitted in ``log eps`` for B and C and in ``log(1/L)``
    for A, so the predicted slope is :func:`predicted_gap` in all cases. The
    witness is ``T(f)(0)`` fitted against the scale itself.
    """
    scales = [float(s) for s in scales]
    if len(scales) < 4:
        raise ValueError("run_scaling needs at least 4 scales")
    if family.tag != "A" and sorted(scales, reverse=True) != scales:
        raise ValueError("eps scales must be decreasing")
    smallest = max(scales) if family.tag == "A" else min(scales)
    if grid is not None:
        _check_grid(grid, required_grid(family, smallest))
    gap = predicted_gap(family, point)
    rows, ratios, witness = [], [], []
    for s in scales:
        g = grid if grid is not None else _grid_for(family, s)
        fs = family_functions(family, s)
        ratio = math.nan
        if measure_ratio:
            ratio = norm_ratio(fs, point, g, auto_xgrid(fs, points_per_window=points_per_window))
        w = eval_T(fs, 0.0, g)
        rows.append((s, ratio, w))
        ratios.append(ratio)
        witness.append(w)
    fit_x = [1 / s for s in scales] if family.tag == "A" else scales
    fit = fit_loglog(fit_x, ratios) if measure_ratio else None
    passed = True if fit is None else abs(fit.slope - float(gap)) <= tolerance
    details: dict = {"witness_point": 0.0}
    if check_witness:
        wfit = fit_loglog(scales, witness)
        wpred = witness_slope(family)
        wok = abs(wfit.slope - wpred) <= witness_tolerance
        details.update(witness_fit=wfit.to_json(), witness_predicted=wpred,
                       witness_tolerance=witness_tolerance, witness_passed=wok)
        passed = passed and wok
    config = {
        "family": family.to_json(),
        "point": str(point),
        "scales": scales,
        "grid": None if grid is None else _grid_json(grid),
        "points_per_window": points_per_window,
        "label": f"{family.tag} n={family.n} at ({point})",
    }
    return ExperimentReport("scaling", config, ("scale", "ratio", "witness"), rows,
                            fit, gap, tolerance, passed, details)


def _grid_for(family: ScalingFamily, scale: float) -> SphereGrid:
    need = required_grid(family, scale)
    return build_grid(family.n, need["resolution"], polar_resolution=need.get("polar_resolution"))


def _grid_json(grid: SphereGrid) -> dict:
    return {"n": grid.n, "resolution": grid.resolution, "polar_resolution": grid.polar or None}


# --------------------------------------------------------------------------
# blow-up probes


_TILTED = ((-1.0, 1.0), (0.0, 1.0))


@dataclass(frozen=True)
class BlowupProbe:
    """Fixed singular inputs whose average diverges like ``|log x|^gamma``.

    Every probe pairs a power-log singularity with a tangency of its
    singular level set to the circle at ``x = 0``; the sample points
    ``x_k = 2^(-k)`` approach from the side without crossings.

    ``E``: ``T(1, f)`` with ``f`` singular at ``-1``.
    ``P``: ``T_v(f, 1)`` for ``v = ((-1, 1), (0, 1))`` with ``f`` singular at
    ``-sqrt 2``, the minimum of ``sin - cos``.
    ``G``: ``T_v(f, f)`` for the same ``v`` with ``f`` singular at ``-1``.
    ``BE``: ``T(f_1, f_2)`` with exponents ``1/3 - 2e`` and ``1/3 + e``,
    ``e = (1 - theta)/6``.
    """

    tag: str
    theta: float | None = None
    bounded: bool = False

    def __post_init__(self):
        if self.tag not in ("E", "P", "G", "BE"):
            raise ValueError(f"unknown blow-up probe {self.tag!r}")
        if self.tag == "BE":
            if self.theta is None or not 0 < float(self.theta) < 1:
                raise ValueError("BE probe needs theta strictly inside (0, 1)")
            object.__setattr__(self, "theta", float(self.theta))
        elif self.theta is not None:
            raise ValueError("theta only applies to the BE probe")

    @property
    def gamma(self) -> Fraction:
        return {"E": Fraction(1, 3), "P": Fraction(1, 3), "G": Fraction(1, 5),
                "BE": Fraction(1, 6)}[self.tag]

    @property
    def vectors(self) -> VectorFamily:
        if self.tag in ("P", "G"):
            return VectorFamily(np.array(_TILTED))
        return VectorFamily.standard(2)

    def functions(self) -> list[TestFunction]:
        fs = self._singular_functions()
        if self.bounded:
            # same supports, singularities removed
            fs = [Indicator.of(*f.bounds()) if isinstance(f, PowerLog) else f for f in fs]
        return fs

    def _singular_functions(self) -> list[TestFunction]:
        if self.tag == "E":
            return [Constant(1), PowerLog(-1, Fraction(1, 2), Fraction(2, 3), Fraction(1, 2))]
        if self.tag == "P":
            return [PowerLog(-math.sqrt(2), Fraction(1, 2), Fraction(2, 3), Fraction(9, 10)), Constant(1)]
        if self.tag == "G":
            f = PowerLog(-1, Fraction(1, 3), Fraction(2, 5), Fraction(9, 10))
            return [f, f]
        e = (1 - self.theta) / 6
        return [PowerLog(0, 1 / 3 - 2 * e, Fraction(1, 3), Fraction(9, 10)),
                PowerLog(-1, 1 / 3 + e, Fraction(1, 2), Fraction(9, 10))]

    def to_json(self) -> dict:
        out = {"tag": self.tag, "bounded": self.bounded}
        if self.theta is not None:
            out["theta"] = self.theta
        return out


def required_blowup_resolution(k: int) -> int:
    """Circle resolution resolving the ``sqrt(x)`` tangency scale at ``x = 2^-k``."""
    return _pow2(BLOWUP_NODES_PER_FEATURE * 2 * math.pi * 2.0 ** (k / 2))


def run_blowup(probe: BlowupProbe, ks: Sequence[int], grid: SphereGrid | None = None, *,
               band_factor: float = 2.0, band_reference: int = 3) -> ExperimentReport:
    """Evaluate the probe at ``x_k = 2^(-k)`` and test for ``|log x|^gamma`` growth.

    The verdict requires

    * eventual strict increase: the longest strictly increasing tail
      covers at least half of the samples;
    * band: every ``value / |log x_k|^gamma`` lies within
      ``[c / band_factor, c * band_factor]`` where ``c`` is the geometric
      mean of the first ``band_reference`` ratios;
    * sustained growth: the last increment is at least
      ``(k_first / k_last)^2`` times the first, which holds for
      ``log``-power growth and fails for a bounded sequence converging at a
      geometric rate.
    """
    ks = sorted(int(k) for k in ks)
    if len(ks) < max(4, band_reference):
        raise ValueError("run_blowup needs at least 4 values of k")
    if grid is not None:
        need = required_blowup_resolution(ks[-1])
        if not grid.is_circle or grid.resolution < need:
            raise ResolutionError(f"blow-up at k={ks[-1]} needs a circle grid of resolution >= {need}")
    fs = probe.functions()
    v = probe.vectors
    gamma = float(probe.gamma)
    rows, values, ratios = [], [], []
    for k in ks:
        x = 2.0 ** (-k)
        g = grid if grid is not None else build_grid(2, required_blowup_resolution(k))
        val = eval_T_v(fs, x, g, v)
        ratio = val / abs(math.log(x)) ** gamma
        rows.append((k, x, val, ratio))
        values.append(val)
        ratios.append(ratio)
    values = np.array(values)
    ratios = np.array(ratios)
    tail = 1
    while tail < len(values) and values[-tail - 1] < values[-tail]:
        tail += 1
    increasing = tail >= math.ceil(len(values) / 2)
    center = float(np.exp(np.mean(np.log(ratios[:band_reference])))) if np.all(ratios[:band_reference] > 0) else 0.0
    lo, hi = center / band_factor, center * band_factor
    in_band = bool(center > 0 and np.all((ratios >= lo) & (ratios <= hi)))
    inc = np.diff(values)
    growth_needed = (ks[0] / ks[-1]) ** 2
    sustained = bool(inc[0] > 0 and inc[-1] >= growth_needed * inc[0])
    passed = bool(increasing and in_band and sustained)
    details = {
        "gamma": str(probe.gamma),
        "increasing_tail": int(tail),
        "increasing": bool(increasing),
        "band": [lo, hi],
        "band_center": center,
        "in_band": in_band,
        "increment_ratio": float(inc[-1] / inc[0]) if inc[0] != 0 else None,
        "increment_ratio_needed": growth_needed,
        "sustained_growth": sustained,
        "summary": (f"gamma={probe.gamma} tail={tail}/{len(values)} band=[{lo:.6g},{hi:.6g}] "
                    f"ratios in [{ratios.min():.6g},{ratios.max():.6g}]"),
    }
    config = {
        "probe": probe.to_json(),
        "ks": ks,
        "grid": None if grid is None else _grid_json(grid),
        "band_factor": band_factor,
        "label": probe.tag + (f"({probe.theta:g})" if probe.theta is not None else "")
        + (" bounded" if probe.bounded else ""),
    }
    return ExperimentReport("blowup", config, ("k", "x", "value", "ratio"), rows,
                            None, None, band_factor, passed, details)


# --------------------------------------------------------------------------
# Fourier decay of the surface measure


def run_decay(n: int, xi_max: float, grid: SphereGrid, *, xi_min: float = 10.0,
              samples_per_unit: int = 20, tolerance: float = 0.05) -> ExperimentReport:
    """Fit the decay rate of ``|sigma^(0, ..., 0, xi)|`` over dyadic-block maxima.

    The expected slope is ``-(n - 1)/2``. Raises :class:`ResolutionError`
    when ``xi_max`` exceeds the grid's warning threshold ``resolution/8``.
    """
    if grid.n != n:
        raise ValueError("grid dimension must equal n")
    if not 0 < xi_min < xi_max:
        raise ValueError("need 0 < xi_min < xi_max")
    if xi_max > grid.resolution / 8:
        raise ResolutionError(f"xi_max={xi_max} exceeds resolution/8={grid.resolution / 8:g}")
    if xi_max <= 4 * xi_min:
        raise ValueError(f"xi_max must exceed 4*xi_min={4 * xi_min:g} to give three dyadic blocks")
    count = int(math.ceil((xi_max - xi_min) * samples_per_unit)) + 1
    xis = np.linspace(xi_min, xi_max, count)
    vals = []
    for xi in xis:
        vec = np.zeros(n)
        vec[-1] = xi
        vals.append(sphere_fourier(n, vec, grid))
    absv = np.abs(np.array(vals))
    edges = [xi_min]
    while edges[-1] * 2 < xi_max:
        edges.append(edges[-1] * 2)
    edges.append(xi_max)
    env_x, env_y = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        sel = (xis >= a) & (xis <= b)
        if not np.any(sel):
            continue
        i = int(np.argmax(np.where(sel, absv, -1.0)))
        env_x.append(float(xis[i]))
        env_y.append(float(absv[i]))
    fit = fit_loglog(env_x, env_y)
    predicted = Fraction(-(n - 1), 2)
    passed = abs(fit.slope - float(predicted)) <= tolerance
    rows = [(float(x), float(v.real), float(v.imag), float(abs(v))) for x, v in zip(xis, vals)]
    config = {"n": n, "xi_min": xi_min, "xi_max": xi_max, "grid": _grid_json(grid),
              "samples_per_unit": samples_per_unit, "label": f"n={n}"}
    details = {"envelope": [[x, y] for x, y in zip(env_x, env_y)]}
    return ExperimentReport("decay", config, ("xi", "re", "im", "abs"), rows,
                            fit, predicted, tolerance, passed, details)
