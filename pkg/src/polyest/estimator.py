"""Logical-rate estimation from a rate database plus a reduced error model.

For distances 3 to 6 the estimate is a trilinear interpolation of database
entries in log10 space over (r0, r1, p2), querying only the requested
distance.  Queries landing exactly on a grid point return the stored value
bit-for-bit; queries outside an axis range are clamped to the nearest grid
line and flagged.  Interpolated results are additionally clamped into the
envelope of the participating corner values, so interpolation can never
overshoot its own inputs through rounding.

Beyond distance 6 the four direct values split by parity into two geometric
sequences: with x = p5/p3 and y = p6/p4,

    odd d:   C * x^((d+1)/2)   where C = p3 / x^2
    even d:  D * y^(d/2)       where D = p4 / y^2

A ratio at or above 1 means the rates do not fall with distance (the model
is at or above threshold) and extrapolation refuses to run.

``solve_distance`` scans upward for the first distance whose X and Z rates
both meet a target, using direct interpolation through 6 and the parity fits
past it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product

from .error_model import GateErrorModel, ReducedRates, reduce
from .ratedb import DISTANCES, RateDatabase, format_value, ladder_neighbors

MAX_SCAN_DISTANCE = 1001


class MissingEntryError(LookupError):
    """A required database grid point is absent."""


class ComputationError(RuntimeError):
    """A well-formed query whose answer is undefined or unreachable."""


class AboveThresholdError(ComputationError):
    """Rates do not decrease with distance; no extrapolation exists."""


class FitRangeError(ComputationError):
    """Extrapolation inputs outside the fit's domain (zero rates)."""


class UndefinedRatioError(ComputationError):
    """p2 is zero while p0 or p1 is not, so r0 and r1 are undefined."""


class ScanLimitError(ComputationError):
    """No distance up to the scan cap reaches the target rate."""


def _axis_corners(value: float, axis: str, warnings: set[str]) -> list[tuple[float, float]]:
    bracket = ladder_neighbors(value, axis)
    if bracket.clamped:
        warnings.add("clamped")
    if bracket.low == bracket.high:
        return [(bracket.low, 1.0)]
    t = (math.log10(value) - math.log10(bracket.low)) / (
        math.log10(bracket.high) - math.log10(bracket.low)
    )
    return [(bracket.low, 1.0 - t), (bracket.high, t)]


def interpolate(
    db: RateDatabase,
    d: int,
    r0: float,
    r1: float,
    p2: float,
    kind: str = "x",
    warnings: set[str] | None = None,
) -> float:
    """Trilinear log-space interpolation of the stored rate of one kind."""
    if d not in DISTANCES:
        raise ValueError(f"interpolation is defined for d in {DISTANCES}, got {d}")
    if kind not in ("x", "z"):
        raise ValueError(f"kind must be 'x' or 'z', got {kind!r}")
    if warnings is None:
        warnings = set()
    axes = [
        _axis_corners(r0, "r0", warnings),
        _axis_corners(r1, "r1", warnings),
        _axis_corners(p2, "p2", warnings),
    ]
    corners: list[tuple[float, float]] = []  # (value, weight)
    for (v0, w0), (v1, w1), (v2, w2) in product(*axes):
        entry = db.get(d, v0, v1, v2)
        if entry is None:
            raise MissingEntryError(
                "missing database entry "
                f"(d={d}, r0={format_value(v0)}, r1={format_value(v1)}, "
                f"p2={format_value(v2)})"
            )
        if entry.low_confidence:
            warnings.add("low_confidence")
        corners.append((entry.p_xl if kind == "x" else entry.p_zl, w0 * w1 * w2))
    if len(corners) == 1:
        return corners[0][0]  # bit-exact at grid points
    used = [(v, w) for v, w in corners if w > 0.0]
    if any(v == 0.0 for v, _ in used):
        return 0.0  # a zero corner pins the geometric mean to zero
    acc = sum(w * math.log10(v) for v, w in used)
    result = 10.0 ** acc
    lo = min(v for v, _ in used)
    hi = max(v for v, _ in used)
    return min(max(result, lo), hi)


@dataclass(frozen=True)
class ExtrapolationFit:
    """Parity-split geometric fit through the four direct distances."""

    direct: tuple[float, float, float, float]  # rates at d = 3, 4, 5, 6
    x: float
    y: float
    coeff_odd: float
    coeff_even: float
    above_threshold: bool


def fit(p3: float, p4: float, p5: float, p6: float) -> ExtrapolationFit:
    """Fit the odd and even geometric decays to the four direct rates."""
    direct = (p3, p4, p5, p6)
    for name, v in zip(("p3", "p4", "p5", "p6"), direct):
        if not isinstance(v, (int, float)) or not math.isfinite(v) or v <= 0.0:
            raise FitRangeError(f"extrapolation requires positive finite {name}, got {v!r}")
    x = p5 / p3
    y = p6 / p4
    return ExtrapolationFit(
        direct=direct,
        x=x,
        y=y,
        coeff_odd=p3 / (x * x),
        coeff_even=p4 / (y * y),
        above_threshold=(x >= 1.0 or y >= 1.0),
    )


def evaluate(fit_result: ExtrapolationFit, d: int) -> float:
    """Rate at distance d: direct through 6, parity extrapolation past it."""
    if not isinstance(d, int) or isinstance(d, bool) or d < 3:
        raise ValueError(f"distance must be an integer >= 3, got {d!r}")
    if d <= 6:
        return fit_result.direct[d - 3]
    if fit_result.above_threshold:
        raise AboveThresholdError(
            "rates do not decrease with distance (ratio >= 1); cannot extrapolate"
        )
    half = (d + 1) // 2
    if d % 2 == 1:
        return fit_result.coeff_odd * fit_result.x ** half
    return fit_result.coeff_even * fit_result.y ** half


@dataclass(frozen=True)
class Estimate:
    """Instantaneous logical rates of both kinds at one distance."""

    d: int
    p_xl: float
    p_zl: float
    warnings: tuple[str, ...]
    rates: ReducedRates
    fit_x: ExtrapolationFit | None
    fit_z: ExtrapolationFit | None


class _KindQuery:
    """Per-kind ratio bookkeeping shared by estimate and solve_distance."""

    def __init__(self, rr: ReducedRates, kind: str):
        self.kind = kind
        p0 = rr.p0x if kind == "x" else rr.p0z
        p1 = rr.p1x if kind == "x" else rr.p1z
        p2 = rr.p2x if kind == "x" else rr.p2z
        if p2 == 0.0:
            if p0 > 0.0 or p1 > 0.0:
                raise UndefinedRatioError(
                    f"p2{kind.upper()} is zero while p0/p1 are not; "
                    "the database ratios r0 and r1 are undefined"
                )
            self.trivial = True
            self.r0 = self.r1 = self.p2 = 0.0
        else:
            self.trivial = False
            self.r0 = p0 / p2
            self.r1 = p1 / p2
            self.p2 = p2
        self._direct: dict[int, float] = {}
        self._fit: ExtrapolationFit | None = None

    def direct(self, db, d: int, warnings: set[str]) -> float:
        if self.trivial:
            return 0.0
        if d not in self._direct:
            self._direct[d] = interpolate(
                db, d, self.r0, self.r1, self.p2, self.kind, warnings
            )
        return self._direct[d]

    def fitted(self, db, warnings: set[str]) -> ExtrapolationFit | None:
        if self.trivial:
            return None
        if self._fit is None:
            self._fit = fit(*(self.direct(db, dd, warnings) for dd in DISTANCES))
        return self._fit

    def at(self, db, d: int, warnings: set[str]) -> float:
        if self.trivial:
            return 0.0
        if d <= 6:
            return self.direct(db, d, warnings)
        f = self.fitted(db, warnings)
        if f.above_threshold:
            raise AboveThresholdError(
                "rates do not decrease with distance (ratio >= 1); cannot extrapolate"
            )
        return evaluate(f, d)


def estimate(
    db: RateDatabase,
    model: GateErrorModel,
    d: int,
    *,
    asymmetry_threshold: float = 2.0,
) -> Estimate:
    """Logical X and Z rates of a detailed error model at one distance."""
    if not isinstance(d, int) or isinstance(d, bool) or d < 3:
        raise ValueError(f"distance must be an integer >= 3, got {d!r}")
    rr = reduce(model, asymmetry_threshold=asymmetry_threshold)
    warnings: set[str] = set()
    if rr.asymmetry_warning:
        warnings.add("asymmetric_cnot")
    queries = {kind: _KindQuery(rr, kind) for kind in ("x", "z")}
    values = {kind: q.at(db, d, warnings) for kind, q in queries.items()}
    return Estimate(
        d=d,
        p_xl=values["x"],
        p_zl=values["z"],
        warnings=tuple(sorted(warnings)),
        rates=rr,
        fit_x=queries["x"]._fit,
        fit_z=queries["z"]._fit,
    )


def solve_distance(
    db: RateDatabase,
    model: GateErrorModel,
    target: float,
    *,
    asymmetry_threshold: float = 2.0,
    max_distance: int = MAX_SCAN_DISTANCE,
) -> Estimate:
    """Smallest distance whose X and Z rates both reach the target.

    Scans d = 3, 4, 5, ... using direct interpolation through 6 and the
    parity extrapolation past it, so a database covering only the distances
    it needs is sufficient for targets met early.
    """
    if not isinstance(target, float) or not 0.0 < target < 1.0:
        raise ValueError(f"target rate must be a float in (0, 1), got {target!r}")
    rr = reduce(model, asymmetry_threshold=asymmetry_threshold)
    warnings: set[str] = set()
    if rr.asymmetry_warning:
        warnings.add("asymmetric_cnot")
    queries = {kind: _KindQuery(rr, kind) for kind in ("x", "z")}
    for d in range(3, max_distance + 1):
        values = {kind: q.at(db, d, warnings) for kind, q in queries.items()}
        if values["x"] <= target and values["z"] <= target:
            return Estimate(
                d=d,
                p_xl=values["x"],
                p_zl=values["z"],
                warnings=tuple(sorted(warnings)),
                rates=rr,
                fit_x=queries["x"]._fit,
                fit_z=queries["z"]._fit,
            )
    raise ScanLimitError(
        f"no distance up to {max_distance} reaches target {target!r}"
    )
