"""Post-hoc convergence diagnostics on descent traces.

Covers cluster-point detection, direction trails against a line pencil
(empirical certification that approach directions stay inside the safe set),
sequence-level Lojasiewicz certificates, and convergence-rate classification
into linear / sublinear regimes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .descent import DescentTrace
from .singan import LinePencil, SAFE_MARGIN

# Cluster detection: trailing window fraction and diameter tolerance.
CLUSTER_WINDOW_FRACTION = 0.1
CLUSTER_TOL = 1e-8
# Snap detected cluster points to nearby rationals with small denominators.
SNAP_MAX_DENOMINATOR = 16

DEFAULT_THETA_GRID = tuple(round(0.05 * i, 2) for i in range(1, 11))


@dataclass(frozen=True)
class DirectionTrail:
    """Unit approach directions of a trace with their pencil values."""

    center: tuple[float, ...]
    unit_directions: tuple[tuple[float, ...], ...]
    pencil_values: tuple[float, ...]
    min_tail_pencil: float
    skipped: int = 0


@dataclass(frozen=True)
class LojasiewiczCertificate:
    """(theta, c, L) certificate of the sequence-level gradient inequality.

    Feasible means |f_k - L|^(1-theta) <= c * ||grad_k|| held with finite c at
    every checked tail index.
    """

    theta: float
    c: float
    L: float
    tail_start: int
    feasible: bool


@dataclass(frozen=True)
class RateEstimate:
    regime: str  # "linear" | "sublinear" | "inconclusive"
    q: float | None = None
    p: float | None = None
    theta_from_p: float | None = None
    fit_quality: float = 0.0
    detail: str = ""


def _mean_point(points: Sequence[tuple[float, ...]]) -> tuple[float, ...]:
    n = len(points[0])
    return tuple(math.fsum(p[i] for p in points) / len(points) for i in range(n))


def _snap(coords: tuple[float, ...]) -> tuple[float, ...]:
    snapped = []
    for v in coords:
        frac = Fraction(v).limit_denominator(SNAP_MAX_DENOMINATOR)
        snapped.append(float(frac) if abs(float(frac) - v) <= CLUSTER_TOL else v)
    return tuple(snapped)


def find_cluster_point(trace: DescentTrace) -> tuple[float, ...] | None:
    """Detect a settled trailing window and return its (snapped) mean.

    Returns None when the last-window diameter exceeds the tolerance, e.g.
    for divergent traces.
    """
    points = trace.iterates
    if not points:
        raise ValueError("empty trace")
    window = max(2, math.ceil(len(points) * CLUSTER_WINDOW_FRACTION))
    window = min(window, len(points))
    tail = points[-window:]
    center = _mean_point(tail)
    spread = max(
        math.dist(p, center) for p in tail
    )
    if spread > CLUSTER_TOL:
        return None
    return _snap(center)


def direction_trail(
    trace: DescentTrace,
    pencil: LinePencil,
    tail_start: int | None = None,
) -> DirectionTrail:
    """Evaluate the leading pencil polynomial on unit approach directions.

    Iterates equal to the pencil base are skipped and counted.  The minimum
    pencil value over indices >= tail_start (default: second half) is the
    empirical safe-approach margin.
    """
    center = tuple(float(v) for v in pencil.base)
    if len(center) != len(trace.iterates[0]):
        raise ValueError("pencil base dimension does not match trace")
    leading = pencil.leading
    directions = []
    values = []
    skipped = 0
    for point in trace.iterates:
        delta = [a - b for a, b in zip(point, center)]
        norm = math.sqrt(math.fsum(d * d for d in delta))
        if norm == 0.0:
            skipped += 1
            continue
        unit = tuple(d / norm for d in delta)
        directions.append(unit)
        values.append(leading.eval_float(unit))
    if not directions:
        raise ValueError("every iterate coincides with the pencil base")
    if tail_start is None:
        tail_start = len(directions) // 2
    tail_start = min(tail_start, len(directions) - 1)
    min_tail = min(values[tail_start:])
    return DirectionTrail(center, tuple(directions), tuple(values), min_tail, skipped)


def trail_certifies_safe_approach(
    trail: DirectionTrail, margin: float = SAFE_MARGIN
) -> bool:
    """Closed-set membership proxy: tail directions keep a positive margin."""
    return trail.min_tail_pencil > margin


def estimate_limit(f_values: Sequence[float]) -> tuple[float, str]:
    """Estimate lim f_k from a monotone tail.

    Fits |f_{k+1} - f_k| against a geometric model on the last 20 decrements;
    when the fit is convincing (R^2 >= 0.99 and contraction ratio < 1) the
    remaining geometric tail is added to the last value, otherwise the last
    value is returned unchanged.
    """
    if len(f_values) < 3:
        return f_values[-1], "last_value"
    diffs = np.diff(np.asarray(f_values[-21:], dtype=float))
    mags = np.abs(diffs)
    if np.any(mags == 0.0) or len(mags) < 4:
        return f_values[-1], "last_value"
    k = np.arange(len(mags), dtype=float)
    logs = np.log(mags)
    slope, intercept = np.polyfit(k, logs, 1)
    fitted = slope * k + intercept
    ss_res = float(np.sum((logs - fitted) ** 2))
    ss_tot = float(np.sum((logs - logs.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 0.0
    rho = math.exp(slope)
    if r2 >= 0.99 and rho < 1.0:
        # Remaining decrements sum to d_last * rho / (1 - rho).
        correction = diffs[-1] * rho / (1.0 - rho)
        return float(f_values[-1] + correction), "geometric_fit"
    return f_values[-1], "last_value"


def _is_monotone(values: Sequence[float]) -> bool:
    increasing = all(b >= a for a, b in zip(values, values[1:]))
    decreasing = all(b <= a for a, b in zip(values, values[1:]))
    return increasing or decreasing


def lojasiewicz_probe(
    trace: DescentTrace,
    tail_start: int,
    theta_grid: Sequence[float] = DEFAULT_THETA_GRID,
    L: float | None = None,
) -> list[LojasiewiczCertificate]:
    """Fit certificate constants c(theta) on a trace tail for each theta.

    A zero gradient paired with a nonzero residual anywhere on the tail makes
    every certificate infeasible (the classic alternating counterexample); in
    that case the non-monotonicity of the tail is not an error, since the
    obstruction itself is the reported diagnosis.  A non-monotone tail with
    positive gradients violates the monotone-images hypothesis and raises.
    """
    tail_f = trace.f_values[tail_start:]
    tail_g = trace.grad_norms[tail_start:]
    if not tail_f:
        raise ValueError("empty tail")
    if L is None:
        L, _ = estimate_limit(trace.f_values)
    obstruction = any(
        g == 0.0 and abs(fv - L) > 0.0 for fv, g in zip(tail_f, tail_g)
    )
    if not obstruction and not _is_monotone(tail_f):
        raise ValueError("f-values are not monotone on the tail")
    certificates = []
    for theta in sorted(theta_grid):
        c = 0.0
        feasible = True
        for fv, g in zip(tail_f, tail_g):
            residual = abs(fv - L)
            if residual == 0.0:
                continue
            if g == 0.0:
                feasible = False
                c = math.inf
                break
            c = max(c, residual ** (1.0 - theta) / g)
        certificates.append(
            LojasiewiczCertificate(theta, c, L, tail_start, feasible and math.isfinite(c))
        )
    return certificates


def verify_certificate(
    trace: DescentTrace, cert: LojasiewiczCertificate
) -> int:
    """Count pointwise violations of a certificate on its tail (0 = sound)."""
    violations = 0
    for fv, g in zip(
        trace.f_values[cert.tail_start:], trace.grad_norms[cert.tail_start:]
    ):
        if abs(fv - cert.L) ** (1.0 - cert.theta) > cert.c * g * (1 + 1e-12):
            violations += 1
    return violations


def _linear_fit(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    slope, intercept = np.polyfit(x, y, 1)
    fitted = slope * x + intercept
    ss_res = float(np.sum((y - fitted) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), r2

MIN_FIT_QUALITY = 0.95


def rate_classify(
    trace: DescentTrace,
    x_star: Sequence[float],
    tail_start: int,
) -> RateEstimate:
    """Classify ||x* - x_k|| decay as geometric or power-law on the tail.

    Fits log r_k against k (linear regime, slope -> q = e^slope) and against
    log k (sublinear regime, slope -> p with theta = p/(1+2p)); the regime
    with the better R^2 wins, and both below the quality floor means
    inconclusive.
    """
    center = tuple(float(v) for v in x_star)
    ks = []
    rs = []
    for k in range(tail_start, len(trace.iterates)):
        r = math.dist(trace.iterates[k], center)
        if r > 0.0:
            ks.append(k)
            rs.append(r)
    if len(rs) < 3:
        return RateEstimate("inconclusive", detail="tail too short")
    if all(b == a for a, b in zip(rs, rs[1:])):
        return RateEstimate("inconclusive", detail="distances constant on tail")
    # Small noise wiggles are tolerated; reject only an aggregate non-decrease.
    if rs[-1] >= rs[0]:
        return RateEstimate("inconclusive", detail="distances not decreasing on tail")
    k_arr = np.asarray(ks, dtype=float)
    log_r = np.log(np.asarray(rs))
    lin_slope, _, lin_r2 = _linear_fit(k_arr, log_r)
    positive = k_arr > 0
    if positive.sum() >= 3:
        sub_slope, _, sub_r2 = _linear_fit(np.log(k_arr[positive]), log_r[positive])
    else:
        sub_slope, sub_r2 = 0.0, -math.inf
    if max(lin_r2, sub_r2) < MIN_FIT_QUALITY:
        return RateEstimate("inconclusive", fit_quality=max(lin_r2, sub_r2),
                            detail="both regressions fit poorly")
    if lin_r2 >= sub_r2:
        return RateEstimate("linear", q=math.exp(lin_slope), fit_quality=lin_r2)
    p = -sub_slope
    return RateEstimate(
        "sublinear", p=p, theta_from_p=p / (1.0 + 2.0 * p), fit_quality=sub_r2
    )
