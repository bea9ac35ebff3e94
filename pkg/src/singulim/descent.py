"""Gradient line-search descent on rational objectives with trace capture.

The optimizer is plain steepest descent with Armijo backtracking: a step
alpha is accepted when f(x - alpha*g) <= f(x) - sigma*alpha*||g||^2.  Every
accepted step therefore satisfies the sufficient-decrease condition with the
configured sigma by construction, and traces are strictly f-decreasing until
the stopping rule fires.  Condition checking recomputes the per-step
certificates directly from the recorded trace.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .polyalg import DomainViolation, RationalFunction, check_finite_point

STOP_GRAD_TOL = "grad_tol"
STOP_F_STATIONARY = "f_stationary"
STOP_MAX_ITERS = "max_iters"
STOP_DOMAIN_VIOLATION = "domain_violation"

MAX_BACKTRACKS = 60


@dataclass(frozen=True)
class DescentConfig:
    sigma_armijo: float = 0.1
    backtrack_factor: float = 0.5
    initial_step: float = 1.0
    max_iters: int = 100_000
    grad_tol: float = 1e-12
    f_equal_tol: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.sigma_armijo < 1.0:
            raise ValueError("sigma_armijo must lie in (0, 1)")
        if not 0.0 < self.backtrack_factor < 1.0:
            raise ValueError("backtrack_factor must lie in (0, 1)")
        if self.initial_step <= 0.0:
            raise ValueError("initial_step must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be positive")
        if self.grad_tol < 0.0 or self.f_equal_tol < 0.0:
            raise ValueError("tolerances must be non-negative")


@dataclass(frozen=True)
class DescentTrace:
    """Immutable record of an optimization run.

    step_norms and alphas are one entry shorter than iterates; f_values and
    grad_norms align with iterates.
    """

    iterates: tuple[tuple[float, ...], ...]
    f_values: tuple[float, ...]
    grad_norms: tuple[float, ...]
    step_norms: tuple[float, ...]
    alphas: tuple[float, ...]
    stop_reason: str

    def __len__(self) -> int:
        return len(self.iterates)


@dataclass(frozen=True)
class ConditionReport:
    """Empirical sufficient-decrease and step-length certificates on a tail.

    sigma_hat and kappa_hat are None on traces with no steps in the tail.
    """

    sigma_hat: float | None
    kappa_hat: float | None
    a2_violations: int
    tail_start: int
    degenerate_steps: int = 0


def _norm(v: Sequence[float]) -> float:
    return math.sqrt(math.fsum(x * x for x in v))


def optimize(
    f: RationalFunction, x0: Sequence[float], cfg: DescentConfig | None = None
) -> DescentTrace:
    """Run Armijo-backtracked steepest descent from x0.

    Stops on small gradient, on a step that fails to decrease f (stationarity
    enforcement of the no-cycling rule), on the iteration cap, or on a domain
    violation at the start point.
    """
    if cfg is None:
        cfg = DescentConfig()
    x = check_finite_point(x0)
    try:
        fx, grad = f.eval_and_grad(x)
    except DomainViolation:
        return DescentTrace((x,), (), (), (), (), STOP_DOMAIN_VIOLATION)

    iterates = [x]
    f_values = [fx]
    grad_norms = [_norm(grad)]
    step_norms: list[float] = []
    alphas: list[float] = []
    stop_reason = STOP_MAX_ITERS

    for _ in range(cfg.max_iters):
        gnorm = grad_norms[-1]
        if gnorm <= cfg.grad_tol:
            stop_reason = STOP_GRAD_TOL
            break
        alpha = cfg.initial_step
        accepted = None
        g_sq = gnorm * gnorm
        for _ in range(MAX_BACKTRACKS):
            trial = tuple(xi - alpha * gi for xi, gi in zip(x, grad))
            try:
                f_trial = f.eval(trial)
            except (DomainViolation, OverflowError):
                alpha *= cfg.backtrack_factor
                continue
            if math.isfinite(f_trial) and f_trial <= fx - cfg.sigma_armijo * alpha * g_sq:
                accepted = (trial, f_trial, alpha)
                break
            alpha *= cfg.backtrack_factor
        if accepted is None:
            stop_reason = STOP_F_STATIONARY
            break
        trial, f_trial, alpha = accepted
        if abs(fx - f_trial) <= cfg.f_equal_tol:
            # Zero-progress step: stop rather than record a cycle-capable move.
            stop_reason = STOP_F_STATIONARY
            break
        try:
            f_trial_check, grad_trial = f.eval_and_grad(trial)
        except DomainViolation:
            stop_reason = STOP_F_STATIONARY
            break
        step = _norm([a - b for a, b in zip(trial, x)])
        x, fx, grad = trial, f_trial, grad_trial
        iterates.append(x)
        f_values.append(fx)
        grad_norms.append(_norm(grad))
        step_norms.append(step)
        alphas.append(alpha)
    else:
        stop_reason = STOP_MAX_ITERS

    return DescentTrace(
        tuple(iterates),
        tuple(f_values),
        tuple(grad_norms),
        tuple(step_norms),
        tuple(alphas),
        stop_reason,
    )


def trace_from_points(
    f: RationalFunction,
    points: Iterable[Sequence[float]],
    stop_reason: str = STOP_MAX_ITERS,
) -> DescentTrace:
    """Build a trace from a scripted iterate sequence, recomputing f and grad."""
    iterates = [check_finite_point(p) for p in points]
    if not iterates:
        raise ValueError("empty point sequence")
    f_values = []
    grad_norms = []
    for p in iterates:
        fp, gp = f.eval_and_grad(p)
        f_values.append(fp)
        grad_norms.append(_norm(gp))
    step_norms = [
        _norm([a - b for a, b in zip(iterates[k + 1], iterates[k])])
        for k in range(len(iterates) - 1)
    ]
    alphas = [float("nan")] * len(step_norms)
    return DescentTrace(
        tuple(iterates),
        tuple(f_values),
        tuple(grad_norms),
        tuple(step_norms),
        tuple(alphas),
        stop_reason,
    )


def check_conditions(trace: DescentTrace, tail_start: int) -> ConditionReport:
    """Recompute sufficient-decrease and step-length ratios over a trace tail.

    sigma_hat is the minimum of (f_k - f_{k+1}) / (||grad_k|| * step_k) and
    kappa_hat the minimum of step_k / ||grad_k|| over steps k >= tail_start.
    a2_violations counts zero-progress steps of nonzero length.
    """
    n_steps = len(trace.step_norms)
    if n_steps and tail_start >= n_steps:
        raise ValueError(f"tail_start {tail_start} beyond last step {n_steps - 1}")
    sigma_hat = None
    kappa_hat = None
    a2_violations = 0
    degenerate = 0
    for k in range(max(tail_start, 0), n_steps):
        df = trace.f_values[k] - trace.f_values[k + 1]
        g = trace.grad_norms[k]
        s = trace.step_norms[k]
        if df == 0.0 and s > 0.0:
            a2_violations += 1
        if s == 0.0:
            if g > 0.0:
                degenerate += 1
            continue
        if g > 0.0:
            sigma = df / (g * s)
            kappa = s / g
            sigma_hat = sigma if sigma_hat is None else min(sigma_hat, sigma)
            kappa_hat = kappa if kappa_hat is None else min(kappa_hat, kappa)
    return ConditionReport(sigma_hat, kappa_hat, a2_violations, tail_start, degenerate)


# -- trace persistence -----------------------------------------------------

def write_trace_csv(trace: DescentTrace, path) -> None:
    """Write a trace as CSV with 17-significant-digit decimals.

    Columns: k, x_1..x_n, f, grad_norm, step_norm, alpha.  The trailing step
    fields of the final row are left empty.
    """
    n = len(trace.iterates[0])
    fmt = lambda v: f"{v:.17g}"
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(
            ["k"] + [f"x_{i + 1}" for i in range(n)] + ["f", "grad_norm", "step_norm", "alpha"]
        )
        for k, point in enumerate(trace.iterates):
            row = [str(k)] + [fmt(v) for v in point]
            if k < len(trace.f_values):
                row += [fmt(trace.f_values[k]), fmt(trace.grad_norms[k])]
            else:
                row += ["", ""]
            if k < len(trace.step_norms):
                row += [fmt(trace.step_norms[k]), fmt(trace.alphas[k])]
            else:
                row += ["", ""]
            writer.writerow(row)


def read_trace_csv(path, stop_reason: str = STOP_MAX_ITERS) -> DescentTrace:
    """Re-ingest a trace CSV written by write_trace_csv."""
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if not header or header[0] != "k":
            raise ValueError(f"{path}: not a trace CSV (missing header)")
        n = len(header) - 5
        if n < 1:
            raise ValueError(f"{path}: malformed trace header {header}")
        iterates, f_values, grad_norms, step_norms, alphas = [], [], [], [], []
        for row in reader:
            if len(row) != len(header):
                raise ValueError(f"{path}: row length mismatch: {row}")
            iterates.append(tuple(float(v) for v in row[1:1 + n]))
            if row[1 + n]:
                f_values.append(float(row[1 + n]))
                grad_norms.append(float(row[2 + n]))
            if row[3 + n]:
                step_norms.append(float(row[3 + n]))
                alphas.append(float(row[4 + n]))
    if not iterates:
        raise ValueError(f"{path}: empty trace")
    return DescentTrace(
        tuple(iterates),
        tuple(f_values),
        tuple(grad_norms),
        tuple(step_norms),
        tuple(alphas),
        stop_reason,
    )
