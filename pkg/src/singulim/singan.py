"""Singularity analysis along lines through a candidate cluster point.

Given a bounded rational objective and a point x*, the denominator restricted
to lines t -> x* + t*d expands as sum_n f_n(d) t^n with polynomial
coefficients f_n.  The first index n_min with f_{n_min} not identically zero
defines the safe-direction set {d : f_{n_min}(d) != 0}; along safe directions
the function extends to an analytic series in t whose trailing coefficients
obey a linear recurrence, which in turn yields a conservative lower bound on
the radius of convergence.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .polyalg import Polynomial, RationalFunction, _as_fraction

# Relative margin deciding safe-set membership for floating-point directions.
SAFE_MARGIN = 1e-9

# Default truncation order for Taylor lines.
DEFAULT_N_TERMS = 64


class UnboundedFunctionError(ValueError):
    """Numerator vanishes to lower order than the denominator along lines.

    The directional limit blows up along safe directions, so the function is
    not bounded near the base point and the convergence machinery does not
    apply.
    """

    def __init__(self, base, numer_order: int, n_min: int):
        self.base = tuple(base)
        self.numer_order = numer_order
        self.n_min = n_min
        super().__init__(
            f"numerator vanishes to order {numer_order} < denominator order "
            f"{n_min} at {self.base}; function is unbounded near this point"
        )


class UnsafeDirectionError(ValueError):
    """A direction on which the leading pencil polynomial vanishes."""

    def __init__(self, direction, pencil: Polynomial):
        self.direction = tuple(direction)
        self.pencil = pencil
        super().__init__(
            f"direction {self.direction} lies outside the safe set: "
            f"leading pencil polynomial {pencil!r} vanishes there"
        )


@dataclass(frozen=True)
class LinePencil:
    """Line-restricted Maclaurin coefficient data of a rational function.

    denom_coeffs[k] and numer_coeffs[k] are polynomials in the direction
    variables; denom_coeffs[k] is identically zero for k < n_min and
    denom_coeffs[n_min] is not.
    """

    base: tuple
    denom_coeffs: tuple[Polynomial, ...]
    numer_coeffs: tuple[Polynomial, ...]
    n_min: int

    @property
    def leading(self) -> Polynomial:
        return self.denom_coeffs[self.n_min]


@dataclass(frozen=True)
class DirectionVerdict:
    direction: tuple
    in_safe_set: bool
    pencil_value: float
    limit_value: float | None


@dataclass(frozen=True)
class TaylorLine:
    """Truncated series of t -> f(x* + t*d) along a safe direction."""

    direction: tuple
    coeffs: tuple[float, ...]
    recurrence_order: int
    recurrence_weights: tuple[float, ...]
    radius_lower_bound: float


def analyze_singularity(f: RationalFunction, x_star: Sequence) -> LinePencil:
    """Build the line pencil of f at x* and locate the common vanishing order.

    x_star must have exact rational coordinates so that the identically-zero
    tests deciding n_min are exact decisions.
    """
    base = tuple(_as_fraction(v) for v in x_star)
    if len(base) != f.n_vars:
        raise ValueError(f"point has {len(base)} coordinates, expected {f.n_vars}")
    denom_coeffs = tuple(f.denom.compose_line(base))
    numer_coeffs = tuple(f.numer.compose_line(base))
    n_min = next(
        (k for k, poly in enumerate(denom_coeffs) if not poly.is_zero()), None
    )
    if n_min is None:
        raise ValueError("denominator is identically zero")  # unreachable: ctor forbids
    numer_order = next(
        (k for k, poly in enumerate(numer_coeffs) if not poly.is_zero()),
        len(numer_coeffs),
    )
    if numer_order < n_min:
        raise UnboundedFunctionError(base, numer_order, n_min)
    return LinePencil(base, denom_coeffs, numer_coeffs, n_min)


def direction_verdict(
    pencil: LinePencil, d: Sequence, margin: float = SAFE_MARGIN
) -> DirectionVerdict:
    """Decide safe-set membership of a direction and its directional limit.

    Exact rational directions are decided exactly; float directions use a
    relative margin |f_{n_min}(d)| > margin * ||d||^deg.
    """
    direction = tuple(d)
    if all(v == 0 for v in direction):
        raise ValueError("direction must be nonzero")
    if len(direction) != len(pencil.base):
        raise ValueError("direction dimension mismatch")
    leading = pencil.leading
    exact = all(isinstance(v, (int, Fraction)) for v in direction)
    if exact:
        value = leading.eval_exact(direction)
        in_safe = value != 0
        pencil_value = float(value)
    else:
        pencil_value = leading.eval_float(direction)
        norm = max(abs(float(v)) for v in direction)
        in_safe = abs(pencil_value) > margin * norm ** leading.degree()
    limit = None
    if in_safe:
        numer_lead = pencil.numer_coeffs[pencil.n_min]
        if exact:
            limit = float(numer_lead.eval_exact(direction) / value)
        else:
            limit = numer_lead.eval_float(direction) / pencil_value
    return DirectionVerdict(direction, in_safe, pencil_value, limit)


def series_divide(numer: Sequence, denom: Sequence, n_terms: int) -> list:
    """Leading coefficients of the power-series quotient numer/denom.

    Long division: c_n = (a_n - sum_{j>=1} g_j c_{n-j}) / g_0.  Works over
    Fractions or floats; denom[0] must be nonzero.
    """
    if not denom or denom[0] == 0:
        raise ZeroDivisionError("leading denominator coefficient is zero")
    g0 = denom[0]
    coeffs = []
    for n in range(n_terms):
        s = numer[n] if n < len(numer) else 0
        for j in range(1, min(n, len(denom) - 1) + 1):
            s -= denom[j] * coeffs[n - j]
        coeffs.append(s / g0)
    return coeffs


def recurrence_weights(denom: Sequence) -> list:
    """Weights w_j = -g_j/g_0 so that c_n = sum_j w_j c_{n-j} for trailing n."""
    if not denom or denom[0] == 0:
        raise ZeroDivisionError("leading denominator coefficient is zero")
    return [-g / denom[0] for g in denom[1:]]


def extend_by_recurrence(seed: Sequence, weights: Sequence, n_terms: int) -> list:
    """Extend a coefficient sequence to n_terms entries using the recurrence.

    seed must contain at least len(weights) initial coefficients.
    """
    order = len(weights)
    if len(seed) < order:
        raise ValueError("seed shorter than recurrence order")
    coeffs = list(seed)
    while len(coeffs) < n_terms:
        n = len(coeffs)
        coeffs.append(sum(weights[j] * coeffs[n - 1 - j] for j in range(order)))
    return coeffs


def companion_radius_bound(weights: Sequence[float]) -> float:
    """Convergence-radius lower bound k / max(1, ||C||_inf) with k = 1/2.

    C is the companion matrix of the recurrence: its first row holds the
    weights, the remaining rows a shifted identity, so the infinity norm is
    max(sum |w_j|, 1) for a nonempty recurrence.
    """
    if not weights:
        # Terminating series (polynomial quotient): any |t| < 1/2 is covered.
        return 0.5
    norm = max(sum(abs(float(w)) for w in weights), 1.0)
    return 0.5 / max(1.0, norm)


def taylor_line(
    f: RationalFunction,
    x_star: Sequence,
    d: Sequence,
    n_terms: int = DEFAULT_N_TERMS,
    pencil: LinePencil | None = None,
) -> TaylorLine:
    """Series data of t -> f(x* + t*d) along a safe direction d.

    Both line-restricted numerator and denominator are divided by t^{n_min}
    before the power-series division; the recurrence weights come from the
    shifted denominator.
    """
    if pencil is None:
        pencil = analyze_singularity(f, x_star)
    direction = tuple(d)
    verdict = direction_verdict(pencil, direction)
    if not verdict.in_safe_set:
        raise UnsafeDirectionError(direction, pencil.leading)
    exact = all(isinstance(v, (int, Fraction)) for v in direction)

    def values(polys):
        if exact:
            return [p.eval_exact(direction) for p in polys]
        return [p.eval_float(direction) for p in polys]

    numer = values(pencil.numer_coeffs)[pencil.n_min:]
    denom = values(pencil.denom_coeffs)[pencil.n_min:]
    while denom and denom[-1] == 0:
        denom.pop()
    weights = recurrence_weights(denom)
    coeffs = series_divide(numer, denom, n_terms)
    return TaylorLine(
        direction=tuple(float(v) for v in direction),
        coeffs=tuple(float(c) for c in coeffs),
        recurrence_order=len(weights),
        recurrence_weights=tuple(float(w) for w in weights),
        radius_lower_bound=companion_radius_bound(weights),
    )


def radius_lower_bound(line: TaylorLine) -> float:
    """Guaranteed-convergence radius bound of a Taylor line."""
    return companion_radius_bound(line.recurrence_weights)


def series_eval(coeffs: Sequence[float], t: float) -> float:
    """Evaluate a truncated power series by Horner's rule."""
    total = 0.0
    for c in reversed(list(coeffs)):
        total = total * t + float(c)
    return total
