"""Exact sparse multivariate polynomial and rational-function algebra.

A polynomial is stored as a dict mapping exponent tuples to Fraction
coefficients; zero coefficients are never stored, so structural equality of
the term maps is exact polynomial equality.  All symbolic work (arithmetic,
differentiation, line composition, identically-zero tests) happens over the
rationals; floats appear only in evaluation.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Mapping, Sequence

# Exponent tuple: entry i is the power of variable x_i.
Exponent = tuple[int, ...]

# Evaluation treats |denominator| below this as a domain violation; the
# optimizer's stopping rules keep iterates off the singular set itself.
DENOM_FLOOR = 1e-300


class DimensionError(ValueError):
    """Operands disagree on the ambient variable count."""


class DomainViolation(ValueError):
    """Rational-function evaluation at a point where the denominator vanishes."""

    def __init__(self, point: Sequence[float], denom_value: float):
        self.point = tuple(point)
        self.denom_value = denom_value
        super().__init__(
            f"denominator value {denom_value!r} below floor at point {self.point}"
        )


def _as_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, Rational)):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value)
    raise TypeError(f"cannot interpret {value!r} as an exact rational")


class Polynomial:
    """Sparse multivariate polynomial with exact rational coefficients."""

    __slots__ = ("n_vars", "terms", "_compiled")

    def __init__(self, n_vars: int, terms: Mapping[Exponent, Fraction] | None = None):
        if n_vars < 0:
            raise ValueError("n_vars must be non-negative")
        self.n_vars = n_vars
        canonical: dict[Exponent, Fraction] = {}
        if terms:
            for exps, coeff in terms.items():
                exps = tuple(int(e) for e in exps)
                if len(exps) != n_vars:
                    raise DimensionError(
                        f"exponent tuple {exps} has length {len(exps)}, expected {n_vars}"
                    )
                if any(e < 0 for e in exps):
                    raise ValueError(f"negative exponent in {exps}")
                coeff = _as_fraction(coeff)
                if coeff != 0:
                    canonical[exps] = coeff
        self.terms = canonical
        self._compiled: list[tuple[float, tuple[tuple[int, int], ...]]] | None = None

    # -- constructors ------------------------------------------------------

    @classmethod
    def zero(cls, n_vars: int) -> "Polynomial":
        return cls(n_vars, {})

    @classmethod
    def constant(cls, n_vars: int, value) -> "Polynomial":
        return cls(n_vars, {(0,) * n_vars: _as_fraction(value)})

    @classmethod
    def variable(cls, n_vars: int, index: int) -> "Polynomial":
        if not 0 <= index < n_vars:
            raise IndexError(f"variable index {index} out of range for {n_vars} vars")
        exps = [0] * n_vars
        exps[index] = 1
        return cls(n_vars, {tuple(exps): Fraction(1)})

    # -- queries -----------------------------------------------------------

    def is_zero(self) -> bool:
        """Exact identically-zero test (canonical term map is empty)."""
        return not self.terms

    def degree(self) -> int:
        """Total degree; the zero polynomial reports degree 0."""
        if not self.terms:
            return 0
        return max(sum(exps) for exps in self.terms)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self.n_vars == other.n_vars and self.terms == other.terms

    def __hash__(self):
        return hash((self.n_vars, frozenset(self.terms.items())))

    def __repr__(self) -> str:
        if not self.terms:
            return f"Polynomial({self.n_vars}, 0)"
        parts = []
        for exps in sorted(self.terms):
            coeff = self.terms[exps]
            mono = "*".join(
                f"x{i}" if e == 1 else f"x{i}^{e}"
                for i, e in enumerate(exps)
                if e
            )
            parts.append(f"{coeff}*{mono}" if mono else str(coeff))
        return f"Polynomial({self.n_vars}, {' + '.join(parts)})"

    # -- ring operations ---------------------------------------------------

    def _check_same_vars(self, other: "Polynomial") -> None:
        if self.n_vars != other.n_vars:
            raise DimensionError(
                f"mixed variable counts {self.n_vars} and {other.n_vars}"
            )

    def __add__(self, other) -> "Polynomial":
        if not isinstance(other, Polynomial):
            other = Polynomial.constant(self.n_vars, other)
        self._check_same_vars(other)
        out = dict(self.terms)
        for exps, coeff in other.terms.items():
            out[exps] = out.get(exps, Fraction(0)) + coeff
        return Polynomial(self.n_vars, out)

    __radd__ = __add__

    def __neg__(self) -> "Polynomial":
        return Polynomial(self.n_vars, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other) -> "Polynomial":
        if not isinstance(other, Polynomial):
            other = Polynomial.constant(self.n_vars, other)
        return self + (-other)

    def __rsub__(self, other) -> "Polynomial":
        return (-self) + other

    def __mul__(self, other) -> "Polynomial":
        if not isinstance(other, Polynomial):
            return self.scale(other)
        self._check_same_vars(other)
        out: dict[Exponent, Fraction] = {}
        for ea, ca in self.terms.items():
            for eb, cb in other.terms.items():
                key = tuple(a + b for a, b in zip(ea, eb))
                out[key] = out.get(key, Fraction(0)) + ca * cb
        return Polynomial(self.n_vars, out)

    __rmul__ = __mul__

    def scale(self, scalar) -> "Polynomial":
        s = _as_fraction(scalar)
        return Polynomial(self.n_vars, {e: c * s for e, c in self.terms.items()})

    def __pow__(self, power: int) -> "Polynomial":
        if power < 0:
            raise ValueError("negative polynomial power")
        result = Polynomial.constant(self.n_vars, 1)
        base = self
        while power:
            if power & 1:
                result = result * base
            base = base * base if power > 1 else base
            power >>= 1
        return result

    # -- calculus ----------------------------------------------------------

    def partial(self, index: int) -> "Polynomial":
        """Exact formal partial derivative with respect to variable index."""
        if not 0 <= index < self.n_vars:
            raise IndexError(f"variable index {index} out of range")
        out: dict[Exponent, Fraction] = {}
        for exps, coeff in self.terms.items():
            e = exps[index]
            if e == 0:
                continue
            new = list(exps)
            new[index] = e - 1
            key = tuple(new)
            out[key] = out.get(key, Fraction(0)) + coeff * e
        return Polynomial(self.n_vars, out)

    def gradient(self) -> list["Polynomial"]:
        return [self.partial(i) for i in range(self.n_vars)]

    # -- evaluation --------------------------------------------------------

    def _check_point(self, x: Sequence) -> None:
        if len(x) != self.n_vars:
            raise DimensionError(
                f"point has {len(x)} coordinates, polynomial has {self.n_vars} vars"
            )

    def _compile(self) -> list[tuple[float, tuple[tuple[int, int], ...]]]:
        """Cache float coefficients and nonzero exponent pairs per term."""
        if self._compiled is None:
            self._compiled = [
                (float(coeff), tuple((i, e) for i, e in enumerate(exps) if e))
                for exps, coeff in self.terms.items()
            ]
        return self._compiled

    def eval_float(self, x: Sequence[float]) -> float:
        """Floating-point evaluation with per-variable power caching."""
        self._check_point(x)
        if not self.terms:
            return 0.0
        powers = _power_table([float(v) for v in x], self.terms)
        return self._eval_with_powers(powers)

    def _eval_with_powers(self, powers: Sequence[Sequence[float]]) -> float:
        """Evaluate from a precomputed per-variable power table."""
        total = 0.0
        for coeff, pairs in self._compile():
            term = coeff
            for i, e in pairs:
                term *= powers[i][e]
            total += term
        return total

    def eval_exact(self, x: Sequence) -> Fraction:
        """Exact evaluation at a point with rational coordinates."""
        self._check_point(x)
        coords = [_as_fraction(v) for v in x]
        total = Fraction(0)
        for exps, coeff in self.terms.items():
            term = coeff
            for i, e in enumerate(exps):
                if e:
                    term *= coords[i] ** e
            total += term
        return total

    # -- line composition --------------------------------------------------

    def compose_line(self, base: Sequence) -> list["Polynomial"]:
        """Maclaurin coefficients of t -> p(base + t*d) as polynomials in d.

        Returns [f_0, ..., f_deg] with p(base + t*d) = sum_n f_n(d) t^n; each
        f_n lives in n_vars direction variables.  The standard 1/n! convention
        is implicit in the binomial expansion.
        """
        self._check_point(base)
        base = [_as_fraction(v) for v in base]
        deg = self.degree()
        out: list[dict[Exponent, Fraction]] = [{} for _ in range(deg + 1)]
        for exps, coeff in self.terms.items():
            # Expand prod_i (base_i + t d_i)^{e_i} term by term.
            per_var: list[list[tuple[int, Fraction]]] = []
            for i, e in enumerate(exps):
                choices = []
                for k in range(e + 1):
                    c = Fraction(math.comb(e, k)) * base[i] ** (e - k)
                    if c != 0:
                        choices.append((k, c))
                per_var.append(choices)
            for combo in itertools.product(*per_var):
                t_pow = sum(k for k, _ in combo)
                c = coeff
                for _, factor in combo:
                    c *= factor
                key = tuple(k for k, _ in combo)
                bucket = out[t_pow]
                bucket[key] = bucket.get(key, Fraction(0)) + c
        return [Polynomial(self.n_vars, bucket) for bucket in out]


def _power_table(
    coords: list[float], terms: Mapping[Exponent, Fraction]
) -> list[list[float]]:
    n = len(coords)
    max_deg = [0] * n
    for exps in terms:
        for i, e in enumerate(exps):
            if e > max_deg[i]:
                max_deg[i] = e
    table = []
    for i in range(n):
        row = [1.0] * (max_deg[i] + 1)
        for e in range(1, max_deg[i] + 1):
            row[e] = row[e - 1] * coords[i]
        table.append(row)
    return table


class RationalFunction:
    """Quotient p/q of two polynomials over the same variables.

    The domain is implicitly the set where the denominator does not vanish;
    evaluation below DENOM_FLOOR raises DomainViolation.
    """

    __slots__ = ("numer", "denom", "_grad_numer", "_grad_denom", "_max_deg")

    def __init__(self, numer: Polynomial, denom: Polynomial):
        if numer.n_vars != denom.n_vars:
            raise DimensionError("numerator and denominator variable counts differ")
        if denom.is_zero():
            raise ValueError("denominator is identically zero")
        self.numer = numer
        self.denom = denom
        self._grad_numer: list[Polynomial] | None = None
        self._grad_denom: list[Polynomial] | None = None
        self._max_deg: list[int] | None = None

    @property
    def n_vars(self) -> int:
        return self.numer.n_vars

    def _gradients(self) -> tuple[list[Polynomial], list[Polynomial]]:
        if self._grad_numer is None:
            self._grad_numer = self.numer.gradient()
            self._grad_denom = self.denom.gradient()
        return self._grad_numer, self._grad_denom

    def eval(self, x: Sequence[float]) -> float:
        if len(x) != self.n_vars:
            raise DimensionError(
                f"point has {len(x)} coordinates, function has {self.n_vars} vars"
            )
        powers = self._power_table_for(x)
        q = self.denom._eval_with_powers(powers)
        if abs(q) < DENOM_FLOOR:
            raise DomainViolation(x, q)
        return self.numer._eval_with_powers(powers) / q

    def eval_exact(self, x: Sequence) -> Fraction:
        q = self.denom.eval_exact(x)
        if q == 0:
            raise DomainViolation([float(v) for v in x], 0.0)
        return self.numer.eval_exact(x) / q

    def _power_table_for(self, x: Sequence[float]) -> list[list[float]]:
        """One power table covering numerator, denominator, and both gradients."""
        if self._max_deg is None:
            gp, gq = self._gradients()
            max_deg = [0] * self.n_vars
            for poly in [self.numer, self.denom, *gp, *gq]:
                for exps in poly.terms:
                    for i, e in enumerate(exps):
                        if e > max_deg[i]:
                            max_deg[i] = e
            self._max_deg = max_deg
        coords = [float(v) for v in x]
        table = []
        for i, top in enumerate(self._max_deg):
            row = [1.0] * (top + 1)
            for e in range(1, top + 1):
                row[e] = row[e - 1] * coords[i]
            table.append(row)
        return table

    def eval_and_grad(self, x: Sequence[float]) -> tuple[float, list[float]]:
        """Value and gradient via grad(p/q) = (q grad p - p grad q) / q^2."""
        if len(x) != self.n_vars:
            raise DimensionError(
                f"point has {len(x)} coordinates, function has {self.n_vars} vars"
            )
        powers = self._power_table_for(x)
        q = self.denom._eval_with_powers(powers)
        if abs(q) < DENOM_FLOOR:
            raise DomainViolation(x, q)
        p = self.numer._eval_with_powers(powers)
        gp, gq = self._gradients()
        grad = [
            (q * gp[i]._eval_with_powers(powers) - p * gq[i]._eval_with_powers(powers))
            / (q * q)
            for i in range(self.n_vars)
        ]
        return p / q, grad

    def __eq__(self, other) -> bool:
        if not isinstance(other, RationalFunction):
            return NotImplemented
        # Cross-multiplied exact identity, not merely structural equality.
        return (self.numer * other.denom - other.numer * self.denom).is_zero()

    def __repr__(self) -> str:
        return f"RationalFunction({self.numer!r}, {self.denom!r})"


def check_finite_point(x: Sequence[float]) -> tuple[float, ...]:
    """Validate that a point has only finite coordinates."""
    coords = tuple(float(v) for v in x)
    if any(math.isnan(v) or math.isinf(v) for v in coords):
        raise ValueError(f"point {coords} has non-finite coordinates")
    return coords
