"""Problem-file ingestion and the bundled example objectives.

A .problem file is JSON: n_vars, numerator and denominator as term lists
({"coeff": "num/den", "exps": [...]}), plus optional metadata.  Serialization
is canonical (terms sorted by exponent tuple, fixed indentation) so that a
write -> read -> write round trip is byte-identical.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path

from .polyalg import Polynomial, RationalFunction

BUNDLED_NAMES = ("fig1", "multi3", "counterex")


class ProblemFormatError(ValueError):
    """Malformed problem file; the message names the offending field."""


@dataclass(frozen=True)
class ProblemFile:
    n_vars: int
    numer: Polynomial
    denom: Polynomial
    name: str = ""
    singular_points: tuple[tuple[Fraction, ...], ...] = ()

    def rational(self) -> RationalFunction:
        return RationalFunction(self.numer, self.denom)


def poly_to_terms(poly: Polynomial) -> list[dict]:
    return [
        {"coeff": str(poly.terms[exps]), "exps": list(exps)}
        for exps in sorted(poly.terms)
    ]


def poly_from_terms(terms, n_vars: int, field_name: str) -> Polynomial:
    if not isinstance(terms, list):
        raise ProblemFormatError(f"field {field_name!r} must be a list of terms")
    acc: dict[tuple[int, ...], Fraction] = {}
    for i, term in enumerate(terms):
        try:
            coeff = Fraction(term["coeff"])
            exps = tuple(int(e) for e in term["exps"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ProblemFormatError(f"{field_name}[{i}]: {exc}") from exc
        if len(exps) != n_vars:
            raise ProblemFormatError(
                f"{field_name}[{i}]: exponent tuple {list(exps)} does not have "
                f"n_vars = {n_vars} entries"
            )
        acc[exps] = acc.get(exps, Fraction(0)) + coeff
    return Polynomial(n_vars, acc)


def problem_to_json(problem: ProblemFile) -> str:
    doc = {
        "n_vars": problem.n_vars,
        "name": problem.name,
        "numer": poly_to_terms(problem.numer),
        "denom": poly_to_terms(problem.denom),
        "singular_points": [
            [str(c) for c in point] for point in problem.singular_points
        ],
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def problem_from_json(text: str, source: str = "<string>") -> ProblemFile:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProblemFormatError(f"{source}: invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ProblemFormatError(f"{source}: top level must be an object")
    try:
        n_vars = int(doc["n_vars"])
    except (KeyError, TypeError, ValueError):
        raise ProblemFormatError(f"{source}: missing or invalid field 'n_vars'")
    if n_vars < 1:
        raise ProblemFormatError(f"{source}: n_vars must be positive")
    for key in ("numer", "denom"):
        if key not in doc:
            raise ProblemFormatError(f"{source}: missing field {key!r}")
    numer = poly_from_terms(doc["numer"], n_vars, "numer")
    denom = poly_from_terms(doc["denom"], n_vars, "denom")
    if denom.is_zero():
        raise ProblemFormatError(f"{source}: field 'denom' is identically zero")
    points = []
    for j, raw in enumerate(doc.get("singular_points", [])):
        try:
            point = tuple(Fraction(c) for c in raw)
        except (TypeError, ValueError) as exc:
            raise ProblemFormatError(f"{source}: singular_points[{j}]: {exc}")
        if len(point) != n_vars:
            raise ProblemFormatError(
                f"{source}: singular_points[{j}] has {len(point)} coordinates"
            )
        points.append(point)
    return ProblemFile(
        n_vars, numer, denom, str(doc.get("name", "")), tuple(points)
    )


def load_problem(path) -> ProblemFile:
    path = Path(path)
    return problem_from_json(path.read_text(), source=str(path))


def save_problem(problem: ProblemFile, path) -> None:
    Path(path).write_text(problem_to_json(problem))


# -- bundled examples ------------------------------------------------------

def _fig1_rational() -> tuple[Polynomial, Polynomial]:
    """xy over (x^2 + y^2)(1 + x^2 + y^2), the pinch-point objective."""
    x = Polynomial.variable(2, 0)
    y = Polynomial.variable(2, 1)
    r2 = x * x + y * y
    return x * y, r2 * (1 + r2)


def _shifted(poly: Polynomial, center: tuple[int, int]) -> Polynomial:
    """Substitute x -> x - center exactly via line composition at t = 1."""
    coeffs = poly.compose_line([-center[0], -center[1]])
    total = Polynomial.zero(poly.n_vars)
    for c in coeffs:
        total = total + c
    return total


def build_bundled(name: str) -> ProblemFile:
    """Construct a bundled problem from scratch (also used to ship the data)."""
    if name == "fig1":
        numer, denom = _fig1_rational()
        return ProblemFile(
            2, numer, denom, name="fig1",
            singular_points=((Fraction(0), Fraction(0)),),
        )
    if name == "counterex":
        x = Polynomial.variable(2, 0)
        y = Polynomial.variable(2, 1)
        return ProblemFile(
            2, y * y - x * x, x * x + y * y, name="counterex",
            singular_points=((Fraction(0), Fraction(0)),),
        )
    if name == "multi3":
        centers = ((0, 0), (3, 0), (0, 3))
        numer0, denom0 = _fig1_rational()
        numers = [_shifted(numer0, c) for c in centers]
        denoms = [_shifted(denom0, c) for c in centers]
        # Sum of the three shifted copies over the common denominator.
        denom = denoms[0] * denoms[1] * denoms[2]
        numer = Polynomial.zero(2)
        for i in range(3):
            term = numers[i]
            for j in range(3):
                if j != i:
                    term = term * denoms[j]
            numer = numer + term
        return ProblemFile(
            2, numer, denom, name="multi3",
            singular_points=tuple(
                (Fraction(u), Fraction(v)) for u, v in centers
            ),
        )
    raise KeyError(f"unknown bundled problem {name!r}")


def bundled_examples() -> dict[str, ProblemFile]:
    """Load the shipped example problems."""
    return {name: load_bundled(name) for name in BUNDLED_NAMES}


def load_bundled(name: str) -> ProblemFile:
    if name not in BUNDLED_NAMES:
        raise KeyError(f"unknown bundled problem {name!r}")
    data = resources.files(__package__).joinpath(f"data/{name}.problem")
    return problem_from_json(data.read_text(), source=f"bundled:{name}")


def write_bundled(directory) -> list[Path]:
    """Write the bundled .problem files into a directory."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for name in BUNDLED_NAMES:
        path = directory / f"{name}.problem"
        save_problem(load_bundled(name), path)
        written.append(path)
    return written
