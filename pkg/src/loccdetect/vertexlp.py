"""Exact linear programs in a handful of variables, by vertex enumeration.

All arithmetic is in :class:`fractions.Fraction`, so optima are exact rationals.
Feasible sets are assumed bounded (every problem here lives inside a box).
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import combinations
from typing import Sequence

import numpy as np


def _frac(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


@dataclass(frozen=True)
class Constraint:
    """``coeffs · w  (<= | ==)  bound``."""

    coeffs: tuple[Fraction, ...]
    bound: Fraction
    relation: str = "<="
    name: str = ""

    def __post_init__(self):
        if self.relation not in ("<=", "=="):
            raise ValueError(f"relation must be '<=' or '==', got {self.relation!r}")
        object.__setattr__(self, "coeffs", tuple(_frac(c) for c in self.coeffs))
        object.__setattr__(self, "bound", _frac(self.bound))

    def value(self, w: Sequence[Fraction]) -> Fraction:
        return sum((c * x for c, x in zip(self.coeffs, w)), Fraction(0))

    def satisfied(self, w: Sequence[Fraction]) -> bool:
        v = self.value(w)
        return v == self.bound if self.relation == "==" else v <= self.bound


@dataclass(frozen=True)
class ConstraintSet:
    name: str
    inequalities: tuple[Constraint, ...]

    def __post_init__(self):
        object.__setattr__(self, "inequalities", tuple(self.inequalities))

    def __add__(self, other: "ConstraintSet") -> "ConstraintSet":
        return ConstraintSet(f"{self.name}+{other.name}", self.inequalities + other.inequalities)

    def satisfied(self, w) -> bool:
        return all(c.satisfied(w) for c in self.inequalities)


def box(n: int, lo=0, hi=1) -> ConstraintSet:
    rows = []
    for i in range(n):
        e = [Fraction(0)] * n
        e[i] = Fraction(1)
        rows.append(Constraint(tuple(e), _frac(hi), "<=", f"w{i + 1}<=hi"))
        rows.append(Constraint(tuple(-x for x in e), -_frac(lo), "<=", f"w{i + 1}>=lo"))
    return ConstraintSet("box", tuple(rows))


def _solve(rows: list[tuple[Fraction, ...]], rhs: list[Fraction]) -> tuple[Fraction, ...] | None:
    """Gauss-Jordan over the rationals; None when singular."""
    n = len(rows)
    a = [list(r) + [b] for r, b in zip(rows, rhs)]
    for col in range(n):
        piv = next((r for r in range(col, n) if a[r][col] != 0), None)
        if piv is None:
            return None
        a[col], a[piv] = a[piv], a[col]
        p = a[col][col]
        a[col] = [x / p for x in a[col]]
        for r in range(n):
            if r != col and a[r][col] != 0:
                f = a[r][col]
                a[r] = [x - f * y for x, y in zip(a[r], a[col])]
    return tuple(a[r][n] for r in range(n))


def vertices(constraints: ConstraintSet, n: int) -> list[tuple[Fraction, ...]]:
    """All vertices of the polytope, in lexicographic order."""
    return list(_vertices(constraints, n))


@lru_cache(maxsize=64)
def _vertices(constraints: ConstraintSet, n: int) -> tuple[tuple[Fraction, ...], ...]:
    eqs = [c for c in constraints.inequalities if c.relation == "=="]
    ineqs = [c for c in constraints.inequalities if c.relation == "<="]
    free = n - len(eqs)
    if free < 0:
        raise ValueError("more equalities than variables")
    # Cheap float rank test first; only nonsingular systems go to exact arithmetic.
    found = set()
    for active in combinations(ineqs, free):
        system = eqs + list(active)
        mat = np.array([[float(c) for c in s.coeffs] for s in system])
        if abs(np.linalg.det(mat)) < 1e-12:
            continue
        w = _solve([s.coeffs for s in system], [s.bound for s in system])
        if w is not None and constraints.satisfied(w):
            found.add(w)
    return tuple(sorted(found))


@dataclass(frozen=True)
class LpSolution:
    value: Fraction
    argmax: tuple[Fraction, ...]
    optimal_vertices: tuple[tuple[Fraction, ...], ...]


def maximize(objective: Sequence, constraints: ConstraintSet, n: int) -> LpSolution:
    """Maximize ``objective · w``; ties go to the lexicographically smallest vertex."""
    obj = [_frac(c) for c in objective]
    verts = vertices(constraints, n)
    if not verts:
        raise ValueError(f"constraint set {constraints.name!r} is empty")
    vals = [sum((c * x for c, x in zip(obj, v)), Fraction(0)) for v in verts]
    best = max(vals)
    opt = tuple(v for v, val in zip(verts, vals) if val == best)
    return LpSolution(best, opt[0], opt)
