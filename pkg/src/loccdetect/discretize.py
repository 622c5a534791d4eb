"""Finite, explicitly local realizations of the continuous twirled tests.

A realization is a list of branches.  Each branch fixes one orthonormal
measurement basis per subsystem and a set of accepted outcome tuples; a shot
picks a branch at random, measures every subsystem locally and accepts if the
joint outcome is in the set.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache, reduce
from itertools import product

import numpy as np
from scipy.optimize import brentq

from . import bellspace as bs
from .errors import ReconstructionMismatch, SymbolicMismatch
from .groups import octahedral_group
from .hyptests import build_tu, build_tV
from .qcore import DensityMatrix, Operator, pair_labels

_S = 1 / np.sqrt(2)
STATE_VECTORS = {
    "0": np.array([1, 0], dtype=complex),
    "1": np.array([0, 1], dtype=complex),
    "D": np.array([_S, _S], dtype=complex),
    "X": np.array([_S, -_S], dtype=complex),
    "R": np.array([_S, 1j * _S], dtype=complex),
    "L": np.array([_S, -1j * _S], dtype=complex),
}
BASIS_PAIRS = (("0", "1"), ("D", "X"), ("R", "L"))
STANDARD = np.eye(2, dtype=complex)
DIAGONAL = np.column_stack([STATE_VECTORS["D"], STATE_VECTORS["X"]])


@dataclass(frozen=True)
class SixStateSet:
    kets: tuple[tuple[str, np.ndarray], ...]

    def __post_init__(self):
        vecs = dict(self.kets)
        for x, y in BASIS_PAIRS:
            if abs(np.vdot(vecs[x], vecs[y])) > 1e-12:
                raise ValueError(f"{x} and {y} are not orthogonal")
        for i, (x, _) in enumerate(BASIS_PAIRS):
            for j, (y, _) in enumerate(BASIS_PAIRS):
                if i != j and abs(abs(np.vdot(vecs[x], vecs[y])) ** 2 - 0.5) > 1e-12:
                    raise ValueError("states from different pairs must overlap with weight 1/2")

    def __getitem__(self, name: str) -> np.ndarray:
        return dict(self.kets)[name]


def six_states() -> SixStateSet:
    return SixStateSet(tuple(STATE_VECTORS.items()))


def _equal_outcomes(n_pairs: int) -> frozenset:
    """Outcome tuples where each A agrees with its B."""
    out = []
    for o in product((0, 1), repeat=2 * n_pairs):
        if all(o[2 * k] == o[2 * k + 1] for k in range(n_pairs)):
            out.append(o)
    return frozenset(out)


@dataclass(frozen=True, eq=False)
class Branch:
    """One randomized setting: a local basis per subsystem and accepted outcomes.

    ``bases[k][:, o]`` is the state reported as outcome ``o`` on subsystem ``k``.
    """

    probability: float
    bases: tuple[np.ndarray, ...]
    accepted: frozenset
    label: str = ""

    def __post_init__(self):
        bases = tuple(np.array(b, dtype=complex) for b in self.bases)
        for b in bases:
            if b.shape != (2, 2) or np.max(np.abs(b.conj().T @ b - np.eye(2))) > 1e-12:
                raise ValueError(f"branch {self.label!r}: measurement basis is not orthonormal")
            b.setflags(write=False)
        object.__setattr__(self, "bases", bases)
        for o in self.accepted:
            if len(o) != len(bases):
                raise ValueError("accepted outcomes must name one result per subsystem")

    def joint_basis(self) -> np.ndarray:
        return reduce(np.kron, self.bases)

    def accept_mask(self) -> np.ndarray:
        m = len(self.bases)
        mask = np.zeros(2**m, dtype=bool)
        for o in self.accepted:
            mask[np.ravel_multi_index(o, (2,) * m)] = True
        return mask

    def accept_operator(self) -> np.ndarray:
        u = self.joint_basis()
        return (u * self.accept_mask()) @ u.conj().T

    def outcome_probabilities(self, rho: np.ndarray) -> np.ndarray:
        """Born-rule distribution over joint outcomes (row-major outcome index)."""
        u = self.joint_basis()
        p = np.einsum("ij,ik,kj->j", u.conj(), rho, u).real
        p = np.clip(p, 0, None)
        return p / p.sum()


@dataclass(frozen=True, eq=False)
class FiniteRealization:
    target: str
    n_pairs: int
    branches: tuple[Branch, ...]
    reconstructed_t0: Operator

    def __post_init__(self):
        total = sum(b.probability for b in self.branches)
        if abs(total - 1) > 1e-12:
            raise ValueError(f"branch probabilities sum to {total}")
        for b in self.branches:
            if len(b.bases) != 2 * self.n_pairs:
                raise ValueError("every branch must measure every subsystem")

    @property
    def factors(self):
        return pair_labels(self.n_pairs)

    def acceptance_probability(self, sigma_n: DensityMatrix) -> float:
        return float(sum(b.probability * b.outcome_probabilities(sigma_n.data)[b.accept_mask()].sum()
                         for b in self.branches))


def _realize(target: str, n_pairs: int, branches: list[Branch], expected: Operator,
             tol: float) -> FiniteRealization:
    t0 = sum(b.probability * b.accept_operator() for b in branches)
    rec = Operator(pair_labels(n_pairs), t0)
    err = rec.max_abs_diff(expected)
    if err > tol:
        raise ReconstructionMismatch(f"{target}: reconstruction differs by {err:.3g}")
    return FiniteRealization(target, n_pairs, tuple(branches), rec)


def _conjugate_pair(g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Local change of basis realizing ``U_AB(g)† (·) U_AB(g)`` on both parties."""
    return g.conj().T, g.T


@lru_cache(maxsize=None)
def discretize_tu() -> FiniteRealization:
    acc = _equal_outcomes(1)
    v = STATE_VECTORS
    branches = [
        Branch(1 / 3, (STANDARD, STANDARD), acc, "0/1"),
        Branch(1 / 3, (DIAGONAL, DIAGONAL), acc, "D/X"),
        # A reports R/L while B reports L/R, so "equal outcomes" means R_A L_B or L_A R_B.
        Branch(1 / 3, (np.column_stack([v["R"], v["L"]]), np.column_stack([v["L"], v["R"]])), acc, "R/L"),
    ]
    return _realize("Tu", 1, branches, build_tu(2).t0, 1e-12)


@lru_cache(maxsize=None)
def discretize_tu_octahedral() -> FiniteRealization:
    acc = _equal_outcomes(1)
    branches = []
    for k, g in enumerate(octahedral_group()):
        a, b = _conjugate_pair(g.m)
        branches.append(Branch(1 / 24, (a, b), acc, f"g{k}"))
    return _realize("Tu", 1, branches, build_tu(2).t0, 1e-12)


def build_pi_ij(i: int, j: int) -> Operator:
    """Projector onto ``|i⟩|i⟩|c_j⟩|c_j⟩`` with ``c_0 = D``, ``c_1 = X``."""
    if i not in (0, 1) or j not in (0, 1):
        raise ValueError("i and j must be 0 or 1")
    c = DIAGONAL[:, j]
    e = STANDARD[:, i]
    v = reduce(np.kron, [e, e, c, c])
    return Operator(bs.TWO_PAIRS, np.outer(v, v.conj()))


def pi_sum() -> Operator:
    return Operator(bs.TWO_PAIRS, sum(build_pi_ij(i, j).data for i in (0, 1) for j in (0, 1)))


X_STAR = float(np.arccos(np.sqrt(3 / 5)) / 4)


def h_rotation(x: float) -> np.ndarray:
    """Real rotation sending ``cos x|0⟩ + sin x|1⟩`` to ``|0⟩``."""
    c, s = np.cos(x), np.sin(x)
    return np.array([[c, s], [-s, c]], dtype=complex)


@lru_cache(maxsize=None)
def discretize_tv() -> FiniteRealization:
    """48 branches: octahedral element composed with h*, with or without a sample swap."""
    acc = _equal_outcomes(2)
    h = h_rotation(X_STAR)
    branches = []
    for k, g in enumerate(octahedral_group()):
        a, b = _conjugate_pair(h @ g.m)
        first = (a @ STANDARD, b @ STANDARD, a @ DIAGONAL, b @ DIAGONAL)
        swapped = (a @ DIAGONAL, b @ DIAGONAL, a @ STANDARD, b @ STANDARD)
        branches.append(Branch(1 / 48, first, acc, f"g{k}"))
        branches.append(Branch(1 / 48, swapped, acc, f"g{k}-swap"))
    return _realize("TV", 2, branches, build_tV().t0, 1e-10)


@dataclass(frozen=True)
class OctahedralWeightRow:
    x: float
    k3_direct: float
    k2_direct: float
    k3_formula: float
    k2_formula: float


@dataclass(frozen=True)
class OctahedralWeightReport:
    rows: tuple[OctahedralWeightRow, ...]
    max_error: float
    x_star: float
    raw_crossing: float
    per_rank_crossing: float
    raw_values_at_x_star: tuple[float, float]
    per_rank_values_at_x_star: tuple[float, float]


def _rotated_traces(x: float, i: int = 0, j: int = 0) -> tuple[float, float]:
    h = h_rotation(x)
    hb = np.kron(h, h.conj())
    v = np.kron(hb, hb)
    y = v.conj().T @ build_pi_ij(i, j).data @ v
    k3 = np.einsum("ij,ji->", bs.projector("K3+").op.data, y).real
    k2 = np.einsum("ij,ji->", bs.projector("K2+").op.data, y).real
    return float(k3), float(k2)


def octahedral_weight_check(grid=None, tol: float = 1e-10) -> OctahedralWeightReport:
    """Traces of ``K3+`` and ``K2+`` against rotated ``Π_ij``, direct vs closed form.

    Also locates where the two raw traces cross and where the per-dimension
    weights (trace over rank) cross; the second crossing is ``x*``.
    """
    if grid is None:
        grid = sorted(set(np.round(np.linspace(0, np.pi / 4, 17), 15)) | {X_STAR, np.pi / 8})
    rows = []
    worst = 0.0
    for x in grid:
        fk3, fk2 = np.cos(4 * x) ** 2 / 8, np.sin(4 * x) ** 2 / 8
        for i, j in product((0, 1), repeat=2):
            k3, k2 = _rotated_traces(x, i, j)
            worst = max(worst, abs(k3 - fk3), abs(k2 - fk2))
        if worst > tol:
            raise SymbolicMismatch(f"rotated traces at x={x} differ from closed form by {worst:.3g}")
        rows.append(OctahedralWeightRow(float(x), k3, k2, float(fk3), float(fk2)))
    raw = brentq(lambda t: np.subtract(*_rotated_traces(t)), 1e-3, np.pi / 8 - 1e-3, xtol=1e-15)
    per_rank = brentq(lambda t: _rotated_traces(t)[0] / 3 - _rotated_traces(t)[1] / 2,
                      1e-3, np.pi / 8 - 1e-3, xtol=1e-15)
    k3s, k2s = _rotated_traces(X_STAR)
    return OctahedralWeightReport(tuple(rows), worst, X_STAR, float(raw), float(per_rank),
                                  (k3s, k2s), (k3s / 3, k2s / 2))
