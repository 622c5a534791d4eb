"""Magic (Bell) basis, the x-matrix of a pair state, and the projectors onto
the SU(2)-irreducible pieces of the two-pair space.

The two-pair space is ``A1 ⊗ B1 ⊗ A2 ⊗ B2`` with ``e^{ij} = φ^i ⊗ φ^j``.
Projector labels are ASCII strings such as ``"K5+"`` or ``"L3-"``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .errors import FormulaMismatch, InvalidState, ShapeMismatch, UnknownLabel
from .qcore import (
    DensityMatrix,
    HilbertLabel,
    Ket,
    Operator,
    nearest_density_matrix,
    pair_labels,
    tensor_power,
)

PAIR = pair_labels(1)
TWO_PAIRS = pair_labels(2)
FORMULA_TOL = 1e-10

_S = 1 / np.sqrt(2)
_BELL_COLUMNS = np.array(
    [
        [_S, 0, 0, _S],
        [0, 1j * _S, 1j * _S, 0],
        [0, -_S, _S, 0],
        [1j * _S, 0, 0, -1j * _S],
    ],
    dtype=complex,
).T
_BELL_COLUMNS.setflags(write=False)


@dataclass(frozen=True)
class BellBasis:
    kets: tuple[Ket, Ket, Ket, Ket]

    def __getitem__(self, i: int) -> Ket:
        return self.kets[i]

    def __len__(self):
        return 4

    def matrix(self) -> np.ndarray:
        """Columns are φ⁰..φ³ in the computational basis of ``A ⊗ B``."""
        return np.column_stack([k.data for k in self.kets])


@lru_cache(maxsize=None)
def bell_basis() -> BellBasis:
    return BellBasis(tuple(Ket(PAIR, _BELL_COLUMNS[:, i]) for i in range(4)))


def max_entangled(d: int = 2, factors: tuple[HilbertLabel, HilbertLabel] | None = None) -> Ket:
    """``(1/√d) Σ_i |i⟩|i⟩`` on two d-dimensional factors."""
    if factors is None:
        factors = pair_labels(1, d)
    vec = np.eye(d).reshape(d * d) / np.sqrt(d)
    return Ket(tuple(factors), vec)


@dataclass(frozen=True, eq=False)
class BellMatrixExpression:
    """``x[i, j] = ⟨φ^i|σ|φ^j⟩`` for a single-pair state σ."""

    x: np.ndarray

    def __post_init__(self):
        x = np.array(self.x, dtype=complex)
        if x.shape != (4, 4):
            raise ShapeMismatch("x must be 4x4")
        if np.max(np.abs(x - x.conj().T)) > 1e-12:
            raise InvalidState("x is not Hermitian")
        if abs(np.trace(x) - 1) > 1e-12:
            raise InvalidState("x does not have unit trace")
        diag = np.diag(x).real
        if diag.min() < -1e-10 or diag.max() > 1 + 1e-10:
            raise InvalidState("diagonal of x leaves [0, 1]")
        x.setflags(write=False)
        object.__setattr__(self, "x", x)

    @property
    def theta(self) -> float:
        """Fidelity with φ⁰."""
        return float(self.x[0, 0].real)

    @property
    def diagonal(self) -> np.ndarray:
        return np.diag(self.x).real.copy()


def bell_expression(sigma: DensityMatrix) -> BellMatrixExpression:
    if sigma.dims != (2, 2):
        raise ShapeMismatch(f"expected a qubit pair, got dimensions {sigma.dims}")
    b = _BELL_COLUMNS
    x = b.conj().T @ sigma.data @ b
    return BellMatrixExpression((x + x.conj().T) / 2)


def state_from_bell_expression(x, factors=PAIR) -> DensityMatrix:
    b = _BELL_COLUMNS
    m = b @ np.asarray(x, dtype=complex) @ b.conj().T
    return DensityMatrix(tuple(factors), (m + m.conj().T) / 2)


def isotropic_state(theta: float) -> DensityMatrix:
    """``θ|φ⁰⟩⟨φ⁰| + (1−θ)(I − |φ⁰⟩⟨φ⁰|)/3``."""
    if not 0 <= theta <= 1:
        raise ValueError("theta must lie in [0, 1]")
    rest = (1 - theta) / 3
    return state_from_bell_expression(np.diag([theta, rest, rest, rest]))


def bell_diagonal_state(weights) -> DensityMatrix:
    w = np.asarray(weights, dtype=float)
    if w.shape != (4,) or w.min() < 0 or abs(w.sum() - 1) > 1e-12:
        raise ValueError("need four nonnegative weights summing to 1")
    return state_from_bell_expression(np.diag(w))


def figure1_state(theta: float, offdiag: float = 0.0) -> DensityMatrix:
    """Isotropic diagonal with a common real value on ``x_ij`` (``1 <= i != j <= 3``).

    When the requested matrix is not a state it is replaced by the nearest
    density matrix, so ``θ`` of the result can differ from the argument.
    """
    rest = (1 - theta) / 3
    x = np.zeros((4, 4))
    x[0, 0] = theta
    x[1:, 1:] = offdiag
    x[1, 1] = x[2, 2] = x[3, 3] = rest
    b = _BELL_COLUMNS
    return nearest_density_matrix(b @ x @ b.conj().T, PAIR)


def pair_product(i: int, j: int) -> np.ndarray:
    """The 16-vector ``e^{ij} = φ^i ⊗ φ^j`` on ``A1 B1 A2 B2``."""
    return np.kron(_BELL_COLUMNS[:, i], _BELL_COLUMNS[:, j])


RANKS = {
    "K5+": 5, "K6+": 6, "K3+": 3, "K2+": 2, "K1+": 1, "K3-": 3,
    "L1+": 1, "L3+": 3, "L3-": 3, "M10+": 10, "M6-": 6,
}
PARTITION = ("K5+", "L3+", "K1+", "L1+", "K3-", "L3-")

_ALIASES = {
    "K₅⁺": "K5+", "K₆⁺": "K6+", "K₃⁺": "K3+", "K₂⁺": "K2+", "K₁⁺": "K1+", "K₃⁻": "K3-",
    "L₁⁺": "L1+", "L₃⁺": "L3+", "L₃⁻": "L3-", "M₁₀⁺": "M10+", "M₆⁻": "M6-",
}


@dataclass(frozen=True, eq=False)
class SubspaceProjector:
    label: str
    op: Operator
    rank: int

    def __post_init__(self):
        p = self.op.data
        err = max(
            np.max(np.abs(p @ p - p)),
            np.max(np.abs(p - p.conj().T)),
            abs(np.trace(p) - self.rank),
        )
        if err > 1e-12:
            raise ValueError(f"{self.label} is not a rank-{self.rank} projector (error {err:.3g})")
        if RANKS.get(self.label) not in (None, self.rank):
            raise ValueError(f"{self.label} must have rank {RANKS[self.label]}")


def _span(vectors) -> np.ndarray:
    a = np.column_stack(vectors)
    u, s, _ = np.linalg.svd(a, full_matrices=False)
    q = u[:, s > 1e-10 * s[0]]
    p = q @ q.conj().T
    return (p + p.conj().T) / 2


def _raw(label: str) -> np.ndarray:
    e = pair_product
    inner = range(1, 4)
    if label == "K6+":
        return _span([e(i, j) + e(j, i) for i in inner for j in inner if i <= j])
    if label == "K1+":
        return _span([e(1, 1) + e(2, 2) + e(3, 3)])
    if label == "K3+":
        return _span([e(i, j) + e(j, i) for i in inner for j in inner if i < j])
    if label == "K2+":
        w = np.exp(2j * np.pi / 3)
        return _span([e(1, 1) + w * e(2, 2) + w**2 * e(3, 3),
                      e(1, 1) + w**2 * e(2, 2) + w * e(3, 3)])
    if label == "K5+":
        return _raw("K6+") - _raw("K1+")
    if label == "K3-":
        return _span([e(i, j) - e(j, i) for i in inner for j in inner if i < j])
    if label == "L1+":
        return _span([e(0, 0)])
    if label == "M10+":
        return _span([e(i, j) + e(j, i) for i in range(4) for j in range(4) if i <= j])
    if label == "M6-":
        return _span([e(i, j) - e(j, i) for i in range(4) for j in range(4) if i < j])
    if label == "L3+":
        return _raw("M10+") - _raw("K6+") - _raw("L1+")
    if label == "L3-":
        return _raw("M6-") - _raw("K3-")
    raise UnknownLabel(label)


@lru_cache(maxsize=None)
def _cached(label: str) -> SubspaceProjector:
    return SubspaceProjector(label, Operator(TWO_PAIRS, _raw(label)), RANKS[label])


def canonical_label(label: str) -> str:
    label = _ALIASES.get(label, label)
    if label not in RANKS:
        raise UnknownLabel(f"unknown subspace label {label!r}; expected one of {sorted(RANKS)}")
    return label


def projector(label: str) -> SubspaceProjector:
    return _cached(canonical_label(label))


def ab_transposition() -> Operator:
    """``|i j k l⟩ ↦ (−1)^{i+j+k+l} |1−j, 1−i, 1−l, 1−k⟩`` on ``A1 B1 A2 B2``."""
    m = np.zeros((16, 16))
    for col in range(16):
        i, j, k, l = np.unravel_index(col, (2, 2, 2, 2))
        row = np.ravel_multi_index((1 - j, 1 - i, 1 - l, 1 - k), (2, 2, 2, 2))
        m[row, col] = (-1) ** (i + j + k + l)
    return Operator(TWO_PAIRS, m)


def sample_swap() -> Operator:
    """Unitary exchanging the pair ``(A1, B1)`` with ``(A2, B2)``."""
    # Row indices carry the exchanged tensor slots, columns the original ones.
    m = np.eye(16).reshape([2] * 8).transpose(2, 3, 0, 1, 4, 5, 6, 7).reshape(16, 16)
    return Operator(TWO_PAIRS, m)


class TracePair(NamedTuple):
    direct: float
    formula: float


_OFF = ((1, 2), (1, 3), (2, 3))


def trace_formulas(x: np.ndarray) -> dict[str, float]:
    """Closed forms of ``Tr(σ⊗σ P)`` in terms of the x-matrix of σ."""
    x = np.asarray(x, dtype=complex)
    d = np.diag(x).real
    s = d[1] + d[2] + d[3]
    re2 = sum(x[i, j].real ** 2 for i, j in _OFF)
    im2 = sum(x[i, j].imag ** 2 for i, j in _OFF)
    abs2 = re2 + im2
    head = sum(abs(x[0, i]) ** 2 for i in range(1, 4))
    inner = x[1:, 1:]
    return {
        "K5+": s**2 / 2 + (d[1] ** 2 + d[2] ** 2 + d[3] ** 2) / 6 + abs2 / 3 + 4 * im2 / 3,
        "L3+": d[0] * s + head,
        "K1+": float(np.sum(inner * inner).real) / 3,
        "L1+": d[0] ** 2,
        "K3-": d[1] * d[2] + d[1] * d[3] + d[2] * d[3] - abs2,
        "L3-": d[0] * s - head,
    }


def direct_traces(sigma: DensityMatrix, labels=PARTITION) -> dict[str, float]:
    pair = tensor_power(sigma.relabel(PAIR), 2).data
    return {lab: float(np.einsum("ij,ji->", pair, projector(lab).op.data).real) for lab in labels}


def subspace_traces(sigma: DensityMatrix, tol: float = FORMULA_TOL) -> dict[str, TracePair]:
    """Direct and closed-form ``Tr(σ⊗σ P)`` for the six partition projectors."""
    direct = direct_traces(sigma)
    formula = trace_formulas(bell_expression(sigma).x)
    out = {}
    for lab in PARTITION:
        if abs(direct[lab] - formula[lab]) > tol:
            raise FormulaMismatch(f"{lab}: direct {direct[lab]!r} vs formula {formula[lab]!r}")
        out[lab] = TracePair(direct[lab], formula[lab])
    return out
