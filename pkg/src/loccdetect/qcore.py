"""Dense operators and states over labeled tensor-product spaces.

Every operator carries an ordered tuple of :class:`HilbertLabel` factors.  The
matrix is indexed in the Kronecker order of that tuple, so ``A1, B1, A2, B2``
means the first pair occupies the two most significant tensor slots.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import (
    DimensionCap,
    DuplicateFactor,
    ImaginaryResidue,
    InvalidState,
    ShapeMismatch,
    UnknownFactor,
)

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
NORM_TOL = 1e-12
POSITIVITY_TOL = 1e-10
OPERATOR_TOL = 1e-10
IMAG_TOL = 1e-10
MAX_SIDE = 4096


@dataclass(frozen=True)
class HilbertLabel:
    name: str
    dim: int = 2

    def __post_init__(self):
        if not self.name:
            raise ValueError("factor name must be non-empty")
        if int(self.dim) != self.dim or self.dim < 2:
            raise ValueError(f"factor {self.name!r} needs dimension >= 2, got {self.dim}")

    def __str__(self):
        return self.name


LabelLike = Union[HilbertLabel, str]


def pair_labels(n: int = 1, d: int = 2) -> tuple[HilbertLabel, ...]:
    """Factors of ``n`` shared pairs in the global ordering.

    ``n = 1`` gives ``(A, B)``; otherwise ``(A1, B1, ..., An, Bn)``.
    """
    if n < 1:
        raise ValueError("need at least one pair")
    if n == 1:
        return (HilbertLabel("A", d), HilbertLabel("B", d))
    out = []
    for k in range(1, n + 1):
        out += [HilbertLabel(f"A{k}", d), HilbertLabel(f"B{k}", d)]
    return tuple(out)


def _as_factors(factors: Iterable[HilbertLabel]) -> tuple[HilbertLabel, ...]:
    factors = tuple(factors)
    if not factors:
        raise ShapeMismatch("an operator needs at least one factor")
    for f in factors:
        if not isinstance(f, HilbertLabel):
            raise TypeError(f"factor must be a HilbertLabel, got {f!r}")
    names = [f.name for f in factors]
    if len(set(names)) != len(names):
        dup = sorted({n for n in names if names.count(n) > 1})
        raise DuplicateFactor(f"repeated factor label(s): {', '.join(dup)}")
    side = int(np.prod([f.dim for f in factors]))
    if side > MAX_SIDE:
        raise DimensionCap(f"space of dimension {side} exceeds the cap of {MAX_SIDE}")
    return factors


def _frozen(data, shape) -> np.ndarray:
    arr = np.array(data, dtype=complex)
    if arr.shape != shape:
        raise ShapeMismatch(f"expected array of shape {shape}, got {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Operator:
    """A square complex matrix acting on ``factors``."""

    factors: tuple[HilbertLabel, ...]
    data: np.ndarray

    def __post_init__(self):
        factors = _as_factors(self.factors)
        side = int(np.prod([f.dim for f in factors]))
        object.__setattr__(self, "factors", factors)
        object.__setattr__(self, "data", _frozen(self.data, (side, side)))

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(f.dim for f in self.factors)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(f.name for f in self.factors)

    @property
    def side(self) -> int:
        return self.data.shape[0]

    def index(self, label: LabelLike) -> int:
        name = label.name if isinstance(label, HilbertLabel) else label
        try:
            return self.names.index(name)
        except ValueError:
            raise UnknownFactor(f"{name!r} is not a factor of {self.names}") from None

    def _same_space(self, other: "Operator") -> None:
        if self.factors != other.factors:
            raise ShapeMismatch(f"factor lists differ: {self.names} vs {other.names}")

    def _new(self, data) -> "Operator":
        return Operator(self.factors, data)

    def __add__(self, other: "Operator") -> "Operator":
        self._same_space(other)
        return self._new(self.data + other.data)

    def __sub__(self, other: "Operator") -> "Operator":
        self._same_space(other)
        return self._new(self.data - other.data)

    def __neg__(self) -> "Operator":
        return self._new(-self.data)

    def __mul__(self, scalar) -> "Operator":
        if isinstance(scalar, Operator):
            return NotImplemented
        return self._new(self.data * scalar)

    __rmul__ = __mul__

    def __truediv__(self, scalar) -> "Operator":
        return self._new(self.data / scalar)

    def __matmul__(self, other: "Operator") -> "Operator":
        self._same_space(other)
        return self._new(self.data @ other.data)

    def dag(self) -> "Operator":
        return self._new(self.data.conj().T)

    def trace(self) -> complex:
        return complex(np.trace(self.data))

    def max_abs_diff(self, other: "Operator") -> float:
        self._same_space(other)
        return float(np.max(np.abs(self.data - other.data)))

    def allclose(self, other: "Operator", atol: float = OPERATOR_TOL) -> bool:
        return self.max_abs_diff(other) <= atol

    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.data - self.data.conj().T)))

    def is_hermitian(self, tol: float = HERMITIAN_TOL) -> bool:
        return self.hermiticity_error() <= tol

    def eigvalsh(self) -> np.ndarray:
        """Eigenvalues of the Hermitian part, ascending."""
        h = (self.data + self.data.conj().T) / 2
        return np.linalg.eigvalsh(h)

    def conjugated(self, u) -> "Operator":
        """Return ``u† X u`` for a matrix or operator ``u`` on the same space."""
        m = u.data if isinstance(u, Operator) else np.asarray(u)
        return self._new(m.conj().T @ self.data @ m)

    def relabel(self, factors: Sequence[HilbertLabel]) -> "Operator":
        factors = tuple(factors)
        if tuple(f.dim for f in factors) != self.dims:
            raise ShapeMismatch("relabeling must keep every factor dimension")
        return Operator(factors, self.data)

    def as_operator(self) -> "Operator":
        return Operator(self.factors, self.data)


@dataclass(frozen=True, eq=False)
class DensityMatrix(Operator):
    """Hermitian, unit-trace, positive semidefinite operator."""

    def __post_init__(self):
        super().__post_init__()
        herm = self.hermiticity_error()
        if herm > HERMITIAN_TOL:
            raise InvalidState(f"not Hermitian (max |M - M^dag| = {herm:.3g})")
        tr = np.trace(self.data).real
        if abs(tr - 1) > TRACE_TOL:
            raise InvalidState(f"trace is {tr!r}, expected 1")
        lo = float(self.eigvalsh()[0])
        if lo < -POSITIVITY_TOL:
            raise InvalidState(f"negative eigenvalue {lo:.3g}")

    def relabel(self, factors: Sequence[HilbertLabel]) -> "DensityMatrix":
        factors = tuple(factors)
        if tuple(f.dim for f in factors) != self.dims:
            raise ShapeMismatch("relabeling must keep every factor dimension")
        return DensityMatrix(factors, self.data)


@dataclass(frozen=True, eq=False)
class Ket:
    factors: tuple[HilbertLabel, ...]
    data: np.ndarray

    def __post_init__(self):
        factors = _as_factors(self.factors)
        side = int(np.prod([f.dim for f in factors]))
        data = _frozen(self.data, (side,))
        norm = np.linalg.norm(data)
        if abs(norm - 1) > NORM_TOL:
            raise InvalidState(f"ket norm is {norm!r}, expected 1")
        object.__setattr__(self, "factors", factors)
        object.__setattr__(self, "data", data)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(f.name for f in self.factors)

    def inner(self, other: "Ket") -> complex:
        if self.factors != other.factors:
            raise ShapeMismatch(f"factor lists differ: {self.names} vs {other.names}")
        return complex(np.vdot(self.data, other.data))

    def projector(self) -> DensityMatrix:
        return DensityMatrix(self.factors, np.outer(self.data, self.data.conj()))

    def relabel(self, factors: Sequence[HilbertLabel]) -> "Ket":
        return Ket(tuple(factors), self.data)


def identity(factors: Sequence[HilbertLabel]) -> Operator:
    factors = _as_factors(factors)
    return Operator(factors, np.eye(int(np.prod([f.dim for f in factors]))))


def basis_ket(factors: Sequence[HilbertLabel], indices: Sequence[int]) -> Ket:
    factors = tuple(factors)
    if len(indices) != len(factors):
        raise ShapeMismatch("one index per factor is required")
    vec = reduce(np.kron, [np.eye(f.dim)[i] for f, i in zip(factors, indices)])
    return Ket(factors, vec)


def tensor(a, b, *more):
    """Kronecker product with concatenated factor lists.

    Kets combine into kets, density matrices into density matrices and anything
    else into a plain :class:`Operator`.
    """
    if more:
        return tensor(tensor(a, b), *more)
    names = set(a.names) & set(b.names)
    if names:
        raise DuplicateFactor(f"factor label(s) shared by both operands: {', '.join(sorted(names))}")
    factors = a.factors + b.factors
    if isinstance(a, Ket) and isinstance(b, Ket):
        return Ket(factors, np.kron(a.data, b.data))
    if isinstance(a, Ket) or isinstance(b, Ket):
        raise TypeError("cannot mix kets and operators in a tensor product")
    data = np.kron(a.data, b.data)
    if isinstance(a, DensityMatrix) and isinstance(b, DensityMatrix):
        return DensityMatrix(factors, data)
    return Operator(factors, data)


def copy_labels(factors: Sequence[HilbertLabel], k: int) -> tuple[HilbertLabel, ...]:
    """Labels of the ``k``-th sample copy: ``A -> A{k}``, ``B -> B{k}``."""
    return tuple(HilbertLabel(f"{f.name}{k}", f.dim) for f in factors)


def tensor_power(x, n: int):
    """``x ⊗ x ⊗ ... ⊗ x`` (``n`` copies) with factors renamed per copy."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if n == 1:
        return x
    copies = [x.relabel(copy_labels(x.factors, k)) for k in range(1, n + 1)]
    return reduce(tensor, copies)


def _resolve(x: Operator, labels: Iterable[LabelLike]) -> list[int]:
    idx = sorted({x.index(lab) for lab in labels})
    for lab in labels:
        if isinstance(lab, HilbertLabel) and x.factors[x.index(lab)].dim != lab.dim:
            raise UnknownFactor(f"{lab.name!r} has dimension {x.factors[x.index(lab)].dim}, not {lab.dim}")
    return idx


def permute_factors(x: Operator, order: Sequence[LabelLike]) -> Operator:
    """Reorder the tensor factors of ``x`` to ``order`` (names or labels)."""
    perm = [x.index(lab) for lab in order]
    if sorted(perm) != list(range(len(x.factors))):
        raise ShapeMismatch("order must list every factor exactly once")
    m = len(perm)
    t = x.data.reshape(x.dims * 2).transpose(perm + [p + m for p in perm])
    factors = tuple(x.factors[p] for p in perm)
    side = x.side
    cls = DensityMatrix if isinstance(x, DensityMatrix) else Operator
    return cls(factors, t.reshape(side, side))


def partial_transpose(x: Operator, on: Iterable[LabelLike]) -> Operator:
    """Transpose the row/column indices of the factors in ``on`` only."""
    idx = _resolve(x, list(on))
    m = len(x.factors)
    axes = list(range(2 * m))
    for k in idx:
        axes[k], axes[k + m] = axes[k + m], axes[k]
    t = x.data.reshape(x.dims * 2).transpose(axes)
    return Operator(x.factors, t.reshape(x.side, x.side))


def partial_trace(x: Operator, drop: Iterable[LabelLike]):
    """Trace out the factors in ``drop``; density matrices stay density matrices."""
    idx = _resolve(x, list(drop))
    keep = [k for k in range(len(x.factors)) if k not in idx]
    if not keep:
        raise ShapeMismatch("cannot trace out every factor; use Operator.trace()")
    m = len(x.factors)
    letters = "abcdefghijklmnopqrstuvwxyz"
    rows = list(letters[:m])
    cols = list(letters[m:2 * m])
    for k in idx:
        cols[k] = rows[k]
    out = "".join(rows[k] for k in keep) + "".join(cols[k] for k in keep)
    t = np.einsum("".join(rows) + "".join(cols) + "->" + out, x.data.reshape(x.dims * 2))
    factors = tuple(x.factors[k] for k in keep)
    side = int(np.prod([f.dim for f in factors]))
    cls = DensityMatrix if isinstance(x, DensityMatrix) else Operator
    return cls(factors, t.reshape(side, side))


def expectation(rho: Operator, e: Operator) -> float:
    """``Tr(rho e)`` as a real number; a large imaginary part is an error."""
    if rho.factors != e.factors:
        raise ShapeMismatch(f"factor lists differ: {rho.names} vs {e.names}")
    val = np.einsum("ij,ji->", rho.data, e.data)
    if abs(val.imag) > IMAG_TOL:
        raise ImaginaryResidue(f"Tr(rho e) has imaginary part {val.imag:.3g}")
    return float(val.real)


def random_density_matrix(factors: Sequence[HilbertLabel], rng: np.random.Generator,
                          rank: int | None = None) -> DensityMatrix:
    """Random state from a normalized Ginibre matrix (full rank by default)."""
    factors = _as_factors(factors)
    side = int(np.prod([f.dim for f in factors]))
    k = side if rank is None else rank
    g = rng.normal(size=(side, k)) + 1j * rng.normal(size=(side, k))
    r = g @ g.conj().T
    r = (r + r.conj().T) / 2
    return DensityMatrix(factors, r / np.trace(r).real)


def nearest_density_matrix(h, factors: Sequence[HilbertLabel]) -> DensityMatrix:
    """Frobenius-nearest density matrix to the Hermitian matrix ``h``.

    The eigenvalues are projected onto the probability simplex.
    """
    h = np.asarray(h, dtype=complex)
    h = (h + h.conj().T) / 2
    vals, vecs = np.linalg.eigh(h)
    u = np.sort(vals)[::-1]
    css = np.cumsum(u)
    k = np.arange(1, len(u) + 1)
    r = np.nonzero(u - (css - 1) / k > 0)[0][-1]
    shift = (css[r] - 1) / (r + 1)
    p = np.clip(vals - shift, 0, None)
    out = (vecs * p) @ vecs.conj().T
    out = (out + out.conj().T) / 2
    return DensityMatrix(tuple(factors), out / np.trace(out).real)
