"""SU(2) elements, Haar sampling, the octahedral subgroup and twirling.

Twirling averages ``R(g)† X R(g)`` over a group, where ``R`` is one of

* U: ``g ⊗ ḡ`` on ``A ⊗ B`` (``g`` in SU(d^n) for n pairs, A-side factors
  ``A1..An`` and B-side ``B1..Bn``),
* V: ``g ⊗ ḡ ⊗ g ⊗ ḡ`` on ``A1 B1 A2 B2``,
* W: ``g ⊗ ḡ ⊗ h ⊗ h̄`` on ``A1 B1 A2 B2``.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Union

import numpy as np
from scipy.stats import unitary_group

from .errors import ClosureOverflow
from .qcore import HilbertLabel, Operator, pair_labels

UNITARY_TOL = 1e-12
SeedLike = Union[int, np.random.Generator, np.random.SeedSequence, None]


def as_generator(seed: SeedLike) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


@dataclass(frozen=True, eq=False)
class Su2Element:
    m: np.ndarray

    def __post_init__(self):
        m = np.array(self.m, dtype=complex)
        if m.shape != (2, 2):
            raise ValueError("SU(2) elements are 2x2")
        err = np.max(np.abs(m @ m.conj().T - np.eye(2)))
        if err > UNITARY_TOL:
            raise ValueError(f"matrix is not unitary (error {err:.3g})")
        if abs(np.linalg.det(m) - 1) > UNITARY_TOL:
            raise ValueError("determinant is not 1")
        m.setflags(write=False)
        object.__setattr__(self, "m", m)

    def __matmul__(self, other: "Su2Element") -> "Su2Element":
        return Su2Element(self.m @ other.m)

    def dag(self) -> "Su2Element":
        return Su2Element(self.m.conj().T)

    def allclose(self, other: "Su2Element", atol: float = 1e-9) -> bool:
        return bool(np.max(np.abs(self.m - other.m)) <= atol)

    def projectively_equal(self, other: "Su2Element", atol: float = 1e-9) -> bool:
        return self.allclose(other, atol) or bool(np.max(np.abs(self.m + other.m)) <= atol)


IDENTITY = Su2Element(np.eye(2))


def contragradient(g: Su2Element) -> Su2Element:
    """Entrywise complex conjugate in the standard basis."""
    return Su2Element(g.m.conj())


def haar_su2_batch(rng: SeedLike, size: int) -> np.ndarray:
    """``size`` Haar-random SU(2) matrices, shape ``(size, 2, 2)``.

    ``g = [[a, -b̄], [b, ā]]`` with ``a = cos ξ e^{iψ}``, ``b = sin ξ e^{iχ}``,
    ``ψ, χ`` uniform and ``cos 2ξ`` uniform on ``[-1, 1]``.
    """
    rng = as_generator(rng)
    psi = rng.uniform(0, 2 * np.pi, size)
    chi = rng.uniform(0, 2 * np.pi, size)
    c2 = rng.uniform(-1, 1, size)
    a = np.sqrt((1 + c2) / 2) * np.exp(1j * psi)
    b = np.sqrt((1 - c2) / 2) * np.exp(1j * chi)
    out = np.empty((size, 2, 2), dtype=complex)
    out[:, 0, 0] = a
    out[:, 0, 1] = -b.conj()
    out[:, 1, 0] = b
    out[:, 1, 1] = a.conj()
    return out


def haar_sample(rng: SeedLike) -> Su2Element:
    return Su2Element(haar_su2_batch(rng, 1)[0])


def haar_special_unitary_batch(rng: SeedLike, dim: int, size: int) -> np.ndarray:
    """Haar-random SU(dim) matrices (scipy's U(dim) sampler, determinant divided out)."""
    rng = as_generator(rng)
    u = unitary_group.rvs(dim, size=size, random_state=rng)
    u = u.reshape(size, dim, dim)
    det = np.linalg.det(u)
    return u / (det ** (1 / dim))[:, None, None]


def _batch_kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    n, ra, ca = a.shape
    _, rb, cb = b.shape
    return np.einsum("nij,nkl->nikjl", a, b).reshape(n, ra * rb, ca * cb)


def _pair_twist(g: np.ndarray) -> np.ndarray:
    return _batch_kron(g, g.conj())


def _interleave(mats: np.ndarray, d: int, n: int) -> np.ndarray:
    """Reorder ``(A1..An, B1..Bn)`` into ``(A1, B1, ..., An, Bn)`` for a batch."""
    if n == 1:
        return mats
    size = mats.shape[0]
    order = [k for j in range(n) for k in (j, n + j)]
    m = 2 * n
    axes = [0] + [1 + p for p in order] + [1 + m + p for p in order]
    side = d ** m
    return mats.reshape((size,) + (d,) * (2 * m)).transpose(axes).reshape(size, side, side)


@dataclass(frozen=True)
class RepresentationAction:
    """A unitary representation on the pair space, evaluated in batches."""

    kind: str
    d: int = 2
    n: int = 1

    def __post_init__(self):
        if self.kind not in ("U", "V", "W"):
            raise ValueError(f"unknown action kind {self.kind!r}")
        if self.kind in ("V", "W") and (self.d, self.n) != (2, 2):
            raise ValueError("V and W actions are defined for two qubit pairs only")

    @property
    def factors(self) -> tuple[HilbertLabel, ...]:
        return pair_labels(self.n, self.d)

    @property
    def arity(self) -> int:
        return 2 if self.kind == "W" else 1

    @property
    def group_dim(self) -> int:
        return self.d ** self.n if self.kind == "U" else 2

    def matrices(self, g: np.ndarray, h: np.ndarray | None = None) -> np.ndarray:
        """Representation matrices for stacked group elements ``g`` (and ``h``)."""
        g = np.asarray(g, dtype=complex)
        if g.ndim == 2:
            g = g[None]
        if self.kind == "U":
            return _interleave(_pair_twist(g), self.d, self.n)
        pg = _pair_twist(g)
        if self.kind == "V":
            return _batch_kron(pg, pg)
        if h is None:
            raise ValueError("the W action needs two group elements")
        h = np.asarray(h, dtype=complex)
        if h.ndim == 2:
            h = h[None]
        return _batch_kron(pg, _pair_twist(h))

    def apply(self, g, h=None) -> Operator:
        g = g.m if isinstance(g, Su2Element) else g
        h = h.m if isinstance(h, Su2Element) else h
        return Operator(self.factors, self.matrices(g, h)[0])

    __call__ = apply

    def sample(self, rng: np.random.Generator, size: int) -> tuple[np.ndarray, ...]:
        if self.kind == "U" and self.group_dim > 2:
            return (haar_special_unitary_batch(rng, self.group_dim, size),)
        if self.kind == "W":
            return haar_su2_batch(rng, size), haar_su2_batch(rng, size)
        return (haar_su2_batch(rng, size),)


U_ACTION = RepresentationAction("U")
V_ACTION = RepresentationAction("V", n=2)
W_ACTION = RepresentationAction("W", n=2)


def u_action(g, d: int = 2, n: int = 1) -> Operator:
    return RepresentationAction("U", d, n).apply(g)


def v_action(g) -> Operator:
    return V_ACTION.apply(g)


def w_action(g, h) -> Operator:
    return W_ACTION.apply(g, h)


# -- octahedral subgroup ------------------------------------------------------

# A quarter turn about z and a quarter turn about y.  Together they generate the
# rotation group of the octahedron (48 elements in SU(2), 24 up to sign).
OCTAHEDRAL_GENERATORS = (
    np.diag([np.exp(1j * np.pi / 4), np.exp(-1j * np.pi / 4)]),
    np.array([[1, -1], [1, 1]]) / np.sqrt(2),
)
# diag(i, -i) is a half turn; with the y quarter turn it only reaches a group
# of order 16 (8 up to sign).
HALF_TURN_GENERATORS = (
    np.diag([1j, -1j]),
    np.array([[1, -1], [1, 1]]) / np.sqrt(2),
)


def linear_closure(generators, limit: int = 48) -> list[np.ndarray]:
    """All products of the generators, as distinct matrices (to 1e-9)."""
    gens = [np.asarray(g, dtype=complex) for g in generators]
    found = [np.eye(2, dtype=complex)]
    frontier = list(found)
    while frontier:
        nxt = []
        for m in frontier:
            for g in gens:
                c = m @ g
                if any(np.max(np.abs(c - f)) <= 1e-9 for f in found):
                    continue
                found.append(c)
                nxt.append(c)
                if len(found) > limit:
                    raise ClosureOverflow(f"closure exceeded {limit} elements")
        frontier = nxt
    return found


def projective_reduce(mats) -> list[np.ndarray]:
    """Keep one representative of each ``{g, -g}`` pair, in first-seen order."""
    out = []
    for m in mats:
        if not any(np.max(np.abs(m - o)) <= 1e-9 or np.max(np.abs(m + o)) <= 1e-9 for o in out):
            out.append(m)
    return out


@dataclass(frozen=True)
class OctahedralGroup:
    """24 coset representatives of the binary octahedral group modulo ``±1``.

    Conjugation ``R(g)† X R(g)`` does not see the sign, so a twirl over these
    24 matrices equals the twirl over all 48.
    """

    elements: tuple[Su2Element, ...]
    linear_order: int = 48

    def __post_init__(self):
        if len(self.elements) != 24:
            raise ValueError(f"expected 24 elements, got {len(self.elements)}")
        for i, a in enumerate(self.elements):
            for b in self.elements[:i]:
                if a.allclose(b):
                    raise ValueError("duplicate element")

    def __len__(self):
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def matrices(self) -> np.ndarray:
        return np.stack([g.m for g in self.elements])

    def contains(self, g: Su2Element) -> bool:
        return any(g.projectively_equal(e) for e in self.elements)


@lru_cache(maxsize=None)
def octahedral_group() -> OctahedralGroup:
    mats = linear_closure(OCTAHEDRAL_GENERATORS)
    reps = projective_reduce(mats)
    return OctahedralGroup(tuple(Su2Element(m) for m in reps), linear_order=len(mats))


# -- twirling -----------------------------------------------------------------

@dataclass(frozen=True)
class MonteCarlo:
    n_samples: int = 100_000
    seed: int = 0
    workers: int = 1
    batch: int = 4096


@dataclass(frozen=True)
class Octahedral:
    pass


@dataclass(frozen=True)
class EulerQuadrature:
    """Exact SU(2) average for operators of low polynomial degree.

    ``g = Rz(a) Ry(b) Rz(c)`` with ``a, c`` on uniform grids and ``cos b`` on a
    Gauss-Legendre grid.  Twirls under U and V only involve matrix elements of
    degree at most 4 in ``g`` and ``ḡ``, which these grids integrate exactly.
    """

    n_azimuth: int = 12
    n_polar: int = 24


OCTAHEDRAL = Octahedral()
EULER = EulerQuadrature()


def monte_carlo(n_samples: int = 100_000, seed: int = 0, workers: int = 1) -> MonteCarlo:
    return MonteCarlo(n_samples=n_samples, seed=seed, workers=workers)


def _conjugate_sum(x: np.ndarray, mats: np.ndarray, weights: np.ndarray | None = None) -> np.ndarray:
    """``Σ_k w_k R_k† X R_k`` as a single matrix product."""
    size, side, _ = mats.shape
    right = x @ mats
    if weights is not None:
        right = right * weights[:, None, None]
    return mats.reshape(size * side, side).conj().T @ right.reshape(size * side, side)


def euler_nodes(scheme: EulerQuadrature) -> tuple[np.ndarray, np.ndarray]:
    """SU(2) quadrature nodes and weights (weights sum to one)."""
    az = 2 * np.pi * np.arange(scheme.n_azimuth) / scheme.n_azimuth
    cb, wb = np.polynomial.legendre.leggauss(scheme.n_polar)
    b = np.arccos(cb)
    a_, b_, c_ = np.meshgrid(az, b, az, indexing="ij")
    w_ = np.broadcast_to(wb[None, :, None], a_.shape)
    a_, b_, c_, w_ = (t.ravel() for t in (a_, b_, c_, w_))
    ez = lambda t: np.exp(-0.5j * t)
    # Rz(a) Ry(b) Rz(c), multiplied out.
    cos, sin = np.cos(b_ / 2), np.sin(b_ / 2)
    g = np.empty((a_.size, 2, 2), dtype=complex)
    g[:, 0, 0] = ez(a_) * cos * ez(c_)
    g[:, 0, 1] = -ez(a_) * sin * ez(-c_)
    g[:, 1, 0] = ez(-a_) * sin * ez(c_)
    g[:, 1, 1] = ez(-a_) * cos * ez(-c_)
    return g, w_ / w_.sum()


def _mc_share(x: np.ndarray, action: RepresentationAction, count: int,
              seed_seq: np.random.SeedSequence, batch: int) -> np.ndarray:
    rng = np.random.default_rng(seed_seq)
    acc = np.zeros_like(x)
    done = 0
    while done < count:
        k = min(batch, count - done)
        acc += _conjugate_sum(x, action.matrices(*action.sample(rng, k)))
        done += k
    return acc


def twirl(x: Operator, action: RepresentationAction, scheme=OCTAHEDRAL) -> Operator:
    """Average of ``R(g)† X R(g)`` over the group selected by ``scheme``."""
    if x.factors != action.factors:
        raise ValueError(f"operator factors {x.names} do not match the action space")
    data = np.asarray(x.data)
    if isinstance(scheme, Octahedral):
        if action.group_dim != 2:
            raise ValueError("the octahedral scheme needs an SU(2) action")
        g = octahedral_group().matrices()
        if action.kind == "W":
            gg = np.repeat(g, len(g), axis=0)
            hh = np.tile(g, (len(g), 1, 1))
            out = _conjugate_sum(data, action.matrices(gg, hh)) / len(gg)
        else:
            out = _conjugate_sum(data, action.matrices(g)) / len(g)
    elif isinstance(scheme, EulerQuadrature):
        if action.group_dim != 2:
            raise ValueError("Euler quadrature needs an SU(2) action")
        g, w = euler_nodes(scheme)
        if action.kind == "W":
            # The W twirl factorizes into independent twirls of the two pairs.
            eye = np.broadcast_to(np.eye(2, dtype=complex), g.shape)
            out = _conjugate_sum(data, action.matrices(g, eye), w)
            out = _conjugate_sum(out, action.matrices(eye, g), w)
        else:
            out = _conjugate_sum(data, action.matrices(g), w)
    elif isinstance(scheme, MonteCarlo):
        if scheme.n_samples < 1 or scheme.workers < 1:
            raise ValueError("need at least one sample and one worker")
        children = np.random.SeedSequence(scheme.seed).spawn(scheme.workers)
        base, extra = divmod(scheme.n_samples, scheme.workers)
        counts = [base + (i < extra) for i in range(scheme.workers)]
        jobs = [(data, action, c, s, scheme.batch) for c, s in zip(counts, children)]
        if scheme.workers == 1:
            parts = [_mc_share(*jobs[0])]
        else:
            with ThreadPoolExecutor(max_workers=scheme.workers) as pool:
                parts = list(pool.map(lambda j: _mc_share(*j), jobs))
        out = sum(parts) / scheme.n_samples
    else:
        raise TypeError(f"unknown twirl scheme {scheme!r}")
    return Operator(x.factors, out)
