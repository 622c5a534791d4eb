import numpy as np
import pytest
from hypothesis import given

from loccdetect.errors import DimensionCap, DuplicateFactor, ImaginaryResidue, InvalidState, UnknownFactor
from loccdetect.qcore import (
    DensityMatrix,
    HilbertLabel,
    Ket,
    Operator,
    basis_ket,
    expectation,
    identity,
    nearest_density_matrix,
    pair_labels,
    partial_trace,
    partial_transpose,
    permute_factors,
    random_density_matrix,
    tensor,
    tensor_power,
)
from loccdetect import bellspace as bs
from loccdetect import hyptests as ht

from conftest import seeds, state_from_seed

A, B = HilbertLabel("A"), HilbertLabel("B")


def _random_op(rng, factors):
    side = int(np.prod([f.dim for f in factors]))
    return Operator(factors, rng.normal(size=(side, side)) + 1j * rng.normal(size=(side, side)))


def test_identity_tensor():
    assert tensor(identity([A]), identity([B])).allclose(identity([A, B]), 1e-15)


def test_basis_ordering():
    zero = basis_ket([A], [0]).projector()
    one = basis_ket([B], [1]).projector()
    assert np.allclose(tensor(zero, one).data, np.diag([0, 1, 0, 0]))


def test_tensor_of_states_is_a_state(rng):
    s = random_density_matrix([A, B], rng)
    t = tensor(s, s.relabel(pair_labels(2)[2:]))
    assert isinstance(t, DensityMatrix)
    assert abs(t.trace() - 1) < 1e-12 and t.is_hermitian()
    assert np.allclose(t.data, np.kron(s.data, s.data), atol=1e-15)


def test_label_collision():
    with pytest.raises(DuplicateFactor):
        tensor(identity([A]), identity([A]))


def test_invalid_labels():
    with pytest.raises(ValueError):
        HilbertLabel("A", 1)
    with pytest.raises(DimensionCap):
        identity([HilbertLabel(f"Q{k}") for k in range(13)])


def test_density_matrix_validation():
    with pytest.raises(InvalidState):
        DensityMatrix((A,), np.diag([2.0, -1.0]))
    with pytest.raises(InvalidState):
        DensityMatrix((A,), np.array([[0.5, 1], [0, 0.5]]))
    with pytest.raises(InvalidState):
        Ket((A,), np.array([1.0, 1.0]))


@given(seeds)
def test_mixed_product_property(seed):
    rng = np.random.default_rng(seed)
    a, c = _random_op(rng, [A]), _random_op(rng, [A])
    b, d = _random_op(rng, [B]), _random_op(rng, [B])
    assert (tensor(a, b) @ tensor(c, d)).allclose(tensor(a @ c, b @ d), 1e-12)


@given(seeds)
def test_partial_transpose_involution_and_full(seed):
    rng = np.random.default_rng(seed)
    x = _random_op(rng, pair_labels(2))
    for cut in (["B1"], ["A1", "B2"], ["B1", "B2"]):
        assert partial_transpose(partial_transpose(x, cut), cut).allclose(x, 1e-15)
    assert np.allclose(partial_transpose(x, ["A1", "B1", "A2", "B2"]).data, x.data.T)


@given(seeds)
def test_partial_transpose_keeps_trace_and_hermiticity(seed):
    rng = np.random.default_rng(seed)
    h = random_density_matrix(pair_labels(2), rng)
    pt = partial_transpose(h, ["B1", "A2"])
    assert abs(pt.trace() - 1) < 1e-12
    assert pt.is_hermitian()


def test_partial_transpose_of_phi0(phi0):
    ev = partial_transpose(phi0, ["B"]).eigvalsh()
    assert np.allclose(ev, [-0.5, 0.5, 0.5, 0.5], atol=1e-12)


def test_unknown_factor(phi0):
    with pytest.raises(UnknownFactor):
        partial_transpose(phi0, ["C"])
    with pytest.raises(UnknownFactor):
        partial_trace(phi0, ["C"])


def test_partial_trace_examples(rng, phi0):
    rho = random_density_matrix([A], rng)
    sig = random_density_matrix([B], rng)
    assert partial_trace(tensor(rho, sig), ["B"]).allclose(rho, 1e-14)
    assert np.allclose(partial_trace(phi0, ["B"]).data, np.eye(2) / 2)


def _reference_partial_trace(m, dims, keep):
    """Explicit index loops."""
    n = len(dims)
    out_dims = [dims[k] for k in keep]
    side = int(np.prod(out_dims))
    out = np.zeros((side, side), dtype=complex)
    for row in np.ndindex(*dims):
        for col in np.ndindex(*dims):
            if any(row[k] != col[k] for k in range(n) if k not in keep):
                continue
            r = np.ravel_multi_index([row[k] for k in keep], out_dims)
            c = np.ravel_multi_index([col[k] for k in keep], out_dims)
            out[r, c] += m[np.ravel_multi_index(row, dims), np.ravel_multi_index(col, dims)]
    return out


@given(seeds)
def test_partial_trace_matches_index_loops(seed):
    rng = np.random.default_rng(seed)
    x = _random_op(rng, pair_labels(2))
    x = (x + x.dag()) / 2
    got = partial_trace(x, ["B1", "A2"])
    assert np.allclose(got.data, _reference_partial_trace(x.data, (2, 2, 2, 2), [0, 3]), atol=1e-12)
    assert abs(got.trace() - x.trace()) < 1e-12


@given(seeds)
def test_partial_trace_of_product(seed):
    rng = np.random.default_rng(seed)
    a, b = _random_op(rng, [A]), _random_op(rng, [B])
    assert partial_trace(tensor(a, b), ["B"]).allclose(a * b.trace(), 1e-12)


def test_expectation(rng):
    rho = random_density_matrix([A, B], rng)
    assert abs(expectation(rho, identity([A, B])) - 1) < 1e-12
    zero = basis_ket([A], [0]).projector()
    one = basis_ket([A], [1]).projector()
    assert expectation(zero, one) == 0
    with pytest.raises(ImaginaryResidue):
        expectation(zero, Operator((A,), np.array([[1j, 0], [0, 0]])))


@given(seeds)
def test_expectation_against_tw_formula(seed):
    s = state_from_seed(seed)
    two = tensor_power(s, 2)
    assert abs(expectation(two, ht.build_tW().t0) - ht.tw_beta(ht.fidelity(s))) < 1e-10


def test_tensor_power_labels():
    s = bs.isotropic_state(0.5)
    assert tensor_power(s, 2).names == ("A1", "B1", "A2", "B2")


def test_permute_factors_roundtrip(rng):
    x = _random_op(rng, pair_labels(2))
    y = permute_factors(x, ["B2", "A1", "A2", "B1"])
    assert y.names == ("B2", "A1", "A2", "B1")
    assert permute_factors(y, ["A1", "B1", "A2", "B2"]).allclose(x, 0)


@given(seeds)
def test_nearest_density_matrix(seed):
    rng = np.random.default_rng(seed)
    h = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    h = h + h.conj().T
    r = nearest_density_matrix(h, (A, B))
    assert abs(r.trace() - 1) < 1e-12 and r.eigvalsh()[0] >= -1e-12
    s = random_density_matrix([A, B], rng)
    assert nearest_density_matrix(s.data, (A, B)).allclose(s, 1e-12)
