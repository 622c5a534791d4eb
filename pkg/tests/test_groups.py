import numpy as np
import pytest
from hypothesis import given

from loccdetect import bellspace as bs
from loccdetect import groups as grp
from loccdetect import hyptests as ht
from loccdetect.errors import ClosureOverflow
from loccdetect.qcore import Operator, identity

from conftest import seeds


def _random_su2(seed, size=1):
    return grp.haar_su2_batch(np.random.default_rng(seed), size)


def test_haar_first_moment():
    g = grp.haar_su2_batch(np.random.default_rng(0), 100_000)
    mean = np.einsum("ni,nj->ij", g[:, :, 0], g[:, :, 0].conj()) / len(g)
    assert np.max(np.abs(mean - np.eye(2) / 2)) < 0.01


def test_haar_samples_are_valid_and_deterministic():
    a = grp.haar_su2_batch(7, 50)
    b = grp.haar_su2_batch(7, 50)
    assert np.array_equal(a, b)
    for m in a:
        grp.Su2Element(m)
    assert grp.haar_sample(3).allclose(grp.haar_sample(3), 0)


def test_haar_su4_valid():
    u = grp.haar_special_unitary_batch(np.random.default_rng(1), 4, 20)
    assert np.allclose(u @ u.conj().transpose(0, 2, 1), np.eye(4), atol=1e-12)
    assert np.allclose(np.linalg.det(u), 1, atol=1e-12)


def test_twirl_fixes_phi0(phi0):
    assert grp.twirl(phi0, grp.U_ACTION, grp.monte_carlo(2000, 1)).allclose(phi0, 1e-12)


def test_contragradient():
    assert grp.contragradient(grp.IDENTITY).allclose(grp.IDENTITY)
    g = grp.Su2Element(np.diag([1j, -1j]))
    assert np.allclose(grp.contragradient(g).m, np.diag([-1j, 1j]))
    v = bs.max_entangled().data
    for m in _random_su2(5, 100):
        assert np.allclose(np.kron(m, m.conj()) @ v, v, atol=1e-12)


def test_action_examples():
    assert np.allclose(grp.v_action(np.eye(2)).data, np.eye(16))
    ref = ht.reference_projector(2, 2).data
    g, h = _random_su2(1)[0], _random_su2(2)[0]
    w = grp.w_action(g, h).data
    assert np.allclose(w @ ref @ w.conj().T, ref, atol=1e-12)
    v = grp.v_action(g).data
    for lab in bs.PARTITION:
        p = bs.projector(lab).op.data
        assert np.max(np.abs(v @ p - p @ v)) < 1e-12


@given(seeds)
def test_homomorphism(seed):
    g = _random_su2(seed, 2)
    h = _random_su2(seed + 1, 2)
    for action in (grp.U_ACTION, grp.V_ACTION):
        lhs = action.matrices(g[0]) @ action.matrices(g[1])
        assert np.max(np.abs(lhs - action.matrices(g[0] @ g[1]))) < 1e-10
        u = action.matrices(g[0])[0]
        assert np.allclose(u @ u.conj().T, np.eye(len(u)), atol=1e-12)
    lhs = grp.W_ACTION.matrices(g[0], h[0]) @ grp.W_ACTION.matrices(g[1], h[1])
    assert np.max(np.abs(lhs - grp.W_ACTION.matrices(g[0] @ g[1], h[0] @ h[1]))) < 1e-10
    assert np.allclose(grp.v_action(g[0]).data, grp.w_action(g[0], g[0]).data)
    su4 = grp.haar_special_unitary_batch(np.random.default_rng(seed), 4, 2)
    u2 = grp.RepresentationAction("U", 2, 2)
    assert np.max(np.abs(u2.matrices(su4[0]) @ u2.matrices(su4[1]) - u2.matrices(su4[0] @ su4[1]))) < 1e-10


def test_octahedral_group():
    group = grp.octahedral_group()
    assert len(group) == 24 and group.linear_order == 48
    for gen in grp.OCTAHEDRAL_GENERATORS + grp.HALF_TURN_GENERATORS:
        assert group.contains(grp.Su2Element(gen))
    for a in group:
        for b in group:
            assert group.contains(a @ b)


def test_generator_powers():
    g = grp.OCTAHEDRAL_GENERATORS[0]
    assert np.allclose(np.linalg.matrix_power(g, 4), -np.eye(2))
    assert np.allclose(np.linalg.matrix_power(g, 8), np.eye(2))
    h = grp.HALF_TURN_GENERATORS[0]
    assert np.allclose(h @ h, -np.eye(2)) and np.allclose(np.linalg.matrix_power(h, 4), np.eye(2))


def test_half_turn_generators_give_small_group():
    mats = grp.linear_closure(grp.HALF_TURN_GENERATORS)
    assert len(mats) == 16 and len(grp.projective_reduce(mats)) == 8


def test_closure_overflow():
    with pytest.raises(ClosureOverflow):
        grp.linear_closure(grp.OCTAHEDRAL_GENERATORS, limit=30)


def test_octahedral_orbit_of_00():
    kets = {}
    for g in grp.octahedral_group():
        v = np.kron(g.m, g.m.conj()) @ np.array([1, 0, 0, 0])
        p = np.outer(v, v.conj())
        key = tuple(np.round(p, 9).ravel())
        kets[key] = p
    assert len(kets) == 6
    six = [np.array(x) for x in ([1, 0], [0, 1], [1, 1], [1, -1], [1, 1j], [1, -1j])]
    for s in six:
        s = s / np.linalg.norm(s)
        v = np.kron(s, s.conj())
        assert any(np.allclose(p, np.outer(v, v.conj())) for p in kets.values())


def test_twirl_examples():
    eye = identity(bs.PAIR)
    for scheme in (grp.OCTAHEDRAL, grp.EULER, grp.monte_carlo(500, 3)):
        assert grp.twirl(eye, grp.U_ACTION, scheme).allclose(eye, 1e-12)
    diag = Operator(bs.PAIR, np.diag([1.0, 0, 0, 1]))
    tu = ht.build_tu(2).t0
    assert grp.twirl(diag, grp.U_ACTION, grp.OCTAHEDRAL).max_abs_diff(tu) < 1e-12
    assert grp.twirl(diag, grp.U_ACTION, grp.EULER).max_abs_diff(tu) < 1e-12
    assert grp.twirl(diag, grp.U_ACTION, grp.monte_carlo(100_000, 0)).max_abs_diff(tu) < 0.01


def test_monte_carlo_twirl_worker_determinism():
    diag = Operator(bs.PAIR, np.diag([1.0, 0, 0, 1]))
    a = grp.twirl(diag, grp.U_ACTION, grp.monte_carlo(5000, 9, workers=2))
    b = grp.twirl(diag, grp.U_ACTION, grp.monte_carlo(5000, 9, workers=2))
    assert np.array_equal(a.data, b.data)


def test_twirled_operator_is_invariant(rng):
    x = rng.normal(size=(16, 16)) + 1j * rng.normal(size=(16, 16))
    x = Operator(bs.TWO_PAIRS, x + x.conj().T)
    for action in (grp.V_ACTION, grp.W_ACTION):
        t = grp.twirl(x, action, grp.OCTAHEDRAL)
        for g in list(grp.octahedral_group())[:6]:
            r = action.matrices(g.m, g.m)[0] if action.kind == "W" else action.matrices(g.m)[0]
            assert np.max(np.abs(r.conj().T @ t.data @ r - t.data)) < 1e-10
    n = 20_000
    mc = grp.twirl(x, grp.V_ACTION, grp.monte_carlo(n, 4))
    g = grp.haar_su2_batch(np.random.default_rng(8), 1)[0]
    r = grp.V_ACTION.matrices(g)[0]
    scale = np.max(np.abs(x.data))
    assert np.max(np.abs(r.conj().T @ mc.data @ r - mc.data)) < 3 * scale * 4 / np.sqrt(n)


def test_v_twirl_is_block_scalar(rng):
    x = rng.normal(size=(16, 16)) + 1j * rng.normal(size=(16, 16))
    t = grp.twirl(Operator(bs.TWO_PAIRS, x + x.conj().T), grp.V_ACTION, grp.EULER).data
    for lab in ("K5+", "K1+", "L1+"):
        p = bs.projector(lab)
        m = p.op.data
        block = m @ t @ m
        assert np.max(np.abs(block - np.trace(block) / p.rank * m)) < 1e-9
