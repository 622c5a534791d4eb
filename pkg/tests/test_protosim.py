import numpy as np
import pytest

from loccdetect import bellspace as bs
from loccdetect import discretize as disc
from loccdetect import groups as grp
from loccdetect import hyptests as ht
from loccdetect import protosim as ps
from loccdetect.qcore import Operator

SEED = 20240917


def _run(real, sigma, shots, seed=SEED, workers=1):
    return ps.simulate(ps.ProtocolRun(real, sigma, shots, seed), workers)


def test_protocol_run_validation(phi0):
    with pytest.raises(ValueError):
        ps.ProtocolRun(disc.discretize_tu(), phi0, 0)


def test_report_fields():
    r = ps.make_report("x", 30, 100, 1, 0.3)
    assert r.beta_hat == 0.3 and r.z_score == 0.0
    assert r.stderr == pytest.approx(np.sqrt(0.3 * 0.7 / 100))
    assert ps.make_report("x", 100, 100, 1, 0.9).z_score == float("inf")


@pytest.mark.parametrize("real", [disc.discretize_tu(), disc.discretize_tu_octahedral(), disc.discretize_tv()],
                         ids=["six-state", "octahedral", "finite-V"])
def test_level_zero_realizations_accept_phi0(real, phi0):
    r = _run(real, phi0, 20_000)
    assert r.accept_count == 20_000


def test_tu_isotropic():
    r = _run(disc.discretize_tu(), bs.isotropic_state(0.7), 10**6)
    assert abs(r.beta_hat - (2 * 0.7 + 1) / 3) <= 3 * r.stderr


def test_tv_bell_diagonal():
    r = _run(disc.discretize_tv(), bs.bell_diagonal_state([0.7, 0.1, 0.1, 0.1]), 10**6)
    assert r.z_score <= 3


def test_determinism_and_worker_invariance():
    s = bs.isotropic_state(0.6)
    a = _run(disc.discretize_tv(), s, 50_000, 5)
    b = _run(disc.discretize_tv(), s, 50_000, 5)
    c = _run(disc.discretize_tv(), s, 50_000, 5, workers=3)
    assert a == b == c
    t1 = ps.simulate_swapping(s, 40_000, 5)
    t2 = ps.simulate_swapping(s, 40_000, 5, workers=2)
    assert t1 == t2


def test_blocks_are_independent_streams():
    # The first block of a longer run is the same as a run of one block.
    s = bs.isotropic_state(0.6)
    one = _run(disc.discretize_tu(), s, ps.BLOCK, 11).accept_count
    rng = ps.block_rng(11, 0)
    assert np.array_equal(rng.random(4), ps.block_rng(11, 0).random(4))
    assert not np.array_equal(ps.block_rng(11, 0).random(4), ps.block_rng(11, 1).random(4))
    two = _run(disc.discretize_tu(), s, 2 * ps.BLOCK, 11).accept_count
    assert 0 < one < two


def test_teleportation_examples(phi0):
    assert ps.simulate_teleportation(phi0, shots=10_000, seed=1).beta_hat == 1.0
    r = ps.simulate_teleportation(bs.isotropic_state(0.5), shots=10**6, seed=SEED)
    assert abs(r.beta_hat - 2 / 3) <= 3 * r.stderr


def test_teleportation_fixed_input_fixture():
    phi1 = bs.bell_basis()[1].projector()
    assert ps.teleportation_fidelity_exact(phi1, [1, 0]) == pytest.approx(0.0, abs=1e-12)
    assert ps.teleportation_fidelity_exact(phi1, np.array([1, 1]) / np.sqrt(2)) == pytest.approx(1.0, abs=1e-12)
    r = ps.simulate_teleportation(phi1, [1, 0], shots=10_000, seed=2)
    assert r.accept_count == 0
    iso = bs.isotropic_state(0.7)
    assert ps.teleportation_fidelity_exact(iso, [0.6, 0.8j]) == pytest.approx(0.8, abs=1e-12)


def test_corrections_are_unitary():
    c = ps.TELEPORT_CORRECTIONS
    assert np.allclose(np.einsum("kji,kjl->kil", c.conj(), c), np.eye(2))


def test_swapping_operator_twirls_to_tw():
    _, succ = ps.swapping_operators()
    x = Operator(bs.TWO_PAIRS, succ.sum(axis=0))
    assert grp.twirl(x, grp.W_ACTION, grp.EULER).max_abs_diff(ht.build_tW().t0) < 1e-12
    outcome, _ = ps.swapping_operators()
    assert np.allclose(outcome.sum(axis=0), np.eye(16))


@pytest.mark.parametrize("theta, expected", [(1.0, 1.0), (0.25, 0.25), (0.9, 0.81 + 0.01 / 3)])
def test_swapping_examples(theta, expected):
    r = ps.simulate_swapping(bs.isotropic_state(theta), shots=10**6 if theta < 1 else 10_000, seed=SEED)
    assert abs(r.analytic_beta - expected) < 1e-12
    if theta == 1.0:
        assert r.beta_hat == 1.0
    else:
        assert abs(r.beta_hat - expected) <= 3 * r.stderr


def test_swapping_randomization_matters():
    # Without the per-shot W randomization a non-invariant state gives a different rate.
    s = bs.bell_diagonal_state([0.4, 0.6, 0.0, 0.0])
    outcome, succ = ps.swapping_operators()
    two = np.kron(s.data, s.data)
    plain = float(np.einsum("ij,ji->", two, succ.sum(axis=0)).real)
    assert abs(plain - ht.tw_beta(0.4)) > 0.05
    r = ps.simulate_swapping(s, 200_000, seed=3)
    assert r.z_score < 4


@pytest.mark.parametrize("name", ["six-state", "finite-V", "teleport", "swap"])
def test_consistency_over_seeds(name):
    s = bs.bell_diagonal_state([0.75, 0.15, 0.1, 0.0])
    runs = {
        "six-state": lambda seed: _run(disc.discretize_tu(), s, 20_000, seed),
        "finite-V": lambda seed: _run(disc.discretize_tv(), s, 20_000, seed),
        "teleport": lambda seed: ps.simulate_teleportation(s, None, 4_000, seed),
        "swap": lambda seed: ps.simulate_swapping(s, 4_000, seed),
    }[name]
    good = sum(runs(seed).z_score <= 4 for seed in range(100))
    assert good >= 99
