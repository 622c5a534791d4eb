"""Seeded Monte Carlo runs of the local measurement protocols.

Shots are grouped in fixed-size blocks.  Block ``b`` draws from its own Philox
stream keyed by ``(seed, b)``, so a shot's randomness depends only on the seed
and its index, never on how blocks are scheduled.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from . import bellspace as bs
from .discretize import FiniteRealization
from .groups import haar_su2_batch
from .hyptests import beta_formula, tw_beta
from .qcore import (
    DensityMatrix,
    HilbertLabel,
    Ket,
    Operator,
    pair_labels,
    partial_trace,
    permute_factors,
    tensor,
    tensor_power,
)

BLOCK = 16384


def block_rng(seed: int, block: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(block,))
    return np.random.Generator(np.random.Philox(ss))


def _count_accepts(shots: int, seed: int, fn: Callable[[np.random.Generator, int], int],
                   workers: int = 1) -> int:
    jobs = [(b, min(BLOCK, shots - b * BLOCK)) for b in range(math.ceil(shots / BLOCK))]
    run = lambda job: int(fn(block_rng(seed, job[0]), job[1]))
    if workers <= 1:
        return sum(run(j) for j in jobs)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return sum(pool.map(run, jobs))


@dataclass(frozen=True)
class SimulationReport:
    protocol: str
    shots: int
    seed: int
    accept_count: int
    beta_hat: float
    stderr: float
    analytic_beta: float
    z_score: float


def make_report(protocol: str, count: int, shots: int, seed: int, analytic: float) -> SimulationReport:
    beta_hat = count / shots
    stderr = math.sqrt(beta_hat * (1 - beta_hat) / shots)
    diff = abs(beta_hat - analytic)
    if diff <= 1e-12:
        z = 0.0
    elif stderr == 0:
        z = math.inf
    else:
        z = diff / stderr
    return SimulationReport(protocol, shots, seed, count, beta_hat, stderr, float(analytic), z)


@dataclass(frozen=True, eq=False)
class ProtocolRun:
    realization: FiniteRealization
    sigma: DensityMatrix
    shots: int
    seed: int = 0

    def __post_init__(self):
        if self.shots < 1:
            raise ValueError("shots must be at least 1")
        if self.sigma.dims != (2, 2):
            raise ValueError("sigma must be a state of one qubit pair")


def _inverse_cdf(cdf: np.ndarray, u: np.ndarray) -> np.ndarray:
    idx = np.searchsorted(cdf, u * cdf[-1], side="right")
    return np.minimum(idx, len(cdf) - 1)


def _row_inverse_cdf(prob: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Sample one column per row of an (unnormalized) probability table."""
    cdf = np.cumsum(prob, axis=1)
    idx = (cdf <= (u * cdf[:, -1])[:, None]).sum(axis=1)
    return np.minimum(idx, prob.shape[1] - 1)


def simulate(run: ProtocolRun, workers: int = 1) -> SimulationReport:
    """Pick a branch per shot, sample the joint local outcome by the Born rule, test it."""
    real = run.realization
    n = real.n_pairs
    sigma = run.sigma.relabel(bs.PAIR)
    rho = tensor_power(sigma, n).data if n > 1 else sigma.data
    branch_cdf = np.cumsum([b.probability for b in real.branches])
    outcome_probs = np.array([b.outcome_probabilities(rho) for b in real.branches])
    masks = np.array([b.accept_mask() for b in real.branches])

    def block(rng: np.random.Generator, k: int) -> int:
        br = _inverse_cdf(branch_cdf, rng.random(k))
        out = _row_inverse_cdf(outcome_probs[br], rng.random(k))
        return int(masks[br, out].sum())

    count = _count_accepts(run.shots, run.seed, block, workers)
    analytic = beta_formula(real.target, 2, n, sigma)
    return make_report(f"{real.target}-finite", count, run.shots, run.seed, analytic)


# -- teleportation ------------------------------------------------------------

def _bell_corrections() -> np.ndarray:
    """Unitaries ``C_k`` undoing outcome ``k`` when the resource is exactly φ⁰.

    Projecting ``A' A`` of ``|ψ⟩_{A'} |φ⁰⟩_{AB}`` onto φ^k leaves ``K_k ψ / 2``
    on B with ``K_k`` unitary; the correction is ``K_k†``.
    """
    b = bs.bell_basis().matrix()
    phi0 = b[:, 0].reshape(2, 2)
    out = []
    for k in range(4):
        bk = b[:, k].reshape(2, 2)  # [a', a]
        kk = 2 * np.einsum("pa,ab->bp", bk.conj(), phi0)
        out.append(kk.conj().T)
    out = np.array(out)
    if np.max(np.abs(np.einsum("kij,kil->kjl", out.conj(), out) - np.eye(2))) > 1e-12:
        raise RuntimeError("teleportation corrections are not unitary")
    return out


TELEPORT_CORRECTIONS = _bell_corrections()


def teleportation_fidelity_exact(sigma: DensityMatrix, input_ket) -> float:
    """Success probability for a fixed input, by explicit states and partial traces."""
    aux = HilbertLabel("A'", 2)
    psi = Ket((aux,), np.asarray(input_ket, dtype=complex))
    joint = tensor(psi.projector(), sigma.relabel(bs.PAIR))
    b = bs.bell_basis().matrix()
    total = 0.0
    for k in range(4):
        pk = np.kron(np.outer(b[:, k], b[:, k].conj()), np.eye(2))
        post = Operator(joint.factors, pk @ joint.data @ pk)
        bob = partial_trace(post, ["A'", "A"]).data
        c = TELEPORT_CORRECTIONS[k]
        total += float(np.vdot(psi.data, c @ bob @ c.conj().T @ psi.data).real)
    return total


def _teleport_block(sigma: np.ndarray, fixed: np.ndarray | None):
    s4 = sigma.reshape(2, 2, 2, 2)
    sigma_a = np.einsum("abcb->ac", s4)
    b = bs.bell_basis().matrix()
    bmat = np.array([b[:, k].reshape(2, 2) for k in range(4)])  # [k, a', a]

    def block(rng: np.random.Generator, k: int) -> int:
        if fixed is None:
            psi = haar_su2_batch(rng, k)[:, :, 0]
        else:
            psi = np.broadcast_to(fixed, (k, 2))
        chi = np.einsum("kpa,np->nka", bmat.conj(), psi)          # B_k† ψ
        xi = np.einsum("kji,nj->nki", TELEPORT_CORRECTIONS.conj(), psi)  # C_k† ψ
        prob = np.einsum("nka,ac,nkc->nk", chi, sigma_a, chi.conj()).real
        y = np.einsum("nka,nkb->nkab", chi.conj(), xi).reshape(k, 4, 4)
        succ = np.einsum("nki,ij,nkj->nk", y.conj(), sigma, y).real
        outcome = _row_inverse_cdf(prob, rng.random(k))
        rows = np.arange(k)
        ratio = succ[rows, outcome] / np.maximum(prob[rows, outcome], 1e-300)
        return int((rng.random(k) < ratio).sum())

    return block


def simulate_teleportation(sigma: DensityMatrix, input_ket=None, shots: int = 100_000,
                           seed: int = 0, workers: int = 1) -> SimulationReport:
    """Teleport through σ and check the output against the input.

    With ``input_ket=None`` each shot uses a fresh Haar-random input and the
    success rate estimates the ``Tu`` type 2 error.  A fixed input is compared
    with :func:`teleportation_fidelity_exact`.
    """
    sigma = sigma.relabel(bs.PAIR)
    fixed = None if input_ket is None else Ket((HilbertLabel("A'", 2),), input_ket).data
    count = _count_accepts(shots, seed, _teleport_block(sigma.data, fixed), workers)
    if fixed is None:
        analytic = beta_formula("Tu", 2, 1, sigma)
    else:
        analytic = teleportation_fidelity_exact(sigma, fixed)
    return make_report("teleportation", count, shots, seed, analytic)


# -- entanglement swapping ------------------------------------------------------

@lru_cache(maxsize=None)
def swapping_operators() -> tuple[np.ndarray, np.ndarray]:
    """Per Bell outcome ``k`` on ``A1 A2``: the outcome effect and the
    outcome-and-success effect, both on ``A1 B1 A2 B2``.

    Success means the corrected ``B1 B2`` state is found in φ⁰.
    """
    b = bs.bell_basis().matrix()
    order = pair_labels(2)
    measured = (order[0], order[2], order[1], order[3])  # A1 A2 B1 B2
    phi0 = b[:, 0]
    outcome, success = [], []
    for k in range(4):
        m = b[:, k].conj().reshape(2, 2)
        corr = np.linalg.inv(m).T
        corr = corr / np.sqrt(abs(np.linalg.det(corr)))
        target = np.kron(np.eye(2), corr.conj().T) @ phi0
        pk = np.outer(b[:, k], b[:, k].conj())
        ok = np.outer(target, target.conj())
        outcome.append(permute_factors(Operator(measured, np.kron(pk, np.eye(4))), order).data)
        success.append(permute_factors(Operator(measured, np.kron(pk, ok)), order).data)
    return np.array(outcome), np.array(success)


def _pair_expectations(sig1: np.ndarray, sig2: np.ndarray, ops: np.ndarray) -> np.ndarray:
    """``Tr((σ1 ⊗ σ2) X_m)`` for stacked pair states and operators ``X_m``."""
    n = sig1.shape[0]
    m = ops.shape[0]
    x = ops.reshape(m, 4, 4, 4, 4)  # [m, j, l, i, k]: rows (j, l), cols (i, k)
    xr = x.transpose(4, 2, 0, 1, 3).reshape(16, m * 16)  # [(k, l), (m, j, i)]
    t = (sig2.reshape(n, 16) @ xr).reshape(n, m, 4, 4)
    return np.einsum("nij,nmji->nm", sig1, t).real


def _swap_block(sigma: np.ndarray, randomize: bool):
    outcome_ops, success_ops = swapping_operators()
    ops = np.concatenate([outcome_ops, success_ops])

    def rotated(rng, k):
        if not randomize:
            return np.broadcast_to(sigma, (k, 4, 4))
        g = haar_su2_batch(rng, k)
        u = np.einsum("nij,nkl->nikjl", g, g.conj()).reshape(k, 4, 4)
        return u @ sigma @ u.conj().transpose(0, 2, 1)

    def block(rng: np.random.Generator, k: int) -> int:
        s1 = rotated(rng, k)
        s2 = rotated(rng, k)
        vals = _pair_expectations(s1, s2, ops)
        prob, succ = vals[:, :4], vals[:, 4:]
        outcome = _row_inverse_cdf(prob, rng.random(k))
        rows = np.arange(k)
        ratio = succ[rows, outcome] / np.maximum(prob[rows, outcome], 1e-300)
        return int((rng.random(k) < ratio).sum())

    return block


def simulate_swapping(sigma: DensityMatrix, shots: int = 100_000, seed: int = 0,
                      randomize: bool = True, workers: int = 1) -> SimulationReport:
    """Swap entanglement from two copies of σ onto ``B1 B2`` and test for φ⁰.

    Each shot first applies an independent random ``g ⊗ ḡ`` to each pair (the
    W randomization), after which the success rate estimates the ``TW`` type
    2 error for every σ, not only for W-invariant ones.
    """
    sigma = sigma.relabel(bs.PAIR)
    count = _count_accepts(shots, seed, _swap_block(sigma.data, randomize), workers)
    return make_report("swapping", count, shots, seed, tw_beta(beta_formula("Tg", 2, 1, sigma)))
