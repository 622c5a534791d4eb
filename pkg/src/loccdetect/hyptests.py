"""Two-outcome tests for "the pairs are in φ⁰" and their error probabilities.

``T0`` is the accept element.  For n samples of a state σ on ``A ⊗ B``
the type 1 error is ``α = Tr((|φ⁰⟩⟨φ⁰|)^{⊗n} T1)`` and the type 2 error is
``β = Tr(σ^{⊗n} T0)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache, reduce

import numpy as np

from . import bellspace as bs
from .errors import FormulaMismatch, NoFormula, ShapeMismatch
from .qcore import (
    DensityMatrix,
    Operator,
    expectation,
    identity,
    pair_labels,
    tensor,
    tensor_power,
)

TEST_NAMES = ("Tg", "Tu", "TuN", "TU", "TG", "TV", "TW")
TV_Z = np.array([[6, 7, 7], [7, 6, 7], [7, 7, 6]]) / 15


@dataclass(frozen=True, eq=False)
class TwoOutcomeTest:
    name: str
    t0: Operator
    t1: Operator
    d: int = 2
    n: int = 1

    def __post_init__(self):
        if self.t0.factors != pair_labels(self.n, self.d):
            raise ShapeMismatch(f"{self.name}: t0 must act on {self.n} pair(s) of dimension {self.d}")
        eye = np.eye(self.t0.side)
        if np.max(np.abs(self.t0.data + self.t1.data - eye)) > 1e-12:
            raise ValueError(f"{self.name}: t0 + t1 != I")
        ev = self.t0.eigvalsh()
        if ev[0] < -1e-10 or ev[-1] > 1 + 1e-10:
            raise ValueError(f"{self.name}: t0 eigenvalues leave [0, 1]")
        if abs(self.level_zero_value() - 1) > 1e-10:
            raise ValueError(f"{self.name}: not a level-zero test")

    @classmethod
    def from_t0(cls, name: str, t0: Operator, d: int = 2, n: int = 1) -> "TwoOutcomeTest":
        return cls(name, t0, identity(t0.factors) - t0, d, n)

    def level_zero_value(self) -> float:
        v = reference_ket(self.d, self.n)
        return float(np.vdot(v, self.t0.data @ v).real)

    @property
    def factors(self):
        return self.t0.factors


def reference_ket(d: int = 2, n: int = 1) -> np.ndarray:
    """``|φ⁰⟩^{⊗n}`` as a plain vector in the global ordering."""
    return reduce(np.kron, [bs.max_entangled(d).data] * n)


def reference_projector(d: int = 2, n: int = 1) -> Operator:
    v = reference_ket(d, n)
    return Operator(pair_labels(n, d), np.outer(v, v.conj()))


def _check_size(d: int, n: int) -> None:
    if d < 2 or n < 1:
        raise ValueError("need d >= 2 and n >= 1")


def build_tg(d: int = 2) -> TwoOutcomeTest:
    """Accept exactly on φ⁰ (optimal without locality constraints)."""
    return build_tG(d, 1, name="Tg")


def build_tG(d: int = 2, n: int = 2, name: str = "TG") -> TwoOutcomeTest:
    _check_size(d, n)
    return TwoOutcomeTest.from_t0(name, reference_projector(d, n), d, n)


def build_tu(d: int = 2) -> TwoOutcomeTest:
    _check_size(d, 1)
    p = reference_projector(d, 1)
    return TwoOutcomeTest.from_t0("Tu", p + (identity(p.factors) - p) / (d + 1), d, 1)


def build_tU(d: int = 2, n: int = 1) -> TwoOutcomeTest:
    _check_size(d, n)
    p = reference_projector(d, n)
    t0 = p + (identity(p.factors) - p) / (d**n + 1)
    return TwoOutcomeTest.from_t0("TU" if n > 1 else "Tu", t0, d, n)


def build_tuN(d: int = 2, n: int = 2) -> TwoOutcomeTest:
    """``T0^u`` applied to each sample independently."""
    _check_size(d, n)
    single = build_tu(d).t0
    t0 = tensor_power(single, n) if n > 1 else single
    return TwoOutcomeTest.from_t0("TuN", t0.relabel(pair_labels(n, d)), d, n)


_TV_WEIGHTS = {"K5+": 1 / 10, "L3+": 1 / 3, "K1+": 0.0, "L1+": 1.0, "K3-": 1 / 6, "L3-": 1 / 3}


@lru_cache(maxsize=None)
def build_tV() -> TwoOutcomeTest:
    t0 = sum(w * bs.projector(lab).op.data for lab, w in _TV_WEIGHTS.items())
    return TwoOutcomeTest.from_t0("TV", Operator(bs.TWO_PAIRS, t0), 2, 2)


@lru_cache(maxsize=None)
def build_tW() -> TwoOutcomeTest:
    """``P ⊗ P + (I−P) ⊗ (I−P) / 3`` with ``P = |φ⁰⟩⟨φ⁰|`` on each pair."""
    p = reference_projector(2, 1).data
    q = np.eye(4) - p
    t0 = np.kron(p, p) + np.kron(q, q) / 3
    return TwoOutcomeTest.from_t0("TW", Operator(bs.TWO_PAIRS, t0), 2, 2)


def tw_alternative_t0() -> Operator:
    """``P⊗P + (I − P⊗P)/3``: the other way to read the W-test display."""
    p = reference_projector(2, 2)
    return p + (identity(p.factors) - p) / 3


def build(name: str, d: int = 2, n: int = 1) -> TwoOutcomeTest:
    """Build a test by name; ``Tu2`` is shorthand for ``TuN`` with two samples."""
    if name == "Tu2":
        return build_tuN(2, 2)
    builders = {
        "Tg": lambda: build_tg(d),
        "Tu": lambda: build_tu(d),
        "TuN": lambda: build_tuN(d, n),
        "TU": lambda: build_tU(d, n),
        "TG": lambda: build_tG(d, n),
        "TV": build_tV,
        "TW": build_tW,
    }
    if name not in builders:
        raise KeyError(f"unknown test {name!r}")
    return builders[name]()


def fidelity(sigma: DensityMatrix) -> float:
    """θ = ⟨φ⁰|σ|φ⁰⟩."""
    d = sigma.dims[0]
    if sigma.dims != (d, d):
        raise ShapeMismatch("σ must be a state of one pair")
    v = bs.max_entangled(d).data
    return float(np.vdot(v, sigma.data @ v).real)


def tv_beta(x: np.ndarray) -> float:
    """Closed form of ``Tr(σ⊗σ T0^V)`` from the x-matrix of σ."""
    x = np.asarray(x)
    v = np.diag(x).real[1:] - 0.5
    re2 = x[1, 2].real ** 2 + x[2, 3].real ** 2 + x[3, 1].real ** 2
    return float(v @ TV_Z @ v - 2 * re2 / 15)


def tw_beta(theta: float) -> float:
    return theta**2 + (1 - theta) ** 2 / 3


def beta_formula(test_name: str, d: int, n: int, sigma: DensityMatrix) -> float:
    theta = fidelity(sigma)
    if test_name == "Tg":
        return theta
    if test_name == "Tu":
        return (d * theta + 1) / (d + 1)
    if test_name == "TG":
        return theta**n
    if test_name == "TuN":
        return ((d * theta + 1) / (d + 1)) ** n
    if test_name == "TU":
        return (d**n * theta**n + 1) / (d**n + 1)
    if (d, n) == (2, 2) and test_name == "TV":
        return tv_beta(bs.bell_expression(sigma).x)
    if (d, n) == (2, 2) and test_name == "TW":
        return tw_beta(theta)
    raise NoFormula(f"no closed form for {test_name!r} with d={d}, n={n}")


@dataclass(frozen=True)
class ErrorReport:
    alpha: float
    beta_direct: float
    beta_formula: float | None
    theta: float


def error_report(test: TwoOutcomeTest, sigma: DensityMatrix, tol: float = 1e-10) -> ErrorReport:
    sigma = sigma.relabel(pair_labels(1, test.d))
    samples = tensor_power(sigma, test.n).relabel(test.factors) if test.n > 1 else sigma
    ref = reference_projector(test.d, test.n)
    alpha = float(np.einsum("ij,ji->", ref.data, test.t1.data).real)
    beta = expectation(samples, test.t0)
    try:
        formula = beta_formula(test.name, test.d, test.n, sigma)
    except NoFormula:
        formula = None
    if formula is not None and abs(formula - beta) > tol:
        raise FormulaMismatch(f"{test.name}: direct {beta!r} vs closed form {formula!r}")
    return ErrorReport(alpha, beta, formula, fidelity(sigma))


def asymptotic_terms(d: int, theta: float, n: int) -> tuple[float, float, float]:
    """``(β(T0^U), normalizer, ratio)`` for n samples, from the closed form.

    The normalizer is ``θ^n`` when ``θ >= 1/d`` and ``d^{-n}`` otherwise.  The
    ratio is evaluated in a rearranged form that stays finite for large n.
    """
    if not 0 < theta <= 1:
        raise ValueError("theta must lie in (0, 1]")
    dn = float(d) ** n
    beta = (dn * theta**n + 1) / (dn + 1)
    if theta * d >= 1:
        norm = theta**n
        # (d^n θ^n + 1) / ((d^n + 1) θ^n) = (1 + (dθ)^{-n}) / (1 + d^{-n})
        ratio = (1 + (d * theta) ** (-n)) / (1 + 1 / dn)
    else:
        norm = dn ** -1
        ratio = ((d * theta) ** n + 1) / (1 + 1 / dn)
    return beta, norm, ratio


def asymptotic_ratio(d: int, theta: float, n_max: int) -> list[tuple[int, float]]:
    return [(n, asymptotic_terms(d, theta, n)[2]) for n in range(1, n_max + 1)]


def limit_of_ratio(d: int, theta: float) -> float:
    """Limit of the normalized ratio as n grows; 2 exactly at ``θ = 1/d``."""
    if math.isclose(theta * d, 1.0, rel_tol=0, abs_tol=1e-15):
        return 2.0
    return 1.0
