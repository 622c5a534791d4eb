"""Numerical checks of the optimality arguments behind the two-pair tests.

Every symbolic quantity here is evaluated twice, once from its closed form and
once from explicit matrices, and the two must agree.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

import numpy as np

from . import bellspace as bs
from . import vertexlp as lp
from .errors import EquivalenceMismatch, LpMismatch, PremiseViolated, SymbolicMismatch
from .hyptests import TwoOutcomeTest
from .qcore import DensityMatrix, HilbertLabel, Operator, partial_transpose

SYMBOLIC_TOL = 1e-10
PPT_TOL = 1e-10

# Cuts (parties on one side of the transpose) at which each test is local.
# n = 1 tests have only the A|B cut.  Fully local tests list every bipartition.
ALL_TWO_PAIR_CUTS = (
    ("A1",), ("B1",), ("A2",), ("B2",), ("B1", "B2"), ("A2", "B2"), ("B1", "A2"),
)
DECLARED_CUTS = {
    "Tu": (("B",),),
    "Tg": (("B",),),
    "TU": (("B1", "B2"),),
    "TG": (("B1", "B2"),),
    "TuN": ALL_TWO_PAIR_CUTS,
    "TV": ALL_TWO_PAIR_CUTS,
    "TW": (("B1", "B2"), ("A2", "B2")),
}
# Tests whose declared cuts are expected to fail (not implementable locally).
EXPECTED_PPT_FAIL = {"Tg", "TG"}


# -- separability trace bound ------------------------------------------------

@dataclass(frozen=True)
class TraceBoundReport:
    trace: float
    bound: int
    satisfied: bool
    equality: bool


def separable_trace_bound_check(t0: Operator, d: int, tol: float = 1e-10) -> TraceBoundReport:
    """Locally implementable level-zero accept elements have ``Tr T0 >= d``."""
    tr = float(t0.trace().real)
    return TraceBoundReport(tr, d, tr >= d - tol, abs(tr - d) <= tol)


# -- PPT ----------------------------------------------------------------------

@dataclass(frozen=True)
class PptReport:
    test: str
    cut: tuple[str, ...]
    min_eig_t0: float
    min_eig_t1: float
    passed: bool


def _cut_names(cut: Iterable) -> tuple[str, ...]:
    return tuple(c.name if isinstance(c, HilbertLabel) else str(c) for c in cut)


def ppt_check(t: TwoOutcomeTest, cut: Iterable, tol: float = PPT_TOL) -> PptReport:
    names = _cut_names(cut)
    e0 = float(partial_transpose(t.t0, names).eigvalsh()[0])
    e1 = float(partial_transpose(t.t1, names).eigvalsh()[0])
    return PptReport(t.name, names, e0, e1, e0 >= -tol and e1 >= -tol)


def declared_cuts(t: TwoOutcomeTest) -> tuple[tuple[str, ...], ...]:
    if t.name == "TU" and t.n == 1:
        return DECLARED_CUTS["Tu"]
    return DECLARED_CUTS[t.name]


# -- weights on T1 ------------------------------------------------------------

WEIGHT_LABELS = ("K5+", "L3+", "K1+", "K3-", "L3-")


@dataclass(frozen=True)
class WeightVector:
    """Weights of ``T1`` on ``K5+, L3+, K1+, K3-, L3-`` (``L1+`` carries 0)."""

    w1: float
    w2: float
    w3: float
    w4: float
    w5: float

    def __post_init__(self):
        for i, v in enumerate(self.as_tuple(), 1):
            if not 0 <= v <= 1:
                raise ValueError(f"w{i} = {v} is outside [0, 1]")

    def as_tuple(self) -> tuple:
        return (self.w1, self.w2, self.w3, self.w4, self.w5)

    def t1(self) -> Operator:
        data = sum(float(w) * bs.projector(lab).op.data for w, lab in zip(self.as_tuple(), WEIGHT_LABELS))
        return Operator(bs.TWO_PAIRS, data)


def _basis16(bits: str) -> np.ndarray:
    v = np.zeros(16, dtype=complex)
    v[int(bits, 2)] = 1
    return v


def _sandwich(x: np.ndarray, a: np.ndarray, b: np.ndarray | None = None) -> complex:
    b = a if b is None else b
    return complex(np.vdot(a, x @ b))


# Sandwich vectors used to read off constraints from partial transposes.
R_U = bs.pair_product(0, 0)
R_V = (5 * bs.pair_product(1, 1) - bs.pair_product(2, 2) - bs.pair_product(3, 3)) / (3 * np.sqrt(3))
# With R_V multiplied by this phase the off-diagonal entry comes out as
# -5i(w2-w5)/(6√3); with R_V as written it is the real number -5(w2-w5)/(6√3).
# The phase changes no determinant or positivity statement.
R_V_PHASE = 1j

AB_VEC_1 = (_basis16("0101") - _basis16("1010")) / np.sqrt(2)
AB_VEC_2 = (_basis16("0110") - _basis16("1001")) / np.sqrt(2)
# The all-equal-bits vector gives a different combination of the weights.
AB_VEC_2_ALT = (_basis16("0000") - _basis16("1111")) / np.sqrt(2)
SAMPLE_VEC = bs.pair_product(0, 2)


def r_matrix_direct(w: WeightVector, v_phase: complex = 1.0) -> np.ndarray:
    x = partial_transpose(w.t1(), ("A2", "B2")).data
    u, v = R_U, v_phase * R_V
    return np.array([[_sandwich(x, u), _sandwich(x, u, v)],
                     [_sandwich(x, v, u), _sandwich(x, v)]])


def r_matrix_symbolic(w: WeightVector) -> np.ndarray:
    w1, w2, w3, w4, w5 = w.as_tuple()
    off = 5j * (w2 - w5) / (6 * np.sqrt(3))
    return np.array([[0, -off], [off, (17 * w1 + 9 * w3 + w4) / 27]])


def r_matrix_determinant(w: WeightVector) -> float:
    return -25 / 108 * (w.w2 - w.w5) ** 2


def lemma_R_matrix(w: WeightVector, tol: float = SYMBOLIC_TOL) -> np.ndarray:
    """Sandwich matrix of ``pt_{A2B2}(T1)`` on ``{u, v}``; positivity forces ``w2 = w5``."""
    r = r_matrix_direct(w, R_V_PHASE)
    err = float(np.max(np.abs(r - r_matrix_symbolic(w))))
    if err > tol:
        raise SymbolicMismatch(f"R matrix differs from its closed form by {err:.3g}")
    det = float(np.linalg.det(r).real)
    if abs(det - r_matrix_determinant(w)) > tol:
        raise SymbolicMismatch(f"det R = {det!r}, closed form {r_matrix_determinant(w)!r}")
    return r


@dataclass(frozen=True)
class ConstraintQuantity:
    name: str
    symbolic: float
    direct: float
    lower: float
    upper: float

    @property
    def holds(self) -> bool:
        return self.lower - 1e-12 <= self.symbolic <= self.upper + 1e-12


@dataclass(frozen=True)
class ConstraintReport:
    quantities: tuple[ConstraintQuantity, ...]
    notes: dict = field(default_factory=dict)

    @property
    def all_hold(self) -> bool:
        return all(q.holds for q in self.quantities)

    def __getitem__(self, name: str) -> ConstraintQuantity:
        return next(q for q in self.quantities if q.name == name)


def lemma_ab_inequalities(w: WeightVector, tol: float = SYMBOLIC_TOL) -> ConstraintReport:
    """Partial-transpose sandwiches of ``T1`` that bound combinations of weights.

    Positivity of ``pt(T0) = pt(I) - pt(T1)`` and of ``pt(T1)`` keeps each
    quantity inside ``[0, 1]``.
    """
    w1, w2, w3, w4, w5 = w.as_tuple()
    t1 = w.t1()
    ab = partial_transpose(t1, ("B1", "B2")).data
    b2 = partial_transpose(t1, ("B2",)).data
    rows = [
        ("ab_first", (10 * w1 + 6 * w2 - w3) / 12, _sandwich(ab, AB_VEC_1).real),
        ("ab_second", (w3 + 2 * (w4 + w5)) / 4, _sandwich(ab, AB_VEC_2).real),
        ("sample", 0.75 * (w2 + w5), _sandwich(b2, SAMPLE_VEC).real),
    ]
    out = []
    for name, sym, direct in rows:
        if abs(sym - direct) > tol:
            raise SymbolicMismatch(f"{name}: closed form {sym!r} vs sandwich {direct!r}")
        out.append(ConstraintQuantity(name, float(sym), float(direct), 0.0, 1.0))
    alt = _sandwich(ab, AB_VEC_2_ALT).real
    return ConstraintReport(tuple(out), {"ab_second_all_equal_bits_vector": float(alt)})


# -- the linear program -------------------------------------------------------

F = Fraction


def _row(coeffs, bound, relation="<=", name=""):
    return lp.Constraint(tuple(F(c) for c in coeffs), F(bound), relation, name)


V1 = lp.ConstraintSet("v1", (
    _row((10, 6, -1, 0, 0), 12, name="(10w1+6w2-w3)/12 <= 1"),
    _row((-10, -6, 1, 0, 0), 0, name="(10w1+6w2-w3)/12 >= 0"),
))
V2 = lp.ConstraintSet("v2", (
    _row((0, 0, 1, 2, 2), 4, name="(w3+2w4+2w5)/4 <= 1"),
    _row((0, 0, -1, -2, -2), 0, name="(w3+2w4+2w5)/4 >= 0"),
))
V3 = lp.ConstraintSet("v3", (_row((0, 1, 0, 0, -1), 0, "==", "w2 = w5"),))
V4 = lp.ConstraintSet("v4", (
    _row((0, 3, 0, 0, 3), 4, name="3(w2+w5)/4 <= 1"),
    _row((0, -3, 0, 0, -3), 0, name="3(w2+w5)/4 >= 0"),
))
BOX = lp.box(5)

# (objective, constraint set, expected optimum).  The fourth objective is
# bounded by 12 only once the locality constraints are imposed; over the bare
# box its maximum is 15.
THEOREM4_PROGRAMS = (
    ((5, 3, 0, 0, 0), BOX + V1, F(13, 2)),
    ((0, 1, 0, 0, 0), BOX + V3 + V4, F(2, 3)),
    ((0, 0, 1, 0, 0), BOX + V1 + V2, F(1)),
    ((5, 3, 1, 3, 3), BOX + V1 + V2 + V3 + V4, F(12)),
    ((0, 0, 0, 0, 1), BOX + V3 + V4, F(2, 3)),
)
TV_T0_WEIGHTS = (F(1, 10), F(1, 3), F(0), F(1, 6), F(1, 3))


@dataclass(frozen=True)
class LpReport:
    optima: tuple[Fraction, ...]
    argmaxes: tuple[tuple[Fraction, ...], ...]
    combined_argmax: tuple[Fraction, ...]
    t0_weights: tuple[Fraction, ...]
    box_only_fourth: Fraction


def theorem4_lp() -> LpReport:
    """Solve the five programs exactly and find a vertex optimal for all of them."""
    sols = [lp.maximize(obj, cons, 5) for obj, cons, _ in THEOREM4_PROGRAMS]
    optima = tuple(s.value for s in sols)
    expected = tuple(e for _, _, e in THEOREM4_PROGRAMS)
    if optima != expected:
        raise LpMismatch(f"optima {optima} differ from {expected}")
    full = BOX + V1 + V2 + V3 + V4
    common = [
        v for v in lp.vertices(full, 5)
        if all(sum(F(c) * x for c, x in zip(obj, v)) == e for obj, _, e in THEOREM4_PROGRAMS)
    ]
    if not common:
        raise LpMismatch("no feasible vertex attains all five optima")
    best = common[0]
    t0 = tuple(1 - x for x in best)
    if t0 != TV_T0_WEIGHTS:
        raise LpMismatch(f"induced accept weights {t0} differ from {TV_T0_WEIGHTS}")
    box_only = lp.maximize((5, 3, 1, 3, 3), BOX, 5).value
    return LpReport(optima, tuple(s.argmax for s in sols), best, t0, box_only)


# -- the state family and its weight transform -----------------------------

WEIGHT_TRANSFORM = np.array([
    [3, -9, 0, 0, 0],
    [0, 15, 0, 0, 0],
    [0, 0, 15, 0, 0],
    [-5, 0, -5, 5, -15],
    [0, 0, 0, 0, 15],
]) / 15
WEIGHT_TRANSFORM_INVERSE = np.array([
    [5, 3, 0, 0, 0],
    [0, 1, 0, 0, 0],
    [0, 0, 1, 0, 0],
    [5, 3, 1, 3, 3],
    [0, 0, 0, 0, 1],
])


def family_margin_x(x: np.ndarray) -> float:
    """Left minus right side of the x-coordinate membership inequality."""
    d = np.diag(x).real
    pairs = ((1, 2), (1, 3), (2, 3))
    spread = 0.5 * sum((d[i] - d[j]) ** 2 for i, j in pairs)
    mod = 3 * sum(abs(x[i, j]) ** 2 for i, j in pairs)
    im = 4 * sum(x[i, j].imag ** 2 for i, j in pairs)
    return float(spread + mod - im)


def family_margin_traces(traces: dict) -> float:
    return float(3 * traces["K1+"] - traces["K3-"])


def _traces(sigma: DensityMatrix) -> dict[str, float]:
    return bs.direct_traces(sigma, bs.PARTITION)


@dataclass(frozen=True)
class PremiseReport:
    theta: float
    member: bool
    margin_x: float
    margin_traces: float
    k5_margin_x: float
    k5_margin_traces: float
    v: tuple[float, ...]
    v_prime: tuple[float, ...]
    v_prime_nonnegative: bool


def theorem4_premise_check(sigma: DensityMatrix, vartheta: float = 0.0,
                           tol: float = SYMBOLIC_TOL) -> PremiseReport:
    if not 0 <= vartheta <= 1:
        raise ValueError("vartheta must lie in [0, 1]")
    x = bs.bell_expression(sigma).x
    tr = _traces(sigma)
    mx, mt = family_margin_x(x), family_margin_traces(tr)
    if abs(mx - mt) > tol:
        raise EquivalenceMismatch(f"membership margins disagree: {mx!r} vs {mt!r}")
    d = np.diag(x).real
    pairs = ((1, 2), (2, 3), (3, 1))
    a1_x = (sum((d[i] - d[j]) ** 2 for i, j in pairs)
            + 4 * sum(x[i, j].imag ** 2 for i, j in pairs)
            + 6 * sum(abs(x[i, j]) ** 2 for i, j in pairs))
    a1_tr = 3 * tr["K5+"] - 5 * tr["K3-"]
    if abs(a1_x - a1_tr) > tol:
        raise EquivalenceMismatch(f"K5+ margin: {a1_x!r} vs {a1_tr!r}")
    v = np.array([tr[lab] for lab in WEIGHT_LABELS])
    vp = WEIGHT_TRANSFORM.T @ v
    theta = float(x[0, 0].real)
    member = theta >= vartheta and mx >= -tol and mt >= -tol
    return PremiseReport(theta, member, mx, mt, float(a1_x), float(a1_tr),
                         tuple(v), tuple(vp), bool(np.all(vp >= -1e-12)))


def state_family_member(sigma: DensityMatrix, vartheta: float = 0.0) -> bool:
    return theorem4_premise_check(sigma, vartheta).member


# -- Jensen argument for the V test -------------------------------------------

def psi_f(f: float) -> np.ndarray:
    """``√F|0⟩ + √(1−F)|1⟩`` (normalized)."""
    return np.array([np.sqrt(f), np.sqrt(1 - f)], dtype=complex)


def m_closed_forms(f: float) -> dict[str, float]:
    return {
        "K5+": (f * f - f + 1) / 6,
        "L3+": f / 2,
        "K1+": (2 * f - 1) ** 2 / 12,
        "L1+": 0.25,
        "K3-": f * (1 - f) / 2,
        "L3-": (1 - f) / 2,
    }


def m_direct(f: float, label: str) -> float:
    zero = np.array([1, 0], dtype=complex)
    p = psi_f(f)
    vec = np.kron(np.kron(zero, zero), np.kron(p, p))
    return float(_sandwich(bs.projector(label).op.data, vec).real)


@dataclass(frozen=True)
class MValuesReport:
    grid: tuple[float, ...]
    max_error: float
    jensen_weight_sum: float
    jensen_first_moment: float
    jensen_second_moment: float
    jensen_lower_bound: float


def theorem3_mvalues_check(grid=None, tol: float = 1e-12) -> MValuesReport:
    grid = tuple(np.round(np.linspace(0, 1, 11), 12)) if grid is None else tuple(grid)
    worst = 0.0
    for f in grid:
        closed = m_closed_forms(f)
        for lab in bs.PARTITION:
            err = abs(m_direct(f, lab) - closed[lab])
            worst = max(worst, err)
            if err > tol:
                raise SymbolicMismatch(f"m({lab}) at F={f}: error {err:.3g}")
    q = np.ones(4)
    fs = np.full(4, 0.5)
    weight_sum = q.sum() / 4
    first = float(q @ fs)
    second = float(q @ fs**2)
    lower = 4 * float((q / 4) @ fs) ** 2
    if abs(weight_sum - 1) > tol or abs(first - 2) > tol or abs(second - lower) > tol:
        raise SymbolicMismatch("F = 1/2, q = 1 does not meet the moment constraints")
    return MValuesReport(grid, worst, weight_sum, first, second, lower)


def abc_coefficients(x: np.ndarray) -> tuple[float, float, float]:
    """Quadratic coefficients of β in F as they are usually written down."""
    d = np.diag(x).real
    pairs = ((1, 2), (2, 3), (3, 1))
    re2 = sum(x[i, j].real ** 2 for i, j in pairs)
    im0 = sum(x[0, i].imag ** 2 for i in range(1, 4))
    a = sum((d[i] - d[j]) ** 2 for i, j in pairs) / 15 + 0.4 * re2
    b = -a + im0 / 6
    v0 = d[1:] - 0.5
    z0 = np.array([[4, 3, 3], [3, 4, 3], [3, 3, 4]]) / 30
    c = -im0 / 3 + re2 / 15 + v0 @ z0 @ v0
    return float(a), float(b), float(c)


def abc_residual(x: np.ndarray) -> float:
    """``a + 2b + 4c`` minus the V-test β; equals ``-Σ (Im x_0i)^2``."""
    from .hyptests import tv_beta

    a, b, c = abc_coefficients(x)
    return a + 2 * b + 4 * c - tv_beta(x)


# -- the W test ---------------------------------------------------------------

W_WEIGHT_TRANSFORM = np.array([[1, -2], [0, 3]]) / 3
W_WEIGHT_TRANSFORM_INVERSE = np.array([[3, 2], [0, 1]])


@dataclass(frozen=True)
class WPremiseReport:
    theta: float
    lhs: float
    rhs: float
    holds: bool
    factored: float
    identity_error: float
    v: tuple[float, float]
    v_prime: tuple[float, float]
    v_prime_nonnegative: bool


def theorem5_premise_and_M_check(sigma: DensityMatrix, tol: float = 1e-12) -> WPremiseReport:
    x = bs.bell_expression(sigma).x
    theta = float(x[0, 0].real)
    if theta < 0.25 - tol:
        raise PremiseViolated(f"θ = {theta} is below 1/4")
    tr = _traces(sigma)
    v1 = tr["K5+"] + tr["K1+"] + tr["K3-"]
    v2 = tr["L3+"] + tr["L3-"]
    lhs, rhs = v1 / 9, v2 / 6
    s = float(np.trace(x).real - theta)
    factored = (theta - s / 3) * s / 3
    v = np.array([v1, v2])
    vp = W_WEIGHT_TRANSFORM.T @ v
    return WPremiseReport(theta, lhs, rhs, lhs <= rhs + tol, factored,
                          abs((rhs - lhs) - factored), (v1, v2), tuple(vp),
                          bool(np.all(vp >= -tol)))
