"""Named batches of numerical checks, each producing plain serializable records."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from . import bellspace as bs
from . import discretize as disc
from . import groups as grp
from . import hyptests as ht
from . import verify as vf
from .errors import LoccDetectError
from .qcore import Operator, pair_labels, random_density_matrix


@dataclass
class Check:
    name: str
    passed: bool
    measured: object
    tolerance: float | None = None
    expected: object = None
    expected_fail: bool = False
    detail: str = ""

    def as_dict(self) -> dict:
        return _plain(asdict(self))


@dataclass
class SuiteResult:
    suite: str
    checks: list[Check] = field(default_factory=list)
    info: dict = field(default_factory=dict)

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def as_dict(self) -> dict:
        return {
            "suite": self.suite,
            "all_passed": self.all_passed,
            "checks": [c.as_dict() for c in self.checks],
            "info": _plain(self.info),
        }


def _plain(x):
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    if isinstance(x, complex):
        return [x.real, x.imag]
    return x


def _within(name: str, err: float, tol: float, **kw) -> Check:
    return Check(name, bool(err <= tol), float(err), tol, **kw)


def random_states(n: int, d: int = 2, seed: int = 0):
    rng = np.random.default_rng(seed)
    return [random_density_matrix(pair_labels(1, d), rng) for _ in range(n)]


def random_weights(n: int, seed: int = 0):
    rng = np.random.default_rng(seed)
    return [vf.WeightVector(*rng.random(5)) for _ in range(n)]


def states_with_fidelity_at_least(n: int, floor: float, seed: int = 0):
    """Random states mixed toward φ⁰ until ``θ >= floor``."""
    rng = np.random.default_rng(seed)
    ref = ht.reference_projector(2, 1).data
    out = []
    for _ in range(n):
        s = random_density_matrix(bs.PAIR, rng)
        theta = ht.fidelity(s)
        lam = 0.0 if theta >= floor else rng.uniform((floor - theta) / (1 - theta), 1)
        out.append(type(s)(bs.PAIR, (1 - lam) * s.data + lam * ref))
    return out


def _beta_error(test: ht.TwoOutcomeTest, states) -> float:
    worst = 0.0
    for s in states:
        r = ht.error_report(test, s, tol=np.inf)
        worst = max(worst, abs(r.beta_direct - r.beta_formula))
    return worst


# -- suites -------------------------------------------------------------------

def theorem1(seed: int = 0) -> SuiteResult:
    res = SuiteResult("theorem1")
    for d in (2, 3, 4, 5):
        t = ht.build_tu(d)
        res.checks.append(_within(f"beta_Tu_d{d}", _beta_error(t, random_states(100, d, seed + d)), 1e-10))
        res.checks.append(_within(f"trace_Tu_d{d}", abs(t.t0.trace().real - d), 1e-12))
        bound = vf.separable_trace_bound_check(t.t0, d)
        res.checks.append(Check(f"separable_trace_bound_d{d}", bound.satisfied and bound.equality,
                                bound.trace, 1e-10, bound.bound))
    for n in (1, 2, 3):
        t = ht.build_tU(2, n)
        res.checks.append(_within(f"beta_TU_n{n}", _beta_error(t, random_states(100, 2, seed + 10 + n)), 1e-10))
    diag = Operator(bs.PAIR, np.diag([1.0, 0, 0, 1]))
    oct_err = grp.twirl(diag, grp.U_ACTION, grp.OCTAHEDRAL).max_abs_diff(ht.build_tu(2).t0)
    res.checks.append(_within("octahedral_twirl_equals_Tu", oct_err, 1e-12))
    diag2 = Operator(pair_labels(2), np.kron(diag.data, diag.data))
    mc = grp.twirl(diag2, grp.RepresentationAction("U", 2, 2), grp.monte_carlo(100_000, seed))
    res.checks.append(_within("su4_monte_carlo_twirl_equals_TU", mc.max_abs_diff(ht.build_tU(2, 2).t0), 0.02))
    return res


def theorem3(seed: int = 0) -> SuiteResult:
    res = SuiteResult("theorem3")
    p = disc.pi_sum().data
    s = bs.sample_swap().data
    sym = Operator(bs.TWO_PAIRS, (p + s @ p @ s) / 2)
    tw = grp.twirl(sym, grp.V_ACTION, grp.EULER)
    res.checks.append(_within("TV_equals_twirl_of_pi_sum", tw.max_abs_diff(ht.build_tV().t0), 1e-10))
    states = random_states(1000, 2, seed + 100)
    res.checks.append(_within("beta_TV_closed_form", _beta_error(ht.build_tV(), states), 1e-10))
    worst = 0.0
    for st in states[:100]:
        for pair in bs.subspace_traces(st, tol=np.inf).values():
            worst = max(worst, abs(pair.direct - pair.formula))
    res.checks.append(_within("subspace_trace_formulas", worst, 1e-10))
    m = vf.theorem3_mvalues_check(tol=np.inf)
    res.checks.append(_within("m_values_closed_forms", m.max_error, 1e-12))
    resid = max(abs(vf.abc_residual(bs.bell_expression(st).x)
                    + sum(bs.bell_expression(st).x[0, i].imag ** 2 for i in (1, 2, 3))) for st in states[:100])
    res.checks.append(_within("abc_residual_identity", resid, 1e-12))
    return res


def theorem4(seed: int = 0) -> SuiteResult:
    res = SuiteResult("theorem4")
    try:
        rep = vf.theorem4_lp()
        res.checks.append(Check("lp_optima", True, list(rep.optima), None,
                                [e for _, _, e in vf.THEOREM4_PROGRAMS]))
        res.checks.append(Check("induced_accept_weights", True, list(rep.t0_weights), None,
                                list(vf.TV_T0_WEIGHTS)))
        res.info["combined_argmax"] = list(rep.combined_argmax)
        res.info["fourth_objective_over_box_only"] = rep.box_only_fourth
    except LoccDetectError as exc:
        res.checks.append(Check("lp_optima", False, None, detail=str(exc)))
    r_err = lemma_err = 0.0
    alt = []
    for w in random_weights(100, seed + 200):
        r_err = max(r_err, float(np.max(np.abs(vf.r_matrix_direct(w, vf.R_V_PHASE) - vf.r_matrix_symbolic(w)))))
        rep = vf.lemma_ab_inequalities(w, tol=np.inf)
        lemma_err = max(lemma_err, max(abs(q.symbolic - q.direct) for q in rep.quantities))
        alt.append(rep.notes["ab_second_all_equal_bits_vector"])
    res.checks.append(_within("R_matrix_entries", r_err, 1e-10))
    res.checks.append(_within("lemma_sandwich_quantities", lemma_err, 1e-10))
    w0 = vf.WeightVector(*(1 - x for x in vf.TV_T0_WEIGHTS))
    rep0 = vf.lemma_ab_inequalities(w0)
    res.checks.append(Check("lemma_bounds_at_optimum", rep0.all_hold,
                            {q.name: q.symbolic for q in rep0.quantities}))
    w = random_weights(1, seed + 201)[0]
    res.info["R_matrix_with_unit_phase_is_real"] = bool(
        np.max(np.abs(vf.r_matrix_direct(w).imag)) < 1e-12)
    res.info["all_equal_bits_vector_sample"] = alt[0]
    margins = 0.0
    for st in random_states(100, 2, seed + 202):
        pr = vf.theorem4_premise_check(st)
        margins = max(margins, abs(pr.margin_x - pr.margin_traces), abs(pr.k5_margin_x - pr.k5_margin_traces))
    res.checks.append(_within("family_premise_equivalence", margins, 1e-10))
    return res


def theorem5(seed: int = 0) -> SuiteResult:
    res = SuiteResult("theorem5")
    res.checks.append(_within("beta_TW_closed_form",
                              _beta_error(ht.build_tW(), random_states(100, 2, seed + 300)), 1e-10))
    worst = 0.0
    holds = True
    for st in states_with_fidelity_at_least(100, 0.25, seed + 301):
        rep = vf.theorem5_premise_and_M_check(st)
        holds &= rep.holds
        worst = max(worst, rep.identity_error)
    res.checks.append(Check("premise_inequality", holds, holds))
    res.checks.append(_within("premise_factored_identity", worst, 1e-12))
    alt = ht.tw_alternative_t0()
    res.info["alternative_reading_max_diff"] = alt.max_abs_diff(ht.build_tW().t0)
    return res


def discretize(seed: int = 0) -> SuiteResult:
    res = SuiteResult("discretize")
    tu = ht.build_tu(2).t0
    for name, real, target, tol in (
        ("six_state_Tu", disc.discretize_tu(), tu, 1e-12),
        ("octahedral_Tu", disc.discretize_tu_octahedral(), tu, 1e-12),
        ("finite_TV", disc.discretize_tv(), ht.build_tV().t0, 1e-10),
    ):
        res.checks.append(_within(f"{name}_reconstruction", real.reconstructed_t0.max_abs_diff(target), tol,
                                  detail=f"{len(real.branches)} branches"))
    rep = disc.octahedral_weight_check(tol=np.inf)
    res.checks.append(_within("rotated_trace_closed_forms", rep.max_error, 1e-10))
    res.info.update(x_star=rep.x_star, raw_crossing=rep.raw_crossing,
                    per_rank_crossing=rep.per_rank_crossing,
                    raw_values_at_x_star=rep.raw_values_at_x_star,
                    per_rank_values_at_x_star=rep.per_rank_values_at_x_star)
    return res


def ppt(seed: int = 0) -> SuiteResult:
    res = SuiteResult("ppt")
    tests = [ht.build_tg(2), ht.build_tu(2), ht.build_tU(2, 2), ht.build_tG(2, 2),
             ht.build_tuN(2, 2), ht.build_tV(), ht.build_tW()]
    for t in tests:
        expect_fail = t.name in vf.EXPECTED_PPT_FAIL
        for cut in vf.declared_cuts(t):
            r = vf.ppt_check(t, cut)
            ok = (not r.passed) if expect_fail else r.passed
            res.checks.append(Check(f"{t.name}_cut_{'-'.join(r.cut)}", ok,
                                    min(r.min_eig_t0, r.min_eig_t1), vf.PPT_TOL,
                                    expected_fail=expect_fail))
    return res


SUITES: dict[str, Callable[[int], SuiteResult]] = {
    "theorem1": theorem1,
    "theorem3": theorem3,
    "theorem4": theorem4,
    "theorem5": theorem5,
    "discretize": discretize,
    "ppt": ppt,
}


def run_suite(name: str, seed: int = 0) -> list[SuiteResult]:
    if name == "all":
        return [fn(seed) for fn in SUITES.values()]
    return [SUITES[name](seed)]
