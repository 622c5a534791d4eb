"""Command-line entry point: ``loccdetect {curves,verify,simulate,asymptotics}``.

Exit codes: 0 success, 1 internal mismatch, 2 a claimed ordering or bound is
violated, 3 usage error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import subprocess
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import bellspace as bs
from . import discretize as disc
from . import hyptests as ht
from . import protosim as ps
from .errors import LoccDetectError
from .suites import SUITES, run_suite

EXIT_OK, EXIT_MISMATCH, EXIT_CLAIM, EXIT_USAGE = 0, 1, 2, 3
DEFAULT_SEED = 20240917
CURVE_TESTS = ("TG", "Tu2", "TU", "TV", "TW")
SIM_TESTS = ("Tu", "Tu-oct", "TV", "teleport", "TW")
ORDERING_FROM = 0.9
# Adjacent pairs of the claimed ordering on the figure-1 family, smallest first.
ORDER_CHAIN = ("TG", "TW", "TU", "TV", "Tu2")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def version_string() -> str:
    try:
        out = subprocess.run(["git", "describe", "--tags", "--always", "--dirty"],
                             cwd=Path(__file__).resolve().parent, capture_output=True,
                             text=True, timeout=5)
        if out.returncode == 0 and out.stdout.strip():
            return out.stdout.strip()
    except (OSError, subprocess.SubprocessError):
        pass
    return f"v{__version__}"


# -- argument parsing helpers ---------------------------------------------------

def parse_grid(text: str) -> list[float]:
    """``start:stop:step`` (inclusive of stop) or a comma list."""
    try:
        if ":" in text:
            start, stop, step = (float(x) for x in text.split(":"))
            if step <= 0:
                raise UsageError("grid step must be positive")
            count = int(math.floor((stop - start) / step + 1e-9)) + 1
            vals = [round(start + k * step, 12) for k in range(max(count, 0))]
        else:
            vals = [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise UsageError(f"bad theta grid {text!r}") from exc
    if not vals or any(not 0 < v <= 1 for v in vals):
        raise UsageError("theta values must lie in (0, 1]")
    return sorted(set(vals))


def parse_shares(text: str) -> tuple[float, float, float]:
    try:
        vals = tuple(float(x) for x in text.split(":"))
    except ValueError as exc:
        raise UsageError(f"bad bell weights {text!r}") from exc
    if len(vals) != 3 or min(vals) < 0 or sum(vals) <= 0:
        raise UsageError("bell weights take three nonnegative shares p:q:r")
    return vals


def family_state(family: str, theta: float, shares=(1, 1, 1), offdiag: float = 0.0):
    if family == "isotropic":
        return bs.isotropic_state(theta)
    if family == "bell_diagonal":
        total = sum(shares)
        return bs.bell_diagonal_state([theta] + [(1 - theta) * s / total for s in shares])
    if family == "figure1":
        return bs.figure1_state(theta, offdiag)
    raise UsageError(f"unknown family {family!r}")


def curve_test(name: str) -> ht.TwoOutcomeTest:
    return {
        "TG": lambda: ht.build_tG(2, 2),
        "Tu2": lambda: ht.build_tuN(2, 2),
        "TU": lambda: ht.build_tU(2, 2),
        "TV": ht.build_tV,
        "TW": ht.build_tW,
    }[name]()


# -- output -------------------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, float):
        return "%.17g" % v
    return "" if v is None else str(v)


def to_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def envelope(command: str, parameters: dict, seed, results) -> dict:
    return {"command": command, "parameters": parameters, "version": version_string(),
            "seed": seed, "results": results}


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _json(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=True) + "\n"


# -- commands -----------------------------------------------------------------

def curve_rows(tests, family: str, grid, shares=(1, 1, 1), offdiag: float = 0.0):
    """Rows ``(theta, test, beta_formula, beta_direct)`` and ordering warnings.

    ``theta`` is the fidelity of the state actually used, which differs from the
    grid value when the figure-1 matrix had to be projected onto the states.
    """
    rows, warnings = [], []
    built = {name: curve_test(name) for name in tests}
    for theta in grid:
        sigma = family_state(family, theta, shares, offdiag)
        realized = ht.fidelity(sigma)
        betas = {}
        for name, t in built.items():
            rep = ht.error_report(t, sigma)
            betas[name] = rep.beta_direct
            rows.append((realized, name, rep.beta_formula, rep.beta_direct))
        if family == "figure1" and theta >= ORDERING_FROM - 1e-12:
            warnings.extend(ordering_violations(realized, betas, offdiag == 0))
    return rows, warnings


def ordering_violations(theta: float, betas: dict, coincide: bool):
    present = [n for n in ORDER_CHAIN if n in betas]
    out = []
    for lo, hi in zip(present, present[1:]):
        if betas[lo] - betas[hi] > 1e-12:
            out.append((theta, f"warning:{lo}<={hi}", betas[lo], betas[hi]))
    if coincide and "TU" in betas and "TV" in betas and abs(betas["TU"] - betas["TV"]) > 1e-10:
        out.append((theta, "warning:TU==TV", betas["TU"], betas["TV"]))
    return out


def cmd_curves(args) -> int:
    tests = [t.strip() for t in args.tests.split(",") if t.strip()]
    bad = [t for t in tests if t not in CURVE_TESTS]
    if bad or not tests:
        raise UsageError(f"--tests must be a subset of {','.join(CURVE_TESTS)}")
    grid = parse_grid(args.theta_grid)
    shares = parse_shares(args.bell_weights)
    rows, warnings = curve_rows(tests, args.family, grid, shares, args.offdiag)
    header = ("theta", "test", "beta_formula", "beta_direct")
    if args.format == "csv":
        _emit(to_csv(header, rows + warnings), args.out)
    else:
        params = {"tests": tests, "family": args.family, "theta_grid": grid,
                  "bell_weights": list(shares), "offdiag": args.offdiag}
        res = {"rows": [dict(zip(header, r)) for r in rows],
               "warnings": [dict(zip(header, r)) for r in warnings]}
        _emit(_json(envelope("curves", params, None, res)), args.out)
    return EXIT_CLAIM if warnings else EXIT_OK


def cmd_verify(args) -> int:
    results = [r.as_dict() for r in run_suite(args.suite, args.seed)]
    ok = all(r["all_passed"] for r in results)
    params = {"suite": args.suite}
    if args.format == "json":
        _emit(_json(envelope("verify", params, args.seed, results)), args.out)
    else:
        rows = [(r["suite"], c["name"], c["passed"], json.dumps(c["measured"]), c["tolerance"],
                 c["expected_fail"]) for r in results for c in r["checks"]]
        _emit(to_csv(("suite", "check", "passed", "measured", "tolerance", "expected_fail"), rows), args.out)
    return EXIT_OK if ok else EXIT_MISMATCH


def run_simulation(test: str, sigma, shots: int, seed: int, workers: int = 1) -> ps.SimulationReport:
    if test == "Tu":
        return ps.simulate(ps.ProtocolRun(disc.discretize_tu(), sigma, shots, seed), workers)
    if test == "Tu-oct":
        return ps.simulate(ps.ProtocolRun(disc.discretize_tu_octahedral(), sigma, shots, seed), workers)
    if test == "TV":
        return ps.simulate(ps.ProtocolRun(disc.discretize_tv(), sigma, shots, seed), workers)
    if test == "teleport":
        return ps.simulate_teleportation(sigma, None, shots, seed, workers)
    if test == "TW":
        return ps.simulate_swapping(sigma, shots, seed, workers=workers)
    raise UsageError(f"unknown protocol {test!r}")


def cmd_simulate(args) -> int:
    if args.shots < 1:
        raise UsageError("--shots must be at least 1")
    if not 0 <= args.theta <= 1:
        raise UsageError("--theta must lie in [0, 1]")
    shares = parse_shares(args.bell_weights)
    sigma = family_state(args.family, args.theta, shares, args.offdiag)
    rep = run_simulation(args.test, sigma, args.shots, args.seed, args.workers)
    params = {"test": args.test, "family": args.family, "theta": args.theta,
              "bell_weights": list(shares), "offdiag": args.offdiag, "shots": args.shots}
    body = {k: getattr(rep, k) for k in rep.__dataclass_fields__}
    if args.format == "json":
        _emit(_json(envelope("simulate", params, args.seed, body)), args.out)
    else:
        _emit(to_csv(tuple(body), [tuple(body.values())]), args.out)
    return EXIT_MISMATCH if rep.z_score > 5 else EXIT_OK


def cmd_asymptotics(args) -> int:
    if not 1 <= args.n_max <= 64:
        raise UsageError("--n-max must lie in 1..64")
    if not 0 < args.theta <= 1:
        raise UsageError("--theta must lie in (0, 1]")
    if args.d < 2:
        raise UsageError("--d must be at least 2")
    rows = [(n, *ht.asymptotic_terms(args.d, args.theta, n)) for n in range(1, args.n_max + 1)]
    header = ("n", "beta", "normalizer", "ratio")
    if args.format == "csv":
        _emit(to_csv(header, rows), args.out)
    else:
        params = {"d": args.d, "theta": args.theta, "n_max": args.n_max}
        res = {"rows": [dict(zip(header, r)) for r in rows],
               "limit": ht.limit_of_ratio(args.d, args.theta)}
        _emit(_json(envelope("asymptotics", params, None, res)), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="loccdetect", description="Local tests for maximally entangled pairs.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, fmt_default):
        sp.add_argument("--out", help="write here instead of stdout")
        sp.add_argument("--format", choices=("csv", "json"), default=fmt_default)

    def family_flags(sp):
        sp.add_argument("--family", choices=("isotropic", "bell_diagonal", "figure1"), default="isotropic")
        sp.add_argument("--bell-weights", default="1:1:1",
                        help="shares p:q:r of 1-theta on the other three Bell states")
        sp.add_argument("--offdiag", type=float, default=0.0,
                        help="common real off-diagonal for the figure1 family")

    c = sub.add_parser("curves", help="beta of each test along a family of states")
    c.add_argument("--tests", default=",".join(CURVE_TESTS))
    c.add_argument("--theta-grid", default="0.9:1:0.01")
    family_flags(c)
    common(c, "csv")
    c.set_defaults(func=cmd_curves)

    v = sub.add_parser("verify", help="run a named batch of numerical checks")
    v.add_argument("--suite", choices=("all", *SUITES), default="all")
    v.add_argument("--seed", type=int, default=0)
    common(v, "json")
    v.set_defaults(func=cmd_verify)

    s = sub.add_parser("simulate", help="Monte Carlo run of a local protocol")
    s.add_argument("--test", choices=SIM_TESTS, default="Tu")
    s.add_argument("--theta", type=float, default=0.7)
    s.add_argument("--shots", type=int, default=100_000)
    s.add_argument("--seed", type=int, default=DEFAULT_SEED)
    s.add_argument("--workers", type=int, default=1)
    family_flags(s)
    common(s, "json")
    s.set_defaults(func=cmd_simulate)

    a = sub.add_parser("asymptotics", help="normalized beta of the U test as samples grow")
    a.add_argument("--d", type=int, default=2)
    a.add_argument("--theta", type=float, default=0.9)
    a.add_argument("--n-max", type=int, default=40)
    common(a, "csv")
    a.set_defaults(func=cmd_asymptotics)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"loccdetect: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (LoccDetectError, np.linalg.LinAlgError) as exc:
        print(f"loccdetect: {exc}", file=sys.stderr)
        return EXIT_MISMATCH
    except ValueError as exc:
        print(f"loccdetect: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
