import numpy as np
import pytest
from hypothesis import HealthCheck, settings, strategies as st

from loccdetect import bellspace as bs
from loccdetect.qcore import pair_labels, random_density_matrix

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

seeds = st.integers(min_value=0, max_value=2**32 - 1)
unit = st.floats(min_value=0.0, max_value=1.0, allow_nan=False)


def state_from_seed(seed, d=2):
    return random_density_matrix(pair_labels(1, d), np.random.default_rng(seed))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def phi0():
    return bs.max_entangled().projector()


# -- one summary line per acceptance criterion ---------------------------------

_criteria: dict[str, str] = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py::test_criterion_" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    if report.when == "call" or report.outcome != "passed":
        _criteria[name] = "PASS" if report.outcome == "passed" else "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for name in sorted(_criteria):
        terminalreporter.write_line(f"{_criteria[name]}  {name.removeprefix('test_')}")
