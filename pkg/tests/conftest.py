"""Shared fixtures: the default problems, their thresholds and cached solver runs."""

from __future__ import annotations

import warnings

import numpy as np
import pytest

from fracpq.problem import Problem, load_config
from fracpq import solver as S

from oracles import config_path


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by the test")
    config.addinivalue_line("markers", "slow: takes more than a few seconds")


# --- acceptance reporting ----------------------------------------------------------------------

_CRITERIA: dict = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when != "call" and not rep.failed:
        return
    number, title = mark.args
    entry = _CRITERIA.setdefault(number, {"title": title, "passed": True, "details": []})
    if rep.failed:
        entry["passed"] = False
    entry["details"] += [v for k, v in item.user_properties if k == "detail" and v not in entry["details"]]


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        entry = _CRITERIA[number]
        status = "PASS" if entry["passed"] else "FAIL"
        detail = "; ".join(entry["details"])
        terminalreporter.write_line(f"criterion {number:2d} {status}  {entry['title']}" + (f"  [{detail}]" if detail else ""))


# --- problems ----------------------------------------------------------------------------------

@pytest.fixture(scope="session")
def default_cfg():
    return load_config(config_path("default"))


@pytest.fixture(scope="session")
def default_prob(default_cfg):
    return Problem.from_config(default_cfg)


@pytest.fixture(scope="session")
def default_thresholds(default_prob):
    return S.Thresholds.compute(default_prob, 1.0, seed=0)


@pytest.fixture(scope="session")
def lam_half(default_thresholds):
    return 0.5 * default_thresholds.lambda_0


@pytest.fixture(scope="session")
def solution_pairs(default_prob, default_thresholds, lam_half):
    """two_solutions at 0.5 lambda_0 for three seeds, shared by the solver and acceptance tests."""
    pairs = {}
    prob = default_prob.with_params(lam=lam_half)
    for seed in (0, 1, 2):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            pairs[seed] = S.two_solutions(lam_half, prob, S.SolverOptions(seed=seed), default_thresholds)
    return pairs


@pytest.fixture(scope="session")
def critical_prob():
    return Problem.from_config(load_config(config_path("critical")))


@pytest.fixture(scope="session")
def critical_thresholds(critical_prob):
    return S.Thresholds.compute(critical_prob, 1.0, seed=0)


@pytest.fixture(scope="session")
def deltaq_prob():
    return Problem.from_config(load_config(config_path("deltaq")))


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
