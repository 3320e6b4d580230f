import math
import warnings

import numpy as np
import pytest

import oracles
from fracpq import solver as S
from fracpq.core_grid import ProblemParams, norm_Lm
from fracpq.energy import Integrals, energy, integrals
from fracpq.errors import BracketError, ConfigError, ConvergenceError, SeedingError, ThresholdError
from fracpq.fibering import Fiber
from fracpq.problem import Problem

FAST = S.SolverOptions(restarts=1)


def test_options_validation():
    with pytest.raises(ConfigError):
        S.SolverOptions(step=0.0)
    with pytest.raises(ConfigError):
        S.SolverOptions.from_dict({"stepsize": 1.0})
    assert S.SolverOptions.from_dict({"restarts": 2}, seed=5) == S.SolverOptions(restarts=2, seed=5)
    assert S.SolverOptions.from_dict({"seed": 1}, seed=5).seed == 1


def test_pair_records(solution_pairs, default_prob, lam_half):
    plus, minus = solution_pairs[0]
    assert plus.nehari_class == "Nplus" and minus.nehari_class == "Nminus"
    assert plus.energy < 0 < minus.energy
    for rec in (plus, minus):
        assert rec.residual < 1e-6 and rec.nonnegative
        # independent recomputation of the residual from the double-sum formula
        assert oracles.residual(rec.u, default_prob, lam_half) < 1e-6
        assert rec.diagnostics["distinct"]
    assert plus.diagnostics["bound_lo_derived"] <= plus.diagnostics["norm"] <= plus.diagnostics["bound_hi"]


def test_restart_energies_agree(solution_pairs):
    for plus, minus in solution_pairs.values():
        for rec in (plus, minus):
            assert rec.energy == min(rec.restart_energies)
            assert rec.diagnostics["energy_spread"] <= 1e-8 * abs(rec.energy)


def test_solver_is_deterministic(default_prob, lam_half):
    a = S.solve_Nminus(lam_half, default_prob, FAST)
    b = S.solve_Nminus(lam_half, default_prob, FAST)
    assert np.array_equal(a.u, b.u) and a.energy == b.energy


def test_threaded_restarts_match_sequential(default_prob, lam_half, monkeypatch):
    opts = S.SolverOptions(restarts=2)
    seq = S.solve_Nplus(lam_half, default_prob, opts)
    monkeypatch.setenv("FRACPQ_THREADS", "2")
    par = S.solve_Nplus(lam_half, default_prob, opts)
    assert np.array_equal(seq.u, par.u) and seq.restart_energies == par.restart_energies


def test_even_data_give_even_solution(default_prob, lam_half):
    x = default_prob.grid.coords[:, 0]
    u0 = np.cos(np.pi * x / 2) + 0.3 * np.cos(3 * np.pi * x / 2) ** 2
    lift = lambda v: S.lift_nehari(v, default_prob, lam_half, "Nminus")
    desc = S.projected_descent(lift(u0)[0], default_prob, lam_half, lift, S.SolverOptions())
    assert desc.converged
    np.testing.assert_allclose(desc.w, desc.w[::-1], rtol=1e-9, atol=1e-12)


def test_projection_removes_scale(default_prob, lam_half):
    x = default_prob.grid.coords[:, 0]
    u0 = np.cos(np.pi * x / 2) ** 2
    lift = lambda v: S.lift_nehari(v, default_prob, lam_half, "Nminus")
    a = S.projected_descent(lift(u0)[0], default_prob, lam_half, lift, FAST)
    b = S.projected_descent(lift(5.0 * u0)[0], default_prob, lam_half, lift, FAST)
    np.testing.assert_allclose(a.w, b.w, rtol=1e-8, atol=1e-12)


def test_case2_field_only_has_Nminus(default_prob):
    prob = default_prob.with_weights("-1", "1 - 2*x**2")
    with pytest.raises(SeedingError):
        S.solve_Nplus(1.0, prob, FAST)
    rec = S.solve_Nminus(1.0, prob, FAST)
    assert rec.residual < 1e-6 and rec.nehari_class == "Nminus"


def test_zero_lambda_has_no_Nplus_start(default_prob):
    with pytest.raises(SeedingError):
        S.solve_Nplus(0.0, default_prob, FAST)


def test_iteration_limit_reports_best(default_prob, lam_half):
    with pytest.raises(ConvergenceError) as info:
        S.solve_Nminus(lam_half, default_prob, S.SolverOptions(restarts=1, max_iter=2))
    best = info.value.best
    assert best["residual"] > 0 and len(best["u"]) == default_prob.grid.size


# --- nonnegative representatives -------------------------------------------------------------

def test_nonneg_replace_fixed_point(solution_pairs, default_prob, lam_half):
    plus = solution_pairs[0][0]
    np.testing.assert_allclose(S.nonneg_replace(plus.u, lam_half, default_prob), plus.u, rtol=1e-8)
    np.testing.assert_allclose(S.nonneg_replace(-plus.u, lam_half, default_prob), plus.u, rtol=1e-8)


def test_nonneg_replace_lowers_energy(solution_pairs, default_prob, lam_half):
    u = solution_pairs[0][0].u.copy()
    u[10] = -0.5 * abs(u[10]) - 1e-3
    w = S.nonneg_replace(u, lam_half, default_prob)
    assert np.all(w >= 0)
    assert energy(w, default_prob, lam_half).total <= energy(u, default_prob, lam_half).total


# --- ray maximizer and mountain pass ---------------------------------------------------------

def test_ray_maximizer_on_hand_fiber():
    fib = Fiber(Integrals(P=1.0, Q=0.0, Ia=0.0, Ib=1.0), p=2.0, q=2.0, delta=2.0, r=4.0, beta=0.0, lam=0.0)
    assert math.isclose(S.ray_maximizer(fib), 1.0, rel_tol=1e-12)


def test_ray_maximizer_rejects_unbounded_rays():
    fib = Fiber(Integrals(P=1.0, Q=1.0, Ia=1.0, Ib=-1.0), p=2.5, q=2.0, delta=2.0, r=4.0, beta=1.0, lam=0.1)
    with pytest.raises(BracketError):
        S.ray_maximizer(fib)


def test_mountain_pass_nehari_identity():
    prm = ProblemParams(n=1, s1=0.3, s2=0.2, p=2.0, q=2.0, delta=2.0, r=4.0, lam=0.0, beta=0.0)
    prob = Problem.build(prm, (-1, 1), 32, "1", "1")
    rec = S.solve_mountain_pass_deltaq(0.0, prob, FAST)
    I = integrals(rec.u, prob)
    assert rec.residual < 1e-6 and I.P > 0
    assert math.isclose(rec.energy, (1 / 2 - 1 / 4) * I.P, rel_tol=1e-7)


def test_mountain_pass_needs_delta_equal_q(default_prob):
    with pytest.raises(ConfigError):
        S.solve_mountain_pass_deltaq(1.0, default_prob, FAST)


# --- two solutions and sweeps -----------------------------------------------------------------

def test_warns_above_lambda0(default_prob, default_thresholds):
    lam = 1.2 * default_thresholds.lambda_0
    with pytest.warns(UserWarning, match="lambda_0"):
        try:
            S.two_solutions(lam, default_prob, FAST, default_thresholds)
        except (SeedingError, ConvergenceError):
            pass
    with pytest.raises(ThresholdError) as info:
        S.two_solutions(lam, default_prob, FAST, default_thresholds, strict=True)
    assert info.value.report["lambda_0"] == default_thresholds.lambda_0


def test_critical_refusal(critical_prob, critical_thresholds):
    lam = 1.01 * 8.31
    with pytest.raises(ThresholdError) as info:
        S.two_solutions(lam, critical_prob, FAST, critical_thresholds)
    assert info.value.report["c_infty"] <= 0


def test_distance(default_prob):
    u = np.ones(default_prob.grid.size)
    assert math.isclose(S.distance_L2(u, 0 * u, default_prob), norm_Lm(u, 2, default_prob.grid))


def test_sweep_rows(tmp_path, solution_pairs, default_prob, default_thresholds, lam_half):
    assert S.sweep_lambda([], default_prob) == []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        rows = S.sweep_lambda([lam_half, 3 * default_thresholds.lambda_0], default_prob, S.SolverOptions(),
                              default_thresholds, out_csv=tmp_path / "sweep.csv")
    plus, minus = solution_pairs[0]
    assert rows[0]["theta_plus"] == plus.energy and rows[0]["theta_minus"] == minus.energy
    assert rows[0]["error"] == ""
    lines = (tmp_path / "sweep.csv").read_text().splitlines()
    assert lines[0].split(",") == list(S.SWEEP_COLUMNS) and len(lines) == 3
