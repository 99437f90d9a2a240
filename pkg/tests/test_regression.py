import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qregress.errors import PreconditionError
from qregress.regression import (
    IllFitWarning,
    RegressionProblem,
    augmented_matrix,
    augmented_spectrum_check,
    build_sqrtW_A_encoding,
    build_sqrtW_b_state,
    classical_solution,
    kappa_ols,
    residual_diagnostic,
    solve_gls_reg,
    solve_ols_reg,
    solve_ridge,
    solve_wls_reg,
    state_gap,
)
from qregress.block_encoding import encode_data_structure, encoded_block

DELTA = 1e-3
ONES = np.array([1.0, 1.0])


def test_classical_solutions():
    x = classical_solution(RegressionProblem(np.diag([1.0, 0.5]), ONES, 0.25))
    assert np.allclose(x, [0.8, 1.0])
    x = classical_solution(RegressionProblem(np.eye(2), ONES, 1.0, W=np.diag([4.0, 1.0])))
    assert np.allclose(x, [0.8, 0.5])
    x = classical_solution(RegressionProblem(np.eye(2), ONES, 1.0, Omega=np.diag([4.0, 1.0])))
    assert np.allclose(x, [0.2, 0.5])
    x = classical_solution(RegressionProblem(np.diag([1.0, 0.0]), ONES, 1.0))
    assert np.allclose(x, [0.5, 0.0])


def test_ols_example():
    rep = solve_ols_reg(RegressionProblem(np.diag([1.0, 0.5]), ONES, 0.25))
    assert np.allclose(np.abs(rep.quantum_state.amplitudes), [0.62469505, 0.78086881], atol=1e-3)
    assert rep.fidelity >= 1 - DELTA
    assert rep.ledger.counts["A"] > 0 and rep.ledger.counts["L"] > 0


def test_ols_rank_deficient():
    with pytest.warns(IllFitWarning):
        rep = solve_ols_reg(RegressionProblem(np.diag([1.0, 0.0]), ONES, 1.0))
    assert rep.fidelity >= 1 - DELTA
    assert abs(rep.quantum_state.amplitudes[0]) ** 2 >= 1 - DELTA


def test_ols_small_lambda_limit():
    rep = solve_ols_reg(RegressionProblem(np.eye(2), np.array([0.6, 0.8]), 1e-2))
    assert abs(np.vdot(rep.quantum_state.amplitudes, [0.6, 0.8])) ** 2 >= 1 - DELTA


def test_ridge_example():
    rep = solve_ridge(np.diag([1.0, 0.5]), 0.25, ONES)
    assert rep.fidelity >= 1 - DELTA
    assert rep.kappa.kappa == pytest.approx(3.0)
    assert rep.pipeline == "Ridge"
    assert "L" not in rep.ledger.counts


def test_ridge_large_lambda():
    A = np.array([[1.0, 0.2], [0.1, 0.5], [0.3, 0.3]])
    b = np.array([1.0, -1.0, 0.5])
    with pytest.warns(IllFitWarning):
        rep = solve_ridge(A, 25.0, b)
    want = A.T @ b
    assert abs(np.vdot(rep.quantum_state.amplitudes, want / np.linalg.norm(want))) ** 2 >= 0.99


def test_wls_example():
    rep = solve_wls_reg(RegressionProblem(np.eye(2), ONES, 1.0, W=np.diag([4.0, 1.0])))
    assert np.allclose(np.abs(rep.quantum_state.amplitudes), [0.8479983, 0.52999894], atol=1e-3)
    assert rep.kappa.kappa == pytest.approx(3.0)


def test_gls_example():
    with pytest.warns(IllFitWarning):
        rep = solve_gls_reg(RegressionProblem(np.eye(2), ONES, 1.0, Omega=np.diag([4.0, 1.0])))
    assert np.allclose(np.abs(rep.quantum_state.amplitudes), [0.37139068, 0.92847669], atol=1e-3)
    assert any("condition bound 2" in n for n in rep.notes)
    assert rep.prediction.formula_id == "GLS-Thm"
    assert rep.ledger.counts["Omega"] > 0


def test_reduction_chain(rng):
    A = rng.standard_normal((4, 3))
    b = A @ rng.standard_normal(3) + 0.1 * rng.standard_normal(4)
    L = np.eye(3) + 0.1 * rng.standard_normal((3, 3))
    ols = solve_ols_reg(RegressionProblem(A, b, 0.5, L=L))
    wls = solve_wls_reg(RegressionProblem(A, b, 0.5, L=L, W=np.ones(4)))
    gls = solve_gls_reg(RegressionProblem(A, b, 0.5, L=L, Omega=np.eye(4)))
    assert state_gap(ols, wls) <= 1e-8
    assert state_gap(wls, gls) <= 1e-8


def test_sqrtW_encoding():
    A = np.array([[1.0, 2.0], [0.5, -1.0]])
    w = np.array([4.0, 1.0])
    be = build_sqrtW_A_encoding(w, A)
    nf = np.linalg.norm(A)
    assert be.alpha == pytest.approx(2 * nf)
    block = encoded_block(be) / be.alpha
    assert np.allclose(block, np.sqrt(w / 4)[:, None] * A / nf, atol=1e-9)
    plain = encode_data_structure(A)
    assert np.allclose(encoded_block(build_sqrtW_A_encoding(np.ones(2), A)), encoded_block(plain))


def test_sqrtW_state():
    out = build_sqrtW_b_state(np.diag([4.0, 1.0]), ONES)
    assert np.allclose(out.amplitudes, np.array([2.0, 1.0]) / np.sqrt(5))
    assert build_sqrtW_b_state(np.array([16.0, 1.0, 2.0]), np.ones(3)).info["rounds"] == 4
    with pytest.raises(PreconditionError):
        build_sqrtW_b_state(np.array([1.0, 0.0]), ONES)


def test_residual_diagnostic_extremes():
    A = np.array([[1.0], [0.0]])
    inside = RegressionProblem(A, [1.0, 0.0], 1.0, L=np.zeros((1, 1)))
    assert residual_diagnostic(inside) == pytest.approx(0.0, abs=1e-12)
    assert residual_diagnostic(RegressionProblem(A, [0.0, 1.0], 1.0)) == pytest.approx(1.0)


def test_residual_diagnostic_projector(rng):
    A = rng.standard_normal((4, 2))
    b = rng.standard_normal(4)
    M = augmented_matrix(A, np.eye(2), 0.5)
    Q, _ = np.linalg.qr(M[:, :2])
    rhs = np.concatenate([b, np.zeros(2)]) / np.linalg.norm(b)
    want = 1 - np.linalg.norm(Q.T @ rhs) ** 2
    assert residual_diagnostic(RegressionProblem(A, b, 0.5)) == pytest.approx(want)


def test_ill_fit_warning():
    A = np.array([[1.0], [0.0], [0.0]])
    b = np.array([0.5, 1.0, 1.0])
    with pytest.warns(IllFitWarning):
        rep = solve_ols_reg(RegressionProblem(A, b, 1.0))
    assert rep.ill_fit and rep.residual_s >= 0.5
    assert rep.fidelity >= 1 - DELTA


def test_orthogonal_target_refused():
    A = np.array([[1.0], [0.0]])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IllFitWarning)
        with pytest.raises(PreconditionError):
            solve_ols_reg(RegressionProblem(A, [0.0, 1.0], 1.0))


def test_spectrum_check_examples():
    chk = augmented_spectrum_check(np.diag([1.0, 0.0]), np.eye(2), 1.0)
    assert chk.checked and chk.ratio == pytest.approx(np.sqrt(2)) and chk.kappa_bound == pytest.approx(2)
    chk = augmented_spectrum_check(np.zeros((2, 2)), np.eye(2), 4.0)
    assert chk.sigma_max == pytest.approx(2.0)
    chk = augmented_spectrum_check(np.diag([1.0, 0.3]), np.eye(2), 1.0)
    assert chk.kappa_bound == pytest.approx(2.0)


def test_spectrum_check_singular_L():
    chk = augmented_spectrum_check(np.eye(2), np.diag([1.0, 0.0]), 1.0)
    assert not chk.checked and "not positive definite" in chk.notice


def test_problem_validation():
    with pytest.raises(PreconditionError):
        RegressionProblem(np.eye(2), ONES, 0.0)
    with pytest.raises(PreconditionError):
        RegressionProblem(np.eye(2), np.ones(3), 1.0)
    with pytest.raises(PreconditionError):
        RegressionProblem(np.eye(2), ONES, 1.0, W=np.array([1.0, -1.0]))
    with pytest.raises(PreconditionError):
        RegressionProblem(np.eye(2), ONES, 1.0, Omega=np.array([[1.0, 2.0], [2.0, 1.0]]))
    with pytest.raises(PreconditionError):
        solve_ols_reg(RegressionProblem(np.eye(2), ONES, 1.0, L=np.diag([1.0, 0.0])))


def test_report_record_order():
    rec = solve_ridge(np.diag([1.0, 0.5]), 0.25, ONES).as_record()
    assert list(rec) == ["pipeline", "dimensions", "lambda", "kappaReported", "kappaMeasured",
                         "fidelity", "traceDistance", "residualS", "degreesUsed", "oracleCounts",
                         "predictedCost", "wallTime"]
    assert set(rec["oracleCounts"]) == {"A", "L", "Omega", "b"}


def test_kappa_independent_of_sigma_min():
    U, _ = np.linalg.qr(np.random.default_rng(3).standard_normal((3, 3)))
    ks = [kappa_ols(U @ np.diag([1.0, 0.5, s]) @ U.T, np.eye(3), 0.5).kappa for s in (0.1, 1e-6, 0.0)]
    assert max(ks) == pytest.approx(min(ks))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1), st.floats(0.05, 5.0), st.floats(1.1, 10.0))
def test_shrinkage(seed, lam, factor):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((4, 3))
    b = rng.standard_normal(4)
    x1 = classical_solution(RegressionProblem(A, b, lam))
    x2 = classical_solution(RegressionProblem(A, b, lam * factor))
    assert np.linalg.norm(x2) <= np.linalg.norm(x1) + 1e-12


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1), st.floats(0.05, 5.0))
def test_spectrum_bounds_hold(seed, lam):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((4, 3))
    L = np.eye(3) + 0.3 * rng.standard_normal((3, 3))
    if np.linalg.svd(L, compute_uv=False)[-1] < 1e-3:
        return
    chk = augmented_spectrum_check(A, L, lam)
    assert chk.norm_bounds[0] - 1e-9 <= chk.sigma_max <= chk.norm_bounds[1] + 1e-9
    assert chk.ratio <= chk.kappa_bound * (1 + 1e-9)
