import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.polynomial import chebyshev as C

from qregress.block_encoding import encode_exact, encoded_block
from qregress.errors import AdmissibilityError, PrecisionError, PreconditionError
from qregress.linalg import spectral_norm
from qregress.poly import ApproxPolynomial, chebyshev_grid, inversion_poly, sign_poly
from qregress.qsvt import (
    PhaseSequence,
    _qsp_entries,
    lemma_bound,
    qsp_angles,
    qsp_polynomials,
    qsp_unitary,
    qsvt_apply,
    qsvt_circuit,
    qsvt_circuit_check,
    signal_operator,
    singular_value_transform,
)


def _identity_poly():
    return ApproxPolynomial(np.array([0.0, 1.0]), "odd", ((0.0, 1.0),), "id")


def test_single_phase_zero_is_signal_operator():
    for x in (-0.3, 0.0, 0.7):
        assert np.allclose(qsp_unitary([0.0], x), signal_operator(x))


def test_two_zero_phases_give_t2():
    assert qsp_unitary([0.0, 0.0], 0.5)[0, 0] == pytest.approx(-0.5)


def test_quarter_turn_phase_keeps_modulus():
    for x in (0.2, 0.9):
        assert abs(qsp_unitary([np.pi / 2], x)[0, 0]) == pytest.approx(x)


def test_qsp_unitary_is_unitary(rng):
    U = qsp_unitary(rng.uniform(0, 2 * np.pi, 7), 0.37)
    assert np.allclose(U @ U.conj().T, np.eye(2))


def test_qsp_polynomial_parity(rng):
    P, _ = qsp_polynomials(rng.uniform(0, 2 * np.pi, 5))
    assert np.max(np.abs(P[0::2])) < 1e-12


def test_angles_for_identity():
    phases = qsp_angles(np.array([0.0, 1.0]))
    assert phases.degree == 1
    assert abs(qsp_unitary(phases, 0.4)[0, 0] - 0.4) < 1e-10


def test_angles_round_trip_t4():
    T4 = np.array([0, 0, 0, 0, 1.0])
    phases = qsp_angles(T4)
    x = chebyshev_grid(-1, 1, 1000)
    got, _ = _qsp_entries(phases.phases, x)
    assert np.max(np.abs(got - C.chebval(x, T4))) < 1e-8


def test_angles_round_trip_degree_12(rng):
    phases = PhaseSequence(rng.uniform(0, 2 * np.pi, 12))
    P, _ = qsp_polynomials(phases)
    recovered = qsp_angles(P)
    x = np.linspace(-1, 1, 1000)
    assert np.max(np.abs(_qsp_entries(recovered.phases, x)[0] - _qsp_entries(phases.phases, x)[0])) < 1e-8


def test_angles_reject_bad_inputs():
    with pytest.raises(AdmissibilityError):
        qsp_angles(np.array([0.0, 2.0]))
    with pytest.raises(AdmissibilityError):
        qsp_angles(np.array([0.5, 0.5]))
    with pytest.raises(AdmissibilityError):
        qsp_angles(np.eye(40)[39])


def test_phase_sequence_text_round_trip(rng):
    seq = PhaseSequence(rng.uniform(0, 2 * np.pi, 6))
    text = seq.to_text()
    assert text.splitlines()[0] == "6"
    assert np.array_equal(PhaseSequence.from_text(text).phases, seq.phases)


def test_identity_poly_returns_block(rng):
    A = rng.standard_normal((3, 3))
    be = encode_exact(A, alpha=2 * spectral_norm(A))
    out = qsvt_apply(be, _identity_poly(), delta=1e-3)
    assert (out.alpha, out.ancillas) == (1.0, be.ancillas + 1)
    assert np.allclose(encoded_block(out), A / be.alpha)
    assert out.cost == {"A": 1}


def test_even_poly_uses_right_singular_vectors(rng):
    A = rng.standard_normal((3, 3))
    be = encode_exact(A, alpha=2 * spectral_norm(A))
    P = sign_poly(1e-2, 0.1, 0.3)
    out = qsvt_apply(be, P, delta=1.0)
    _, s, Vh = np.linalg.svd(A / be.alpha)
    expected = Vh.conj().T @ np.diag(P(s)) @ Vh
    assert np.allclose(encoded_block(out), expected, atol=1e-12)
    assert out.cost["A"] == P.degree


def test_odd_inverse_on_diagonal():
    be = encode_exact(np.diag([1.0, 0.5]), alpha=2.0)
    P = inversion_poly(4.0, 1e-3)
    out = qsvt_apply(be, P, delta=1.0)
    assert np.allclose(np.diag(encoded_block(out)), [1 / 4, 1 / 2], atol=1e-3 / 8)


def test_robust_precondition():
    A = np.diag([1.0, 0.5])
    with pytest.raises(PreconditionError):
        qsvt_apply(encode_exact(A, alpha=1.0), _identity_poly())
    noisy = encode_exact(A, alpha=2.5, noise=0.01, seed=1)
    with pytest.raises(PrecisionError):
        qsvt_apply(noisy, sign_poly(1e-2, 0.1, 0.3), delta=1e-3)


def test_output_epsilon_formula():
    noisy = encode_exact(np.diag([1.0, 0.5]), alpha=2.5, noise=1e-6, seed=1)
    P = sign_poly(1e-2, 0.1, 0.3)
    out = qsvt_apply(noisy, P, delta=1e-2)
    assert out.epsilon == pytest.approx(2 * P.degree * 1e-6 / 2.5)


def test_circuit_single_phase():
    be = encode_exact(np.diag([0.4, 0.2]), alpha=1.0)
    assert qsvt_circuit_check(be, PhaseSequence(np.zeros(1))) < 1e-12


def test_circuit_random_phases_on_diagonal(rng):
    A = np.diag([0.9, 0.5, 0.1])
    be = encode_exact(A, alpha=1.0)
    phases = PhaseSequence(rng.uniform(0, 2 * np.pi, 8))
    M = qsvt_circuit(be, phases)[:3, :3]
    expected = [qsp_unitary(phases, s)[0, 0] for s in (0.9, 0.5, 0.1)]
    assert np.allclose(M, np.diag(expected), atol=1e-8)


def test_circuit_matches_oracle_for_t3(rng):
    A = rng.standard_normal((3, 3))
    be = encode_exact(A, alpha=2 * spectral_norm(A))
    phases = qsp_angles(np.array([0.0, 0.0, 0.0, 1.0]))
    assert qsvt_circuit_check(be, phases) <= 1e-8
    circ = qsvt_apply(be, phases, mode="circuit", delta=1.0)
    orac = qsvt_apply(be, phases, mode="oracle", delta=1.0)
    assert np.allclose(encoded_block(circ), encoded_block(orac), atol=1e-8)


def test_circuit_degree_cap():
    be = encode_exact(np.eye(2) * 0.5, alpha=1.0)
    with pytest.raises(AdmissibilityError):
        qsvt_circuit(be, np.zeros(33))


def test_lemma_bound_holds(rng):
    A = rng.standard_normal((3, 3))
    alpha = 2 * spectral_norm(A)
    At = A + 1e-3 * rng.standard_normal((3, 3))
    P = inversion_poly(4.0, 1e-2)
    diff = spectral_norm(
        singular_value_transform(A / alpha, P, "odd") - singular_value_transform(At / alpha, P, "odd"))
    assert diff <= lemma_bound(A, At, alpha, P.degree)


def test_singular_value_transform_rejects_no_parity():
    with pytest.raises(PreconditionError):
        singular_value_transform(np.eye(2), lambda s: s, "none")


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 12), st.integers(0, 2**31 - 1))
def test_circuit_agrees_with_scalar_qsp(d, seed):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((3, 3))
    be = encode_exact(A, alpha=1.25 * spectral_norm(A))
    assert qsvt_circuit_check(be, PhaseSequence(rng.uniform(0, 2 * np.pi, d))) <= 1e-8


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 12), st.integers(0, 2**31 - 1))
def test_angle_round_trip(d, seed):
    phases = np.random.default_rng(seed).uniform(0, 2 * np.pi, d)
    P, _ = qsp_polynomials(phases)
    recovered = qsp_angles(P)
    x = np.linspace(-1, 1, 1000)
    assert np.max(np.abs(_qsp_entries(recovered.phases, x)[0] - _qsp_entries(phases, x)[0])) < 1e-8


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31 - 1), st.floats(1e-5, 1e-2))
def test_robustness_bound(seed, scale):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((3, 3))
    alpha = 2 * spectral_norm(A)
    At = A + scale * rng.standard_normal((3, 3))
    P = sign_poly(1e-2, 0.1, 0.3)
    diff = spectral_norm(
        singular_value_transform(A / alpha, P, "even") - singular_value_transform(At / alpha, P, "even"))
    assert diff <= lemma_bound(A, At, alpha, P.degree)
