import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qregress.arith import (
    amplify,
    amplify_predicted_uses,
    augment,
    lcu,
    lcu_pair,
    product,
    product_amplified,
    state_prep,
    subnormalize,
    tensor,
)
from qregress.block_encoding import encode_exact, encoded_block, verify
from qregress.errors import PrecisionError, PreconditionError
from qregress.linalg import spectral_norm, unitarity_residual


def _noisy(A, alpha, eps, seed):
    return encode_exact(A, alpha=alpha, noise=eps, seed=seed)


def test_state_prep_amplitudes():
    P = state_prep([1.0, 3.0])
    assert np.allclose(np.abs(P.unitary[:, 0]) ** 2, [0.25, 0.75])
    assert unitarity_residual(P.unitary) < 1e-12


def test_lcu_identity_sum():
    I = encode_exact(np.eye(2), alpha=1)
    out = lcu([(1, I), (1, I)])
    assert out.alpha == 2 and out.epsilon == 0
    assert np.allclose(encoded_block(out), 2 * np.eye(2))


def test_lcu_cancellation(rng):
    A = rng.standard_normal((2, 2))
    out = lcu([(1, encode_exact(A)), (1, encode_exact(-A))])
    assert np.allclose(encoded_block(out), 0, atol=1e-12)


def test_lcu_weighted_sum(rng):
    A0, A1 = rng.standard_normal((3, 3)), rng.standard_normal((3, 3))
    out = lcu([(2, encode_exact(A0)), (3, encode_exact(A1))])
    assert verify(out, 2 * A0 + 3 * A1) <= 1e-9


def test_lcu_rejects_wrong_prep(rng):
    A = rng.standard_normal((2, 2))
    with pytest.raises(PreconditionError):
        lcu([(1, encode_exact(A)), (1, encode_exact(A))], prep=state_prep([1.0, 5.0]))


def test_lcu_pair_metadata():
    I = encode_exact(np.eye(2), alpha=1)
    out = lcu_pair(1, I, 1, I)
    assert (out.alpha, out.ancillas, out.epsilon) == (2, 2, 0)
    assert np.allclose(encoded_block(out), 2 * np.eye(2))


def test_lcu_pair_squares(rng):
    A, L = rng.standard_normal((2, 2)), rng.standard_normal((2, 2))
    lam = 0.7
    out = lcu_pair(1, encode_exact(A @ A), lam, encode_exact(L @ L))
    assert verify(out, A @ A + lam * L @ L) <= 1e-9


def test_lcu_pair_error_propagation(rng):
    A, B = rng.standard_normal((2, 2)), rng.standard_normal((2, 2))
    be0 = _noisy(A, 2 * spectral_norm(A), 0.01, 1)
    be1 = _noisy(B, 2 * spectral_norm(B), 0.02, 2)
    out = lcu_pair(1, be0, 2, be1)
    assert out.epsilon == pytest.approx(0.05, abs=1e-15)
    assert verify(out, A + 2 * B) <= 0.05


def test_product_metadata(rng):
    A = np.diag([1.0, 0.5])
    B = np.diag([0.5, 1.0])
    beA = _noisy(A, 2, 0.01, 1)
    beB = _noisy(B, 3, 0.02, 2)
    out = product(beA, beB)
    assert (out.alpha, out.ancillas) == (6, 2)
    assert out.epsilon == pytest.approx(0.07, abs=1e-15)
    assert verify(out, A @ B) <= 0.07


def test_product_with_identity(rng):
    A = rng.standard_normal((2, 2))
    out = product(encode_exact(A, alpha=3), encode_exact(np.eye(2), alpha=1))
    assert verify(out, A) < 1e-12


def test_product_random(rng):
    A, B = rng.standard_normal((3, 4)), rng.standard_normal((4, 2))
    out = product(encode_exact(A), encode_exact(B))
    assert verify(out, A @ B) <= 1e-9
    assert out.cost == {"A": 2}


def test_tensor_metadata_and_block(rng):
    A, B = rng.standard_normal((2, 2)), rng.standard_normal((2, 2))
    out = tensor(encode_exact(A, alpha=2 * spectral_norm(A)), encode_exact(B, alpha=3 * spectral_norm(B)))
    assert out.ancillas == 2 and out.epsilon == 0
    assert verify(out, np.kron(A, B)) <= 1e-9
    out = tensor(encode_exact(np.eye(2), alpha=1), encode_exact(A))
    assert verify(out, np.kron(np.eye(2), A)) <= 1e-9


def test_augment_identity():
    out = augment(encode_exact(np.eye(2)), encode_exact(np.eye(2)), 1.0)
    M = encoded_block(out)[:4, :4]
    expected = np.block([[np.eye(2), np.zeros((2, 2))], [np.eye(2), np.zeros((2, 2))]])
    assert np.allclose(M, expected)
    assert np.allclose(np.linalg.pinv(M)[:2, :2], np.eye(2) / 2)


def test_augment_rank_deficient_spectrum():
    out = augment(encode_exact(np.diag([1.0, 0.0]), alpha=1), encode_exact(np.eye(2)), 1.0)
    s = np.linalg.svd(out.alpha * out.block, compute_uv=False)
    assert np.allclose(s[:2], [np.sqrt(2), 1])


def test_augment_epsilon_grows_with_sqrt_lambda(rng):
    A = np.eye(2)
    beL = _noisy(np.eye(2), 2, 0.01, 5)
    out = augment(encode_exact(A, alpha=2), beL, 4.0)
    assert out.epsilon == pytest.approx(0.02)
    assert out.alpha == pytest.approx(2 + 2 * 2)


def test_amplify_examples(rng):
    A = rng.standard_normal((3, 3))
    n = spectral_norm(A)
    out = amplify(encode_exact(A), 1e-4)
    assert out.alpha == pytest.approx(np.sqrt(2) * n)
    assert verify(out, A) <= 1e-4
    A = A / n
    out = amplify(encode_exact(A, alpha=10), 1e-4)
    assert out.alpha == pytest.approx(np.sqrt(2))
    assert verify(out, A) <= 1e-4
    assert out.cost["A"] == out.degrees[-1]


def test_amplify_predicted_uses():
    assert amplify_predicted_uses(10, 1, 1e-4) == int(np.ceil(10 * np.log(1e4)))


def test_amplify_rejects_noisy_input(rng):
    with pytest.raises(PrecisionError):
        amplify(_noisy(np.eye(2), 2, 0.01, 1), 1e-3)


def test_product_amplified_exact(rng):
    A, B = rng.standard_normal((2, 2)), rng.standard_normal((2, 2))
    nA, nB = spectral_norm(A), spectral_norm(B)
    out = product_amplified(encode_exact(A, alpha=10 * nA), encode_exact(B, alpha=3 * nB), 1e-6)
    assert out.alpha == pytest.approx(2 * nA * nB)
    assert verify(out, A @ B) <= 1e-6


def test_product_amplified_noise_at_bound(rng):
    A, B = np.diag([1.0, 0.4]), np.diag([0.8, 1.0])
    delta = 1e-3
    epsA = delta / (4 * np.sqrt(2) * 1.0)
    out = product_amplified(_noisy(A, 4, epsA, 3), encode_exact(B, alpha=2), delta, 1.0, 1.0)
    assert verify(out, A @ B) <= delta


def test_subnormalize(rng):
    A = rng.standard_normal((2, 2))
    out = subnormalize(encode_exact(A), 3)
    assert out.alpha == pytest.approx(3 * spectral_norm(A))
    assert verify(out, A) < 1e-12


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 4), st.floats(0.1, 3.0), st.floats(0.1, 3.0), st.integers(0, 2**31 - 1))
def test_lcu_pair_claims_hold(n, y0, y1, seed):
    rng = np.random.default_rng(seed)
    A, B = rng.standard_normal((n, n)), rng.standard_normal((n, n))
    e0, e1 = rng.uniform(0, 0.05, 2)
    be0 = _noisy(A, 2 * spectral_norm(A), e0, seed)
    be1 = _noisy(B, 2 * spectral_norm(B), e1, seed + 1)
    out = lcu_pair(y0, be0, y1, be1)
    assert out.epsilon == pytest.approx(y0 * e0 + y1 * e1, abs=1e-12)
    assert verify(out, y0 * A + y1 * B) <= out.epsilon + 1e-12
    assert unitarity_residual(out.core) < 1e-9


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 4), st.integers(0, 2**31 - 1))
def test_product_claims_hold(n, seed):
    rng = np.random.default_rng(seed)
    A, B = rng.standard_normal((n, n)), rng.standard_normal((n, n))
    eA, eB = rng.uniform(0, 0.05, 2)
    beA = _noisy(A, 2 * spectral_norm(A), eA, seed)
    beB = _noisy(B, 2 * spectral_norm(B), eB, seed + 1)
    out = product(beA, beB)
    assert out.epsilon == pytest.approx(beA.alpha * eB + beB.alpha * eA, abs=1e-12)
    assert verify(out, A @ B) <= out.epsilon + 1e-12


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 3), st.integers(1, 3), st.integers(0, 2**31 - 1))
def test_cost_is_additive(n1, n2, seed):
    rng = np.random.default_rng(seed)
    beA = encode_exact(rng.standard_normal((n1, n1)), oracle="A")
    beL = encode_exact(rng.standard_normal((n1, n1)), oracle="L")
    out = product(lcu_pair(1, beA, 1, beL), beA)
    assert out.cost == {"A": 2, "L": 1}
