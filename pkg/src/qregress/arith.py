"""Combinators on block-encodings with exact (alpha, a, eps) bookkeeping."""

from dataclasses import dataclass

import numpy as np

from .block_encoding import (
    BlockEncoding,
    encode_exact,
    merge_costs,
    pad_ancilla_states,
    pad_system,
    verify,
)
from .errors import PrecisionError, PreconditionError
from .linalg import complete_unitary, num_qubits, spectral_norm
from .poly import amplification_poly
from .qsvt import qsvt_apply


@dataclass(frozen=True, eq=False)
class StatePrepUnitary:
    weights: np.ndarray
    unitary: np.ndarray


def state_prep(weights):
    """Unitary P with P|0> = sum_j sqrt(w_j / sum w) |j> on ceil(log m) qubits."""
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or w.size == 0 or np.any(w <= 0):
        raise PreconditionError("state preparation needs positive weights")
    n = 2 ** num_qubits(len(w))
    col = np.zeros((n, 1), dtype=complex)
    col[: len(w), 0] = np.sqrt(w / w.sum())
    return StatePrepUnitary(w, complete_unitary(col))


def _common_dim(encodings):
    dim = max(be.dim for be in encodings)
    return [pad_system(be, dim) for be in encodings]


def _select(cores, k, dim, slots):
    """Block-diagonal select over `slots` branches; unused branches act as identity."""
    n = k * dim
    S = np.eye(slots * n, dtype=complex)
    for j, U in enumerate(cores):
        S[j * n : (j + 1) * n, j * n : (j + 1) * n] = U
    return S


def _lcu_core(encodings, P):
    k = max(be.ancilla_states for be in encodings)
    dim = encodings[0].dim
    cores = [pad_ancilla_states(be, k) for be in encodings]
    slots = P.shape[0]
    S = _select(cores, k, dim, slots)
    Pbig = np.kron(P, np.eye(k * dim))
    return Pbig.conj().T @ S @ Pbig


def lcu(terms, prep=None):
    """Encoding of sum_j y_j A_j: (sum y_j alpha_j, max a_j + ceil(log m), sum y_j eps_j)."""
    if not terms:
        raise PreconditionError("lcu needs at least one term")
    ys = np.array([float(y) for y, _ in terms])
    encodings = _common_dim([be for _, be in terms])
    if np.any(ys <= 0):
        raise PreconditionError("lcu coefficients must be positive")
    eta = ys * np.array([be.alpha for be in encodings])
    if prep is None:
        prep = state_prep(eta)
    elif len(prep.weights) != len(terms) or not np.allclose(
        prep.weights / prep.weights.sum(), eta / eta.sum(), rtol=1e-10, atol=0
    ):
        raise PreconditionError("state preparation weights must equal y_j alpha_j")
    core = _lcu_core(encodings, prep.unitary)
    return _combine(
        encodings, core,
        alpha=float(eta.sum()),
        ancillas=max(be.ancillas for be in encodings) + num_qubits(len(terms)),
        epsilon=float(sum(y * be.epsilon for y, be in zip(ys, encodings))),
    )


def lcu_pair(y0, be0, y1, be1):
    """Two-term combination with the explicit rotation P on one ancilla."""
    if y0 <= 0 or y1 <= 0:
        raise PreconditionError("lcu coefficients must be positive")
    be0, be1 = _common_dim([be0, be1])
    e0, e1 = y0 * be0.alpha, y1 * be1.alpha
    alpha = e0 + e1
    P = np.array([[np.sqrt(e0), -np.sqrt(e1)], [np.sqrt(e1), np.sqrt(e0)]]) / np.sqrt(alpha)
    core = _lcu_core([be0, be1], P)
    return _combine(
        [be0, be1], core,
        alpha=alpha,
        ancillas=1 + max(be0.ancillas, be1.ancillas),
        epsilon=y0 * be0.epsilon + y1 * be1.epsilon,
    )


def _combine(encodings, core, alpha, ancillas, epsilon, rows=None, cols=None):
    first = encodings[0]
    return BlockEncoding(
        core=core,
        alpha=float(alpha),
        ancillas=int(ancillas),
        epsilon=float(epsilon),
        system_qubits=first.system_qubits,
        rows=max(be.rows for be in encodings) if rows is None else rows,
        cols=max(be.cols for be in encodings) if cols is None else cols,
        cost=merge_costs(*(be.cost for be in encodings)),
        degrees=sum((be.degrees for be in encodings), ()),
    )


def product(beA, beB):
    """Encoding of AB: (alpha beta, a + b, alpha eps_B + beta eps_A)."""
    if beA.cols > max(beB.rows, beB.dim) or beB.rows > max(beA.cols, beA.dim):
        raise PreconditionError(f"inner dimensions differ: {beA.cols} vs {beB.rows}")
    beA, beB = _common_dim([beA, beB])
    kA, kB, D = beA.ancilla_states, beB.ancilla_states, beA.dim
    UA = beA.core.reshape(kA, D, kA, D)
    # Layout (jA, jB, sys): U_A ignores jB, U_B ignores jA.
    UA_full = np.einsum("aibj,cd->acibdj", UA, np.eye(kB)).reshape(kA * kB * D, -1)
    UB_full = np.kron(np.eye(kA), beB.core)
    core = UA_full @ UB_full
    return _combine(
        [beA, beB], core,
        alpha=beA.alpha * beB.alpha,
        ancillas=beA.ancillas + beB.ancillas,
        epsilon=beA.alpha * beB.epsilon + beB.alpha * beA.epsilon,
        rows=beA.rows, cols=beB.cols,
    )


def tensor(be1, be2):
    """Encoding of A1 (x) A2 on padded systems: (alpha beta, a + b, alpha eps2 + beta eps1 + eps1 eps2)."""
    k1, k2, D1, D2 = be1.ancilla_states, be2.ancilla_states, be1.dim, be2.dim
    U1 = be1.core.reshape(k1, D1, k1, D1)
    U2 = be2.core.reshape(k2, D2, k2, D2)
    # Ancillas gathered in front of both systems: (j1, j2, i1, i2).
    core = np.einsum("aibj,ckdl->acikbdjl", U1, U2).reshape(k1 * k2 * D1 * D2, -1)
    a, b = be1.alpha, be2.alpha
    return BlockEncoding(
        core=core,
        alpha=a * b,
        ancillas=be1.ancillas + be2.ancillas,
        epsilon=a * be2.epsilon + b * be1.epsilon + be1.epsilon * be2.epsilon,
        system_qubits=be1.system_qubits + be2.system_qubits,
        rows=(be1.rows - 1) * D2 + be2.rows,
        cols=(be1.cols - 1) * D2 + be2.cols,
        cost=merge_costs(be1.cost, be2.cost),
        degrees=be1.degrees + be2.degrees,
    )


def _swap_encoding(flip):
    """(1, 1, 0)-encoding of [[1,0],[0,0]] (SWAP) or [[0,0],[1,0]] ((I (x) X) SWAP)."""
    swap = np.eye(4)[[0, 2, 1, 3]]
    if flip:
        swap = np.kron(np.eye(2), np.array([[0, 1], [1, 0]])) @ swap
    return BlockEncoding(core=swap.astype(complex), alpha=1.0, ancillas=1, epsilon=0.0,
                         system_qubits=1, rows=2, cols=2)


def augment(beA, beL, lam):
    """Encoding of [[A, 0], [sqrt(lam) L, 0]]: (alpha_A + sqrt(lam) alpha_L, max a + 2, eps_A + sqrt(lam) eps_L)."""
    if lam <= 0:
        raise PreconditionError("lambda must be positive")
    if beA.cols != beL.cols:
        raise PreconditionError(f"A has {beA.cols} columns but L has {beL.cols}")
    beA, beL = _common_dim([beA, beL])
    top = tensor(_swap_encoding(False), beA)
    bottom = tensor(_swap_encoding(True), beL)
    return lcu_pair(1.0, top, float(np.sqrt(lam)), bottom)


def scalar_encoding(c):
    """(c, 1, 0)-encoding of the 1x1 matrix [1]; tensoring with it raises alpha by c."""
    return encode_exact(np.ones((1, 1)), alpha=c, oracle=None)


def subnormalize(be, c):
    """Same matrix with alpha multiplied by c >= 1."""
    if c < 1:
        raise PreconditionError("subnormalization factor must be at least 1")
    if c == 1:
        return be
    out = tensor(be, scalar_encoding(c))
    return out


def amplify(be, delta, norm=None):
    """(sqrt(2) ||A||, a + 1, delta)-encoding of A by an odd linear-amplification polynomial.

    The polynomial is within delta/(2 sqrt(2) ||A||) of gain * x on the range of
    singular values, gain = alpha / (sqrt(2) ||A||).
    """
    norm = spectral_norm(be.alpha * be.block) if norm is None else float(norm)
    if norm <= 0:
        raise PreconditionError("amplification needs a nonzero norm estimate")
    if be.epsilon > delta / 2:
        raise PrecisionError("input epsilon (amplify needs eps <= delta/2)", be.epsilon, delta / 2)
    gain = be.alpha / (np.sqrt(2) * norm)
    poly = amplification_poly(float(gain), float(delta / (2 * np.sqrt(2) * norm)))
    out = qsvt_apply(be, poly, robust=False)
    return BlockEncoding(
        core=out.core,
        alpha=float(np.sqrt(2) * norm),
        ancillas=be.ancillas + 1,
        epsilon=float(delta),
        system_qubits=out.system_qubits,
        rows=be.rows,
        cols=be.cols,
        cost=out.cost,
        degrees=out.degrees,
    )


def amplify_predicted_uses(alpha, norm, delta):
    """Query count ceil((alpha/||A||) log(||A||/delta)) quoted for uniform amplification."""
    return int(np.ceil(alpha / norm * max(np.log(norm / delta), 1.0)))


def product_amplified(beA, beB, delta, normA=None, normB=None):
    """(2 ||A|| ||B||, a_A + a_B + 2, delta)-encoding of AB via amplified factors."""
    normA = spectral_norm(beA.alpha * beA.block) if normA is None else float(normA)
    normB = spectral_norm(beB.alpha * beB.block) if normB is None else float(normB)
    boundA = delta / (4 * np.sqrt(2) * normB)
    boundB = delta / (4 * np.sqrt(2) * normA)
    if beA.epsilon > boundA:
        raise PrecisionError("eps_A (needs eps_A <= delta/(4 sqrt2 ||B||))", beA.epsilon, boundA)
    if beB.epsilon > boundB:
        raise PrecisionError("eps_B (needs eps_B <= delta/(4 sqrt2 ||A||))", beB.epsilon, boundB)
    ampA = amplify(beA, delta / (2 * np.sqrt(2) * normB), normA)
    ampB = amplify(beB, delta / (2 * np.sqrt(2) * normA), normB)
    return product(ampA, ampB)


def check_metadata(be, target):
    """(measured, claimed) pair for a combinator output against its exact target."""
    return verify(be, target), be.epsilon
