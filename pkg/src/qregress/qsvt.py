"""Quantum signal processing and singular value transformation.

QSP convention: U_Phi(x) = prod_j exp(i phi_j Z) W(x) with
W(x) = [[x, i s], [i s, x]], s = sqrt(1 - x^2), so that
U_Phi(x) = [[P, i s Q], [i s Q*, P*]].  P is read from the top-left entry.
"""

from dataclasses import dataclass, replace

import mpmath as mp
import numpy as np
from numpy.polynomial import chebyshev as C

from .block_encoding import BlockEncoding, merge_costs
from .errors import AdmissibilityError, PrecisionError, PreconditionError
from .linalg import spectral_norm, unitary_dilation
from .poly import ApproxPolynomial, chebyshev_grid

MAX_CIRCUIT_DEGREE = 32
MP_DIGITS = 60


@dataclass(frozen=True, eq=False)
class PhaseSequence:
    phases: np.ndarray

    @property
    def degree(self):
        return len(self.phases)

    def to_text(self):
        return f"{self.degree}\n" + "\n".join(f"{p:.17g}" for p in self.phases) + "\n"

    @classmethod
    def from_text(cls, text):
        tokens = text.split()
        d = int(tokens[0])
        return cls(np.array([float(t) for t in tokens[1 : 1 + d]]))


def signal_operator(x):
    s = np.sqrt(max(0.0, 1.0 - x * x))
    return np.array([[x, 1j * s], [1j * s, x]])


def _zphase(phi):
    return np.diag([np.exp(1j * phi), np.exp(-1j * phi)])


def qsp_unitary(phases, x):
    """prod_{j=1}^d exp(i phi_j Z) W(x), left to right."""
    phases = phases.phases if isinstance(phases, PhaseSequence) else np.asarray(phases)
    Wx = signal_operator(float(x))
    U = np.eye(2, dtype=complex)
    for phi in phases:
        U = U @ _zphase(phi) @ Wx
    return U


def _qsp_entries(phases, x):
    """Top-left and top-right entries of U_Phi on an array of points."""
    x = np.asarray(x, dtype=float)
    s = np.sqrt(np.clip(1.0 - x * x, 0.0, None))
    # Row vector (a, b) of U, pushed through each layer.
    a = np.ones_like(x, dtype=complex)
    b = np.zeros_like(x, dtype=complex)
    for phi in phases:
        a, b = a * np.exp(1j * phi), b * np.exp(-1j * phi)
        a, b = a * x + b * 1j * s, a * 1j * s + b * x
    return a, b


def qsp_polynomials(phases):
    """Chebyshev coefficients of (P, Q) for a phase sequence."""
    phases = phases.phases if isinstance(phases, PhaseSequence) else np.asarray(phases)
    d = len(phases)
    n = d + 1
    x = np.cos(np.pi * (np.arange(n) + 0.5) / n)
    a, b = _qsp_entries(phases, x)
    q_vals = b / (1j * np.sqrt(1.0 - x * x))
    P = C.chebfit(x, a, d)
    Q = C.chebfit(x, q_vals, max(d - 1, 0)) if d > 0 else np.zeros(1, dtype=complex)
    return P, Q


def _mp_complement(P, d):
    """Q (monomial, mp) with |P|^2 + (1 - x^2)|Q|^2 = 1 and parity (d - 1) mod 2.

    |Q|^2 = (1 - |P|^2)/(1 - x^2) is factored through its roots in u = x^2,
    keeping one root from each conjugate pair and one from each double real root.
    """
    num = -np.convolve(P, np.array([mp.conj(v) for v in P], dtype=object))
    num[0] += 1
    # Divide by (1 - x^2), highest power first.
    R = np.array([mp.mpc(0)] * (len(num) - 2), dtype=object)
    for k in range(len(num) - 1, 1, -1):
        R[k - 2] = -num[k]
        num[k - 2] += num[k]
    odd = (d - 1) % 2 == 1
    r = (R[2:] if odd else R)[0::2]
    m = len(r) - 1
    if m == 0:
        g = [mp.sqrt(abs(r[0]))]
    else:
        try:
            roots = mp.polyroots(list(r[::-1]), maxsteps=400, extraprec=4 * mp.mp.prec)
        except mp.NoConvergence as exc:
            raise AdmissibilityError("could not factor the complement polynomial") from exc
        tol = mp.mpf(10) ** (-mp.mp.dps // 3)
        is_real = [abs(mp.im(z)) <= tol * max(1, abs(z)) for z in roots]
        real = sorted(mp.re(z) for z, f in zip(roots, is_real) if f)
        if len(real) % 2:
            raise AdmissibilityError("complement polynomial has a simple real root")
        chosen = [(real[i] + real[i + 1]) / 2 for i in range(0, len(real), 2)]
        chosen += [z for z, f in zip(roots, is_real) if not f and mp.im(z) > 0]
        g = np.array([mp.sqrt(abs(r[-1]))], dtype=object)
        for z in chosen:
            g = np.convolve(g, np.array([-z, mp.mpc(1)], dtype=object))
    Q = np.array([mp.mpc(0)] * (2 * len(g) - 1 + odd), dtype=object)
    Q[odd::2] = g
    return Q


def _mp_strip(P_cheb, d, dps=MP_DIGITS):
    """Layer-stripping phases of P in extended precision, rounded to floats."""
    with mp.workdps(dps):
        P = C.cheb2poly(np.array([mp.mpc(complex(v)) for v in P_cheb], dtype=object))
        P = np.array([P[i] if i % 2 == d % 2 else mp.mpc(0) for i in range(d + 1)], dtype=object)
        P = P / abs(sum(P))  # exact |P(1)| = 1, so the complement exists
        Q = _mp_complement(P, d)
        phases = []
        for j in range(d):
            n = d - j
            phi = mp.arg(P[n] / mp.conj(Q[n - 1])) / 2
            e = mp.expj(phi)
            Qbar = np.array([mp.conj(v) for v in Q], dtype=object)
            Pbar = np.array([mp.conj(v) for v in P], dtype=object)
            P_next = np.concatenate([[mp.mpc(0)], P / e])
            P_next[: len(Q) + 2] += e * np.convolve(np.array([1, 0, -1], dtype=object), Qbar)
            Q_next = np.concatenate([[mp.mpc(0)], Q / e])
            Q_next[: len(P)] -= e * Pbar
            P, Q = P_next[:n], Q_next[: n - 1]
            phases.append(phi)
        phases[0] += mp.arg(P[0])
        return np.array([float(p) for p in phases])


def _as_coefficients(poly):
    if isinstance(poly, ApproxPolynomial):
        return np.asarray(poly.coeffs, dtype=complex)
    if isinstance(poly, PhaseSequence):
        return qsp_polynomials(poly)[0]
    return np.asarray(poly, dtype=complex)


def _qsp_entry_jacobian(phases, x):
    """Top-left entry of U_Phi at points x and its derivative in each phase."""
    s = np.sqrt(np.clip(1.0 - x * x, 0.0, None))
    W = np.zeros((len(x), 2, 2), dtype=complex)
    W[:, 0, 0] = W[:, 1, 1] = x
    W[:, 0, 1] = W[:, 1, 0] = 1j * s
    layers = [_zphase(phi)[None] @ W for phi in phases]
    eye = np.broadcast_to(np.eye(2, dtype=complex), W.shape)
    prefix, suffix = [eye], [eye]
    for L in layers:
        prefix.append(prefix[-1] @ L)
    for L in reversed(layers):
        suffix.append(L @ suffix[-1])
    suffix.reverse()
    dz = np.diag([1j, -1j])[None]
    J = np.stack([(prefix[j] @ dz @ layers[j] @ suffix[j + 1])[:, 0, 0]
                  for j in range(len(phases))], axis=1)
    return prefix[-1][:, 0, 0], J


def _polish(phases, P, max_iter=200):
    """Gauss-Newton refinement of stripped phases against P at Chebyshev nodes.

    Uses the exact Jacobian, so nearly singular cases still converge (linearly).
    """
    m = 2 * len(phases) + 2
    nodes = np.cos(np.pi * (np.arange(m) + 0.5) / m)
    target = C.chebval(nodes, P)
    best, best_res = phases, np.inf
    for _ in range(max_iter):
        f, J = _qsp_entry_jacobian(phases, nodes)
        r = f - target
        res = np.max(np.abs(r))
        if res < best_res:
            best, best_res = phases, res
        if res < 4e-15:
            break
        step = np.linalg.lstsq(np.vstack([J.real, J.imag]), -np.concatenate([r.real, r.imag]),
                               rcond=None)[0]
        phases = phases + step
    return best


def qsp_angles(poly, max_degree=MAX_CIRCUIT_DEGREE):
    """Phases whose QSP top-left entry reproduces poly.

    Completes P with a complement Q by spectral factorization and peels one
    layer at a time, both in extended precision (double-precision stripping
    loses digits geometrically with degree), then polishes in double precision.
    """
    P = np.trim_zeros(_as_coefficients(poly), "b")
    d = len(P) - 1
    if d < 1:
        raise AdmissibilityError("QSP needs degree at least 1")
    if d > max_degree:
        raise AdmissibilityError(f"degree {d} exceeds the circuit cap {max_degree}; use oracle mode")
    k = np.arange(d + 1)
    if np.max(np.abs(P[k % 2 != d % 2]), initial=0.0) > 1e-10:
        raise AdmissibilityError("polynomial parity does not match its degree")
    P = np.where(k % 2 == d % 2, P, 0.0)
    grid = chebyshev_grid(-1, 1, 1001)
    if np.max(np.abs(C.chebval(grid, P))) > 1 + 1e-9:
        raise AdmissibilityError("|P| exceeds 1 on [-1, 1]")
    if abs(abs(C.chebval(1.0, P)) - 1) > 1e-8:
        raise AdmissibilityError("|P(1)| != 1: not realizable by QSP; use oracle mode")
    phases = _mp_strip(P, d)
    phases = _polish(phases, _as_coefficients(poly))
    result = PhaseSequence(np.mod(phases, 2 * np.pi))
    target = C.chebval(grid, _as_coefficients(poly))
    got, _ = _qsp_entries(result.phases, grid)
    if np.max(np.abs(got - target)) > 1e-6:
        raise AdmissibilityError("angle recovery lost accuracy; use oracle mode")
    return result


def _poly_parts(poly):
    """(callable, parity, degree) for the supported polynomial descriptions."""
    if isinstance(poly, ApproxPolynomial):
        return poly, poly.parity, poly.degree
    if isinstance(poly, PhaseSequence):
        P, _ = qsp_polynomials(poly)
        d = poly.degree
        return (lambda x: C.chebval(x, P)), ("odd" if d % 2 else "even"), d
    raise PreconditionError("expected an ApproxPolynomial or PhaseSequence")


def singular_value_transform(block, f, parity):
    """P^SV: odd maps W S V^H to W f(S) V^H, even maps to V f(S) V^H."""
    W, s, Vh = np.linalg.svd(block)
    if parity == "odd":
        return (W * f(s)) @ Vh
    if parity == "even":
        return (Vh.conj().T * f(s)) @ Vh
    raise PreconditionError("singular value transformation needs a definite parity")


def lemma_bound(A, A_tilde, alpha, degree):
    """Perturbation bound n sqrt(2 / (1 - ||(A + A~)/2alpha||^2)) ||A - A~|| / alpha."""
    mid = spectral_norm((A + A_tilde) / (2 * alpha))
    if mid >= 1:
        return np.inf
    return degree * np.sqrt(2.0 / (1.0 - mid**2)) * spectral_norm(A - A_tilde) / alpha


def _check_robust(be, n, delta):
    if spectral_norm(be.block) > 0.5 + 1e-12:
        raise PreconditionError("robust accounting needs ||A~|| <= alpha/2")
    if delta is not None and be.epsilon > be.alpha * delta / (2 * n):
        raise PrecisionError("input epsilon", be.epsilon, be.alpha * delta / (2 * n))


def qsvt_apply(be, poly, mode="oracle", delta=None, robust=True):
    """(1, a+1, 2 n eps / alpha)-encoding of P^SV(A/alpha), charging n uses of be."""
    f, parity, n = _poly_parts(poly)
    if robust:
        _check_robust(be, n, delta)
    eps = 2 * n * be.epsilon / be.alpha
    rows, cols = (be.rows, be.cols) if parity == "odd" else (be.cols, be.cols)
    cost = merge_costs(be.cost, times=n)
    degrees = be.degrees + (n,)
    if mode == "circuit":
        phases = poly if isinstance(poly, PhaseSequence) else qsp_angles(poly)
        core = qsvt_circuit(be, phases)
        return replace(
            be, core=core, alpha=1.0, ancillas=be.ancillas + 1, epsilon=eps,
            rows=rows, cols=cols, cost=cost, degrees=degrees,
        )
    if mode != "oracle":
        raise PreconditionError(f"unknown mode {mode!r}")
    block = singular_value_transform(be.block, f, parity)
    return BlockEncoding(
        core=unitary_dilation(block), alpha=1.0, ancillas=be.ancillas + 1, epsilon=eps,
        system_qubits=be.system_qubits, rows=rows, cols=cols, cost=cost, degrees=degrees,
    )


def qsvt_circuit(be, phases, max_degree=MAX_CIRCUIT_DEGREE):
    """Alternating U, U^H sequence with projector-controlled phases.

    Each U acts on the span of a singular pair as the reflection
    [[x, s], [s, -x]] = e^{-i pi/2} Z W Z with Z = exp(i pi/4 Z), so the
    W-convention phases shift by -pi/4 (first) and -pi/2 (others) and the
    projected block picks up (-i)^d e^{i pi/4}, which is divided out.
    """
    phases = phases.phases if isinstance(phases, PhaseSequence) else np.asarray(phases)
    d = len(phases)
    if d > max_degree:
        raise AdmissibilityError(f"degree {d} exceeds the circuit cap {max_degree}")
    shifted = phases - np.pi / 2
    shifted[0] += np.pi / 4
    U = be.core
    n = U.shape[0]
    proj = np.full(n, -1.0)
    proj[: be.dim] = 1.0
    M = np.eye(n, dtype=complex)
    for j in range(d):
        X = U if (d - 1 - j) % 2 == 0 else U.conj().T
        M = M @ (np.exp(1j * shifted[j] * proj)[:, None] * X)
    return M / ((-1j) ** d * np.exp(1j * np.pi / 4))


def qsvt_circuit_check(be, phases):
    """Distance between the circuit's projected block and P^SV of the encoded block."""
    phases = phases if isinstance(phases, PhaseSequence) else PhaseSequence(np.asarray(phases))
    f, parity, _ = _poly_parts(phases)
    M = qsvt_circuit(be, phases)
    return spectral_norm(M[: be.dim, : be.dim] - singular_value_transform(be.block, f, parity))
