"""Singular value discrimination, inversion and the variable-time cascade.

All routines take a block-encoding of a normalized target (singular values
in [0, 1]) and simulate the corresponding circuits on explicit state vectors.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .arith import amplify, subnormalize
from .block_encoding import BlockEncoding, adjoint, merge_costs, reinterpret
from .errors import PrecisionError, PreconditionError
from .linalg import normalize, spectral_norm
from .poly import inversion_poly, neg_power_poly, sign_poly
from .qsvt import qsvt_apply

# Implied constant used when a precision requirement is stated only as little-o.
LITTLE_O = 1 / 8
DEFAULT_MAX_QUBITS = 22


class AmplificationError(PreconditionError):
    """The good component is too small for amplitude amplification to find."""


@dataclass(frozen=True, eq=False)
class StateVector:
    amplitudes: np.ndarray
    layout: tuple = ()
    cost: dict = field(default_factory=dict)
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.layout:
            object.__setattr__(self, "layout", (("I", len(self.amplitudes)),))


@dataclass(frozen=True)
class VtStats:
    m: int
    stop_times: tuple
    stop_probs: tuple
    l2_time: float
    max_time: float
    success_prob: float
    a_max: float
    clock_qubits: int
    phase_registers: int
    total_qubits: int
    clock_residual: float
    aa_rounds: int
    uncompute_uses: int

    def as_record(self):
        return {
            "m": self.m,
            "t": list(self.stop_times),
            "p": list(self.stop_probs),
            "l2_time": self.l2_time,
            "max_time": self.max_time,
            "p_succ": self.success_prob,
            "a_max": self.a_max,
        }


def _log(x):
    return max(float(np.log(x)), 1.0)


def _require(name, eps, bound, little_o=True):
    bound = bound * LITTLE_O if little_o else bound
    if eps > bound:
        raise PrecisionError(name, eps, bound)


def _check_normalized(be, kappa, allow_zero=True):
    """Nonzero singular values of the encoded target must lie in [1/kappa, 1]."""
    s = np.linalg.svd(be.alpha * be.block, compute_uv=False)
    slack = be.epsilon + 1e-9
    if s[0] > 1 + slack:
        raise PreconditionError(f"target is not normalized: ||A|| = {s[0]:.6g} > 1")
    nonzero = s[s > slack]
    if not allow_zero and len(nonzero) < min(be.rows, be.cols):
        raise PreconditionError("target is singular")
    if nonzero.size and nonzero[-1] < 1 / kappa - slack:
        raise PreconditionError(
            f"smallest nonzero singular value {nonzero[-1]:.6g} is below 1/kappa = {1 / kappa:.6g}"
        )


def _check_alpha(be):
    if be.alpha < 2 - 1e-12:
        raise PreconditionError(f"needs alpha >= 2 for robust accounting, got {be.alpha:.6g}")


def sign_transform(be, phi, delta):
    """Even QSVT of the sign polynomial splitting sigma <= phi from sigma >= 2 phi."""
    poly = sign_poly(float(delta / 2), float(phi / (2 * be.alpha)), float(3 * phi / (2 * be.alpha)))
    return qsvt_apply(be, poly, delta=delta / 2)


def svd_discriminator(be, phi, delta):
    """(1, a+1, delta)-encoding of D = |+><+| (x) I + |-><-| (x) B~ on flag (x) system.

    B~ is the sign-polynomial transform, about +1 for sigma <= phi and -1 for
    sigma >= 2 phi, so D|0>|v> is |0>|v> or |1>|v> respectively.
    """
    if not 0 < phi <= 0.5:
        raise PreconditionError(f"threshold phi must lie in (0, 1/2], got {phi}")
    _check_alpha(be)
    _require("input epsilon (discrimination needs eps = o(delta phi / log(1/delta)))",
             be.epsilon, delta * phi / _log(1 / delta))
    sb = sign_transform(be, phi, delta)
    k, D = sb.ancilla_states, sb.dim
    U = sb.core.reshape(k, D, k, D)
    # Layout (anc, flag, sys); controlled-U on flag = 1 conjugated by H on the flag.
    ctrl = np.zeros((k, 2, D, k, 2, D), dtype=complex)
    ctrl[:, 0, :, :, 0, :] = np.eye(k * D).reshape(k, D, k, D)
    ctrl[:, 1, :, :, 1, :] = U
    H = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    core = np.einsum("fg,agibhj,hl->afiblj", H, ctrl, H).reshape(2 * k * D, -1)
    return BlockEncoding(
        core=core, alpha=1.0, ancillas=sb.ancillas, epsilon=float(delta),
        system_qubits=sb.system_qubits + 1, rows=2 * D, cols=2 * D,
        cost=sb.cost, degrees=sb.degrees,
    )


def _inverse_transform(be, kappa, delta):
    """QSVT of the inversion polynomial on A^H: block about A^+ / (2 kappa)."""
    poly = inversion_poly(float(kappa * be.alpha), float(be.alpha * delta / 2))
    return qsvt_apply(adjoint(be), poly, delta=delta / (4 * kappa))


def pseudo_inverse_be(be, kappa, delta):
    """(2 kappa, a+1, delta)-encoding of A^+ for a normalized A with sigma in [1/kappa, 1]."""
    _check_alpha(be)
    _check_normalized(be, kappa)
    _require("input epsilon (inversion needs eps = o(delta / (kappa^2 log(kappa/delta))))",
             be.epsilon, delta / (kappa**2 * _log(kappa / delta)))
    out = _inverse_transform(be, kappa, delta)
    return replace(out, alpha=2.0 * kappa, epsilon=float(delta))


@dataclass(frozen=True, eq=False)
class WindowInverter:
    """W(gamma, delta) on flag (x) Q (x) I: flag-1 branch carries A^+|b> / a_max."""

    inverse: BlockEncoding
    gamma: float
    a_max: float

    @property
    def rotation(self):
        return min(1.0, 2.0 / (self.gamma * self.a_max))

    @property
    def ancilla_states(self):
        return self.inverse.ancilla_states

    def apply(self, state):
        """state has shape (2, k, D) over (F, Q, I) with the F = 1 part empty."""
        k, D = self.ancilla_states, self.inverse.dim
        out = np.zeros_like(state)
        out[0] = (self.inverse.core @ state[0].reshape(-1)).reshape(k, D)
        r = self.rotation
        out[1, 0] = r * out[0, 0]
        out[0, 0] = np.sqrt(max(0.0, 1 - r * r)) * out[0, 0]
        return out

    def unitary(self):
        k, D = self.ancilla_states, self.inverse.dim
        n = k * D
        U = np.zeros((2 * n, 2 * n), dtype=complex)
        for col in range(2 * n):
            e = np.zeros(2 * n, dtype=complex)
            e[col] = 1.0
            f, rest = divmod(col, n)
            if f == 0:
                U[:, col] = self.apply(e.reshape(2, k, D)).reshape(-1)
            else:
                # Flag-1 inputs: apply the inverse and the reversed rotation.
                v = (self.inverse.core @ e[n:]).reshape(k, D)
                r = self.rotation
                w = np.zeros((2, k, D), dtype=complex)
                w[1] = v
                w[0, 0] = -r * v[0]
                w[1, 0] = np.sqrt(max(0.0, 1 - r * r)) * v[0]
                U[:, col] = w.reshape(-1)
        return U

    @property
    def cost(self):
        return self.inverse.cost


def window_inverter(be, gamma, delta, a_max=None, check=True):
    """Windowed inverter valid on left singular vectors with sigma in [gamma, 1]."""
    if not 0 < gamma <= 1:
        raise PreconditionError(f"gamma must lie in (0, 1], got {gamma}")
    a_max = 2.0 / gamma if a_max is None else float(a_max)
    if 2.0 / (gamma * a_max) > 1 + 1e-12:
        raise PreconditionError("a_max too small: flag rotation 2/(gamma a_max) exceeds 1")
    if check:
        _check_alpha(be)
        _require("input epsilon (window needs eps = o(delta gamma^2 / log(1/(delta gamma))))",
                 be.epsilon, delta * gamma**2 / _log(1 / (delta * gamma)))
    inv = _inverse_transform(be, 1.0 / gamma, delta)
    return WindowInverter(inv, float(gamma), a_max)


def apply_be_to_state(be, b, kappa, delta, preamplified=False, norm=None, state_cost=None):
    """State delta-close to A|b>/||A|b>||, with amplitude-amplification rounds charged."""
    norm = spectral_norm(be.alpha * be.block) if norm is None else float(norm)
    factor = 4 if preamplified else 2
    _require(f"input epsilon (needs eps <= delta ||A|| / {factor} kappa)",
             be.epsilon, delta * norm / (factor * kappa), little_o=False)
    if preamplified:
        be = amplify(be, delta * norm / (2 * kappa), norm)
    b = normalize(b)
    if len(b) > be.dim or len(b) != be.cols:
        raise PreconditionError(f"state has length {len(b)}, encoding has {be.cols} columns")
    x = np.zeros(be.dim, dtype=complex)
    x[: len(b)] = b
    good = be.block @ x
    amp = np.linalg.norm(good)
    if amp < 0.5 * norm / (kappa * be.alpha):
        raise AmplificationError(
            f"||A|b>|| / alpha = {amp:.3e} is below the floor ||A||/(2 kappa alpha); "
            "b has almost no weight on singular values within kappa of ||A||"
        )
    rounds = int(np.ceil(be.alpha * kappa / norm))
    per_round = merge_costs(be.cost, state_cost or {"b": 1})
    cost = merge_costs(per_round, times=rounds)
    info = {"rounds": rounds, "success_probability": float(amp**2)}
    return StateVector(normalize(good[: be.rows]), cost=cost, info=info)


def _unitary_from_hermitian(B):
    """V = B + i sqrt(I - B^2) for Hermitian B with ||B|| <= 1."""
    B = 0.5 * (B + B.conj().T)
    w, Q = np.linalg.eigh(B)
    w = np.clip(w, -1.0, 1.0)
    return (Q * (w + 1j * np.sqrt(1 - w * w))) @ Q.conj().T


def _discriminate(psi, V, active):
    """Apply |+><+| (x) I + |-><-| (x) V to clock pair (0, active) of psi[..., clock, I]."""
    x0 = psi[:, 0].copy()
    x1 = psi[:, active].copy()
    plus = (x0 + x1) / np.sqrt(2)
    minus = np.einsum("ij,...j->...i", V, (x0 - x1) / np.sqrt(2))
    psi[:, 0] = (plus + minus) / np.sqrt(2)
    psi[:, active] = (plus - minus) / np.sqrt(2)


def vtaa_query_count(t_max, t_l2, p_succ, t_first, t_prep=0.0, k=0, p_prep=1.0):
    """Amplification cost (T_max + (T_U+k)/sqrt(p_prep)) sqrt(log T') + (||T||_2 + ...) log T' / sqrt(p_succ)."""
    tp = 2.0 * t_max / t_first
    lg = np.log2(tp)
    extra = (t_prep + k) / np.sqrt(p_prep)
    return (t_max + extra) * np.sqrt(lg) + (t_l2 + extra) * lg / np.sqrt(p_succ)


def variable_time_invert(be, b, kappa, delta, max_qubits=DEFAULT_MAX_QUBITS, state_cost=None):
    """Variable-stopping-time inversion: state delta-close to A^+|b>/||A^+|b>||.

    Stage j tests sigma >= 2^(1-j) with a unitary discriminator writing clock
    qubit C_j, then runs the window inverter on branches that just stopped.
    Clocks are uncomputed on the flagged branch with row-space discriminators.
    """
    _check_alpha(be)
    _check_normalized(be, kappa)
    _require("input epsilon (variable-time inversion needs eps = o(delta / (kappa^3 log^2(kappa/delta))))",
             be.epsilon, delta / (kappa**3 * _log(kappa / delta) ** 2))
    m = int(np.ceil(np.log2(kappa))) + 1
    a_max = 2.0 * kappa
    eps_stage = delta / (a_max * m)
    total_qubits = 1 + m + (be.ancillas + 1) + be.system_qubits
    if total_qubits > max_qubits:
        raise PreconditionError(f"needs {total_qubits} qubits, cap is {max_qubits}")
    b = normalize(b)
    if len(b) > be.dim:
        raise PreconditionError(f"state has length {len(b)}, encoding acts on {be.dim} states")
    D = be.dim
    bpad = np.zeros(D, dtype=complex)
    bpad[: len(b)] = b

    left, right = adjoint(be), be
    windows, forward, backward, row_degrees, t, uses = [], [], [], [], [], 0
    for j in range(1, m + 1):
        phi = 2.0**-j
        col = sign_transform(left, phi, eps_stage)
        row = sign_transform(right, phi, eps_stage)
        win = window_inverter(be, max(phi, 1.0 / kappa), eps_stage, a_max, check=False)
        forward.append(_unitary_from_hermitian(col.block))
        backward.append(_unitary_from_hermitian(row.block).conj().T)
        row_degrees.append(row.degrees[-1])
        windows.append(win)
        uses += col.degrees[-1] + win.inverse.degrees[-1]
        t.append(uses)

    k = windows[0].ancilla_states
    psi = np.zeros((2, m + 1, k, D), dtype=complex)
    psi[0, 0, 0] = bpad
    for j in range(1, m + 1):
        _discriminate(psi, forward[j - 1], j)
        psi[:, j] = windows[j - 1].apply(psi[:, j])

    probs = [float(np.sum(np.abs(psi[:, j]) ** 2)) for j in range(1, m + 1)]
    probs[-1] += float(np.sum(np.abs(psi[:, 0]) ** 2))
    flagged = psi[1].copy()
    p_succ = float(np.sum(np.abs(flagged) ** 2))
    if p_succ < 1e-14:
        raise AmplificationError("no amplitude reached the flagged branch")
    undo = np.zeros((1,) + flagged.shape, dtype=complex)
    undo[0] = flagged
    uncompute = 0
    for j in range(m, 0, -1):
        _discriminate(undo, backward[j - 1], j)
        uncompute += row_degrees[j - 1]
    x = undo[0, 0, 0]
    clock_residual = float(1 - np.sum(np.abs(x) ** 2) / p_succ)

    t_arr = np.array(t, dtype=float)
    p_arr = np.array(probs)
    l2 = float(np.sqrt(np.sum(p_arr * t_arr**2)))
    t_max = float(t_arr[-1])
    aa_rounds = int(np.ceil(np.pi / (4 * np.arcsin(min(1.0, np.sqrt(p_succ))))))
    stats = VtStats(
        m=m, stop_times=tuple(t), stop_probs=tuple(probs), l2_time=l2, max_time=t_max,
        success_prob=p_succ, a_max=a_max, clock_qubits=m, phase_registers=0,
        total_qubits=total_qubits, clock_residual=clock_residual, aa_rounds=aa_rounds,
        uncompute_uses=uncompute,
    )
    uses_total = vtaa_query_count(t_max, l2, p_succ, t[0]) + uncompute
    prep = vtaa_query_count(t_max, l2, p_succ, t[0], t_prep=1.0) - vtaa_query_count(
        t_max, l2, p_succ, t[0])
    cost = {name: float(count * uses_total) for name, count in be.cost.items()}
    for name, count in (state_cost or {"b": 1}).items():
        cost[name] = cost.get(name, 0) + float(count * prep)
    out = normalize(x[: max(be.cols, len(b))])
    return StateVector(out, cost=cost, info={"stats": stats}), stats


def neg_power_be(be, c, delta, kappa):
    """(2 kappa^c, a+1, delta)-encoding of A^(-c) for normalized A with sigma in [1/kappa, 1]."""
    if not 0 < c < 1:
        raise PreconditionError(f"exponent must lie in (0, 1), got {c}")
    _check_alpha(be)
    _check_normalized(be, kappa, allow_zero=False)
    _require("input epsilon (negative power needs eps = o(delta / (kappa^(c+1) log(kappa/delta))))",
             be.epsilon, delta / (kappa ** (c + 1) * _log(kappa / delta)))
    scale = 2 * kappa**c
    poly = neg_power_poly(float(c), float(delta / (2 * scale)), float(1 / (kappa * be.alpha)))
    out = qsvt_apply(be, poly, delta=delta / (2 * scale))
    return replace(out, alpha=float(scale), epsilon=float(delta))


def omega_inv_sqrt_be(be, delta, norm=None, kappa=None):
    """(2 sqrt(kappa/||Omega||), a+1, delta)-encoding of Omega^(-1/2) and its condition bound sqrt(kappa)."""
    M = be.alpha * be.block[: be.rows, : be.cols]
    s = np.linalg.svd(M, compute_uv=False)
    norm = float(s[0]) if norm is None else float(norm)
    kappa = float(s[0] / s[-1]) if kappa is None else float(kappa)
    scaled = reinterpret(be, norm)
    if scaled.alpha < 2:
        scaled = subnormalize(scaled, 2 / scaled.alpha)
    out = neg_power_be(scaled, 0.5, delta * np.sqrt(norm), kappa)
    out = reinterpret(out, np.sqrt(norm))
    return out, float(np.sqrt(kappa))
