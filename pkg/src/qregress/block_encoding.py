"""Block-encoding values and the constructors for each input model.

A block-encoding stores a compact unitary `core` acting on k ancilla basis
states times the 2^s padded system states, with ancilla index most
significant.  The full unitary on a ancilla qubits is core (+) identity, so
the encoded block A/alpha is the top-left 2^s x 2^s corner of `core`.
"""

from collections import Counter
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg

from .errors import PreconditionError
from .linalg import (
    as_matrix,
    complete_unitary,
    format_number,
    frobenius_norm,
    next_pow2,
    num_qubits,
    pad,
    spectral_norm,
    unitary_dilation,
)


@dataclass(frozen=True)
class InputModelParams:
    model_kind: str = "exactDilation"
    row_sparsity: int | None = None
    col_sparsity: int | None = None
    mu: float | None = None


@dataclass(frozen=True, eq=False)
class BlockEncoding:
    core: np.ndarray
    alpha: float
    ancillas: int
    epsilon: float
    system_qubits: int
    rows: int
    cols: int
    cost: dict = field(default_factory=dict)
    degrees: tuple = ()
    model: InputModelParams = InputModelParams()

    def __post_init__(self):
        if not self.alpha > 0:
            raise PreconditionError("alpha must be positive")
        k = self.core.shape[0] // self.dim
        if k * self.dim != self.core.shape[0] or k > 2**self.ancillas:
            raise PreconditionError("core does not fit the declared registers")

    @property
    def dim(self):
        return 2**self.system_qubits

    @property
    def ancilla_states(self):
        return self.core.shape[0] // self.dim

    @property
    def block(self):
        """The encoded block A~/alpha on the padded system space."""
        return self.core[: self.dim, : self.dim]

    @property
    def unitary(self):
        """Full unitary on a ancilla qubits and s system qubits."""
        n = 2 ** (self.ancillas + self.system_qubits)
        extra = n - self.core.shape[0]
        if extra == 0:
            return self.core.copy()
        return scipy.linalg.block_diag(self.core, np.eye(extra))

    @property
    def triple(self):
        return (self.alpha, self.ancillas, self.epsilon)


def merge_costs(*costs, times=1):
    total = Counter()
    for c in costs:
        total.update(c)
    return {k: v * times for k, v in total.items()}


def _from_block(block, alpha, epsilon, rows, cols, cost, model=InputModelParams(), ancillas=1):
    dim = block.shape[0]
    return BlockEncoding(
        core=unitary_dilation(block),
        alpha=float(alpha),
        ancillas=ancillas,
        epsilon=float(epsilon),
        system_qubits=num_qubits(dim),
        rows=rows,
        cols=cols,
        cost=dict(cost),
        model=model,
    )


def random_perturbation(shape, norm, seed=None):
    """Random matrix of the given spectral norm."""
    rng = np.random.default_rng(seed)
    E = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return E * (norm / spectral_norm(E)) if norm > 0 else np.zeros(shape, dtype=complex)


def encode_exact(A, alpha=None, noise=0.0, seed=None, oracle="A"):
    """(alpha, 1, noise)-encoding of A by dilating (A + E)/alpha, with ||E|| = noise."""
    A = as_matrix(A)
    rows, cols = A.shape
    norm = spectral_norm(A)
    alpha = norm if alpha is None else float(alpha)
    if alpha <= 0:
        raise PreconditionError("alpha must be positive (zero matrix needs an explicit alpha)")
    if alpha < norm * (1 - 1e-12):
        raise PreconditionError(f"alpha = {alpha:.6g} is below ||A|| = {norm:.6g}")
    dim = next_pow2(max(rows, cols))
    block = pad(A, dim) / alpha
    if noise > 0:
        block = block + pad(random_perturbation(A.shape, noise, seed), dim) / alpha
        if spectral_norm(block) > 1:
            raise PreconditionError("perturbed block is no longer a contraction; raise alpha")
    cost = {oracle: 1} if oracle else {}
    return _from_block(block, alpha, noise, rows, cols, cost)


def perturb(be, norm, seed=None):
    """Re-encode be with an extra perturbation of spectral norm `norm` on its block."""
    E = pad(random_perturbation((be.rows, be.cols), norm, seed), be.dim)
    block = be.block + E / be.alpha
    if spectral_norm(block) > 1:
        raise PreconditionError("perturbed block is no longer a contraction")
    out = _from_block(block, be.alpha, be.epsilon + norm, be.rows, be.cols, be.cost, be.model)
    return replace(out, ancillas=max(be.ancillas, 1), degrees=be.degrees)


def _pair_encoding(VR, VL, dim, ancillas, alpha, rows, cols, eps, model, oracle):
    """U_R^H U_L from isometries whose columns are the states psi_i and phi_j."""
    UR = complete_unitary(VR)
    UL = complete_unitary(VL)
    core = UR.conj().T @ UL
    return BlockEncoding(
        core=core,
        alpha=float(alpha),
        ancillas=ancillas,
        epsilon=float(eps),
        system_qubits=num_qubits(dim),
        rows=rows,
        cols=cols,
        cost={oracle: 1} if oracle else {},
        model=model,
    )


def encode_data_structure(A, target_eps=1e-10, weights=None, oracle="A"):
    """Encoding of sqrt(W) A / (sqrt(w_max) ||A||_F) from row-state and norm-state maps.

    psi_i holds row i of A in the ancilla register next to |i>; phi_j holds
    the (weighted) row-norm distribution next to |j>, so <psi_i|phi_j> is
    sqrt(w_i / w_max) a_ij / ||A||_F.  Without weights this is A / ||A||_F.
    """
    A = as_matrix(A)
    N, d = A.shape
    fro = frobenius_norm(A)
    if fro == 0.0:
        raise PreconditionError("data-structure encoding of the zero matrix")
    w = np.ones(N) if weights is None else np.asarray(weights, dtype=float)
    if w.shape != (N,) or np.any(w <= 0):
        raise PreconditionError("weights must be positive, one per row")
    wmax = float(w.max())
    dim = next_pow2(max(N, d))
    flags = 1 if weights is None else 2
    n = flags * dim * dim

    def idx(flag, anc, sys):
        return (flag * dim + anc) * dim + sys

    row_norms = np.linalg.norm(A, axis=1)
    VR = np.zeros((n, dim), dtype=complex)
    for i in range(dim):
        if i < N and row_norms[i] > 0:
            for k in range(d):
                VR[idx(0, k, i), i] = np.conj(A[i, k]) / row_norms[i]
        else:
            VR[idx(0, 0, i), i] = 1.0
    norm_state = np.zeros(dim)
    norm_state[:N] = np.sqrt(w / wmax) * row_norms / fro
    rest = np.sqrt(max(0.0, 1.0 - float(norm_state @ norm_state)))
    VL = np.zeros((n, dim), dtype=complex)
    for j in range(dim):
        for l in range(N):
            VL[idx(0, j, l), j] = norm_state[l]
        if flags == 2:
            VL[idx(1, j, 0), j] = rest
    alpha = np.sqrt(wmax) * fro
    ancillas = max(int(np.ceil(np.log2(N + d))), num_qubits(flags * dim))
    model = InputModelParams("dataStructure", mu=alpha)
    return _pair_encoding(VR, VL, dim, ancillas, alpha, N, d, 0.0, model, oracle)


def encode_sparse_oracle(A, s_r, s_c, target_eps=1e-10, oracle="A"):
    """Sparse-access encoding with alpha = sqrt(s_r s_c).

    psi_i spreads over the nonzero columns of row i with an entry qubit
    carrying conj(sqrt(a_ik)); phi_j spreads over the nonzero rows of column j
    carrying sqrt(a_lj).  Leftover amplitude goes to flag values that never
    overlap between the two families.
    """
    A = as_matrix(A)
    N, d = A.shape
    nz = np.abs(A) > 0
    if s_r < 1 or s_c < 1:
        raise PreconditionError("sparsities must be positive")
    if nz.sum(axis=1).max(initial=0) > s_r:
        raise PreconditionError(f"a row has more than s_r = {s_r} nonzeros")
    if nz.sum(axis=0).max(initial=0) > s_c:
        raise PreconditionError(f"a column has more than s_c = {s_c} nonzeros")
    if np.abs(A).max(initial=0) > 1 + 1e-12:
        raise PreconditionError("sparse access needs |a_ij| <= 1")
    dim = next_pow2(max(N, d))
    flags = 8
    n = flags * dim * dim

    def idx(flag, anc, sys):
        return (flag * dim + anc) * dim + sys

    root = np.sqrt(A.astype(complex))
    mag = np.minimum(np.abs(A), 1.0)
    VR = np.zeros((n, dim), dtype=complex)
    VL = np.zeros((n, dim), dtype=complex)
    for i in range(dim):
        cols_i = np.flatnonzero(nz[i]) if i < N else []
        for k in cols_i:
            VR[idx(0, k, i), i] = np.conj(root[i, k]) / np.sqrt(s_r)
            VR[idx(1, k, i), i] = np.sqrt(1 - mag[i, k]) / np.sqrt(s_r)
        VR[idx(3, 0, i), i] = np.sqrt(max(0.0, 1 - len(cols_i) / s_r))
    for j in range(dim):
        rows_j = np.flatnonzero(nz[:, j]) if j < d else []
        for l in rows_j:
            VL[idx(0, j, l), j] = root[l, j] / np.sqrt(s_c)
            VL[idx(2, j, l), j] = np.sqrt(1 - mag[l, j]) / np.sqrt(s_c)
        VL[idx(4, j, 0), j] = np.sqrt(max(0.0, 1 - len(rows_j) / s_c))
    model = InputModelParams("sparseAccess", row_sparsity=s_r, col_sparsity=s_c)
    alpha = np.sqrt(s_r * s_c)
    return _pair_encoding(VR, VL, dim, num_qubits(flags * dim), alpha, N, d, 0.0, model, oracle)


def encoded_block(be):
    """alpha times the encoded block, restricted to the logical dimensions."""
    return be.alpha * be.block[: be.rows, : be.cols]


def verify(be, target):
    """Spectral-norm distance between target and alpha times the encoded block.

    A target of the logical shape is compared on the logical block only: even
    transforms legitimately map the zero padding states to P(0).
    """
    T = as_matrix(target)
    if T.shape == (be.rows, be.cols):
        return spectral_norm(T - encoded_block(be))
    if T.shape[0] > be.dim or T.shape[1] > be.dim:
        raise PreconditionError(f"target shape {T.shape} does not fit a {be.dim}-dim block")
    return spectral_norm(pad(T, be.dim) - be.alpha * be.block)


def reinterpret(be, c):
    """Read an (alpha, a, eps)-encoding of A as an (alpha/c, a, eps/c)-encoding of A/c."""
    if c <= 0:
        raise PreconditionError("rescaling factor must be positive")
    return replace(be, alpha=be.alpha / c, epsilon=be.epsilon / c)


def adjoint(be):
    """Encoding of A^H from U^H."""
    return replace(be, core=be.core.conj().T, rows=be.cols, cols=be.rows)


def pad_system(be, dim):
    """Grow the system register to `dim` states, keeping the block as [[A~, 0], [0, 0]].

    Padding states are moved out of the ancilla-zero subspace by swapping
    ancilla states 0 and 1 on them.
    """
    if dim == be.dim:
        return be
    if dim < be.dim:
        raise PreconditionError("cannot shrink the system register")
    k = max(be.ancilla_states, 2)
    old = be.core.reshape(be.ancilla_states, be.dim, be.ancilla_states, be.dim)
    U = np.zeros((k, dim, k, dim), dtype=complex)
    U[: be.ancilla_states, : be.dim, : be.ancilla_states, : be.dim] = old
    for j in range(be.ancilla_states, k):
        U[j, : be.dim, j, : be.dim] = np.eye(be.dim)
    extra = np.arange(be.dim, dim)
    U[1, extra, 0, extra] = 1.0
    U[0, extra, 1, extra] = 1.0
    for j in range(2, k):
        U[j, extra, j, extra] = 1.0
    return replace(
        be, core=U.reshape(k * dim, k * dim), system_qubits=num_qubits(dim),
        ancillas=max(be.ancillas, 1),
    )


def pad_ancilla_states(be, k):
    """Core extended by identity to k ancilla states (same encoding)."""
    if k == be.ancilla_states:
        return be.core
    n = k * be.dim
    return scipy.linalg.block_diag(be.core, np.eye(n - be.core.shape[0]))


def save_block_encoding(path, be):
    U = be.unitary
    lines = [
        f"{format_number(be.alpha)} {be.ancillas} {format_number(be.epsilon)} "
        f"{be.system_qubits} {be.rows} {be.cols}",
        f"{U.shape[0]} {U.shape[1]}",
    ]
    lines += [" ".join(repr(complex(z)) for z in row) for row in U]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_block_encoding(path):
    with open(path) as fh:
        lines = [ln.split() for ln in fh.read().splitlines() if ln.strip()]
    alpha, a, eps, s, rows, cols = lines[0]
    n = int(lines[1][0])
    U = np.array([[complex(t) for t in row] for row in lines[2 : 2 + n]])
    return BlockEncoding(
        core=U, alpha=float(alpha), ancillas=int(a), epsilon=float(eps),
        system_qubits=int(s), rows=int(rows), cols=int(cols),
    )
