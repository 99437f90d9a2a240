"""Dense complex linear algebra: SVD, norms, condition numbers, dilation, file I/O."""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import PreconditionError

TOL = 1e-10


def as_matrix(M):
    """Return M as a finite 2-D complex array."""
    M = np.atleast_2d(np.asarray(M, dtype=complex))
    if M.ndim != 2:
        raise PreconditionError(f"expected a matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise PreconditionError("matrix has non-finite entries")
    return M


@dataclass(frozen=True)
class SvdResult:
    """M = left @ diag(singular_values) @ right^H, singular values non-increasing."""

    left: np.ndarray
    singular_values: np.ndarray
    right: np.ndarray

    def reconstruct(self):
        k = len(self.singular_values)
        return (self.left[:, :k] * self.singular_values) @ self.right[:, :k].conj().T


def svd(M):
    M = as_matrix(M)
    try:
        W, s, Vh = np.linalg.svd(M, full_matrices=True)
    except np.linalg.LinAlgError as exc:
        raise RuntimeError(f"SVD did not converge: {exc}") from exc
    return SvdResult(W, s, Vh.conj().T)


def spectral_norm(M):
    M = as_matrix(M)
    if M.size == 0:
        return 0.0
    return float(np.linalg.norm(M, 2))


def frobenius_norm(M):
    return float(np.linalg.norm(as_matrix(M), "fro"))


@dataclass(frozen=True)
class EffCondNumber:
    value: float
    rank_tolerance: float


def effective_condition_number(M, tol=TOL):
    """sigma_max over the smallest singular value above tol * sigma_max."""
    s = np.linalg.svd(as_matrix(M), compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        raise PreconditionError("condition number of the zero matrix is undefined")
    kept = s[s > tol * s[0]]
    return EffCondNumber(float(s[0] / kept[-1]), tol)


def next_pow2(n):
    n = max(int(n), 1)
    return 1 << (n - 1).bit_length()


def num_qubits(dim):
    return int(dim - 1).bit_length() if dim > 1 else 0


def pad(M, rows, cols=None):
    """Zero-pad M to rows x cols."""
    M = as_matrix(M)
    cols = rows if cols is None else cols
    if M.shape[0] > rows or M.shape[1] > cols:
        raise PreconditionError(f"cannot pad shape {M.shape} to {(rows, cols)}")
    out = np.zeros((rows, cols), dtype=complex)
    out[: M.shape[0], : M.shape[1]] = M
    return out


def pad_square(M, dim=None):
    """Pad to a square of the given size, by default the next power of two."""
    M = as_matrix(M)
    if dim is None:
        dim = next_pow2(max(M.shape))
    return pad(M, dim)


def unitary_dilation(B):
    """Unitary [[B, sqrt(I-BB^H)], [sqrt(I-B^H B), -B^H]] for a contraction B."""
    B = as_matrix(B)
    if B.shape[0] != B.shape[1]:
        B = pad_square(B, max(B.shape))
    n = B.shape[0]
    W, s, Vh = np.linalg.svd(B)
    if s.size and s[0] > 1 + 1e-12:
        raise PreconditionError(f"dilation needs a contraction, got norm {s[0]:.6g}")
    s = np.minimum(s, 1.0)
    c = np.sqrt(1.0 - s**2)
    V = Vh.conj().T
    U = np.empty((2 * n, 2 * n), dtype=complex)
    U[:n, :n] = B
    U[:n, n:] = (W * c) @ W.conj().T
    U[n:, :n] = (V * c) @ Vh
    U[n:, n:] = -B.conj().T
    return U


def complete_unitary(V):
    """Extend orthonormal columns V (n x r) to an n x n unitary whose first r columns are V."""
    V = as_matrix(V)
    n, r = V.shape
    Q, _ = scipy.linalg.qr(np.hstack([V, np.eye(n)]))
    U = Q[:, :n].astype(complex)
    U[:, :r] = V
    return U


def unitarity_residual(U):
    U = as_matrix(U)
    return float(np.linalg.norm(U.conj().T @ U - np.eye(U.shape[1]), 2))


def normalize(v):
    v = np.asarray(v, dtype=complex).ravel()
    n = np.linalg.norm(v)
    if n == 0.0:
        raise PreconditionError("cannot normalize the zero vector")
    return v / n


def state_distance(psi, phi):
    """min over global phase of ||psi - e^{i theta} phi|| for unit vectors."""
    psi, phi = normalize(psi), normalize(phi)
    overlap = np.vdot(phi, psi)
    phase = overlap / abs(overlap) if abs(overlap) > 0 else 1.0
    return float(np.linalg.norm(psi - phase * phi))


def fidelity(psi, phi):
    return float(abs(np.vdot(normalize(psi), normalize(phi))) ** 2)


def _parse_rows(text):
    rows = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            rows.append(line.replace(",", " ").split())
    return rows


def read_matrix(path):
    """Read an optional `rows cols` header then rows of whitespace or comma separated numbers.

    A first line of two integers counts as the header whenever the remaining
    lines have exactly that shape.
    """
    with open(path) as fh:
        rows = _parse_rows(fh.read())
    if not rows:
        raise ValueError(f"{path}: empty matrix file")
    head, body = rows[0], rows
    if len(head) == 2 and all(t.isdigit() for t in head):
        r, c = int(head[0]), int(head[1])
        # A `rows cols` header only when the remaining lines have that shape.
        if len(rows) - 1 == r and all(len(row) == c for row in rows[1:]):
            body = rows[1:]
    if len({len(row) for row in body}) != 1:
        raise ValueError(f"{path}: ragged rows")
    M = np.array([[complex(t.replace("i", "j")) for t in row] for row in body])
    if np.all(M.imag == 0):
        M = M.real
    return M


def read_vector(path):
    return read_matrix(path).ravel()


def format_number(z):
    z = complex(z)
    if z.imag == 0:
        return repr(z.real)
    return repr(z)


def write_matrix(path, M):
    M = np.atleast_2d(np.asarray(M))
    with open(path, "w") as fh:
        fh.write(matrix_text(M))


def matrix_text(M):
    M = np.atleast_2d(np.asarray(M))
    lines = [f"{M.shape[0]} {M.shape[1]}"]
    lines += [" ".join(format_number(z) for z in row) for row in M]
    return "\n".join(lines) + "\n"
