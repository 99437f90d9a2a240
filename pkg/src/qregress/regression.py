"""Regularized least-squares pipelines on simulated block-encodings.

Every pipeline reduces to one problem: invert the augmented matrix
A_L = [[A, 0], [sqrt(lam) L, 0]] on |b, 0>.  The top half of A_L^+ |b, 0> is
the regularized solution (A^T A + lam L^T L)^(-1) A^T b.  Weighted and
generalized problems first rewrite A and b as sqrt(W) A, sqrt(W) b or
Omega^(-1/2) A, Omega^(-1/2) b.
"""

import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from .arith import amplify, augment, product_amplified, subnormalize
from .block_encoding import (
    encode_data_structure,
    encode_exact,
    encode_sparse_oracle,
    reinterpret,
)
from .cost import CostLedger, predict
from .errors import PreconditionError
from .linalg import normalize, spectral_norm, state_distance
from .solvers import (
    DEFAULT_MAX_QUBITS,
    LITTLE_O,
    StateVector,
    apply_be_to_state,
    omega_inv_sqrt_be,
    variable_time_invert,
)

MODELS = ("dilation", "sparse", "data-structure")


class IllFitWarning(UserWarning):
    """The target has at least half its weight outside the column space of A_L."""


@dataclass(frozen=True, eq=False)
class RegressionProblem:
    A: np.ndarray
    b: np.ndarray
    lam: float
    L: np.ndarray | None = None
    W: np.ndarray | None = None
    Omega: np.ndarray | None = None
    delta: float = 1e-3
    model: str = "dilation"
    max_qubits: int = DEFAULT_MAX_QUBITS

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        b = np.asarray(self.b, dtype=float).reshape(-1)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        N, d = A.shape
        if len(b) != N:
            raise PreconditionError(f"b has length {len(b)}, A has {N} rows")
        if not self.lam > 0:
            raise PreconditionError(f"lambda must be positive, got {self.lam}")
        if not 0 < self.delta < 1:
            raise PreconditionError(f"delta must lie in (0, 1), got {self.delta}")
        if self.model not in MODELS:
            raise PreconditionError(f"unknown input model {self.model!r}")
        L = np.eye(d) if self.L is None else np.atleast_2d(np.asarray(self.L, dtype=float))
        if L.shape[1] != d:
            raise PreconditionError(f"L has {L.shape[1]} columns, A has {d}")
        object.__setattr__(self, "L", L)
        if self.W is not None:
            W = np.asarray(self.W, dtype=float)
            w = np.diag(W) if W.ndim == 2 else W
            if W.ndim == 2 and not np.allclose(W, np.diag(w)):
                raise PreconditionError("W must be diagonal")
            if w.shape != (N,) or np.any(w <= 0):
                raise PreconditionError("W must be a positive diagonal with one weight per row")
            object.__setattr__(self, "W", w)
        if self.Omega is not None:
            Om = np.atleast_2d(np.asarray(self.Omega, dtype=float))
            if Om.shape != (N, N) or not np.allclose(Om, Om.T):
                raise PreconditionError("Omega must be a symmetric N x N matrix")
            if np.linalg.eigvalsh(Om)[0] <= 0:
                raise PreconditionError("Omega must be positive definite")
            object.__setattr__(self, "Omega", Om)

    @property
    def good_regularizer(self):
        s = np.linalg.svd(self.L, compute_uv=False)
        return self.L.shape[0] >= self.L.shape[1] and s[-1] > 1e-12 * s[0]


@dataclass(frozen=True)
class ModifiedCondNumber:
    kappa: float
    formula_kind: str


@dataclass
class SolutionReport:
    pipeline: str
    quantum_state: StateVector
    classical_solution: np.ndarray
    fidelity: float
    trace_distance: float
    residual_s: float
    kappa: ModifiedCondNumber
    kappa_measured: float
    lam: float
    dimensions: tuple
    ledger: CostLedger
    predicted_cost: float
    wall_time: float
    ill_fit: bool = False
    notes: list = field(default_factory=list)
    prediction: object = None

    def as_record(self):
        """Report fields in a fixed order."""
        return {
            "pipeline": self.pipeline,
            "dimensions": list(self.dimensions),
            "lambda": self.lam,
            "kappaReported": self.kappa.kappa,
            "kappaMeasured": self.kappa_measured,
            "fidelity": self.fidelity,
            "traceDistance": self.trace_distance,
            "residualS": self.residual_s,
            "degreesUsed": list(self.ledger.degree_log),
            "oracleCounts": self.ledger.snapshot(),
            "predictedCost": self.predicted_cost,
            "wallTime": self.wall_time,
        }


def _cond(M):
    s = np.linalg.svd(M, compute_uv=False)
    s = s[s > 1e-12 * s[0]]
    return float(s[0] / s[-1])


def augmented_matrix(A, L, lam):
    A, L = np.atleast_2d(A), np.atleast_2d(L)
    d = A.shape[1]
    top = np.hstack([A, np.zeros((A.shape[0], d))])
    bottom = np.hstack([np.sqrt(lam) * L, np.zeros((L.shape[0], d))])
    return np.vstack([top, bottom])


def kappa_ols(A, L, lam):
    nA, nL = spectral_norm(A), spectral_norm(L)
    return ModifiedCondNumber(_cond(L) * (1 + nA / (np.sqrt(lam) * nL)), "OLS")


def kappa_wls(A, L, lam, w):
    nA, nL = spectral_norm(A), spectral_norm(L)
    return ModifiedCondNumber(_cond(L) * (1 + np.sqrt(np.max(w)) * nA / (np.sqrt(lam) * nL)), "WLS")


def kappa_gls(A, L, lam, Omega):
    nA, nL = spectral_norm(A), spectral_norm(L)
    ev = np.linalg.eigvalsh(Omega)
    k_om, n_om = ev[-1] / ev[0], ev[-1]
    scale = np.sqrt(k_om / n_om)
    return ModifiedCondNumber(_cond(L) * (1 + nA * scale / (np.sqrt(lam) * nL)), "GLS")


@dataclass(frozen=True)
class SpectrumCheck:
    norm_bounds: tuple
    kappa_bound: float
    sigma_max: float
    ratio: float
    checked: bool
    notice: str = ""


def augmented_spectrum_check(A, L, lam):
    """Measured norm and condition number of A_L against its norm and condition-number bounds."""
    A, L = np.atleast_2d(np.asarray(A, float)), np.atleast_2d(np.asarray(L, float))
    M = augmented_matrix(A, L, lam)
    s = np.linalg.svd(M, compute_uv=False)
    s = s[s > 1e-12 * max(s[0], 1e-300)]
    sigma_max, ratio = float(s[0]), float(s[0] / s[-1])
    nA, nL = spectral_norm(A), spectral_norm(L)
    lo, hi = max(nA, np.sqrt(lam) * nL), nA + np.sqrt(lam) * nL
    sl = np.linalg.svd(L, compute_uv=False)
    if L.shape[0] < L.shape[1] or sl[-1] <= 1e-12 * sl[0]:
        return SpectrumCheck((lo, hi), ratio, sigma_max, ratio, False,
                             "L is not positive definite; kappa taken from the measured A_L spectrum")
    bound = kappa_ols(A, L, lam).kappa
    tol = 1e-9 * hi
    if not lo - tol <= sigma_max <= hi + tol:
        raise AssertionError(f"sigma_max(A_L) = {sigma_max} outside [{lo}, {hi}]")
    if ratio > bound * (1 + 1e-9):
        raise AssertionError(f"condition number {ratio} exceeds bound {bound}")
    return SpectrumCheck((lo, hi), bound, sigma_max, ratio, True)


def _solve_dense(M, rhs):
    return np.linalg.solve(M, rhs)


def classical_solution(problem):
    """Dense closed-form regularized solution; checked against an SVD of A_L."""
    A, L, lam, b = problem.A, problem.L, problem.lam, problem.b
    if problem.Omega is not None:
        S = np.linalg.cholesky(problem.Omega)
        A, b = np.linalg.solve(S, A), np.linalg.solve(S, b)
    elif problem.W is not None:
        r = np.sqrt(problem.W)
        A, b = r[:, None] * A, r * b
    normal = A.T @ A + lam * L.T @ L
    if np.linalg.matrix_rank(normal) < normal.shape[0]:
        raise PreconditionError("regularized normal matrix is singular (L is not a good regularizer)")
    x = _solve_dense(normal, A.T @ b)
    M = augmented_matrix(A, L, lam)
    rhs = np.concatenate([b, np.zeros(L.shape[0])])
    y = np.linalg.pinv(M) @ rhs
    if not np.allclose(y[: A.shape[1]], x, atol=1e-9 * max(1.0, np.linalg.norm(x))):
        raise RuntimeError("normal-equation and SVD solutions disagree")
    return x


def _transformed(problem):
    """(A', b') after weighting or whitening, as dense arrays."""
    A, b = problem.A, problem.b
    if problem.Omega is not None:
        w, V = np.linalg.eigh(problem.Omega)
        R = V @ np.diag(w**-0.5) @ V.T
        return R @ A, R @ b
    if problem.W is not None:
        r = np.sqrt(problem.W)
        return r[:, None] * A, r * b
    return A, b


def residual_diagnostic(problem):
    """S = 1 - ||Pi_col(A_L) |b, 0>||^2 for the (transformed) problem."""
    A, b = _transformed(problem)
    M = augmented_matrix(A, problem.L, problem.lam)
    rhs = np.concatenate([normalize(b).real if np.linalg.norm(b) else b, np.zeros(problem.L.shape[0])])
    U, s, _ = np.linalg.svd(M, full_matrices=False)
    U = U[:, s > 1e-12 * max(s[0], 1e-300)]
    proj = U.T @ rhs
    return float(np.clip(1 - proj @ proj, 0.0, 1.0))


def _encode(M, model, oracle, target_eps=0.0):
    """Input-model block-encoding of a real matrix."""
    if model == "dilation":
        return encode_exact(M, oracle=oracle)
    if model == "data-structure":
        return encode_data_structure(M, target_eps, oracle=oracle)
    scale = float(np.abs(M).max())
    nz = np.abs(M) > 0
    s_r = max(int(nz.sum(axis=1).max()), 1)
    s_c = max(int(nz.sum(axis=0).max()), 1)
    return reinterpret(encode_sparse_oracle(M / scale, s_r, s_c, target_eps, oracle), 1 / scale)


def build_sqrtW_A_encoding(W, A, target_eps=1e-10, oracle="A"):
    """(sqrt(w_max) ||A||_F, ceil(log(N+d)), eps)-encoding of sqrt(W) A."""
    w = np.asarray(W, dtype=float)
    w = np.diag(w) if w.ndim == 2 else w
    if np.any(w <= 0):
        raise PreconditionError("weights must be positive")
    return encode_data_structure(np.atleast_2d(A), target_eps, weights=w, oracle=oracle)


def build_sqrtW_b_state(W, b, target_eps=1e-10):
    """State sqrt(W) b / ||sqrt(W) b|| with ceil(sqrt(w_max/w_min)) amplification rounds charged."""
    w = np.asarray(W, dtype=float)
    w = np.diag(w) if w.ndim == 2 else w
    if np.any(w <= 0):
        raise PreconditionError("weights must be positive")
    b = np.asarray(b, dtype=float)
    if np.linalg.norm(b) == 0:
        raise PreconditionError("b must be nonzero")
    rounds = int(np.ceil(np.sqrt(w.max() / w.min()) - 1e-12))
    state = normalize(np.sqrt(w) * b)
    return StateVector(state, cost={"b": rounds}, info={"rounds": rounds})


def _vt_budget(kappa, delta):
    """Encoding error, relative to ||A_L||, that keeps every stage of the inverter robust.

    This is the little-o budget divided by 16 m, which also covers the
    per-stage window polynomials of degree about kappa log(kappa/delta).
    """
    lg = max(np.log(kappa / delta), 1.0)
    m = int(np.ceil(np.log2(kappa))) + 1
    return LITTLE_O * delta / (kappa**3 * lg**2) / (16 * m)


def _run_augmented(pipeline, problem, beA, beL, b_state, kappa, norm_A, norm_L, extra_notes=(),
                   prediction=None):
    """Invert the augmented encoding on |b, 0> and assemble the report."""
    start = time.perf_counter()
    lam, delta = problem.lam, problem.delta
    d = problem.A.shape[1]
    notes = list(extra_notes)
    beAL = augment(beA, beL, lam)
    A_t, b_t = _transformed(problem)
    M = augmented_matrix(A_t, problem.L, lam)
    norm_AL = spectral_norm(M)
    be = reinterpret(beAL, norm_AL)
    if be.alpha < 2:
        be = subnormalize(be, 2 / be.alpha)
    residual = residual_diagnostic(problem)
    ill_fit = residual >= 0.5
    if ill_fit:
        warnings.warn(f"residual S = {residual:.3f} >= 1/2; success probability rescaled by "
                      "1/sqrt(1 - S)", IllFitWarning, stacklevel=3)
        notes.append("ill-fit: success-probability accounting rescaled by 1/sqrt(1-S)")
    if residual > 1 - 1e-12:
        raise PreconditionError("b is orthogonal to the column space of A_L (S = 1)")
    rhs = np.zeros(be.dim, dtype=complex)
    rhs[: len(b_state.amplitudes)] = b_state.amplitudes
    state, stats = variable_time_invert(be, rhs, kappa.kappa, delta, problem.max_qubits,
                                        state_cost=b_state.cost or {"b": 1})
    x_q = state.amplitudes[:d]
    if np.linalg.norm(x_q) < 0.5:
        raise RuntimeError("solution register lost its weight to the padding block")
    x_q = normalize(x_q)
    x_c = classical_solution(problem)
    xn = normalize(x_c.astype(complex))
    fid = float(abs(np.vdot(xn, x_q)) ** 2)
    ledger = CostLedger(
        counts={k: float(v) for k, v in state.cost.items()},
        degree_log=[int(t) for t in stats.stop_times],
        aa_rounds=stats.aa_rounds,
    )
    if ill_fit:
        ledger.counts = {k: v / np.sqrt(1 - residual) for k, v in ledger.counts.items()}
    pred = prediction or _prediction(pipeline, problem, kappa.kappa, beA, beL, norm_A, norm_L)
    kappa_measured = _cond(M[:, :d])
    return SolutionReport(
        pipeline=pipeline,
        quantum_state=StateVector(x_q, cost=dict(ledger.counts), info={"stats": stats}),
        classical_solution=x_c,
        fidelity=fid,
        trace_distance=float(np.sqrt(max(0.0, 1 - fid))),
        residual_s=residual,
        kappa=kappa,
        kappa_measured=kappa_measured,
        lam=float(lam),
        dimensions=problem.A.shape,
        ledger=ledger,
        predicted_cost=pred.value,
        wall_time=time.perf_counter() - start,
        ill_fit=ill_fit,
        notes=notes,
        prediction=pred,
    )


def _prediction(pipeline, problem, kappa, beA, beL, norm_A, norm_L):
    base = {"kappa": kappa, "alpha_A": beA.alpha, "alpha_L": beL.alpha, "norm_A": norm_A,
            "norm_L": norm_L, "lambda": problem.lam, "delta": problem.delta}
    if pipeline == "Ridge":
        return predict("Ridge-Cor", base)
    if pipeline == "WLS":
        w = problem.W
        return predict("WLS-Thm", {**base, "w_max": w.max(), "w_min": w.min()})
    return predict("OLS-Thm", base)


def _input_eps(problem, kappa):
    """Encoding error allowed on each input so the augmented encoding fits the inverter."""
    A_t, _ = _transformed(problem)
    norm_AL = spectral_norm(augmented_matrix(A_t, problem.L, problem.lam))
    return 0.25 * _vt_budget(kappa, problem.delta) * norm_AL


def solve_ols_reg(problem, pipeline="OLS"):
    """State delta-close to (A^T A + lam L^T L)^(-1) A^T |b>, normalized."""
    kappa = kappa_ols(problem.A, problem.L, problem.lam)
    _require_good(problem)
    eps = _input_eps(problem, kappa.kappa)
    beA = _encode(problem.A, problem.model, "A", eps)
    if pipeline == "Ridge":
        beL = encode_exact(problem.L, alpha=1.0, oracle=None)
    else:
        beL = _encode(problem.L, problem.model, "L", eps / np.sqrt(problem.lam))
    b_state = StateVector(normalize(problem.b.astype(complex)), cost={"b": 1})
    return _run_augmented(pipeline, problem, beA, beL, b_state, kappa,
                          spectral_norm(problem.A), spectral_norm(problem.L))


def solve_ridge(A, lam, b, delta=1e-3, model="dilation", max_qubits=DEFAULT_MAX_QUBITS):
    """Ridge regression: L = I, kappa = 1 + ||A|| / sqrt(lam)."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    problem = RegressionProblem(A, b, lam, L=np.eye(A.shape[1]), delta=delta, model=model,
                                max_qubits=max_qubits)
    report = solve_ols_reg(problem, pipeline="Ridge")
    report.kappa = ModifiedCondNumber(1 + spectral_norm(A) / np.sqrt(lam), "OLS")
    return report


def _require_good(problem):
    if not problem.good_regularizer:
        raise PreconditionError("L must be positive definite (a good regularizer)")


def _is_identity(M):
    return M.shape[0] == M.shape[1] and np.allclose(M, np.eye(M.shape[0]), atol=0, rtol=0)


def solve_wls_reg(problem):
    """State delta-close to (A^T W A + lam L^T L)^(-1) A^T W |b>, normalized."""
    if problem.W is None:
        raise PreconditionError("weighted least squares needs W")
    if np.all(problem.W == 1.0):
        report = solve_ols_reg(_without(problem, W=None))
        report.pipeline = "WLS"
        report.notes.append("W = I: reduced to OLS")
        return report
    _require_good(problem)
    w = problem.W
    kappa = kappa_wls(problem.A, problem.L, problem.lam, w)
    eps = _input_eps(problem, kappa.kappa)
    beA = build_sqrtW_A_encoding(w, problem.A, eps)
    beL = _encode(problem.L, problem.model, "L", eps / np.sqrt(problem.lam))
    b_state = build_sqrtW_b_state(w, problem.b, eps)
    sqrtWA = np.sqrt(w)[:, None] * problem.A
    return _run_augmented("WLS", problem, beA, beL, b_state, kappa,
                          spectral_norm(sqrtWA), spectral_norm(problem.L))


def _without(problem, **changes):
    fields = {k: getattr(problem, k) for k in
              ("A", "b", "lam", "L", "W", "Omega", "delta", "model", "max_qubits")}
    fields.update(changes)
    return RegressionProblem(**fields)


def solve_gls_reg(problem):
    """State delta-close to (A^T Omega^-1 A + lam L^T L)^(-1) A^T Omega^-1 |b>, normalized.

    Omega^(-1/2) comes from a negative-power transform, Omega^(-1/2) A from an
    amplified product, and Omega^(-1/2) b from applying the encoding to |b>.
    """
    if problem.Omega is None:
        raise PreconditionError("generalized least squares needs Omega")
    if _is_identity(problem.Omega):
        N = problem.A.shape[0]
        report = solve_wls_reg(_without(problem, Omega=None, W=np.ones(N)))
        report.pipeline = "GLS"
        report.notes.append("Omega = I: reduced to WLS with W = I")
        return report
    _require_good(problem)
    kappa = kappa_gls(problem.A, problem.L, problem.lam, problem.Omega)
    lam, delta = problem.lam, problem.delta
    eps = _input_eps(problem, kappa.kappa)
    norm_A = spectral_norm(problem.A)
    ev = np.linalg.eigvalsh(problem.Omega)
    k_om, n_om = ev[-1] / ev[0], ev[-1]
    norm_R = 1 / np.sqrt(ev[0])
    eps_b = delta / (4 * kappa.kappa)
    # Error budget: the product gets eps, Omega^(-1/2) gets what the product and |b> prep allow.
    eps_R = min(eps / (8 * np.sqrt(2) * norm_A), eps_b * norm_R / (4 * np.sqrt(k_om)))
    beOm = _encode(problem.Omega, problem.model, "Omega")
    beR, kappa_R = omega_inv_sqrt_be(beOm, eps_R, norm=n_om, kappa=k_om)
    beA = _encode(problem.A, problem.model, "A", eps / (16 * np.sqrt(2) * norm_R))
    beB = product_amplified(beR, beA, eps, norm_R, norm_A)
    beL0 = _encode(problem.L, problem.model, "L", eps / (4 * np.sqrt(lam)))
    norm_L = spectral_norm(problem.L)
    beL = amplify(beL0, eps / (2 * np.sqrt(lam)), norm_L)
    b_state = apply_be_to_state(beR, problem.b.astype(complex), kappa_R, eps_b, norm=norm_R)
    notes = [f"Omega^(-1/2) condition bound {kappa_R:.6g}"]
    pred = predict("GLS-Thm", {
        "kappa": kappa.kappa, "kappa_Omega": k_om, "alpha_A": beA.alpha, "alpha_L": beL0.alpha,
        "alpha_Omega": beOm.alpha, "norm_A": norm_A, "norm_L": norm_L, "norm_Omega": n_om,
        "delta": delta,
    })
    A_t, _ = _transformed(problem)
    return _run_augmented("GLS", problem, beB, beL, b_state, kappa, spectral_norm(A_t), norm_L,
                          notes, pred)


def state_gap(report1, report2):
    """Phase-insensitive distance between two reports' solution states."""
    return state_distance(report1.quantum_state.amplitudes, report2.quantum_state.amplitudes)
