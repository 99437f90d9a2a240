"""Query-count ledger, closed-form cost predictions and predicted-vs-measured reports.

Predictions pin every implied constant to 1 and use base-2 logarithms floored
at log2(2) = 1, so they are meant for ratios and scaling, not absolute counts.
"""

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .errors import PreconditionError

ORACLES = ("A", "L", "Omega", "b")

FORMULAS = {
    "OLS-Thm": ("kappa", "alpha_A", "alpha_L", "norm_A", "norm_L", "lambda", "delta"),
    "Ridge-Cor": ("norm_A", "alpha_A", "lambda", "delta"),
    "WLS-Thm": ("kappa", "alpha_A", "alpha_L", "norm_A", "norm_L", "lambda", "delta",
                "w_max", "w_min"),
    "GLS-Thm": ("kappa", "kappa_Omega", "alpha_A", "alpha_L", "alpha_Omega", "norm_A",
                "norm_L", "norm_Omega", "delta"),
    "VTAA-Q": ("T_max", "T_l2", "p_succ", "T_prime"),
    "MI-QSVT": ("kappa", "alpha", "delta"),
    "NegPower": ("kappa", "alpha", "delta", "c"),
}
OPTIONAL = {"VTAA-Q": {"T_U": 0.0, "k": 0.0, "p_prep": 1.0}, "NegPower": {}}


def lg(x):
    return float(np.log2(max(float(x), 2.0)))


@dataclass
class CostLedger:
    counts: dict = field(default_factory=dict)
    degree_log: list = field(default_factory=list)
    aa_rounds: int = 0

    def add(self, name, count):
        if count < 0:
            raise ValueError("oracle counts are non-negative")
        self.counts[name] = self.counts.get(name, 0) + count

    def merge(self, other):
        out = CostLedger(dict(self.counts), list(self.degree_log), self.aa_rounds)
        for name, count in other.counts.items():
            out.add(name, count)
        out.degree_log += other.degree_log
        out.aa_rounds += other.aa_rounds
        return out

    @property
    def total(self):
        return float(sum(self.counts.values()))

    def snapshot(self):
        return {name: float(self.counts.get(name, 0)) for name in ORACLES}


@dataclass(frozen=True)
class CostPrediction:
    formula_id: str
    inputs: dict
    value: float
    terms: dict = field(default_factory=dict)
    note: str = ""


def _ratio_term(p, scale_A=1.0):
    top = scale_A * p["alpha_A"] + np.sqrt(p["lambda"]) * p["alpha_L"]
    bottom = scale_A * p["norm_A"] + np.sqrt(p["lambda"]) * p["norm_L"]
    return top / bottom


def predict(formula_id, params):
    if formula_id not in FORMULAS:
        raise PreconditionError(f"unknown formula {formula_id!r}")
    missing = [k for k in FORMULAS[formula_id] if k not in params]
    if missing:
        raise PreconditionError(f"{formula_id} needs parameter(s) {', '.join(missing)}")
    p = {**OPTIONAL.get(formula_id, {}), **{k: float(v) for k, v in params.items()}}
    note, terms = "", {}
    if formula_id in ("OLS-Thm", "WLS-Thm"):
        k = p["kappa"]
        scale = np.sqrt(p["w_max"]) if formula_id == "WLS-Thm" else 1.0
        value = k * lg(k) * _ratio_term(p, scale) * lg(k / p["delta"])
        terms = {"A": value}
        if formula_id == "WLS-Thm":
            terms["b"] = k * lg(k) * np.sqrt(p["w_max"] / p["w_min"])
            value += terms["b"]
        note = "reconstructed"
    elif formula_id == "Ridge-Cor":
        k = 1 + p["norm_A"] / np.sqrt(p["lambda"])
        ratio = (p["alpha_A"] + np.sqrt(p["lambda"])) / (p["norm_A"] + np.sqrt(p["lambda"]))
        value = k * lg(k) * ratio * lg(k / p["delta"])
        terms = {"A": value}
        p["kappa"] = k
    elif formula_id == "GLS-Thm":
        k, ko = p["kappa"], p["kappa_Omega"]
        inner = k * ko * p["norm_A"] / (p["delta"] * p["norm_Omega"])
        coeffs = {
            "A": p["alpha_A"] / p["norm_A"] * lg(inner) ** 2,
            "L": p["alpha_L"] / p["norm_L"] * lg(k * p["norm_L"] / p["delta"]) ** 2,
            "Omega": p["alpha_Omega"] * ko / p["norm_Omega"] * lg(inner) ** 3,
            "b": 1.0,
        }
        prefactor = k * np.sqrt(ko) * lg(k)
        terms = {name: prefactor * c for name, c in coeffs.items()}
        value = sum(terms.values())
        p["prefactor"] = prefactor
        p.update({f"C_{name}": c for name, c in coeffs.items()})
        note = "reconstructed; C_* are the per-oracle coefficients of the prefactor"
    elif formula_id == "VTAA-Q":
        lt = float(np.log2(p["T_prime"]))
        extra = (p["T_U"] + p["k"]) / np.sqrt(p["p_prep"])
        value = (p["T_max"] + extra) * np.sqrt(lt) + (p["T_l2"] + extra) * lt / np.sqrt(p["p_succ"])
        terms = {"A": value}
    elif formula_id == "MI-QSVT":
        value = p["kappa"] * p["alpha"] * lg(p["kappa"] / p["delta"])
        terms = {"A": value}
    else:
        value = p["kappa"] * p["alpha"] * lg(p["kappa"] / p["delta"])
        terms = {"Omega": value}
    if not np.isfinite(value) or value <= 0:
        raise PreconditionError(f"{formula_id} evaluated to {value}")
    return CostPrediction(formula_id, p, float(value), terms, note)


def compare(prediction, ledger):
    """Measured/predicted ratios per oracle; empty when nothing was measured."""
    counts = ledger.counts if isinstance(ledger, CostLedger) else dict(ledger)
    if not counts or sum(counts.values()) == 0:
        return {}
    report = {}
    for name, predicted in prediction.terms.items():
        if name in counts and predicted > 0:
            measured = float(counts[name])
            report[name] = {"predicted": predicted, "measured": measured,
                            "ratio": measured / predicted}
    return report


def scaling_exponent(xs, ys):
    """Least-squares slope of log y against log x."""
    slope, _ = np.polyfit(np.log(np.asarray(xs, float)), np.log(np.asarray(ys, float)), 1)
    return float(slope)


def sweep_problem(kappa, dim=8, seed=0):
    """Normalized test matrix with geometric spectrum on [1/kappa, 1] and b spread over it."""
    rng = np.random.default_rng(seed)
    U, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
    V, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
    s = np.geomspace(1.0, 1.0 / kappa, dim)
    return U @ np.diag(s) @ V.T, U @ np.ones(dim) / np.sqrt(dim)


def sweep_rows(param, grid, kappa=8.0, delta=1e-3, dim=8, seed=0):
    """One row per grid value of `param` ('kappa' or 'delta') for variable_time_invert."""
    from .block_encoding import encode_exact
    from .solvers import variable_time_invert

    if param not in ("kappa", "delta"):
        raise PreconditionError(f"sweep parameter must be kappa or delta, got {param!r}")
    if not grid:
        raise PreconditionError("sweep grid is empty")
    rows = []
    for value in grid:
        k = float(value) if param == "kappa" else kappa
        d = float(value) if param == "delta" else delta
        row = {"param": param, "value": float(value), "predicted": "", "measured": "",
               "ratio": "", "error": ""}
        try:
            if k < 1:
                raise PreconditionError(f"kappa must be at least 1, got {k}")
            if not 0 < d < 1:
                raise PreconditionError(f"delta must lie in (0, 1), got {d}")
            A, b = sweep_problem(k, dim, seed)
            state, stats = variable_time_invert(encode_exact(A, alpha=2.0), b, k, d)
            pred = predict("MI-QSVT", {"kappa": k, "alpha": 2.0, "delta": d})
            measured = state.cost["A"]
            row.update(predicted=pred.value, measured=measured, ratio=measured / pred.value)
        except (PreconditionError, ValueError, np.linalg.LinAlgError) as exc:
            row["error"] = str(exc)
        rows.append(row)
    return rows


def rows_to_csv(rows):
    buf = io.StringIO()
    fields = ["param", "value", "predicted", "measured", "ratio", "error"]
    writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
    return buf.getvalue()
