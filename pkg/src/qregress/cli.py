"""Command-line front end: solve regression problems, verify encodings, sweep costs.

Exit status 0 on success, 2 when a precondition refuses the run (the message
names the violated bound), 1 on I/O or parse errors.
"""

import argparse
import json
import os
import sys
import warnings

import numpy as np

from . import __version__
from .block_encoding import encode_data_structure, encode_exact, encode_sparse_oracle, verify
from .cost import compare, rows_to_csv, sweep_rows
from .errors import PreconditionError
from .linalg import read_matrix, read_vector
from .qsvt import PhaseSequence, _qsp_entries, qsp_angles, qsp_polynomials, qsvt_circuit_check
from .regression import (
    RegressionProblem,
    solve_gls_reg,
    solve_ols_reg,
    solve_ridge,
    solve_wls_reg,
)
from .solvers import DEFAULT_MAX_QUBITS

COMMANDS = ("solve-ols", "solve-ridge", "solve-wls", "solve-gls", "analyze-cost", "verify-be",
            "qsp-roundtrip", "sweep")
QUBIT_LIMIT = 26
QUBIT_ENV = "QREGRESS_MAX_QUBITS"


class InputError(Exception):
    """Unreadable or malformed input file."""


def build_parser():
    p = argparse.ArgumentParser(prog="qregress", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--A", dest="A", help="data matrix file")
    p.add_argument("--b", dest="b", help="target vector file")
    p.add_argument("--L", dest="L", help="penalty matrix file (default identity)")
    p.add_argument("--W", dest="W", help="weights: vector or diagonal matrix file")
    p.add_argument("--Omega", dest="Omega", help="covariance matrix file")
    p.add_argument("--lambda", dest="lam", type=float, help="regularization strength")
    p.add_argument("--delta", type=float, default=1e-3, help="target precision")
    p.add_argument("--model", choices=("dilation", "sparse", "data-structure"), default="dilation")
    p.add_argument("--mode", choices=("oracle", "circuit"), default="oracle")
    p.add_argument("--max-qubits", dest="max_qubits", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", help="write the report here instead of stdout")
    p.add_argument("--degree", type=int, default=8, help="qsp-roundtrip phase count")
    p.add_argument("--param", choices=("kappa", "delta"), default="kappa", help="sweep parameter")
    p.add_argument("--grid", default="4,8,16", help="comma-separated sweep values")
    return p


def _load(reader, path, name):
    if path is None:
        return None
    try:
        return reader(path)
    except (OSError, ValueError) as exc:
        raise InputError(f"cannot read {name} from {path}: {exc}") from exc


def _max_qubits(args):
    if args.max_qubits is not None:
        cap = args.max_qubits
    else:
        env = os.environ.get(QUBIT_ENV)
        try:
            cap = int(env) if env else DEFAULT_MAX_QUBITS
        except ValueError as exc:
            raise InputError(f"{QUBIT_ENV} must be an integer, got {env!r}") from exc
    if not 0 < cap <= QUBIT_LIMIT:
        raise PreconditionError(f"max qubits must lie in [1, {QUBIT_LIMIT}], got {cap}")
    return cap


def _require(args, *names):
    for name in names:
        if getattr(args, name) is None:
            flag = {"lam": "lambda"}.get(name, name)
            what = "regularization strength lambda (λ > 0)" if name == "lam" else f"--{flag}"
            raise PreconditionError(f"missing --{flag}: the solver needs {what}")


def _problem(args):
    _require(args, "A", "b", "lam")
    if args.mode == "circuit":
        raise PreconditionError("solvers run in oracle mode; circuit mode is limited to degree 32")
    A = np.real(_load(read_matrix, args.A, "A"))
    b = np.real(_load(read_vector, args.b, "b"))
    L = _load(read_matrix, args.L, "L")
    W = _load(read_matrix, args.W, "W")
    if W is not None and W.ndim == 2 and 1 in W.shape:
        W = W.ravel()
    Om = _load(read_matrix, args.Omega, "Omega")
    return RegressionProblem(
        A, b, args.lam,
        L=None if L is None else np.real(L),
        W=None if W is None else np.real(W),
        Omega=None if Om is None else np.real(Om),
        delta=args.delta, model=args.model, max_qubits=_max_qubits(args),
    )


def _solve(args):
    problem = _problem(args)
    if args.command == "solve-ridge":
        if args.L is not None:
            raise PreconditionError("ridge regression fixes L = I; drop --L or use solve-ols")
        return solve_ridge(problem.A, problem.lam, problem.b, problem.delta, problem.model,
                           problem.max_qubits)
    if args.command == "solve-wls" or (args.command == "analyze-cost" and problem.W is not None):
        _require(args, "W")
        return solve_wls_reg(problem)
    if args.command == "solve-gls" or (args.command == "analyze-cost" and problem.Omega is not None):
        _require(args, "Omega")
        return solve_gls_reg(problem)
    return solve_ols_reg(problem)


def _verify_be(args):
    _require(args, "A")
    A = _load(read_matrix, args.A, "A")
    if args.model == "dilation":
        be = encode_exact(A)
    elif args.model == "data-structure":
        be = encode_data_structure(A)
    else:
        scale = float(np.abs(A).max())
        nz = np.abs(A) > 0
        be = encode_sparse_oracle(A / scale, int(nz.sum(axis=1).max()), int(nz.sum(axis=0).max()))
        A = A / scale
    measured = verify(be, A)
    record = {
        "command": "verify-be",
        "model": args.model,
        "alpha": be.alpha,
        "ancillas": be.ancillas,
        "claimedEpsilon": be.epsilon,
        "measuredEpsilon": measured,
        "ok": bool(measured <= be.epsilon + 1e-10),
    }
    if args.mode == "circuit":
        rng = np.random.default_rng(args.seed)
        phases = PhaseSequence(rng.uniform(0, 2 * np.pi, args.degree))
        record["circuitDegree"] = args.degree
        record["circuitError"] = qsvt_circuit_check(be, phases)
    if not record["ok"]:
        raise PreconditionError(
            f"measured epsilon {measured:.3e} exceeds claimed epsilon {be.epsilon:.3e}")
    return record


def _qsp_roundtrip(args):
    rng = np.random.default_rng(args.seed)
    phases = PhaseSequence(rng.uniform(0, 2 * np.pi, args.degree))
    P, _ = qsp_polynomials(phases)
    recovered = qsp_angles(P)
    grid = np.linspace(-1, 1, 1000)
    want, _ = _qsp_entries(phases.phases, grid)
    got, _ = _qsp_entries(recovered.phases, grid)
    record = {
        "command": "qsp-roundtrip",
        "degree": args.degree,
        "seed": args.seed,
        "maxError": float(np.max(np.abs(want - got))),
        "phases": [float(p) for p in recovered.phases],
    }
    if args.mode == "circuit":
        if args.A is not None:
            A = _load(read_matrix, args.A, "A")
        else:
            A = rng.standard_normal((4, 4))
        be = encode_exact(A, alpha=np.linalg.norm(A, 2) * 1.25)
        record["circuitError"] = qsvt_circuit_check(be, recovered)
    return record


def _report(rep):
    record = rep.as_record()
    wall = record.pop("wallTime")
    record["notes"] = list(rep.notes)
    record["wallTime"] = wall
    return record


def _analyze(args):
    rep = _solve(args)
    pred = rep.prediction
    return {
        "command": "analyze-cost",
        "pipeline": rep.pipeline,
        "formula": pred.formula_id,
        "note": pred.note,
        "predicted": pred.value,
        "measured": rep.ledger.snapshot(),
        "ratios": compare(pred, rep.ledger),
    }


def _emit(text, path):
    if path is None:
        sys.stdout.write(text)
        return
    try:
        with open(path, "w") as fh:
            fh.write(text)
    except OSError as exc:
        raise InputError(f"cannot write {path}: {exc}") from exc


def run(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "sweep":
            grid = [g for g in args.grid.split(",") if g.strip()]
            try:
                values = [float(g) for g in grid]
            except ValueError as exc:
                raise InputError(f"bad sweep grid {args.grid!r}") from exc
            if not values:
                raise PreconditionError("sweep grid is empty")
            _emit(rows_to_csv(sweep_rows(args.param, values, seed=args.seed)), args.output)
            return 0
        if args.command.startswith("solve-"):
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                record = _report(_solve(args))
        elif args.command == "analyze-cost":
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                record = _analyze(args)
        elif args.command == "verify-be":
            record = _verify_be(args)
        else:
            record = _qsp_roundtrip(args)
        _emit(json.dumps(record, indent=2, default=float) + "\n", args.output)
        return 0
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except PreconditionError as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return 2


def main():
    sys.exit(run())
