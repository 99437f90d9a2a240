import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_unitary(rng, n):
    Z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    Q, R = np.linalg.qr(Z)
    return Q * (np.diag(R) / np.abs(np.diag(R)))


def matrix_with_spectrum(rng, s, rows=None, cols=None, real=False):
    """rows x cols matrix with the given singular values and random singular vectors."""
    s = np.asarray(s, dtype=float)
    rows = rows or len(s)
    cols = cols or len(s)
    if real:
        U, _ = np.linalg.qr(rng.standard_normal((rows, rows)))
        V, _ = np.linalg.qr(rng.standard_normal((cols, cols)))
    else:
        U, V = random_unitary(rng, rows), random_unitary(rng, cols)
    S = np.zeros((rows, cols))
    S[: len(s), : len(s)] = np.diag(s)
    return U @ S @ V.conj().T


ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance():
    """Record one summary line per acceptance criterion."""

    def record(number, ok, detail):
        line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
