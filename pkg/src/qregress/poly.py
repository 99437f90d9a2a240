"""Chebyshev-series polynomials for sign, inverse and negative-power functions.

Each constructor builds a smooth bounded surrogate of the target function,
expands it in the Chebyshev basis with a DCT, truncates the series at the
smallest degree whose dropped tail fits the error budget, and certifies the
result by sampling.
"""

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.fft
from numpy.polynomial import chebyshev as C
from scipy.special import erf, erfcinv

from .errors import AdmissibilityError, PreconditionError

GRID_POINTS = 10_000
SAFETY = 1.05


@dataclass(frozen=True, eq=False)
class ApproxPolynomial:
    coeffs: np.ndarray
    parity: str
    domain: tuple
    tag: str
    params: dict = field(default_factory=dict)
    certified_error: float = 0.0
    target: object = field(default=None, repr=False)

    @property
    def degree(self):
        return len(self.coeffs) - 1

    def __call__(self, x):
        return C.chebval(x, self.coeffs)


def chebyshev_grid(a, b, points=GRID_POINTS):
    """Chebyshev-spaced points on [a, b], endpoints included."""
    t = np.cos(np.pi * np.arange(points) / (points - 1))
    return np.sort(0.5 * (a + b) + 0.5 * (b - a) * t)


def evaluate(poly, x):
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) > 1 + 1e-12):
        raise PreconditionError("polynomials are evaluated on [-1, 1] only")
    coeffs = poly.coeffs if isinstance(poly, ApproxPolynomial) else np.asarray(poly)
    return C.chebval(x, coeffs)


def eval_grid(poly, interval, points=GRID_POINTS, target=None):
    """Sup-norm error of poly against target on a Chebyshev grid of the interval."""
    target = poly.target if target is None else target
    x = chebyshev_grid(*interval, points)
    return float(np.max(np.abs(evaluate(poly, x) - target(x))))


def sup_error(poly, target=None, points=GRID_POINTS):
    """Largest grid error over all intervals of the polynomial's domain."""
    return max(eval_grid(poly, iv, points, target) for iv in poly.domain)


def max_abs(coeffs, points=GRID_POINTS):
    return float(np.max(np.abs(C.chebval(chebyshev_grid(-1, 1, points), coeffs))))


def _parity_mask(n, parity):
    k = np.arange(n)
    if parity == "even":
        return k % 2 == 0
    if parity == "odd":
        return k % 2 == 1
    return np.ones(n, dtype=bool)


def chebyshev_coefficients(f, parity="none", tol=1e-15, max_points=2**18, scale=1.0):
    """Chebyshev coefficients of f on [-1, 1] resolved to about tol.

    `scale` is the narrowest feature width of f; sampling starts fine enough
    that no feature falls between nodes.
    """
    n = max(64, int(2 ** np.ceil(np.log2(16.0 / scale))))
    while True:
        x = np.cos(np.pi * (np.arange(n) + 0.5) / n)
        c = scipy.fft.dct(f(x), type=2) / n
        c[0] /= 2
        c[~_parity_mask(n, parity)] = 0.0
        scale = max(np.max(np.abs(c)), 1.0)
        if np.max(np.abs(c[-n // 8 :])) < tol * scale or n >= max_points:
            return c
        n *= 2


def truncate(c, budget):
    """Shortest prefix whose dropped tail has absolute sum at most budget."""
    tail = np.cumsum(np.abs(c[::-1]))[::-1]
    keep = np.flatnonzero(np.append(tail[1:], 0.0) > budget)
    n = keep[-1] + 2 if keep.size else 1
    return c[:n].copy()


def lobatto_values(c, points):
    """Nodes cos(pi k / n) and the series values there, by one DCT-I (n >= len(c))."""
    n = max(points, len(c))
    padded = np.zeros(n + 1)
    padded[: len(c)] = c
    y = scipy.fft.dct(padded, type=1)
    x = np.cos(np.pi * np.arange(n + 1) / n)
    return x, 0.5 * (y + padded[0] + padded[-1] * (-1.0) ** np.arange(n + 1))


def _certify(c, f, parity, domain, tag, params, budget):
    poly = ApproxPolynomial(c, parity, tuple(domain), tag, params, 0.0, f)
    x, v = lobatto_values(c, max(2**16, 8 * len(c)))
    inside = np.zeros(len(x), dtype=bool)
    for lo, hi in domain:
        inside |= (np.abs(x) >= lo) & (np.abs(x) <= hi) if parity != "none" else (x >= lo) & (x <= hi)
    edges = np.array([e for iv in domain for e in iv])
    errs = np.abs(v[inside] - f(x[inside]))
    edge_err = np.abs(C.chebval(edges, c) - f(edges))
    err = max(float(errs.max(initial=0.0)), float(edge_err.max())) * SAFETY
    peak = float(np.max(np.abs(v)))
    if peak > 1 + 1e-9:
        raise AdmissibilityError(f"{tag} polynomial exceeds 1 on [-1, 1] ({peak:.6g})")
    if err > budget:
        raise AdmissibilityError(f"{tag} polynomial error {err:.3e} exceeds {budget:.3e}")
    return ApproxPolynomial(c, parity, tuple(domain), tag, params, err, f)


def _bump_beta(tail):
    """beta with B(1) <= tail for the plateau B(t) below."""
    return 2.0 * float(erfcinv(tail))


def bump(t, beta):
    """Even plateau, 1 at t = 0 and about erfc(beta/2)/2 at |t| = 1."""
    return (erf(beta * (0.5 - t)) + erf(beta * (0.5 + t))) / (2 * erf(beta / 2))


@lru_cache(maxsize=256)
def sign_poly(eps, gap, center):
    """Even polynomial within eps of sign(center - x) for |x| outside the gap window."""
    for name, v in (("eps", eps), ("gap", gap), ("center", center)):
        if not 0 < v < 1:
            raise PreconditionError(f"sign_poly needs {name} in (0, 1), got {v}")
    k = 2.0 / gap * float(erfcinv(eps / 8))

    def h(x):
        return erf(k * (center - x)) + erf(k * (center + x)) - 1.0

    c = truncate(chebyshev_coefficients(h, "even", scale=1 / k), eps / 4) * (1 - eps / 4)

    def target(x):
        return np.sign(center - np.abs(x))

    lo, hi = center - gap / 2, center + gap / 2
    domain = [iv for iv in ((0.0, lo), (hi, 1.0)) if iv[1] > iv[0]]
    params = {"eps": eps, "gap": gap, "center": center}
    return _certify(c, target, "even", domain, "sign", params, eps)


@lru_cache(maxsize=256)
def inversion_poly(kappa, eps):
    """Odd polynomial within eps/(2 kappa) of 1/(2 kappa x) on [1/kappa, 1]."""
    if kappa < 1:
        raise PreconditionError(f"inversion_poly needs kappa >= 1, got {kappa}")
    if eps <= 0:
        raise PreconditionError("inversion_poly needs eps > 0")
    beta = _bump_beta(min(0.7 * eps / kappa, 0.5))

    def g(x):
        return x / (2 * kappa * (x * x + bump(kappa * x, beta) / kappa**2))

    c = truncate(chebyshev_coefficients(g, "odd", scale=1 / (kappa * beta)), 0.1 * eps / kappa)

    def target(x):
        return 1.0 / (2 * kappa * x)

    params = {"kappa": kappa, "eps": eps}
    return _certify(c, target, "odd", [(1.0 / kappa, 1.0)], "inverse", params, eps / (2 * kappa))


@lru_cache(maxsize=256)
def neg_power_poly(exponent, eps, cut, parity="even"):
    """Polynomial within eps of (cut^c / 2) x^(-c) on [cut, 1], bounded by 1."""
    if not 0 < exponent <= 1:
        raise PreconditionError(f"neg_power_poly needs exponent in (0, 1], got {exponent}")
    if not (0 < eps <= 0.5 and 0 < cut <= 0.5):
        raise PreconditionError("neg_power_poly needs eps, cut in (0, 1/2]")
    if parity not in ("even", "odd"):
        raise PreconditionError("parity must be even or odd")
    beta = _bump_beta(min(eps / exponent, 0.5))
    # Smooth odd step, within eps/8 of sign(x) for |x| >= cut.
    k = 2.0 * float(erfcinv(eps / 8)) / cut

    def g(x):
        base = cut**exponent / 2 * (x * x + cut**2 * bump(x / cut, beta)) ** (-exponent / 2)
        return base * erf(k * x) if parity == "odd" else base

    scale = min(cut / beta, 1 / k) if parity == "odd" else cut / beta
    c = truncate(chebyshev_coefficients(g, parity, scale=scale), eps / 4)

    def target(x):
        value = cut**exponent / 2 * np.abs(x) ** (-exponent)
        return value * np.sign(x) if parity == "odd" else value

    params = {"exponent": exponent, "eps": eps, "cut": cut}
    return _certify(c, target, parity, [(cut, 1.0)], "negPower", params, eps)


@lru_cache(maxsize=256)
def amplification_poly(gain, eps):
    """Odd polynomial within eps of gain * x on [0, 1/(sqrt(2) gain)], bounded by 1."""
    if gain <= 1:
        c = np.array([0.0, gain])
        return ApproxPolynomial(c, "odd", ((0.0, 1.0),), "amplify", {"gain": gain, "eps": 0.0},
                                0.0, lambda x: gain * x)
    edge = 1.0 / (np.sqrt(2) * gain)
    width = 0.85 / gain
    beta = float(erfcinv(eps / 4)) / (width - edge)

    def plateau(x):
        return (erf(beta * (width - x)) + erf(beta * (width + x))) / (2 * erf(beta * width))

    def g(x):
        return gain * x * plateau(x)

    c = truncate(chebyshev_coefficients(g, "odd", scale=1 / beta), eps / 4)
    peak = max_abs(c)
    if peak > 1:
        c = c / peak
    params = {"gain": gain, "eps": eps}
    return _certify(c, lambda x: gain * x, "odd", [(0.0, edge)], "amplify", params, eps)


def poly_to_text(poly):
    head = f"{poly.degree} {poly.parity} {poly.tag}"
    return head + "\n" + " ".join(repr(float(v)) for v in poly.coeffs) + "\n"
