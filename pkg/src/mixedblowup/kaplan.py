"""The explicit Kaplan function kappa_eps and the constants of its subsolution bound.

kappa_eps(x) = eps^{N/2} / c_beta * (1 + eps |x|^2)^(-beta) has unit mass and
satisfies  a Lap kappa - b (-Lap)^s kappa + lam kappa >= 0  for lam >= eps^s lam0.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import minimize_scalar

from .fracops import frac_laplacian_pv, psi_profile, spectral_whole_space
from .specfun import DomainError, OperatorParams, gauss_2f1, gauss_2f1_series, psi_mass

__all__ = [
    "CalibrationError",
    "EnvelopeError",
    "KaplanParams",
    "KaplanBounds",
    "SubsolutionReport",
    "psi_beta",
    "kappa_eps",
    "kappa_profile",
    "laplacian_kappa1",
    "closed_form_frac_psi",
    "calibrate_theta",
    "compute_bounds",
    "verify_subsolution",
    "default_beta",
]

# certificate threshold lam(eps) = eps**THRESHOLD_EXPONENT(s) * lam0
THRESHOLD_EXPONENT_NOTE = "lambda(eps) = eps^s * lambda0"


class CalibrationError(ArithmeticError):
    """The hypergeometric prefactor could not reconcile all cross-check radii."""


class EnvelopeError(ArithmeticError):
    """No admissible radius R0 <= 1e3 for the far-field envelope."""


def default_beta(N: int) -> float:
    return N / 2.0 + 1.0


@dataclass(frozen=True)
class KaplanParams:
    beta: float
    epsilon: float
    op: OperatorParams

    def __post_init__(self):
        if not self.beta > self.op.N / 2.0:
            raise DomainError(f"beta must exceed N/2 = {self.op.N / 2}, got {self.beta}")
        if not 0.0 < self.epsilon <= 1.0:
            raise DomainError(f"epsilon must lie in (0, 1], got {self.epsilon}")

    @property
    def c_beta(self) -> float:
        return psi_mass(self.beta, self.op.N)

    def with_epsilon(self, eps: float) -> "KaplanParams":
        return KaplanParams(self.beta, eps, self.op)


def _radius(x, N: int | None = None):
    """Radius of x: scalars and (for N = 1 or N unknown) arrays are radii; for
    N > 1 an array whose last axis has length N is a set of points."""
    if np.ndim(x) == 0:
        return abs(float(x))
    arr = np.asarray(x, dtype=float)
    if N is not None and N > 1 and arr.shape[-1] == N:
        return np.linalg.norm(arr, axis=-1)
    return np.abs(arr)


def psi_beta(x, beta: float, N: int | None = None):
    """(1 + |x|^2)^(-beta)."""
    r = _radius(x, N)
    return (1.0 + r * r) ** (-beta)


def kappa_eps(x, kp: KaplanParams):
    """eps^{N/2} / c_beta * (1 + eps |x|^2)^(-beta)."""
    r = _radius(x, kp.op.N)
    eps = kp.epsilon
    return eps ** (kp.op.N / 2.0) / kp.c_beta * (1.0 + eps * r * r) ** (-kp.beta)


def kappa_profile(kp: KaplanParams):
    """kappa_eps as a RadialProfile (closed-form derivatives attached)."""
    eps, N = kp.epsilon, kp.op.N
    return psi_profile(kp.beta, eps, eps ** (N / 2.0) / kp.c_beta)


def laplacian_kappa1(x, beta: float, N: int):
    """Lap kappa_1 = 2 beta / (c_beta (1+r^2)^{beta+2}) * [(2 beta - N + 2) r^2 - N]."""
    r = _radius(x, N)
    c = psi_mass(beta, N)
    return 2.0 * beta / (c * (1.0 + r * r) ** (beta + 2.0)) * ((2.0 * beta - N + 2.0) * r * r - N)


def closed_form_frac_psi(x, beta: float, op: OperatorParams, theta: float, form: str = "pfaff"):
    """(-Lap)^s Psi_beta(x) = theta * 2F1(N/2+s, beta+s; N/2; -|x|^2).

    ``form="pfaff"`` evaluates theta (1+r^2)^{-beta-s} 2F1(-s, beta+s; N/2; r^2/(1+r^2)),
    whose argument stays in [0, 1); ``form="series"`` sums the untransformed
    series directly and is only available for |x| < 1.
    """
    N, s = op.N, op.s
    if not beta > N / 2.0:
        raise DomainError("closed form needs beta > N/2")
    r = np.asarray(_radius(x, N), dtype=float)
    if form == "pfaff":
        q = 1.0 + r * r
        z = r * r / q
        val = theta * q ** (-beta - s) * gauss_2f1(-s, beta + s, N / 2.0, z, one_minus_z=1.0 / q)
    elif form == "series":
        val = theta * gauss_2f1_series(N / 2.0 + s, beta + s, N / 2.0, -r * r)
    else:
        raise ValueError(f"unknown form {form!r}")
    return float(val) if np.ndim(val) == 0 else val


_CROSS_RADII = (0.5, 1.0, 2.0, 5.0, 10.0)


@lru_cache(maxsize=256)
def _calibrate(beta: float, s: float, N: int, method: str, tol: float) -> float:
    op = OperatorParams(0.0, 1.0, s, N)
    prof = psi_profile(beta)
    if method == "quadrature":
        theta = frac_laplacian_pv(prof, 0.0, op).value
        ref = {r: frac_laplacian_pv(prof, r, op).value for r in _CROSS_RADII}
    elif method == "spectral":
        if N > 2:
            raise DomainError("spectral calibration supports N <= 2")
        L, M = (40.0, 2**14) if N == 1 else (20.0, 256)
        radii, vals = spectral_whole_space(prof, [0.0], op, L=L, M=M)
        theta = float(vals[0])
        ref = {}
    else:
        raise ValueError(f"unknown calibration method {method!r}")
    if not theta > 0:
        raise CalibrationError(f"(-Lap)^s Psi_beta(0) = {theta} is not positive")
    for r, v in ref.items():
        model = closed_form_frac_psi(r, beta, op, theta)
        scale = theta * (1.0 + r * r) ** (-min(beta, N / 2.0) - s)
        if abs(model - v) > tol * max(scale, abs(v)):
            raise CalibrationError(
                f"theta={theta:.10g} fails cross-check at r={r}: closed form {model:.10g} vs quadrature {v:.10g}"
            )
    return theta


def calibrate_theta(beta: float, op: OperatorParams, method: str = "quadrature", tol: float = 1e-4) -> float:
    """Prefactor theta of the hypergeometric closed form, fitted at r=0 and checked at 5 radii."""
    if not beta > op.N / 2.0:
        raise DomainError("calibration needs beta > N/2")
    return _calibrate(float(beta), float(op.s), int(op.N), method, float(tol))


@dataclass(frozen=True)
class KaplanBounds:
    beta: float
    eps: float
    A: float
    B: float
    R0: float
    eta1: float
    eta2: float
    lambda1: float
    lambda2: float
    lambda0: float
    theta: float
    s: float = 0.5
    N: int = 1
    exponent_note: str = THRESHOLD_EXPONENT_NOTE

    def __post_init__(self):
        if not (self.A > 0 and self.B > 0 and self.theta > 0):
            raise DomainError("A, B and theta must be positive")
        if not (0 < self.eta1 <= self.eta2):
            raise DomainError("envelope constants must satisfy 0 < eta1 <= eta2")
        if not (self.R0 >= 1 and self.lambda0 > 0):
            raise DomainError("R0 >= 1 and lambda0 > 0 required")

    def lam(self, eps: float) -> float:
        """Subsolution constant used for kappa_eps."""
        return eps**self.s * self.lambda0

    def to_dict(self) -> dict:
        return asdict(self)


def _frac_kappa1(r, beta, op, theta):
    return closed_form_frac_psi(r, beta, op, theta) / psi_mass(beta, op.N)


def _refined_max(fn, grid):
    """max |fn| on a grid, refined by bounded scalar minimisation around the best node."""
    vals = np.abs(fn(grid))
    i = int(np.argmax(vals))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
    best = float(vals[i])
    if hi > lo:
        res = minimize_scalar(lambda r: -abs(float(fn(np.array([r]))[0])), bounds=(lo, hi),
                              method="bounded", options={"xatol": 1e-12})
        best = max(best, -float(res.fun))
    return best


def compute_bounds(kp0: KaplanParams, ratio_max: float = 3.0, theta: float | None = None) -> KaplanBounds:
    """A, B, R0, eta1, eta2 and lambda0 for kappa_1 (the eps=1 function)."""
    if kp0.epsilon != 1.0:
        raise DomainError("compute_bounds works at eps = 1")
    op, beta, N, s = kp0.op, kp0.beta, kp0.op.N, kp0.op.s
    if theta is None:
        theta = calibrate_theta(beta, op)
    grid = np.concatenate([np.linspace(0.0, 20.0, 20001), np.geomspace(20.0, 1e5, 4000)[1:]])

    A = _refined_max(lambda r: laplacian_kappa1(r, beta, N), grid)
    B = _refined_max(lambda r: _frac_kappa1(r, beta, op, theta), grid)

    # envelope g(r) = (1+r^2)^{N/2+s} * (-(-Lap)^s kappa_1(r)) on (R0, 100 R0]
    cand = np.geomspace(1.0, 1000.0, 2000)
    fine = np.geomspace(1.0, 1e5 * 1.0001, 40000)
    g = -(1.0 + fine**2) ** (N / 2.0 + s) * _frac_kappa1(fine, beta, op, theta)
    ends = np.concatenate([cand, 100.0 * cand])
    g_ends = -(1.0 + ends**2) ** (N / 2.0 + s) * _frac_kappa1(ends, beta, op, theta)
    g_lo, g_hi = g_ends[: cand.size], g_ends[cand.size:]
    found = None
    for i, R0 in enumerate(cand):
        lo = np.searchsorted(fine, R0, side="right")
        hi = np.searchsorted(fine, 100.0 * R0, side="right")
        if hi <= lo:
            continue
        # the window closes at R0, where g is continuous; include both ends exactly
        window = np.concatenate([g[lo:hi], [g_lo[i], g_hi[i]]])
        e1, e2 = float(window.min()), float(window.max())
        if e1 > 0 and e2 / e1 <= ratio_max:
            found = (float(R0), e1, e2)
            break
    if found is None:
        raise EnvelopeError(f"no R0 <= 1e3 with positive envelope of ratio <= {ratio_max}")
    R0, eta1, eta2 = found

    c = kp0.c_beta
    lam1 = 2.0 * op.a * beta * N * (1.0 + R0**2) ** -2.0
    lam2 = c * (1.0 + R0**2) ** beta * (op.a * A + op.b * B)
    return KaplanBounds(beta, 1.0, A, B, R0, eta1, eta2, lam1, lam2, max(lam1, lam2), theta, s, N)


@dataclass(frozen=True)
class SubsolutionReport:
    min_margin: float
    passed: bool
    worst_radius: float

    @property
    def pass_(self) -> bool:
        return self.passed


def default_radii(eps: float) -> np.ndarray:
    rho = np.concatenate([np.linspace(0.0, 100.0, 10001), np.geomspace(100.0, 1e8, 600)[1:]])
    return rho / math.sqrt(eps)


def verify_subsolution(kp: KaplanParams, lam: float, radii=None, theta: float | None = None) -> SubsolutionReport:
    """Sampled check of a Lap kappa_eps - b (-Lap)^s kappa_eps + lam kappa_eps >= 0.

    Both operators are evaluated through the closed forms for kappa_1 and the
    scaling Lap kappa_eps(x) = eps^{1+N/2} (Lap kappa_1)(sqrt(eps) x),
    (-Lap)^s kappa_eps(x) = eps^{s+N/2} ((-Lap)^s kappa_1)(sqrt(eps) x).
    """
    op, beta, eps = kp.op, kp.beta, kp.epsilon
    N, s = op.N, op.s
    if theta is None:
        theta = calibrate_theta(beta, op)
    r = default_radii(eps) if radii is None else np.atleast_1d(np.asarray(radii, dtype=float))
    rho = math.sqrt(eps) * r
    lap = eps ** (1.0 + N / 2.0) * laplacian_kappa1(rho, beta, N)
    frac = eps ** (s + N / 2.0) * _frac_kappa1(rho, beta, op, theta)
    kap = (eps ** (N / 2.0) / kp.c_beta) * (1.0 + rho * rho) ** (-beta)
    margin = op.a * lap - op.b * frac + lam * kap
    slack = margin + 1e-10 * kap
    i = int(np.argmin(margin))
    return SubsolutionReport(float(np.min(margin)), bool(np.all(slack >= 0)), float(np.atleast_1d(r)[i]))
