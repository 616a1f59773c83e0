"""Special functions: log-gamma, Gauss 2F1 and the closed-form constants.

Everything here is real-valued and double precision.  The Gamma function goes
through a Lanczos approximation (g = 7, nine coefficients), which is good to
roughly 15 significant digits on the positive axis.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "DomainError",
    "ConvergenceError",
    "OperatorParams",
    "HyperParams",
    "log_gamma",
    "gamma_fn",
    "abs_gamma_negative",
    "gauss_2f1",
    "gauss_2f1_series",
    "frac_constant",
    "psi_mass",
    "sphere_area",
]


class DomainError(ValueError):
    """Argument outside the domain where the function is defined/implemented."""


class ConvergenceError(ArithmeticError):
    """A series or quadrature did not reach its tolerance."""


@dataclass(frozen=True)
class OperatorParams:
    """Coefficients of the mixed operator ``-a*Lap + b*(-Lap)^s`` in dimension N."""

    a: float = 1.0
    b: float = 1.0
    s: float = 0.5
    N: int = 1

    def __post_init__(self):
        if not (self.a >= 0.0 and math.isfinite(self.a)):
            raise DomainError(f"local weight a must be >= 0, got {self.a}")
        if not (self.b > 0.0 and math.isfinite(self.b)):
            raise DomainError(f"nonlocal weight b must be > 0, got {self.b}")
        if not (0.0 < self.s < 1.0):
            raise DomainError(f"fractional order s must lie in (0, 1), got {self.s}")
        if int(self.N) != self.N or self.N < 1:
            raise DomainError(f"dimension N must be a positive integer, got {self.N}")
        object.__setattr__(self, "N", int(self.N))

    def symbol(self, xi):
        """Fourier multiplier ``a|xi|^2 + b|xi|^{2s}`` (``xi`` is |frequency|)."""
        xi = np.abs(np.asarray(xi, dtype=float))
        return self.a * xi**2 + self.b * xi ** (2.0 * self.s)

    def to_dict(self) -> dict:
        return {"a": self.a, "b": self.b, "s": self.s, "N": self.N}


# Lanczos coefficients for g = 7, n = 9.
_LANCZOS_G = 7.0
_LANCZOS_P = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


def _lanczos_log_gamma(x: float) -> float:
    # valid for x >= 0.5
    z = x - 1.0
    acc = _LANCZOS_P[0]
    for i in range(1, len(_LANCZOS_P)):
        acc += _LANCZOS_P[i] / (z + i)
    t = z + _LANCZOS_G + 0.5
    return _HALF_LOG_2PI + (z + 0.5) * math.log(t) - t + math.log(acc)


def log_gamma(x: float) -> float:
    """ln Gamma(x) for x > 0."""
    x = float(x)
    if not x > 0.0 or not math.isfinite(x):
        raise DomainError(f"log_gamma requires x > 0, got {x}")
    if x < 0.5:
        # reflection: Gamma(x) Gamma(1-x) = pi / sin(pi x)
        return math.log(math.pi / math.sin(math.pi * x)) - _lanczos_log_gamma(1.0 - x)
    return _lanczos_log_gamma(x)


def gamma_fn(x: float) -> float:
    """Gamma(x) for x > 0."""
    return math.exp(log_gamma(x))


def abs_gamma_negative(x: float) -> float:
    """|Gamma(x)| for -1 < x < 0, through Gamma(x) = Gamma(x + 1) / x."""
    x = float(x)
    if not -1.0 < x < 0.0:
        raise DomainError(f"abs_gamma_negative requires -1 < x < 0, got {x}")
    return gamma_fn(x + 1.0) / abs(x)


def sphere_area(N: int) -> float:
    """Surface measure of the unit sphere S^{N-1} (equals 2 for N = 1)."""
    return 2.0 * math.pi ** (N / 2.0) / gamma_fn(N / 2.0)


def frac_constant(params: OperatorParams) -> float:
    """Normalisation constant C_{N,s} of the fractional Laplacian."""
    N, s = params.N, params.s
    return (
        2.0 ** (2.0 * s)
        * gamma_fn((N + 2.0 * s) / 2.0)
        / (math.pi ** (N / 2.0) * abs_gamma_negative(-s))
    )


def psi_mass(beta: float, N: int) -> float:
    """L^1 norm of (1 + |x|^2)^(-beta) on R^N: pi^{N/2} Gamma(beta - N/2) / Gamma(beta)."""
    if not beta > N / 2.0:
        raise DomainError(f"psi_mass diverges unless beta > N/2 (beta={beta}, N={N})")
    return math.pi ** (N / 2.0) * math.exp(log_gamma(beta - N / 2.0) - log_gamma(beta))


# --------------------------------------------------------------------------
# Gauss hypergeometric function
# --------------------------------------------------------------------------

_SERIES_CAP = 10_000
_TAYLOR_CAP = 400
_REL_EPS = 1e-16


@dataclass(frozen=True)
class HyperParams:
    a: float
    b: float
    c: float
    z: float

    def __post_init__(self):
        _check_c(self.c)
        if not self.z < 1.0:
            raise DomainError(f"2F1 argument must satisfy z < 1, got {self.z}")

    def value(self) -> float:
        return float(gauss_2f1(self.a, self.b, self.c, self.z))


def _check_c(c: float) -> None:
    if c <= 0 and float(c).is_integer():
        raise DomainError(f"2F1 undefined for c = {c} (zero or negative integer)")


def _series(a, b, c, z):
    """Defining power series, vectorised over z; intended for |z| <= 1/2."""
    z = np.asarray(z, dtype=float)
    total = np.ones_like(z)
    term = np.ones_like(z)
    done = np.zeros(z.shape, dtype=bool)
    prev_small = np.zeros(z.shape, dtype=bool)
    for n in range(_SERIES_CAP):
        term = term * ((a + n) * (b + n) / ((c + n) * (n + 1.0))) * z
        total = total + term
        small = np.abs(term) <= _REL_EPS * np.abs(total)
        # two consecutive small terms, or an exactly terminating series
        done |= (small & prev_small) | (term == 0.0)
        prev_small = small
        if done.all():
            return total
    raise ConvergenceError(f"2F1 series did not converge in {_SERIES_CAP} terms")


def _continue_to(a, b, c, u_target):
    """Analytic continuation of 2F1 from z = 1/2 towards z = 1 - u_target.

    The hypergeometric ODE is re-expanded in Taylor series about successive
    centres z_k = 1 - u_k with u_{k+1} = max(u_k / 2, u_target), so each local
    series converges at ratio 1/2 (nearest singularity is z = 1).
    """
    ut = np.asarray(u_target, dtype=float)
    u = np.full(ut.shape, 0.5)
    F = _series(a, b, c, 0.5 * np.ones_like(ut))
    dF = (a * b / c) * _series(a + 1.0, b + 1.0, c + 1.0, 0.5 * np.ones_like(ut))
    apb1 = a + b + 1.0
    while np.any(u > ut):
        u_next = np.maximum(0.5 * u, ut)
        t = u - u_next
        z0 = 1.0 - u
        p_lin = 2.0 * u - 1.0                # 1 - 2 z0
        p_const = c - apb1 + apb1 * u        # c - (a+b+1) z0
        q = z0 * u                           # z0 (1 - z0)
        e_prev, e_cur = F.copy(), dF * t     # e_n = d_n t^n
        F_new = e_prev + e_cur
        dF_acc = e_cur.copy()                # sum n e_n
        small_prev = np.zeros(ut.shape, dtype=bool)
        converged = False
        for n in range(_TAYLOR_CAP):
            e_next = -(
                (p_lin * n + p_const) * (n + 1.0) * e_cur * t
                - (n + a) * (n + b) * e_prev * t * t
            ) / (q * (n + 2.0) * (n + 1.0))
            F_new = F_new + e_next
            dF_acc = dF_acc + (n + 2.0) * e_next
            small = np.abs(e_next) <= _REL_EPS * np.maximum(np.abs(F_new), np.abs(F))
            if np.all((small & small_prev) | (t == 0.0)):
                converged = True
                break
            small_prev = small
            e_prev, e_cur = e_cur, e_next
        if not converged:
            raise ConvergenceError("2F1 continuation: local Taylor series did not converge")
        moving = t > 0.0
        dF = np.where(moving, dF_acc / np.where(moving, t, 1.0), dF)
        F = F_new
        u = u_next
    return F


def gauss_2f1_series(a: float, b: float, c: float, z):
    """2F1 by its defining power series alone; requires |z| < 1 (slow near 1)."""
    _check_c(c)
    scalar = np.ndim(z) == 0
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if np.any(np.abs(z) >= 1.0):
        raise DomainError("power series of 2F1 needs |z| < 1")
    out = _series(a, b, c, z)
    return float(out[0]) if scalar else out


def gauss_2f1(a: float, b: float, c: float, z, one_minus_z=None):
    """Gauss hypergeometric function 2F1(a, b; c; z) for real z < 1.

    |z| <= 1/2 uses the power series; z < -1/2 is mapped through the Pfaff
    transformation to z/(z-1) in (1/3, 1); arguments in (1/2, 1) are reached by
    Taylor re-expansion of the hypergeometric ODE.  ``one_minus_z`` may be passed
    to keep full relative precision of 1 - z when z is very close to 1.
    Accepts scalars or arrays for ``z``; returns the same shape.
    """
    _check_c(c)
    scalar = np.ndim(z) == 0
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if one_minus_z is None:
        omz = 1.0 - z
    else:
        omz = np.broadcast_to(np.atleast_1d(np.asarray(one_minus_z, dtype=float)), z.shape)
    if not np.all(np.isfinite(z)):
        raise DomainError("2F1 argument must be finite")
    # with an explicit 1 - z, z itself may have rounded to 1.0
    if np.any(omz <= 0.0) or (one_minus_z is None and np.any(z >= 1.0)):
        raise DomainError("2F1 real evaluation requires z < 1")

    out = np.empty_like(z)
    near = np.abs(z) <= 0.5
    if near.any():
        out[near] = _series(a, b, c, z[near])

    pos = z > 0.5
    if pos.any():
        out[pos] = _continue_to(a, b, c, omz[pos])

    neg = z < -0.5
    if neg.any():
        zn = z[neg]
        w = zn / (zn - 1.0)
        u_w = 1.0 / (1.0 - zn)
        bp = c - b
        val = np.empty_like(zn)
        inner = w <= 0.5
        if inner.any():
            val[inner] = _series(a, bp, c, w[inner])
        if (~inner).any():
            val[~inner] = _continue_to(a, bp, c, u_w[~inner])
        out[neg] = (1.0 - zn) ** (-a) * val

    return float(out[0]) if scalar else out
