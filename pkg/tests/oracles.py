"""Independent reference values: mpmath at high precision and brute-force quadrature.

Nothing here imports the package's numerics; these are the authorities the
tests compare against.
"""
from __future__ import annotations

import math

import mpmath as mp
import numpy as np

mp.mp.dps = 30


def gamma(x: float) -> float:
    return float(mp.gamma(x))


def frac_constant(N: int, s: float) -> float:
    return float(mp.power(4, s) * mp.gamma((N + 2 * mp.mpf(s)) / 2) / (mp.pi ** (mp.mpf(N) / 2) * abs(mp.gamma(-mp.mpf(s)))))


def sphere_area(N: int) -> float:
    return float(2 * mp.pi ** (mp.mpf(N) / 2) / mp.gamma(mp.mpf(N) / 2))


def psi_mass_quad(beta: float, N: int) -> float:
    """|S^{N-1}| int_0^inf r^{N-1} (1+r^2)^{-beta} dr by tanh-sinh quadrature."""
    val = mp.quad(lambda r: r ** (N - 1) * (1 + r * r) ** (-mp.mpf(beta)), [0, 1, 10, mp.inf])
    return float(sphere_area(N) * val)


def hyp2f1(a, b, c, z) -> float:
    return float(mp.hyp2f1(a, b, c, z))


def frac_laplacian_psi(r: float, beta: float, N: int, s: float) -> float:
    """(-Lap)^s (1+|x|^2)^{-beta} at radius r from the Fourier-side closed form
    4^s Gamma(beta+s) Gamma(N/2+s) / (Gamma(beta) Gamma(N/2)) * 2F1(N/2+s, beta+s; N/2; -r^2),
    evaluated by mpmath's own hypergeometric continuation.
    """
    beta, s = mp.mpf(beta), mp.mpf(s)
    pre = mp.power(4, s) * mp.gamma(beta + s) * mp.gamma(mp.mpf(N) / 2 + s) / (mp.gamma(beta) * mp.gamma(mp.mpf(N) / 2))
    if r == 0:
        return float(pre)
    try:
        return float(pre * mp.hyp2f1(mp.mpf(N) / 2 + s, beta + s, mp.mpf(N) / 2, -mp.mpf(r) ** 2))
    except ValueError:
        # mpmath refuses to certify an exact zero of the continuation
        return 0.0


def trapezoid_weighted_mass(u, beta: float, eps: float, N: int, r_max: float = 50.0, n: int = 10**6) -> float:
    """eps^{N/2}/c_beta * |S^{N-1}| int_0^{r_max} r^{N-1} (1+eps r^2)^{-beta} u(r) dr, trapezoid rule."""
    r = np.linspace(0.0, r_max, n + 1)
    y = r ** (N - 1) * (1.0 + eps * r * r) ** (-beta) * u(r)
    c_beta = psi_mass_quad(beta, N)
    return eps ** (N / 2.0) / c_beta * sphere_area(N) * float(np.trapezoid(y, r))


def blowup_time(f, lam: float, phi0: float) -> float:
    """int_{phi0}^inf dz / (f(z) - lam z) by mpmath quadrature."""
    return float(mp.quad(lambda z: 1 / (f(z) - lam * z), [phi0, 2 * phi0, 10 * phi0, mp.inf]))


_T0 = mp.mpf("1e-3")


def _near_zero(c2, c4, s):
    """int_0^{T0} (c2 t^2 + c4 t^4) t^{-1-2s} dt; the quadrature on (0, T0) would
    cancel catastrophically at the tanh-sinh nodes nearest t = 0."""
    s = mp.mpf(s)
    return c2 * _T0 ** (2 - 2 * s) / (2 - 2 * s) + c4 * _T0 ** (4 - 2 * s) / (4 - 2 * s)


def kernel_integral_1d(f, g, x: float, s: float) -> float:
    """C_{1,s} int (f(x)-f(y))(g(x)-g(y)) / |x-y|^{1+2s} dy on the line (mpmath)."""
    C = frac_constant(1, s)
    x = mp.mpf(x)
    fx, gx = f(x), g(x)
    fd = [mp.diff(f, x, k) for k in (1, 2, 3)]
    gd = [mp.diff(g, x, k) for k in (1, 2, 3)]
    c2 = 2 * fd[0] * gd[0]
    c4 = 2 * (fd[0] * gd[2] / 6 + fd[1] * gd[1] / 4 + fd[2] * gd[0] / 6)

    def h(t):
        return ((fx - f(x + t)) * (gx - g(x + t)) + (fx - f(x - t)) * (gx - g(x - t))) / t ** (1 + 2 * s)

    return float(C * (_near_zero(c2, c4, s) + mp.quad(h, [_T0, 1, 4, 8, 16, mp.inf])))


def pv_1d(f, x: float, s: float) -> float:
    """(-Lap)^s f(x) in 1-d from the symmetric second difference (mpmath quadrature)."""
    C = frac_constant(1, s)
    x = mp.mpf(x)
    fx = f(x)
    c2 = -mp.diff(f, x, 2)
    c4 = -mp.diff(f, x, 4) / 12
    val = _near_zero(c2, c4, s) + mp.quad(lambda t: (2 * fx - f(x + t) - f(x - t)) / t ** (1 + 2 * s),
                                          [_T0, 0.5, 2, 8, 32, mp.inf])
    # (C/2) int_R (...) dz folded onto z > 0
    return float(C * val)


def chi_reference(t: float) -> float:
    """exp(-1/t)-mollified step written out directly: 1 on [0,1], 0 on [2, inf)."""
    if t <= 1:
        return 1.0
    if t >= 2:
        return 0.0
    a = math.exp(-1.0 / (2.0 - t))
    b = math.exp(-1.0 / (t - 1.0))
    return a / (a + b)
