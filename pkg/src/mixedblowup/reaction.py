"""Reaction terms f: hypothesis checks, the threshold s_f(lam) and the comparison ODE.

The comparison ODE is  Phi' = f(Phi) - lam * Phi.  Above the threshold
s_f(lam) = inf{z > 0 : f(z)/z > lam} its solution blows up no later than
T* = int_{phi0}^inf dz / (f(z) - lam z).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate
from scipy.optimize import brentq

from .specfun import DomainError

__all__ = [
    "ThresholdError",
    "ReactionSpec",
    "ValidationReport",
    "ComparisonResult",
    "REGISTRY",
    "validate_reaction",
    "s_f",
    "osgood_blowup_bound",
    "integrate_comparison",
]


class ThresholdError(ValueError):
    """Initial value not above the threshold s_f(lam), or the threshold bracket failed."""


def _z_log1p(z):
    return z * np.log1p(z)


def _z_log1p_sq(z):
    return z * np.log1p(z) ** 2


def _z2_z3(z):
    return z * z + z**3


def _expm1_minus_z(z):
    return np.expm1(z) - z


# name -> (f, f', declared convex)
REGISTRY: dict[str, tuple[Callable, Callable, bool]] = {
    "z_log1p": (_z_log1p, lambda z: np.log1p(z) + z / (1.0 + z), True),
    "z_log1p_sq": (_z_log1p_sq, lambda z: np.log1p(z) ** 2 + 2.0 * z * np.log1p(z) / (1.0 + z), True),
    "z2_plus_z3": (_z2_z3, lambda z: 2.0 * z + 3.0 * z * z, True),
    "expm1_minus_z": (_expm1_minus_z, lambda z: np.expm1(z), True),
}


@dataclass(frozen=True)
class ReactionSpec:
    """f(z) = z^p (kind="power") or a named registry entry (kind="custom")."""

    kind: str = "power"
    p: float = 2.0
    name: str | None = None

    def __post_init__(self):
        if self.kind == "power":
            if not (math.isfinite(self.p) and self.p > 0):
                raise DomainError(f"power exponent must be positive, got {self.p}")
        elif self.kind == "custom":
            if self.name not in REGISTRY:
                raise DomainError(f"unknown custom reaction {self.name!r}; known: {sorted(REGISTRY)}")
            if not REGISTRY[self.name][2]:
                raise DomainError(f"custom reaction {self.name!r} does not declare convexity")
        else:
            raise DomainError(f"reaction kind must be 'power' or 'custom', got {self.kind!r}")

    def f(self, z):
        z = np.asarray(z, dtype=float)
        with np.errstate(over="ignore"):
            if self.kind == "power":
                return np.power(np.maximum(z, 0.0), self.p)
            return REGISTRY[self.name][0](z)

    def df(self, z):
        z = np.asarray(z, dtype=float)
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            if self.kind == "power":
                return self.p * np.power(np.maximum(z, 0.0), self.p - 1.0)
            return REGISTRY[self.name][1](z)

    def __call__(self, z):
        return self.f(z)

    def to_dict(self) -> dict:
        if self.kind == "power":
            return {"kind": "power", "p": self.p}
        return {"kind": "custom", "name": self.name}

    @classmethod
    def from_dict(cls, d: dict) -> "ReactionSpec":
        kind = d.get("kind")
        allowed = {"power": {"kind", "p"}, "custom": {"kind", "name"}}.get(kind)
        if allowed is None:
            raise DomainError(f"reaction kind must be 'power' or 'custom', got {kind!r}")
        extra = set(d) - allowed
        if extra:
            raise DomainError(f"unknown reaction keys: {sorted(extra)}")
        if kind == "power":
            return cls("power", float(d["p"]))
        return cls("custom", name=d["name"])


@dataclass
class ValidationReport:
    items: dict[str, bool]
    messages: list[str] = field(default_factory=list)
    caveats: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(self.items.values())

    def failed(self) -> list[str]:
        return [k for k, v in self.items.items() if not v]


def _osgood_finite(spec: ReactionSpec) -> bool:
    """Decide finiteness of int_1^inf dz/f(z) from the far-field behaviour.

    With z = e^t the integrand becomes g(t) = z / f(z).  The integral is finite
    when g decays faster than 1/t; the log-log slope of g between t=600 and
    t=690 (z ~ 1e260..1e300) separates z log z (slope -1) from z log^2 z
    (slope -2) and from powers (slope ~ -(p-1) t).
    """
    t1, t2 = 600.0, 690.0
    with np.errstate(over="ignore"):
        g1 = float(np.exp(t1) / spec.f(np.exp(t1)))
        g2 = float(np.exp(t2) / spec.f(np.exp(t2)))
    if g2 == 0.0:
        return True
    if not (g1 > 0 and g2 > 0):
        return False
    slope = math.log(g2 / g1) / math.log(t2 / t1)
    return slope < -1.2


def validate_reaction(spec: ReactionSpec) -> ValidationReport:
    """Check f(0)=0, positivity, midpoint convexity, superlinearity and the Osgood condition."""
    items: dict[str, bool] = {}
    msgs: list[str] = []
    z = np.geomspace(1e-6, 1e6, 400)
    fz = spec.f(z)
    f0 = float(spec.f(0.0))
    items["i_zero_and_positive"] = f0 == 0.0 and bool(np.all(fz > 0))
    if not items["i_zero_and_positive"]:
        msgs.append("i) needs f(0) = 0 and f(z) > 0 for z > 0")

    rng = np.random.default_rng(0)
    x, y = rng.uniform(0.0, 50.0, 500), rng.uniform(0.0, 50.0, 500)
    mid = spec.f(0.5 * (x + y))
    avg = 0.5 * (spec.f(x) + spec.f(y))
    items["convex"] = bool(np.all(mid <= avg + 1e-12 * np.maximum(1.0, np.abs(avg))))
    if not items["convex"]:
        msgs.append("midpoint convexity violated on samples")

    r1, r2, r3 = (float(spec.f(v) / v) for v in (1.0, 1e3, 1e6))
    # an overflowing ratio (exponential growth) counts as increasing
    items["ii_superlinear"] = r2 > r1 * (1.0 + 1e-9) and (r3 > r2 * (1.0 + 1e-9) or r3 == math.inf)
    if not items["ii_superlinear"]:
        msgs.append("ii) f(z)/z does not increase along z = 1, 1e3, 1e6")

    if spec.kind == "power":
        items["iii_osgood"] = spec.p > 1.0
    else:
        items["iii_osgood"] = _osgood_finite(spec)
    if not items["iii_osgood"]:
        msgs.append("iii) int^inf dz/f(z) diverges")

    # local Lipschitz: bounded difference quotients on [0, 10]
    zz = np.linspace(0.0, 10.0, 2001)
    dq = np.abs(np.diff(spec.f(zz))) / np.diff(zz)
    items["lipschitz_samples"] = bool(np.all(np.isfinite(dq)))
    caveats = ["local Lipschitz continuity checked only as bounded difference quotients on [0, 10]"]
    return ValidationReport(items, msgs, caveats)


def s_f(spec: ReactionSpec, lam: float) -> float:
    """inf{z > 0 : f(z)/z > lam}."""
    if not lam > 0:
        raise DomainError(f"threshold needs lam > 0, got {lam}")
    if spec.kind == "power":
        if not spec.p > 1:
            raise DomainError("power reaction needs p > 1")
        return lam ** (1.0 / (spec.p - 1.0))

    def h(z):
        return float(spec.f(z)) / z - lam

    lo = 1e-12
    if h(lo) > 0:
        return 0.0
    hi = 1.0
    while h(hi) <= 0:
        hi *= 2.0
        if hi > 1e30:
            raise ThresholdError("f(z)/z never exceeds lam below z = 1e30")
    return brentq(h, lo, hi, xtol=1e-12, rtol=4 * np.finfo(float).eps)


def osgood_blowup_bound(spec: ReactionSpec, lam: float, phi0: float) -> float:
    """T* = int_{phi0}^inf dz / (f(z) - lam z), via z = phi0 e^t."""
    if lam < 0:
        raise DomainError("lam must be >= 0")
    if lam > 0:
        thr = s_f(spec, lam)
        if not phi0 > thr * (1.0 + 1e-12):
            raise ThresholdError(f"phi0 = {phi0} is not above s_f(lam) = {thr}")
    elif not phi0 > 0:
        raise ThresholdError("phi0 must be positive")

    def g(t):
        z = phi0 * math.exp(t) if t < 700 else math.inf
        if not math.isfinite(z):
            return 0.0
        with np.errstate(over="ignore"):
            ratio = float(spec.f(z)) / z
        if not math.isfinite(ratio):
            return 0.0
        return 1.0 / (ratio - lam)

    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, err = integrate.quad(g, 0.0, np.inf, limit=500, epsabs=1e-14, epsrel=1e-12)
        except integrate.IntegrationWarning as exc:
            raise ThresholdError(f"Osgood integral did not converge: {exc}") from None
    return val


@dataclass
class ComparisonResult:
    times: np.ndarray
    values: np.ndarray
    termination: str           # "blowup" or "reached_tmax"
    t_blowup: float | None


def integrate_comparison(
    spec: ReactionSpec, lam: float, phi0: float, t_max: float, blowup_level: float = 1e12
) -> ComparisonResult:
    """Integrate Phi' = f(Phi) - lam Phi until t_max or Phi > blowup_level."""
    if not phi0 > 0:
        raise DomainError("phi0 must be positive")

    def rhs(t, y):
        return [float(spec.f(max(y[0], 0.0))) - lam * y[0]]

    def event(t, y):
        return y[0] - blowup_level

    event.terminal = True
    event.direction = 1
    sol = integrate.solve_ivp(rhs, (0.0, t_max), [phi0], method="DOP853", rtol=1e-11,
                              atol=1e-14, events=event, dense_output=False)
    if sol.t_events[0].size:
        tb = float(sol.t_events[0][0])
        return ComparisonResult(sol.t, sol.y[0], "blowup", tb)
    if sol.status == -1:
        # step-size collapse: for large p the remaining time Phi / (f(Phi) - lam Phi)
        # falls below the resolution of t before Phi reaches the level
        t_last, y_last = float(sol.t[-1]), float(sol.y[0][-1])
        rate = float(spec.f(y_last)) - lam * y_last
        if rate > 0 and y_last / rate < 1e-9 * max(t_last, 1e-300):
            return ComparisonResult(sol.t, sol.y[0], "blowup", t_last)
        raise ArithmeticError(f"comparison ODE integration failed: {sol.message}")
    return ComparisonResult(sol.t, sol.y[0], "reached_tmax", None)
