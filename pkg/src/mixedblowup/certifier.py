"""Blow-up certificates: int kappa_eps u0 > s_f(eps^s lam0), the eps search and Fujita scans."""
from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import asdict, dataclass, field
from functools import lru_cache

import numpy as np
from scipy import integrate
from scipy.interpolate import PchipInterpolator

from .fracops import RadialProfile
from .kaplan import KaplanBounds, KaplanParams, compute_bounds, default_beta
from .reaction import ReactionSpec, osgood_blowup_bound, s_f, validate_reaction
from .specfun import DomainError, OperatorParams, sphere_area

__all__ = [
    "ScanIncompleteError",
    "InitialDatum",
    "KaplanCertificate",
    "SearchResult",
    "ScanRow",
    "weighted_mass",
    "bounds_for",
    "certify",
    "epsilon_grid",
    "epsilon_search",
    "refined_epsilon_search",
    "fujita_exponent",
    "fujita_scan",
    "scan_to_csv",
]

SOLUTION_CLASS_ASSUMPTION = (
    "conclusion applies to classical solutions with kappa * u_t(., t) integrable on R^N "
    "(automatic for bounded u_t); this hypothesis is stated, not verified"
)


class ScanIncompleteError(RuntimeError):
    """A subcritical exponent was not certified even on the refined eps grid."""


@dataclass(frozen=True)
class InitialDatum:
    """Radial, bounded, continuous, nonnegative initial datum.

    kinds: gaussian A exp(-r^2/w^2); bump A exp(1 - 1/(1-(r/R)^2)) on r < R;
    power_tail A (1+r^2)^(-e/2); tabulated (monotone cubic through samples,
    constant beyond the last radius); constant c.
    """

    kind: str
    amplitude: float = 1.0
    scale: float = 1.0
    exponent: float | None = None
    radii: tuple[float, ...] | None = None
    values: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.kind not in ("gaussian", "bump", "power_tail", "tabulated", "constant"):
            raise DomainError(f"unknown datum kind {self.kind!r}")
        if not (math.isfinite(self.amplitude) and self.amplitude >= 0):
            raise DomainError("amplitude must be finite and nonnegative")
        if self.kind in ("gaussian", "bump") and not self.scale > 0:
            raise DomainError("width/radius must be positive")
        if self.kind == "power_tail" and not (self.exponent is not None and self.exponent > 0):
            raise DomainError("power_tail needs exponent > 0")
        if self.kind == "tabulated":
            r = np.asarray(self.radii, dtype=float)
            v = np.asarray(self.values, dtype=float)
            if r.ndim != 1 or r.size < 2 or r.shape != v.shape:
                raise DomainError("tabulated datum needs matching radii/values with >= 2 samples")
            if r[0] != 0.0 or np.any(np.diff(r) <= 0):
                raise DomainError("tabulated radii must start at 0 and increase strictly")
            if np.any(v < 0) or not np.all(np.isfinite(v)):
                raise DomainError("tabulated values must be finite and nonnegative")

    # constructors
    @classmethod
    def gaussian(cls, amplitude: float = 1.0, width: float = 1.0) -> "InitialDatum":
        return cls("gaussian", amplitude, width)

    @classmethod
    def bump(cls, amplitude: float = 1.0, radius: float = 1.0) -> "InitialDatum":
        return cls("bump", amplitude, radius)

    @classmethod
    def power_tail(cls, amplitude: float, exponent: float) -> "InitialDatum":
        return cls("power_tail", amplitude, 1.0, exponent)

    @classmethod
    def tabulated(cls, radii, values) -> "InitialDatum":
        return cls("tabulated", 1.0, 1.0, None, tuple(map(float, radii)), tuple(map(float, values)))

    @classmethod
    def constant(cls, c: float) -> "InitialDatum":
        return cls("constant", c)

    @classmethod
    def zero(cls) -> "InitialDatum":
        return cls("constant", 0.0)

    @property
    def _interp(self):
        return PchipInterpolator(np.asarray(self.radii), np.asarray(self.values), extrapolate=False)

    def __call__(self, r):
        r = np.abs(np.asarray(r, dtype=float))
        A = self.amplitude
        if self.kind == "gaussian":
            return A * np.exp(-(r / self.scale) ** 2)
        if self.kind == "bump":
            t = np.minimum(r / self.scale, 1.0)
            with np.errstate(divide="ignore", over="ignore"):
                inner = np.exp(1.0 - 1.0 / (1.0 - t * t))
            return np.where(r < self.scale, A * inner, 0.0)
        if self.kind == "power_tail":
            return A * (1.0 + r * r) ** (-0.5 * self.exponent)
        if self.kind == "constant":
            return np.full(r.shape, float(A))
        rr = np.asarray(self.radii)
        vals = self._interp(np.minimum(r, rr[-1]))
        return np.where(r >= rr[-1], self.values[-1], vals)

    def sup(self) -> float:
        if self.kind == "tabulated":
            return float(max(self.values))
        return float(self.amplitude)

    def sup_beyond(self, R: float) -> float:
        """Upper bound for u0 on |x| >= R."""
        A = self.amplitude
        if self.kind == "gaussian":
            return A * math.exp(-((R / self.scale) ** 2))
        if self.kind == "bump":
            return 0.0 if R >= self.scale else A
        if self.kind == "power_tail":
            return A * (1.0 + R * R) ** (-0.5 * self.exponent)
        if self.kind == "constant":
            return float(A)
        rr = np.asarray(self.radii)
        vv = np.asarray(self.values)
        tail = vv[rr >= R]
        # the interpolant is monotone between samples, so neighbouring samples bound it
        k = int(np.searchsorted(rr, R))
        near = vv[max(k - 1, 0):]
        return float(max(tail.max() if tail.size else vv[-1], near.max()))

    @property
    def width(self) -> float:
        """Characteristic length used for box sizing."""
        if self.kind in ("gaussian", "bump"):
            return self.scale
        if self.kind == "tabulated":
            return float(self.radii[-1])
        return 1.0

    @property
    def features(self) -> tuple[float, ...]:
        if self.kind == "tabulated":
            return tuple(r for r in self.radii if r > 0)
        return (self.width,)

    def is_zero(self) -> bool:
        return self.sup() == 0.0

    def scaled(self, c: float) -> "InitialDatum":
        if self.kind == "tabulated":
            return InitialDatum.tabulated(self.radii, [c * v for v in self.values])
        return InitialDatum(self.kind, c * self.amplitude, self.scale, self.exponent)

    def profile(self) -> RadialProfile:
        if self.kind in ("gaussian", "bump"):
            decay, far = 40.0, 0.0
        elif self.kind == "power_tail":
            decay, far = float(self.exponent), 0.0
        elif self.kind == "constant":
            decay, far = 0.0, float(self.amplitude)
        else:
            decay, far = 0.0, float(self.values[-1])
        return RadialProfile(self.__call__, decay, far, features=self.features, name=self.kind)

    def to_dict(self) -> dict:
        if self.kind == "gaussian":
            return {"kind": "gaussian", "amplitude": self.amplitude, "width": self.scale}
        if self.kind == "bump":
            return {"kind": "bump", "amplitude": self.amplitude, "radius": self.scale}
        if self.kind == "power_tail":
            return {"kind": "power_tail", "amplitude": self.amplitude, "exponent": self.exponent}
        if self.kind == "constant":
            return {"kind": "constant", "value": self.amplitude}
        return {"kind": "tabulated", "radii": list(self.radii), "values": list(self.values)}

    @classmethod
    def from_dict(cls, d: dict) -> "InitialDatum":
        keys = {
            "gaussian": {"amplitude", "width"},
            "bump": {"amplitude", "radius"},
            "power_tail": {"amplitude", "exponent"},
            "constant": {"value"},
            "tabulated": {"radii", "values"},
        }
        kind = d.get("kind")
        if kind not in keys:
            raise DomainError(f"unknown datum kind {kind!r}")
        extra = set(d) - keys[kind] - {"kind"}
        if extra:
            raise DomainError(f"unknown datum keys: {sorted(extra)}")
        missing = keys[kind] - set(d)
        if missing:
            raise DomainError(f"missing datum keys: {sorted(missing)}")
        if kind == "gaussian":
            return cls.gaussian(float(d["amplitude"]), float(d["width"]))
        if kind == "bump":
            return cls.bump(float(d["amplitude"]), float(d["radius"]))
        if kind == "power_tail":
            return cls.power_tail(float(d["amplitude"]), float(d["exponent"]))
        if kind == "constant":
            return cls.constant(float(d["value"]))
        return cls.tabulated(d["radii"], d["values"])


def weighted_mass(u0: InitialDatum, kp: KaplanParams, rtol: float = 1e-8) -> float:
    """int_{R^N} kappa_eps u0 by panelled radial quadrature plus a certified tail bound."""
    N, beta, eps = kp.op.N, kp.beta, kp.epsilon
    if u0.is_zero():
        return 0.0
    coef = eps ** (N / 2.0) / kp.c_beta
    area = sphere_area(N)

    def integrand(r):
        return r ** (N - 1) * (1.0 + eps * r * r) ** (-beta) * float(u0(r))

    # radial integral beyond R is at most sup u0 * eps^-beta R^{N-2beta} / (2beta-N)
    def tail_bound(R):
        return u0.sup_beyond(R) * eps ** (-beta) * R ** (N - 2.0 * beta) / (2.0 * beta - N)

    length = 1.0 / math.sqrt(eps)
    marks = sorted({*(f for f in u0.features if f > 0), length})
    edges = [0.0] + [m * 2.0**k for m in (min(marks),) for k in range(-2, 1)]
    edges = sorted(set(edges) | set(marks))
    total = 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        for a, b in zip(edges[:-1], edges[1:]):
            total += integrate.quad(integrand, a, b, epsabs=0.0, epsrel=1e-13, limit=200)[0]
        x = edges[-1]
        # geometric panels until the certified remainder is negligible
        while not (x > 4.0 * marks[-1] and tail_bound(x) <= 1e-3 * rtol * abs(total)):
            if x > 1e300:
                raise ArithmeticError("weighted mass tail did not become negligible")
            total += integrate.quad(integrand, x, 2.0 * x, epsabs=0.0, epsrel=1e-13, limit=200)[0]
            x *= 2.0
    return area * coef * total


@lru_cache(maxsize=64)
def bounds_for(beta: float, op: OperatorParams) -> KaplanBounds:
    """KaplanBounds for (beta, op), cached."""
    return compute_bounds(KaplanParams(beta, 1.0, op))


@dataclass(frozen=True)
class KaplanCertificate:
    beta: float
    epsilon: float
    lam: float
    integral_I: float
    threshold: float
    margin: float
    verdict: str
    blowup_time_bound: float | None
    bounds_audit: KaplanBounds
    assumptions: str = SOLUTION_CLASS_ASSUMPTION

    @property
    def certified(self) -> bool:
        return self.verdict == "certified"

    @property
    def relative_margin(self) -> float:
        return self.margin / self.threshold if self.threshold > 0 else math.inf

    def to_dict(self) -> dict:
        d = asdict(self)
        d["lambda"] = d.pop("lam")
        d["bounds_audit"] = self.bounds_audit.to_dict()
        return d


# margin must exceed this fraction of the threshold for the Osgood bound to apply
_TIE_BAND = 1e-12


def certify(u0: InitialDatum, spec: ReactionSpec, kp: KaplanParams, bounds: KaplanBounds | None = None) -> KaplanCertificate:
    if bounds is None:
        bounds = bounds_for(kp.beta, kp.op)
    if abs(bounds.beta - kp.beta) > 0 or bounds.s != kp.op.s or bounds.N != kp.op.N:
        raise DomainError("bounds were computed for a different (beta, operator)")
    report = validate_reaction(spec)
    if not report.passed:
        raise DomainError(f"reaction fails hypothesis checks: {report.failed()}")
    lam = bounds.lam(kp.epsilon)
    I = weighted_mass(u0, kp)
    thr = s_f(spec, lam)
    margin = I - thr
    ok = margin > _TIE_BAND * thr
    T = osgood_blowup_bound(spec, lam, I) if ok else None
    return KaplanCertificate(kp.beta, kp.epsilon, lam, I, thr, margin,
                             "certified" if ok else "not_certified", T, bounds)


def epsilon_grid(k_max: int = 12, k_min: int = 0) -> list[float]:
    """10^{-k/2} for k = k_min..k_max."""
    return [10.0 ** (-k / 2.0) for k in range(k_min, k_max + 1)]


@dataclass
class SearchResult:
    best: KaplanCertificate | None
    curve: list[tuple[float, float]] = field(default_factory=list)   # (eps, relative margin)
    exponent: float | None = None     # s/(p-1) - N/2 for power reactions

    @property
    def subcritical_mechanism(self) -> bool | None:
        # the ratio I / threshold behaves like eps^{N/2 - s/(p-1)} as eps -> 0
        return None if self.exponent is None else self.exponent > 0


def epsilon_search(
    u0: InitialDatum,
    spec: ReactionSpec,
    beta: float | None,
    op: OperatorParams,
    grid: list[float] | None = None,
    bounds: KaplanBounds | None = None,
) -> SearchResult:
    """Certify over an eps grid; keep the certificate with the largest relative margin."""
    if beta is None:
        beta = default_beta(op.N)
    if bounds is None:
        bounds = bounds_for(beta, op)
    grid = epsilon_grid() if grid is None else grid
    exponent = op.s / (spec.p - 1.0) - op.N / 2.0 if spec.kind == "power" else None
    if u0.is_zero():
        return SearchResult(None, [(e, -1.0) for e in grid], exponent)
    best = None
    curve = []
    for eps in sorted(grid, reverse=True):
        cert = certify(u0, spec, KaplanParams(beta, eps, op), bounds)
        curve.append((eps, cert.relative_margin))
        # grid runs from large to small eps, so >= resolves ties towards smaller eps
        if cert.certified and (best is None or cert.relative_margin >= best.relative_margin):
            best = cert
    return SearchResult(best, curve, exponent)


def refined_epsilon_search(
    u0: InitialDatum,
    spec: ReactionSpec,
    beta: float | None,
    op: OperatorParams,
    floors: tuple[int, ...] = (12, 20, 32),
    bounds: KaplanBounds | None = None,
) -> SearchResult:
    """epsilon_search on 10^{-k/2}, extending k_max through ``floors`` until something certifies."""
    res = None
    curve: list[tuple[float, float]] = []
    k_lo = 0
    for k_max in floors:
        res = epsilon_search(u0, spec, beta, op, epsilon_grid(k_max, k_lo), bounds)
        curve.extend(res.curve)
        if res.best is not None:
            break
        k_lo = k_max + 1
    res.curve = curve
    return res


def fujita_exponent(op: OperatorParams) -> float:
    return 1.0 + 2.0 * op.s / op.N


@dataclass(frozen=True)
class ScanRow:
    p: float
    certified: bool
    epsilon: float | None
    margin: float | None
    time_bound: float | None
    note: str = ""


def fujita_scan(
    op: OperatorParams,
    u0: InitialDatum,
    beta: float | None,
    p_grid,
    floors: tuple[int, ...] = (12, 20, 32),
) -> list[ScanRow]:
    """Run the eps search per exponent; subcritical rows must certify for nonzero data."""
    pF = fujita_exponent(op)
    rows = []
    missing = []
    for p in p_grid:
        if not p > 1:
            raise DomainError("scan exponents must exceed 1")
        spec = ReactionSpec("power", float(p))
        if u0.is_zero():
            rows.append(ScanRow(float(p), False, None, None, None, "trivial datum excluded"))
            continue
        subcritical = p < pF
        res = refined_epsilon_search(u0, spec, beta, op, floors if subcritical else floors[:1])
        b = res.best
        if b is None:
            rows.append(ScanRow(float(p), False, None, None, None,
                                "subcritical" if subcritical else "supercritical"))
            if subcritical:
                missing.append(p)
        else:
            rows.append(ScanRow(float(p), True, b.epsilon, b.margin, b.blowup_time_bound,
                                "subcritical" if subcritical else "supercritical"))
    if missing:
        raise ScanIncompleteError(
            f"subcritical exponents {missing} not certified down to eps = 1e{-floors[-1] / 2:g}", rows
        )
    return rows


def scan_to_csv(rows: list[ScanRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["p", "certified", "epsilon", "margin", "time_bound"])
    for r in rows:
        w.writerow([repr(r.p), str(r.certified).lower(),
                    "" if r.epsilon is None else repr(r.epsilon),
                    "" if r.margin is None else repr(r.margin),
                    "" if r.time_bound is None else repr(r.time_bound)])
    return buf.getvalue()
