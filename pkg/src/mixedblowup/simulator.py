"""Periodic pseudospectral solver for u_t + L u = f(u) with blow-up detection.

Time stepping is the first-order exponential integrator
    u_hat <- exp(-symbol * dt) * (u_hat + dt * f(u)_hat),
exact for the linear part.  Along the run the weighted mean Phi(t) = sum w u
(w = kappa_eps normalised to unit discrete mass) is recorded together with
two residuals: Jensen's gap sum w f(u) - f(Phi), and the discrete comparison
residual dPhi/dt + lam Phi - f(Phi).
"""
from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .certifier import InitialDatum, bounds_for
from .fracops import GridField, _symbol_on_grid
from .kaplan import KaplanParams, kappa_eps
from .reaction import ReactionSpec
from .specfun import DomainError, OperatorParams

__all__ = ["SimConfig", "Trajectory", "ProbeReport", "step", "run", "convergence_probe"]

log = logging.getLogger(__name__)

OVERFLOW_LEVEL = 1e300
SENSITIVITY_LEVEL = 1e8


@dataclass(frozen=True)
class SimConfig:
    """Simulation setup; ``reaction=None`` is the linear validation mode (f = 0)."""

    op: OperatorParams
    reaction: ReactionSpec | None
    u0: InitialDatum
    L: float = 10.0
    M: int = 1024
    dt_init: float = 1e-3
    t_max: float = 1.0
    blowup_threshold: float = 1e10
    kaplan: KaplanParams | None = None
    lam: float | None = None
    dt_floor: float = 1e-12
    shrink_tol: float = 0.10
    grow_tol: float = 0.01
    max_steps: int = 2_000_000

    def __post_init__(self):
        if self.op.N not in (1, 2):
            raise DomainError("simulation supports N = 1 or 2")
        if self.L < 10.0 * self.u0.width:
            raise DomainError(f"box half-width {self.L} below 10x datum width {self.u0.width}")
        if self.M < 2 or self.M & (self.M - 1):
            raise DomainError("points per dimension must be a power of two")
        if not (self.dt_init > 0 and self.t_max > 0 and self.dt_floor > 0):
            raise DomainError("dt_init, t_max and dt_floor must be positive")
        if not self.blowup_threshold > self.u0.sup():
            raise DomainError("blow-up threshold must exceed sup u0")
        if not 0 < self.grow_tol < self.shrink_tol:
            raise DomainError("need 0 < grow_tol < shrink_tol")
        if self.kaplan is not None and self.kaplan.op != self.op:
            raise DomainError("kaplan operator differs from the simulated operator")

    def initial_field(self) -> GridField:
        return GridField.from_profile(self.u0, self.L, self.M, self.op.N)

    def comparison_lambda(self) -> float | None:
        if self.kaplan is None:
            return None
        if self.lam is not None:
            return self.lam
        return bounds_for(self.kaplan.beta, self.op).lam(self.kaplan.epsilon)


class _Stepper:
    def __init__(self, config: SimConfig):
        self.config = config
        self.sym = _symbol_on_grid(config.L, config.M, config.op.N, config.op)
        self._cache: dict[float, np.ndarray] = {}
        self.clamped = 0

    def propagator(self, dt: float) -> np.ndarray:
        E = self._cache.get(dt)
        if E is None:
            if len(self._cache) > 64:
                self._cache.clear()
            E = np.exp(-self.sym * dt)
            self._cache[dt] = E
        return E

    def __call__(self, u: np.ndarray, dt: float) -> np.ndarray:
        rhs = u
        if self.config.reaction is not None:
            fu = self.config.reaction.f(np.maximum(u, 0.0))
            rhs = u + dt * fu
        if not np.all(np.isfinite(rhs)) or np.abs(rhs).max() > OVERFLOW_LEVEL:
            raise OverflowError("solution exceeded 1e300")
        out = np.fft.ifftn(self.propagator(dt) * np.fft.fftn(rhs)).real
        sup = float(np.abs(out).max())
        if self.config.reaction is None:
            # linear validation mode accepts signed fields (eigenfunction checks)
            if not np.all(np.isfinite(out)) or sup > OVERFLOW_LEVEL:
                raise OverflowError("solution exceeded 1e300")
            return out
        bad = out < -1e-8 * sup
        n = int(bad.sum())
        if n:
            self.clamped += n
            out[bad] = 0.0
            log.debug("clamped %d negative undershoots", n)
        if not np.all(np.isfinite(out)) or sup > OVERFLOW_LEVEL:
            raise OverflowError("solution exceeded 1e300")
        return out


def step(state: GridField, dt: float, config: SimConfig) -> GridField:
    """One exponential-integrator step of size dt."""
    if config.reaction is not None and state.data.min() < -1e-12 * max(1.0, float(np.abs(state.data).max())):
        raise DomainError("state must be nonnegative (tolerance -1e-12)")
    if (state.L, state.M, state.dim) != (config.L, config.M, config.op.N):
        raise DomainError("state grid does not match the configuration")
    st = _Stepper(config)
    out = st(state.data, dt)
    if st.clamped:
        log.info("step clamped %d values", st.clamped)
    return state.with_data(out)


@dataclass
class Trajectory:
    times: np.ndarray
    sup_norm: np.ndarray
    phi: np.ndarray
    jensen_residual: np.ndarray
    comparison_residual: np.ndarray
    comparison_tolerance: np.ndarray
    termination: str                   # reached_tmax | blowup_detected | step_underflow
    t_blowup: float | None = None
    t_sensitivity: float | None = None   # first time sup >= 1e8
    clamped: int = 0
    steps: int = 0
    rejected: int = 0
    tail_indicator: float = 0.0
    lam: float | None = None
    meta: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "sup_norm", "phi", "jensen_residual", "comparison_residual"])
        for row in zip(self.times, self.sup_norm, self.phi, self.jensen_residual, self.comparison_residual):
            w.writerow([repr(float(v)) for v in row])
        return buf.getvalue()

    def sidecar(self) -> dict:
        return {
            "termination": self.termination,
            "t_blowup": self.t_blowup,
            "t_first_above_1e8": self.t_sensitivity,
            "clamped_values": self.clamped,
            "accepted_steps": self.steps,
            "rejected_steps": self.rejected,
            "tail_indicator": self.tail_indicator,
            "comparison_lambda": self.lam,
            **self.meta,
        }

    def sidecar_json(self) -> str:
        return json.dumps(self.sidecar(), indent=2, sort_keys=True)

    def comparison_pass_fraction(self) -> float:
        r, tol = self.comparison_residual, self.comparison_tolerance
        ok = np.isfinite(r)
        if not ok.any():
            return 1.0
        return float(np.mean(r[ok] >= -tol[ok]))

    def jensen_ok(self) -> bool:
        j = self.jensen_residual[np.isfinite(self.jensen_residual)]
        if self.meta.get("f_phi") is None:
            return True
        fphi = np.asarray(self.meta["f_phi"])
        return bool(np.all(j >= -1e-8 * (1.0 + np.abs(fphi[: j.size]))))


def _tail_indicator(u: np.ndarray, fld: GridField) -> float:
    """Fraction of |u| mass in the outer 10% shell of the box."""
    ax = np.abs(GridField.axis(fld.L, fld.M))
    outer1 = ax >= 0.9 * fld.L
    if fld.dim == 1:
        mask = outer1
    else:
        mask = outer1[:, None] | outer1[None, :]
    total = float(np.abs(u).sum())
    return float(np.abs(u[mask]).sum() / total) if total > 0 else 0.0


def run(config: SimConfig) -> Trajectory:
    fld = config.initial_field()
    u = fld.data.copy()
    f = config.reaction
    stepper = _Stepper(config)
    lam = config.comparison_lambda()
    tail0 = _tail_indicator(u, fld)

    weights = None
    if config.kaplan is not None:
        w = kappa_eps(fld.radius(), config.kaplan)
        weights = w / w.sum()

    jensen: list[float] = []
    f_phi: list[float] = []

    def observe(v):
        if weights is None:
            return math.nan
        phi = float(np.sum(weights * v))
        if f is not None:
            fp = float(f.f(max(phi, 0.0)))
            jensen.append(float(np.sum(weights * f.f(np.maximum(v, 0.0)))) - fp)
            f_phi.append(fp)
        return phi

    times = [0.0]
    sups = [float(np.abs(u).max())]
    phis = [observe(u)]
    t = 0.0
    dt = config.dt_init
    termination = "reached_tmax"
    t_sens = None
    steps = rejected = 0
    while t < config.t_max * (1.0 - 1e-14):
        if steps >= config.max_steps:
            termination = "step_underflow"
            break
        h = min(dt, config.t_max - t)
        new = stepper(u, h)
        scale = max(float(np.abs(u).max()), 1e-300)
        change = float(np.abs(new - u).max()) / scale
        if change > config.shrink_tol:
            if h > config.dt_floor:
                dt = max(h / 2.0, config.dt_floor)
                rejected += 1
                continue
            termination = "step_underflow"
            break
        u = new
        t += h
        steps += 1
        times.append(t)
        sups.append(float(np.abs(u).max()))
        phis.append(observe(u))
        if t_sens is None and sups[-1] >= SENSITIVITY_LEVEL:
            t_sens = t
        if sups[-1] >= config.blowup_threshold:
            termination = "blowup_detected"
            break
        if change < config.grow_tol:
            dt = 2.0 * h

    times_a = np.array(times)
    phi_a = np.array(phis)
    n = len(times)
    jen = np.full(n, math.nan)
    comp = np.full(n, math.nan)
    tol = np.full(n, math.nan)
    if weights is not None and f is not None:
        jen[:] = jensen
        fp = np.array(f_phi)
        if lam is not None and n > 1:
            dts = np.diff(times_a)
            drive = lam * phi_a[:-1] + fp[:-1]
            comp[:-1] = np.diff(phi_a) / dts + lam * phi_a[:-1] - fp[:-1]
            slope = lam + np.abs(f.df(np.maximum(phi_a[:-1], 0.0)))
            # first-order splitting error plus the periodic-truncation allowance
            tol[:-1] = dts * slope * drive + 1e-3 * drive
    meta = {"L": config.L, "M": config.M, "N": config.op.N, "tail_indicator_initial": tail0,
            "f_phi": f_phi if f_phi else None}
    return Trajectory(times_a, np.array(sups), phi_a, jen, comp, tol, termination,
                      float(times_a[-1]) if termination == "blowup_detected" else None, t_sens,
                      stepper.clamped, steps, rejected, _tail_indicator(u, fld), lam, meta)


@dataclass
class ProbeReport:
    base: float | None
    refined: float | None
    drift: float
    quantity: str          # "blowup_time" or "decay_rate"
    threshold_sensitivity: float | None = None


def _decay_rate(tr: Trajectory) -> float:
    s0, s1 = tr.sup_norm[0], tr.sup_norm[-1]
    if s0 == 0 or s1 == 0:
        return 0.0
    return -math.log(s1 / s0) / tr.times[-1]


def refine(config: SimConfig) -> SimConfig:
    """(M, dt) refined by 2 and the box enlarged by 1.5."""
    return replace(config, M=2 * config.M, L=1.5 * config.L, dt_init=config.dt_init / 2.0,
                   shrink_tol=config.shrink_tol / 2.0, grow_tol=config.grow_tol / 2.0)


def convergence_probe(config: SimConfig) -> ProbeReport:
    """Rerun on a refined setup and report the relative drift of t_b (or of the decay rate)."""
    base = run(config)
    fine = run(refine(config))
    if config.reaction is None or base.t_blowup is None or fine.t_blowup is None:
        if config.reaction is not None and (base.t_blowup is None) != (fine.t_blowup is None):
            return ProbeReport(base.t_blowup, fine.t_blowup, math.inf, "blowup_time")
        rb, rf = _decay_rate(base), _decay_rate(fine)
        drift = 0.0 if rf == rb else abs(rb - rf) / max(abs(rf), 1e-300)
        return ProbeReport(rb, rf, drift, "decay_rate")
    drift = abs(base.t_blowup - fine.t_blowup) / fine.t_blowup
    sens = None
    if base.t_sensitivity is not None:
        sens = abs(base.t_blowup - base.t_sensitivity) / base.t_blowup
    return ProbeReport(base.t_blowup, fine.t_blowup, drift, "blowup_time", sens)
