"""Command-line front end.

    mixedblowup --config run.json [--output DIR] [--seed N] [--verbose]

Exit codes: 0 success / certified, 1 error, 2 verification negative or scan
incomplete, 3 not certified.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .certifier import (
    InitialDatum,
    ScanIncompleteError,
    bounds_for,
    certify,
    epsilon_search,
    fujita_exponent,
    fujita_scan,
    scan_to_csv,
)
from .kaplan import KaplanParams, default_beta, default_radii, verify_subsolution
from .reaction import ReactionSpec
from .simulator import SimConfig, run
from .specfun import DomainError, OperatorParams

__all__ = ["RunConfig", "ConfigError", "load_config", "main"]

log = logging.getLogger("mixedblowup")

EXIT_OK, EXIT_ERROR, EXIT_NEGATIVE, EXIT_NOT_CERTIFIED = 0, 1, 2, 3
COMMANDS = ("certify", "kaplan-verify", "simulate", "fujita-scan")
TOP_KEYS = {"command", "operator", "reaction", "datum", "kaplan", "sim", "scan", "output_dir", "seed"}
SIM_KEYS = {"L", "M", "dt_init", "t_max", "blowup_threshold", "certificate"}


class ConfigError(ValueError):
    pass


def _strict(block: dict, allowed: set, where: str) -> dict:
    if not isinstance(block, dict):
        raise ConfigError(f"{where} must be an object")
    extra = set(block) - allowed
    if extra:
        raise ConfigError(f"unknown keys in {where}: {sorted(extra)}")
    return block


@dataclass
class RunConfig:
    command: str
    operator: OperatorParams
    reaction: ReactionSpec | None
    datum: InitialDatum | None
    beta: float
    epsilon: float | str
    lam_override: float | None
    sim: dict
    p_grid: list[float]
    output_dir: Path
    seed: int


def load_config(raw: dict) -> RunConfig:
    _strict(raw, TOP_KEYS, "config")
    cmd = raw.get("command")
    if cmd not in COMMANDS:
        raise ConfigError(f"command must be one of {COMMANDS}, got {cmd!r}")
    op_raw = _strict(raw.get("operator", {}), {"a", "b", "s", "N"}, "operator")
    op = OperatorParams(**{k: (int(v) if k == "N" else float(v)) for k, v in op_raw.items()})
    reaction = ReactionSpec.from_dict(raw["reaction"]) if "reaction" in raw else None
    datum = InitialDatum.from_dict(raw["datum"]) if "datum" in raw else None
    kap = _strict(raw.get("kaplan", {}), {"beta", "epsilon", "lambda"}, "kaplan")
    beta = kap.get("beta")
    beta = default_beta(op.N) if beta is None else float(beta)
    if not beta > op.N / 2.0:
        raise ConfigError(f"beta must satisfy beta > N/2 = {op.N / 2:g}; got {beta}")
    eps = kap.get("epsilon", 1.0)
    if eps != "search":
        eps = float(eps)
        if not 0 < eps <= 1:
            raise ConfigError("kaplan.epsilon must lie in (0, 1] or be \"search\"")
    lam = kap.get("lambda")
    sim = _strict(raw.get("sim", {}), SIM_KEYS, "sim")
    scan = _strict(raw.get("scan", {}), {"p_grid"}, "scan")
    p_grid = [float(p) for p in scan.get("p_grid", [])]
    seed = raw.get("seed", 0)
    if not isinstance(seed, int):
        raise ConfigError("seed must be an integer")
    if cmd == "certify" and (reaction is None or datum is None):
        raise ConfigError("certify needs 'reaction' and 'datum'")
    if cmd == "simulate" and datum is None:
        raise ConfigError("simulate needs 'datum' (omit 'reaction' for the linear mode)")
    if cmd == "fujita-scan" and (datum is None or not p_grid):
        raise ConfigError("fujita-scan needs 'datum' and scan.p_grid")
    return RunConfig(cmd, op, reaction, datum, beta, eps, None if lam is None else float(lam),
                     sim, p_grid, Path(raw.get("output_dir", "out")), seed)


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=float) + "\n"


def cmd_certify(cfg: RunConfig) -> int:
    bounds = bounds_for(cfg.beta, cfg.operator)
    if cfg.epsilon == "search":
        res = epsilon_search(cfg.datum, cfg.reaction, cfg.beta, cfg.operator, bounds=bounds)
        cert = res.best
        extra = {"search_curve": [[e, m] for e, m in res.curve], "exponent": res.exponent}
    else:
        cert = certify(cfg.datum, cfg.reaction, KaplanParams(cfg.beta, cfg.epsilon, cfg.operator), bounds)
        extra = {}
    doc = {"certificate": cert.to_dict() if cert else None, **extra}
    _write(cfg.output_dir / "certificate.json", _dump(doc))
    if cert is None:
        summary = "no eps on the grid gives a certificate\n"
    else:
        summary = (
            f"verdict: {cert.verdict}\n"
            f"beta={cert.beta:g} eps={cert.epsilon:g} lambda={cert.lam:.6g}\n"
            f"I={cert.integral_I:.10g} threshold={cert.threshold:.10g} margin={cert.margin:.6g}\n"
            f"blow-up time bound: {cert.blowup_time_bound}\n"
            f"assumption: {cert.assumptions}\n"
        )
    _write(cfg.output_dir / "summary.txt", summary)
    print(summary, end="")
    return EXIT_OK if cert is not None and cert.certified else EXIT_NOT_CERTIFIED


def cmd_kaplan_verify(cfg: RunConfig) -> int:
    op, beta = cfg.operator, cfg.beta
    bounds = bounds_for(beta, op)
    rng = np.random.default_rng(cfg.seed)
    rows = []
    all_pass = True
    for eps in (1.0, 0.1, 0.01):
        kp = KaplanParams(beta, eps, op)
        base = bounds.lam(eps)
        lams = [cfg.lam_override] if cfg.lam_override is not None else [base, 2.0 * base, 10.0 * base]
        radii = np.concatenate([default_radii(eps), rng.uniform(0.0, 100.0 / math.sqrt(eps), 1000)])
        for lam in lams:
            rep = verify_subsolution(kp, lam, radii, theta=bounds.theta)
            rows.append({"eps": eps, "lambda": lam, "min_margin": rep.min_margin,
                         "worst_radius": rep.worst_radius, "pass": rep.passed})
            all_pass &= rep.passed
    doc = {"bounds": bounds.to_dict(), "checks": rows, "all_pass": all_pass}
    _write(cfg.output_dir / "kaplan_audit.json", _dump(doc))
    print(f"lambda0={bounds.lambda0:.6g} R0={bounds.R0:.4g}; {sum(r['pass'] for r in rows)}/{len(rows)} checks pass")
    return EXIT_OK if all_pass else EXIT_NEGATIVE


def cmd_simulate(cfg: RunConfig) -> int:
    s = cfg.sim
    kp = None if cfg.epsilon == "search" else KaplanParams(cfg.beta, cfg.epsilon, cfg.operator)
    sc = SimConfig(
        cfg.operator, cfg.reaction, cfg.datum,
        L=float(s.get("L", 10.0)), M=int(s.get("M", 1024)),
        dt_init=float(s.get("dt_init", 1e-3)), t_max=float(s.get("t_max", 1.0)),
        blowup_threshold=float(s.get("blowup_threshold", 1e10)), kaplan=kp,
    )
    tr = run(sc)
    side = tr.sidecar()
    side.pop("f_phi", None)
    if s.get("certificate") and kp is not None and cfg.reaction is not None:
        cert = certify(cfg.datum, cfg.reaction, kp)
        side["certificate"] = {"verdict": cert.verdict, "time_bound": cert.blowup_time_bound,
                               "margin": cert.margin}
        if cert.certified and tr.t_blowup is not None:
            side["t_blowup_over_time_bound"] = tr.t_blowup / cert.blowup_time_bound
    _write(cfg.output_dir / "trajectory.csv", tr.to_csv())
    _write(cfg.output_dir / "trajectory.json", _dump(side))
    print(f"termination: {tr.termination}; t_blowup={tr.t_blowup}")
    return EXIT_OK


def cmd_fujita_scan(cfg: RunConfig) -> int:
    code = EXIT_OK
    try:
        rows = fujita_scan(cfg.operator, cfg.datum, cfg.beta, cfg.p_grid)
    except ScanIncompleteError as exc:
        rows = exc.args[1]
        log.error("%s", exc.args[0])
        code = EXIT_NEGATIVE
    _write(cfg.output_dir / "fujita_scan.csv", scan_to_csv(rows))
    print(f"p_F = {fujita_exponent(cfg.operator):g}; {sum(r.certified for r in rows)}/{len(rows)} certified")
    return code


HANDLERS = {
    "certify": cmd_certify,
    "kaplan-verify": cmd_kaplan_verify,
    "simulate": cmd_simulate,
    "fujita-scan": cmd_fujita_scan,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mixedblowup", description=__doc__.splitlines()[0])
    ap.add_argument("--config", required=True, help="JSON run configuration")
    ap.add_argument("--output", help="output directory (overrides output_dir)")
    ap.add_argument("--seed", type=int, help="seed for randomized probes (overrides config)")
    ap.add_argument("--verbose", action="store_true")
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        raw = json.loads(Path(args.config).read_text())
        cfg = load_config(raw)
        if args.output:
            cfg.output_dir = Path(args.output)
        if args.seed is not None:
            cfg.seed = args.seed
        return HANDLERS[cfg.command](cfg)
    except (ConfigError, DomainError, ValueError, ArithmeticError, OSError, KeyError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
