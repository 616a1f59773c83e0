"""Acceptance criteria, one test each; every test prints a PASS/FAIL line."""
import math
import time

import numpy as np
import pytest

import oracles
from mixedblowup.certifier import InitialDatum, certify, fujita_exponent, fujita_scan
from mixedblowup.fracops import (
    bilinear_form,
    constant_profile,
    frac_laplacian_pv,
    frac_laplacian_radii,
    gaussian_profile,
    ibp_check,
    make_cutoff,
    psi_profile,
    spectral_whole_space,
    tail_terms,
)
from mixedblowup.kaplan import (
    KaplanParams,
    calibrate_theta,
    closed_form_frac_psi,
    compute_bounds,
    default_beta,
    kappa_eps,
    verify_subsolution,
)
from mixedblowup.reaction import ReactionSpec, integrate_comparison, osgood_blowup_bound, s_f
from mixedblowup.simulator import SimConfig, convergence_probe, run
from mixedblowup.specfun import OperatorParams, frac_constant, psi_mass

pytestmark = pytest.mark.acceptance


@pytest.fixture
def report(capsys):
    def emit(k, ok, detail, elapsed):
        with capsys.disabled():
            print(f"\n[criterion {k}] {'PASS' if ok else 'FAIL'} ({elapsed:.1f} s) {detail}")
    return emit


def test_criterion_1_special_functions(report):
    t0 = time.perf_counter()
    c1 = frac_constant(OperatorParams(s=0.5, N=1))
    c2 = frac_constant(OperatorParams(s=0.5, N=2))
    errs = [abs(c1 * math.pi - 1), abs(c2 * 2 * math.pi - 1)]
    mass_err = max(abs(psi_mass(beta, N) / oracles.psi_mass_quad(beta, N) - 1)
                   for N in (1, 2, 3) for beta in (N / 2 + 0.5, N / 2 + 1, N / 2 + 2))
    dt = time.perf_counter() - t0
    ok = max(errs) <= 1e-10 and mass_err <= 1e-8 and dt < 5
    report(1, ok, f"constants rel err {max(errs):.1e}, psi_mass rel err {mass_err:.1e}", dt)
    assert ok


def test_criterion_2_operator_triangle(report):
    t0 = time.perf_counter()
    worst = 0.0
    for N in (1, 2):
        for s in (0.25, 0.5, 0.75):
            for beta in (N / 2 + 0.6, N / 2 + 1, N / 2 + 2):
                op = OperatorParams(0.0, 1.0, s, N)
                prof = psi_profile(beta)
                L, M = (40.0, 2**14) if N == 1 else (20.0, 256)
                r, sp = spectral_whole_space(prof, [0.0, 0.5, 1.0, 2.0, 4.0], op, L=L, M=M)
                pv = frac_laplacian_radii(prof, r, op)
                cf = closed_form_frac_psi(r, beta, op, calibrate_theta(beta, op))
                for a_, b_ in ((pv, sp), (pv, cf), (sp, cf)):
                    worst = max(worst, float(np.max(np.abs(a_ - b_) / np.abs(b_))))
    dt = time.perf_counter() - t0
    ok = worst <= 1e-4 and dt < 120
    report(2, ok, f"worst pairwise rel diff {worst:.1e} over 18 configs", dt)
    assert ok


def _random_profile(rng):
    kind = rng.integers(3)
    if kind == 0:
        return psi_profile(float(rng.uniform(1.0, 3.0)))
    if kind == 1:
        return gaussian_profile(1.0, float(rng.uniform(0.5, 2.0)))
    return make_cutoff(float(rng.uniform(1.0, 3.0))).profile()


def test_criterion_3_leibniz_and_ibp(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(20)
    leib = 0.0
    for _ in range(20):
        N = int(rng.choice([1, 2]))
        op = OperatorParams(0.0, 1.0, float(rng.choice([0.25, 0.5, 0.75])), N)
        f, g = _random_profile(rng), _random_profile(rng)
        for x in rng.uniform(0.0, 4.0, 5):
            lhs = frac_laplacian_pv(f.times(g), x, op).value
            rhs = (f(x) * frac_laplacian_pv(g, x, op).value + g(x) * frac_laplacian_pv(f, x, op).value
                   - bilinear_form(f, g, x, op).value)
            leib = max(leib, abs(lhs - rhs))
    ibp = 0.0
    for _ in range(10):
        op = OperatorParams(0.0, 1.0, float(rng.choice([0.25, 0.5, 0.75])), int(rng.choice([1, 2])))
        u = psi_profile(float(rng.uniform(op.N / 2 + 0.5, op.N / 2 + 2)))
        v = make_cutoff(float(rng.uniform(1.0, 3.0))).profile().times(psi_profile(float(rng.uniform(1.0, 3.0))))
        ibp = max(ibp, ibp_check(u, v, op))
    dt = time.perf_counter() - t0
    ok = leib <= 1e-5 and ibp <= 1e-4 and dt < 180
    report(3, ok, f"Leibniz residual {leib:.1e}, IBP residual {ibp:.1e}", dt)
    assert ok


def test_criterion_4_tail_envelope(report):
    t0 = time.perf_counter()
    op = OperatorParams()
    beta = default_beta(op.N)
    b = compute_bounds(KaplanParams(beta, 1.0, op))
    # independent sampling of the envelope from the mpmath closed form
    r = np.geomspace(b.R0 * 1.0001, 100 * b.R0, 300)
    c_beta = oracles.psi_mass_quad(beta, op.N)
    g = np.array([-(1 + x * x) ** (op.N / 2 + op.s) * oracles.frac_laplacian_psi(x, beta, op.N, op.s) / c_beta
                  for x in r])
    inside = g.min() >= b.eta1 * (1 - 1e-9) and g.max() <= b.eta2 * (1 + 1e-9)
    dt = time.perf_counter() - t0
    ok = b.eta2 / b.eta1 <= 3 and b.eta1 > 0 and inside and dt < 30
    report(4, ok, f"R0={b.R0:.4g} eta1={b.eta1:.4g} eta2={b.eta2:.4g} ratio={b.eta2 / b.eta1:.3f}", dt)
    assert ok


def test_criterion_5_subsolution(report):
    t0 = time.perf_counter()
    op = OperatorParams()
    beta = default_beta(op.N)
    b = compute_bounds(KaplanParams(beta, 1.0, op))
    rng = np.random.default_rng(5)
    margins, ok = [], True
    for eps in (1.0, 0.1, 0.01):
        kp = KaplanParams(beta, eps, op)
        radii = np.sort(np.concatenate([np.geomspace(1e-3, 1e4, 1000), rng.uniform(0, 50, 1000)])) / math.sqrt(eps)
        rep = verify_subsolution(kp, b.lam(eps), radii, theta=b.theta)
        margins.append(rep.min_margin)
        ok &= rep.passed and rep.min_margin >= -1e-10 * float(kappa_eps(rep.worst_radius, kp))
        ok &= not verify_subsolution(kp, 0.0, radii, theta=b.theta).passed
    dt = time.perf_counter() - t0
    ok = bool(ok) and dt < 60
    report(5, ok, f"min margins {', '.join(f'{m:.2e}' for m in margins)}; lambda=0 fails", dt)
    assert ok


def test_criterion_6_ode_comparison(report):
    t0 = time.perf_counter()
    sq = ReactionSpec("power", 2.0)
    r1 = integrate_comparison(sq, 0.0, 1.0, 5.0)
    r2 = integrate_comparison(sq, 1.0, 2.0, 5.0)
    e1 = abs(r1.t_blowup - 1.0)
    e2 = abs(r2.t_blowup / math.log(2) - 1)
    stat = integrate_comparison(sq, 1.7, s_f(sq, 1.7), 10.0)
    drift = float(np.abs(stat.values - 1.7).max())
    dt = time.perf_counter() - t0
    ok = e1 <= 0.01 and e2 <= 0.01 and drift <= 1e-8 and stat.termination == "reached_tmax" and dt < 10
    report(6, ok, f"T*=1 rel err {e1:.1e}, T*=ln2 rel err {e2:.1e}, stationary drift {drift:.1e}", dt)
    assert ok


def test_criterion_7_fujita_subcritical(report):
    t0 = time.perf_counter()
    found = []
    for N, s in ((1, 0.5), (2, 0.5), (1, 0.25)):
        op = OperatorParams(1.0, 1.0, s, N)
        p = (1 + fujita_exponent(op)) / 2
        row = fujita_scan(op, InitialDatum.gaussian(1.0, 1.0), None, [p])[0]
        found.append((N, s, p, row.certified, row.epsilon))
    dt = time.perf_counter() - t0
    ok = all(f[3] for f in found) and dt < 300
    report(7, ok, "; ".join(f"(N={N}, s={s}, p={p:.3g}) eps={e}" for N, s, p, _, e in found), dt)
    assert ok


def test_criterion_8_end_to_end(report):
    t0 = time.perf_counter()
    op = OperatorParams(1.0, 1.0, 0.5, 1)
    sq = ReactionSpec("power", 2.0)
    kp = KaplanParams(1.5, 1.0, op)
    u0 = InitialDatum.gaussian(30.0436, 1.0)
    cert = certify(u0, sq, kp)
    cfg = SimConfig(op, sq, u0, kaplan=kp)
    tr = run(cfg)
    probe = convergence_probe(cfg)
    dt = time.perf_counter() - t0
    ratio = tr.t_blowup / cert.blowup_time_bound if tr.t_blowup else math.inf
    ok = (cert.certified and tr.termination == "blowup_detected" and ratio <= 1.5 and probe.drift <= 0.05
          and probe.threshold_sensitivity is not None and probe.threshold_sensitivity < 0.01
          and tr.jensen_ok() and tr.comparison_pass_fraction() >= 0.99 and dt < 600)
    report(8, ok, f"t_b={tr.t_blowup:.5g} T*={cert.blowup_time_bound:.5g} ratio={ratio:.3f} "
                  f"drift={probe.drift:.2%} sensitivity={probe.threshold_sensitivity:.1e} "
                  f"comparison pass={tr.comparison_pass_fraction():.1%}", dt)
    assert ok


def _tail_threshold(R):
    """A-priori bound for u = 1, kappa = (1+r^2)^{-1}/pi, s = 1/2, N = 1.

    nonlocal: |int (1 - chi_R) (-Lap)^{1/2} kappa| <= int_{|x|>R} |(1-x^2)/(pi (1+x^2)^2)| = 2R/(pi(1+R^2));
    local: shell measure 2R times the cutoff derivative bounds against kappa and |kappa'| at R.
    """
    cut = make_cutoff(R)
    kap = 1.0 / (math.pi * (1 + R * R))
    dkap = 2 * R / (math.pi * (1 + R * R) ** 2)
    local = 2 * R * (kap * cut.C4(1) / R**2 + 2 * dkap * cut.C3 / R)
    return 2 * R / (math.pi * (1 + R * R)) + local


def test_criterion_9_tail_vanishing(report):
    t0 = time.perf_counter()
    op = OperatorParams(0.0, 1.0, 0.5, 1)
    kappa = psi_profile(1.0, coef=1 / math.pi)
    u = constant_profile(1.0)
    mags = []
    for R in (5.0, 10.0, 20.0, 40.0):
        d = tail_terms(kappa, u, R, op)
        mags.append(abs(d["local_tail"]) + abs(d["nonlocal_tail"]))
    thr = _tail_threshold(40.0)
    dt = time.perf_counter() - t0
    ok = all(b < a for a, b in zip(mags, mags[1:])) and mags[-1] < thr and dt < 120
    report(9, ok, f"|tails| at R=5..40: {', '.join(f'{m:.3e}' for m in mags)}; threshold {thr:.3e}", dt)
    assert ok
