import math

import numpy as np
import pytest
from scipy.special import erfc

import oracles
from mixedblowup.certifier import (
    InitialDatum,
    ScanIncompleteError,
    bounds_for,
    certify,
    epsilon_grid,
    epsilon_search,
    fujita_exponent,
    fujita_scan,
    scan_to_csv,
    weighted_mass,
)
from mixedblowup.kaplan import KaplanParams, verify_subsolution
from mixedblowup.reaction import ReactionSpec, osgood_blowup_bound
from mixedblowup.specfun import DomainError, OperatorParams

OP = OperatorParams(1.0, 1.0, 0.5, 1)
SQ = ReactionSpec("power", 2.0)


# --- initial data ----------------------------------------------------------------------

def test_datum_families():
    g = InitialDatum.gaussian(2.0, 1.5)
    assert g(0.0) == 2.0 and g(1.5) == pytest.approx(2 * math.exp(-1), rel=1e-15)
    b = InitialDatum.bump(1.0, 2.0)
    assert b(0.0) == pytest.approx(1.0) and b(2.0) == 0.0 and b(3.0) == 0.0
    pt = InitialDatum.power_tail(3.0, 1.0)
    assert pt(1.0) == pytest.approx(3 / math.sqrt(2), rel=1e-15)
    tab = InitialDatum.tabulated([0.0, 1.0, 2.0], [2.0, 1.0, 0.5])
    assert tab(0.5) <= 2.0 and tab(0.5) >= 1.0 and tab(10.0) == 0.5
    assert InitialDatum.zero().is_zero()


@pytest.mark.parametrize("bad", [
    lambda: InitialDatum.gaussian(-1.0, 1.0),
    lambda: InitialDatum.gaussian(1.0, 0.0),
    lambda: InitialDatum.power_tail(1.0, 0.0),
    lambda: InitialDatum.tabulated([0.0, 1.0], [1.0, -0.1]),
    lambda: InitialDatum.tabulated([0.0, 0.0], [1.0, 1.0]),
])
def test_datum_validation(bad):
    with pytest.raises(DomainError):
        bad()


def test_datum_dict_roundtrip_and_strictness():
    for d in (InitialDatum.gaussian(2.0, 1.5), InitialDatum.bump(1.0, 2.0), InitialDatum.power_tail(3.0, 1.0),
              InitialDatum.constant(0.7), InitialDatum.tabulated([0.0, 1.0], [1.0, 0.5])):
        assert InitialDatum.from_dict(d.to_dict()).to_dict() == d.to_dict()
    with pytest.raises(DomainError):
        InitialDatum.from_dict({"kind": "gaussian", "amplitude": 1, "width": 1, "colour": 3})
    with pytest.raises(DomainError):
        InitialDatum.from_dict({"kind": "gaussian", "amplitude": 1})


# --- weighted mass -----------------------------------------------------------------------------

def test_weighted_mass_zero_and_constant():
    kp = KaplanParams(1.5, 0.1, OP)
    assert weighted_mass(InitialDatum.zero(), kp) == 0.0
    assert weighted_mass(InitialDatum.constant(2.5), kp) == pytest.approx(2.5, rel=1e-8)


def test_weighted_mass_gaussian_trapezoid_oracle():
    kp = KaplanParams(1.0, 1.0, OP)
    ref = oracles.trapezoid_weighted_mass(lambda r: np.exp(-r * r), 1.0, 1.0, 1)
    got = weighted_mass(InitialDatum.gaussian(1.0, 1.0), kp)
    assert got == pytest.approx(ref, rel=1e-8)
    # and the closed form (1/pi) int e^{-x^2}/(1+x^2) dx = e erfc(1)
    assert got == pytest.approx(math.e * erfc(1.0), rel=1e-10)


@pytest.mark.parametrize("datum,fn", [
    (InitialDatum.bump(1.3, 2.0), lambda r: 1.3 * oracles.mp.exp(1 - 1 / (1 - (r / 2) ** 2)) if r < 2 else 0),
    (InitialDatum.power_tail(0.8, 0.7), lambda r: 0.8 * (1 + r * r) ** -0.35),
])
@pytest.mark.parametrize("N,beta,eps", [(1, 1.5, 0.3), (2, 2.0, 0.01), (3, 2.5, 1.0)])
def test_weighted_mass_vs_mpmath(datum, fn, N, beta, eps):
    kp = KaplanParams(beta, eps, OperatorParams(1, 1, 0.5, N))
    mp = oracles.mp
    integ = mp.quad(lambda r: r ** (N - 1) * (1 + eps * r * r) ** (-beta) * fn(r),
                    [0, 1, 2, 1 / math.sqrt(eps), 10 / math.sqrt(eps), mp.inf])
    ref = eps ** (N / 2) / oracles.psi_mass_quad(beta, N) * oracles.sphere_area(N) * float(integ)
    assert weighted_mass(datum, kp) == pytest.approx(ref, rel=1e-8)


def test_weighted_mass_linear_in_amplitude():
    kp = KaplanParams(1.5, 0.05, OP)
    u = InitialDatum.gaussian(1.0, 2.0)
    for c in (0.3, 7.0, 1e4):
        assert weighted_mass(u.scaled(c), kp) == pytest.approx(c * weighted_mass(u, kp), rel=1e-10)


def test_weighted_mass_scaled_limit_monotone():
    # I(eps) / eps^{N/2} increases as eps decreases, towards int u0 / c_beta
    u = InitialDatum.gaussian(1.0, 1.0)
    vals = [weighted_mass(u, KaplanParams(1.5, e, OP)) / e**0.5 for e in epsilon_grid(12)]
    assert all(b >= a for a, b in zip(vals, vals[1:]))
    assert vals[-1] == pytest.approx(math.sqrt(math.pi) / 2.0, rel=1e-5)


# --- certificate ----------------------------------------------------------------------------------

@pytest.fixture(scope="module")
def bounds15():
    return bounds_for(1.5, OP)


def test_certify_zero_datum(bounds15):
    cert = certify(InitialDatum.zero(), SQ, KaplanParams(1.5, 1.0, OP), bounds15)
    assert cert.verdict == "not_certified" and cert.blowup_time_bound is None
    assert cert.integral_I == 0 < cert.threshold


def test_certify_large_amplitude(bounds15):
    kp = KaplanParams(1.5, 1.0, OP)
    unit = weighted_mass(InitialDatum.gaussian(1.0, 1.0), kp)
    thr = bounds15.lam(1.0)  # p = 2: s_f(lam) = lam
    amp = 2 * thr / unit
    cert = certify(InitialDatum.gaussian(amp, 1.0), SQ, kp, bounds15)
    assert cert.certified and cert.margin > 0
    assert cert.lam == bounds15.lambda0 * 1.0**0.5
    assert cert.blowup_time_bound == pytest.approx(osgood_blowup_bound(SQ, cert.lam, cert.integral_I), rel=1e-14)
    assert verify_subsolution(kp, cert.lam, theta=bounds15.theta).passed
    doubled = certify(InitialDatum.gaussian(2 * amp, 1.0), SQ, kp, bounds15)
    assert doubled.certified and doubled.blowup_time_bound < cert.blowup_time_bound
    d = cert.to_dict()
    assert d["lambda"] == cert.lam and "assumptions" in d and d["bounds_audit"]["lambda0"] == bounds15.lambda0


def test_certify_verdict_iff_margin(bounds15):
    kp = KaplanParams(1.5, 0.1, OP)
    for amp in np.geomspace(1e-2, 1e3, 12):
        cert = certify(InitialDatum.gaussian(amp, 1.0), SQ, kp, bounds15)
        assert cert.certified == (cert.margin > 0)
        assert (cert.blowup_time_bound is not None) == cert.certified
        assert cert.lam == pytest.approx(0.1**0.5 * bounds15.lambda0, rel=0, abs=0)


def test_certify_rejects_mismatched_bounds(bounds15):
    with pytest.raises(DomainError):
        certify(InitialDatum.gaussian(), SQ, KaplanParams(2.0, 1.0, OP), bounds15)


def test_certify_rejects_failing_reaction(bounds15):
    with pytest.raises(DomainError):
        certify(InitialDatum.gaussian(), ReactionSpec("custom", name="z_log1p"), KaplanParams(1.5, 1.0, OP), bounds15)


# --- search and scan ------------------------------------------------------------------------------

def test_epsilon_grid():
    g = epsilon_grid()
    assert g[0] == 1.0 and g[-1] == pytest.approx(1e-6) and len(g) == 13


def test_search_subcritical_certifies():
    res = epsilon_search(InitialDatum.gaussian(1.0, 1.0), ReactionSpec("power", 1.5), 1.0, OP)
    assert res.best is not None and res.best.certified
    assert res.exponent == pytest.approx(0.5 / 0.5 - 0.5) and res.subcritical_mechanism
    assert res.best.relative_margin == max(m for _, m in res.curve)


def test_search_supercritical_small_data():
    res = epsilon_search(InitialDatum.gaussian(1e-3, 1.0), ReactionSpec("power", 2.5), 1.0, OP)
    assert res.best is None and len(res.curve) == 13
    assert res.exponent == pytest.approx(0.5 / 1.5 - 0.5)


def test_search_zero_datum():
    assert epsilon_search(InitialDatum.zero(), SQ, None, OP).best is None


def test_fujita_exponent():
    assert fujita_exponent(OperatorParams(s=0.5, N=1)) == 2.0
    assert fujita_exponent(OperatorParams(s=0.5, N=2)) == 1.5
    assert fujita_exponent(OperatorParams(s=0.999, N=1)) == pytest.approx(2.998)


def test_fujita_scan_subcritical_rows():
    rows = fujita_scan(OP, InitialDatum.gaussian(1.0, 1.0), None, [1.2, 1.5, 1.8])
    assert all(r.certified for r in rows)
    text = scan_to_csv(rows)
    assert text.splitlines()[0] == "p,certified,epsilon,margin,time_bound"
    assert len(text.splitlines()) == 4


def test_fujita_scan_supercritical_tiny_datum():
    rows = fujita_scan(OP, InitialDatum.gaussian(1e-4, 1.0), None, [3.0])
    assert not rows[0].certified and rows[0].epsilon is None


def test_fujita_scan_trivial_datum():
    rows = fujita_scan(OP, InitialDatum.zero(), None, [1.5])
    assert not rows[0].certified and "trivial" in rows[0].note


def test_fujita_scan_incomplete_raises():
    with pytest.raises(ScanIncompleteError) as info:
        fujita_scan(OP, InitialDatum.gaussian(1.0, 1.0), None, [1.8], floors=(0,))
    assert len(info.value.args[1]) == 1


def test_fujita_scan_rejects_p_le_1():
    with pytest.raises(DomainError):
        fujita_scan(OP, InitialDatum.gaussian(), None, [1.0])
