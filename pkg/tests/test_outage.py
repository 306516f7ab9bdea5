import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from uepbcc.channel import SnrValue
from uepbcc.outage import (
    InfeasibleError, SecrecyTargets, ThresholdSet, bob_outage, check_feasibility,
    eve_outage, eve_outage_derivative, full_report, min_bob_snr, omega_curve,
    optimal_eve_snr, reproduce_table1, security_gap,
)

db = SnrValue.from_db


def test_feasibility():
    ok, margin = check_feasibility(ThresholdSet.from_db(0.75, 2.95, 5.35))
    assert ok and margin == pytest.approx(2.20, abs=1e-12)
    assert not check_feasibility(ThresholdSet.from_db(0.75, 0.75, 5.35))[0]
    assert not check_feasibility(ThresholdSet.from_db(3.0, 2.0, 5.35))[0]


def test_targets_validation():
    SecrecyTargets(1e-4, 0.1)
    with pytest.raises(ValueError):
        SecrecyTargets(0.95, 0.1)


def test_bob_outage():
    assert bob_outage(1e-300, 1.0) == pytest.approx(0.0, abs=1e-299)
    assert bob_outage(db(5.35), db(3.14)) == pytest.approx(0.81, abs=0.005)


def test_min_bob_snr():
    assert min_bob_snr(db(5.35), 0.81).db == pytest.approx(3.14, abs=0.01)
    assert min_bob_snr(db(28.49), 0.02).db == pytest.approx(45.44, abs=0.01)
    assert min_bob_snr(db(7.0), 1 - math.exp(-1)).db == pytest.approx(7.0, abs=1e-12)
    for eta in (0.0, 1.0):
        with pytest.raises(ValueError):
            min_bob_snr(db(7.0), eta)


@given(st.floats(-10, 40), st.floats(0.001, 0.999))
def test_min_bob_snr_inverts_outage(beta_db, eta):
    g = min_bob_snr(db(beta_db), eta)
    assert bob_outage(db(beta_db), g) == pytest.approx(eta, rel=1e-12, abs=1e-12)


def test_eve_outage():
    w_r, w_s, w = eve_outage(db(0.75), 1e300, db(5.0))
    assert w_s == pytest.approx(0.0, abs=1e-300) and w == w_r
    assert eve_outage(db(0.75), db(2.95), db(1.90))[2] == pytest.approx(0.81, abs=0.01)


def test_optimal_eve_snr():
    assert optimal_eve_snr(db(0.75), db(2.95)).db == pytest.approx(1.90, abs=0.005)
    assert optimal_eve_snr(db(0.75), db(25.27)).db == pytest.approx(17.73, abs=0.01)
    # continuous extension towards alpha_s -> beta_p
    b = db(3.0).linear
    assert optimal_eve_snr(b, b * (1 + 1e-10)).linear == pytest.approx(b, rel=1e-9)
    assert optimal_eve_snr(b, b).linear == b
    with pytest.raises(InfeasibleError):
        optimal_eve_snr(db(3.0), db(2.0))


def test_optimal_eve_snr_grid_scan():
    bp, a = db(0.75), db(12.25)
    g = np.linspace(0.01, 100, 100_001)
    w = -np.expm1(-bp.linear / g) + np.exp(-a.linear / g)
    best = g[np.argmin(w)]
    assert optimal_eve_snr(bp, a).linear == pytest.approx(best, abs=g[1] - g[0])


def test_security_gap():
    assert security_gap(db(3.14), db(1.90)) == pytest.approx(1.24, abs=1e-9)
    assert security_gap(db(45.44), db(17.73)) == pytest.approx(27.71, abs=1e-9)
    assert security_gap(db(7.0), db(7.0)) == 0


def test_full_report_rows():
    rep = full_report(ThresholdSet.from_db(0.75, 12.25, 14.12), eta_decimals=2)
    assert rep.omega_min == pytest.approx(0.24, abs=0.01)
    assert rep.gamma_e_opt.db == pytest.approx(7.70, abs=0.01)
    assert rep.gamma_b_min.db == pytest.approx(19.73, abs=0.01)
    assert rep.security_gap_db == pytest.approx(12.03, abs=0.01)
    rep = full_report(ThresholdSet.from_db(0.75, 15.78, 17.67), eta_decimals=2)
    assert (round(rep.omega_min, 2), round(rep.gamma_e_opt.db, 2), round(rep.gamma_b_min.db, 2),
            round(rep.security_gap_db, 2)) == (0.13, 10.25, 26.23, 15.98)
    rep = full_report(ThresholdSet.from_db(0.75, 20.64, 22.94), eta_decimals=2)
    assert rep.eta_max == 0.05
    assert rep.gamma_e_opt.db == pytest.approx(13.99, abs=0.01)
    assert rep.gamma_b_min.db == pytest.approx(35.84, abs=0.01)
    assert rep.omega == rep.omega_r + rep.omega_s


def test_full_report_explicit_eta_and_errors():
    rep = full_report(ThresholdSet.from_db(0.75, 12.25, 14.12), eta_max=0.1)
    assert rep.eta == pytest.approx(0.1, rel=1e-12)
    with pytest.raises(InfeasibleError) as exc:
        full_report(ThresholdSet.from_db(3.0, 2.0, 5.0))
    assert exc.value.margin_db == pytest.approx(-1.0)


def test_report_json_round_trip():
    rep = full_report(ThresholdSet.from_db(0.75, 2.95, 5.35), eta_decimals=2)
    d = rep.to_dict()
    assert d["eta_max"] == 0.81
    assert ThresholdSet.from_dict(d["thresholds"]).alpha_s.db == pytest.approx(2.95)


def test_omega_limits_and_single_minimum():
    bp, a = db(0.75), db(20.64)
    lo, hi = omega_curve(bp, a, [-80.0, 120.0])
    assert lo == pytest.approx(1.0, abs=1e-6) and hi == pytest.approx(1.0, abs=1e-6)
    x = np.linspace(-20, 60, 20001)
    w = omega_curve(bp, a, x)
    sgn = np.sign(np.diff(w))
    sgn = sgn[sgn != 0]  # saturated tails are flat in floating point
    assert np.count_nonzero(np.diff(sgn) != 0) == 1
    assert sgn[0] < 0 < sgn[-1]


def test_table1_all_rows_present():
    rows = reproduce_table1()
    assert [name for name, _ in rows] == ["BPSK", "64 QAM", "128 QAM", "512 QAM", "2048 QAM"]


@given(st.floats(-5, 20), st.floats(0.1, 30))
def test_stationarity_property(beta_db, gap_db):
    bp, a = db(beta_db), db(beta_db + gap_db)
    g = optimal_eve_snr(bp, a)
    d = eve_outage_derivative(bp, a, g)
    scale = (a.linear * math.exp(-a.linear / g.linear)) / g.linear**2
    assert abs(d) <= 1e-9 * scale
