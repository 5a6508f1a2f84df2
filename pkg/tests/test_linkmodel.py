import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from leobeam.geometry import EARTH_RADIUS_KM, EpochGeometry, elevation_deg, geodetic_to_ecef
from leobeam.linkmodel import (NO_INTERFERENCE, SPEED_OF_LIGHT, AntennaConfig, LinkBudget,
                               SpectrumPlan, build_tuple_set, channel_gain_at_range, g_beam,
                               g_user, gain_threshold, gain_threshold_absolute, geometric_h_min,
                               inr, interference_power, realized_inr, required_tx_power, snr_db,
                               theta_3db_for_footprint, theta_threshold)
from leobeam.scheduler import BeamPlan

CFG = AntennaConfig()
TABLE2 = LinkBudget(h_min=10 ** (-1.1), s_max=10)


def test_user_mask_branches():
    assert g_user(50.0, CFG) == -5.0
    assert g_user(100.0, CFG) == 0.0
    assert_allclose(g_user(10.0, CFG), 11.0)
    assert g_user(0.0, CFG) == CFG.g_user_boresight


def test_user_mask_threshold_angle():
    lam = SPEED_OF_LIGHT / 30e9
    th = theta_threshold(lam, 0.6)
    assert_allclose(th, 1.6655, atol=1e-4)
    assert_allclose(CFG.theta_th, th)


@settings(max_examples=200, deadline=None)
@given(st.floats(1.7, 43.9), st.floats(1.7, 43.9))
def test_user_mask_sidelobes_non_increasing(a, b):
    lo, hi = sorted((a, b))
    assert g_user(hi, CFG) <= g_user(lo, CFG) + 1e-12


def test_user_mask_printed_steps():
    # the printed branches meet with upward steps at 44 and 75 degrees
    assert g_user(43.99, CFG) < g_user(44.0, CFG) == -5.0
    assert g_user(74.99, CFG) < g_user(75.0, CFG) == 0.0


def test_user_mask_rejects_negative():
    with pytest.raises(ValueError):
        g_user(-1.0, CFG)


def test_beam_mask():
    assert g_beam(0.0, CFG) == CFG.g_max
    assert g_beam(CFG.theta_3db, CFG) == CFG.g_min
    assert g_beam(179.0, CFG) == CFG.g_min


def test_footprint_beamwidth():
    assert_allclose(theta_3db_for_footprint(43.3, 600.0), math.degrees(math.atan(43.3 / 600.0)))
    assert_allclose(theta_3db_for_footprint(43.3, 600.0), 4.1277, atol=1e-4)


def test_free_space_loss():
    b = LinkBudget()
    h = channel_gain_at_range(600.0, b)
    fspl = 20 * math.log10(4 * math.pi * 600e3 / (SPEED_OF_LIGHT / 30e9))
    assert_allclose(-10 * math.log10(h), fspl, rtol=1e-12)
    assert_allclose(fspl, 177.553, atol=1e-3)
    h2 = channel_gain_at_range(1200.0, b)
    assert_allclose(10 * math.log10(h / h2), 20 * math.log10(2), rtol=1e-12)
    h10 = channel_gain_at_range(600.0, LinkBudget(atmospheric_margin=10.0))
    assert_allclose(10 * math.log10(h / h10), 10.0, rtol=1e-12)


def test_channel_gain_rejects_zero_range():
    with pytest.raises(ValueError):
        channel_gain_at_range(0.0, LinkBudget())


@settings(max_examples=50, deadline=None)
@given(st.floats(500.0, 2000.0), st.floats(0.0, 30.0))
def test_power_inversion(d, snr):
    b = LinkBudget(target_snr=snr)
    h = channel_gain_at_range(d, b)
    p = required_tx_power(h, b, CFG)
    assert abs(snr_db(p, h, b, CFG) - snr) < 1e-9
    p3 = required_tx_power(h, LinkBudget(target_snr=snr + 3.0), CFG)
    assert_allclose(p3 - p, 3.0, atol=1e-9)


def test_inr_cases():
    b = LinkBudget()
    assert inr([], b) == NO_INTERFERENCE
    one = interference_power(10.0, 0.0, -5.0, 1e-18)
    hand = 10 * math.log10(10 ** (5.0 / 10) * 1e-18) - b.noise_power
    assert abs(inr([one], b) - hand) < 1e-9
    assert_allclose(inr([one, one], b) - inr([one], b), 10 * math.log10(2), atol=1e-12)


def test_gain_threshold_table_values():
    assert_allclose(gain_threshold(TABLE2), -51.0, atol=1e-12)
    lower = LinkBudget(inr_threshold=-15.0, h_min=TABLE2.h_min, s_max=10)
    assert_allclose(gain_threshold(TABLE2) - gain_threshold(lower), 5.0, atol=1e-12)
    double = LinkBudget(h_min=TABLE2.h_min, s_max=20)
    assert_allclose(gain_threshold(TABLE2) - gain_threshold(double), 10 * math.log10(2), atol=1e-12)
    assert_allclose(gain_threshold_absolute(TABLE2, CFG), -51.0 + 65.0)


def test_geometric_h_min():
    h = geometric_h_min(600.0, 40.0)
    assert_allclose(h, 0.4624, atol=1e-4)
    assert 0 < h < 1


def test_spectrum_plan():
    sp = SpectrumPlan.uniform(3, 4)
    assert sp.beam_count == 12
    assert list(sp.beams_of(1)) == [4, 5, 6, 7]
    assert list(sp.co_frequency(0)) == [0, 4, 8]
    assert list(sp.co_frequency(5)) == [1, 5, 9]


def _geometry(cells_ll, sats_ecef):
    cells = np.array([geodetic_to_ecef(la, lo) for la, lo in cells_ll])
    sats = np.asarray(sats_ecef, dtype=float)
    el = elevation_deg(cells[:, None, :], sats[None, :, :])
    rng = np.linalg.norm(sats[None] - cells[:, None], axis=-1)
    return EpochGeometry(1, 0.0, sats, np.zeros_like(sats), cells, el, el >= 40.0, rng, 40.0)


def test_far_apart_cells_not_in_tuple_set():
    lon = math.degrees(2000.0 / EARTH_RADIUS_KM)
    geo = _geometry([(0, 0), (0, lon)], [geodetic_to_ecef(0, 0, 600), geodetic_to_ecef(0, lon, 600)])
    sp = SpectrumPlan.uniform(2, 1)
    ts = build_tuple_set(geo, sp, TABLE2, CFG)
    assert not ts.contains(0, 0, 1, 1)
    assert ts.tuples == []


def test_nearby_co_located_satellites_in_tuple_set():
    # cells 20 km apart, satellites 10 km apart above them
    dlon = math.degrees(20.0 / EARTH_RADIUS_KM)
    geo = _geometry([(0, 0), (0, dlon)],
                    [geodetic_to_ecef(0, 0, 600), geodetic_to_ecef(0, dlon / 2, 600)])
    sp = SpectrumPlan.uniform(2, 1)
    ts = build_tuple_set(geo, sp, TABLE2, CFG)
    assert ts.contains(0, 0, 1, 1)
    assert ts.contains(1, 1, 0, 0)


def test_same_satellite_never_in_tuple_set():
    dlon = math.degrees(20.0 / EARTH_RADIUS_KM)
    geo = _geometry([(0, 0), (0, dlon)],
                    [geodetic_to_ecef(0, 0, 600), geodetic_to_ecef(0, dlon / 2, 600)])
    sp = SpectrumPlan.uniform(2, 2)
    ts = build_tuple_set(geo, sp, TABLE2, CFG)
    for b in sp.beams_of(0):
        for b2 in sp.beams_of(0):
            assert not ts.contains(0, b, 1, b2)


def test_tuple_csv(tmp_path):
    dlon = math.degrees(20.0 / EARTH_RADIUS_KM)
    geo = _geometry([(0, 0), (0, dlon)],
                    [geodetic_to_ecef(0, 0, 600), geodetic_to_ecef(0, dlon / 2, 600)])
    ts = build_tuple_set(geo, SpectrumPlan.uniform(2, 1), TABLE2, CFG)
    path = tmp_path / "t.csv"
    ts.write_csv(path)
    rows = path.read_text().splitlines()
    assert len(rows) == 1 + len(ts.tuples)


def test_realized_inr_respects_threshold_when_separated():
    # two far cells on co-frequency beams at the same time
    lon = math.degrees(2000.0 / EARTH_RADIUS_KM)
    geo = _geometry([(0, 0), (0, lon)], [geodetic_to_ecef(0, 0, 600), geodetic_to_ecef(0, lon, 600)])
    sp = SpectrumPlan.uniform(2, 1)
    plan = BeamPlan.empty(1, [0, 1])
    plan.assign(0, 0, 1, 3)
    plan.assign(1, 1, 1, 3)
    budget = LinkBudget(h_min=geometric_h_min(600, 40), s_max=2)
    rep = realized_inr(plan, geo, sp, budget, CFG)
    assert rep["inr"].shape == (2,)
    assert np.all(rep["inr"] <= budget.inr_threshold)
