import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fsodbs.models import (
    AccessChannelParams,
    FsoLinkParams,
    Position3D,
    UserProfile,
    UserSet,
    access_rate,
    attenuation_gamma,
    average_pathloss_db,
    dbm_to_watts,
    distance_3d,
    free_space_pathloss_db,
    fso_rate,
    fso_rate_at_distance,
    los_probability,
    pathloss_from,
    required_bandwidth,
    scattering_exponent_q,
    snr,
)

ACC = AccessChannelParams()
ORIGIN_USER = UserProfile(0.0, 0.0, 1e6)

# default link budget with 1 mrad divergence, 5 km, 1 dB/km; evaluated with mpmath at 30 digits
GOLDEN_FSO_RATE_5KM = 2106562.07342185141306


def test_distance_examples():
    assert distance_3d(Position3D(0, 0, 100), ORIGIN_USER) == 100.0
    assert distance_3d(Position3D(3, 4, 0), ORIGIN_USER) == 5.0
    assert distance_3d(Position3D(30, 40, 120), ORIGIN_USER) == pytest.approx(130.0, rel=1e-15)


def test_position_rejects_bad_coordinates():
    with pytest.raises(ValueError):
        Position3D(0, 0, -1)
    with pytest.raises(ValueError):
        Position3D(math.nan, 0, 10)


def test_los_probability_examples():
    h = 100 * math.tan(math.radians(9.6))
    assert los_probability(Position3D(100, 0, h), ORIGIN_USER, ACC) == pytest.approx(1 / 10.6, rel=1e-12)
    overhead = los_probability(Position3D(0, 0, 50), ORIGIN_USER, ACC)
    assert overhead == pytest.approx(1 / (1 + 9.6 * math.exp(-0.28 * (90 - 9.6))), rel=1e-12)
    assert overhead >= 0.999
    grazing = los_probability(Position3D(1000, 0, 1e-9), ORIGIN_USER, ACC)
    assert grazing == pytest.approx(1 / (1 + 9.6 * math.exp(0.28 * 9.6)), rel=1e-9)


def test_los_probability_undefined_at_colocation():
    with pytest.raises(ValueError):
        los_probability(Position3D(0, 0, 0), ORIGIN_USER, ACC)


def test_pathloss_examples():
    dbs = Position3D(300, 400, 200)
    no_excess = AccessChannelParams(xi_los=0.0, xi_nlos=0.0)
    d = distance_3d(dbs, ORIGIN_USER)
    fspl = 20 * math.log10(4 * math.pi * 2e9 * d / 299792458.0)
    assert average_pathloss_db(dbs, ORIGIN_USER, no_excess) == pytest.approx(fspl, rel=1e-13)
    assert pathloss_from(d, 1.0, ACC) == pytest.approx(fspl + 1.0, rel=1e-13)
    assert free_space_pathloss_db(1000.0, ACC) == pytest.approx(98.46838313516300, rel=1e-13)
    assert pathloss_from(1000.0, 0.5, ACC) == pytest.approx(98.46838313516300 + 10.5, rel=1e-13)


def test_access_rate_examples():
    assert access_rate(0.0, 80.0, ACC) == 0.0
    # SNR of exactly 3
    eta = -10 * math.log10(3 * ACC.n0 / ACC.p_d)
    assert access_rate(1e6, eta, ACC) == pytest.approx(2e6, rel=1e-12)
    n0 = 10 ** (-104 / 10) / 1000
    expected = 1e6 * math.log2(1 + 0.1 * 10 ** (-10.0) / n0)
    assert access_rate(1e6, 100.0, ACC) == pytest.approx(expected, rel=1e-13)
    with pytest.raises(ValueError):
        access_rate(-1.0, 80.0, ACC)


def test_required_bandwidth_examples():
    eta = -10 * math.log10(3 * ACC.n0 / ACC.p_d)
    assert required_bandwidth(UserProfile(0, 0, 2e6), eta, ACC) == pytest.approx(1e6, rel=1e-12)
    n0 = 10 ** (-104 / 10) / 1000
    expected = 5e5 / math.log2(1 + 0.1 * 10 ** (-9.0) / n0)
    assert required_bandwidth(UserProfile(0, 0, 5e5), 90.0, ACC) == pytest.approx(expected, rel=1e-13)


@pytest.mark.parametrize("v,q", [(0.3, 0.0), (0.5, 0.0), (0.75, 0.25), (1.0, 0.5), (3.0, 0.82),
                                 (6.0, 1.3), (10.0, 1.3), (50.0, 1.3), (60.0, 1.6)])
def test_scattering_exponent_branches(v, q):
    assert scattering_exponent_q(v) == pytest.approx(q, abs=1e-15)


def test_attenuation_examples():
    for v in (1.0, 7.0, 20.0):
        assert attenuation_gamma(FsoLinkParams(wavelength=550e-9, visibility=v)) == pytest.approx(3.91 / v, rel=1e-13)
    assert attenuation_gamma(FsoLinkParams(visibility=20.0)) == pytest.approx(0.0508378353760566, rel=1e-12)
    assert attenuation_gamma(FsoLinkParams(visibility=1.0)) == pytest.approx(2.32912208297877, rel=1e-12)


def test_fso_golden_value():
    params = FsoLinkParams(divergence=1e-3, gamma=1.0)
    mbs, dbs = Position3D(0, 0, 20), Position3D(3000, 4000, 20)
    assert fso_rate(mbs, dbs, params) == pytest.approx(GOLDEN_FSO_RATE_5KM, rel=1e-12)


def test_fso_linear_in_power_and_inverse_square_without_attenuation():
    base = FsoLinkParams()
    double = FsoLinkParams(p_fso=2 * base.p_fso)
    assert fso_rate_at_distance(4000.0, double) == pytest.approx(2 * fso_rate_at_distance(4000.0, base), rel=1e-14)
    clear = FsoLinkParams(gamma=0.0)
    r1, r3 = fso_rate_at_distance(1000.0, clear), fso_rate_at_distance(3000.0, clear)
    assert r1 / r3 == pytest.approx(9.0, rel=1e-14)


def test_fso_rejects_colocated_endpoints():
    p = Position3D(10, 10, 20)
    with pytest.raises(ValueError):
        fso_rate(p, p, FsoLinkParams())


def test_userset_roundtrip():
    profiles = [UserProfile(1, 2, 3e6), UserProfile(-4, 5, 1e6)]
    users = UserSet.from_profiles(profiles)
    assert list(users) == profiles
    assert users[1] == profiles[1]
    assert len(UserSet.empty()) == 0
    with pytest.raises(ValueError):
        UserSet([0.0], [0.0], [0.0])


def test_vectorized_matches_scalar():
    rng = np.random.default_rng(3)
    users = UserSet(rng.uniform(-250, 250, 7), rng.uniform(-250, 250, 7), rng.uniform(1e6, 1e7, 7))
    dbs = Position3D(20, -30, 120)
    vec = average_pathloss_db(dbs, users, ACC)
    for k, u in enumerate(users):
        assert vec[k] == pytest.approx(average_pathloss_db(dbs, u, ACC), rel=1e-15)


# --- properties ---------------------------------------------------------------

coord = st.floats(-2000, 2000)
alt = st.floats(1.0, 1000.0)


@given(x=coord, y=coord, h=st.floats(0, 1000), ux=coord, uy=coord, shift=coord)
def test_distance_translation_invariant(x, y, h, ux, uy, shift):
    d = distance_3d(Position3D(x, y, h), UserProfile(ux, uy, 1.0))
    moved = distance_3d(Position3D(x + shift, y - shift, h), UserProfile(ux + shift, uy - shift, 1.0))
    assert d >= 0
    assert moved == pytest.approx(d, rel=1e-9, abs=1e-9)
    l = math.hypot(x - ux, y - uy)
    assert d == pytest.approx(math.hypot(l, h), rel=1e-12)


@given(l=st.floats(1.0, 3000.0), h1=alt, h2=alt)
def test_los_monotone_in_altitude(l, h1, h2):
    if abs(h1 - h2) < 1e-3:
        return
    lo, hi = sorted((h1, h2))
    p_lo = los_probability(Position3D(l, 0, lo), ORIGIN_USER, ACC)
    p_hi = los_probability(Position3D(l, 0, hi), ORIGIN_USER, ACC)
    assert 0 < p_lo < p_hi < 1


@given(h=alt, l1=st.floats(1.0, 3000.0), l2=st.floats(1.0, 3000.0))
def test_los_decreasing_in_horizontal_distance(h, l1, l2):
    if abs(l1 - l2) < 1e-3:
        return
    near, far = sorted((l1, l2))
    assert los_probability(Position3D(near, 0, h), ORIGIN_USER, ACC) > los_probability(Position3D(far, 0, h), ORIGIN_USER, ACC)


@given(d1=st.floats(1.0, 1e5), d2=st.floats(1.0, 1e5), rho=st.floats(0, 1))
def test_pathloss_increasing_in_distance(d1, d2, rho):
    if abs(d1 - d2) < 1e-6 * max(d1, d2):
        return
    flat = AccessChannelParams(xi_los=5.0, xi_nlos=5.0)
    near, far = sorted((d1, d2))
    assert pathloss_from(near, rho, flat) < pathloss_from(far, rho, flat)


@given(d=st.floats(1.0, 1e5), r1=st.floats(0, 1), r2=st.floats(0, 1))
def test_pathloss_decreasing_in_los_probability(d, r1, r2):
    if abs(r1 - r2) < 1e-6:
        return
    lo, hi = sorted((r1, r2))
    assert pathloss_from(d, hi, ACC) < pathloss_from(d, lo, ACC)


@given(b=st.floats(1.0, 1e8), k=st.floats(0.1, 10), eta1=st.floats(40, 150), eta2=st.floats(40, 150))
def test_access_rate_linear_and_decreasing(b, k, eta1, eta2):
    assert access_rate(k * b, eta1, ACC) == pytest.approx(k * access_rate(b, eta1, ACC), rel=1e-12)
    if abs(eta1 - eta2) > 1e-6:
        lo, hi = sorted((eta1, eta2))
        assert access_rate(b, lo, ACC) > access_rate(b, hi, ACC)


@given(phi=st.floats(1e3, 1e9), eta=st.floats(40, 140))
def test_required_bandwidth_inverts_access_rate(phi, eta):
    b = required_bandwidth(UserProfile(0, 0, phi), eta, ACC)
    assert access_rate(b, eta, ACC) == pytest.approx(phi, rel=1e-12)


@given(v1=st.floats(0.01, 200), v2=st.floats(0.01, 200))
def test_scattering_exponent_non_decreasing(v1, v2):
    lo, hi = sorted((v1, v2))
    assert scattering_exponent_q(lo) <= scattering_exponent_q(hi)


def test_scattering_exponent_continuity_and_jumps():
    eps = 1e-9
    assert scattering_exponent_q(1 - eps) == pytest.approx(scattering_exponent_q(1 + eps), abs=1e-8)
    assert scattering_exponent_q(6 - eps) == pytest.approx(scattering_exponent_q(6 + eps), abs=1e-8)
    assert scattering_exponent_q(0.5) == 0.0 and scattering_exponent_q(0.5 + eps) == pytest.approx(0.0, abs=1e-8)
    assert scattering_exponent_q(50) == 1.3 and scattering_exponent_q(50 + eps) == 1.6


@settings(max_examples=50)
@given(L1=st.floats(100, 30000), L2=st.floats(100, 30000), v=st.floats(0.6, 60))
def test_fso_decreasing_in_range(L1, L2, v):
    if abs(L1 - L2) < 1e-6 * max(L1, L2):
        return
    p = FsoLinkParams(visibility=v, gamma=None)
    near, far = sorted((L1, L2))
    assert fso_rate_at_distance(near, p) > fso_rate_at_distance(far, p)


@settings(max_examples=50)
@given(L=st.floats(100, 30000), v1=st.floats(0.6, 60), v2=st.floats(0.6, 60))
def test_fso_increasing_in_visibility(L, v1, v2):
    if abs(v1 - v2) < 1e-6:
        return
    lo, hi = sorted((v1, v2))
    r_lo = fso_rate_at_distance(L, FsoLinkParams(visibility=lo, gamma=None))
    r_hi = fso_rate_at_distance(L, FsoLinkParams(visibility=hi, gamma=None))
    assert r_lo < r_hi


@given(L=st.floats(100, 30000), k=st.floats(0.1, 10))
def test_fso_homogeneous_degree_two_in_aperture(L, k):
    base = FsoLinkParams()
    scaled = FsoLinkParams(aperture_diameter=k * base.aperture_diameter)
    assert fso_rate_at_distance(L, scaled) == pytest.approx(k * k * fso_rate_at_distance(L, base), rel=1e-12)


def test_dbm_conversion():
    assert dbm_to_watts(30.0) == pytest.approx(1.0)
    assert dbm_to_watts(-104.0) == pytest.approx(3.981071705534973e-14, rel=1e-12)
    assert snr(0.0, ACC) == pytest.approx(ACC.p_d / ACC.n0)
