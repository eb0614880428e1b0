import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from mpmath import mp, mpf, acos, atan, degrees, tan, radians

from vlclink.errors import CalibrationError, DomainError
from vlclink.geometry import AngleSet, ScenePoint, los_angles
from vlclink.optics import (LensSpec, PhotodiodeSpec, afov, collected_power,
                            disk_square_overlap, image_geometry, overlap_fraction_2d,
                            overlap_fraction_axis, received_amplitude, segment_angle_theta,
                            transition_angles)
from vlclink.radiometry import GeneralizedLambertian

mp.dps = 40


def at_range(d):
    return AngleSet(0.0, 0.0, d)


def test_afov_values(catalog, pd):
    assert afov(catalog["AS1"], pd) == pytest.approx(12.84, abs=5e-3)
    assert afov(catalog["AS2"], pd) == pytest.approx(6.44, abs=5e-3)
    assert afov(LensSpec("inf", 25.4, 1e12), pd) == pytest.approx(0.0, abs=1e-9)


def test_afov_ordering(pd):
    vals = [afov(LensSpec("x", 25.4, f), pd) for f in (16, 25, 32)]
    assert vals[0] > vals[1] > vals[2]


def test_image_geometry_values(catalog, src):
    g = image_geometry(catalog["AS1"], src, at_range(6.0))
    assert g.image_distance == pytest.approx(16.0428, abs=5e-5)
    assert g.image_radius == pytest.approx(0.4011, abs=5e-5)
    g2 = image_geometry(catalog["AS2"], src, at_range(6.0))
    assert g2.image_radius == pytest.approx(0.8043, abs=5e-5)


def test_image_inside_focal_length(catalog, src):
    with pytest.raises(DomainError):
        image_geometry(catalog["AS1"], src, at_range(0.016))


def test_transition_angles_as2(catalog, pd, src):
    R = image_geometry(catalog["AS2"], src, at_range(6.0)).image_radius
    phi1, phi2 = transition_angles(catalog["AS2"], pd, R)
    # atan(0.99571 / 32) evaluates to 1.78224 deg
    assert phi1 == pytest.approx(1.7822, abs=5e-5)
    assert phi2 == pytest.approx(4.653, abs=5e-4)
    R_mp = mpf(150) * 32 / (6000 - 32)
    assert phi1 == pytest.approx(float(degrees(atan((mpf("1.8") - R_mp) / 32))), rel=1e-12)


def test_segment_angle_boundaries(catalog, pd):
    lens = catalog["AS2"]
    R = 0.5
    f = lens.focal_length
    edge = math.degrees(math.atan(1.8 / f))
    inner = math.degrees(math.atan((1.8 - R) / f))
    outer = math.degrees(math.atan((1.8 + R) / f))
    assert segment_angle_theta(edge, lens, pd, R) == pytest.approx(math.pi, rel=1e-12)
    assert segment_angle_theta(inner, lens, pd, R) == pytest.approx(0.0, abs=1e-6)
    assert segment_angle_theta(outer, lens, pd, R) == pytest.approx(2 * math.pi, rel=1e-6)
    assert overlap_fraction_axis(edge, lens, pd, R) == pytest.approx(0.5, abs=1e-12)
    with pytest.raises(DomainError):
        segment_angle_theta(outer + 1.0, lens, pd, R)


def test_segment_angle_oracle(catalog, pd):
    lens, R, phi = catalog["FR1"], 0.6, 4.1
    expect = 2 * acos((mpf("1.8") - 25 * tan(radians(mpf(phi)))) / mpf(R))
    assert segment_angle_theta(phi, lens, pd, R) == pytest.approx(float(expect), rel=1e-12)


def test_axis_branches(catalog, pd):
    lens, R = catalog["AS2"], 0.8
    phi1, phi2 = transition_angles(lens, pd, R)
    assert overlap_fraction_axis(0.0, lens, pd, R) == 1.0
    assert overlap_fraction_axis(phi1, lens, pd, R) == 1.0
    assert overlap_fraction_axis(phi2, lens, pd, R) == 0.0
    assert overlap_fraction_axis(60.0, lens, pd, R) == 0.0
    vals = overlap_fraction_axis(np.array([-3.0, 3.0]), lens, pd, R)
    assert vals[0] == vals[1]


def test_disk_square_special_cases():
    assert disk_square_overlap(0.0, 0.0, 1.0, 1.8) == 1.0
    assert disk_square_overlap(5.0, 0.0, 1.0, 1.8) == 0.0
    assert disk_square_overlap(1.8, 1.8, 0.1, 1.8) == pytest.approx(0.25, abs=1e-12)
    assert disk_square_overlap(1.8, 0.0, 0.5, 1.8) == pytest.approx(0.5, abs=1e-12)
    # disk larger than the square, centred: area ratio of square to disk
    assert disk_square_overlap(0.0, 0.0, 3.0, 1.0) == pytest.approx(4.0 / (9 * math.pi), rel=1e-12)
    with pytest.raises(DomainError):
        disk_square_overlap(0.0, 0.0, 0.0, 1.0)


def test_disk_square_circular_segment():
    # one edge crossing: exact circular-segment area
    R, a, cx = 1.0, 1.8, 2.1
    h = a - cx  # signed distance from centre to edge
    inside = (math.acos(-h / R) * R * R - (-h) * math.sqrt(R * R - h * h)) / (math.pi * R * R)
    assert disk_square_overlap(cx, 0.0, R, a) == pytest.approx(inside, rel=1e-12)


def test_2d_matches_axis_formula(catalog, pd):
    lens, R = catalog["AS1"], 0.6
    for phi in np.linspace(-8, 8, 81):
        ax = overlap_fraction_axis(phi, lens, pd, R)
        assert overlap_fraction_2d(phi, 0.0, lens, pd, R) == pytest.approx(ax, abs=1e-12)
        c = lens.focal_length * math.tan(math.radians(phi))
        assert disk_square_overlap(0.0, c, R, 1.8) == pytest.approx(ax, abs=1e-12)
        # a vanishing second tilt forces the quadrature path
        assert overlap_fraction_2d(1e-12, phi, lens, pd, R) == pytest.approx(ax, abs=1e-12)


def test_monte_carlo_spot_check():
    rng = np.random.default_rng(7)
    n = 400_000
    R, a, cx, cy = 1.1, 1.8, 1.2, -1.4
    r = R * np.sqrt(rng.random(n))
    t = 2 * np.pi * rng.random(n)
    x, y = cx + r * np.cos(t), cy + r * np.sin(t)
    hits = np.mean((np.abs(x) <= a) & (np.abs(y) <= a))
    se = math.sqrt(hits * (1 - hits) / n)
    assert abs(disk_square_overlap(cx, cy, R, a) - hits) < 4 * se


def test_amplitude_aperture_law(catalog, pd, src):
    pat = GeneralizedLambertian(scale=1.0)
    for dist in (6.0, 18.0, 50.0):
        a = los_angles(ScenePoint(dist))
        s1 = received_amplitude(a, catalog["AS1"], pd, src, pat)
        s2 = received_amplitude(a, catalog["AS2"], pd, src, pat)
        assert s2 / s1 == pytest.approx(4.0, rel=1e-12)


def test_amplitude_cutoff_and_plateau(catalog, pd, src):
    pat = GeneralizedLambertian(scale=1.0)
    lens = catalog["AS2"]
    base = los_angles(ScenePoint(18.0))
    R = image_geometry(lens, src, base).image_radius
    phi1, phi2 = transition_angles(lens, pd, R)
    s0 = received_amplitude(base, lens, pd, src, pat)
    for phi in np.linspace(0, phi1, 6):
        s = received_amplitude(base.rotated(phi_V=phi), lens, pd, src, pat)
        assert s == pytest.approx(s0 * math.cos(math.radians(phi)), rel=1e-12)
    assert received_amplitude(base.rotated(phi_V=phi2), lens, pd, src, pat) == 0.0
    assert received_amplitude(base.rotated(phi_V=-phi2 - 1), lens, pd, src, pat) == 0.0
    mid = received_amplitude(base.rotated(phi_V=0.5 * (phi1 + phi2)), lens, pd, src, pat)
    assert 0.0 < mid < s0


def test_uncalibrated_pattern(catalog, pd, src):
    with pytest.raises(CalibrationError):
        received_amplitude(at_range(5.0), catalog["AS1"], pd, src, GeneralizedLambertian())
    assert collected_power(AngleSet(0, 0, 5.0, phi_V=90.0), catalog["AS1"], pd, src,
                           GeneralizedLambertian()) == 0.0


def test_radius_override(catalog, pd, src):
    pat = GeneralizedLambertian(scale=1.0)
    a = at_range(10.0).rotated(phi_V=3.0)
    lens = catalog["AS2"]
    R = image_geometry(lens, src, a).image_radius
    assert received_amplitude(a, lens, pd, src, pat, radius=R) == \
        received_amplitude(a, lens, pd, src, pat)
    assert received_amplitude(a, lens, pd, src, pat, radius=2 * R) != \
        received_amplitude(a, lens, pd, src, pat)


# --- properties -------------------------------------------------------------

radius = st.floats(0.02, 1.79)
focal = st.sampled_from([16.0, 25.0, 32.0])
angle = st.floats(-80.0, 80.0)


@given(radius, focal, angle)
def test_axis_even_and_bounded(R, f, phi):
    lens, pd = LensSpec("x", 25.4, f), PhotodiodeSpec(3.6)
    v = overlap_fraction_axis(phi, lens, pd, R)
    assert 0.0 <= v <= 1.0
    assert v == overlap_fraction_axis(-phi, lens, pd, R)


@given(radius, focal, st.floats(0.0, 80.0), st.floats(0.0, 5.0))
def test_axis_non_increasing(R, f, phi, dphi):
    lens, pd = LensSpec("x", 25.4, f), PhotodiodeSpec(3.6)
    assert overlap_fraction_axis(phi + dphi, lens, pd, R) <= \
        overlap_fraction_axis(phi, lens, pd, R) + 1e-12


@given(radius, focal, st.floats(0.0, 80.0))
def test_axis_continuous(R, f, phi):
    lens, pd = LensSpec("x", 25.4, f), PhotodiodeSpec(3.6)
    eps = 1e-7
    a = overlap_fraction_axis(phi, lens, pd, R)
    b = overlap_fraction_axis(phi + eps, lens, pd, R)
    # slope is bounded by the geometry; a jump would exceed this by orders of magnitude
    assert abs(a - b) < 1e-4


@given(st.floats(0.01, 5.0), st.floats(-6, 6), st.floats(-6, 6), st.floats(0.5, 3.0))
@settings(max_examples=200)
def test_disk_square_bounds_and_symmetry(R, cx, cy, a):
    v = disk_square_overlap(cx, cy, R, a)
    assert 0.0 <= v <= 1.0
    for x, y in ((-cx, cy), (cx, -cy), (cy, cx)):
        assert disk_square_overlap(x, y, R, a) == pytest.approx(v, abs=1e-12)


@given(st.sampled_from(["AS1", "AS2", "FR1", "FR2"]), st.floats(6.0, 49.0), st.floats(0.01, 1.0))
def test_transition_narrows_with_distance(label, d, step):
    from vlclink.config import load_lens_catalog
    from vlclink.optics import SourceSpec
    lens, pd, src = load_lens_catalog()[label], PhotodiodeSpec(3.6), SourceSpec(300.0)
    w = []
    for dd in (d, d + step):
        R = image_geometry(lens, src, at_range(dd)).image_radius
        p1, p2 = transition_angles(lens, pd, R)
        assert p1 < p2
        w.append(p2 - p1)
    assert w[1] < w[0]
