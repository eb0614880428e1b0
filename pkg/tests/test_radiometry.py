import numpy as np
import pytest
from hypothesis import given, strategies as st

from vlclink.errors import CalibrationError, DomainError, ExtrapolationError, ParseError
from vlclink.geometry import ScenePoint, los_angles
from vlclink.optics import received_amplitude
from vlclink.radiometry import (GeneralizedLambertian, Reference, TabulatedMap,
                                calibrate_scale, intensity, pattern_from_dict)


def test_normalisation_point():
    p = GeneralizedLambertian(1.0, 0.0, 1.0, 1.0)
    assert intensity(p, 0.0, 0.0, 1.0) == 1.0


def test_inverse_square():
    p = GeneralizedLambertian()
    assert intensity(p, 5.0, 3.0, 2.0) == pytest.approx(intensity(p, 5.0, 3.0, 1.0) / 4,
                                                        rel=1e-15)


def test_zero_behind_lobe():
    p = GeneralizedLambertian(tilt_deg=10.0)
    assert intensity(p, 100.1, 0.0, 1.0) == 0.0
    assert intensity(p, 0.0, 95.0, 1.0) == 0.0
    with pytest.raises(DomainError):
        intensity(p, 0.0, 0.0, 0.0)


def test_calibration_ratio(catalog, pd, src):
    # 100 mV reference on a model value of 0.05 units -> 2000 mV per unit
    class Fixed:
        scale = None

        def intensity(self, a, b, d):
            return 1.0

        def with_scale(self, s):
            out = Fixed()
            out.scale = s
            return out

    lens = catalog["AS1"]
    ref = Reference(ScenePoint(6.0), lens, 100.0)
    raw = lens.aperture_area
    p = calibrate_scale(Fixed(), ref, pd, src)
    assert p.scale == pytest.approx(100.0 / raw, rel=1e-15)
    assert p.scale * 0.05 == pytest.approx(100.0 / raw * 0.05)


def test_calibration_reproduces_and_is_idempotent(catalog, pd, src):
    ref = Reference(ScenePoint(6.0, 1.5), catalog["AS1"], 123.0)
    p = calibrate_scale(GeneralizedLambertian(), ref, pd, src)
    s = received_amplitude(los_angles(ref.scene), ref.lens, pd, src, p)
    assert s == pytest.approx(123.0, rel=1e-14)
    assert calibrate_scale(p, ref, pd, src).scale == pytest.approx(p.scale, rel=1e-15)
    s2 = received_amplitude(los_angles(ref.scene), catalog["AS2"], pd, src, p)
    assert s2 == pytest.approx(4 * 123.0, rel=1e-12)


def test_calibration_without_signal(catalog, pd, src):
    ref = Reference(ScenePoint(3.0, 0.0, rx_mode="flat"), catalog["AS2"], 10.0)
    with pytest.raises(CalibrationError):
        calibrate_scale(GeneralizedLambertian(), ref, pd, src)


def test_default_pattern_peaks_between_5_and_10_m(setup):
    d = np.linspace(3, 50, 471)
    lens = setup.lens("AS2")
    s = [received_amplitude(los_angles(setup.scene(x)), lens, setup.pd, setup.src,
                            setup.pattern) for x in d]
    peak = d[int(np.argmax(s))]
    assert 5.0 <= peak <= 10.0
    assert s[0] < max(s) and s[-1] < max(s)


def _grid():
    a = np.array([-10.0, 0.0, 10.0, 20.0])
    b = np.array([-5.0, 0.0, 5.0])
    v = np.add.outer(a, 2 * b) + 100.0
    return a, b, v


def test_tabulated_nodes_and_bilinear():
    a, b, v = _grid()
    t = TabulatedMap(a, b, v)
    assert t.intensity(10.0, 5.0, 1.0) == pytest.approx(120.0)
    # the table is linear in both axes, so interpolation is exact
    assert t.intensity(3.3, -1.2, 2.0) == pytest.approx((100 + 3.3 - 2.4) / 4)
    with pytest.raises(ExtrapolationError):
        t.intensity(25.0, 0.0, 1.0)


def test_tabulated_validation():
    a, b, v = _grid()
    with pytest.raises(DomainError):
        TabulatedMap(a[::-1], b, v)
    with pytest.raises(DomainError):
        TabulatedMap(a, b, v[:, :2])
    with pytest.raises(DomainError):
        TabulatedMap(a, b, -v)


def test_tabulated_csv_roundtrip(tmp_path):
    a, b, v = _grid()
    lines = ["# test map", "alpha_deg,beta_deg,intensity"]
    lines += [f"{x},{y},{v[i, j]}" for i, x in enumerate(a) for j, y in enumerate(b)]
    path = tmp_path / "map.csv"
    path.write_text("\n".join(lines) + "\n")
    t = TabulatedMap.from_csv(path)
    assert np.array_equal(t.values, v)
    p = pattern_from_dict({"kind": "tabulated", "csv": "map.csv"}, base_dir=tmp_path)
    assert p.intensity(0.0, 0.0, 1.0) == 100.0


def test_tabulated_csv_errors(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("alpha_deg,intensity\n0,1\n")
    with pytest.raises(ParseError, match="beta_deg"):
        TabulatedMap.from_csv(bad)
    holes = tmp_path / "holes.csv"
    holes.write_text("alpha_deg,beta_deg,intensity\n0,0,1\n0,1,1\n1,0,1\n")
    with pytest.raises(ParseError):
        TabulatedMap.from_csv(holes)


def test_unknown_kind():
    with pytest.raises(DomainError):
        pattern_from_dict({"kind": "gaussian"})


@given(st.floats(-60, 60), st.floats(-60, 60), st.floats(0.1, 100), st.floats(1.01, 10))
def test_range_separability(alpha, beta, d, k):
    p = GeneralizedLambertian(tilt_deg=5.0)
    i1 = intensity(p, alpha, beta, d)
    assert i1 >= 0
    assert intensity(p, alpha, beta, d * k) * (d * k) ** 2 == pytest.approx(i1 * d * d, rel=1e-12)
    if i1 > 0:
        assert intensity(p, alpha, beta, d * k) < i1


@given(st.floats(-89, 89), st.floats(-89, 89))
def test_even_in_beta(alpha, beta):
    p = GeneralizedLambertian(tilt_deg=3.0, order_v=7.0, order_h=3.0)
    assert intensity(p, alpha, beta, 1.0) == intensity(p, alpha, -beta, 1.0)
