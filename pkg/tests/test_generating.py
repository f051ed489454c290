import io
import math

import numpy as np
import pytest

import outerbilliard as ob
from outerbilliard import generating
from outerbilliard.quadrature import TWO_PI

PI = math.pi


def _random_chords(rng, n, t_lo=0.05, t_hi=3.0):
    return rng.uniform(0, TWO_PI, n), rng.uniform(t_lo, t_hi, n)


def test_chord_to_angles_circle(unit_circle):
    a = ob.chord_to_angles(unit_circle, ob.ChordCoords(0.0, 1.0))
    assert a.phi0 == pytest.approx(-PI / 4, abs=1e-15)
    assert a.phi1 == pytest.approx(PI / 4, abs=1e-15)
    assert a.r0sq == pytest.approx(2.0, abs=1e-15)
    assert a.r1sq == pytest.approx(2.0, abs=1e-15)


def test_chord_to_angles_fourier(wobbly3):
    # r(0) = 1.05, r'(0) = 0: same arctangents as the circle, radii scaled
    a = ob.chord_to_angles(wobbly3, ob.ChordCoords(0.0, 1.0))
    assert a.phi0 == pytest.approx(-PI / 4, abs=1e-15)
    assert a.phi1 == pytest.approx(PI / 4, abs=1e-15)
    assert a.r0sq == pytest.approx(2.205, abs=1e-14)
    assert a.r1sq == pytest.approx(2.205, abs=1e-14)


def test_chord_to_angles_degenerate_limit(presets):
    for curve in presets.values():
        for phi in (0.0, 1.3, 4.4):
            a = ob.chord_to_angles(curve, ob.ChordCoords(phi, 1e-9))
            r, _, _ = curve.radius_scalar(phi)
            assert a.phi0 == pytest.approx(phi, abs=2e-9)
            assert a.phi1 == pytest.approx(phi, abs=2e-9)
            assert a.r0sq == pytest.approx(r * r, rel=1e-8)
            assert a.r1sq == pytest.approx(r * r, rel=1e-8)


def test_angle_gap_stays_below_half_turn(presets):
    rng = np.random.default_rng(2)
    for curve in presets.values():
        phi, t = _random_chords(rng, 400, 0.01, 50.0)
        a0, a1, _, _ = generating._angles_arrays(curve, phi, t)
        gap = a1 - a0
        assert gap.min() > 0.0
        assert gap.max() < PI


def test_arctan_branch_past_half_turn(ellipse21):
    # pick a chord with r - t r' < 0 so the naive principal branch would fail
    phi = 2.0
    r, rp, _ = ellipse21.radius_scalar(phi)
    assert rp > 0
    t = 1.5 * r / rp
    a = ob.chord_to_angles(ellipse21, ob.ChordCoords(phi, t))
    assert phi - a.phi0 > PI / 2            # offset beyond the principal branch
    back = ob.angles_to_chord(ellipse21, a.phi0, a.phi1)
    assert back.phi == pytest.approx(phi, abs=1e-10)
    assert back.t == pytest.approx(t, rel=1e-10)


def test_angles_to_chord_circle(unit_circle):
    c = ob.angles_to_chord(unit_circle, -PI / 4, PI / 4)
    assert c.phi == pytest.approx(0.0, abs=1e-12)
    assert c.t == pytest.approx(1.0, abs=1e-12)


def test_angles_to_chord_rejects_bad_pairs(unit_circle):
    with pytest.raises(ValueError):
        ob.angles_to_chord(unit_circle, 1.0, 1.0)
    with pytest.raises(ValueError):
        ob.angles_to_chord(unit_circle, 0.0, 3.5)


def test_angles_to_chord_reports_nonconvergence(ellipse21):
    with pytest.raises(ob.ConvergenceError) as exc:
        generating._chord_from_angles_arrays(ellipse21, -0.4, 1.9, max_iter=2)
    assert exc.value.residual is not None
    assert exc.value.residual > 0


@pytest.mark.parametrize("name", ["circle", "ellipse", "fourier"])
def test_chart_round_trip(presets, name):
    curve = presets[name]
    rng = np.random.default_rng(41)
    phi, t = _random_chords(rng, 1000)
    a0, a1, _, _ = generating._angles_arrays(curve, phi, t)
    rphi, rt = generating._chord_from_angles_arrays(curve, a0, a1)
    assert np.abs(rphi - phi).max() < 1e-10
    assert np.abs(rt - t).max() < 1e-10


def test_angles_to_chord_residual(ellipse21):
    c = ob.angles_to_chord(ellipse21, -0.3, 0.4)
    a = ob.chord_to_angles(ellipse21, c)
    assert a.phi0 == pytest.approx(-0.3, abs=1e-12)
    assert a.phi1 == pytest.approx(0.4, abs=1e-12)


def test_s_value_circle_triangle(unit_circle):
    assert ob.s_value(unit_circle, ob.ChordCoords(0.0, 1.0)) == pytest.approx(1.0)
    # triangle (0,0), (1,-1), (1,1) has area 1


def test_s_value_ellipse(ellipse21):
    assert ob.s_value(ellipse21, ob.ChordCoords(0.0, 0.5)) == pytest.approx(2.0)


@pytest.mark.parametrize("name", ["circle", "ellipse", "fourier"])
def test_s_value_is_shoelace_area(presets, name):
    curve = presets[name]
    rng = np.random.default_rng(43)
    for _ in range(100):
        phi, t = float(rng.uniform(0, TWO_PI)), float(rng.uniform(0.05, 3.0))
        r, rp, _ = curve.radius_scalar(phi)
        c, s = math.cos(phi), math.sin(phi)
        gx, gy = r * c, r * s
        tx, ty = rp * c - r * s, rp * s + r * c
        m0 = (gx - t * tx, gy - t * ty)
        m1 = (gx + t * tx, gy + t * ty)
        shoelace = 0.5 * abs(m0[0] * m1[1] - m0[1] * m1[0])
        sv = ob.s_value(curve, ob.ChordCoords(phi, t))
        assert sv == pytest.approx(shoelace, rel=1e-12)


def test_s_derivatives_circle_unit_chord(unit_circle):
    d = ob.s_derivatives(unit_circle, ob.ChordCoords(0.0, 1.0))
    assert d.S11 == pytest.approx(1.0, abs=1e-14)
    assert d.S22 == pytest.approx(1.0, abs=1e-14)
    assert d.S12 == pytest.approx(-1.0, abs=1e-14)
    assert d.jac_det == pytest.approx(1.0, abs=1e-14)
    assert d.S1 == pytest.approx(-1.0, abs=1e-14)
    assert d.S2 == pytest.approx(1.0, abs=1e-14)
    assert d.S == pytest.approx(1.0, abs=1e-14)


def test_s12_circle_closed_form(unit_circle):
    # for the unit circle S(phi0, phi1) = tan((phi1-phi0)/2), so
    # S12 = -t (1 + t^2)/2 at any chord
    rng = np.random.default_rng(47)
    for t in rng.uniform(0.05, 5.0, 50):
        d = ob.s_derivatives(unit_circle, ob.ChordCoords(float(rng.uniform(0, TWO_PI)), float(t)))
        assert d.S12 == pytest.approx(-t * (1 + t * t) / 2, rel=1e-13)


@pytest.mark.parametrize("name", ["circle", "ellipse", "fourier"])
def test_chain_rule_exactness(presets, name):
    curve = presets[name]
    rng = np.random.default_rng(53)
    phi, t = _random_chords(rng, 500, 0.02, 8.0)
    s1c, s2c = ob.chain_rule_s1_s2(curve, phi, t)
    d = generating._sderiv_arrays(curve, phi, t)
    scale = np.maximum(1.0, np.maximum(d["r0sq"], d["r1sq"]))
    assert np.max(np.abs(s1c - d["S1"]) / scale) < 1e-12
    assert np.max(np.abs(s2c - d["S2"]) / scale) < 1e-12


@pytest.mark.parametrize("name", ["circle", "ellipse", "fourier"])
def test_fd_cross_check_of_derivatives(presets, name):
    curve = presets[name]
    rng = np.random.default_rng(59)
    phi, t = _random_chords(rng, 50, 0.1, 2.5)
    a0, a1, _, _ = generating._angles_arrays(curve, phi, t)
    d = generating._sderiv_arrays(curve, phi, t)
    h = 1e-4

    def s_at(da, db):
        p, tt = generating._chord_from_angles_arrays(curve, a0 + da, a1 + db,
                                                     guess=(phi, t))
        r, _, _ = curve.radius(p)
        return tt * r * r

    fd = {
        "S1": (s_at(h, 0) - s_at(-h, 0)) / (2 * h),
        "S2": (s_at(0, h) - s_at(0, -h)) / (2 * h),
        "S11": (s_at(h, 0) - 2 * s_at(0, 0) + s_at(-h, 0)) / h**2,
        "S22": (s_at(0, h) - 2 * s_at(0, 0) + s_at(0, -h)) / h**2,
        "S12": (s_at(h, h) - s_at(h, -h) - s_at(-h, h) + s_at(-h, -h)) / (4 * h**2),
    }
    for key, approx in fd.items():
        rel = np.abs(approx - d[key]) / np.maximum(1.0, np.abs(d[key]))
        assert rel.max() < 1e-5, key


def test_forward_map_via_s_circle(unit_circle):
    # chord t=1 through the radius-sqrt2 point: quarter-turn rotation
    p1, phi1 = ob.forward_map_via_s(unit_circle, 1.0, -PI / 4)
    assert p1 == pytest.approx(1.0, abs=1e-11)
    assert phi1 == pytest.approx(PI / 4, abs=1e-11)


def test_forward_map_via_s_rejects_interior(unit_circle):
    with pytest.raises(ob.InsideCurveError):
        ob.forward_map_via_s(unit_circle, 0.4, 0.0)


@pytest.mark.parametrize("name", ["circle", "ellipse", "fourier"])
def test_forward_map_matches_step(presets, name):
    curve = presets[name]
    rng = np.random.default_rng(61)
    phi = rng.uniform(0, TWO_PI, 100)
    r, _, _ = curve.radius(phi)
    rho = r * (1.0 + rng.uniform(0.2, 1.5, 100))
    p0 = 0.5 * rho * rho
    p1, phi1 = generating.forward_map_batch(curve, p0, phi)
    for i in range(100):
        a = ob.phase_point(curve, curve.origin[0] + rho[i] * math.cos(phi[i]),
                           curve.origin[1] + rho[i] * math.sin(phi[i]))
        q = ob.step(curve, a)
        assert abs(q.p - p1[i]) / max(1.0, q.p) < 1e-9
        dphi = (q.phi - phi1[i] + PI) % TWO_PI - PI
        assert abs(dphi) < 1e-9


def test_forward_map_ellipse_hand_seed(ellipse21):
    q = ob.step(ellipse21, ob.phase_point(ellipse21, 4.0, 0.0))
    p1, phi1 = ob.forward_map_via_s(ellipse21, 8.0, 0.0)
    assert p1 == pytest.approx(q.p, rel=1e-10)
    assert phi1 == pytest.approx(q.phi, abs=1e-10)


@pytest.mark.parametrize("name", ["circle", "ellipse", "fourier"])
def test_twist_scan_negative(presets, name):
    scan = ob.twist_scan(presets[name], 128, 128, 20.0)
    assert scan.max_s12 < 0.0


def test_twist_scan_circle_max_location(unit_circle):
    scan = ob.twist_scan(unit_circle, 64, 64, 10.0)
    t_min = 10.0 / 64
    assert scan.t_at_max == pytest.approx(t_min)
    assert scan.max_s12 == pytest.approx(-t_min * (1 + t_min**2) / 2, rel=1e-12)


def test_twist_scan_grid_precondition(unit_circle):
    with pytest.raises(ValueError):
        ob.twist_scan(unit_circle, 32, 128, 10.0)


def test_s12_vanishes_linearly_at_zero(presets):
    for curve in presets.values():
        for phi in (0.2, 2.8):
            t = 1e-6
            d = ob.s_derivatives(curve, ob.ChordCoords(phi, t))
            s = ob.evaluate(curve, phi)
            # S12 / t -> -chi/2 as t -> 0
            assert d.S12 / t == pytest.approx(-float(s.chi) / 2, rel=1e-4)


def test_fault_hook_flips_twist(unit_circle):
    generating.S12_FAULT_SIGN = -1.0
    try:
        scan = ob.twist_scan(unit_circle, 64, 64, 10.0)
        assert scan.max_s12 > 0.0
    finally:
        generating.S12_FAULT_SIGN = 1.0


def test_derivative_csv(unit_circle):
    pm, tm, d = generating.derivative_table(unit_circle, 64, 64, 5.0)
    buf = io.StringIO()
    generating.write_derivative_csv(buf, pm, tm, d)
    lines = buf.getvalue().strip().splitlines()
    assert lines[0] == "phi,t,S,S1,S2,S11,S12,S22,J"
    assert len(lines) == 64 * 64 + 1
    row = lines[1].split(",")
    assert len(row) == 9
    assert float(row[1]) == tm[0]
