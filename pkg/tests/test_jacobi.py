import math

import numpy as np
import pytest

import outerbilliard as ob
from outerbilliard import dynamics, jacobi
from outerbilliard.quadrature import TWO_PI


@pytest.fixture(scope="module")
def circle_seed(unit_circle):
    # tail of the t=1 chord at phi=0: the point (1, -1), radius sqrt2
    return dynamics.chord_tail_point(unit_circle, 0.0, 1.0)


@pytest.fixture(scope="module")
def conjugate_seed(wobbly3):
    # frozen from the grid scan: this chord's radial field returns at n = 6
    return dynamics.chord_tail_point(wobbly3, 0.0, 1.5)


def test_circle_window_coefficients(unit_circle, circle_seed):
    w = ob.build_window(unit_circle, circle_seed, 3, 3)
    assert len(w) == 7
    assert w.b_coeffs.size == 8
    assert np.abs(w.a_coeffs - 2.0).max() < 1e-12
    assert np.abs(w.b_coeffs + 1.0).max() < 1e-12
    gaps = np.diff(w.angles)
    assert np.abs(gaps - math.pi / 2).max() < 1e-12


def test_window_invariants(presets):
    for curve in presets.values():
        seed = dynamics.chord_tail_point(curve, 0.3, 0.9)
        w = ob.build_window(curve, seed, 5, 8)
        assert (w.b_coeffs < 0).all()
        gaps = np.diff(w.angles)
        assert gaps.min() > 0.0
        assert gaps.max() < math.pi


def test_window_length_one(unit_circle, circle_seed):
    w = ob.build_window(unit_circle, circle_seed, 0, 0)
    assert len(w) == 1
    assert w.b_coeffs.size == 2
    v = ob.hessian_minimality(w)
    assert v.positive_definite == (w.a_coeffs[0] > 0)


def test_propagate_linear_growth(unit_circle, circle_seed):
    w = ob.build_window(unit_circle, circle_seed, 0, 8)
    st = ob.propagate_jacobi(w, 0.0, 1.0)
    assert np.abs(st.dq - np.arange(9)).max() < 1e-9
    assert st.dq_beyond == pytest.approx(9.0, abs=1e-9)
    # dp = S22 dq_n + S12 dq_{n-1} = n - (n-1) = 1 along this field
    assert np.abs(st.dp - 1.0).max() < 1e-9
    assert st.form_residual < 1e-10


def test_propagate_zero_field(unit_circle, circle_seed):
    w = ob.build_window(unit_circle, circle_seed, 2, 4)
    st = ob.propagate_jacobi(w, 0.0, 0.0)
    assert np.abs(st.dq).max() == 0.0
    assert np.abs(st.dp).max() == 0.0


def test_dp_forms_agree(presets):
    for curve in presets.values():
        seed = dynamics.chord_tail_point(curve, 1.1, 0.7)
        w = ob.build_window(curve, seed, 4, 9)
        st = ob.propagate_jacobi(w, 0.37, 1.21)
        assert st.form_residual < 1e-10


def test_jacobi_satisfies_recurrence(ellipse21):
    seed = dynamics.chord_tail_point(ellipse21, 0.5, 1.2)
    w = ob.build_window(ellipse21, seed, 3, 7)
    st = ob.propagate_jacobi(w, 0.2, 0.9)
    a, b = w.a_coeffs, w.b_coeffs
    for i in range(1, len(w) - 1):
        res = b[i] * st.dq[i - 1] + a[i] * st.dq[i] + b[i + 1] * st.dq[i + 1]
        assert abs(res) < 1e-9 * max(1.0, np.abs(st.dq[:len(w)]).max())


def test_hessian_circle_positive_definite(unit_circle, circle_seed):
    for m in (1, 3, 8):
        w = ob.build_window(unit_circle, circle_seed, 0, m - 1)
        v = ob.hessian_minimality(w)
        assert v.positive_definite
        # classical spectrum of tridiag(-1, 2, -1): 2 - 2 cos(k pi/(m+1)) > 0
        mat = np.diag(w.a_coeffs) + np.diag(w.b_coeffs[1:m], 1) + np.diag(w.b_coeffs[1:m], -1)
        eig = np.linalg.eigvalsh(mat)
        expected = 2.0 - 2.0 * np.cos(np.arange(1, m + 1) * math.pi / (m + 1))
        assert np.abs(np.sort(eig) - np.sort(expected)).max() < 1e-9


def test_hessian_matches_eigenvalues(wobbly3, conjugate_seed):
    for n_fwd in (4, 6, 9):
        w = ob.build_window(wobbly3, conjugate_seed, 2, n_fwd)
        v = ob.hessian_minimality(w)
        m = len(w)
        mat = np.diag(w.a_coeffs) + np.diag(w.b_coeffs[1:m], 1) + np.diag(w.b_coeffs[1:m], -1)
        eig_min = np.linalg.eigvalsh(mat).min()
        assert v.positive_definite == (eig_min > 0)


def test_radial_scan_circle_none(unit_circle, circle_seed):
    assert ob.radial_conjugate_scan(unit_circle, circle_seed, 5000) is None


def test_radial_scan_ellipse_none(ellipse21):
    seed = dynamics.chord_tail_point(ellipse21, 0.7, 1.4)
    assert ob.radial_conjugate_scan(ellipse21, seed, 3000) is None


def test_radial_scan_finds_conjugate(wobbly3, conjugate_seed):
    assert ob.radial_conjugate_scan(wobbly3, conjugate_seed, 3000) == 6


def test_scan_equivalence_with_hessian(wobbly3, conjugate_seed):
    """The conjugate pair (0, 6) sits between window verdicts.

    Windows over nodes 1..N (built from the next orbit point) must be
    positive definite while the pair is outside, indefinite once node 6 is
    included.
    """
    seed1 = ob.step(wobbly3, conjugate_seed)
    w_inside = ob.build_window(wobbly3, seed1, 0, 3)    # nodes 1..4 of the orbit
    w_crossing = ob.build_window(wobbly3, seed1, 0, 5)  # nodes 1..6
    assert ob.hessian_minimality(w_inside).positive_definite
    assert not ob.hessian_minimality(w_crossing).positive_definite


def test_boundary_field_equivalence(presets):
    # PD of nodes M..N <=> the field vanishing at M-1 stays positive through N+1
    rng = np.random.default_rng(71)
    for curve in presets.values():
        for _ in range(4):
            seed = dynamics.chord_tail_point(curve, float(rng.uniform(0, TWO_PI)),
                                             float(rng.uniform(0.5, 2.0)))
            w = ob.build_window(curve, seed, 0, 10)
            st = ob.propagate_jacobi(w, 1.0, -w.a_coeffs[0] / w.b_coeffs[1])
            field_positive = (st.dq > 0).all() and st.dq_beyond > 0
            assert ob.hessian_minimality(w).positive_definite == field_positive


def test_grid_scan_wobbly_finds(wobbly3):
    scan = ob.conjugate_grid_scan(wobbly3, phi_count=8, t_count=8, t_max=3.0, n_max=500)
    assert scan.complete
    found = scan.found
    assert found
    assert min(r.n_conjugate for r in found) >= 2
    row = next(r for r in scan.rows
               if abs(r.seed_phi) < 1e-12 and abs(r.seed_t - 1.5) < 1e-12)
    assert row.n_conjugate == 6


def test_grid_scan_stop_at_first(wobbly3):
    scan = ob.conjugate_grid_scan(wobbly3, phi_count=8, t_count=8, t_max=3.0,
                                  n_max=500, stop_at_first=True)
    assert scan.found


def test_grid_scan_workers_bitwise_identical(wobbly3):
    one = ob.conjugate_grid_scan(wobbly3, phi_count=16, t_count=16, t_max=3.0,
                                 n_max=300, workers=1)
    four = ob.conjugate_grid_scan(wobbly3, phi_count=16, t_count=16, t_max=3.0,
                                  n_max=300, workers=4)
    assert [r.n_conjugate for r in one.rows] == [r.n_conjugate for r in four.rows]


def test_hopf_circle(unit_circle, circle_seed):
    om = ob.hopf_omega(unit_circle, circle_seed)
    assert om.converged and om.minimizing
    # the window value decays like 1/N toward 0
    assert abs(om.omega) < 1e-3
    assert om.bound_low == pytest.approx(-1.0, abs=1e-12)
    assert om.bound_high == pytest.approx(1.0, abs=1e-12)
    assert om.bound_low < om.omega < om.bound_high
    assert om.relation_fwd_residual < 1e-8
    assert om.relation_here_residual < 1e-8


def test_hopf_ellipse_seeds(ellipse21):
    for phi, t in ((0.0, 1.0), (1.2, 0.6)):
        seed = dynamics.chord_tail_point(ellipse21, phi, t)
        om = ob.hopf_omega(ellipse21, seed)
        assert om.converged and om.minimizing
        assert om.bound_low < om.omega < om.bound_high
        assert om.relation_fwd_residual < 1e-8
        assert om.relation_here_residual < 1e-8


def test_hopf_conjugate_seed_reports_failure(wobbly3, conjugate_seed):
    om = ob.hopf_omega(wobbly3, conjugate_seed)
    assert not om.minimizing
    assert not om.converged
    assert om.omega is None
    assert "not locally minimizing" in om.message


def test_jacobi_push_matches_differential(presets):
    # the closed-form tangent update must track the finite-difference
    # differential of the geometric map along 100-step orbits
    for curve in presets.values():
        pt = dynamics.chord_tail_point(curve, 0.9, 1.1)
        for _ in range(100):
            phi_m, t = dynamics.chord_of(curve, pt)
            s11, s22, s12 = jacobi.sderiv_scalar(curve, phi_m, t)[:3]
            dmat = ob.differential_fd(curve, pt)
            for dp, dq in ((1.0, 0.0), (0.3, 0.7)):
                dp1, dq1 = jacobi.jacobi_push(s11, s12, s22, dp, dq)
                fd = dmat @ np.array([dp, dq])
                assert abs(fd[0] - dp1) / max(1.0, abs(dp1)) < 1e-5
                assert abs(fd[1] - dq1) / max(1.0, abs(dq1)) < 1e-5
            pt = ob.step(curve, pt)
