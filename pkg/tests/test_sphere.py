"""Angular sphere grid, slice extraction and intrinsic operators."""

import numpy as np
import pytest

from ymball import su2, synth
from ymball.errors import GeometryMismatch, SliceOutOfDomain, SliceTooSmall
from ymball.lattice import apply_gauge, lattice_spec, zero_form
from ymball.sphere import (
    SphereSlice,
    degree_from_frame_curvature,
    extract_slice,
    frame_curvature,
    slice_apply_gauge,
    slice_curvature,
    slice_dstar,
    sphere_grid,
)

AREA_S4 = 8 * np.pi**2 / 3


def test_quadrature_area_and_moments():
    # midpoint rule is second order here (the lone sin factor keeps an
    # h^2/12 boundary term), so tolerances scale with (pi/m)^2
    errs = []
    for m, rel_tol in ((8, 1e-2), (16, 2.6e-3)):
        g = sphere_grid(m)
        errs.append(abs(g.weights.sum() - AREA_S4))
        assert errs[-1] < rel_tol * AREA_S4
        # by symmetry each coordinate square averages to 1/5
        for k in range(5):
            mom = np.sum(g.weights * g.embed[:, k] ** 2)
            assert abs(mom - AREA_S4 / 5) < 2.6 * rel_tol * (AREA_S4 / 5)
    assert errs[1] < errs[0] / 3.5


def test_frame_orthonormal_tangent_and_oriented():
    g = sphere_grid(8)
    gram = np.einsum("nak,nbk->nab", g.frame, g.frame)
    assert np.allclose(gram, np.eye(4)[None], atol=1e-12)
    radial = np.einsum("nak,nk->na", g.frame, g.embed)
    assert np.allclose(radial, 0.0, atol=1e-12)
    rng = np.random.default_rng(0)
    for i in rng.choice(g.n_nodes, size=20):
        mat = np.vstack([g.embed[i], g.frame[i]])
        assert np.sign(np.linalg.det(mat)) == g.orientation


def test_dtheta_analytic():
    # centered truncation is delta^2/6 |f'''|
    g = sphere_grid(12)
    t1 = g.angles[:, 0]
    ph = g.angles[:, 3]
    delta = np.pi / 12
    err_t = np.abs(g.dtheta(np.cos(t1), 0) + np.sin(t1)).max()
    err_p = np.abs(g.dtheta(np.cos(ph), 3) + np.sin(ph)).max()
    assert err_t < 1.1 * delta**2 / 6
    assert err_p < 1.1 * delta**2 / 6
    finer = sphere_grid(24)
    err_t2 = np.abs(finer.dtheta(np.cos(finer.angles[:, 0]), 0)
                    + np.sin(finer.angles[:, 0])).max()
    assert err_t2 < err_t / 3.5


def test_laplacian_eigenfunction():
    # d* d cos(theta1) = 4 cos(theta1): the l=1 eigenvalue l(l+3) on S^4.
    errs = []
    for m in (12, 24):
        g = sphere_grid(m)
        vals = np.zeros((g.n_nodes, 4, 3))
        vals[:, :, 0] = g.frame[:, :, 0]   # frame components of grad x1
        slc = SphereSlice(np.zeros(5), 1.0, g, vals)
        got = slice_dstar(slc)[:, 0]
        want = 4.0 * np.cos(g.angles[:, 0])
        num = np.sqrt(np.sum(g.weights * (got - want) ** 2))
        den = np.sqrt(np.sum(g.weights * want**2))
        errs.append(num / den)
        sup = np.max(np.abs(got - want))
        assert sup < 0.02 * (12.0 / m) ** 2 * 4.0
    assert errs[0] < 5e-3
    assert errs[1] < errs[0] / 3.0


def test_slice_of_zero_and_errors():
    spec = lattice_spec(12)
    a = zero_form(spec, 1)
    slc = extract_slice(a, np.zeros(5), 0.6)
    assert np.all(slc.values == 0.0)
    with pytest.raises(SliceTooSmall):
        extract_slice(a, np.zeros(5), spec.h)
    with pytest.raises(SliceOutOfDomain):
        extract_slice(a, np.array([0.5, 0, 0, 0, 0]), 0.7)
    other = extract_slice(a, np.zeros(5), 0.75)
    with pytest.raises(GeometryMismatch):
        other.check_compatible(slc)
    with pytest.raises(GeometryMismatch):
        extract_slice(a, np.zeros(5), 0.6, m=8).check_compatible(slc)


def test_constant_form_slice_integral():
    # A = dx1 tau1: integral of the squared tangential projection of e1
    # over S^4 is (1 - 1/5) * Area = 32 pi^2 / 15, times r^2 unit-scale
    spec = lattice_spec(16)
    a = zero_form(spec, 1)
    a.values[:, 0, 0] = 1.0
    for r in (0.45, 0.75):
        slc = extract_slice(a, np.zeros(5), r, m=12)
        want = r**2 * 32 * np.pi**2 / 15
        assert abs(slc.norm2() - want) < 0.01 * want
        # node values equal r * (tangential projection of e1) exactly
        proj = slc.grid.frame[:, :, 0]
        assert np.allclose(slc.values[:, :, 0], r * proj, atol=1e-9)
        assert slc.total_area() == pytest.approx(AREA_S4 * r**4, rel=5e-3)


def test_slice_gauge_covariance_against_lattice():
    spec = lattice_spec(16)
    conn = synth.SmoothConnection(3, amplitude=0.3, max_wave=1)
    gauge = synth.SmoothGauge(4, amplitude=0.5, max_wave=1)
    a = conn.as_form(spec)
    r = 0.5
    direct = extract_slice(apply_gauge(a, gauge.as_gauge(spec)),
                           np.zeros(5), r, m=10)
    slc = extract_slice(a, np.zeros(5), r, m=10)
    gnode = su2.exp_map(gauge.xi_at(r * slc.grid.embed))
    via_sphere = slice_apply_gauge(slc, gnode)
    num = np.sqrt(np.sum((direct.values - via_sphere.values) ** 2
                         * slc.grid.weights[:, None, None]))
    den = max(direct.norm(), 1e-30)
    assert num / den < 0.08, num / den


def test_pure_gauge_slice_curvature_small():
    g = sphere_grid(12)
    gauge = synth.SmoothGauge(7, amplitude=0.4, max_wave=1)
    gnode = su2.exp_map(gauge.xi_at(g.embed))
    base = SphereSlice(np.zeros(5), 1.0, g, np.zeros((g.n_nodes, 4, 3)))
    pure = slice_apply_gauge(base, gnode)
    f = slice_curvature(pure)
    fmag = np.sqrt(np.sum(f**2 * g.weights[:, None, None]))
    lam = np.sqrt(np.sum(pure.values**2 * g.weights[:, None, None]))
    assert fmag < 0.05 * max(lam, 1e-30) * lam


def test_degree_calibration_instanton():
    for m, tol in ((10, 0.02), (16, 0.006)):
        g = sphere_grid(m)
        for k in (1, -1):
            _, f_amb = synth.instanton_sphere(g.embed, degree=k)
            deg = degree_from_frame_curvature(g, frame_curvature(g, f_amb))
            assert abs(deg - k) < tol, (m, k, deg)
