"""Topological densities, shell degrees, defect detection, Bianchi."""

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ymball import synth
from ymball.chern import (
    CHERN_TRACE_WEIGHT,
    DefectSet,
    bianchi_residual,
    chern2_density,
    detect_defects,
    shell_degree,
    total_boundary_degree,
)
from ymball.errors import (
    CurvatureMismatch,
    ShellOutOfDomain,
    SliceTooSmall,
    TooCoarse,
    UnsupportedDegree,
)
from ymball.lattice import (
    PAIR_INDEX,
    Form,
    apply_gauge,
    curvature,
    lattice_spec,
    zero_form,
)

ORIGIN = np.zeros(5)

# basis with coefficient dot <x, y> = -2 tr(XY): X = sum_k x_k tau_k,
# tau_k = -(i/2) sigma_k
_SIGMA = [
    np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex),
    np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex),
    np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex),
]
_TAU = [-0.5j * s for s in _SIGMA]


def _as_matrix(coeff):
    return sum(c * t for c, t in zip(coeff, _TAU))


def _pair_value(vals, a, b):
    """F_ab at one site with antisymmetry, from PAIRS-ordered storage."""
    if a < b:
        return vals[PAIR_INDEX[(a, b)]]
    return -vals[PAIR_INDEX[(b, a)]]


def _parity(perm):
    inv = sum(1 for i in range(len(perm)) for j in range(i + 1, len(perm))
              if perm[i] > perm[j])
    return -1.0 if inv % 2 else 1.0


def _cone_form(spec, degree=1, center=None):
    vals = synth.cone_curvature_at(spec.positions, center=center,
                                   degree=degree)
    return Form(spec=spec, degree=2, values=vals)


def test_density_zero_and_degree_error():
    sp = lattice_spec(8)
    dens = chern2_density(zero_form(sp, 2))
    assert dens.shape == (sp.n_sites, 5)
    assert np.all(dens == 0.0)
    with pytest.raises(UnsupportedDegree):
        chern2_density(zero_form(sp, 1))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_density_matches_matrix_trace_oracle(seed):
    # <F ^ F> written with the matrix trace directly, site by site
    rng = np.random.default_rng(seed)
    sp = lattice_spec(8)
    vals = rng.normal(size=(4, 10, 3))
    f = Form(spec=sp, degree=2, values=vals)
    dens = chern2_density(f)
    for s in range(4):
        mats = [_as_matrix(vals[s, i]) for i in range(10)]
        for k in range(5):
            m, n, r, q = (a for a in range(5) if a != k)
            tr = (np.trace(mats[PAIR_INDEX[(m, n)]] @ mats[PAIR_INDEX[(r, q)]])
                  - np.trace(mats[PAIR_INDEX[(m, r)]] @ mats[PAIR_INDEX[(n, q)]])
                  + np.trace(mats[PAIR_INDEX[(m, q)]] @ mats[PAIR_INDEX[(n, r)]]))
            oracle = 2.0 * CHERN_TRACE_WEIGHT * (-2.0) * tr.real
            assert abs(tr.imag) < 1e-14
            assert abs(dens[s, k] - oracle) < 1e-12


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_density_matches_antisymmetrization_oracle(seed):
    # the three-term pair pattern equals the full 24-permutation
    # epsilon sum over the four axes complementary to k, divided by 8
    rng = np.random.default_rng(seed)
    sp = lattice_spec(8)
    vals = rng.normal(size=(3, 10, 3))
    dens = chern2_density(Form(spec=sp, degree=2, values=vals))
    for s in range(3):
        for k in range(5):
            rest = [a for a in range(5) if a != k]
            acc = 0.0
            for perm in itertools.permutations(rest):
                fa = _pair_value(vals[s], perm[0], perm[1])
                fb = _pair_value(vals[s], perm[2], perm[3])
                acc += _parity(np.searchsorted(rest, perm)) * float(fa @ fb)
            oracle = 2.0 * CHERN_TRACE_WEIGHT * acc / 8.0
            assert abs(dens[s, k] - oracle) < 1e-12


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_trace_of_curvature_vanishes_exactly(seed):
    # the algebra is traceless, so tr(F_ab) = 0 holds exactly
    rng = np.random.default_rng(seed)
    coeff = rng.normal(size=(10, 3)) * 10.0 ** rng.integers(-3, 4)
    for i in range(10):
        assert np.trace(_as_matrix(coeff[i])) == 0.0


def test_shell_degree_zero_field_and_errors():
    sp = lattice_spec(12)
    f = zero_form(sp, 2)
    assert shell_degree(f, ORIGIN, 0.75) == 0.0
    with pytest.raises(SliceTooSmall):
        shell_degree(f, ORIGIN, 2.0 * sp.h)
    with pytest.raises(ShellOutOfDomain):
        shell_degree(f, 0.6 * np.eye(5)[0], 0.75)
    with pytest.raises(UnsupportedDegree):
        shell_degree(zero_form(sp, 1), ORIGIN, 0.75)


def test_shell_degree_smooth_abelian_near_zero():
    # fields valued along one Lie direction have closed density, so
    # every shell integral is a pure discretization remainder
    for n in (12, 16):
        sp = lattice_spec(n)
        a = synth.SmoothConnection(seed=7, amplitude=0.8,
                                   max_wave=1).as_form(sp)
        av = np.zeros_like(a.values)
        av[:, :, 2] = a.values[:, :, 2]
        f = curvature(Form(spec=sp, degree=1, values=av))
        assert abs(shell_degree(f, ORIGIN, 0.75)) < 1e-3


def test_cone_degree_calibration_and_mirror():
    sp = lattice_spec(16)
    f_plus = _cone_form(sp, degree=1)
    f_minus = _cone_form(sp, degree=-1)
    d_in = shell_degree(f_plus, ORIGIN, 0.6)
    d_out = shell_degree(f_plus, ORIGIN, 0.75)
    assert abs(d_out - 1.0) < 0.04
    assert abs(d_in - 1.0) < 0.09
    # interpolation error shrinks with shell radius at fixed h
    assert abs(d_out - 1.0) < abs(d_in - 1.0)
    assert abs(shell_degree(f_minus, ORIGIN, 0.75) + d_out) < 1e-10
    assert abs(total_boundary_degree(f_plus) - 1.0) < 0.04


def test_degree_gauge_invariance():
    for n, bound in ((12, 0.05), (16, 0.05)):
        sp = lattice_spec(n)
        a = synth.SmoothConnection(seed=11, amplitude=0.6,
                                   max_wave=1).as_form(sp)
        g = synth.SmoothGauge(seed=4, amplitude=0.5).as_gauge(sp)
        d0 = shell_degree(curvature(a), ORIGIN, 0.75)
        d1 = shell_degree(curvature(apply_gauge(a, g)), ORIGIN, 0.75)
        assert abs(d1 - d0) < bound * sp.h**2


def test_detect_defects_empty_and_coarse_error():
    sp = lattice_spec(12)
    ds = detect_defects(zero_form(sp, 2), cell_scale=1.5)
    assert len(ds) == 0
    assert ds.total_rounded() == 0
    assert list(ds.csv_rows()) == []
    with pytest.raises(TooCoarse):
        detect_defects(zero_form(sp, 2), cell_scale=4.0 * sp.h)
    # smooth fields carry no charge anywhere
    a = synth.SmoothConnection(seed=2, amplitude=0.5, max_wave=1).as_form(sp)
    assert len(detect_defects(curvature(a), cell_scale=1.5)) == 0


def test_detect_single_defect_at_origin():
    sp = lattice_spec(16)
    ds = detect_defects(_cone_form(sp, degree=1), cell_scale=1.1)
    assert len(ds) == 1
    assert np.allclose(ds.points[0], ORIGIN)
    assert ds.rounded[0] == 1
    assert abs(ds.degrees[0] - 0.9608) < 5e-3
    assert ds.gaps[0] < 0.05
    assert ds.shell_radius == pytest.approx(0.66)
    assert ds.total_rounded() == 1
    rows = list(ds.csv_rows())
    assert len(rows) == 1 and len(rows[0]) == 9


def test_detect_two_opposite_defects():
    sp = lattice_spec(24)
    c1 = np.array([0.35, 0.0, 0.0, 0.0, 0.0])
    vals = (synth.cone_curvature_at(sp.positions, center=c1, degree=1)
            + synth.cone_curvature_at(sp.positions, center=-c1, degree=-1))
    f = Form(spec=sp, degree=2, values=vals)
    ds = detect_defects(f, cell_scale=0.7, offset=c1)
    assert len(ds) == 2
    # lexicographic cell order: the -0.35 cell comes first
    assert np.allclose(ds.points[0], -c1) and np.allclose(ds.points[1], c1)
    assert ds.rounded[0] == -1 and ds.rounded[1] == 1
    assert np.all(ds.gaps < 0.1)
    assert ds.total_rounded() == 0
    assert abs(total_boundary_degree(f)) < 0.02


def test_detect_quantization_tightens_on_fine_lattice():
    sp = lattice_spec(32)
    ds = detect_defects(_cone_form(sp, degree=1), cell_scale=1.1)
    assert len(ds) == 1
    assert ds.rounded[0] == 1
    assert ds.gaps[0] < 0.05


def test_bianchi_zero_constant_and_mismatch():
    sp = lattice_spec(12)
    a = zero_form(sp, 1)
    assert bianchi_residual(a, curvature(a)) == 0.0
    rng = np.random.default_rng(3)
    av = np.broadcast_to(rng.normal(size=(5, 3)) * 0.4,
                         (sp.n_sites, 5, 3)).copy()
    a = Form(spec=sp, degree=1, values=av)
    f = curvature(a)
    # centered and one-sided stencils are exact on constants and the
    # algebraic term cancels through the Jacobi identity
    assert bianchi_residual(a, f) <= 1e-12
    f_bad = f.copy()
    f_bad.values += 1e-6
    with pytest.raises(CurvatureMismatch):
        bianchi_residual(a, f_bad)
    with pytest.raises(UnsupportedDegree):
        bianchi_residual(f, f)


def test_bianchi_smooth_refinement_order():
    res = {}
    for n in (12, 16, 24):
        sp = lattice_spec(n)
        a = synth.SmoothConnection(seed=5, amplitude=0.5,
                                   max_wave=1).as_form(sp)
        res[n] = bianchi_residual(a, curvature(a))
    for n0, n1 in ((12, 16), (16, 24)):
        order = np.log(res[n0] / res[n1]) / np.log((n1 - 1) / (n0 - 1))
        assert order >= 1.9


def test_bianchi_gauge_covariance_bound():
    for n in (12, 16):
        sp = lattice_spec(n)
        a = synth.SmoothConnection(seed=5, amplitude=0.5,
                                   max_wave=1).as_form(sp)
        g = synth.SmoothGauge(seed=9, amplitude=0.4).as_gauge(sp)
        r0 = bianchi_residual(a, curvature(a))
        ag = apply_gauge(a, g)
        r1 = bianchi_residual(ag, curvature(ag))
        assert r1 <= 2.0 * r0 + 300.0 * sp.h**2


def test_bianchi_defect_buffer_excludes_singular_collar():
    # 1/rho cone over a smooth angular form: point singularity at the
    # origin, no gauge string, so only the collar is contaminated
    sp = lattice_spec(16)
    sc = synth.SmoothConnection(seed=3, amplitude=0.7, max_wave=1)

    def angular(dirs):
        v = sc.conn_at(dirs)
        rad = np.einsum("pac,pa->pc", v, dirs)
        return v - dirs[:, :, None] * rad[:, None, :]

    a = synth.cone_connection(sp, angular)
    f = curvature(a)
    marked = DefectSet(points=ORIGIN[None, :], degrees=np.array([0.0]),
                       rounded=np.array([0]), gaps=np.array([0.0]),
                       shell_radius=0.4, cell_scale=1.1)
    r_all = bianchi_residual(a, f)
    r_buf = bianchi_residual(a, f, defects=marked)
    assert r_buf < r_all / 2.0
    assert r_buf <= 15.0
