"""Angular grids on the 4-sphere and sphere slices of lattice fields.

Every slice, whatever its center and radius, is sampled on one fixed
cell-centered hyperspherical grid of the unit S^4. That makes slices at
different radii directly comparable node by node (oscillation profiles,
orbit distances, trace compactness) and gives the sphere its own
structured finite differences for d, d* and intrinsic curvature.

Coordinates: theta1, theta2, theta3 in (0, pi), phi in (0, 2pi), with
x1 = cos t1, x2 = sin t1 cos t2, x3 = sin t1 sin t2 cos t3,
x4 = sin t1 sin t2 sin t3 cos p, x5 = sin t1 sin t2 sin t3 sin p.
Nodes sit at cell centers, so no node touches a coordinate pole. The
surface measure is sin^3 t1 sin^2 t2 sin t3 dt1 dt2 dt3 dp.

Slice values are frame components of the unit-scale pullback: for a
slice at radius r the stored quantity is r * A_mu(c + r w) E_a^mu, the
homothety normalization that makes slices of different radii live on
the same sphere.
"""

from dataclasses import dataclass

import numpy as np

from . import su2
from .errors import GeometryMismatch, SliceOutOfDomain, SliceTooSmall
from .lattice import _W_ONESIDED, interpolate

# frame index pairs for 2-forms on the sphere
SPAIRS = [(a, b) for a in range(4) for b in range(a + 1, 4)]
SPAIR_INDEX = {p: i for i, p in enumerate(SPAIRS)}


class SphereGrid:
    """Cell-centered angular grid with frame and quadrature tables.

    Use :func:`sphere_grid` for cached instances. The structured shape
    is (m, m, m, 2m) flattened in C order; node count 2 m^4.
    """

    def __init__(self, m):
        if m < 6:
            raise ValueError("sphere grid needs m >= 6")
        self.m = int(m)
        self.dang = np.pi / self.m
        t = (np.arange(self.m) + 0.5) * self.dang
        p = (np.arange(2 * self.m) + 0.5) * self.dang
        self.shape = (self.m, self.m, self.m, 2 * self.m)
        self.n_nodes = 2 * self.m**4

        t1, t2, t3, ph = np.meshgrid(t, t, t, p, indexing="ij")
        t1, t2, t3, ph = (a.ravel() for a in (t1, t2, t3, ph))
        self.angles = np.stack([t1, t2, t3, ph], axis=1)

        s1, c1 = np.sin(t1), np.cos(t1)
        s2, c2 = np.sin(t2), np.cos(t2)
        s3, c3 = np.sin(t3), np.cos(t3)
        sp, cp = np.sin(ph), np.cos(ph)

        self.embed = np.stack([
            c1, s1 * c2, s1 * s2 * c3, s1 * s2 * s3 * cp, s1 * s2 * s3 * sp,
        ], axis=1)
        self.hfac = np.stack([
            np.ones_like(s1), s1, s1 * s2, s1 * s2 * s3], axis=1)
        self.weights = s1**3 * s2**2 * s3 * self.dang**4

        zero = np.zeros_like(s1)
        # d/dtheta_a of log(sin^3 t1 sin^2 t2 sin t3); exact, so the
        # divergence never differences the vanishing density itself
        self.dlogw = np.stack([
            3.0 * c1 / s1, 2.0 * c2 / s2, c3 / s3, zero], axis=1)
        self.frame = np.stack([
            np.stack([-s1, c1 * c2, c1 * s2 * c3,
                      c1 * s2 * s3 * cp, c1 * s2 * s3 * sp], axis=1),
            np.stack([zero, -s2, c2 * c3, c2 * s3 * cp, c2 * s3 * sp], axis=1),
            np.stack([zero, zero, -s3, c3 * cp, c3 * sp], axis=1),
            np.stack([zero, zero, zero, -sp, cp], axis=1),
        ], axis=1)

        # orientation of (radial, frame) vs the ambient standard basis;
        # constant over the grid, checked once
        mat = np.empty((5, 5))
        mat[0] = self.embed[0]
        mat[1:] = self.frame[0]
        self.orientation = float(np.sign(np.linalg.det(mat)))

    def struct(self, values):
        return values.reshape(self.shape + values.shape[1:])

    def dtheta(self, values, axis):
        """Derivative along angular coordinate axis (3 = phi, periodic)."""
        v = self.struct(np.asarray(values, dtype=float))
        out = np.empty_like(v)
        d = self.dang

        def take(i):
            return np.take(v, i, axis=axis)

        if axis == 3:
            out = (np.roll(v, -1, axis=axis) - np.roll(v, 1, axis=axis)) / (2 * d)
            return out.reshape(values.shape)

        sl_mid = [slice(None)] * v.ndim
        sl_mid[axis] = slice(1, -1)
        sl_lo = [slice(None)] * v.ndim
        sl_lo[axis] = slice(2, None)
        sl_hi = [slice(None)] * v.ndim
        sl_hi[axis] = slice(None, -2)
        out[tuple(sl_mid)] = (v[tuple(sl_lo)] - v[tuple(sl_hi)]) / (2 * d)
        w0, w1, w2, w3 = _W_ONESIDED
        first = [slice(None)] * v.ndim
        first[axis] = 0
        out[tuple(first)] = (w0 * take(0) + w1 * take(1)
                             + w2 * take(2) + w3 * take(3)) / d
        last = [slice(None)] * v.ndim
        last[axis] = self.m - 1
        out[tuple(last)] = -(w0 * take(-1) + w1 * take(-2)
                             + w2 * take(-3) + w3 * take(-4)) / d
        return out.reshape(values.shape)

    def dtheta_transpose(self, values, axis):
        """Exact transpose of :meth:`dtheta` in plain per-node pairing.

        Gradient assembly for descent needs the stencil's literal
        adjoint; the analytic codifferential only matches it up to
        quadrature error, which is enough for residual reporting but
        not for optimizer line searches.
        """
        v = self.struct(np.asarray(values, dtype=float))
        d = self.dang
        if axis == 3:
            out = (np.roll(v, 1, axis=3) - np.roll(v, -1, axis=3)) / (2 * d)
            return out.reshape(values.shape)
        out = np.zeros_like(v)
        sl = [slice(None)] * v.ndim

        def seg(a, b):
            s = list(sl)
            s[axis] = slice(a, b)
            return tuple(s)

        def row(i):
            s = list(sl)
            s[axis] = i
            return tuple(s)

        mid = v[seg(1, -1)]
        out[seg(2, None)] += mid / (2 * d)
        out[seg(None, -2)] -= mid / (2 * d)
        for k, wk in enumerate(_W_ONESIDED):
            out[row(k)] += wk * v[row(0)] / d
            out[row(self.m - 1 - k)] -= wk * v[row(self.m - 1)] / d
        return out.reshape(values.shape)

    def gauge_logderiv(self, gvals, axis):
        """(g^-1 d_theta g) along one angular coordinate, shape (N, 3)."""
        g = gvals.reshape(self.shape + (4,))
        d = self.dang

        def logstep(a, b):
            return su2.log_map(su2.gmul(su2.ginv(a), b))

        if axis == 3:
            out = (logstep(g, np.roll(g, -1, axis=3))
                   - logstep(g, np.roll(g, 1, axis=3))) / (2 * d)
            return out.reshape(self.n_nodes, 3)

        out = np.empty(self.shape + (3,))
        sl = [slice(None)] * 4

        def row(i):
            s = list(sl)
            s[axis] = i
            return tuple(s)

        v_lo = np.take(g, np.arange(2, self.m), axis=axis)
        v_hi = np.take(g, np.arange(0, self.m - 2), axis=axis)
        mid = np.take(g, np.arange(1, self.m - 1), axis=axis)
        ctr = (logstep(mid, v_lo) - logstep(mid, v_hi)) / (2 * d)
        s = list(sl)
        s[axis] = slice(1, -1)
        out[tuple(s)] = ctr
        _, w1, w2, w3 = _W_ONESIDED
        g0 = g[row(0)]
        out[row(0)] = (w1 * logstep(g0, g[row(1)])
                       + w2 * logstep(g0, g[row(2)])
                       + w3 * logstep(g0, g[row(3)])) / d
        gl = g[row(self.m - 1)]
        out[row(self.m - 1)] = -(w1 * logstep(gl, g[row(self.m - 2)])
                                 + w2 * logstep(gl, g[row(self.m - 3)])
                                 + w3 * logstep(gl, g[row(self.m - 4)])) / d
        return out.reshape(self.n_nodes, 3)


_GRID_CACHE = {}


def sphere_grid(m):
    m = int(m)
    if m not in _GRID_CACHE:
        _GRID_CACHE[m] = SphereGrid(m)
    return _GRID_CACHE[m]


def default_slice_m(radius, h):
    """Angular resolution matching the lattice data density."""
    return int(np.clip(np.ceil(np.pi * radius / h), 6, 16))


@dataclass
class SphereSlice:
    """Unit-scale pullback of a connection to a sphere around center."""

    center: np.ndarray
    radius: float
    grid: SphereGrid
    values: np.ndarray          # (n_nodes, 4, 3) frame components

    def copy(self):
        return SphereSlice(self.center.copy(), self.radius, self.grid,
                           self.values.copy())

    def check_compatible(self, other):
        if (self.grid is not other.grid
                or abs(self.radius - other.radius) > 1e-12 * (1 + self.radius)
                or np.any(np.abs(self.center - other.center) > 1e-12)):
            raise GeometryMismatch("slices on different spheres")

    def norm2(self):
        """Integral of |values|^2 over the unit sphere."""
        return float(np.sum(self.values**2
                            * self.grid.weights[:, None, None]))

    def norm(self):
        return float(np.sqrt(self.norm2()))

    def total_area(self):
        """Quadrature area of the ambient sphere of this radius."""
        return float(np.sum(self.grid.weights) * self.radius**4)


def extract_slice(conn, center, radius, m=None):
    """Sample the tangential part of a lattice 1-form on a sphere.

    Values are interpolated at the nodes of the angular grid and
    contracted with the orthonormal tangent frame; the unit-scale
    normalization multiplies by the radius.
    """
    spec = conn.spec
    center = np.asarray(center, dtype=float)
    if radius < 3.0 * spec.h:
        raise SliceTooSmall(f"radius {radius:.4g} < 3h = {3 * spec.h:.4g}")
    if np.linalg.norm(center) + radius > spec.domain_radius + 1e-12:
        raise SliceOutOfDomain(
            f"sphere (|c| = {np.linalg.norm(center):.4g}, r = {radius:.4g}) "
            f"leaves the domain ball")
    grid = sphere_grid(m if m is not None else default_slice_m(radius, spec.h))
    points = center + radius * grid.embed
    amb = interpolate(spec, conn.values, points)       # (N, 5, 3)
    vals = radius * np.einsum("nam,nmc->nac", grid.frame, amb)
    return SphereSlice(center, float(radius), grid, vals)


def slice_apply_gauge(slc, gvals):
    """Gauge action on the unit-sphere form: g^-1 dg + g^-1 v g."""
    grid = slc.grid
    out = slc.copy()
    for a in range(4):
        lam = grid.gauge_logderiv(gvals, a) / grid.hfac[:, a, None]
        out.values[:, a] = lam + su2.adjoint_action(gvals, slc.values[:, a])
    return out


def slice_dstar(slc):
    """Codifferential of the slice 1-form on the unit sphere, (N, 3).

    Expanded form: -sum_a (d_a v_a + d_a(log W) v_a) / h_a, with the
    log-density derivative taken analytically. Differencing W * v and
    dividing back by W would amplify edge truncation by 1/W at the
    poles; here only the smooth frame component is differenced.
    """
    grid = slc.grid
    acc = np.zeros((grid.n_nodes, 3))
    for a in range(4):
        va = slc.values[:, a]
        term = grid.dtheta(va, a) + grid.dlogw[:, a, None] * va
        acc += term / grid.hfac[:, a, None]
    return -acc


def slice_curvature(slc):
    """Intrinsic curvature of the slice, frame components (N, 6, 3).

    Computed in coordinate components (multiply by the metric factors),
    differentiated on the angular grid, then scaled back to the frame.
    """
    grid = slc.grid
    coord = slc.values * grid.hfac[:, :, None]    # omega_tilde
    out = np.empty((grid.n_nodes, 6, 3))
    for i, (a, b) in enumerate(SPAIRS):
        f = (grid.dtheta(coord[:, b], a) - grid.dtheta(coord[:, a], b)
             + su2.bracket(coord[:, a], coord[:, b]))
        out[:, i] = f / (grid.hfac[:, a] * grid.hfac[:, b])[:, None]
    return out


def slice_degree(slc):
    """Second Chern degree of the slice from its intrinsic curvature."""
    f = slice_curvature(slc)
    return degree_from_frame_curvature(slc.grid, f)


def frame_curvature(grid, f_ambient):
    """Contract ambient 2-form samples (N, 10, 3) into the frame (N, 6, 3).

    F(e_a, e_b) = sum_{mu<nu} (E_a^mu E_b^nu - E_a^nu E_b^mu) F_munu.
    """
    from .lattice import PAIRS
    out = np.zeros((grid.n_nodes, 6, 3))
    for i, (a, b) in enumerate(SPAIRS):
        ea, eb = grid.frame[:, a], grid.frame[:, b]
        for j, (mu, nu) in enumerate(PAIRS):
            w = ea[:, mu] * eb[:, nu] - ea[:, nu] * eb[:, mu]
            out[:, i] += w[:, None] * f_ambient[:, j]
    return out


# Weight of the invariant bilinear in the degree integrand, calibrated
# once so the self-dual generator measures +1 and frozen. Coefficient
# dot products stand in for the matrix trace: x . y = -2 tr(XY).
CHERN_TRACE_WEIGHT = 0.5


def frame_chern_density(grid, f):
    """Per-node <F ^ F> density for frame curvature samples (N, 6, 3)."""
    i01, i23 = SPAIR_INDEX[(0, 1)], SPAIR_INDEX[(2, 3)]
    i02, i13 = SPAIR_INDEX[(0, 2)], SPAIR_INDEX[(1, 3)]
    i03, i12 = SPAIR_INDEX[(0, 3)], SPAIR_INDEX[(1, 2)]
    dens = (np.sum(f[:, i01] * f[:, i23], axis=1)
            - np.sum(f[:, i02] * f[:, i13], axis=1)
            + np.sum(f[:, i03] * f[:, i12], axis=1))
    return 2.0 * CHERN_TRACE_WEIGHT * dens


def degree_from_frame_curvature(grid, f):
    """Degree integral for frame-component curvature samples (N, 6, 3)."""
    dens = frame_chern_density(grid, f)
    total = float(np.sum(dens * grid.weights))
    return grid.orientation * total / (8 * np.pi**2)
