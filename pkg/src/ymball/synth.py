"""Closed-form synthetic fields: smooth random connections, affine
connections, constant-curvature extensions, and the degree +-1 instanton
restricted to spheres.

Everything here has an analytic expression, so tests can compare lattice
operators against exact values.
"""

import numpy as np

from . import su2
from .errors import UnsupportedDegree
from .lattice import PAIRS, Form, GaugeField, zero_form
from .rng import substream


class SmoothConnection:
    """Band-limited random connection with analytic derivatives.

    A_mu^a(x) = amp * sum_j C[j, mu, a] cos(w_j . x + phi_j), with a few
    low wavevectors w_j. Exact dA and F are available pointwise.
    """

    def __init__(self, seed, amplitude=0.3, n_modes=3, domain_radius=1.0,
                 max_wave=2, context="smooth-conn"):
        rng = substream(seed, context)
        self.amp = amplitude
        self.k = rng.integers(-max_wave, max_wave + 1,
                              size=(n_modes, 5)).astype(float)
        self.k *= np.pi / (2.0 * domain_radius)
        self.phase = rng.uniform(0, 2 * np.pi, size=n_modes)
        self.coef = rng.normal(size=(n_modes, 5, 3)) / np.sqrt(n_modes)

    def conn_at(self, points):
        """(P, 5, 3) connection values."""
        pts = np.atleast_2d(points)
        arg = pts @ self.k.T + self.phase          # (P, J)
        return self.amp * np.einsum("pj,jma->pma", np.cos(arg), self.coef)

    def dconn_at(self, points):
        """(P, 5, 5, 3) partial derivatives d_nu A_mu."""
        pts = np.atleast_2d(points)
        arg = pts @ self.k.T + self.phase
        return -self.amp * np.einsum(
            "pj,jn,jma->pnma", np.sin(arg), self.k, self.coef)

    def curv_at(self, points):
        """(P, 10, 3) exact curvature F = dA + [A, A] per pair."""
        a = self.conn_at(points)
        da = self.dconn_at(points)
        out = np.empty((a.shape[0], 10, 3))
        for i, (m, n) in enumerate(PAIRS):
            out[:, i] = (da[:, m, n] - da[:, n, m]
                         + su2.bracket(a[:, m], a[:, n]))
        return out

    def as_form(self, spec):
        return Form(spec, 1, self.conn_at(spec.positions))


class SmoothGauge:
    """g = exp(xi) for a band-limited random su(2)-valued xi."""

    def __init__(self, seed, amplitude=0.8, n_modes=3, domain_radius=1.0,
                 max_wave=2, context="smooth-gauge"):
        rng = substream(seed, context)
        self.amp = amplitude
        self.k = rng.integers(-max_wave, max_wave + 1,
                              size=(n_modes, 5)).astype(float)
        self.k *= np.pi / (2.0 * domain_radius)
        self.phase = rng.uniform(0, 2 * np.pi, size=n_modes)
        self.coef = rng.normal(size=(n_modes, 3)) / np.sqrt(n_modes)

    def xi_at(self, points):
        pts = np.atleast_2d(points)
        arg = pts @ self.k.T + self.phase
        return self.amp * np.einsum("pj,ja->pa", np.cos(arg), self.coef)

    def as_gauge(self, spec):
        return GaugeField(spec, su2.exp_map(self.xi_at(spec.positions)))


def linear_connection(spec, seed, amplitude=0.4):
    """Affine A (exact under every lattice stencil) plus its exact F.

    Returns (Form, curv_at(points) closure).
    """
    rng = substream(seed, "linear-conn")
    a0 = amplitude * rng.normal(size=(5, 3))
    a1 = amplitude * rng.normal(size=(5, 5, 3))   # d_nu coefficient

    def conn_at(points):
        pts = np.atleast_2d(points)
        return a0 + np.einsum("pn,nma->pma", pts, a1.transpose(1, 0, 2))

    def curv_at(points):
        a = conn_at(points)
        out = np.empty((a.shape[0], 10, 3))
        for i, (m, n) in enumerate(PAIRS):
            out[:, i] = a1[n, m] - a1[m, n] + su2.bracket(a[:, m], a[:, n])
        return out

    return Form(spec, 1, conn_at(spec.positions)), conn_at, curv_at


def antisym_from_pairs(fbar_pairs):
    """(10, 3) pair components -> antisymmetric (5, 5, 3)."""
    m = np.zeros((5, 5, 3))
    for i, (a, b) in enumerate(PAIRS):
        m[a, b] = fbar_pairs[i]
        m[b, a] = -fbar_pairs[i]
    return m


def constant_curvature_conn(spec, fbar_pairs, center=None):
    """B = sum_{i<j} Fbar_ij (x_i dx_j - x_j dx_i)/2 around center.

    The linear field whose dB equals the constant 2-form Fbar; it is the
    energy-minimizing extension of its own boundary trace.
    """
    c = np.zeros(5) if center is None else np.asarray(center, dtype=float)
    m = antisym_from_pairs(np.asarray(fbar_pairs, dtype=float))
    x = spec.positions - c
    vals = 0.5 * np.einsum("pm,mna->pna", x, m)
    return Form(spec, 1, vals)


def constant_curvature_at(points, fbar_pairs, center=None):
    c = np.zeros(5) if center is None else np.asarray(center, dtype=float)
    m = antisym_from_pairs(np.asarray(fbar_pairs, dtype=float))
    x = np.atleast_2d(points) - c
    return 0.5 * np.einsum("pm,mna->pna", x, m)


# ---- instanton on the sphere ------------------------------------------------

# 't Hooft symbols eta[a, mu, nu], mu, nu = 0..3
_ETA = np.zeros((3, 4, 4))
for _a in range(3):
    for _m in range(3):
        for _n in range(3):
            if (_a, _m, _n) in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
                _ETA[_a, _m, _n] = 1.0
            elif (_a, _m, _n) in ((0, 2, 1), (1, 0, 2), (2, 1, 0)):
                _ETA[_a, _m, _n] = -1.0
    _ETA[_a, _a, 3] = 1.0
    _ETA[_a, 3, _a] = -1.0

# chart pole direction, kept off all lattice symmetry axes
_POLE = np.ones(5) / np.sqrt(5.0)
_V = np.eye(5)[4] - _POLE
_HOUSE = np.eye(5) - 2.0 * np.outer(_V, _V) / (_V @ _V)


def _eta_pairs(c, dy):
    """Pair components c eta(dy_i, dy_j) for ambient slots i < j."""
    out = np.empty((dy.shape[0], 10, 3))
    for idx, (i, j) in enumerate(PAIRS):
        out[:, idx] = c[:, None] * np.einsum(
            "amn,pm,pn->pa", _ETA, dy[:, i], dy[:, j])
    return out


def instanton_sphere(directions, degree=1):
    """Degree +-1 instanton sampled on unit-sphere directions.

    Stereographic pullback of the width-1 standard connection; the chart
    pole (the one gauge-singular point of the global form) sits at
    (1,1,1,1,1)/sqrt(5). Returns (A, F): ambient tangential 1-form
    (P, 5, 3) and ambient 2-form pair components (P, 10, 3).

    The connection values live in the single chart gauge and blow up
    like 1/angle near the pole (bundle behavior, not an artifact). The
    curvature is globally smooth, so it is evaluated per point in
    whichever chart is stable and rotated back into the chart gauge by
    the transition element (the unit quaternion of the inverted chart
    coordinate; the coefficient frame at the pole itself has no limit
    and that lone direction gets an arbitrary but bounded value).

    Raises UnsupportedDegree unless degree is +1 or -1.
    """
    if degree not in (1, -1):
        raise UnsupportedDegree("instanton datum implemented for degree +-1")
    w = np.atleast_2d(np.asarray(directions, dtype=float))
    w = w / np.linalg.norm(w, axis=1, keepdims=True)
    z = w @ _HOUSE.T
    den = 1.0 - z[:, 4]
    den = np.where(np.abs(den) < 1e-14, 1e-14, den)
    sgn = 1.0 if degree == 1 else -1.0   # chart-axis flip sets orientation
    chart = z[:, :4].copy()
    chart[:, 3] *= sgn
    y = chart / den[:, None]
    y2 = np.sum(y * y, axis=1)
    f = 2.0 / (1.0 + y2)
    c = -4.0 / (1.0 + y2) ** 2

    # tangential projections of the ambient basis, rotated into the chart
    #   tb[p, i, :] = H (e_i - w_i w)
    tb = np.broadcast_to(np.eye(5), (w.shape[0], 5, 5)).copy()
    tb -= w[:, :, None] * w[:, None, :]
    tb = tb @ _HOUSE.T
    # chart differentials dy_mu(tb_i) = (tb_c + y tb_5)/den
    tc = tb[:, :, :4].copy()
    tc[:, :, 3] *= sgn
    dy = (tc + y[:, None, :] * tb[:, :, 4:5]) / den[:, None, None]

    # A_mu(y) = f eta[a, mu, nu] y_nu; pull back through dy
    a_chart = f[:, None, None] * np.einsum("amn,pn->pma", _ETA, y)
    a_amb = np.einsum("pim,pma->pia", dy, a_chart)

    f_amb = np.empty((w.shape[0], 10, 3))
    main = z[:, 4] <= 0.0
    if np.any(main):
        f_amb[main] = _eta_pairs(c[main], dy[main])
    alt = ~main
    if np.any(alt):
        # inverted chart y' = conj(y)/|y|^2, stable where den -> 0;
        # slot signs (-1,-1,-1,sgn) fold in the quaternion conjugate
        den2 = 1.0 + z[alt, 4]
        u = z[alt, :4] / den2[:, None]
        sflip = np.array([-1.0, -1.0, -1.0, sgn])
        yp = u * sflip
        dyp = (tb[alt, :, :4] - u[:, None, :] * tb[alt, :, 4:5])
        dyp = dyp * sflip / den2[:, None, None]
        c2 = -4.0 / (1.0 + np.sum(yp * yp, axis=1)) ** 2
        q = np.stack([yp[:, 3], yp[:, 0], yp[:, 1], yp[:, 2]], axis=1)
        qn = np.linalg.norm(q, axis=1, keepdims=True)
        q = np.where(qn < 1e-12, su2.geye(q.shape[:1]), q / np.where(
            qn < 1e-12, 1.0, qn))
        f_amb[alt] = su2.adjoint_action(q[:, None, :], _eta_pairs(c2, dyp))
    return a_amb, f_amb


def cone_profile(rho, core=0.0):
    """1/rho, optionally mollified to rho/(rho^2 + core^2)."""
    if core > 0.0:
        return rho / (rho * rho + core * core)
    safe = np.where(rho < 1e-14, 1e-14, rho)
    return 1.0 / safe


def cone_curvature_at(points, center=None, degree=1):
    """Ambient curvature pair components of the exact instanton cone.

    Radial pullback scales the unit-sphere samples by 1/rho^2, so the
    field is singular at the center (those rows are zeroed); every
    sphere around the center carries the same degree.
    Returns (P, 10, 3). Evaluation is blocked so the sphere-sample
    temporaries stay small on multi-million-site lattices.
    """
    c = np.zeros(5) if center is None else np.asarray(center, dtype=float)
    x = np.atleast_2d(np.asarray(points, dtype=float)) - c
    out = np.empty((x.shape[0], 10, 3))
    block = 1 << 18
    for lo in range(0, x.shape[0], block):
        xb = x[lo:lo + block]
        rho = np.linalg.norm(xb, axis=1)
        safe = np.where(rho < 1e-14, 1.0, rho)
        _, f_sphere = instanton_sphere(xb / safe[:, None], degree=degree)
        ob = f_sphere / (safe * safe)[:, None, None]
        ob[rho < 1e-14] = 0.0
        out[lo:lo + block] = ob
    return out


def cone_connection(spec, boundary_ambient, center=None, core=0.0):
    """Radial cone over a unit-sphere tangential 1-form.

    boundary_ambient(directions) -> (P, 5, 3) tangential values phi on
    the unit sphere; the cone is A(x) = profile(rho) phi(x/rho), the
    pullback under radial projection (exactly 1/rho when core = 0).
    """
    c = np.zeros(5) if center is None else np.asarray(center, dtype=float)
    x = spec.positions - c
    rho = np.linalg.norm(x, axis=1)
    safe = np.where(rho < 1e-14, 1.0, rho)
    dirs = x / safe[:, None]
    vals = boundary_ambient(dirs) * cone_profile(rho, core)[:, None, None]
    vals[rho < 1e-14] = 0.0
    out = zero_form(spec, 1)
    out.values[:] = vals
    return out
