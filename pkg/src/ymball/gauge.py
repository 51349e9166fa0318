"""Gauge construction procedures on the ball and on sphere slices.

Four families live here: the gauge-orbit distance between two slices
(multi-start descent, reported as an upper bound), Coulomb-type gauges
obtained by minimizing the transformed field's L2 norm (on the ball,
and on the sphere after projecting out the five coordinate 1-forms),
the radial gauge that transports the identity outward along rays, and
the gluing of per-annulus gauges into one field.

All descent routines work in exponential charts: a round minimizes
eps -> objective(g exp(eps)) with L-BFGS over the per-site algebra
coefficients, then re-centers the chart at the improved gauge and
repeats. Gradients come from the adjoint of the slice or lattice
derivative; where objectives are weighted quadratures the chain rule
converts the weighted-metric gradient into the plain coefficient
gradient the optimizer expects. Chart gradients are exact at the
chart origin and first-order accurate away from it, which re-centering
absorbs; they are never used as a stopping certificate. The stopping
residuals are recomputed independently from the returned transformed
field.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from . import su2
from .errors import (
    AnnulusOutOfDomain,
    DegenerateAverage,
    GeometryMismatch,
    TransitionTooLarge,
)
from .lattice import GaugeField, apply_gauge, interpolate
from .sphere import SphereSlice, slice_apply_gauge, slice_dstar


@dataclass
class GaugeFixResult:
    """Outcome of a gauge-fixing solve."""

    g: object                 # GaugeField or per-node quaternions
    a_fixed: object           # transformed connection or slice
    residual: float           # independently recomputed stopping norm
    iterations: int
    converged: bool


@dataclass
class OrbitDistanceReport:
    """Upper bound on the L2 distance between two gauge orbits."""

    value: float
    g_best: np.ndarray        # (n_nodes, 4) transporting the second slice
    restarts: int
    per_restart: list = field(default_factory=list)


# ---- orbit distance --------------------------------------------------------

def _slice_norm2(grid, values):
    return float(np.sum(values**2 * grid.weights[:, None, None]))


def _slice_grad_from_pairing(grid, factor, moved_values):
    """Plain per-node gradient of a slice quadratic via exact adjoints.

    For an objective whose first variation under g -> g exp(t eps) is
    2 sum_a <factor_a, dtheta(eps, a)/hfac_a + [moved_a, eps]>_w, this
    returns that variation's exact representer in the plain per-node
    pairing (the jacobian an optimizer expects). The stencil transpose
    is used instead of the analytic codifferential: the two differ by
    quadrature error, which descent cannot tolerate.
    """
    w = grid.weights
    grad = np.zeros((grid.n_nodes, 3))
    for a in range(4):
        grad += grid.dtheta_transpose(
            factor[:, a] * (w / grid.hfac[:, a])[:, None], a)
        grad += w[:, None] * np.cross(factor[:, a], moved_values[:, a])
    return 2.0 * grad


def _slice_misfit_grad(slc_ref, slc2, gvals):
    """Misfit against a reference slice, with its exact gradient."""
    moved = slice_apply_gauge(slc2, gvals)
    diff = moved.values - slc_ref.values
    obj = _slice_norm2(slc_ref.grid, diff)
    return obj, _slice_grad_from_pairing(slc_ref.grid, diff, moved.values)


def _descend_slice(slc_ref, slc2, g0, max_rounds, stop_obj, inner=80):
    """Chart descent of ||ref - (slc2)^g||^2 over g, from g0.

    Each round minimizes in the exponential chart around the current
    iterate (the chart gradient is exact at the origin and first-order
    accurate away from it) and then re-centers the chart.
    """
    n = slc_ref.grid.n_nodes
    g = g0.copy()
    obj, _ = _slice_misfit_grad(slc_ref, slc2, g)
    it = 0
    for _ in range(max_rounds):
        if obj <= stop_obj:
            break

        def fun(eps):
            gv = su2.gmul(g, su2.exp_map(eps.reshape(n, 3)))
            o, gr = _slice_misfit_grad(slc_ref, slc2, gv)
            return o, gr.ravel()

        res = minimize(fun, np.zeros(3 * n), jac=True, method="L-BFGS-B",
                       options={"maxiter": inner, "ftol": 1e-18,
                                "gtol": 1e-14})
        g = su2.project_to_group(
            su2.gmul(g, su2.exp_map(res.x.reshape(n, 3))))
        it += int(res.nit)
        if res.fun > 0.999 * obj:
            obj = min(obj, float(res.fun))
            break
        obj = float(res.fun)
    return g, obj, it


def _seeded_smooth_gauge(grid, rng, amplitude):
    """Random smooth gauge on the sphere from affine coordinate modes."""
    coef = rng.normal(size=(6, 3)) * amplitude
    xi = coef[0] + grid.embed @ coef[1:]
    return su2.exp_map(xi)


def orbit_distance(a, a2, restarts=4, seed=0):
    """Best found L2 distance between the gauge orbits of two slices.

    Multi-start descent over the gauge acting on the second slice; the
    identity start makes ||a - a2|| an always-available candidate, so
    the report never exceeds the plain distance. The result is an
    upper bound of the true infimum. The argument pair is ordered
    canonically (by value bytes) before solving, which makes the
    report exactly symmetric; the returned gauge transports the second
    argument onto the first.
    """
    a.check_compatible(a2)
    swapped = a.values.tobytes() > a2.values.tobytes()
    ref, mov = (a2, a) if swapped else (a, a2)
    grid = ref.grid
    rng = np.random.default_rng(seed)
    scale2 = max(_slice_norm2(grid, ref.values),
                 _slice_norm2(grid, mov.values), 1e-12)
    stop_obj = 1e-16 * scale2
    best_obj, best_g, per = np.inf, None, []
    for r in range(max(1, int(restarts))):
        if r == 0:
            g0 = su2.geye((grid.n_nodes,))
        else:
            g0 = _seeded_smooth_gauge(grid, rng, amplitude=0.8)
        g, obj, _ = _descend_slice(ref, mov, g0, max_rounds=8,
                                   stop_obj=stop_obj)
        per.append(float(np.sqrt(max(obj, 0.0))))
        if obj < best_obj:
            best_obj, best_g = obj, g
        if best_obj <= stop_obj:
            break
    if swapped:
        best_g = su2.ginv(best_g)
    return OrbitDistanceReport(value=float(np.sqrt(max(best_obj, 0.0))),
                               g_best=best_g, restarts=len(per),
                               per_restart=per)


# ---- Coulomb gauge on the ball ---------------------------------------------

def _ball_div(spec, values):
    """Adjoint-form divergence sum_k deriv_transpose(v_k, k), (S, 3)."""
    acc = np.zeros((spec.n_sites, 3))
    for k in range(5):
        acc += spec.deriv_transpose(values[:, k], k)
    return acc


def coulomb_gauge_ball(a, tol=1e-3, max_iter=400):
    """Minimize the transformed field's L2 norm over gauges on the ball.

    Stationarity of ||A^g||^2 is the discrete divergence-free
    condition: the variation against g exp(eps) gives exactly
    sum_k deriv_transpose(A^g_k, k) = 0, because the bracket term
    <A^g,[A^g, eps]> vanishes pointwise. The vanishing normal trace at
    the shell is the natural boundary behavior of this variational
    form (deriv_transpose is the adjoint under the plain site sum on
    the clipped domain), not an imposed constraint. Stops once the
    h^5-weighted L2 norm of the divergence drops below tol; otherwise
    returns the best iterate with converged = False.
    """
    spec = a.spec
    vol_w = spec.h**5
    n = spec.n_sites

    def divergence(values):
        return _ball_div(spec, values)

    def res_norm(values):
        d = divergence(values)
        return float(np.sqrt(vol_w * np.sum(d**2)))

    gv = su2.geye((n,))
    best = (gv.copy(), res_norm(apply_gauge(a, GaugeField(spec, gv)).values))
    it = 0
    rounds = max(1, int(np.ceil(max_iter / 60)))
    for _ in range(rounds):
        if best[1] <= tol:
            break

        def fun(eps):
            trial = su2.gmul(gv, su2.exp_map(eps.reshape(n, 3)))
            moved = apply_gauge(a, GaugeField(spec, trial)).values
            obj = vol_w * float(np.sum(moved**2))
            jac = 2.0 * vol_w * divergence(moved)
            return obj, jac.ravel()

        out = minimize(fun, np.zeros(3 * n), jac=True, method="L-BFGS-B",
                       options={"maxiter": min(60, max_iter), "ftol": 1e-18,
                                "gtol": 1e-16})
        gv = su2.project_to_group(
            su2.gmul(gv, su2.exp_map(out.x.reshape(n, 3))))
        it += int(out.nit)
        r = res_norm(apply_gauge(a, GaugeField(spec, gv)).values)
        if r < best[1]:
            best = (gv.copy(), r)
        if out.nit == 0 or it >= max_iter:
            break
    g = GaugeField(spec, best[0])
    a_fixed = apply_gauge(a, g)
    res = res_norm(a_fixed.values)
    return GaugeFixResult(g=g, a_fixed=a_fixed, residual=res,
                          iterations=it, converged=bool(res <= tol))


# ---- projected Coulomb gauge on the sphere ---------------------------------

def coordinate_form_frame(grid):
    """Frame components of the five pulled-back coordinate 1-forms.

    Returns (5, n_nodes, 4): entry k is the tangential part of dx_k.
    """
    return np.transpose(grid.frame, (2, 0, 1))


def project_off_coordinate_forms(grid, values):
    """L2-orthogonal projection removing span{i* dx_k}, per coefficient.

    The Gram matrix of the five forms is assembled from the quadrature
    weights and solved densely; the span is 5-dimensional globally
    even though the forms are pointwise linearly dependent.
    """
    forms = coordinate_form_frame(grid)
    w = grid.weights
    gram = np.einsum("kna,n,lna->kl", forms, w, forms)
    rhs = np.einsum("kna,n,nac->kc", forms, w, values)
    lam = np.linalg.solve(gram, rhs)
    return values - np.einsum("kc,kna->nac", lam, forms)


def _constraint_basis(grid):
    """Codifferentials of the coordinate forms and their Gram matrix.

    These span the gauge-log directions frozen by the slice constraint
    <g^-1 dg, i* dx_k> = 0; returns (qk: (5, n_nodes), gram: (5, 5)).
    """
    forms = coordinate_form_frame(grid)
    qk = np.stack([
        slice_dstar(SphereSlice(np.zeros(5), 1.0, grid,
                                np.repeat(forms[k][:, :, None], 3, axis=2)))
        [:, 0] for k in range(5)], axis=0)
    gram = np.einsum("kn,n,ln->kl", qk, grid.weights, qk)
    return qk, gram


def project_log_tangent(grid, xi):
    """Remove the constrained directions from an infinitesimal gauge.

    Projects a gauge log (n_nodes, 3) off the span of the coordinate
    forms' codifferentials in the quadrature metric; what remains is
    the part of the gauge motion the constrained sphere descent can
    see and undo.
    """
    qk, gram = _constraint_basis(grid)
    rhs = np.einsum("kn,n,nc->kc", qk, grid.weights, xi)
    lam = np.linalg.solve(gram, rhs)
    return xi - np.einsum("kc,kn->nc", lam, qk)


def projected_coulomb_sphere(slc, tol=1e-3, max_iter=400):
    """Coulomb-type gauge on a unit-scale slice, modulo coordinate forms.

    Minimizes ||pi(A^g)||^2 where pi projects out span{i* dx_k}; the
    descent direction is kept tangent to the constraints
    <g^-1 dg, i* dx_k> = 0 by projecting it off the span of the
    codifferentials of the coordinate forms. Stops when the
    codifferential of pi(A^g) has weighted L2 norm below tol.
    """
    grid = slc.grid
    w = grid.weights
    qk, gram_q = _constraint_basis(grid)

    def tangent(eps):
        rhs = np.einsum("kn,n,nc->kc", qk, w, eps)
        lam = np.linalg.solve(gram_q, rhs)
        return eps - np.einsum("kc,kn->nc", lam, qk)

    def tangent_transpose(v):
        rhs = np.einsum("kn,nc->kc", qk, v)
        lam = np.linalg.solve(gram_q, rhs)
        return v - w[:, None] * np.einsum("kc,kn->nc", lam, qk)

    def split(gvals):
        moved = slice_apply_gauge(slc, gvals)
        proj = moved.copy()
        proj.values = project_off_coordinate_forms(grid, moved.values)
        return moved, proj

    def objective(proj):
        return _slice_norm2(grid, proj.values)

    def residual_of(proj):
        return float(np.sqrt(np.sum(slice_dstar(proj)**2 * w[:, None])))

    nn = grid.n_nodes
    g = su2.geye((nn,))
    best = (g.copy(), residual_of(split(g)[1]))
    it = 0
    rounds = max(1, int(np.ceil(max_iter / 60)))
    for _ in range(rounds):
        if best[1] <= tol:
            break

        def fun(x):
            eps = tangent(x.reshape(nn, 3))
            trial = su2.gmul(g, su2.exp_map(eps))
            moved, proj = split(trial)
            obj = objective(proj)
            gr = _slice_grad_from_pairing(grid, proj.values, moved.values)
            return obj, tangent_transpose(gr).ravel()

        out = minimize(fun, np.zeros(3 * nn), jac=True, method="L-BFGS-B",
                       options={"maxiter": min(60, max_iter), "ftol": 1e-18,
                                "gtol": 1e-16})
        g = su2.project_to_group(
            su2.gmul(g, su2.exp_map(tangent(out.x.reshape(nn, 3)))))
        it += int(out.nit)
        r = residual_of(split(g)[1])
        if r < best[1]:
            best = (g.copy(), r)
        if out.nit == 0 or it >= max_iter:
            break
    g = best[0]
    moved, proj = split(g)
    res = residual_of(proj)
    return GaugeFixResult(g=g, a_fixed=moved, residual=res,
                          iterations=it, converged=bool(res <= tol))


# ---- radial gauge ----------------------------------------------------------

def _radial_coefficient_field(a, center):
    """Per-site radial component of the connection, (S, 3)."""
    spec = a.spec
    x = spec.positions - center
    rho = np.linalg.norm(x, axis=1)
    safe = np.where(rho < 1e-14, 1.0, rho)
    omega = x / safe[:, None]
    out = np.einsum("sk,skc->sc", omega, a.values)
    out[rho < 1e-14] = 0.0
    return out


def _ode_rhs(coef, g):
    """Quaternion derivative of dg/dt = -A_rho g for coefficients coef.

    An algebra element with coefficient vector x is the pure quaternion
    (0, -x/2), so -A_rho with coefficients -coef is (0, +coef/2).
    """
    q = np.concatenate([np.zeros(coef.shape[:1] + (1,)), 0.5 * coef],
                       axis=1)
    return su2.gmul(q, g)


def _ray_breakpoints(spec, center, dirs, t_start, t_target, h_step):
    """Sorted per-ray substep endpoints, cell-crossing aligned.

    The multilinear interpolant is a smooth polynomial inside every
    lattice cell but has derivative kinks on cell faces; a step that
    straddles a face costs RK4 two orders. Every t where the ray
    crosses a face therefore becomes a substep endpoint, along with a
    uniform progression capping step length at h_step and the target
    radius itself. t_start and h_step may vary per ray. Entries past
    the target are +inf; rows come back ascending.
    """
    p = dirs.shape[0]
    t_start = np.broadcast_to(np.asarray(t_start, dtype=float), (p,))
    h_step = np.broadcast_to(np.asarray(h_step, dtype=float), (p,))
    span = t_target - t_start
    act = span > 1e-14
    lim = np.where(act, t_target, -np.inf)
    cols = []
    n_uni = int(np.ceil(np.max(span / h_step, initial=0.0)))
    if n_uni > 0:
        uni = (t_start[:, None]
               + h_step[:, None] * np.arange(1, n_uni + 1)[None, :])
        uni[uni >= lim[:, None] - 1e-12] = np.inf
        cols.append(uni)
    for k in range(5):
        dk = dirs[:, k]
        adk = np.abs(dk)
        safe = np.where(adk > 1e-14, adk, 1.0)
        sk = np.where(adk > 1e-14, spec.h / safe, np.inf)
        y = (center[k] + t_start * dk + spec.domain_radius) / spec.h
        frac = np.where(dk > 0, np.ceil(y) - y, y - np.floor(y))
        frac = np.where(frac < 1e-12, 1.0, frac)
        t1 = t_start + frac * sk
        with np.errstate(invalid="ignore"):
            cnt = np.floor((lim - t1) / sk) + 1
        cnt = np.where(np.isfinite(cnt) & (cnt > 0), cnt, 0).astype(np.int64)
        lk = int(cnt.max(initial=0))
        if lk == 0:
            continue
        arr = t1[:, None] + np.arange(lk)[None, :] * sk[:, None]
        arr[arr >= lim[:, None] - 1e-12] = np.inf
        cols.append(arr)
    end = np.where(act, t_target, np.inf)
    cols.append(end[:, None])
    t = np.concatenate(cols, axis=1)
    t.sort(axis=1)
    return t


def _integrate_rays(a, center, radial, dirs, t_start, t_target, h_step,
                    g_start=None):
    """RK4 transport along rays from t_start out to t_target.

    Starts from g_start (identity when omitted) at radius t_start,
    which may vary per ray. radial is the per-site radial coefficient
    field used through the multilinear interpolant; substeps are
    aligned to interpolation cell crossings (see _ray_breakpoints) so
    each RK4 step sees a smooth integrand and the transport stays
    within RK4 accuracy of its own sampled field. Rays with
    t_target <= t_start return g_start. Rays are processed in blocks
    to bound the breakpoint table size.
    """
    spec = a.spec
    p = dirs.shape[0]
    t_start = np.broadcast_to(np.asarray(t_start, dtype=float), (p,))
    h_step = np.broadcast_to(np.asarray(h_step, dtype=float), (p,))
    g = su2.geye((p,)) if g_start is None else g_start.copy()

    def coef_at(t_vals, pts_dirs):
        pts = center + pts_dirs * t_vals[:, None]
        return interpolate(spec, radial, pts)

    block = 1 << 16
    for lo in range(0, p, block):
        sl = slice(lo, min(lo + block, p))
        d_blk = dirs[sl]
        tt_blk = np.asarray(t_target[sl], dtype=float)
        t_tab = _ray_breakpoints(spec, center, d_blk, t_start[sl], tt_blk,
                                 h_step[sl])
        g_blk = g[sl].copy()
        prev = t_start[sl].copy()
        for j in range(t_tab.shape[1]):
            tj = t_tab[:, j]
            rows = np.flatnonzero(np.isfinite(tj))
            if rows.size == 0:
                break
            dt_r = tj[rows] - prev[rows]
            keep = dt_r > 1e-15
            rows = rows[keep]
            if rows.size == 0:
                continue
            dt_r = dt_r[keep]
            t0 = prev[rows]
            dr = d_blk[rows]
            c0 = coef_at(t0, dr)
            cm = coef_at(t0 + 0.5 * dt_r, dr)
            c1 = coef_at(t0 + dt_r, dr)
            gj = g_blk[rows]
            k1 = _ode_rhs(c0, gj)
            k2 = _ode_rhs(cm, gj + 0.5 * dt_r[:, None] * k1)
            k3 = _ode_rhs(cm, gj + 0.5 * dt_r[:, None] * k2)
            k4 = _ode_rhs(c1, gj + dt_r[:, None] * k3)
            gj = gj + (dt_r[:, None] / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            g_blk[rows] = su2.project_to_group(gj)
            prev[rows] = tj[rows]
        g[sl] = g_blk
    return g


def radial_gauge(a, center, t_in, t_out):
    """Gauge killing the radial component on an annulus, id at t_in.

    Solves dg/drho = -A_rho g outward along the ray of every annulus
    site with RK4 substeps capped at half the lattice spacing (the
    half makes single-ray transport match dense quadrature of its own
    interpolated coefficient to well under 1e-8); sites outside the
    annulus keep the identity.
    """
    spec = a.spec
    center = np.asarray(center, dtype=float)
    if t_in < 3.0 * spec.h or t_in >= t_out:
        raise AnnulusOutOfDomain(
            f"need 3h <= t_in < t_out, got ({t_in:.4g}, {t_out:.4g})")
    if np.linalg.norm(center) + t_out > spec.domain_radius + 1e-12:
        raise AnnulusOutOfDomain("annulus leaves the domain ball")
    x = spec.positions - center
    rho = np.linalg.norm(x, axis=1)
    sel = np.flatnonzero((rho > t_in + 1e-14) & (rho <= t_out + 1e-14))
    gv = su2.geye((spec.n_sites,))
    if sel.size:
        radial = _radial_coefficient_field(a, center)
        dirs = x[sel] / rho[sel][:, None]
        gv[sel] = _integrate_rays(a, center, radial, dirs, t_in,
                                  rho[sel], 0.5 * spec.h)
    return GaugeField(spec, gv)


def radial_residual(a, g, center, t_in, t_out, probe=1e-3):
    """Max-norm radial component of A^g measured along rays.

    For each annulus site the gauge is probed at radii rho +- delta
    and rho +- delta/2 and the radial log-derivative of the gauge is
    differenced against the conjugated radial component of A. All
    four probe gauges continue a single shared transport to
    rho - delta, so the base path's integration error cancels in the
    differences instead of being amplified by 1/delta; the short
    continuation legs use substeps of delta/4 and are exact to
    rounding. The interpolated field's radial derivative kinks at the
    site itself (sites sit on cell faces), which leaves a term linear
    in delta in the centered difference; Richardson extrapolation
    over delta and delta/2 removes it. Probe windows shrink
    symmetrically at the annulus ends.
    """
    spec = a.spec
    center = np.asarray(center, dtype=float)
    x = spec.positions - center
    rho = np.linalg.norm(x, axis=1)
    sel = np.flatnonzero((rho > t_in + 1e-14) & (rho <= t_out + 1e-14))
    if sel.size == 0:
        return 0.0
    radial = _radial_coefficient_field(a, center)
    dirs = x[sel] / rho[sel][:, None]
    rs = rho[sel]
    delta = np.minimum(probe * spec.h,
                       np.minimum(t_out - rs, rs - t_in))
    delta = np.maximum(delta, 1e-5 * probe * spec.h)
    gi = su2.ginv(g.values[sel])
    fine = 0.25 * delta
    g_lo1 = _integrate_rays(a, center, radial, dirs, t_in, rs - delta,
                            0.5 * spec.h)
    g_lo2 = _integrate_rays(a, center, radial, dirs, rs - delta,
                            rs - 0.5 * delta, fine, g_start=g_lo1)
    g_hi2 = _integrate_rays(a, center, radial, dirs, rs - 0.5 * delta,
                            rs + 0.5 * delta, fine, g_start=g_lo2)
    g_hi1 = _integrate_rays(a, center, radial, dirs, rs + 0.5 * delta,
                            rs + delta, fine, g_start=g_hi2)

    def dlog_of(g_hi, g_lo, dl):
        return (su2.log_map(su2.gmul(gi, g_hi))
                - su2.log_map(su2.gmul(gi, g_lo))) / (2.0 * dl)[:, None]

    dlog = (2.0 * dlog_of(g_hi2, g_lo2, 0.5 * delta)
            - dlog_of(g_hi1, g_lo1, delta))
    conj = su2.adjoint_action(g.values[sel], radial[sel])
    return float(np.max(np.abs(conj + dlog)))


# ---- dyadic annulus gluing --------------------------------------------------

def _quaternion_mean(q):
    """Sign-aligned normalized mean, DegenerateAverage if it collapses."""
    ref = q[0]
    sign = np.where((q @ ref)[:, None] < 0.0, -1.0, 1.0)
    mean = (q * sign).mean(axis=0)
    nrm = np.linalg.norm(mean)
    if nrm < 0.5:
        raise DegenerateAverage("transition gauges too spread to average")
    return mean / nrm


_GLUE_THRESHOLD = 0.5     # quaternion chordal smallness for transitions


def _smoothstep(u):
    u = np.clip(u, 0.0, 1.0)
    return u * u * (3.0 - 2.0 * u)


def dyadic_glue(fragments, annuli, center=None):
    """Fuse per-annulus gauges into one field continuous across overlaps.

    fragments[k] is a GaugeField meaningful on annuli[k] = (lo, hi);
    consecutive annuli must overlap by at least 4h (two stencil
    widths). In each overlap the transition w = (G_k)^-1 g_{k+1} is
    compared with its quaternion mean; if every site stays within the
    chordal smallness threshold the deviation is ramped in with a
    smoothstep of the radius (log-linear interpolation), and the mean
    itself propagates as a constant right factor. Otherwise
    TransitionTooLarge. Sites outside every annulus keep the identity.
    """
    if len(fragments) != len(annuli) or not fragments:
        raise GeometryMismatch("one annulus per fragment required")
    spec = fragments[0].spec
    for f in fragments[1:]:
        if f.spec is not spec:
            raise GeometryMismatch("fragments live on different lattices")
    center = np.zeros(5) if center is None else np.asarray(center,
                                                           dtype=float)
    lo = np.array([ab[0] for ab in annuli], dtype=float)
    hi = np.array([ab[1] for ab in annuli], dtype=float)
    if np.any(lo >= hi) or np.any(np.diff(lo) <= 0):
        raise GeometryMismatch("annuli must be ascending intervals")
    if np.any(lo[1:] > hi[:-1] - 4.0 * spec.h):
        raise GeometryMismatch("consecutive annuli must overlap by >= 4h")

    rho = np.linalg.norm(spec.positions - center, axis=1)
    out = su2.geye((spec.n_sites,))
    const = np.array([1.0, 0.0, 0.0, 0.0])
    for k in range(len(fragments)):
        body_lo = lo[k] if k == 0 else hi[k - 1]
        body_hi = hi[k] if k == len(fragments) - 1 else lo[k + 1]
        inside = (rho >= body_lo) & (rho <= body_hi) if k == 0 else \
            (rho > body_lo) & (rho <= body_hi)
        out[inside] = su2.gmul(fragments[k].values[inside], const)
        if k == len(fragments) - 1:
            break
        o_lo, o_hi = lo[k + 1], hi[k]
        ov = (rho > o_lo) & (rho <= o_hi)
        if not np.any(ov):
            raise GeometryMismatch("no lattice sites inside an overlap")
        glued_here = su2.gmul(fragments[k].values[ov], const)
        w = su2.gmul(su2.ginv(glued_here), fragments[k + 1].values[ov])
        w_mean = _quaternion_mean(w)
        w_next = su2.gmul(w, su2.ginv(w_mean))
        dev = np.linalg.norm(
            w_next - np.array([1.0, 0.0, 0.0, 0.0]), axis=1)
        if float(dev.max(initial=0.0)) > _GLUE_THRESHOLD:
            raise TransitionTooLarge(
                f"max transition deviation {dev.max():.3g} exceeds "
                f"{_GLUE_THRESHOLD}")
        psi = _smoothstep((rho[ov] - o_lo) / (o_hi - o_lo))
        ramp = su2.exp_map(psi[:, None] * su2.log_map(w_next))
        out[ov] = su2.gmul(glued_here, ramp)
        # the mean is the inner-side glued value times the fragment
        # inverse, so absorbing its inverse makes the next body agree
        # with the overlap's outer edge exactly
        const = su2.ginv(w_mean)
    return GaugeField(spec, su2.project_to_group(out))
