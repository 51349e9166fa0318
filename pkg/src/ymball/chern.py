"""Second-Chern densities, shell degrees, and point-defect bookkeeping.

Curvature values are su(2) coefficient triples, so the invariant trace
bilinear reduces to a dot product of coefficients (<X, Y> = -2 tr(XY))
weighted by CHERN_TRACE_WEIGHT; see :mod:`.sphere` where the constant
lives next to the degree quadrature that calibrated it. The identity
component of the trace vanishes for every field by construction: the
coefficient storage has no slot for it.
"""

from dataclasses import dataclass
from itertools import product

import numpy as np

from .errors import (CurvatureMismatch, ShellOutOfDomain, SliceTooSmall,
                     TooCoarse, UnsupportedDegree)
from .lattice import PAIR_INDEX, curvature
from .sphere import (CHERN_TRACE_WEIGHT, default_slice_m,
                     degree_from_frame_curvature, frame_curvature,
                     sphere_grid)
from .lattice import interpolate
from .su2 import bracket

__all__ = [
    "CHERN_TRACE_WEIGHT", "TRIPLES", "TRIPLE_INDEX", "DefectSet",
    "chern2_density", "shell_degree", "total_boundary_degree",
    "detect_defects", "bianchi_residual",
]

TRIPLES = [(a, b, c) for a in range(5)
           for b in range(a + 1, 5) for c in range(b + 1, 5)]
TRIPLE_INDEX = {t: i for i, t in enumerate(TRIPLES)}


def chern2_density(f):
    """Components of the 4-form <F ^ F> per dual axis, shape (S, 5).

    Component k is the value on the remaining four axes in ascending
    order (m < n < r < s):

        2 w (<F_mn, F_rs> - <F_mr, F_ns> + <F_ms, F_nr>)

    with w = CHERN_TRACE_WEIGHT. No epsilon sign is applied; consumers
    that need the dual-vector density supply (-1)^k themselves.
    """
    if f.degree != 2:
        raise UnsupportedDegree("density needs a 2-form input")
    v = f.values
    out = np.empty((v.shape[0], 5))
    for k in range(5):
        m, n, r, s = (a for a in range(5) if a != k)
        pat = np.einsum("sc,sc->s", v[:, PAIR_INDEX[(m, n)]],
                        v[:, PAIR_INDEX[(r, s)]])
        pat -= np.einsum("sc,sc->s", v[:, PAIR_INDEX[(m, r)]],
                         v[:, PAIR_INDEX[(n, s)]])
        pat += np.einsum("sc,sc->s", v[:, PAIR_INDEX[(m, s)]],
                         v[:, PAIR_INDEX[(n, r)]])
        out[:, k] = 2.0 * CHERN_TRACE_WEIGHT * pat
    return out


def shell_degree(f, center, radius, m=None):
    """Degree carried by a sphere: (1/8 pi^2) of the pulled-back <F^F>.

    Ambient pair components are interpolated at angular nodes and
    contracted into the tangent frame; the shell measure contributes
    radius**4. For curvature restricted from a bundle smooth across the
    shell the value sits within O(h) of an integer.

    Raises SliceTooSmall below radius 4h and ShellOutOfDomain when the
    sphere pokes outside the domain ball.
    """
    spec = f.spec
    if f.degree != 2:
        raise UnsupportedDegree("shell degree needs a 2-form input")
    center = np.asarray(center, dtype=float)
    if radius < 4.0 * spec.h:
        raise SliceTooSmall(
            f"shell radius {radius:.4g} < 4h = {4 * spec.h:.4g}")
    if np.linalg.norm(center) + radius > spec.domain_radius + 1e-12:
        raise ShellOutOfDomain(
            f"sphere of radius {radius:.4g} at |c| = "
            f"{np.linalg.norm(center):.4g} leaves the domain")
    grid = sphere_grid(default_slice_m(radius, spec.h) if m is None else m)
    pts = center[None, :] + radius * grid.embed
    amb = interpolate(spec, f.values, pts)
    ff = frame_curvature(grid, amb)
    return radius**4 * degree_from_frame_curvature(grid, ff)


def total_boundary_degree(f, margin_cells=2.0, m=None):
    """Degree seen from just inside the domain boundary."""
    radius = f.spec.domain_radius - margin_cells * f.spec.h
    return shell_degree(f, np.zeros(5), radius, m=m)


@dataclass
class DefectSet:
    """Cells whose boundary spheres carry near-integer degree."""

    points: np.ndarray        # (k, 5) cell centers
    degrees: np.ndarray       # (k,) raw shell degrees
    rounded: np.ndarray       # (k,) nearest integers
    gaps: np.ndarray          # (k,) |degree - rounded|
    shell_radius: float
    cell_scale: float

    CSV_HEADER = ("x1", "x2", "x3", "x4", "x5",
                  "degree_raw", "degree_rounded", "gap", "shell_r")

    def __len__(self):
        return len(self.degrees)

    def total_rounded(self):
        return int(self.rounded.sum())

    def csv_rows(self):
        return [list(p) + [d, int(r), g, self.shell_radius]
                for p, d, r, g in zip(self.points, self.degrees,
                                      self.rounded, self.gaps)]


def detect_defects(f, cell_scale, gap_tol=0.2, offset=None, m=None):
    """Locate cells holding topological point charges.

    Tiles the domain with cubes of side cell_scale anchored at `offset`
    (default: a cell centered on the origin), evaluates the shell
    degree on the sphere of radius 0.6 cell_scale around each center
    (the sphere covers the cube: half diagonal 0.559 cell_scale), and
    reports centers with |degree| >= 1 - gap_tol that reproduce within
    gap_tol on the 1.5x sphere. Cells whose enlarged sphere leaves the
    domain are skipped, so charges within 0.9 cell_scale of the
    boundary are invisible; a defect close to a cell face can be
    reported by both neighbors. Output order is lexicographic in the
    cell index.
    """
    spec = f.spec
    if cell_scale < 8.0 * spec.h:
        raise TooCoarse(
            f"cell scale {cell_scale:.4g} below 8h = {8 * spec.h:.4g}")
    anchor = np.zeros(5) if offset is None else np.asarray(offset, float)
    big_r = spec.domain_radius
    r_shell = 0.6 * cell_scale
    axis_vals = []
    for k in range(5):
        lo = int(np.ceil((-big_r - anchor[k]) / cell_scale))
        hi = int(np.floor((big_r - anchor[k]) / cell_scale))
        axis_vals.append([anchor[k] + i * cell_scale
                          for i in range(lo, hi + 1)])
    pts, degs = [], []
    for c in product(*axis_vals):
        c = np.asarray(c)
        if np.linalg.norm(c) + 1.5 * r_shell > big_r:
            continue
        d = shell_degree(f, c, r_shell, m=m)
        if abs(d) < 1.0 - gap_tol:
            continue
        d2 = shell_degree(f, c, 1.5 * r_shell, m=m)
        if abs(d2 - d) < gap_tol:
            pts.append(c)
            degs.append(d)
    degs = np.asarray(degs, dtype=float)
    rounded = np.rint(degs).astype(int)
    return DefectSet(
        points=np.asarray(pts, dtype=float).reshape(len(degs), 5),
        degrees=degs, rounded=rounded, gaps=np.abs(degs - rounded),
        shell_radius=r_shell, cell_scale=cell_scale)


# volume of the unit 5-ball
_VOL5 = 8.0 * np.pi**2 / 15.0


def bianchi_residual(a, f, defects=None, buffer_cells=2.0):
    """L2 size of dF + [A ^ F] over interior sites.

    Checks that f really is the curvature of a (within 1e-10, else
    CurvatureMismatch). Sites within buffer_cells lattice cells of a
    detected defect point are excluded: the identity holds across
    charges only distributionally, and pointwise stencils blow up in a
    collar whose width is set by the stencil footprint (a few h), not
    by the detection tile size. With defects=None nothing is excluded.

    The quadrature weight is the represented volume divided by the
    site count rather than a bare h^5 per site. The interior site set
    resolves a larger fraction of the ball as h shrinks, and with h^5
    weights that domain growth leaks into refinement studies as an
    apparent loss of order; the mean-times-volume form measures the
    field alone. Excluded defect balls are assumed disjoint and inside
    the domain when discounting their volume.
    """
    if a.degree != 1 or f.degree != 2:
        raise UnsupportedDegree("needs a connection and its curvature")
    spec = a.spec
    dev = float(np.max(np.abs(curvature(a).values - f.values)))
    if dev > 1e-10:
        raise CurvatureMismatch(
            f"|F - F(A)|_max = {dev:.3e} exceeds 1e-10")
    mask = spec.interior_mask.copy()
    vol = _VOL5 * spec.domain_radius**5
    if defects is not None and len(defects) > 0:
        keep_out = buffer_cells * spec.h
        for p in defects.points:
            mask &= np.linalg.norm(spec.positions - p, axis=1) > keep_out
            vol -= _VOL5 * keep_out**5
    n_mask = int(mask.sum())
    if n_mask == 0 or vol <= 0.0:
        return 0.0
    total = 0.0
    fv, av = f.values, a.values
    for (p, q, r) in TRIPLES:
        t = spec.deriv(fv[:, PAIR_INDEX[(q, r)]], p)
        t -= spec.deriv(fv[:, PAIR_INDEX[(p, r)]], q)
        t += spec.deriv(fv[:, PAIR_INDEX[(p, q)]], r)
        t += bracket(av[:, p], fv[:, PAIR_INDEX[(q, r)]])
        t -= bracket(av[:, q], fv[:, PAIR_INDEX[(p, r)]])
        t += bracket(av[:, r], fv[:, PAIR_INDEX[(p, q)]])
        total += float(np.sum(t[mask] ** 2))
    return float(np.sqrt(vol * total / n_mask))
