"""su(2) and SU(2) arithmetic on trailing-axis numpy arrays.

Algebra elements are real arrays of shape ``(..., 3)``: coefficients in
the antihermitian basis tau_k = -(i/2) sigma_k, for which

    [tau_a, tau_b] = eps_abc tau_c        (bracket = cross product)
    <X, Y> = -2 tr(XY) = sum_k x_k y_k    (Killing-normalized product)

Group elements are unit quaternions of shape ``(..., 4)`` under the
identification U(q) = q0 + i (q1 s1 + q2 s2 + q3 s3) with s_k the Pauli
matrices. Quaternion multiplication below is defined so that
``gmul(p, q)`` corresponds to the matrix product U(p) U(q); with this
convention exp(t tau_k) = (cos t/2, -e_k sin t/2).

All functions broadcast over leading axes.
"""

import numpy as np

from .errors import AntipodalPoint, DegenerateAverage

# renormalization tolerance for unit quaternions
GROUP_NORM_TOL = 1e-12

_ANTIPODE_EPS = 1e-9


def bracket(x, y):
    """Lie bracket [X, Y] in the tau basis (exact)."""
    return np.cross(x, y)


def inner(x, y):
    """Ad-invariant inner product <X, Y> = -2 tr(XY)."""
    return np.einsum("...k,...k->...", x, y)


def norm(x):
    """Pointwise algebra norm |X| = sqrt(<X, X>)."""
    return np.sqrt(inner(x, x))


def geye(shape=()):
    """Identity group element(s) with the given leading shape."""
    q = np.zeros(tuple(shape) + (4,))
    q[..., 0] = 1.0
    return q


def gmul(p, q):
    """Group product; matches the 2x2 matrix product U(p) U(q)."""
    p0, pv = p[..., :1], p[..., 1:]
    q0, qv = q[..., :1], q[..., 1:]
    out = np.empty(np.broadcast_shapes(p.shape, q.shape))
    out[..., :1] = p0 * q0 - np.sum(pv * qv, axis=-1, keepdims=True)
    out[..., 1:] = p0 * qv + q0 * pv - np.cross(pv, qv)
    return out


def ginv(q):
    """Group inverse (quaternion conjugate for unit quaternions)."""
    out = q.copy()
    out[..., 1:] *= -1.0
    return out


def project_to_group(q):
    """Renormalize to a unit quaternion.

    Raises
    ------
    DegenerateAverage
        If the norm is at or below 1e-9 (no well-defined direction).
    """
    n = np.linalg.norm(q, axis=-1, keepdims=True)
    if np.any(n <= 1e-9):
        raise DegenerateAverage("quaternion norm below 1e-9")
    return q / n


def exp_map(x):
    """Exponential su(2) -> SU(2); exact for all inputs."""
    x = np.asarray(x, dtype=float)
    theta = np.linalg.norm(x, axis=-1, keepdims=True)
    half = 0.5 * theta
    # sin(theta/2)/theta with series fallback near zero
    small = theta < 1e-6
    safe = np.where(small, 1.0, theta)
    s = np.where(small, 0.5 - theta * theta / 48.0, np.sin(half) / safe)
    q = np.empty(x.shape[:-1] + (4,))
    q[..., :1] = np.cos(half)
    q[..., 1:] = -x * s
    return q


def log_map(q):
    """Logarithm SU(2) -> su(2), principal branch |X| < 2 pi.

    Raises
    ------
    AntipodalPoint
        Within 1e-9 of -identity, where the log is ill defined.
    """
    q = np.asarray(q, dtype=float)
    q0 = q[..., 0]
    v = q[..., 1:]
    s = np.linalg.norm(v, axis=-1)
    if np.any((q0 <= -1.0 + _ANTIPODE_EPS) & (s <= _ANTIPODE_EPS)):
        raise AntipodalPoint("log at the antipode of the identity")
    small = s < 1e-8
    safe_s = np.where(small, 1.0, s)
    # guard q0 for the series branch only; the atan2 branch is exact
    safe_q0 = np.where(np.abs(q0) < 1e-30, 1e-30, q0)
    factor = np.where(
        small,
        2.0 / safe_q0 * (1.0 - (s * s) / (3.0 * safe_q0 * safe_q0)),
        2.0 * np.arctan2(s, q0) / safe_s,
    )
    return -factor[..., None] * v


def adjoint_action(g, x):
    """Coefficients of g^-1 X g (the gauge-transformation adjoint)."""
    xq = np.zeros(np.broadcast_shapes(g.shape[:-1], x.shape[:-1]) + (4,))
    xq[..., 1:] = -0.5 * np.broadcast_to(x, xq[..., 1:].shape)
    out = gmul(gmul(ginv(g), xq), g)
    return -2.0 * out[..., 1:]
