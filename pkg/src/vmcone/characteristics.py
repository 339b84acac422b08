"""Characteristic ODEs of the advanced-time Vlasov transport operator.

Two equivalent forms are provided: the full 6D Cartesian system for a
phase point (x, p) in an external field, and the reduced radial system in
(r, w, q) with a radial electric field.  Both share the factor

    p0 = sqrt(1 + |p|^2) + p.k > 0,

which multiplies the advanced-time derivative.  Also implemented: the
closed-form phase-space divergence of the Cartesian right-hand side and a
finite-difference Jacobian determinant of the flow map, whose exact value
is (1 + phat.k at start) / (1 + phat.k at end).
"""

from __future__ import annotations

import numpy as np


class IntegrationError(RuntimeError):
    """Raised when a trajectory leaves the admissible domain (r <= r_floor)."""


def _norm(v):
    return float(np.sqrt(np.dot(v, v)))


def char_rhs_cartesian(v, x, p, field):
    """Right-hand side of xdot = p/p0, pdot = (gamma E + p x B)/p0.

    ``field(v, x) -> (E, B)``.  Undefined at the origin (k = x/|x|).
    """
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float)
    r = _norm(x)
    if r <= 0.0:
        raise ValueError("Cartesian characteristic RHS undefined at |x| = 0")
    k = x / r
    gamma = np.sqrt(1.0 + np.dot(p, p))
    p0 = gamma + np.dot(p, k)
    E, B = field(v, x)
    E = np.asarray(E, dtype=float)
    B = np.asarray(B, dtype=float)
    dx = p / p0
    dp = (gamma * E + np.cross(p, B)) / p0
    return dx, dp


def char_rhs_reduced(v, r, w, q, E_r):
    """Reduced radial system: dr/dv = w/p0, dw/dv = (gamma E_r + q/r^3)/p0.

    q is a constant of the motion and never integrated.  Vectorized over
    particle arrays; E_r is the radial field value(s) at r.
    """
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0.0):
        raise ValueError("reduced characteristic RHS requires r > 0")
    w = np.asarray(w, dtype=float)
    q = np.asarray(q, dtype=float)
    gamma = np.sqrt(1.0 + w**2 + q / r**2)
    p0 = gamma + w
    dr = w / p0
    dw = (gamma * np.asarray(E_r, dtype=float) + q / r**3) / p0
    return dr, dw


def _steps(v_from, v_to, step):
    span = v_to - v_from
    if span == 0.0:
        return 0, 0.0
    if step <= 0.0:
        raise ValueError("step must be positive")
    n = max(1, int(np.ceil(abs(span) / step - 1e-12)))
    return n, span / n


def _advance(y, v, dv, rhs, scheme):
    if scheme == "rk4":
        k1 = rhs(v, y)
        k2 = rhs(v + 0.5 * dv, y + 0.5 * dv * k1)
        k3 = rhs(v + 0.5 * dv, y + 0.5 * dv * k2)
        k4 = rhs(v + dv, y + dv * k3)
        return y + (dv / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if scheme == "midpoint":
        k1 = rhs(v, y)
        k2 = rhs(v + 0.5 * dv, y + 0.5 * dv * k1)
        return y + dv * k2
    raise ValueError(f"unknown scheme {scheme!r}")


def integrate_reduced(r, w, q, field_fn, v_from, v_to, step,
                      scheme="rk4", r_floor=1e-10):
    """Integrate the reduced system with fixed steps; vectorized over arrays.

    ``field_fn(v, r) -> E_r``.  Reaching ``r <= r_floor`` aborts: with a
    positive angular-momentum floor no admissible orbit approaches the axis,
    so this signals invalid data or a bug, not physics.
    """
    r = np.atleast_1d(np.asarray(r, dtype=float)).copy()
    w = np.atleast_1d(np.asarray(w, dtype=float)).copy()
    q = np.atleast_1d(np.asarray(q, dtype=float))

    def rhs(v, y):
        dr, dw = char_rhs_reduced(v, y[0], y[1], q, field_fn(v, y[0]))
        return np.stack([dr, dw])

    n, dv = _steps(v_from, v_to, step)
    y = np.stack([r, w])
    v = v_from
    for _ in range(n):
        y = _advance(y, v, dv, rhs, scheme)
        v += dv
        if np.any(y[0] <= r_floor):
            raise IntegrationError(
                f"trajectory reached r <= r_floor={r_floor:g} at v={v:g}; "
                "the axis bound sqrt(F)/P is violated")
    return y[0], y[1]


def integrate_cartesian(x, p, field, v_from, v_to, step, scheme="rk4",
                        r_floor=1e-10):
    """Integrate the 6D Cartesian system for one phase point."""
    def rhs(v, y):
        dx, dp = char_rhs_cartesian(v, y[:3], y[3:], field)
        return np.concatenate([dx, dp])

    n, dv = _steps(v_from, v_to, step)
    y = np.concatenate([np.asarray(x, float), np.asarray(p, float)])
    v = v_from
    for _ in range(n):
        y = _advance(y, v, dv, rhs, scheme)
        v += dv
        if _norm(y[:3]) <= r_floor:
            raise IntegrationError(
                f"trajectory reached r <= r_floor={r_floor:g} at v={v:g}")
    return y[:3], y[3:]


def trajectory_reduced(r, w, q, field_fn, v_from, v_to, step, scheme="rk4",
                       r_floor=1e-10):
    """As integrate_reduced for a single orbit, returning dense samples.

    Returns arrays (v, r, w, E_r) at every accepted step.
    """
    n, dv = _steps(v_from, v_to, step)
    q = float(q)
    vs = np.empty(n + 1)
    rs = np.empty(n + 1)
    ws = np.empty(n + 1)
    vs[0], rs[0], ws[0] = v_from, float(r), float(w)
    for i in range(n):
        rr, ww = integrate_reduced(rs[i], ws[i], q, field_fn,
                                   vs[i], vs[i] + dv, dv, scheme, r_floor)
        vs[i + 1], rs[i + 1], ws[i + 1] = vs[i] + dv, rr[0], ww[0]
    Es = np.array([float(np.asarray(field_fn(v, np.array([rr])))[0])
                   for v, rr in zip(vs, rs)])
    return vs, rs, ws, Es


def phase_divergence(v, x, p, field):
    """Closed-form divergence of the Cartesian characteristic RHS.

    Equals -(1+phat.k)^-2 [ |phat x k|^2 / |x|
        + (E.(k - (phat.k) phat) - (phat x k).B) / gamma ].
    """
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float)
    r = _norm(x)
    if r <= 0.0:
        raise ValueError("phase divergence undefined at |x| = 0")
    k = x / r
    gamma = np.sqrt(1.0 + np.dot(p, p))
    phat = p / gamma
    c = np.dot(phat, k)
    E, B = field(v, x)
    cross = np.cross(phat, k)
    term = (np.dot(cross, cross) / r
            + (np.dot(E, k - c * phat) - np.dot(cross, B)) / gamma)
    return -term / (1.0 + c) ** 2


def phase_divergence_fd(v, x, p, field, h=1e-5):
    """Central finite-difference divergence of the Cartesian RHS (oracle)."""
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float)
    div = 0.0
    for i in range(3):
        e = np.zeros(3)
        e[i] = h
        dxp, _ = char_rhs_cartesian(v, x + e, p, field)
        dxm, _ = char_rhs_cartesian(v, x - e, p, field)
        div += (dxp[i] - dxm[i]) / (2.0 * h)
        _, dpp = char_rhs_cartesian(v, x, p + e, field)
        _, dpm = char_rhs_cartesian(v, x, p - e, field)
        div += (dpp[i] - dpm[i]) / (2.0 * h)
    return div


def one_plus_phat_k(x, p):
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float)
    k = x / _norm(x)
    return 1.0 + np.dot(p, k) / np.sqrt(1.0 + np.dot(p, p))


def flow_jacobian_det(x, p, field, v_from, v_to, step, h_fd=1e-4,
                      scheme="rk4"):
    """6x6 finite-difference Jacobian determinant of the flow map.

    Central differences over 12 perturbed trajectories with relative
    perturbation h_fd.  The exact value, for any external field, is
    (1 + phat.k)(start) / (1 + Phat.K)(end).
    """
    z0 = np.concatenate([np.asarray(x, float), np.asarray(p, float)])
    J = np.empty((6, 6))
    for j in range(6):
        h = h_fd * max(1.0, abs(z0[j]))
        zp = z0.copy()
        zp[j] += h
        zm = z0.copy()
        zm[j] -= h
        xp_, pp_ = integrate_cartesian(zp[:3], zp[3:], field, v_from, v_to,
                                       step, scheme)
        xm_, pm_ = integrate_cartesian(zm[:3], zm[3:], field, v_from, v_to,
                                       step, scheme)
        J[:, j] = (np.concatenate([xp_, pp_]) -
                   np.concatenate([xm_, pm_])) / (2.0 * h)
    return float(np.linalg.det(J))


def flow_jacobian_exact(x, p, field, v_from, v_to, step, scheme="rk4"):
    """Closed-form determinant (1+phat.k)/(1+Phat.K) along the same flow."""
    x1, p1 = integrate_cartesian(x, p, field, v_from, v_to, step, scheme)
    return one_plus_phat_k(x, p) / one_plus_phat_k(x1, p1)


def embed_reduced_state(r, w, q):
    """Embed (r, w, q) as x = r e1, p = w e1 + sqrt(q)/r e2."""
    x = np.array([float(r), 0.0, 0.0])
    p = np.array([float(w), np.sqrt(float(q)) / float(r), 0.0])
    return x, p
