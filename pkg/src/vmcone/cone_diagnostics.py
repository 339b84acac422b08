"""Mass and energy functionals on past cones, future cones and t = const
slices, computed from a recorded SliceHistory, plus the identity, bound and
monotonicity checks that certify a run.

Functional conventions (all radial integrals are 4 pi int_0^r (.) r'^2 dr'):

  past cone    n^(v,r):  g_plus(v, r')
  t = const    n(v,r):   rho(v + r', r'),          rho = (g_plus + g_minus)/2
  future cone  nv(v,r):  g_minus(v + 2 r', r')

and for the energies the integrands gain the kinetic moments h_* plus the
field term E^2/2 (the Poynting part vanishes with the magnetic field).
Future-cone and slice functionals read the history at advanced time
v + 2r' or v + r' with linear interpolation between recorded steps.
"""

from __future__ import annotations

import numpy as np

from .cone_evolver import SliceHistory
from .phase_model import ParticleSet

EIGHT_PI_3 = 8.0 * np.pi / 3.0


# ---------------------------------------------------------------------------
# radial integration helpers

def _radial_integral(grid, values, r):
    """4 pi int_0^r values(r') r'^2 dr', trapezoid with a partial last cell."""
    r = float(r)
    if r < 0.0 or r > grid.r_max + 1e-12:
        raise ValueError("radius outside shell grid")
    edges = grid.edges
    integrand = values * edges**2
    j = int(np.searchsorted(edges, r, side="right")) - 1
    total = np.trapezoid(integrand[:j + 1], dx=grid.dr) if j >= 1 else 0.0
    if j < grid.n_shells and r > edges[j]:
        v_r = np.interp(r, edges, values)
        total += 0.5 * (r - edges[j]) * (integrand[j] + v_r * r**2)
    return 4.0 * np.pi * float(total)


def _advanced_values(history: SliceHistory, arr, v, slope, j_max):
    """Node values of a (n_slices, n_nodes) array at times v + slope * r_j
    for nodes 0..j_max."""
    edges = history.grid.edges[:j_max + 1]
    t = v + slope * edges
    vs = history.vs
    if t.max() > vs[-1] + 1e-9 or t.min() < vs[0] - 1e-9:
        raise ValueError(
            f"needs history up to v={t.max():g} but the run ends at "
            f"{vs[-1]:g}; extend time.v_final")
    idx = np.clip(np.searchsorted(vs, t) - 1, 0, len(vs) - 2)
    theta = np.clip((t - vs[idx]) / (vs[idx + 1] - vs[idx]), 0.0, 1.0)
    return (1.0 - theta) * arr[idx, np.arange(j_max + 1)] \
        + theta * arr[idx + 1, np.arange(j_max + 1)]


def _advanced_integral(history, v, slope, r, combine):
    """Radial integral of a combination of advanced profiles up to r."""
    grid = history.grid
    j_max = min(int(np.searchsorted(grid.edges, float(r), side="right")),
                grid.n_shells)
    fields = {name: _advanced_values(history, getattr(history, name), v,
                                     slope, j_max)
              for name in ("g_plus", "g_minus", "h_plus", "h_minus", "E")}
    values = combine(fields)
    padded = np.zeros(grid.n_shells + 1)
    padded[:j_max + 1] = values
    return _radial_integral(grid, padded, r)


# ---------------------------------------------------------------------------
# mass functionals

def past_cone_mass(history: SliceHistory, v: float, r: float) -> float:
    """Shell-volume sum of g_plus up to r; particle-exact at full radius."""
    g = history.profile_at("g_plus", v)
    grid = history.grid
    mask = grid.edges <= float(r) + 1e-12
    return float(np.sum((g * grid.node_volumes)[mask]))


def past_cone_mass_cont(history: SliceHistory, v: float, r: float) -> float:
    """Trapezoid form of the past-cone mass (continuous in r); this is the
    variant used inside the flux identities."""
    return _radial_integral(history.grid, history.profile_at("g_plus", v), r)


def slice_mass(history: SliceHistory, v: float, r: float) -> float:
    """Mass inside radius r on the slice t = v."""
    return _advanced_integral(
        history, v, 1.0, r,
        lambda f: 0.5 * (f["g_plus"] + f["g_minus"]))


def future_cone_mass(history: SliceHistory, v: float, r: float) -> float:
    """Mass inside radius r on the future cone labelled v."""
    return _advanced_integral(history, v, 2.0, r, lambda f: f["g_minus"])


# ---------------------------------------------------------------------------
# energy functionals (kinetic moments plus field energy E^2/2)

def past_cone_energy(history: SliceHistory, v: float, r: float) -> float:
    grid = history.grid
    kin = _radial_integral(grid, history.profile_at("h_plus", v), r)
    fld = _radial_integral(grid, 0.5 * history.profile_at("E", v) ** 2, r)
    return kin + fld


def slice_energy(history: SliceHistory, v: float, r: float) -> float:
    return _advanced_integral(
        history, v, 1.0, r,
        lambda f: 0.5 * (f["h_plus"] + f["h_minus"]) + 0.5 * f["E"] ** 2)


def future_cone_energy(history: SliceHistory, v: float, r: float) -> float:
    return _advanced_integral(
        history, v, 2.0, r,
        lambda f: f["h_minus"] + 0.5 * f["E"] ** 2)


# ---------------------------------------------------------------------------
# evaluable windows and series

def evaluable_window(history: SliceHistory, slope: float):
    """Largest [0, v_max] on which slope-shifted functionals are complete.

    Returns (v_max, r_eval).  All matter stays inside r_eval = measured
    final support radius + 2 shells: the cone frontier r = (v' - v)/slope
    expands at least as fast as any particle travels (speed < 1/2), so if
    the matter is inside the frontier at the end of the history it was
    captured at all earlier times.
    """
    if slope <= 0.0:
        raise ValueError("slope must be positive")
    r_eval = float(np.max(history.R_slice_max)) + 2.0 * history.grid.dr
    if r_eval <= 2.0 * history.grid.dr:   # empty run
        r_eval = history.grid.dr * 2.0
    # one extra shell of slack: the integral up to r_eval interpolates from
    # the first node beyond it
    v_max = history.v_final - slope * (r_eval + 2.0 * history.grid.dr)
    if v_max < 0.0:
        raise ValueError(
            "history too short to complete any shifted functional; "
            f"needs v_final > {slope * r_eval:g}")
    return v_max, r_eval


def functional_series(history: SliceHistory, which: str):
    """Series of a shifted functional over its evaluable window.

    which: one of 'N_slice', 'M_slice', 'N_vee', 'M_vee'.
    Returns (vs, values, r_eval).
    """
    table = {
        "N_slice": (1.0, slice_mass),
        "M_slice": (1.0, slice_energy),
        "N_vee": (2.0, future_cone_mass),
        "M_vee": (2.0, future_cone_energy),
    }
    slope, fn = table[which]
    v_max, r_eval = evaluable_window(history, slope)
    vs = history.vs[history.vs <= v_max + 1e-12]
    values = np.array([fn(history, float(v), r_eval) for v in vs])
    return vs, values, r_eval


# ---------------------------------------------------------------------------
# flux identities

def _probe_index(history: SliceHistory, r_probe: float) -> int:
    d = np.abs(history.probe_radii - r_probe)
    i = int(np.argmin(d))
    if d[i] > 0.5 * history.grid.dr:
        raise ValueError(f"{r_probe:g} is not a recorded probe radius "
                         f"{history.probe_radii}")
    return i


def _flux_time_integral(history: SliceHistory, flux, col, v1, v2):
    """int_v1^v2 of a recorded probe flux series, trapezoid in v."""
    vs = history.vs
    series = flux[:, col]
    inner = (vs > v1) & (vs < v2)
    ts = np.concatenate([[v1], vs[inner], [v2]])
    ys = np.interp(ts, vs, series)
    return float(np.trapezoid(ys, ts))


def mass_identity_residual(history: SliceHistory, v: float,
                           r_probe: float) -> float:
    """Slice/past-cone mass identity: n(v,r) - n^(v,r) + int_v^{v+r} flux."""
    col = _probe_index(history, r_probe)
    r = float(history.probe_radii[col])
    return (slice_mass(history, v, r) - past_cone_mass_cont(history, v, r)
            + _flux_time_integral(history, history.flux_j, col, v, v + r))


def future_mass_identity_residual(history: SliceHistory, v: float,
                                  r_probe: float) -> float:
    """Future/past-cone mass identity: nv - n^ + int_v^{v+2r} flux."""
    col = _probe_index(history, r_probe)
    r = float(history.probe_radii[col])
    return (future_cone_mass(history, v, r)
            - past_cone_mass_cont(history, v, r)
            + _flux_time_integral(history, history.flux_j, col, v, v + 2 * r))


def flux_derivative_checks(history: SliceHistory) -> dict:
    """Finite-difference time derivative of the cone functionals at each
    probe against the recorded boundary fluxes, plus the sign condition on
    the outgoing energy-flux integrand.

    Returns max absolute residuals (normalized by the initial mass /
    energy) and the minimum of the e - pflux.k integrand over the run.
    """
    vs = history.vs
    N0 = max(float(history.N_wedge[0]), 1e-300)
    M0 = max(float(history.M_wedge[0]), 1e-300)
    stride = max(1, len(vs) // 64)
    idx = np.arange(stride, len(vs) - stride, stride)
    res_n = 0.0
    res_m = 0.0
    for col, r_p in enumerate(history.probe_radii):
        r_p = float(r_p)
        for i in idx:
            dt = vs[i + stride] - vs[i - stride]
            dn = (past_cone_mass_cont(history, vs[i + stride], r_p)
                  - past_cone_mass_cont(history, vs[i - stride], r_p)) / dt
            dm = (past_cone_energy(history, vs[i + stride], r_p)
                  - past_cone_energy(history, vs[i - stride], r_p)) / dt
            res_n = max(res_n, abs(dn + history.flux_j[i, col]) / N0)
            res_m = max(res_m, abs(dm + history.flux_p[i, col]) / M0)
    e_minus = history.h_minus + 0.5 * history.E**2
    return {
        "mass_flux_residual": res_n,
        "energy_flux_residual": res_m,
        "min_outgoing_integrand": float(np.min(e_minus)),
    }


# ---------------------------------------------------------------------------
# interpolation bound and momentum-support ceiling

def l43_norm(grid, g) -> float:
    """L^{4/3} norm of a radial node density over 3-space."""
    val = 4.0 * np.pi * np.trapezoid(np.abs(g) ** (4.0 / 3.0) * grid.edges**2,
                                 dx=grid.dr)
    return float(val ** 0.75)


def l43_bound_constant(f_inf_norm: float, M0: float) -> float:
    """Explicit constant (8 pi/3 + 1) |f|_inf^{1/4} M0^{3/4} bounding the
    L^{4/3} norm of g_plus at every time."""
    return (EIGHT_PI_3 + 1.0) * f_inf_norm**0.25 * M0**0.75


def field_bound_constant(f_inf_norm: float, M0: float) -> float:
    """Explicit constant C_E with |E_r| <= C_E * P^{5/3}.

    Chain: split the source integral via Hoelder with exponents (3, 3/2),
    bound the L^{4/3} factor by the interpolation constant and the
    remaining factor by the momentum-support volume bound
    g <= (8 pi / 3) |f|_inf P^3.
    """
    K = l43_bound_constant(f_inf_norm, M0)
    return ((K ** (4.0 / 3.0) / (4.0 * np.pi)) ** (1.0 / 3.0)
            * (EIGHT_PI_3 * f_inf_norm) ** (5.0 / 9.0)
            * 3.0 ** (-2.0 / 3.0))


def momentum_ceiling(P0: float, N0: float, C_E: float) -> float:
    """Largest P with sqrt(1+P^2) <= sqrt(1+P0^2) + 2 sqrt(N0 C_E) P^{5/6},
    found by bisection.  Every momentum the flow can reach sits below it."""
    A = 2.0 * np.sqrt(max(N0 * C_E, 0.0))

    def phi(P):
        return np.sqrt(1.0 + P**2) - np.sqrt(1.0 + P0**2) - A * P ** (5.0 / 6.0)

    hi = max(P0, 1.0)
    while phi(hi) <= 0.0:
        hi *= 2.0
        if hi > 1e12:
            raise RuntimeError("momentum ceiling bracket failed")
    lo = 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if phi(mid) <= 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def momentum_support_bound(history: SliceHistory) -> dict:
    """Assemble the a priori momentum/field bound report for a run.

    Checks, at every recorded slice and node: |E_r| below both the
    mass-over-r^2 bound and the interpolation-chain bound; the
    self-consistency inequality for the running momentum support; and the
    bisection ceiling against the measured final support.
    """
    N0 = float(history.N_wedge[0])
    M0 = float(history.M_wedge[0])
    f_inf = history.f_inf_norm
    C_E = field_bound_constant(f_inf, M0) if f_inf > 0 else 0.0
    P0 = float(history.P_wedge[0])

    edges = history.grid.edges
    violations = []
    max_margin = -np.inf
    for n, v in enumerate(history.vs):
        E = np.abs(history.E[n][1:])
        bound = np.minimum(N0 / edges[1:] ** 2,
                           C_E * history.P_wedge[n] ** (5.0 / 3.0))
        margin = E - bound
        worst = int(np.argmax(margin))
        max_margin = max(max_margin, float(margin[worst]))
        if margin[worst] > 1e-12 * max(N0, 1e-300):
            violations.append((float(v), float(edges[1 + worst]),
                               float(E[worst]), float(bound[worst])))

    ineq_ok = True
    A = 2.0 * np.sqrt(max(N0 * C_E, 0.0))
    for P in history.P_wedge:
        lhs = np.sqrt(1.0 + P**2)
        rhs = np.sqrt(1.0 + P0**2) + A * P ** (5.0 / 6.0)
        if lhs > rhs + 1e-12:
            ineq_ok = False

    ceiling = momentum_ceiling(P0, N0, C_E) if len(history.P_wedge) else 0.0
    measured = float(history.P_wedge[-1])
    return {
        "N0": N0, "M0": M0, "f_inf_norm": f_inf,
        "l43_constant": l43_bound_constant(f_inf, M0),
        "field_constant": C_E,
        "field_bound_max_margin": max_margin,
        "field_bound_violations": violations,
        "self_consistency_ok": ineq_ok,
        "momentum_ceiling": ceiling,
        "measured_P_final": measured,
        "ceiling_ok": measured <= ceiling + 1e-12,
    }


def l43_bound_check(history: SliceHistory) -> dict:
    """Per-slice L^{4/3} norm of g_plus against the explicit constant."""
    K = l43_bound_constant(history.f_inf_norm, float(history.M_wedge[0]))
    norms = np.array([l43_norm(history.grid, g) for g in history.g_plus])
    worst = float(np.max(norms)) if norms.size else 0.0
    return {"bound": K, "max_norm": worst,
            "ok": bool(worst <= K + 1e-12)}


# ---------------------------------------------------------------------------
# particle-level invariant

def lq_invariant(parts: ParticleSet, q_exp: float) -> float:
    """Particle estimate of int f^q (1 + phat.k) dp dx = sum w_i f_i^{q-1}.

    Exactly constant along the run since weights and carried density
    values are frozen at sampling.
    """
    if q_exp < 1.0:
        raise ValueError("q_exp must be >= 1")
    if len(parts) == 0:
        return 0.0
    return float(np.sum(parts.weight * parts.f_value ** (q_exp - 1.0)))
