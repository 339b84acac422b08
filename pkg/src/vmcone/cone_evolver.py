"""Self-consistent advanced-time loop: deposit, solve field, push particles.

Each step freezes the radial field over [v, v + dv] and integrates the
reduced characteristics with RK4; an optional Picard correction re-deposits
at the endpoint and re-pushes with the averaged field, giving second-order
coupling.  Every step records the moment profiles, the field and a scalar
series into a SliceHistory.

The magnetic field is identically zero in spherical symmetry, so the
incoming and outgoing radiation fluxes vanish structurally; see nirc_flux.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .phase_model import (InitialDatum, ParticleSet, builtin_datum,
                          sample_particles, check_measure_positivity)
from .radial_field import (ShellGrid, MomentProfiles, RadialFieldProfile,
                           deposit, solve_field, eval_field)
from .characteristics import integrate_reduced
from .config import RunConfig, DV_R0_FRACTION


@dataclass
class SliceHistory:
    """Per-step radial profiles and scalar series of one run.

    Profile arrays have shape (n_slices, n_nodes); series arrays (n_slices,).
    P_wedge is the running momentum-support radius (non-decreasing by
    construction); R_min_run the running minimum particle radius.
    """

    grid: ShellGrid
    vs: np.ndarray
    g_plus: np.ndarray
    g_minus: np.ndarray
    h_plus: np.ndarray
    h_minus: np.ndarray
    E: np.ndarray
    I: np.ndarray
    # scalar series
    N_wedge: np.ndarray        # conservative node-volume sum == sum of weights
    M_wedge: np.ndarray        # particle kinetic sum + field energy
    P_wedge: np.ndarray
    R_slice_max: np.ndarray
    R_slice_min: np.ndarray
    R_min_run: np.ndarray
    # probe fluxes
    probe_radii: np.ndarray
    flux_j: np.ndarray         # (n_slices, n_probes): 4 pi r^2 j.k
    flux_p: np.ndarray         # (n_slices, n_probes): 4 pi r^2 pflux.k
    # metadata
    R0: float = 0.0
    F: float = 1.0
    f_inf_norm: float = 0.0
    dv: float = 0.0
    # flow-monotonicity counters (claim: r has at most one local minimum,
    # w is non-decreasing while E.k >= 0)
    r_turn_violations: int = 0
    min_dw: float = 0.0
    # particle snapshots (in-memory only)
    particles_initial: ParticleSet | None = None
    particles_final: ParticleSet | None = None

    @property
    def v_final(self) -> float:
        return float(self.vs[-1])

    def slice_index(self, v: float) -> tuple[int, float]:
        """Bracketing index and linear weight for time interpolation."""
        vs = self.vs
        if v < vs[0] - 1e-12 or v > vs[-1] + 1e-12:
            raise ValueError(
                f"v={v:g} outside recorded history [{vs[0]:g}, {vs[-1]:g}]; "
                f"extend time.v_final")
        i = int(np.clip(np.searchsorted(vs, v) - 1, 0, len(vs) - 2))
        theta = (v - vs[i]) / (vs[i + 1] - vs[i])
        return i, float(np.clip(theta, 0.0, 1.0))

    def profile_at(self, name: str, v: float) -> np.ndarray:
        """Linear time interpolation of a stored profile row."""
        arr = getattr(self, name)
        i, theta = self.slice_index(v)
        return (1.0 - theta) * arr[i] + theta * arr[i + 1]

    def advanced_profile(self, name: str, v: float, slope: float) -> np.ndarray:
        """Node values of a profile at per-node times v + slope * r_j.

        slope = 0 reads the past cone, 1 the t = const slice, 2 the future
        cone.  All requested times must lie inside the recorded range.
        """
        arr = getattr(self, name)
        t = v + slope * self.grid.edges
        vs = self.vs
        if t.max() > vs[-1] + 1e-12 or t.min() < vs[0] - 1e-12:
            raise ValueError(
                f"advanced times up to v+{slope:g}*r reach {t.max():g}, beyond "
                f"recorded history ending at {vs[-1]:g}")
        idx = np.clip(np.searchsorted(vs, t) - 1, 0, len(vs) - 2)
        theta = np.clip((t - vs[idx]) / (vs[idx + 1] - vs[idx]), 0.0, 1.0)
        cols = np.arange(arr.shape[1])
        return (1.0 - theta) * arr[idx, cols] + theta * arr[idx + 1, cols]


def auto_r_max(datum: InitialDatum, v_final: float, margin: float) -> float:
    """Grid extent R0 + v_final / 2 + margin: no particle can travel past
    this radius (outward characteristic speed is below 1/2)."""
    return datum.R0 + 0.5 * v_final + max(margin, 0.05)


def field_function(profile: RadialFieldProfile):
    """Field closure for the pusher; beyond r_max the source is exhausted
    and E continues as I(r_max) / r^2."""
    grid = profile.grid
    I_max = float(profile.I[-1])

    def fn(v, r):
        r = np.asarray(r, dtype=float)
        inside = r <= grid.r_max
        out = np.empty_like(r)
        rin = np.where(inside, r, grid.r_max)
        out = np.where(inside, eval_field(profile, rin), 0.0)
        beyond = ~inside
        if np.any(beyond):
            out[beyond] = I_max / r[beyond] ** 2
        return out

    return fn


def _zero_field(grid: ShellGrid) -> RadialFieldProfile:
    z = np.zeros(grid.n_shells + 1)
    return RadialFieldProfile(grid=grid, I=z, E=z.copy())


def step(parts: ParticleSet, grid: ShellGrid, dv: float, picard_iters: int = 2,
         scheme: str = "rk4", field_off: bool = False, r_floor: float = 1e-10):
    """One advanced-time step; returns (pushed particles, profiles, field).

    The returned profiles and field are the self-consistent ones at the
    *start* of the step.
    """
    profiles0 = deposit(parts, grid)
    field0 = _zero_field(grid) if field_off else solve_field(profiles0)
    if len(parts) == 0 or dv == 0.0:
        return parts.copy(), profiles0, field0

    def push(fieldprof):
        fn = field_function(fieldprof)
        r1, w1 = integrate_reduced(parts.r, parts.w, parts.q, fn, 0.0, dv, dv,
                                   scheme=scheme, r_floor=r_floor)
        return r1, w1

    r1, w1 = push(field0)
    for _ in range(picard_iters - 1):
        if field_off:
            break
        end = ParticleSet(r1, w1, parts.q, parts.weight, parts.f_value)
        field1 = solve_field(deposit(end, grid))
        avg = RadialFieldProfile(grid=grid,
                                 I=0.5 * (field0.I + field1.I),
                                 E=0.5 * (field0.E + field1.E))
        r1, w1 = push(avg)

    if np.any(~np.isfinite(r1)) or np.any(~np.isfinite(w1)):
        raise FloatingPointError("non-finite particle state after push")
    out = ParticleSet(r1, w1, parts.q, parts.weight, parts.f_value)
    return out, profiles0, field0


def _field_energy(grid: ShellGrid, E: np.ndarray) -> float:
    """4 pi * int 1/2 E^2 r^2 dr over the whole grid (trapezoid)."""
    return float(4.0 * np.pi * np.trapezoid(0.5 * E**2 * grid.edges**2, dx=grid.dr))


def default_probe_radii(datum: InitialDatum, grid: ShellGrid) -> np.ndarray:
    """Probes inside, at the edge of and far beyond the initial support,
    snapped to grid nodes."""
    if datum.R0 > 0.0:
        raw = [datum.R0, 2.0 * datum.R0, 0.9 * grid.r_max]
    else:
        raw = [0.25 * grid.r_max, 0.5 * grid.r_max, 0.9 * grid.r_max]
    snapped = sorted({min(round(r / grid.dr), grid.n_shells) * grid.dr
                      for r in raw})
    return np.array(snapped)


def run(config: RunConfig, datum: InitialDatum | None = None) -> SliceHistory:
    """Execute the advanced-time loop from v = 0 to v_final."""
    if datum is None:
        datum = builtin_datum(config.datum_name, config.datum_params)
    parts0 = sample_particles(datum, config.resolution)
    check_measure_positivity(parts0)

    r_max = config.r_max or auto_r_max(datum, config.v_final, config.margin)
    grid = ShellGrid(r_max=r_max, n_shells=config.n_shells)
    dv = config.dv
    if dv is None:
        dv = DV_R0_FRACTION * (datum.R0 if datum.R0 > 0 else 1.0)
    n_steps = 0 if config.v_final == 0.0 else max(
        1, int(round(config.v_final / dv)))
    dv = config.v_final / n_steps if n_steps else dv

    probes = (np.array(config.probe_radii, dtype=float)
              if config.probe_radii is not None
              else default_probe_radii(datum, grid))

    n_slices = n_steps + 1
    n_nodes = grid.n_shells + 1
    prof_names = ("g_plus", "g_minus", "h_plus", "h_minus")
    profs = {k: np.zeros((n_slices, n_nodes)) for k in prof_names}
    E_arr = np.zeros((n_slices, n_nodes))
    I_arr = np.zeros((n_slices, n_nodes))
    series = {k: np.zeros(n_slices) for k in
              ("N_wedge", "M_wedge", "P_wedge", "R_slice_max",
               "R_slice_min", "R_min_run")}
    flux_j = np.zeros((n_slices, probes.size))
    flux_p = np.zeros((n_slices, probes.size))

    parts = parts0.copy()
    p_run = 0.0
    r_run_min = np.inf
    prev_dr_sign = None
    turned_out = None
    r_turn_violations = 0
    min_dw = 0.0
    vs = np.linspace(0.0, config.v_final, n_slices)

    def record(n, state, profiles, fieldprof):
        nonlocal p_run, r_run_min
        for k in prof_names:
            profs[k][n] = getattr(profiles, k)
        E_arr[n] = fieldprof.E
        I_arr[n] = fieldprof.I
        vol = grid.node_volumes
        series["N_wedge"][n] = float(np.sum(profiles.g_plus * vol))
        if len(state):
            kinetic = float(np.sum(state.weight * state.gamma()))
            p_run = max(p_run, float(np.sqrt(np.max(state.momentum_sq()))))
            r_run_min = min(r_run_min, float(np.min(state.r)))
            series["R_slice_max"][n] = float(np.max(state.r))
            series["R_slice_min"][n] = float(np.min(state.r))
        else:
            kinetic = 0.0
            series["R_slice_max"][n] = 0.0
            series["R_slice_min"][n] = 0.0
        series["M_wedge"][n] = kinetic + _field_energy(grid, fieldprof.E)
        series["P_wedge"][n] = p_run
        series["R_min_run"][n] = r_run_min if np.isfinite(r_run_min) else 0.0
        j_r = 0.5 * np.interp(probes, grid.edges,
                              profiles.g_plus - profiles.g_minus)
        pf_r = 0.5 * np.interp(probes, grid.edges,
                               profiles.h_plus - profiles.h_minus)
        flux_j[n] = 4.0 * np.pi * probes**2 * j_r
        flux_p[n] = 4.0 * np.pi * probes**2 * pf_r

    for n in range(n_steps):
        before = parts
        try:
            parts, profiles, fieldprof = step(
                parts, grid, dv, config.picard_iters, config.scheme,
                config.field_off, config.r_floor)
        except FloatingPointError as exc:
            raise FloatingPointError(f"step {n} (v={vs[n]:g}): {exc}") from exc
        record(n, before, profiles, fieldprof)
        r_before, w_before = before.r, before.w
        if len(parts):
            dr_sign = np.sign(parts.r - r_before)
            if turned_out is None:
                turned_out = np.zeros(len(parts), dtype=bool)
            turning_in = (dr_sign < 0) & turned_out
            r_turn_violations += int(np.count_nonzero(turning_in))
            turned_out |= dr_sign > 0
            min_dw = min(min_dw, float(np.min(parts.w - w_before)))
        check_measure_positivity(parts)

    final_profiles = deposit(parts, grid)
    final_field = (_zero_field(grid) if config.field_off
                   else solve_field(final_profiles))
    record(n_steps, parts, final_profiles, final_field)

    return SliceHistory(
        grid=grid, vs=vs,
        g_plus=profs["g_plus"], g_minus=profs["g_minus"],
        h_plus=profs["h_plus"], h_minus=profs["h_minus"],
        E=E_arr, I=I_arr,
        N_wedge=series["N_wedge"], M_wedge=series["M_wedge"],
        P_wedge=series["P_wedge"], R_slice_max=series["R_slice_max"],
        R_slice_min=series["R_slice_min"], R_min_run=series["R_min_run"],
        probe_radii=probes, flux_j=flux_j, flux_p=flux_p,
        R0=datum.R0, F=datum.F, f_inf_norm=datum.f_inf_norm, dv=dv,
        r_turn_violations=r_turn_violations, min_dw=min_dw,
        particles_initial=parts0, particles_final=parts,
    )


def nirc_flux(history: SliceHistory, v1: float, v2: float, r: float) -> float:
    """Incoming Poynting flux through the sphere of radius r on [v1, v2].

    Identically zero: the magnetic field vanishes in spherical symmetry, so
    E x B = 0 and there is neither incoming nor outgoing radiation.  The
    arguments are validated but do not affect the value.
    """
    if v2 < v1:
        raise ValueError("need v1 <= v2")
    if r < 0.0 or r > history.grid.r_max:
        raise ValueError("r outside grid")
    return 0.0


def outgoing_radiation(history: SliceHistory, v1: float, v2: float) -> float:
    """Outgoing electromagnetic radiation on [v1, v2]; zero, as nirc_flux."""
    if v2 < v1:
        raise ValueError("need v1 <= v2")
    return 0.0
