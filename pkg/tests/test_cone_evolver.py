import numpy as np
import pytest

from vmcone import (RunConfig, run, step, auto_r_max, field_function,
                    default_probe_radii, nirc_flux, outgoing_radiation,
                    builtin_datum, sample_particles, ShellGrid, deposit,
                    solve_field, eval_field)
from vmcone.characteristics import char_rhs_reduced
from conftest import small_config


def test_auto_r_max():
    d = builtin_datum("shell_polynomial")
    assert auto_r_max(d, 4.0, 0.25) == pytest.approx(d.R0 + 2.0 + 0.25)
    # margin never collapses below a minimum slack
    assert auto_r_max(d, 0.0, 0.0) > d.R0


def test_mass_series_exactly_constant(small_history):
    N = small_history.N_wedge
    assert np.max(np.abs(N - N[0])) <= 1e-13 * N[0]


def test_support_and_axis_bounds(small_history):
    h = small_history
    limit = h.R0 + 0.5 * h.vs + h.grid.dr
    assert np.all(h.R_slice_max <= limit)
    lower = np.sqrt(h.F) / h.P_wedge * (1.0 - 1e-6)
    assert np.all(h.R_min_run >= lower)


def test_monotonicity_counters(small_history):
    assert small_history.r_turn_violations == 0
    assert small_history.min_dw >= -1e-9


def test_momentum_support_non_decreasing(small_history):
    assert np.all(np.diff(small_history.P_wedge) >= 0.0)


def test_field_profile_recorded(small_history):
    h = small_history
    assert np.all(h.E >= 0.0)
    assert np.all(h.E[:, 0] == 0.0)
    # the recorded cumulative integral reproduces the field on the nodes
    n = len(h.vs) // 2
    r = h.grid.edges[1:]
    assert np.allclose(h.E[n][1:], h.I[n][1:] / r**2, rtol=1e-12)


def test_step_zero_dv_is_identity():
    parts = sample_particles(builtin_datum("shell_polynomial"), 8)
    grid = ShellGrid(r_max=2.0, n_shells=64)
    out, prof, fld = step(parts, grid, 0.0)
    assert np.array_equal(out.r, parts.r)
    assert np.array_equal(out.w, parts.w)


def test_step_against_manual_push():
    # one Picard iteration with a frozen field must equal a hand-rolled RK4
    # on the reduced system using the same start-of-step field
    parts = sample_particles(builtin_datum("shell_polynomial"), 6)
    grid = ShellGrid(r_max=2.0, n_shells=128)
    dv = 1e-3
    pushed, prof, fld = step(parts, grid, dv, picard_iters=1)

    fn = field_function(fld)
    r, w, q = parts.r.copy(), parts.w.copy(), parts.q

    def rhs(rr, ww):
        return char_rhs_reduced(0.0, rr, ww, q, fn(0.0, rr))

    k1r, k1w = rhs(r, w)
    k2r, k2w = rhs(r + 0.5 * dv * k1r, w + 0.5 * dv * k1w)
    k3r, k3w = rhs(r + 0.5 * dv * k2r, w + 0.5 * dv * k2w)
    k4r, k4w = rhs(r + dv * k3r, w + dv * k3w)
    r1 = r + dv / 6.0 * (k1r + 2 * k2r + 2 * k3r + k4r)
    w1 = w + dv / 6.0 * (k1w + 2 * k2w + 2 * k3w + k4w)
    assert np.allclose(pushed.r, r1, rtol=1e-14, atol=0.0)
    assert np.allclose(pushed.w, w1, rtol=1e-14, atol=0.0)


def test_ten_step_hand_integration_single_particle():
    # a single macroparticle feels the field of its own deposited shell;
    # re-integrate by hand for 10 steps of 1e-3 and compare
    from vmcone import ParticleSet

    grid = ShellGrid(r_max=2.0, n_shells=64)
    parts = ParticleSet(r=np.array([0.8]), w=np.array([0.1]),
                        q=np.array([0.02]), weight=np.array([0.5]),
                        f_value=np.array([1.0]))
    dv = 1e-3
    evolved = parts.copy()
    manual = parts.copy()
    for _ in range(10):
        evolved, _, _ = step(evolved, grid, dv, picard_iters=1)
        fld = solve_field(deposit(manual, grid))
        fn = field_function(fld)

        def rhs(rr, ww):
            return char_rhs_reduced(0.0, rr, ww, manual.q, fn(0.0, rr))

        r, w = manual.r, manual.w
        k1r, k1w = rhs(r, w)
        k2r, k2w = rhs(r + 0.5 * dv * k1r, w + 0.5 * dv * k1w)
        k3r, k3w = rhs(r + 0.5 * dv * k2r, w + 0.5 * dv * k2w)
        k4r, k4w = rhs(r + dv * k3r, w + dv * k3w)
        manual.r = r + dv / 6.0 * (k1r + 2 * k2r + 2 * k3r + k4r)
        manual.w = w + dv / 6.0 * (k1w + 2 * k2w + 2 * k3w + k4w)
    assert np.allclose(evolved.r, manual.r, rtol=1e-13)
    assert np.allclose(evolved.w, manual.w, rtol=1e-13)


def test_field_off_run_is_free_streaming():
    cfg = small_config(field_off=True, v_final=1.0, resolution=(6, 6, 6))
    h = run(cfg)
    assert np.all(h.E == 0.0)
    # momentum support cannot grow without a field
    assert h.P_wedge[-1] == pytest.approx(h.P_wedge[0], rel=1e-12)


def test_field_function_extends_beyond_grid():
    parts = sample_particles(builtin_datum("shell_polynomial"), 8)
    grid = ShellGrid(r_max=2.0, n_shells=64)
    fld = solve_field(deposit(parts, grid))
    fn = field_function(fld)
    inside = fn(0.0, np.array([1.9]))
    assert inside[0] == pytest.approx(eval_field(fld, 1.9))
    beyond = fn(0.0, np.array([4.0]))
    assert beyond[0] == pytest.approx(float(fld.I[-1]) / 16.0)


def test_default_probes_are_grid_nodes():
    d = builtin_datum("shell_polynomial")
    grid = ShellGrid(r_max=3.0, n_shells=300)
    probes = default_probe_radii(d, grid)
    snap = np.round(probes / grid.dr) * grid.dr
    assert np.allclose(probes, snap, atol=1e-12)
    assert np.all(probes <= grid.r_max)


def test_empty_run():
    cfg = RunConfig(datum_name="zero", n_shells=16, r_max=1.0,
                    v_final=0.5, dv=0.1)
    h = run(cfg)
    assert np.all(h.N_wedge == 0.0)
    assert np.all(h.E == 0.0)


def test_radiation_fluxes_structurally_zero(small_history):
    h = small_history
    assert nirc_flux(h, 0.0, h.v_final, float(h.probe_radii[0])) == 0.0
    assert outgoing_radiation(h, 0.0, h.v_final) == 0.0
    with pytest.raises(ValueError):
        nirc_flux(h, 1.0, 0.5, float(h.probe_radii[0]))
    with pytest.raises(ValueError):
        nirc_flux(h, 0.0, 1.0, -1.0)
    with pytest.raises(ValueError):
        outgoing_radiation(h, 1.0, 0.5)


def test_history_time_interpolation(small_history):
    h = small_history
    n = len(h.vs) // 3
    v_mid = 0.5 * (h.vs[n] + h.vs[n + 1])
    prof = h.profile_at("g_plus", v_mid)
    assert np.allclose(prof, 0.5 * (h.g_plus[n] + h.g_plus[n + 1]))
    with pytest.raises(ValueError, match="outside recorded history"):
        h.slice_index(h.v_final + 1.0)
    with pytest.raises(ValueError, match="beyond"):
        h.advanced_profile("g_minus", h.v_final, 2.0)
