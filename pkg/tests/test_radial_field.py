import numpy as np
import pytest

from vmcone import (ShellGrid, ParticleSet, deposit, cumulative_source,
                    solve_field, eval_field, builtin_datum, sample_particles)
from vmcone.radial_field import MomentProfiles


def make_parts(r, w, q, weight):
    r = np.asarray(r, dtype=float)
    return ParticleSet(r=r, w=np.asarray(w, dtype=float),
                       q=np.asarray(q, dtype=float),
                       weight=np.asarray(weight, dtype=float),
                       f_value=np.ones_like(r))


def test_grid_geometry():
    grid = ShellGrid(r_max=2.0, n_shells=100)
    assert grid.dr == pytest.approx(0.02)
    assert grid.edges[0] == 0.0 and grid.edges[-1] == 2.0
    assert np.sum(grid.node_volumes) == pytest.approx(4.0 * np.pi / 3.0 * 8.0)
    with pytest.raises(ValueError):
        ShellGrid(r_max=-1.0, n_shells=10)
    with pytest.raises(ValueError):
        ShellGrid(r_max=1.0, n_shells=1)


def test_deposit_conserves_mass_exactly():
    parts = sample_particles(builtin_datum("shell_polynomial"), 16)
    grid = ShellGrid(r_max=1.5, n_shells=128)
    prof = deposit(parts, grid)
    total = np.sum(prof.g_plus * grid.node_volumes)
    assert total == pytest.approx(parts.total_weight(), rel=1e-14)
    # kinetic moment conserves the gamma-weighted sum the same way
    kin = np.sum(prof.h_plus * grid.node_volumes)
    assert kin == pytest.approx(float(np.sum(parts.weight * parts.gamma())),
                                rel=1e-14)


def test_deposit_moment_factors_single_particle():
    # one particle on a node: check the four payload factors directly
    grid = ShellGrid(r_max=1.0, n_shells=10)
    r0 = 0.5
    parts = make_parts([r0], [0.2], [0.01], [3.0])
    gamma = float(parts.gamma()[0])
    one_plus = 1.0 + 0.2 / gamma
    prof = deposit(parts, grid)
    j = 5
    vol = grid.node_volumes[j]
    assert prof.g_plus[j] * vol == pytest.approx(3.0)
    assert prof.g_minus[j] * vol == pytest.approx(
        3.0 * (1.0 - 0.2 / gamma) / one_plus)
    assert prof.h_plus[j] * vol == pytest.approx(3.0 * gamma)
    assert prof.h_minus[j] * vol == pytest.approx(
        3.0 * (gamma - 0.2) / one_plus)


def test_deposit_cic_split():
    grid = ShellGrid(r_max=1.0, n_shells=10)
    parts = make_parts([0.53], [0.0], [0.01], [1.0])
    prof = deposit(parts, grid)
    m = prof.g_plus * grid.node_volumes
    assert m[5] == pytest.approx(0.7)
    assert m[6] == pytest.approx(0.3)
    assert np.sum(m) == pytest.approx(1.0)


def test_deposit_rejects_out_of_grid():
    grid = ShellGrid(r_max=1.0, n_shells=10)
    parts = make_parts([0.5, 1.2], [0.0, 0.0], [0.01, 0.01], [1.0, 1.0])
    with pytest.raises(ValueError, match="particle 1"):
        deposit(parts, grid)


def test_field_of_uniform_source():
    # g = c constant: I = c r^3 / 3 so E = c r / 3
    grid = ShellGrid(r_max=1.0, n_shells=400)
    c = 2.5
    g = np.full(grid.n_shells + 1, c)
    prof = MomentProfiles(grid=grid, g_plus=g, g_minus=g, h_plus=g, h_minus=g)
    fld = solve_field(prof)
    r = grid.edges[1:]
    # trapezoid truncation of the source integral is exactly c dr^2/(6 r)
    bound = c * grid.dr**2 / (6.0 * r) * 1.05 + 1e-12
    assert np.all(np.abs(fld.E[1:] - c * r / 3.0) <= bound)
    assert np.allclose(fld.I, c * grid.edges**3 / 3.0, atol=1e-5)


def test_field_outside_shell_is_coulomb():
    # all mass below r0: beyond it E = I_total / r^2 exactly
    grid = ShellGrid(r_max=2.0, n_shells=500)
    parts = sample_particles(builtin_datum("shell_polynomial"), 12)
    fld = solve_field(deposit(parts, grid))
    N = parts.total_weight()
    r_out = grid.edges[-50:]
    assert np.allclose(fld.E[-50:], N / (4.0 * np.pi * r_out**2), rtol=1e-12)


def test_field_bound_by_mass_over_r_squared():
    grid = ShellGrid(r_max=2.0, n_shells=300)
    parts = sample_particles(builtin_datum("shell_polynomial"), 12)
    fld = solve_field(deposit(parts, grid))
    N = parts.total_weight()
    r = grid.edges[1:]
    assert np.all(fld.E[1:] <= N / (4.0 * np.pi * r**2) * (1 + 1e-12))
    assert np.all(fld.E >= 0.0)


def test_solve_field_input_validation():
    grid = ShellGrid(r_max=1.0, n_shells=10)
    g = np.zeros(11)
    bad = g.copy()
    bad[3] = np.nan
    with pytest.raises(ValueError, match="non-finite"):
        solve_field(MomentProfiles(grid, bad, g, g, g))
    neg = g.copy()
    neg[3] = -1.0
    with pytest.raises(ValueError, match="negative g_plus"):
        solve_field(MomentProfiles(grid, neg, g, g, g))


def test_eval_field_interpolation_and_domain():
    grid = ShellGrid(r_max=1.0, n_shells=100)
    g = np.exp(-grid.edges)
    fld = solve_field(MomentProfiles(grid, g, g, g, g))
    # node values reproduced
    assert eval_field(fld, 0.37) == pytest.approx(
        np.interp(0.37, grid.edges, fld.I) / 0.37**2)
    assert eval_field(fld, 0.0) == 0.0
    vec = eval_field(fld, np.array([0.0, 0.5, 1.0]))
    assert vec.shape == (3,)
    with pytest.raises(ValueError, match="outside"):
        eval_field(fld, 1.5)
    with pytest.raises(ValueError, match="outside"):
        eval_field(fld, -0.1)


def test_cumulative_source_matches_quadrature():
    from scipy.integrate import quad
    grid = ShellGrid(r_max=1.0, n_shells=800)
    g = np.cos(grid.edges)
    I = cumulative_source(grid, g)
    ref, _ = quad(lambda r: np.cos(r) * r**2, 0.0, 1.0)
    assert I[-1] == pytest.approx(ref, abs=1e-7)
