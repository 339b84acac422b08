import numpy as np
import pytest
from scipy.integrate import quad

from vmcone import ShellGrid, ParticleSet
from vmcone import cone_diagnostics as diag


def test_radial_integral_against_quadrature(small_history):
    grid = ShellGrid(r_max=1.0, n_shells=1000)
    values = np.exp(-2.0 * grid.edges)
    for r in (0.3137, 0.75, 1.0):
        ref, _ = quad(lambda s: np.exp(-2.0 * s) * s**2, 0.0, r)
        got = diag._radial_integral(grid, values, r)
        assert got == pytest.approx(4.0 * np.pi * ref, abs=1e-6)
    assert diag._radial_integral(grid, values, 0.0) == 0.0
    with pytest.raises(ValueError, match="outside"):
        diag._radial_integral(grid, values, 1.5)


def test_past_cone_mass_variants(small_history):
    h = small_history
    v = float(h.vs[len(h.vs) // 2])
    node_sum = diag.past_cone_mass(h, v, h.grid.r_max)
    assert node_sum == pytest.approx(float(h.N_wedge[0]), rel=1e-12)
    cont = diag.past_cone_mass_cont(h, v, h.grid.r_max)
    assert cont == pytest.approx(node_sum, rel=2e-3)


def test_evaluable_window(small_history):
    h = small_history
    v_max, r_eval = diag.evaluable_window(h, 2.0)
    assert r_eval >= float(np.max(h.R_slice_max))
    assert 0.0 < v_max < h.v_final
    # slope 1 window is wider than slope 2
    v_max1, _ = diag.evaluable_window(h, 1.0)
    assert v_max1 > v_max
    with pytest.raises(ValueError, match="slope"):
        diag.evaluable_window(h, 0.0)


def test_shifted_series_agree_with_past_cone(small_history):
    h = small_history
    N0 = float(h.N_wedge[0])
    for which, norm in (("N_slice", N0), ("N_vee", N0)):
        vs, vals, r_eval = diag.functional_series(h, which)
        ref = diag.past_cone_mass_cont(h, 0.0, r_eval)
        assert np.max(np.abs(vals - ref)) / norm < 5e-3
    with pytest.raises(KeyError):
        diag.functional_series(h, "bogus")


def test_energy_functionals_positive(small_history):
    h = small_history
    v = 0.5
    r = float(np.max(h.R_slice_max)) + 2.0 * h.grid.dr
    assert diag.past_cone_energy(h, v, r) > 0.0
    assert diag.slice_energy(h, v, r) > 0.0
    assert diag.future_cone_energy(h, v, r) > 0.0
    # kinetic energy dominates the rest mass: m <= e pointwise
    assert diag.past_cone_energy(h, v, r) >= diag.past_cone_mass_cont(h, v, r)


def test_flux_identities_small_scale(small_history):
    h = small_history
    N0 = float(h.N_wedge[0])
    r_p = float(h.probe_radii[0])
    for v in (0.0, 0.5, 1.0):
        assert abs(diag.mass_identity_residual(h, v, r_p)) < 5e-3 * N0
    assert abs(diag.future_mass_identity_residual(h, 0.0, r_p)) < 5e-3 * N0
    with pytest.raises(ValueError, match="probe"):
        diag.mass_identity_residual(h, 0.0, 0.123456)


def test_flux_derivative_checks(small_history):
    out = diag.flux_derivative_checks(small_history)
    assert out["mass_flux_residual"] < 0.05
    assert out["energy_flux_residual"] < 0.05
    assert out["min_outgoing_integrand"] >= 0.0


def test_l43_norm_closed_form():
    grid = ShellGrid(r_max=1.5, n_shells=600)
    c = 0.7
    g = np.full(grid.n_shells + 1, c)
    expected = (4.0 * np.pi * c ** (4.0 / 3.0) * 1.5**3 / 3.0) ** 0.75
    assert diag.l43_norm(grid, g) == pytest.approx(expected, rel=1e-5)


def test_explicit_constants_frozen_values():
    # frozen oracle values of the two explicit constants at sample inputs
    K = diag.l43_bound_constant(2.0, 0.5)
    assert K == pytest.approx((8.0 * np.pi / 3.0 + 1.0)
                              * 2.0**0.25 * 0.5**0.75)
    assert K == pytest.approx(6.6309507, rel=1e-6)
    C_E = diag.field_bound_constant(2.0, 0.5)
    expected = ((K ** (4.0 / 3.0) / (4.0 * np.pi)) ** (1.0 / 3.0)
                * (8.0 * np.pi / 3.0 * 2.0) ** (5.0 / 9.0) * 3.0 ** (-2.0 / 3.0))
    assert C_E == pytest.approx(expected, rel=1e-12)
    assert C_E == pytest.approx(2.2947915, rel=1e-6)


def test_momentum_ceiling_properties():
    # with no field constant the ceiling collapses to the initial support
    assert diag.momentum_ceiling(0.4, 0.0, 0.0) == pytest.approx(0.4, abs=1e-10)
    # ceiling solves the scalar equation: phi changes sign there
    P0, N0, C_E = 0.3, 0.01, 2.0
    A = 2.0 * np.sqrt(N0 * C_E)
    P = diag.momentum_ceiling(P0, N0, C_E)

    def phi(x):
        return np.sqrt(1 + x**2) - np.sqrt(1 + P0**2) - A * x ** (5.0 / 6.0)

    assert phi(P * (1 - 1e-6)) <= 0.0 <= phi(P * (1 + 1e-6))
    assert P > P0


def test_momentum_support_bound_report(small_history):
    out = diag.momentum_support_bound(small_history)
    assert out["ceiling_ok"]
    assert out["self_consistency_ok"]
    assert out["field_bound_violations"] == []
    assert out["measured_P_final"] <= out["momentum_ceiling"]


def test_l43_bound_check(small_history):
    out = diag.l43_bound_check(small_history)
    assert out["ok"]
    assert out["max_norm"] <= out["bound"]


def test_lq_invariant():
    parts = ParticleSet(r=np.array([0.5, 0.7]), w=np.array([0.1, -0.1]),
                        q=np.array([0.01, 0.02]), weight=np.array([2.0, 3.0]),
                        f_value=np.array([0.5, 0.25]))
    assert diag.lq_invariant(parts, 1.0) == pytest.approx(5.0)
    assert diag.lq_invariant(parts, 2.0) == pytest.approx(2.0 * 0.5 + 3.0 * 0.25)
    with pytest.raises(ValueError):
        diag.lq_invariant(parts, 0.5)
    empty = ParticleSet(*(np.empty(0) for _ in range(5)))
    assert diag.lq_invariant(empty, 2.0) == 0.0
