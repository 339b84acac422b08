"""Shell deposition of particle moments and the radial electric field solve.

In spherical symmetry the magnetic field vanishes and the Maxwell system
collapses to a single radial quadrature:

    E_r(v, r) = (1/r^2) * integral_0^r (rho + j.k)(v, r') r'^2 dr'.

Units follow div E = rho, so no 4 pi appears in the solve.  Moments are
node densities on a uniform shell grid; deposition is cloud-in-cell and
conservative: the node masses sum exactly to the particle weights.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ShellGrid:
    """Uniform radial grid with node radii 0, dr, ..., r_max."""

    r_max: float
    n_shells: int

    def __post_init__(self):
        if self.r_max <= 0.0 or self.n_shells < 2:
            raise ValueError("need r_max > 0 and n_shells >= 2")

    @property
    def dr(self) -> float:
        return self.r_max / self.n_shells

    @property
    def edges(self) -> np.ndarray:
        return np.linspace(0.0, self.r_max, self.n_shells + 1)

    @property
    def node_volumes(self) -> np.ndarray:
        """Control volume of each node; sums to the ball volume."""
        dr = self.dr
        lo = np.maximum(self.edges - 0.5 * dr, 0.0)
        hi = np.minimum(self.edges + 0.5 * dr, self.r_max)
        return (4.0 * np.pi / 3.0) * (hi**3 - lo**3)


@dataclass(frozen=True)
class MomentProfiles:
    """Node densities of the four scalar moments.

    g_plus  = rho + j.k            (sources the field; non-negative)
    g_minus = rho - j.k
    h_plus  = kinetic part of e + p-flux.k  (the p0-moment; non-negative)
    h_minus = kinetic part of e - p-flux.k
    """

    grid: ShellGrid
    g_plus: np.ndarray
    g_minus: np.ndarray
    h_plus: np.ndarray
    h_minus: np.ndarray


@dataclass(frozen=True)
class RadialFieldProfile:
    """Cumulative source integral I(r) on the nodes and E_r = I / r^2."""

    grid: ShellGrid
    I: np.ndarray
    E: np.ndarray


def deposit(parts, grid: ShellGrid) -> MomentProfiles:
    """Cloud-in-cell deposition of the four moments onto the shell grid.

    Per-particle node contributions (omega = weight):
      g_plus  <- omega
      g_minus <- omega (1 - phat.k) / (1 + phat.k)
      h_plus  <- omega gamma
      h_minus <- omega (gamma - w) / (1 + phat.k)
    """
    n_nodes = grid.n_shells + 1
    sums = np.zeros((4, n_nodes))
    if len(parts) > 0:
        r = parts.r
        if np.any(r >= grid.r_max) or np.any(r < 0.0):
            i = int(np.argmax((r >= grid.r_max) | (r < 0.0)))
            raise ValueError(
                f"particle {i} at r={r[i]:.6g} outside shell grid "
                f"[0, {grid.r_max:g}); enlarge r_max")
        gamma = parts.gamma()
        one_plus = 1.0 + parts.w / gamma
        one_minus = 1.0 - parts.w / gamma
        omega = parts.weight
        payloads = (
            omega,
            omega * one_minus / one_plus,
            omega * gamma,
            omega * (gamma - parts.w) / one_plus,
        )
        s = r / grid.dr
        j = np.minimum(s.astype(int), grid.n_shells - 1)
        frac = s - j
        for row, payload in enumerate(payloads):
            np.add.at(sums[row], j, payload * (1.0 - frac))
            np.add.at(sums[row], j + 1, payload * frac)

    vol = grid.node_volumes
    g_plus, g_minus, h_plus, h_minus = sums / vol
    return MomentProfiles(grid=grid, g_plus=g_plus, g_minus=g_minus,
                          h_plus=h_plus, h_minus=h_minus)


def cumulative_source(grid: ShellGrid, g: np.ndarray) -> np.ndarray:
    """Trapezoid cumulative integral I(r_j) = int_0^{r_j} g r'^2 dr'."""
    edges = grid.edges
    integrand = g * edges**2
    I = np.zeros_like(integrand)
    I[1:] = np.cumsum(0.5 * grid.dr * (integrand[:-1] + integrand[1:]))
    return I


def solve_field(profiles: MomentProfiles,
                grid: ShellGrid | None = None) -> RadialFieldProfile:
    """Radial field from g_plus: E_r(r_j) = I(r_j) / r_j^2, E_r(0) = 0."""
    grid = grid or profiles.grid
    g = profiles.g_plus
    if np.any(~np.isfinite(g)):
        raise ValueError("non-finite g_plus passed to field solve")
    if np.any(g < -1e-12 * max(1.0, float(np.max(np.abs(g))))):
        raise ValueError("negative g_plus: moment invariant violated upstream")
    I = cumulative_source(grid, g)
    E = np.zeros_like(I)
    E[1:] = I[1:] / grid.edges[1:] ** 2
    return RadialFieldProfile(grid=grid, I=I, E=E)


def eval_field(profile: RadialFieldProfile, r) -> np.ndarray:
    """E_r at arbitrary radii: linear interpolation of I(r), then / r^2.

    Returns 0 at r = 0.  Satisfies |E_r(r)| <= N / r^2 with
    N = 4 pi I(r_max) the past-cone mass.
    """
    r = np.asarray(r, dtype=float)
    scalar = (r.ndim == 0)
    r = np.atleast_1d(r)
    grid = profile.grid
    if np.any(r < 0.0) or np.any(r > grid.r_max * (1 + 1e-12)):
        raise ValueError("field evaluation outside [0, r_max]")
    I = np.interp(r, grid.edges, profile.I)
    out = np.zeros_like(r)
    pos = r > 0.0
    out[pos] = I[pos] / r[pos] ** 2
    return float(out[0]) if scalar else out
