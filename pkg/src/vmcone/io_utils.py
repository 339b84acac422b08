"""CSV / JSON / binary emission and reloading of run artifacts.

All floats are written with %.17g so that re-reading reproduces the
in-memory doubles bit-exactly; identical configurations therefore produce
byte-identical output files.
"""

from __future__ import annotations

import json
import os

import numpy as np

from .radial_field import ShellGrid
from .phase_model import ParticleSet
from .cone_evolver import SliceHistory
from . import cone_diagnostics as diag

FMT = "%.17g"

SERIES_COLUMNS = ("v", "N_wedge", "M_wedge", "N_vee", "M_vee",
                  "N_slice", "M_slice", "P_wedge", "R_max", "R_min")


def _fmt(x) -> str:
    return FMT % float(x)


def _write_csv(path, header, rows):
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(x) for x in row) + "\n")


def emit_series(history: SliceHistory, path) -> None:
    """Scalar series CSV with the fixed column order of SERIES_COLUMNS.

    The shifted functionals (N_vee, M_vee, N_slice, M_slice) are only
    defined where the recorded history completes the cone integrals; rows
    outside those windows carry nan.
    """
    n = len(history.vs)
    cols = {
        "v": history.vs,
        "N_wedge": history.N_wedge,
        "M_wedge": history.M_wedge,
        "P_wedge": history.P_wedge,
        "R_max": history.R_slice_max,
        "R_min": history.R_min_run,
    }
    for key in ("N_vee", "M_vee", "N_slice", "M_slice"):
        filled = np.full(n, np.nan)
        try:
            vs_w, vals, _ = diag.functional_series(history, key)
            filled[:len(vals)] = vals
        except ValueError:
            pass
        cols[key] = filled
    rows = zip(*(cols[c] for c in SERIES_COLUMNS))
    _write_csv(path, SERIES_COLUMNS, rows)


def emit_history(history: SliceHistory, directory) -> None:
    """Write the full run record: profiles, series, probe fluxes, final
    particles and metadata."""
    os.makedirs(directory, exist_ok=True)
    join = lambda name: os.path.join(directory, name)

    emit_series(history, join("series.csv"))

    header = ("v", "r", "g_plus", "g_minus", "h_plus", "h_minus", "E_r")
    edges = history.grid.edges
    with open(join("profiles.csv"), "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for i, v in enumerate(history.vs):
            vtxt = _fmt(v)
            gp, gm = history.g_plus[i], history.g_minus[i]
            hp, hm = history.h_plus[i], history.h_minus[i]
            E = history.E[i]
            for j in range(edges.size):
                fh.write(",".join((vtxt, _fmt(edges[j]), _fmt(gp[j]),
                                   _fmt(gm[j]), _fmt(hp[j]), _fmt(hm[j]),
                                   _fmt(E[j]))) + "\n")

    flux_header = (["v"]
                   + [f"flux_j_r{k}" for k in range(history.probe_radii.size)]
                   + [f"flux_p_r{k}" for k in range(history.probe_radii.size)])
    rows = ([v] + list(fj) + list(fp) for v, fj, fp in
            zip(history.vs, history.flux_j, history.flux_p))
    _write_csv(join("fluxes.csv"), flux_header, rows)

    parts = history.particles_final
    if parts is not None:
        _write_csv(join("particles.csv"),
                   ("r", "w", "q", "weight", "f_value"),
                   zip(parts.r, parts.w, parts.q, parts.weight, parts.f_value))

    meta = {
        "r_max": history.grid.r_max,
        "n_shells": history.grid.n_shells,
        "R0": history.R0,
        "F": history.F,
        "f_inf_norm": history.f_inf_norm,
        "dv": history.dv,
        "probe_radii": [float(r) for r in history.probe_radii],
        "r_turn_violations": history.r_turn_violations,
        "min_dw": history.min_dw,
    }
    with open(join("meta.json"), "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_history(directory) -> SliceHistory:
    """Reconstruct a SliceHistory from an emitted run directory."""
    join = lambda name: os.path.join(directory, name)
    with open(join("meta.json")) as fh:
        meta = json.load(fh)
    grid = ShellGrid(r_max=meta["r_max"], n_shells=meta["n_shells"])
    n_nodes = grid.n_shells + 1

    prof = np.loadtxt(join("profiles.csv"), delimiter=",", skiprows=1)
    n_slices = prof.shape[0] // n_nodes
    shaped = prof.reshape(n_slices, n_nodes, 7)
    vs = shaped[:, 0, 0]

    series = np.loadtxt(join("series.csv"), delimiter=",", skiprows=1)
    flux = np.loadtxt(join("fluxes.csv"), delimiter=",", skiprows=1,
                      ndmin=2)
    n_probes = len(meta["probe_radii"])

    parts = None
    ppath = join("particles.csv")
    if os.path.exists(ppath):
        data = np.loadtxt(ppath, delimiter=",", skiprows=1, ndmin=2)
        if data.size:
            parts = ParticleSet(*(data[:, i].copy() for i in range(5)))

    return SliceHistory(
        grid=grid, vs=vs,
        g_plus=shaped[:, :, 2], g_minus=shaped[:, :, 3],
        h_plus=shaped[:, :, 4], h_minus=shaped[:, :, 5],
        E=shaped[:, :, 6],
        I=np.zeros_like(shaped[:, :, 6]),
        N_wedge=series[:, 1], M_wedge=series[:, 2],
        P_wedge=series[:, 7], R_slice_max=series[:, 8],
        R_min_run=series[:, 9],
        R_slice_min=np.full(n_slices, np.nan),
        probe_radii=np.array(meta["probe_radii"]),
        flux_j=flux[:, 1:1 + n_probes],
        flux_p=flux[:, 1 + n_probes:1 + 2 * n_probes],
        R0=meta["R0"], F=meta["F"], f_inf_norm=meta["f_inf_norm"],
        dv=meta["dv"],
        r_turn_violations=meta["r_turn_violations"],
        min_dw=meta["min_dw"],
        particles_initial=None, particles_final=parts,
    )


def emit_report(report: dict, path) -> None:
    """Structured report: one record per check plus a summary line."""
    with open(path, "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# binary grid-file format for the 3D constraint audit

GRID_MAGIC = b"VMCONE-GRID-1\n"


def save_grid(grid, path) -> None:
    """Self-describing binary field set: magic, one JSON header line, then
    little-endian float64 node-major (C-order) arrays E, B, rho, j."""
    header = {
        "n": grid.n,
        "extent": grid.extent,
        "r_cut": grid.r_cut,
        "dtype": "<f8",
        "order": "C",
        "arrays": ["E", "B", "rho", "j"],
    }
    with open(path, "wb") as fh:
        fh.write(GRID_MAGIC)
        fh.write((json.dumps(header, sort_keys=True) + "\n").encode())
        for name in header["arrays"]:
            arr = np.ascontiguousarray(getattr(grid, name), dtype="<f8")
            fh.write(arr.tobytes())


def load_grid(path):
    from .constraint_audit import GriddedFieldSet

    with open(path, "rb") as fh:
        magic = fh.read(len(GRID_MAGIC))
        if magic != GRID_MAGIC:
            raise ValueError(f"{path}: not a vmcone grid file")
        header = json.loads(fh.readline().decode())
        n = int(header["n"])
        shapes = {"E": (n, n, n, 3), "B": (n, n, n, 3),
                  "rho": (n, n, n), "j": (n, n, n, 3)}
        arrays = {}
        for name in header["arrays"]:
            shape = shapes[name]
            count = int(np.prod(shape))
            buf = fh.read(count * 8)
            if len(buf) != count * 8:
                raise ValueError(f"{path}: truncated array {name!r}")
            arrays[name] = np.frombuffer(buf, dtype="<f8").reshape(shape).copy()
    return GriddedFieldSet(n=n, extent=float(header["extent"]),
                           r_cut=float(header["r_cut"]), **arrays)
