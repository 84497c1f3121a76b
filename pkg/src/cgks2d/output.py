"""Field, surface, and history writers with provenance headers.

All writers are deterministic: cell-index ordering, fixed column order,
and 17-significant-digit floats so that values round-trip exactly.
"""

import os

import numpy as np

from . import kinetic as kn


FMT = "%.17g"


def _provenance(meta):
    parts = ["%s=%s" % (k, meta[k]) for k in sorted(meta)]
    return "cgks2d " + " ".join(parts)


def derived_fields(W, K=kn.DEFAULT_K):
    params, p = kn.cons_to_prim(W, K=K, check=False)
    c = np.sqrt(kn.gamma_from_K(K) * p / params.rho)
    Ma = np.hypot(params.U, params.V) / c
    return {"rho": params.rho, "U": params.U, "V": params.V, "p": p,
            "Ma": Ma}


def write_vtk(path, mesh, W, meta=None, K=kn.DEFAULT_K):
    """Legacy ASCII VTK unstructured grid with cell data."""
    flds = derived_fields(W, K=K)
    with open(path, "w") as fh:
        fh.write("# vtk DataFile Version 3.0\n")
        fh.write(_provenance(meta or {})[:255] + "\n")
        fh.write("ASCII\nDATASET UNSTRUCTURED_GRID\n")
        fh.write("POINTS %d double\n" % len(mesh.nodes))
        for x, y in mesh.nodes:
            fh.write((FMT + " " + FMT + " 0\n") % (x, y))
        C = mesh.n_cells
        fh.write("CELLS %d %d\n" % (C, 5 * C))
        for corners in mesh.cell_corners:
            fh.write("4 %d %d %d %d\n" % tuple(corners))
        fh.write("CELL_TYPES %d\n" % C)
        fh.write("9\n" * C)
        fh.write("CELL_DATA %d\n" % C)
        for name, vals in flds.items():
            fh.write("SCALARS %s double 1\nLOOKUP_TABLE default\n" % name)
            for v in vals:
                fh.write((FMT + "\n") % v)


def write_csv(path, mesh, geom, W, meta=None, K=kn.DEFAULT_K):
    flds = derived_fields(W, K=K)
    names = list(flds)
    with open(path, "w") as fh:
        fh.write("# " + _provenance(meta or {}) + "\n")
        fh.write("x,y," + ",".join(names) + "\n")
        cen = geom.cells.centroid
        for c in range(mesh.n_cells):
            row = [cen[c, 0], cen[c, 1]] + [flds[n][c] for n in names]
            fh.write(",".join(FMT % v for v in row) + "\n")


def read_csv(path):
    data = np.loadtxt(path, delimiter=",", skiprows=2)
    with open(path) as fh:
        fh.readline()
        names = fh.readline().strip().split(",")
    return names, np.atleast_2d(data)


class HistoryWriter:
    """Appends one CSV row per diagnostic interval."""

    COLUMNS = ("step", "t", "dt", "res_rho", "wall_mass_flux",
               "C_D", "C_L")

    def __init__(self, path, meta=None):
        self.path = path
        fresh = not os.path.exists(path)
        self.fh = open(path, "a")
        if fresh:
            self.fh.write("# " + _provenance(meta or {}) + "\n")
            self.fh.write(",".join(self.COLUMNS) + "\n")
            self.fh.flush()

    def write(self, **row):
        vals = [row[c] for c in self.COLUMNS]
        self.fh.write("%d," % vals[0]
                      + ",".join(FMT % v for v in vals[1:]) + "\n")
        self.fh.flush()

    def close(self):
        self.fh.close()


def write_surface_report(path, report, meta=None, arc_name="theta"):
    with open(path, "w") as fh:
        fh.write("# " + _provenance(meta or {}) + "\n")
        fh.write("# C_D=%s C_L=%s wake_length=%s wall_mass_flux=%s\n"
                 % (FMT % report.C_D, FMT % report.C_L,
                    FMT % report.wake_length,
                    FMT % report.wall_mass_flux))
        fh.write("%s,C_p,tau_w,C_f,q_norm\n" % arc_name)
        for k in range(len(report.arc)):
            fh.write(",".join(FMT % v for v in
                              (report.arc[k], report.C_p[k],
                               report.tau_w[k], report.C_f[k],
                               report.q_norm[k])) + "\n")
