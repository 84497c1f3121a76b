"""Quadrilateral meshes with optional quadratic (curved) boundary faces.

Topology stores node coordinates, cell corner (and optional mid-edge) node
ids, and faces with a left/right cell convention: the unit normal points
from the left cell to the right cell, outward on boundary faces.  Geometry
caches Gauss-point data per face and exact monomial integrals per cell so
that reconstruction and flux assembly never re-derive coordinates.
"""

import hashlib
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from . import quadrature as q

# boundary tag codes
INTERIOR = 0
WALL_ADIABATIC = 1
WALL_ISOTHERMAL = 2
SLIP = 3
FARFIELD = 4
OUTFLOW = 5
PERIODIC = 6

TAG_NAMES = {
    INTERIOR: "interior",
    WALL_ADIABATIC: "wall_adiabatic",
    WALL_ISOTHERMAL: "wall_isothermal",
    SLIP: "slip",
    FARFIELD: "farfield",
    OUTFLOW: "outflow",
    PERIODIC: "periodic",
}
TAG_CODES = {v: k for k, v in TAG_NAMES.items()}

WALL_TAGS = (WALL_ADIABATIC, WALL_ISOTHERMAL)


class MeshError(ValueError):
    pass


@dataclass
class MeshTopology:
    nodes: np.ndarray          # (N, 2)
    cell_corners: np.ndarray   # (C, 4) node ids, counterclockwise
    cell_mids: np.ndarray      # (C, 4) mid-edge node ids, -1 if straight
    face_nodes: np.ndarray     # (F, 2) node ids a, b
    face_mid: np.ndarray       # (F,) mid node id or -1
    face_left: np.ndarray      # (F,) owning cell id
    face_right: np.ndarray     # (F,) neighbor cell id or -1 on boundary
    face_tag: np.ndarray       # (F,) tag code
    face_partner: np.ndarray   # (F,) periodic partner face id or -1

    @property
    def n_nodes(self):
        return len(self.nodes)

    @property
    def n_cells(self):
        return len(self.cell_corners)

    @property
    def n_faces(self):
        return len(self.face_nodes)


@dataclass
class FaceGeom:
    ctrl: np.ndarray      # (F, 3, 2) endpoint/endpoint/mid control points
    points: np.ndarray    # (F, ng, 2) Gauss points
    normals: np.ndarray   # (F, ng, 2) unit normals, left -> right
    weights: np.ndarray   # (F, ng), sum to 1 per face
    length: np.ndarray    # (F,) arc length
    curved: np.ndarray    # (F,) bool


@dataclass
class CellGeom:
    mono: np.ndarray      # (C, 6) integrals of x^i y^j per q.MONOMIALS
    volume: np.ndarray    # (C,)
    centroid: np.ndarray  # (C, 2)
    central2: np.ndarray  # (C, 3) cell averages of dx^2, dx dy, dy^2
    dh: np.ndarray        # (C,) characteristic length
    J: np.ndarray         # (C, 2, 2) reference-frame Jacobian
    Jinv: np.ndarray      # (C, 2, 2)


@dataclass
class MeshGeometry:
    faces: FaceGeom
    cells: CellGeom


# ---------------------------------------------------------------------------
# mesh file I/O

def write_mesh(mesh, path):
    lines = ["cgks-mesh v1",
             "nodes %d cells %d faces %d" % (mesh.n_nodes, mesh.n_cells,
                                             mesh.n_faces)]
    for x, y in mesh.nodes:
        lines.append("%.17g %.17g" % (x, y))
    for c in range(mesh.n_cells):
        row = " ".join(str(n) for n in mesh.cell_corners[c])
        if np.any(mesh.cell_mids[c] >= 0):
            row += " " + " ".join(str(n) for n in mesh.cell_mids[c])
        lines.append(row)
    for f in range(mesh.n_faces):
        a, b = mesh.face_nodes[f]
        parts = [str(a), str(b)]
        if mesh.face_mid[f] >= 0:
            parts.append(str(mesh.face_mid[f]))
        parts += [str(mesh.face_left[f]), str(mesh.face_right[f])]
        tag = mesh.face_tag[f]
        if tag == PERIODIC:
            parts.append("periodic:%d" % mesh.face_partner[f])
        else:
            parts.append(TAG_NAMES[tag])
        lines.append(" ".join(parts))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_mesh(path):
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if lines[0] != "cgks-mesh v1":
        raise MeshError("not a cgks mesh file: bad header %r" % lines[0])
    hdr = lines[1].split()
    if hdr[0::2] != ["nodes", "cells", "faces"]:
        raise MeshError("bad counts line %r" % lines[1])
    nn, nc, nf = (int(v) for v in hdr[1::2])
    if len(lines) != 2 + nn + nc + nf:
        raise MeshError("line count mismatch")
    pos = 2
    nodes = np.array([[float(v) for v in lines[pos + i].split()]
                      for i in range(nn)])
    pos += nn
    corners = np.empty((nc, 4), dtype=int)
    mids = np.full((nc, 4), -1, dtype=int)
    for i in range(nc):
        vals = [int(v) for v in lines[pos + i].split()]
        if len(vals) == 4:
            corners[i] = vals
        elif len(vals) == 8:
            corners[i] = vals[:4]
            mids[i] = vals[4:]
        else:
            raise MeshError("cell line needs 4 or 8 node ids")
    pos += nc
    fn = np.empty((nf, 2), dtype=int)
    fm = np.full(nf, -1, dtype=int)
    fl = np.empty(nf, dtype=int)
    fr = np.empty(nf, dtype=int)
    ft = np.empty(nf, dtype=int)
    fp = np.full(nf, -1, dtype=int)
    for i in range(nf):
        parts = lines[pos + i].split()
        if len(parts) == 5:
            a, b, left, right = (int(v) for v in parts[:4])
            mid = -1
        elif len(parts) == 6:
            a, b, mid, left, right = (int(v) for v in parts[:5])
        else:
            raise MeshError("face line needs 5 or 6 fields")
        tag = parts[-1]
        fn[i] = a, b
        fm[i] = mid
        fl[i] = left
        fr[i] = right
        if tag.startswith("periodic:"):
            ft[i] = PERIODIC
            fp[i] = int(tag.split(":", 1)[1])
        elif tag in TAG_CODES:
            ft[i] = TAG_CODES[tag]
        else:
            raise MeshError("unknown boundary tag %r" % tag)
    mesh = MeshTopology(nodes, corners, mids, fn, fm, fl, fr, ft, fp)
    validate_topology(mesh)
    return mesh


def mesh_checksum(mesh):
    h = hashlib.sha256()
    for arr in (mesh.nodes, mesh.cell_corners, mesh.cell_mids,
                mesh.face_nodes, mesh.face_mid, mesh.face_left,
                mesh.face_right, mesh.face_tag, mesh.face_partner):
        h.update(np.ascontiguousarray(arr).tobytes())
    return h.hexdigest()[:16]


def validate_topology(mesh):
    interior = mesh.face_tag == INTERIOR
    if np.any(mesh.face_right[interior] < 0):
        raise MeshError("interior face without a right cell")
    if np.any(mesh.face_right[~interior] >= 0):
        raise MeshError("boundary face with two cells")
    per = np.flatnonzero(mesh.face_tag == PERIODIC)
    for f in per:
        p = mesh.face_partner[f]
        if p < 0 or mesh.face_tag[p] != PERIODIC or mesh.face_partner[p] != f:
            raise MeshError("periodic face %d lacks a matching partner" % f)


# ---------------------------------------------------------------------------
# geometry

_GXI, _GW = np.polynomial.legendre.leggauss(2)
_GXI = 0.5 * (_GXI + 1.0)     # Gauss points on [0, 1]
_GW = 0.5 * _GW


def face_ctrl_points(mesh):
    a = mesh.nodes[mesh.face_nodes[:, 0]]
    b = mesh.nodes[mesh.face_nodes[:, 1]]
    mid = 0.5 * (a + b)
    has_mid = mesh.face_mid >= 0
    mid[has_mid] = mesh.nodes[mesh.face_mid[has_mid]]
    return np.stack([a, b, mid], axis=1)


def build_face_geometry(mesh, n_gauss=2):
    if n_gauss == 2:
        gxi, gw = _GXI, _GW
    else:
        gxi, gw = np.polynomial.legendre.leggauss(n_gauss)
        gxi, gw = 0.5 * (gxi + 1.0), 0.5 * gw
    ctrl = face_ctrl_points(mesh)
    nf = mesh.n_faces
    a, b, mid = ctrl[:, 0], ctrl[:, 1], ctrl[:, 2]
    chord = b - a
    clen = np.hypot(chord[:, 0], chord[:, 1])
    if np.any(clen <= 0):
        raise MeshError("face with coincident endpoints")
    dev = mid - 0.5 * (a + b)
    curved = np.hypot(dev[:, 0], dev[:, 1]) > 1e-13 * clen

    points = a[:, None] + gxi[None, :, None] * chord[:, None]
    tnorm = chord / clen[:, None]
    normals = np.broadcast_to(
        np.stack([tnorm[:, 1], -tnorm[:, 0]], axis=1)[:, None],
        (nf, n_gauss, 2)).copy()
    weights = np.broadcast_to(gw, (nf, n_gauss)).copy()
    length = clen.copy()

    for f in np.flatnonzero(curved):
        cf = ctrl[f]
        speeds = np.empty(n_gauss)
        for k, xi in enumerate(gxi):
            points[f, k] = q.edge_point(cf, xi)
            normals[f, k] = q.edge_normal(cf, xi)
            speeds[k] = np.linalg.norm(q.edge_tangent(cf, xi))
        w = gw * speeds
        # the Gauss-rule arc length keeps length * weights equal to the
        # raw quadrature weights, so boundary integrals of polynomials
        # stay consistent with the quadratic-arc cell moments
        length[f] = w.sum()
        weights[f] = w / w.sum()
    return FaceGeom(ctrl, points, normals, weights, length, curved)


def _straight_cell_moments(corners):
    """Exact monomial integrals over straight-edged quads, vectorized.

    Uses the divergence theorem with x^i y^j = d/dx [x^(i+1) y^j / (i+1)]
    and 2-point Gauss on each edge (exact through cubics).
    """
    xs = corners[:, :, 0]
    ys = corners[:, :, 1]
    xn = np.roll(xs, -1, axis=1)
    yn = np.roll(ys, -1, axis=1)
    out = np.empty((len(corners), 6))
    for m, (i, j) in enumerate(q.MONOMIALS):
        acc = 0.0
        for xi, w in zip(_GXI, _GW):
            x = xs + xi * (xn - xs)
            y = ys + xi * (yn - ys)
            acc = acc + w * x ** (i + 1) * y ** j * (yn - ys)
        out[:, m] = acc.sum(axis=1) / (i + 1)
    return out


def build_cell_geometry(mesh):
    nc = mesh.n_cells
    corners = mesh.nodes[mesh.cell_corners]          # (C, 4, 2)
    has_mid = np.any(mesh.cell_mids >= 0, axis=1)
    mono = _straight_cell_moments(corners)
    for c in np.flatnonzero(has_mid):
        mids = 0.5 * (corners[c] + np.roll(corners[c], -1, axis=0))
        ids = mesh.cell_mids[c]
        mids[ids >= 0] = mesh.nodes[ids[ids >= 0]]
        mono[c] = q.quad_monomial_integrals(corners[c], mids)

    vol = mono[:, 0]
    if np.any(vol <= 0):
        raise q.InvertedCellError("cell with non-positive volume")
    cen = mono[:, 1:3] / vol[:, None]
    x0, y0 = cen[:, 0], cen[:, 1]
    central2 = np.stack([
        mono[:, 3] / vol - x0 * x0,
        mono[:, 4] / vol - x0 * y0,
        mono[:, 5] / vol - y0 * y0], axis=1)

    # reference frame spanned by the 0->1 and 0->3 corner edges
    J = np.empty((nc, 2, 2))
    J[:, :, 0] = corners[:, 1] - corners[:, 0]
    J[:, :, 1] = corners[:, 3] - corners[:, 0]
    det = J[:, 0, 0] * J[:, 1, 1] - J[:, 0, 1] * J[:, 1, 0]
    if np.any(det <= 0):
        raise q.InvertedCellError("cell corners not counterclockwise")
    Jinv = np.empty_like(J)
    Jinv[:, 0, 0] = J[:, 1, 1] / det
    Jinv[:, 0, 1] = -J[:, 0, 1] / det
    Jinv[:, 1, 0] = -J[:, 1, 0] / det
    Jinv[:, 1, 1] = J[:, 0, 0] / det

    # characteristic length: smallest distance between opposite edge midpoints
    em = 0.5 * (corners + np.roll(corners, -1, axis=1))
    d02 = np.linalg.norm(em[:, 0] - em[:, 2], axis=1)
    d13 = np.linalg.norm(em[:, 1] - em[:, 3], axis=1)
    dh = np.minimum(d02, d13)
    return CellGeom(mono, vol, cen, central2, dh, J, Jinv)


def build_geometry(mesh, n_gauss=2):
    faces = build_face_geometry(mesh, n_gauss)
    cells = build_cell_geometry(mesh)
    _check_orientation(mesh, faces, cells)
    return MeshGeometry(faces, cells)


def _check_orientation(mesh, faces, cells):
    mid = faces.points.mean(axis=1)
    nmid = faces.normals.mean(axis=1)
    cl = cells.centroid[mesh.face_left]
    interior = mesh.face_right >= 0
    to = np.where(interior[:, None], cells.centroid[mesh.face_right], mid)
    dot = np.einsum("fi,fi->f", to - cl, nmid)
    if np.any(dot <= 0):
        bad = int(np.argmin(dot))
        raise MeshError("face %d normal does not point left to right" % bad)


# ---------------------------------------------------------------------------
# structured generators

def geometric_spacing(first, total, n):
    """n cell widths starting at `first` whose geometric sum is `total`."""
    if n * first >= total * (1 - 1e-12):
        return np.full(n, total / n)

    def gap(r):
        return first * (r ** n - 1.0) / (r - 1.0) - total

    hi = 1.5
    while gap(hi) < 0:
        hi *= 2.0
    r = brentq(gap, 1.0 + 1e-14, hi, xtol=1e-15)
    w = first * r ** np.arange(n)
    return w * (total / w.sum())


def _structured(nodes, wrap_i=False, periodic_i=False, periodic_j=False,
                tag_imin=FARFIELD, tag_imax=FARFIELD,
                tag_jmin=FARFIELD, tag_jmax=FARFIELD, wall_circle=None):
    """Build topology from a logically rectangular node array.

    nodes has shape (ni+1, nj+1, 2); the (i, j) -> (x, y) map must be
    orientation preserving.  With wrap_i the last node column must equal
    the first and the seam becomes interior faces.
    """
    nodes = np.asarray(nodes, dtype=float)
    ni = nodes.shape[0] - 1
    nj = nodes.shape[1] - 1
    if wrap_i:
        if not np.allclose(nodes[0], nodes[-1], atol=1e-12):
            raise MeshError("wrap_i requires matching first/last columns")
        ncol = ni
    else:
        ncol = ni + 1
    flat = nodes[:ncol].reshape(-1, 2)

    def nid(i, j):
        return (i % ncol) * (nj + 1) + j

    def cid(i, j):
        return (i % ni) * nj + j

    corners = np.empty((ni * nj, 4), dtype=int)
    for i in range(ni):
        for j in range(nj):
            corners[cid(i, j)] = (nid(i, j), nid(i + 1, j),
                                  nid(i + 1, j + 1), nid(i, j + 1))
    mids = np.full((ni * nj, 4), -1, dtype=int)

    fn, fm, fl, fr, ft, fp = [], [], [], [], [], []
    extra_nodes = []

    def add_face(a, b, left, right, tag, mid=-1):
        fn.append((a, b))
        fm.append(mid)
        fl.append(left)
        fr.append(right)
        ft.append(tag)
        fp.append(-1)
        return len(fn) - 1

    def add_node(xy):
        extra_nodes.append(xy)
        return len(flat) + len(extra_nodes) - 1

    def wall_mid(a, b, tag):
        if wall_circle is None or tag not in WALL_TAGS:
            return -1
        cx, cy, R = wall_circle
        chord = 0.5 * (flat[a] + flat[b]) - (cx, cy)
        return add_node((cx, cy) + R * chord / np.linalg.norm(chord))

    # constant-i faces (normal along +i)
    i_lines = range(ni) if wrap_i else range(1, ni)
    for i in i_lines:
        for j in range(nj):
            add_face(nid(i, j), nid(i, j + 1), cid(i - 1, j), cid(i, j),
                     INTERIOR)
    if not wrap_i:
        lo, hi = [], []
        for j in range(nj):
            tag = PERIODIC if periodic_i else tag_imin
            lo.append(add_face(nid(0, j + 1), nid(0, j), cid(0, j), -1, tag))
            tag = PERIODIC if periodic_i else tag_imax
            hi.append(add_face(nid(ni, j), nid(ni, j + 1), cid(ni - 1, j),
                               -1, tag))
        if periodic_i:
            for f, g in zip(lo, hi):
                fp[f], fp[g] = g, f

    # constant-j faces (normal along +j)
    for j in range(1, nj):
        for i in range(ni):
            add_face(nid(i + 1, j), nid(i, j), cid(i, j - 1), cid(i, j),
                     INTERIOR)
    lo, hi = [], []
    for i in range(ni):
        tag = PERIODIC if periodic_j else (
            tag_jmin(i) if callable(tag_jmin) else tag_jmin)
        mid = wall_mid(nid(i, 0), nid(i + 1, 0), tag)
        f = add_face(nid(i, 0), nid(i + 1, 0), cid(i, 0), -1, tag, mid)
        lo.append(f)
        if mid >= 0:
            mids[cid(i, 0), 0] = mid
        tag = PERIODIC if periodic_j else (
            tag_jmax(i) if callable(tag_jmax) else tag_jmax)
        hi.append(add_face(nid(i + 1, nj), nid(i, nj), cid(i, nj - 1), -1,
                           tag))
    if periodic_j:
        for f, g in zip(lo, hi):
            fp[f], fp[g] = g, f

    all_nodes = flat if not extra_nodes else np.vstack([flat, extra_nodes])
    mesh = MeshTopology(all_nodes, corners, mids,
                        np.array(fn, dtype=int), np.array(fm, dtype=int),
                        np.array(fl, dtype=int), np.array(fr, dtype=int),
                        np.array(ft, dtype=int), np.array(fp, dtype=int))
    validate_topology(mesh)
    return mesh


def unit_square(n, periodic=True, tag=FARFIELD):
    x = np.linspace(0.0, 1.0, n + 1)
    nodes = np.stack(np.meshgrid(x, x, indexing="ij"), axis=-1)
    return _structured(nodes, periodic_i=periodic, periodic_j=periodic,
                       tag_imin=tag, tag_imax=tag, tag_jmin=tag, tag_jmax=tag)


def flat_plate(nx_up=20, nx_plate=100, ny=35, wall_h=0.05, lead_dx=0.1,
               x_up=30.0, x_plate=100.0, height=80.0):
    """Boundary-layer mesh: plate on y=0 for x >= 0, symmetry upstream."""
    dx_up = geometric_spacing(lead_dx, x_up, nx_up)
    dx_pl = geometric_spacing(lead_dx, x_plate, nx_plate)
    x = np.concatenate([(-x_up + np.concatenate([[0.0],
                                                 np.cumsum(dx_up[::-1])])),
                        np.cumsum(dx_pl)])
    x[nx_up] = 0.0
    dy = geometric_spacing(wall_h, height, ny)
    y = np.concatenate([[0.0], np.cumsum(dy)])
    nodes = np.stack(np.meshgrid(x, y, indexing="ij"), axis=-1)

    def bottom(i):
        return SLIP if i < nx_up else WALL_ADIABATIC

    return _structured(nodes, tag_imin=FARFIELD, tag_imax=FARFIELD,
                       tag_jmin=bottom, tag_jmax=FARFIELD)


def cylinder_omesh(n_circ_pts, n_rad_pts, wall_h, curved=True,
                   diameter=1.0, outer_diameter=96.0,
                   wall_tag=WALL_ADIABATIC):
    """Full O-mesh around a cylinder centered at the origin."""
    nc = n_circ_pts - 1
    nr = n_rad_pts - 1
    r0 = 0.5 * diameter
    dr = geometric_spacing(wall_h, 0.5 * outer_diameter - r0, nr)
    r = np.concatenate([[r0], r0 + np.cumsum(dr)])
    # clockwise angle sweep keeps the (i, j) map orientation positive
    th = -2.0 * np.pi * np.arange(n_circ_pts) / nc
    nodes = np.stack([np.outer(np.cos(th), r), np.outer(np.sin(th), r)],
                     axis=-1)
    circle = (0.0, 0.0, r0) if curved else None
    return _structured(nodes, wrap_i=True, tag_jmin=wall_tag,
                       tag_jmax=FARFIELD, wall_circle=circle)


def half_cylinder(n_circ_pts, n_rad_pts, wall_h, outer_r=1.25,
                  diameter=1.0, curved=True):
    """Windward half cylinder (flow along +x hits the theta=pi side)."""
    nc = n_circ_pts - 1
    nr = n_rad_pts - 1
    r0 = 0.5 * diameter
    dr = geometric_spacing(wall_h, outer_r - r0, nr)
    r = np.concatenate([[r0], r0 + np.cumsum(dr)])
    th = np.linspace(1.5 * np.pi, 0.5 * np.pi, n_circ_pts)
    nodes = np.stack([np.outer(np.cos(th), r), np.outer(np.sin(th), r)],
                     axis=-1)
    circle = (0.0, 0.0, r0) if curved else None
    return _structured(nodes, tag_imin=OUTFLOW, tag_imax=OUTFLOW,
                       tag_jmin=WALL_ISOTHERMAL, tag_jmax=FARFIELD,
                       wall_circle=circle)


def generate_case_mesh(case_id, **params):
    builders = {
        "unit_square": unit_square,
        "flat_plate": flat_plate,
        "cylinder": cylinder_omesh,
        "half_cylinder": half_cylinder,
    }
    if case_id not in builders:
        raise MeshError("unknown mesh case %r" % case_id)
    try:
        return builders[case_id](**params)
    except TypeError as exc:
        raise MeshError("bad mesh parameters for %s: %s" % (case_id, exc))
