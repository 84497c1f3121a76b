"""Compact spatial reconstruction on quadrilateral meshes.

Each cell carries its conserved averages and average gradients.  A quadratic
polynomial over a zero-mean basis is solved per cell in its reference frame:
the neighbor cell-average conditions (plus wall rows for one-sided boundary
cells) are hard equality constraints, the neighbor gradient conditions are
fit in least squares through a null-space elimination.  A discontinuity
feedback factor optionally replaces the quadratic with a limited linear
polynomial near shocks.

Wall handling comes in three flavors:
  I   - boundary cells fall back to a Green-Gauss linear polynomial,
  II  - mirrored ghost cells complete the quadratic stencil,
  III - one-sided quadratic with exact line-averaged wall constraints
        (works on curved faces; isothermal walls pin the wall density
        through the reconstructed energy).
"""

import numpy as np

from . import kinetic as kn
from . import mesh as msh
from . import quadrature as q

METHOD_GG = "I"
METHOD_GHOST = "II"
METHOD_ONESIDED = "III"

# ghost kinds
_G_NOSLIP = 0
_G_SLIP = 1
_G_FARFIELD = 2
_G_OUTFLOW = 3


class ReconError(RuntimeError):
    pass


def _lin(const, cx, cy):
    return np.array([const, cx, cy])


def _lin_prod(a, b):
    """Product of two linear forms as a 6-coefficient quadratic."""
    return np.array([a[0] * b[0],
                     a[0] * b[1] + a[1] * b[0],
                     a[0] * b[2] + a[2] * b[0],
                     a[1] * b[1],
                     a[1] * b[2] + a[2] * b[1],
                     a[2] * b[2]])


def basis_phys_coeffs(centroid, Jinv, ref2):
    """The five zero-mean basis functions as physical quadratics.

    Returns (5, 6) coefficients over [1, x, y, x^2, xy, y^2] for
    phi = (xi, eta, xi^2 - <xi^2>, xi*eta - <xi eta>, eta^2 - <eta^2>)
    with (xi, eta) = Jinv (x - centroid).
    """
    x0, y0 = centroid
    xi = _lin(-Jinv[0, 0] * x0 - Jinv[0, 1] * y0, Jinv[0, 0], Jinv[0, 1])
    eta = _lin(-Jinv[1, 0] * x0 - Jinv[1, 1] * y0, Jinv[1, 0], Jinv[1, 1])
    rows = np.zeros((5, 6))
    rows[0, :3] = xi
    rows[1, :3] = eta
    rows[2] = _lin_prod(xi, xi)
    rows[3] = _lin_prod(xi, eta)
    rows[4] = _lin_prod(eta, eta)
    rows[2, 0] -= ref2[0]
    rows[3, 0] -= ref2[1]
    rows[4, 0] -= ref2[2]
    return rows


def _poly_grad_at(coeffs, x, y):
    """Gradient of 6-coefficient quadratics at a point; coeffs (..., 6)."""
    gx = coeffs[..., 1] + 2 * coeffs[..., 3] * x + coeffs[..., 4] * y
    gy = coeffs[..., 2] + coeffs[..., 4] * x + 2 * coeffs[..., 5] * y
    return gx, gy


def _translate_mono(mono, t):
    """Monomial integrals of a cell translated by t."""
    tx, ty = t
    v, ix, iy, ixx, ixy, iyy = mono
    return np.array([
        v,
        ix + tx * v,
        iy + ty * v,
        ixx + 2 * tx * ix + tx * tx * v,
        ixy + tx * iy + ty * ix + tx * ty * v,
        iyy + 2 * ty * iy + ty * ty * v])


def _reflect_matrix(a, b):
    """Reflection across the line through points a and b."""
    t = b - a
    t = t / np.linalg.norm(t)
    return 2.0 * np.outer(t, t) - np.eye(2)


def df_alpha(pl, pr, Ul, Vl, Ur, Vr, cl, cr, nx, ny):
    """Discontinuity feedback factor from two-sided point states."""
    dp = np.abs(pl - pr)
    man_l = (Ul * nx + Vl * ny) / cl
    man_r = (Ur * nx + Vr * ny) / cr
    mat_l = (-Ul * ny + Vl * nx) / cl
    mat_r = (-Ur * ny + Vr * nx) / cr
    with np.errstate(over="ignore"):
        A = dp / pl + dp / pr + (man_l - man_r) ** 2 + (mat_l - mat_r) ** 2
        A = np.minimum(np.nan_to_num(A, nan=1e150, posinf=1e150), 1e150)
        return 1.0 / (1.0 + A * A)


def _cls_operators(Hrows, Grows):
    """Equality-constrained least squares, precomputed as linear maps.

    Solves min ||G a - s|| subject to H a = h and returns (Ah, As) with
    a = Ah h + As s.  Hard constraints are eliminated through the null
    space of H; if H already determines a (rank 5), the soft rows drop out.
    """
    H = np.asarray(Hrows, dtype=float)
    G = np.asarray(Grows, dtype=float)
    nh = H.shape[0]
    U, S, Vt = np.linalg.svd(H)
    tol = max(H.shape) * np.finfo(float).eps * (S[0] if len(S) else 1.0)
    rank = int(np.sum(S > tol))
    Hp = np.linalg.pinv(H)
    if rank >= 5:
        return Hp, np.zeros((5, G.shape[0]))
    N = Vt[rank:].T                      # (5, 5-rank)
    GN = G @ N
    GNp = np.linalg.pinv(GN)
    As = N @ GNp
    Ah = (np.eye(5) - As @ G) @ Hp
    return Ah, As


class ReconData:
    """Per-stage reconstruction result."""

    def __init__(self, means, coeffs, alpha_c=None, limited=None):
        self.means = means        # (C, 4)
        self.coeffs = coeffs      # (C, 5, 4) reference-frame coefficients
        self.alpha_c = alpha_c    # (C,) or None
        self.limited = limited    # (C,) bool or None


class Reconstructor:
    def __init__(self, mesh, geom, method=METHOD_ONESIDED, nonlinear=False,
                 theta=0.9, wall_temperature=None, Rg=1.0, K=kn.DEFAULT_K,
                 farfield=None):
        if method not in (METHOD_GG, METHOD_GHOST, METHOD_ONESIDED):
            raise ReconError("unknown wall method %r" % (method,))
        self.mesh = mesh
        self.geom = geom
        self.method = method
        self.nonlinear = nonlinear
        self.theta = theta
        self.K = K
        self.Rg = Rg
        self.wall_temperature = wall_temperature
        self.gamma = kn.gamma_from_K(K)
        self.farfield = (None if farfield is None
                         else np.asarray(farfield, dtype=float))

        C = mesh.n_cells
        cells = geom.cells
        # reference-frame second moments <xi^2>, <xi eta>, <eta^2>
        c2 = np.empty((C, 2, 2))
        c2[:, 0, 0] = cells.central2[:, 0]
        c2[:, 0, 1] = c2[:, 1, 0] = cells.central2[:, 1]
        c2[:, 1, 1] = cells.central2[:, 2]
        r2 = np.einsum("cij,cjk,clk->cil", cells.Jinv, c2, cells.Jinv)
        self.ref2 = np.stack([r2[:, 0, 0], r2[:, 0, 1], r2[:, 1, 1]], axis=1)

        self._build_adjacency()
        self._build_ghosts()
        self._build_operators()
        self._build_green_gauss()

    # -- setup ------------------------------------------------------------

    def _build_adjacency(self):
        mesh = self.mesh
        self.cell_faces = [[] for _ in range(mesh.n_cells)]
        for f in range(mesh.n_faces):
            self.cell_faces[mesh.face_left[f]].append(f)
            if mesh.face_right[f] >= 0:
                self.cell_faces[mesh.face_right[f]].append(f)

    def _needs_ghost(self, tag):
        if tag in (msh.SLIP, msh.FARFIELD, msh.OUTFLOW):
            return True
        if tag in msh.WALL_TAGS:
            return self.method in (METHOD_GG, METHOD_GHOST)
        return False

    def _build_ghosts(self):
        mesh, geom = self.mesh, self.geom
        kinds = {msh.SLIP: _G_SLIP, msh.FARFIELD: _G_FARFIELD,
                 msh.OUTFLOW: _G_OUTFLOW, msh.WALL_ADIABATIC: _G_NOSLIP,
                 msh.WALL_ISOTHERMAL: _G_NOSLIP}
        src, kind, refl = [], [], []
        gmono, gcen = [], []
        self.face_ghost = np.full(mesh.n_faces, -1, dtype=int)
        for f in range(mesh.n_faces):
            tag = mesh.face_tag[f]
            if tag in (msh.INTERIOR, msh.PERIODIC) or not self._needs_ghost(tag):
                continue
            c = mesh.face_left[f]
            a = mesh.nodes[mesh.face_nodes[f, 0]]
            b = mesh.nodes[mesh.face_nodes[f, 1]]
            S = _reflect_matrix(a, b)
            corners = mesh.nodes[mesh.cell_corners[c]]
            gc = (corners - a) @ S.T + a
            mono = msh._straight_cell_moments(gc[None, ::-1])[0]
            self.face_ghost[f] = len(src)
            src.append(c)
            kind.append(kinds[tag])
            refl.append(S)
            gmono.append(mono)
            gcen.append(mono[1:3] / mono[0])
        self.n_ghosts = len(src)
        self.ghost_src = np.array(src, dtype=int)
        self.ghost_kind = np.array(kind, dtype=int)
        self.ghost_refl = (np.array(refl) if refl
                           else np.zeros((0, 2, 2)))
        self.ghost_mono = (np.array(gmono) if gmono
                           else np.zeros((0, 6)))
        self.ghost_centroid = (np.array(gcen) if gcen
                               else np.zeros((0, 2)))
        if self.n_ghosts and np.any(self.ghost_kind == _G_FARFIELD) \
                and self.farfield is None:
            raise ReconError("mesh has far-field faces but no free-stream "
                             "state was provided")

    def _neighbor_entry(self, c, f):
        """(data index, shifted mono, shifted centroid) across face f."""
        mesh, cells = self.mesh, self.geom.cells
        tag = mesh.face_tag[f]
        if tag == msh.INTERIOR:
            n = mesh.face_right[f] if mesh.face_left[f] == c \
                else mesh.face_left[f]
            return n, cells.mono[n], cells.centroid[n]
        if tag == msh.PERIODIC:
            p = mesh.face_partner[f]
            n = mesh.face_left[p]
            t = (self.geom.faces.ctrl[f, :2].mean(axis=0)
                 - self.geom.faces.ctrl[p, :2].mean(axis=0))
            return n, _translate_mono(cells.mono[n], t), cells.centroid[n] + t
        g = self.face_ghost[f]
        if g < 0:
            return None
        return mesh.n_cells + g, self.ghost_mono[g], self.ghost_centroid[g]

    def _is_onesided_wall_cell(self, c):
        if self.method != METHOD_ONESIDED:
            return False
        return any(self.mesh.face_tag[f] in msh.WALL_TAGS
                   for f in self.cell_faces[c])

    def _wall_rows(self, c):
        """Exact line-averaged value/normal-gradient rows for cell c."""
        cells = self.geom.cells
        phys = basis_phys_coeffs(cells.centroid[c], cells.Jinv[c],
                                 self.ref2[c])
        vrows, grows = [], []
        for f in self.cell_faces[c]:
            if self.mesh.face_tag[f] not in msh.WALL_TAGS:
                continue
            ctrl = self.geom.faces.ctrl[f]
            vrows.append([q.line_average(ctrl, phys[k])[0]
                          for k in range(5)])
            grows.append([q.line_normal_average(ctrl, phys[k])
                          for k in range(5)])
        return np.array(vrows), np.array(grows)

    def _stencil_rows(self, c, nbrs):
        """Neighbor mean rows (hard) and gradient rows (soft) for cell c."""
        cells = self.geom.cells
        phys = basis_phys_coeffs(cells.centroid[c], cells.Jinv[c],
                                 self.ref2[c])
        J = cells.J[c]
        hard = np.empty((len(nbrs), 5))
        soft = np.empty((2 * len(nbrs), 5))
        for j, (_, mono, cen) in enumerate(nbrs):
            hard[j] = phys @ mono / mono[0]
            gx, gy = _poly_grad_at(phys, cen[0], cen[1])
            soft[2 * j] = J[0, 0] * gx + J[1, 0] * gy
            soft[2 * j + 1] = J[0, 1] * gx + J[1, 1] * gy
        return hard, soft

    def _build_operators(self):
        mesh = self.mesh
        C = mesh.n_cells
        self.onesided = np.array([self._is_onesided_wall_cell(c)
                                  for c in range(C)])
        self.gg_wall = np.zeros(C, dtype=bool)
        if self.method == METHOD_GG:
            for f in np.flatnonzero(np.isin(mesh.face_tag,
                                            msh.WALL_TAGS)):
                self.gg_wall[mesh.face_left[f]] = True

        bulk_ids, bulk_ah, bulk_as, bulk_nbr = [], [], [], []
        wall_groups = {}
        for c in range(C):
            nbrs = []
            for f in self.cell_faces[c]:
                if self.onesided[c] and mesh.face_tag[f] in msh.WALL_TAGS:
                    continue
                entry = self._neighbor_entry(c, f)
                if entry is not None:
                    nbrs.append(entry)
            hard, soft = self._stencil_rows(c, nbrs)
            idx = [e[0] for e in nbrs]
            if not self.onesided[c]:
                if len(nbrs) != 4:
                    raise ReconError("cell %d has %d usable neighbors"
                                     % (c, len(nbrs)))
                Ah, As = _cls_operators(hard, soft)
                bulk_ids.append(c)
                bulk_ah.append(Ah)
                bulk_as.append(As)
                bulk_nbr.append(idx)
                continue
            vrows, grows = self._wall_rows(c)
            key = (len(nbrs), len(vrows))
            AhV, AsV = _cls_operators(np.vstack([hard, vrows]), soft)
            AhN, AsN = _cls_operators(np.vstack([hard, grows]), soft)
            grp = wall_groups.setdefault(key, {
                "cells": [], "nbr": [], "AhV": [], "AsV": [],
                "AhN": [], "AsN": [], "vrows": []})
            grp["cells"].append(c)
            grp["nbr"].append(idx)
            grp["AhV"].append(AhV)
            grp["AsV"].append(AsV)
            grp["AhN"].append(AhN)
            grp["AsN"].append(AsN)
            grp["vrows"].append(vrows)

        self.bulk_cells = np.array(bulk_ids, dtype=int)
        self.bulk_Ah = np.array(bulk_ah) if bulk_ah else np.zeros((0, 5, 4))
        self.bulk_As = np.array(bulk_as) if bulk_as else np.zeros((0, 5, 8))
        self.bulk_nbr = (np.array(bulk_nbr, dtype=int) if bulk_nbr
                         else np.zeros((0, 4), dtype=int))
        self.wall_groups = []
        for key, grp in sorted(wall_groups.items()):
            self.wall_groups.append({
                "nn": key[0], "nw": key[1],
                "cells": np.array(grp["cells"], dtype=int),
                "nbr": np.array(grp["nbr"], dtype=int),
                "AhV": np.array(grp["AhV"]),
                "AsV": np.array(grp["AsV"]),
                "AhN": np.array(grp["AhN"]),
                "AsN": np.array(grp["AsN"]),
                "vrows": np.array(grp["vrows"]),
            })

    def _build_green_gauss(self):
        """Scatter tables for Green-Gauss average gradients."""
        mesh, geom = self.mesh, self.geom
        nf = mesh.n_faces
        n = geom.faces.normals.mean(axis=1)
        w = geom.faces.length[:, None] * n          # (F, 2) outward of left
        self._gg_left = mesh.face_left
        self._gg_right = mesh.face_right
        self._gg_w = w
        self._gg_interior = mesh.face_right >= 0
        # right-side neighbor data index per face (ghost/periodic aware)
        nbr = np.full(nf, -1, dtype=int)
        for f in range(nf):
            tag = mesh.face_tag[f]
            if tag == msh.INTERIOR:
                nbr[f] = mesh.face_right[f]
            elif tag == msh.PERIODIC:
                nbr[f] = mesh.face_left[mesh.face_partner[f]]
            elif self.face_ghost[f] >= 0:
                nbr[f] = mesh.n_cells + self.face_ghost[f]
        self._gg_nbr = nbr

    # -- per-stage data ---------------------------------------------------

    def extended_means(self, W, Gx=None, Gy=None):
        """Append ghost-cell averages (and gradients) to the cell arrays."""
        C = self.mesh.n_cells
        out_w = np.empty((C + self.n_ghosts, 4))
        out_w[:C] = W
        if Gx is not None:
            out_gx = np.empty_like(out_w)
            out_gy = np.empty_like(out_w)
            out_gx[:C] = Gx
            out_gy[:C] = Gy
        if self.n_ghosts == 0:
            return (out_w, out_gx, out_gy) if Gx is not None else out_w

        src = self.ghost_src
        kind = self.ghost_kind
        S = self.ghost_refl
        gw = W[src].copy()
        noslip = kind == _G_NOSLIP
        slip = kind == _G_SLIP
        far = kind == _G_FARFIELD
        gw[noslip, 1:3] *= -1.0
        if np.any(slip):
            gw[slip, 1:3] = np.einsum("gij,gj->gi", S[slip],
                                      W[src[slip], 1:3])
        if np.any(far):
            gw[far] = self.farfield
        out_w[C:] = gw
        if Gx is None:
            return out_w

        g = np.stack([Gx[src], Gy[src]], axis=-1)       # (G, 4, 2)
        gg = np.einsum("gvd,gde->gve", g, S)            # scalar even mirror
        gg[noslip, 1:3] *= -1.0                         # odd momenta
        if np.any(slip):
            gg[slip, 1:3] = np.einsum("gij,gjd->gid", S[slip],
                                      gg[slip, 1:3])
        if np.any(far):
            gg[far] = 0.0
        out_gx[C:] = gg[..., 0]
        out_gy[C:] = gg[..., 1]
        out_w[C:] = gw
        return out_w, out_gx, out_gy

    def green_gauss(self, W):
        """Cell-averaged gradients from the divergence identity."""
        mesh = self.mesh
        C = mesh.n_cells
        ext = self.extended_means(W)
        qface = np.empty((mesh.n_faces, 4))
        has = self._gg_nbr >= 0
        qface[has] = 0.5 * (W[mesh.face_left[has]]
                            + ext[self._gg_nbr[has]])
        # one-sided wall faces: non-slip values (zero momentum)
        bare = ~has
        qface[bare] = W[mesh.face_left[bare]]
        qface[bare, 1:3] = 0.0
        gx = np.zeros((C, 4))
        gy = np.zeros((C, 4))
        contrib_x = self._gg_w[:, 0:1] * qface
        contrib_y = self._gg_w[:, 1:2] * qface
        np.add.at(gx, self._gg_left, contrib_x)
        np.add.at(gy, self._gg_left, contrib_y)
        it = self._gg_interior
        np.add.at(gx, self._gg_right[it], -contrib_x[it])
        np.add.at(gy, self._gg_right[it], -contrib_y[it])
        vol = self.geom.cells.volume[:, None]
        return gx / vol, gy / vol

    def _bulk_coeffs(self, extW, extGx, extGy):
        C = self.mesh.n_cells
        coeffs = np.zeros((C, 5, 4))
        if len(self.bulk_cells) == 0:
            return coeffs
        ids = self.bulk_cells
        nbr = self.bulk_nbr
        h = extW[nbr] - extW[ids][:, None]              # (n, 4, 4vars)
        J = self.geom.cells.J[ids]
        gx = extGx[nbr]
        gy = extGy[nbr]
        s = np.empty((len(ids), 8, 4))
        s[:, 0::2] = (J[:, None, 0, 0:1] * gx + J[:, None, 1, 0:1] * gy)
        s[:, 1::2] = (J[:, None, 0, 1:2] * gx + J[:, None, 1, 1:2] * gy)
        coeffs[ids] = (np.einsum("nkh,nhv->nkv", self.bulk_Ah, h)
                       + np.einsum("nks,nsv->nkv", self.bulk_As, s))
        return coeffs

    def _wall_coeffs(self, coeffs, extW, extGx, extGy):
        gamma = self.gamma
        for grp in self.wall_groups:
            ids = grp["cells"]
            nbr = grp["nbr"]
            nn, nw = grp["nn"], grp["nw"]
            J = self.geom.cells.J[ids]
            gx = extGx[nbr]
            gy = extGy[nbr]
            s = np.empty((len(ids), 2 * nn, 4))
            s[:, 0::2] = (J[:, None, 0, 0:1] * gx + J[:, None, 1, 0:1] * gy)
            s[:, 1::2] = (J[:, None, 0, 1:2] * gx + J[:, None, 1, 1:2] * gy)
            dmean = extW[nbr] - extW[ids][:, None]      # (n, nn, 4)

            # momenta: wall line-average forced to zero
            hV = np.concatenate(
                [dmean[:, :, 1:3],
                 -np.repeat(extW[ids][:, None, 1:3], nw, axis=1)], axis=1)
            aV = (np.einsum("nkh,nhv->nkv", grp["AhV"], hV)
                  + np.einsum("nks,nsv->nkv", grp["AsV"], s[:, :, 1:3]))
            coeffs[ids, :, 1:3] = aV

            # energy: zero normal gradient at the wall
            hE = np.concatenate([dmean[:, :, 3:4],
                                 np.zeros((len(ids), nw, 1))], axis=1)
            aE = (np.einsum("nkh,nhv->nkv", grp["AhN"], hE)
                  + np.einsum("nks,nsv->nkv", grp["AsN"], s[:, :, 3:4]))
            coeffs[ids, :, 3:4] = aE

            tags = np.array([[self.mesh.face_tag[f]
                              for f in self.cell_faces[c]
                              if self.mesh.face_tag[f] in msh.WALL_TAGS]
                             for c in ids])
            iso = tags == msh.WALL_ISOTHERMAL                 # (n, nw)
            if not np.any(iso):
                # density: zero normal gradient (adiabatic)
                hR = np.concatenate([dmean[:, :, 0:1],
                                     np.zeros((len(ids), nw, 1))], axis=1)
                aR = (np.einsum("nkh,nhv->nkv", grp["AhN"], hR)
                      + np.einsum("nks,nsv->nkv", grp["AsN"], s[:, :, 0:1]))
                coeffs[ids, :, 0:1] = aR
                continue
            if not np.all(iso):
                raise ReconError("mixed wall types on one cell "
                                 "are not supported")
            if self.wall_temperature is None:
                raise ReconError("isothermal wall requires a wall "
                                 "temperature")
            # wall energy from the constrained reconstruction, then the
            # state equation pins the wall density line-average
            rhoE_w = (extW[ids][:, None, 3]
                      + np.einsum("nwk,nk->nw", grp["vrows"],
                                  aE[:, :, 0]))
            p_w = (gamma - 1.0) * rhoE_w
            if np.any(p_w <= 0):
                raise kn.PositivityError("non-positive wall pressure in "
                                         "isothermal reconstruction")
            rho_w = p_w / (self.Rg * self.wall_temperature)
            hR = np.concatenate(
                [dmean[:, :, 0:1],
                 (rho_w - extW[ids][:, None, 0])[:, :, None]], axis=1)
            aR = (np.einsum("nkh,nhv->nkv", grp["AhV"], hR)
                  + np.einsum("nks,nsv->nkv", grp["AsV"], s[:, :, 0:1]))
            coeffs[ids, :, 0:1] = aR

    def reconstruct(self, W, Gx, Gy):
        extW, extGx, extGy = self.extended_means(W, Gx, Gy)
        coeffs = self._bulk_coeffs(extW, extGx, extGy)
        if self.wall_groups:
            self._wall_coeffs(coeffs, extW, extGx, extGy)
        data = ReconData(np.array(W, copy=True), coeffs)

        J = self.geom.cells.J
        if self.method == METHOD_GG and np.any(self.gg_wall):
            ggx, ggy = self.green_gauss(W)
            ids = np.flatnonzero(self.gg_wall)
            lin = np.zeros((len(ids), 5, 4))
            lin[:, 0] = (J[ids, 0, 0, None] * ggx[ids]
                         + J[ids, 1, 0, None] * ggy[ids])
            lin[:, 1] = (J[ids, 0, 1, None] * ggx[ids]
                         + J[ids, 1, 1, None] * ggy[ids])
            coeffs[ids] = lin

        if self.nonlinear:
            alpha_c = self._alpha_product(data)
            limited = alpha_c < self.theta
            data.alpha_c = alpha_c
            data.limited = limited
            if np.any(limited):
                ggx, ggy = self.green_gauss(W)
                ids = np.flatnonzero(limited)
                scale = alpha_c[ids, None]
                gx = ggx[ids] * scale
                gy = ggy[ids] * scale
                lin = np.zeros((len(ids), 5, 4))
                lin[:, 0] = (J[ids, 0, 0, None] * gx
                             + J[ids, 1, 0, None] * gy)
                lin[:, 1] = (J[ids, 0, 1, None] * gx
                             + J[ids, 1, 1, None] * gy)
                coeffs[ids] = lin
        return data

    def _alpha_product(self, data):
        """Per-cell product of Gauss-point feedback factors."""
        mesh, geom = self.mesh, self.geom
        C = mesh.n_cells
        two = (mesh.face_tag == msh.INTERIOR) | (mesh.face_tag ==
                                                 msh.PERIODIC)
        faces = np.flatnonzero(two)
        left = mesh.face_left[faces]
        right = np.where(mesh.face_tag[faces] == msh.PERIODIC,
                         mesh.face_left[mesh.face_partner[faces]],
                         mesh.face_right[faces])
        ng = geom.faces.points.shape[1]
        pts = geom.faces.points[faces].reshape(-1, 2)
        nrm = geom.faces.normals[faces].reshape(-1, 2)
        lcells = np.repeat(left, ng)
        rcells = np.repeat(right, ng)
        WL, _, _ = self.evaluate(data, lcells, pts)
        # periodic right cells see the face at their own (shifted) location
        rpts = pts.copy()
        per = mesh.face_tag[faces] == msh.PERIODIC
        if np.any(per):
            part = mesh.face_partner[faces[per]]
            shift = (geom.faces.ctrl[part, :2].mean(axis=1)
                     - geom.faces.ctrl[faces[per], :2].mean(axis=1))
            rpts[np.repeat(per, ng)] += np.repeat(shift, ng, axis=0)
        WR, _, _ = self.evaluate(data, rcells, rpts)

        def prim(Wp):
            # runaway extrapolated states are fine here: they produce a
            # huge jump indicator and hence a vanishing alpha
            with np.errstate(over="ignore", invalid="ignore"):
                rho = np.maximum(Wp[:, 0], 1e-300)
                U = Wp[:, 1] / rho
                V = Wp[:, 2] / rho
                p = (self.gamma - 1.0) * (Wp[:, 3]
                                          - 0.5 * rho * (U * U + V * V))
                p = np.nan_to_num(p, nan=1e-300, posinf=1e300)
                p = np.maximum(p, 1e-300)
                c = np.sqrt(self.gamma * p / rho)
            return p, U, V, c

        pl, Ul, Vl, cl = prim(WL)
        pr, Ur, Vr, cr = prim(WR)
        al = df_alpha(pl, pr, Ul, Vl, Ur, Vr, cl, cr, nrm[:, 0], nrm[:, 1])
        alpha = np.ones(C)
        np.multiply.at(alpha, lcells, al)
        np.multiply.at(alpha, rcells, al)
        return alpha

    # -- evaluation --------------------------------------------------------

    def evaluate(self, data, cells, points):
        """Point values and physical gradients of the cell polynomials."""
        cells = np.asarray(cells)
        points = np.asarray(points)
        cg = self.geom.cells
        d = points - cg.centroid[cells]
        Jinv = cg.Jinv[cells]
        xi = Jinv[:, 0, 0] * d[:, 0] + Jinv[:, 0, 1] * d[:, 1]
        eta = Jinv[:, 1, 0] * d[:, 0] + Jinv[:, 1, 1] * d[:, 1]
        r2 = self.ref2[cells]
        phi = np.stack([xi, eta, xi * xi - r2[:, 0],
                        xi * eta - r2[:, 1], eta * eta - r2[:, 2]], axis=1)
        a = data.coeffs[cells]                          # (n, 5, 4)
        W = data.means[cells] + np.einsum("nk,nkv->nv", phi, a)
        # reference-frame gradient of the basis
        dxi = np.stack([np.ones_like(xi), np.zeros_like(xi), 2 * xi, eta,
                        np.zeros_like(xi)], axis=1)
        deta = np.stack([np.zeros_like(xi), np.ones_like(xi),
                         np.zeros_like(xi), xi, 2 * eta], axis=1)
        gxi = np.einsum("nk,nkv->nv", dxi, a)
        geta = np.einsum("nk,nkv->nv", deta, a)
        gx = Jinv[:, 0, 0, None] * gxi + Jinv[:, 1, 0, None] * geta
        gy = Jinv[:, 0, 1, None] * gxi + Jinv[:, 1, 1, None] * geta
        return W, gx, gy
