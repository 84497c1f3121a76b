"""Finite-volume update: residual assembly and two-stage fourth-order time
integration with direct evolution of cell-averaged gradients.

Each stage reconstructs, evaluates both-sided states at the face Gauss
points, solves the time-dependent interface flux, and reduces cell
residuals L = -(1/|Omega|) sum |Gamma| sum_k w_k F.  The flux solver also
returns evolved interface states, which close the divergence-theorem update
of the cell-averaged gradients.
"""

from dataclasses import dataclass, field

import numpy as np

from . import flux as fx
from . import kinetic as kn
from . import mesh as msh
from .recon import Reconstructor, METHOD_ONESIDED


class NumericalError(RuntimeError):
    """Positivity loss or non-finite update; the run cannot continue."""


# face handling kinds
_TWO_SIDED = 0
_WALL_MIRROR = 1
_WALL_KINETIC = 2
_SLIP = 3
_FARFIELD = 4
_OUTFLOW = 5


def constant_viscosity(mu):
    def law(T):
        return np.full_like(np.asarray(T, dtype=float), mu)
    return law


def sutherland_viscosity(mu_inf, T_inf_phys, T_inf_solver,
                         T_ref=273.15, S=110.4):
    """Sutherland law mapped into solver units.

    mu_inf is the free-stream viscosity in solver units; T_inf_phys the
    free-stream temperature in Kelvin; T_inf_solver its value in solver
    units (p_inf / (Rg rho_inf)).
    """
    mu_r = mu_inf / ((T_inf_phys / T_ref) ** 1.5
                     * (T_ref + S) / (T_inf_phys + S))

    def law(T):
        Tp = np.asarray(T, dtype=float) * (T_inf_phys / T_inf_solver)
        return mu_r * (Tp / T_ref) ** 1.5 * (T_ref + S) / (Tp + S)
    return law


def cfl_dt(dh, umag, c, nu, cfl):
    """Time step from convective and viscous stability bounds."""
    conv = dh / (umag + c)
    visc = np.where(nu > 0, dh * dh / (4.0 * np.maximum(nu, 1e-300)),
                    np.inf)
    return cfl * np.min(np.minimum(conv, visc))


@dataclass
class StageResult:
    L: np.ndarray            # (C, 4) net flux
    L1: np.ndarray           # (C, 4) its time derivative
    W_half_pts: np.ndarray   # (P, 4) evolved interface states at dt/2
    wall_mass_flux: float    # time-integrated mass flux through walls / dt
    events: int              # positivity fallbacks at reconstruction points


@dataclass
class History:
    steps: list = field(default_factory=list)

    def append(self, **kw):
        self.steps.append(kw)

    def column(self, key):
        return np.array([s[key] for s in self.steps])


class Solver:
    def __init__(self, mesh, geom, method=METHOD_ONESIDED, flux_mode="full",
                 nonlinear=False, theta=0.9, viscosity=None, Pr=1.0,
                 K=kn.DEFAULT_K, Rg=1.0, C_num=1.0, farfield=None,
                 wall_temperature=None):
        self.mesh = mesh
        self.geom = geom
        self.method = method
        self.flux_mode = flux_mode
        self.Pr = Pr
        self.K = K
        self.Rg = Rg
        self.C_num = C_num
        self.gamma = kn.gamma_from_K(K)
        self.viscosity = viscosity or constant_viscosity(0.0)
        self.wall_temperature = wall_temperature
        self.lam_wall = (None if wall_temperature is None
                         else 1.0 / (2.0 * Rg * wall_temperature))
        self.farfield = (None if farfield is None
                         else np.asarray(farfield, dtype=float))
        self.recon = Reconstructor(mesh, geom, method=method,
                                   nonlinear=nonlinear, theta=theta,
                                   wall_temperature=wall_temperature,
                                   Rg=Rg, K=K, farfield=self.farfield)
        self._build_face_plan()
        self.W = None
        self.Gx = None
        self.Gy = None
        self.t = 0.0
        self.nstep = 0
        self.positivity_events = 0

    # -- face plan ----------------------------------------------------------

    def _build_face_plan(self):
        mesh, geom = self.mesh, self.geom
        kinds = []
        keep = []
        right = []
        shift = []
        for f in range(mesh.n_faces):
            tag = mesh.face_tag[f]
            if tag == msh.PERIODIC:
                p = mesh.face_partner[f]
                if p < f:
                    continue
                keep.append(f)
                kinds.append(_TWO_SIDED)
                right.append(mesh.face_left[p])
                shift.append(geom.faces.ctrl[p, :2].mean(axis=0)
                             - geom.faces.ctrl[f, :2].mean(axis=0))
                continue
            keep.append(f)
            shift.append((0.0, 0.0))
            if tag == msh.INTERIOR:
                kinds.append(_TWO_SIDED)
                right.append(mesh.face_right[f])
            elif tag == msh.WALL_ADIABATIC:
                kinds.append(_WALL_MIRROR)
                right.append(-1)
            elif tag == msh.WALL_ISOTHERMAL:
                kinds.append(_WALL_KINETIC)
                right.append(-1)
            elif tag == msh.SLIP:
                kinds.append(_SLIP)
                right.append(-1)
            elif tag == msh.FARFIELD:
                kinds.append(_FARFIELD)
                right.append(-1)
            elif tag == msh.OUTFLOW:
                kinds.append(_OUTFLOW)
                right.append(-1)
            else:
                raise NumericalError("unhandled face tag %d" % tag)
        keep = np.array(keep, dtype=int)
        kinds = np.array(kinds, dtype=int)
        right = np.array(right, dtype=int)
        shift = np.array(shift, dtype=float)

        if np.any(kinds == _WALL_KINETIC) and self.lam_wall is None:
            raise NumericalError("isothermal wall faces require a wall "
                                 "temperature")
        if np.any(kinds == _FARFIELD) and self.farfield is None:
            raise NumericalError("far-field faces require a free-stream "
                                 "state")

        ng = geom.faces.points.shape[1]
        self._ng = ng
        # flattened per-Gauss-point arrays
        self.pk_face = np.repeat(keep, ng)
        self.pk_kind = np.repeat(kinds, ng)
        self.pk_cl = np.repeat(mesh.face_left[keep], ng)
        self.pk_cr = np.repeat(right, ng)
        self.pk_pts = geom.faces.points[keep].reshape(-1, 2)
        self.pk_rpts = self.pk_pts + np.repeat(shift, ng, axis=0)
        self.pk_nrm = geom.faces.normals[keep].reshape(-1, 2)
        self.pk_wgt = (geom.faces.length[keep, None]
                       * geom.faces.weights[keep]).reshape(-1)
        self.n_points = len(self.pk_face)
        self._two = self.pk_kind == _TWO_SIDED
        self._wall_any = np.isin(self.pk_kind, (_WALL_MIRROR, _WALL_KINETIC))

    # -- initialization ------------------------------------------------------

    def set_state(self, W, Gx=None, Gy=None, t=0.0):
        self.W = np.array(W, dtype=float)
        if Gx is None:
            Gx, Gy = self.recon.green_gauss(self.W)
        self.Gx = np.array(Gx, dtype=float)
        self.Gy = np.array(Gy, dtype=float)
        self.t = t
        self.nstep = 0

    # -- per-stage assembly ---------------------------------------------------

    def _point_states(self, data):
        """Two-sided face-frame states and directional gradients."""
        WL, gxL, gyL = self.recon.evaluate(data, self.pk_cl, self.pk_pts)
        events = self._positivity_fallback(WL, gxL, gyL, self.pk_cl, data)
        n = self.pk_nrm
        gnL = n[:, 0:1] * gxL + n[:, 1:2] * gyL
        gtL = -n[:, 1:2] * gxL + n[:, 0:1] * gyL
        WLf = fx.rotate_to_face(WL, n)
        gnLf = fx.rotate_to_face(gnL, n)
        gtLf = fx.rotate_to_face(gtL, n)

        WRf = np.empty_like(WLf)
        gnRf = np.zeros_like(WLf)
        gtRf = np.zeros_like(WLf)
        two = self._two
        if np.any(two):
            WR, gxR, gyR = self.recon.evaluate(data, self.pk_cr[two],
                                               self.pk_rpts[two])
            events += self._positivity_fallback(WR, gxR, gyR,
                                                self.pk_cr[two], data)
            nt = n[two]
            gnR = nt[:, 0:1] * gxR + nt[:, 1:2] * gyR
            gtR = -nt[:, 1:2] * gxR + nt[:, 0:1] * gyR
            WRf[two] = fx.rotate_to_face(WR, nt)
            gnRf[two] = fx.rotate_to_face(gnR, nt)
            gtRf[two] = fx.rotate_to_face(gtR, nt)

        # boundary closures in the face frame
        for mask, odd in ((self.pk_kind == _WALL_MIRROR, (1, 2)),
                          (self.pk_kind == _SLIP, (1,))):
            if not np.any(mask):
                continue
            WRf[mask] = WLf[mask]
            gnRf[mask] = -gnLf[mask]
            gtRf[mask] = gtLf[mask]
            for v in odd:
                WRf[mask, v] = -WLf[mask, v]
                gnRf[mask, v] = gnLf[mask, v]
                gtRf[mask, v] = -gtLf[mask, v]

        kinw = self.pk_kind == _WALL_KINETIC
        if np.any(kinw):
            # placeholder only; these points use the kinetic wall flux
            WRf[kinw] = WLf[kinw]
        far = self.pk_kind == _FARFIELD
        if np.any(far):
            WRf[far] = self._riemann_state(WLf[far])
        out = self.pk_kind == _OUTFLOW
        if np.any(out):
            WRf[out] = WLf[out]
            gnRf[out] = gnLf[out]
            gtRf[out] = gtLf[out]
        return WLf, gnLf, gtLf, WRf, gnRf, gtRf, events

    def _positivity_fallback(self, W, gx, gy, cells, data):
        rho = W[:, 0]
        e = W[:, 3] - 0.5 * (W[:, 1] ** 2 + W[:, 2] ** 2) / np.maximum(
            rho, 1e-300)
        bad = (rho <= 0) | (e <= 0) | ~np.isfinite(rho) | ~np.isfinite(e)
        if np.any(bad):
            W[bad] = data.means[cells[bad]]
            gx[bad] = 0.0
            gy[bad] = 0.0
        return int(np.count_nonzero(bad))

    def _riemann_state(self, WLf):
        """Characteristic far-field state in the face frame (n outward)."""
        g = self.gamma
        Winf = fx.rotate_to_face(
            np.broadcast_to(self.farfield, WLf.shape),
            self.pk_nrm[self.pk_kind == _FARFIELD])
        pi, p_in = kn.cons_to_prim(WLf, K=self.K, check=False)
        po, p_out = kn.cons_to_prim(Winf, K=self.K, check=False)
        ci = np.sqrt(g * p_in / pi.rho)
        co = np.sqrt(g * p_out / po.rho)
        rp = pi.U + 2.0 * ci / (g - 1.0)
        rm = po.U - 2.0 * co / (g - 1.0)
        ub = 0.5 * (rp + rm)
        cb = 0.25 * (g - 1.0) * (rp - rm)
        cb = np.maximum(cb, 1e-12)
        outgoing = ub > 0.0
        s = np.where(outgoing, p_in / pi.rho ** g, p_out / po.rho ** g)
        vt = np.where(outgoing, pi.V, po.V)
        rho = (cb * cb / (g * s)) ** (1.0 / (g - 1.0))
        p = rho * cb * cb / g
        Wb = np.stack([rho, rho * ub, rho * vt,
                       p / (g - 1.0) + 0.5 * rho * (ub * ub + vt * vt)],
                      axis=-1)
        # supersonic: fully one-sided
        sup_out = pi.U - ci > 0
        sup_in = po.U + co < 0
        Wb[sup_out] = WLf[sup_out]
        Wb[sup_in] = Winf[sup_in]
        return Wb

    def _assemble(self, W, Gx, Gy, dt):
        data = self.recon.reconstruct(W, Gx, Gy)
        WLf, gnLf, gtLf, WRf, gnRf, gtRf, events = self._point_states(data)

        g = self.gamma
        pl = kn.pressure(WLf, K=self.K)
        pr = kn.pressure(WRf, K=self.K)
        p_c = 0.5 * (pl + pr)
        rho_c = 0.5 * (WLf[:, 0] + WRf[:, 0])
        T_c = p_c / (self.Rg * rho_c)
        mu = self.viscosity(T_c)
        tau, tau_n = fx.collision_times(mu, p_c, pl, pr, dt, C=self.C_num)

        F_dt = np.empty((self.n_points, 4))
        F_half = np.empty_like(F_dt)
        W_half = np.empty_like(F_dt)

        kin = self.pk_kind == _WALL_KINETIC
        gas = ~kin
        if np.any(gas):
            args = (WLf[gas], WRf[gas], gnLf[gas], gnRf[gas], gtLf[gas],
                    gtRf[gas], dt)
            if self.flux_mode == "smooth":
                res = fx.flux_smooth(*args, tau[gas], Pr=self.Pr, K=self.K)
            else:
                res = fx.flux_full(*args, tau[gas], tau_n[gas], Pr=self.Pr,
                                   K=self.K)
            F_dt[gas] = res.F_dt
            F_half[gas] = res.F_half
            W_half[gas] = res.W_half
        if np.any(kin):
            tau_wall = self.viscosity(
                pl[kin] / (self.Rg * WLf[kin, 0])) / pl[kin]
            res, _ = fx.isothermal_wall_flux(WLf[kin], gnLf[kin], gtLf[kin],
                                             self.lam_wall, dt, tau_wall,
                                             Pr=self.Pr, K=self.K)
            F_dt[kin] = res.F_dt
            F_half[kin] = res.F_half
            W_half[kin] = res.W_half

        wall_mass = float(np.sum(self.pk_wgt[self._wall_any]
                                 * F_dt[self._wall_any, 0]) / dt)

        # evolved states for the gradient update, physical frame
        W_half = W_half.copy()
        W_half[self._wall_any, 1:3] = 0.0
        slip = self.pk_kind == _SLIP
        W_half[slip, 1] = 0.0
        W_half_phys = fx.rotate_from_face(W_half, self.pk_nrm)

        F0, F1 = fx.extract_flux_and_derivative(F_dt, F_half, dt)
        F0 = fx.rotate_from_face(F0, self.pk_nrm)
        F1 = fx.rotate_from_face(F1, self.pk_nrm)

        C = self.mesh.n_cells
        L = np.zeros((C, 4))
        L1 = np.zeros((C, 4))
        contrib0 = self.pk_wgt[:, None] * F0
        contrib1 = self.pk_wgt[:, None] * F1
        np.add.at(L, self.pk_cl, -contrib0)
        np.add.at(L1, self.pk_cl, -contrib1)
        two = self._two
        np.add.at(L, self.pk_cr[two], contrib0[two])
        np.add.at(L1, self.pk_cr[two], contrib1[two])
        vol = self.geom.cells.volume[:, None]
        L /= vol
        L1 /= vol
        return StageResult(L, L1, W_half_phys, wall_mass, events)

    def _gradient_update(self, Wpts):
        C = self.mesh.n_cells
        gx = np.zeros((C, 4))
        gy = np.zeros((C, 4))
        cx = (self.pk_wgt * self.pk_nrm[:, 0])[:, None] * Wpts
        cy = (self.pk_wgt * self.pk_nrm[:, 1])[:, None] * Wpts
        np.add.at(gx, self.pk_cl, cx)
        np.add.at(gy, self.pk_cl, cy)
        two = self._two
        np.add.at(gx, self.pk_cr[two], -cx[two])
        np.add.at(gy, self.pk_cr[two], -cy[two])
        vol = self.geom.cells.volume[:, None]
        return gx / vol, gy / vol

    def _check_state(self, W, where):
        if not np.all(np.isfinite(W)):
            raise NumericalError("non-finite state after %s" % where)
        rho = W[:, 0]
        e = W[:, 3] - 0.5 * (W[:, 1] ** 2 + W[:, 2] ** 2) / np.maximum(
            rho, 1e-300)
        if np.any(rho <= 0) or np.any(e <= 0):
            raise NumericalError("positivity lost after %s" % where)

    # -- time stepping --------------------------------------------------------

    def cfl_dt(self, cfl):
        params, p = kn.cons_to_prim(self.W, K=self.K, check=False)
        c = np.sqrt(self.gamma * p / params.rho)
        umag = np.hypot(params.U, params.V)
        T = p / (self.Rg * params.rho)
        nu = self.viscosity(T) / params.rho
        return cfl_dt(self.geom.cells.dh, umag, c, nu, cfl)

    def step(self, dt):
        st1 = self._assemble(self.W, self.Gx, self.Gy, dt)
        W_half = (self.W + 0.5 * dt * st1.L + 0.125 * dt * dt * st1.L1)
        self._check_state(W_half, "stage 1")
        Gx_h, Gy_h = self._gradient_update(st1.W_half_pts)
        st2 = self._assemble(W_half, Gx_h, Gy_h, dt)
        W_new = (self.W + dt * st1.L
                 + dt * dt / 6.0 * (st1.L1 + 2.0 * st2.L1))
        self._check_state(W_new, "stage 2")
        Gx_n, Gy_n = self._gradient_update(st2.W_half_pts)
        self.W = W_new
        self.Gx, self.Gy = Gx_n, Gy_n
        self.t += dt
        self.nstep += 1
        self.positivity_events += st1.events + st2.events
        return st1

    def run_unsteady(self, t_end, cfl, max_steps=10 ** 7, history=None):
        history = history if history is not None else History()
        while self.t < t_end - 1e-14 and self.nstep < max_steps:
            dt = min(self.cfl_dt(cfl), t_end - self.t)
            st = self.step(dt)
            history.append(step=self.nstep, t=self.t, dt=dt,
                           res_rho=float(np.sqrt(np.mean(st.L[:, 0] ** 2))),
                           wall_mass_flux=st.wall_mass_flux)
        return history

    def run_steady(self, cfl, tol_drop=1e-6, max_steps=200000,
                   history=None, report_every=100, callback=None):
        history = history if history is not None else History()
        res0 = None
        while self.nstep < max_steps:
            dt = self.cfl_dt(cfl)
            st = self.step(dt)
            res = float(np.sqrt(np.mean(st.L[:, 0] ** 2)))
            if res0 is None:
                res0 = max(res, 1e-300)
            if self.nstep % report_every == 0 or res <= tol_drop * res0:
                history.append(step=self.nstep, t=self.t, dt=dt,
                               res_rho=res,
                               wall_mass_flux=st.wall_mass_flux)
                if callback is not None:
                    callback(self, res, res0)
            if res <= tol_drop * res0:
                break
        return history
