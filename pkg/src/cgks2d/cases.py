"""Built-in verification and validation cases.

Covers the periodic sine-wave accuracy sweep, the laminar flat-plate
boundary layer, steady flow around a circular cylinder at Re = 40, and
hypersonic flow over an isothermal half cylinder, together with the
post-processing that turns solutions into surface quantities.
"""

from dataclasses import dataclass, field

import numpy as np

from . import kinetic as kn
from . import flux as fx
from . import mesh as msh
from . import stepper
from .recon import METHOD_ONESIDED
from .stepper import Solver


class CaseError(ValueError):
    """Invalid case id or parameter combination."""


@dataclass
class CaseSpec:
    case: str
    Ma: float
    Re: float = np.inf
    Pr: float = 1.0
    K: int = kn.DEFAULT_K
    length: float = 1.0            # reference length for Re
    T_wall_ratio: float = None     # T_w / T_inf for isothermal walls
    T_inf_kelvin: float = None     # physical free-stream T (Sutherland)
    method: str = METHOD_ONESIDED
    cfl: float = 0.5
    t_end: float = None            # unsteady end time; None -> steady
    flux_mode: str = "full"
    nonlinear: bool = False
    viscosity_law: str = "constant"
    mesh_params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.Ma <= 0 or self.Re <= 0:
            raise CaseError("Mach and Reynolds numbers must be positive")

    @property
    def gamma(self):
        return kn.gamma_from_K(self.K)

    def free_stream(self):
        g = self.gamma
        rho, p = 1.0, 1.0 / g
        U = self.Ma          # sound speed is 1 at the free stream
        return np.array([rho, rho * U, 0.0,
                         p / (g - 1.0) + 0.5 * rho * U * U])

    @property
    def mu_inf(self):
        if not np.isfinite(self.Re):
            return 0.0
        return self.Ma * self.length / self.Re

    @property
    def T_inf(self):
        return 1.0 / self.gamma   # p_inf / (Rg rho_inf), Rg = 1

    @property
    def T_wall(self):
        if self.T_wall_ratio is None:
            return None
        return self.T_wall_ratio * self.T_inf

    def viscosity(self):
        if self.viscosity_law == "constant" or not np.isfinite(self.Re):
            return stepper.constant_viscosity(self.mu_inf)
        if self.viscosity_law == "sutherland":
            if self.T_inf_kelvin is None:
                raise CaseError("sutherland viscosity needs the physical "
                                "free-stream temperature")
            return stepper.sutherland_viscosity(self.mu_inf,
                                                self.T_inf_kelvin,
                                                self.T_inf)
        raise CaseError("unknown viscosity law %r" % (self.viscosity_law,))


# -- case catalog -------------------------------------------------------------

def make_case(case_id, **overrides):
    defaults = {
        "sine": dict(Ma=1.0, cfl=0.5, t_end=1.0, flux_mode="smooth",
                     mesh_params=dict(n=40)),
        "flat_plate": dict(Ma=0.15, Re=1.0e5, length=100.0, cfl=0.3,
                           flux_mode="smooth",
                           mesh_params=dict(wall_h=0.05)),
        "cylinder_re40": dict(Ma=0.15, Re=40.0, cfl=0.3, flux_mode="smooth",
                              mesh_params=dict(n_circ_pts=61, n_rad_pts=29,
                                               wall_h=1.0 / 24)),
        "hypersonic_cylinder": dict(Ma=8.03, Re=1.835e5, Pr=0.72,
                                    T_wall_ratio=294.44 / 124.94,
                                    T_inf_kelvin=124.94, cfl=0.1,
                                    flux_mode="full", nonlinear=True,
                                    mesh_params=dict(n_circ_pts=101,
                                                     n_rad_pts=29,
                                                     wall_h=1e-3)),
    }
    if case_id not in defaults:
        raise CaseError("unknown case %r (choose from %s)"
                        % (case_id, ", ".join(sorted(defaults))))
    kw = defaults[case_id]
    mp = dict(kw.pop("mesh_params"))
    mp.update(overrides.pop("mesh_params", {}))
    kw.update(overrides)
    return CaseSpec(case=case_id, mesh_params=mp, **kw)


_MESH_BUILDERS = {
    "sine": ("unit_square", {}),
    "flat_plate": ("flat_plate", {}),
    "cylinder_re40": ("cylinder", {}),
    "hypersonic_cylinder": ("half_cylinder", {}),
}


def build_mesh(spec):
    builder, extra = _MESH_BUILDERS[spec.case]
    params = dict(extra)
    params.update(spec.mesh_params)
    mesh = msh.generate_case_mesh(builder, **params)
    return mesh, msh.build_geometry(mesh)


def build_solver(spec, mesh=None, geom=None):
    """Solver plus initial state for a case specification."""
    if mesh is None:
        mesh, geom = build_mesh(spec)
    Winf = spec.free_stream()
    solver = Solver(mesh, geom, method=spec.method,
                    flux_mode=spec.flux_mode, nonlinear=spec.nonlinear,
                    viscosity=spec.viscosity(), Pr=spec.Pr, K=spec.K,
                    farfield=Winf, wall_temperature=spec.T_wall)
    if spec.case == "sine":
        W0 = init_sine_wave(mesh, geom)
    else:
        W0 = np.tile(Winf, (mesh.n_cells, 1))
    solver.set_state(W0)
    return solver


# -- sine-wave accuracy test --------------------------------------------------

def _quad_cell_averages(mesh, geom, func, npts=3):
    """Tensor-Gauss averages of a pointwise field over bilinear quads."""
    x, w = np.polynomial.legendre.leggauss(npts)
    x = 0.5 * (x + 1.0)
    w = 0.5 * w
    c = mesh.nodes[mesh.cell_corners]  # (C, 4, 2)
    acc = 0.0
    for i in range(npts):
        for j in range(npts):
            xi, eta = x[i], x[j]
            N = np.array([(1 - xi) * (1 - eta), xi * (1 - eta),
                          xi * eta, (1 - xi) * eta])
            dNdxi = np.array([-(1 - eta), (1 - eta), eta, -eta])
            dNdeta = np.array([-(1 - xi), -xi, xi, (1 - xi)])
            p = np.einsum("k,ckd->cd", N, c)
            tx = np.einsum("k,ckd->cd", dNdxi, c)
            ty = np.einsum("k,ckd->cd", dNdeta, c)
            det = tx[:, 0] * ty[:, 1] - tx[:, 1] * ty[:, 0]
            vals = func(p[:, 0], p[:, 1])
            acc = acc + (w[i] * w[j] * det)[:, None] * vals
    return acc / geom.cells.volume[:, None]


def sine_field(t=0.0, K=kn.DEFAULT_K):
    g = kn.gamma_from_K(K)

    def func(x, y):
        rho = 1.0 + 0.2 * np.sin(2 * np.pi * (x - t)) \
            * np.sin(2 * np.pi * (y - t))
        one = np.ones_like(rho)
        return np.stack([rho, rho, rho,
                         one / (g - 1.0) + rho], axis=-1)
    return func


def init_sine_wave(mesh, geom):
    return _quad_cell_averages(mesh, geom, sine_field(0.0))


def exact_sine(mesh, geom, t):
    return _quad_cell_averages(mesh, geom, sine_field(t))


def l2_error(W, W_exact, volume):
    d = W[:, 0] - W_exact[:, 0]
    return float(np.sqrt(np.sum(volume * d * d) / np.sum(volume)))


def l2_error_and_order(errors):
    errors = np.asarray(errors, dtype=float)
    orders = np.log2(errors[:-1] / errors[1:])
    return errors, orders


def run_accuracy(ns=(20, 40, 80, 160), t_end=1.0, cfl=0.5, progress=None):
    """Grid-refinement sweep of the advected density wave."""
    errors = []
    for n in ns:
        spec = make_case("sine", cfl=cfl, t_end=t_end,
                         mesh_params=dict(n=n))
        mesh, geom = build_mesh(spec)
        solver = build_solver(spec, mesh, geom)
        solver.run_unsteady(t_end, cfl=cfl)
        err = l2_error(solver.W, exact_sine(mesh, geom, t_end),
                       geom.cells.volume)
        errors.append(err)
        if progress is not None:
            progress(n, err)
    return l2_error_and_order(errors)


# -- surface extraction -------------------------------------------------------

@dataclass
class SurfaceReport:
    arc: np.ndarray           # angle (rad) or x coordinate per wall point
    C_p: np.ndarray
    tau_w: np.ndarray         # normalized tangential velocity gradient
    C_f: np.ndarray
    q_norm: np.ndarray        # normalized wall heat flux (isothermal)
    C_D: float
    C_L: float
    wake_length: float
    wall_mass_flux: float


def _wall_points(solver):
    mask = solver._wall_any
    order = np.argsort(np.arange(solver.n_points)[mask])
    idx = np.flatnonzero(mask)[order]
    return idx


def _velocity_and_gradients(W, gx, gy):
    rho = W[:, 0]
    U = W[:, 1] / rho
    V = W[:, 2] / rho
    dU = np.stack([(gx[:, 1] - U * gx[:, 0]) / rho,
                   (gy[:, 1] - U * gy[:, 0]) / rho], axis=-1)
    dV = np.stack([(gx[:, 2] - V * gx[:, 0]) / rho,
                   (gy[:, 2] - V * gy[:, 0]) / rho], axis=-1)
    return U, V, dU, dV


def wall_surface_data(solver):
    """Reconstructed state and gradients at the wall Gauss points."""
    data = solver.recon.reconstruct(solver.W, solver.Gx, solver.Gy)
    idx = _wall_points(solver)
    W, gx, gy = solver.recon.evaluate(data, solver.pk_cl[idx],
                                      solver.pk_pts[idx])
    return idx, W, gx, gy


def wall_forces(solver, spec):
    """Pressure plus viscous force integral over the wall Gauss points."""
    idx, W, gx, gy = wall_surface_data(solver)
    n = solver.pk_nrm[idx]
    wgt = solver.pk_wgt[idx]
    p = kn.pressure(W, K=solver.K)
    T = p / (solver.Rg * W[:, 0])
    mu = solver.viscosity(T)
    U, V, dU, dV = _velocity_and_gradients(W, gx, gy)
    div = dU[:, 0] + dV[:, 1]
    sxx = -p + mu * (2.0 * dU[:, 0] - 2.0 / 3.0 * div)
    syy = -p + mu * (2.0 * dV[:, 1] - 2.0 / 3.0 * div)
    sxy = mu * (dU[:, 1] + dV[:, 0])
    # traction exerted by the fluid on the body: sigma . m with m the
    # body's outward normal, which is minus the face normal (faces point
    # out of the fluid, into the body)
    fxv = -wgt * (sxx * n[:, 0] + sxy * n[:, 1])
    fyv = -wgt * (sxy * n[:, 0] + syy * n[:, 1])
    return idx, float(fxv.sum()), float(fyv.sum())


def cylinder_postprocess(solver, spec):
    Winf = spec.free_stream()
    U_inf = spec.Ma
    qdyn = 0.5 * Winf[0] * U_inf ** 2
    idx, Fx, Fy = wall_forces(solver, spec)
    C_D = Fx / (qdyn * spec.length)
    C_L = Fy / (qdyn * spec.length)

    _, W, gx, gy = wall_surface_data(solver)
    pts = solver.pk_pts[idx]
    n = solver.pk_nrm[idx]
    theta = np.arctan2(pts[:, 1], pts[:, 0])
    p = kn.pressure(W, K=solver.K)
    C_p = (p - kn.pressure(Winf, K=solver.K)) / qdyn
    U, V, dU, dV = _velocity_and_gradients(W, gx, gy)
    t_hat = np.stack([-n[:, 1], n[:, 0]], axis=-1)
    # wall-normal derivative of the tangential velocity, into the fluid
    dUt_dn = -(t_hat[:, 0] * (dU[:, 0] * n[:, 0] + dU[:, 1] * n[:, 1])
               + t_hat[:, 1] * (dV[:, 0] * n[:, 0] + dV[:, 1] * n[:, 1]))
    tau_w = spec.length / (2.0 * U_inf) * dUt_dn
    T = kn.pressure(W, K=solver.K) / (solver.Rg * W[:, 0])
    C_f = 2.0 * solver.viscosity(T) * dUt_dn / (Winf[0] * U_inf ** 2)
    wake = wake_length(solver, spec)
    order = np.argsort(theta)
    return SurfaceReport(theta[order], C_p[order], tau_w[order],
                         C_f[order], np.zeros_like(theta), C_D, C_L,
                         wake, _last_wall_mass_flux(solver))


def wake_length(solver, spec):
    """Distance from the rear stagnation point to the U zero crossing.

    Samples the cell-center rows adjacent to the downstream symmetry
    line (the flow comes in along +x, so the wake trails behind x > 0).
    """
    cen = solver.geom.cells.centroid
    W = solver.W
    r = np.hypot(cen[:, 0], cen[:, 1])
    behind = cen[:, 0] > 0
    # the two circumferential rows straddling y = 0
    ang = np.abs(np.arctan2(cen[:, 1], cen[:, 0]))
    rows = behind & (ang < np.pi / 2)
    if not np.any(rows):
        return np.nan
    dtheta = np.sort(np.unique(np.round(ang[rows], 10)))
    sel = rows & (ang <= dtheta[0] + 1e-9)
    rr = r[sel]
    uu = (W[sel, 1] / W[sel, 0])
    order = np.argsort(rr)
    rr, uu = rr[order], uu[order]
    # average mirror pairs when both rows are present
    ru, inv = np.unique(np.round(rr, 10), return_inverse=True)
    um = np.zeros_like(ru)
    cnt = np.zeros_like(ru)
    np.add.at(um, inv, uu)
    np.add.at(cnt, inv, 1.0)
    um /= cnt
    sign = um <= 0
    if not sign[0]:
        return 0.0
    k = np.argmax(~sign)
    if k == 0:
        return np.nan   # recirculation extends past the sampled row
    r0, r1 = ru[k - 1], ru[k]
    u0, u1 = um[k - 1], um[k]
    rz = r0 - u0 * (r1 - r0) / (u1 - u0)
    return float(rz - 0.5 * spec.length)


def _last_wall_mass_flux(solver):
    dt = solver.cfl_dt(0.1)
    st = solver._assemble(solver.W, solver.Gx, solver.Gy, dt)
    return st.wall_mass_flux


def blasius_postprocess(solver, spec, stations=(5.0, 10.0, 20.0, 30.0)):
    """Skin friction along the plate and similarity-scaled profiles."""
    idx, W, gx, gy = wall_surface_data(solver)
    pts = solver.pk_pts[idx]
    on_plate = pts[:, 0] > 0
    idx, W, gx, gy = idx[on_plate], W[on_plate], gx[on_plate], gy[on_plate]
    x = pts[on_plate, 0]
    U_inf = spec.Ma
    # wall normal is -y here; dU/dy at the wall
    _, _, dU, _ = _velocity_and_gradients(W, gx, gy)
    T = kn.pressure(W, K=solver.K) / (solver.Rg * W[:, 0])
    tau_wall = solver.viscosity(T) * dU[:, 1]
    C_f = 2.0 * tau_wall / (1.0 * U_inf ** 2)
    Re_x = x / spec.length * spec.Re
    order = np.argsort(x)
    profiles = {}
    cen = solver.geom.cells.centroid
    mu_inf = spec.mu_inf
    for xs in stations:
        col = np.abs(cen[:, 0] - xs)
        pick = np.abs(cen[:, 0] - cen[np.argmin(col), 0]) < 1e-9
        y = cen[pick, 1]
        Wc = solver.W[pick]
        rho = Wc[:, 0]
        U = Wc[:, 1] / rho
        V = Wc[:, 2] / rho
        xcol = cen[pick, 0][0]
        eta = y * np.sqrt(rho * U_inf / (xcol * mu_inf))
        U_s = U / U_inf
        V_s = V * np.sqrt(rho * xcol / (mu_inf * U_inf))
        srt = np.argsort(y)
        profiles[xs] = (eta[srt], U_s[srt], V_s[srt])
    return {
        "x": x[order], "Re_x": Re_x[order], "C_f": C_f[order],
        "C_f_ref": 0.664 / np.sqrt(np.maximum(Re_x[order], 1e-300)),
        "profiles": profiles,
    }


def hypersonic_postprocess(solver, spec):
    """Normalized surface pressure and heat flux on the isothermal wall."""
    idx, W, gx, gy = wall_surface_data(solver)
    pts = solver.pk_pts[idx]
    n = solver.pk_nrm[idx]
    theta = np.arctan2(pts[:, 1], pts[:, 0])
    Winf = spec.free_stream()
    U_inf = spec.Ma
    p = kn.pressure(W, K=solver.K)
    p_norm = p / (0.9209 * Winf[0] * U_inf ** 2)
    C_p = (p - kn.pressure(Winf, K=solver.K)) / (0.5 * Winf[0] * U_inf ** 2)

    # heat flux from the kinetic wall flux's instantaneous energy component
    dt = solver.cfl_dt(spec.cfl)
    WLf = fx.rotate_to_face(W, n)
    gn = n[:, 0:1] * gx + n[:, 1:2] * gy
    gt = -n[:, 1:2] * gx + n[:, 0:1] * gy
    gnf = fx.rotate_to_face(gn, n)
    gtf = fx.rotate_to_face(gt, n)
    pl = kn.pressure(WLf, K=solver.K)
    tau = solver.viscosity(pl / (solver.Rg * WLf[:, 0])) / pl
    res, _ = fx.isothermal_wall_flux(WLf, gnf, gtf, solver.lam_wall, dt,
                                     tau, Pr=solver.Pr, K=solver.K)
    F0, _ = fx.extract_flux_and_derivative(res.F_dt, res.F_half, dt)
    q_norm = np.abs(F0[:, 3]) / (0.003655 * Winf[0] * U_inf ** 3)

    _, Fx, Fy = wall_forces(solver, spec)
    qdyn = 0.5 * Winf[0] * U_inf ** 2
    order = np.argsort(theta)
    return SurfaceReport(theta[order], C_p[order],
                         np.zeros_like(theta), np.zeros_like(theta),
                         q_norm[order], Fx / (qdyn * spec.length),
                         Fy / (qdyn * spec.length), np.nan,
                         _last_wall_mass_flux(solver)), p_norm[order]
