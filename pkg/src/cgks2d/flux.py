"""Interface flux evaluation from the time-dependent gas distribution.

All routines work in the local face frame where u is the outward normal
velocity and v the tangential velocity, and are vectorized over a leading
batch axis (one entry per face Gauss point). States are conserved 4-vectors
(..., 4); gradients are directional derivatives of the conserved variables
along the face normal (gn) and tangent (gt).

Each solver returns time-integrated fluxes over [0, dt] and [0, dt/2]
together with the evolved interface state at dt and dt/2; the flux and its
time derivative at t=0 follow from the two time integrals.
"""

from dataclasses import dataclass

import numpy as np

from . import kinetic as kn
from .kinetic import (MomentTable, UNIT_TERMS, POS, NEG, cons_to_prim,
                      project_psi, contract, psi_terms, shift_terms,
                      slopes_from_gradient)


class WallClosureError(RuntimeError):
    """The kinetic isothermal-wall closure produced a non-positive density."""


@dataclass
class FluxResult:
    F_dt: np.ndarray       # integral of F over [0, dt]
    F_half: np.ndarray     # integral of F over [0, dt/2]
    W_dt: np.ndarray       # evolved interface state at t = dt
    W_half: np.ndarray     # evolved interface state at t = dt/2


def rotate_to_face(W, normal):
    """Rotate momentum into (normal, tangential) components."""
    W = np.asarray(W, dtype=float)
    nx, ny = normal[..., 0], normal[..., 1]
    out = W.copy()
    out[..., 1] = nx * W[..., 1] + ny * W[..., 2]
    out[..., 2] = -ny * W[..., 1] + nx * W[..., 2]
    return out


def rotate_from_face(W, normal):
    W = np.asarray(W, dtype=float)
    nx, ny = normal[..., 0], normal[..., 1]
    out = W.copy()
    out[..., 1] = nx * W[..., 1] - ny * W[..., 2]
    out[..., 2] = ny * W[..., 1] + nx * W[..., 2]
    return out


def collision_times(mu, p_center, p_l, p_r, dt, C=1.0):
    """Physical and numerical collision times.

    tau = mu/p at the central interface state; tau_n adds pressure-jump
    dissipation scaled by the time step.
    """
    tau = mu / p_center
    tau_n = tau + C * np.abs(p_l - p_r) / (p_l + p_r) * dt
    return tau, tau_n


def extract_flux_and_derivative(F_dt, F_half, dt):
    """Recover F(0) and dF/dt(0) from the two time-integrated fluxes."""
    F0 = (4.0 * F_half - F_dt) / dt
    Ft = 4.0 * (F_dt - 2.0 * F_half) / (dt * dt)
    return F0, Ft


def prandtl_fix(flux, q, Pr):
    """Energy-flux correction F_rhoE += (1/Pr - 1) q."""
    out = np.array(flux, dtype=float, copy=True)
    out[..., 3] += (1.0 / Pr - 1.0) * q
    return out


def heat_flux_terms(U, V):
    """Term list of (u-U)[(u-U)^2 + (v-V)^2 + xi^2] / 2."""
    U = np.asarray(U, dtype=float)
    V = np.asarray(V, dtype=float)
    one = np.ones_like(U)
    return [(0.5 * one, 3, 0, 0),
            (-1.5 * U, 2, 0, 0),
            (0.5 * (3.0 * U * U + V * V), 1, 0, 0),
            (0.5 * (-U ** 3 - U * V * V), 0, 0, 0),
            (0.5 * one, 1, 2, 0),
            (-V, 1, 1, 0),
            (U * V, 0, 1, 0),
            (-0.5 * U, 0, 2, 0),
            (0.5 * one, 1, 0, 1),
            (-0.5 * U, 0, 0, 1)]


def _mul_terms(t1, t2):
    return [(w1 * w2, a1 + a2, b1 + b2, e1 + e2)
            for (w1, a1, b1, e1) in t1 for (w2, a2, b2, e2) in t2]


def _coeff_axis(c):
    return np.moveaxis(np.asarray(c, dtype=float), -1, 0)


class _Side:
    """Per-side expansion: Maxwellian table, spatial slope and time slope."""

    def __init__(self, W, gn, gt, K):
        self.params, self.p = cons_to_prim(W, K=K, check=False)
        self.table = MomentTable(self.params)
        an = slopes_from_gradient(self.params, gn)
        at = slopes_from_gradient(self.params, gt)
        self.au_terms = (psi_terms(_coeff_axis(an), a=1)
                         + psi_terms(_coeff_axis(at), b=1))
        dWdt = -project_psi(self.table, self.au_terms)
        A = slopes_from_gradient(self.params, dWdt)
        self.A_terms = psi_terms(_coeff_axis(A))


def _merge_central(tableL, tableR):
    """Kinetic upwind merge of the two interface Maxwellians."""
    return (project_psi(tableL, UNIT_TERMS, POS)
            + project_psi(tableR, UNIT_TERMS, NEG))


def flux_smooth(WL, WR, gnL, gnR, gtL, gtR, dt, tau, Pr=1.0, K=kn.DEFAULT_K):
    """Smooth-flow GKS flux: f = g^c - tau (a.u + A) g^c + A g^c t."""
    tableL = MomentTable(cons_to_prim(WL, K=K, check=False)[0])
    tableR = MomentTable(cons_to_prim(WR, K=K, check=False)[0])
    Wc = _merge_central(tableL, tableR)
    gn = 0.5 * (np.asarray(gnL) + np.asarray(gnR))
    gt = 0.5 * (np.asarray(gtL) + np.asarray(gtR))
    side = _Side(Wc, gn, gt, K)
    table = side.table
    tau = np.asarray(tau, dtype=float)

    F_euler = project_psi(table, shift_terms(UNIT_TERMS, da=1))
    F_vis = project_psi(table, shift_terms(side.au_terms + side.A_terms,
                                           da=1))
    F_t = project_psi(table, shift_terms(side.A_terms, da=1))
    F0 = F_euler - tau[..., None] * F_vis
    W_t = project_psi(table, side.A_terms)

    def integrated(t_end):
        return F0 * t_end + 0.5 * F_t * t_end * t_end

    F_dt, F_half = integrated(dt), integrated(0.5 * dt)
    W_dt = Wc + dt * W_t
    W_half = Wc + 0.5 * dt * W_t

    if Pr != 1.0:
        qpre = heat_flux_terms(side.params.U, side.params.V)
        q0 = (contract(table, qpre)
              - tau * contract(table, _mul_terms(
                  qpre, side.au_terms + side.A_terms)))
        q1 = contract(table, _mul_terms(qpre, side.A_terms))
        F_dt = prandtl_fix(F_dt, q0 * dt + 0.5 * q1 * dt * dt, Pr)
        F_half = prandtl_fix(F_half, q0 * dt / 2 + 0.125 * q1 * dt * dt, Pr)
    return FluxResult(F_dt, F_half, W_dt, W_half)


def _exp_integrals(dt, tau, tau_n):
    """Exact time integrals over [0, dt] of the six C_i(t) coefficients."""
    tau_n = np.maximum(tau_n, 1e-300)
    E = np.exp(-dt / tau_n)
    ie = tau_n * (1.0 - E)                       # int e^{-t/tau_n}
    ite = tau_n * ie - tau_n * dt * E            # int t e^{-t/tau_n}
    ic1 = dt - ie
    ic2 = ite + tau * ie - tau * dt
    ic3 = 0.5 * dt * dt - tau * dt + tau * ie
    ic4 = ie
    ic5 = -(tau * ie + ite)
    ic6 = -tau * ie
    return ic1, ic2, ic3, ic4, ic5, ic6


def _exp_points(t, tau, tau_n):
    """The six C_i evaluated at time t."""
    tau_n = np.maximum(tau_n, 1e-300)
    E = np.exp(-t / tau_n)
    return (1.0 - E, (t + tau) * E - tau, t - tau + tau * E,
            E, -E * (tau + t), -tau * E)


def flux_full(WL, WR, gnL, gnR, gtL, gtR, dt, tau, tau_n, Pr=1.0,
              K=kn.DEFAULT_K):
    """Full GKS interface flux with upwind-split initial distribution."""
    L = _Side(WL, gnL, gtL, K)
    R = _Side(WR, gnR, gtR, K)
    Wc = _merge_central(L.table, R.table)
    gn = 0.5 * (np.asarray(gnL) + np.asarray(gnR))
    gt = 0.5 * (np.asarray(gtL) + np.asarray(gtR))
    C = _Side(Wc, gn, gt, K)
    tau = np.asarray(tau, dtype=float)
    tau_n = np.asarray(tau_n, dtype=float)

    # the six moment blocks, once with the flux u-prefactor and once without
    def blocks(da):
        return [
            project_psi(C.table, shift_terms(UNIT_TERMS, da=da)),
            project_psi(C.table, shift_terms(C.au_terms, da=da)),
            project_psi(C.table, shift_terms(C.A_terms, da=da)),
            (project_psi(L.table, shift_terms(UNIT_TERMS, da=da), POS)
             + project_psi(R.table, shift_terms(UNIT_TERMS, da=da), NEG)),
            (project_psi(L.table, shift_terms(L.au_terms, da=da), POS)
             + project_psi(R.table, shift_terms(R.au_terms, da=da), NEG)),
            (project_psi(L.table, shift_terms(L.A_terms, da=da), POS)
             + project_psi(R.table, shift_terms(R.A_terms, da=da), NEG)),
        ]

    flux_blocks = blocks(1)
    state_blocks = blocks(0)

    def combine(blks, coeffs):
        return sum(np.asarray(ci)[..., None] * b
                   for ci, b in zip(coeffs, blks))

    F_dt = combine(flux_blocks, _exp_integrals(dt, tau, tau_n))
    F_half = combine(flux_blocks, _exp_integrals(0.5 * dt, tau, tau_n))
    W_dt = combine(state_blocks, _exp_points(dt, tau, tau_n))
    W_half = combine(state_blocks, _exp_points(0.5 * dt, tau, tau_n))

    if Pr != 1.0:
        qpre = heat_flux_terms(C.params.U, C.params.V)
        q_blocks = [
            contract(C.table, qpre),
            contract(C.table, _mul_terms(qpre, C.au_terms)),
            contract(C.table, _mul_terms(qpre, C.A_terms)),
            (contract(L.table, qpre, POS) + contract(R.table, qpre, NEG)),
            (contract(L.table, _mul_terms(qpre, L.au_terms), POS)
             + contract(R.table, _mul_terms(qpre, R.au_terms), NEG)),
            (contract(L.table, _mul_terms(qpre, L.A_terms), POS)
             + contract(R.table, _mul_terms(qpre, R.A_terms), NEG)),
        ]
        q_dt = sum(ci * qb for ci, qb in
                   zip(_exp_integrals(dt, tau, tau_n), q_blocks))
        q_half = sum(ci * qb for ci, qb in
                     zip(_exp_integrals(0.5 * dt, tau, tau_n), q_blocks))
        F_dt = prandtl_fix(F_dt, q_dt, Pr)
        F_half = prandtl_fix(F_half, q_half, Pr)
    return FluxResult(F_dt, F_half, W_dt, W_half)


def isothermal_wall_flux(WL, gnL, gtL, lam_wall, dt, tau, Pr=1.0,
                         K=kn.DEFAULT_K):
    """Kinetic isothermal-wall flux enforcing exact mass no-penetration.

    The fluid is on the left (u > 0 moves into the wall); the outer-side
    distribution is a resting Maxwellian at the wall temperature whose
    density and time slope are closed by zero net mass flux at t = 0 and
    zero mass-flux rate. Returns (FluxResult, wall density).
    """
    L = _Side(WL, gnL, gtL, K)
    tau = np.asarray(tau, dtype=float)
    one = np.ones_like(np.asarray(WL, dtype=float)[..., 0])
    lam_wall = lam_wall * one

    base_terms = [(one, 0, 0, 0)] + kn.scale_terms(
        L.au_terms + L.A_terms, -tau)
    FL0 = project_psi(L.table, shift_terms(base_terms, da=1), POS)
    FL1 = -project_psi(L.table, shift_terms(L.au_terms, da=1), POS)
    WL0 = project_psi(L.table, base_terms, POS)
    WL1 = -project_psi(L.table, L.au_terms, POS)

    wall = MomentTable(kn.MaxwellianParams(one, 0.0 * one, 0.0 * one,
                                           lam_wall, K))
    unitF = project_psi(wall, shift_terms(UNIT_TERMS, da=1), NEG)
    unitW = project_psi(wall, UNIT_TERMS, NEG)
    u1neg = unitF[..., 0]                        # <u>_{u<0} at the wall state
    rho_wall = -FL0[..., 0] / u1neg
    if np.any(rho_wall <= 0.0):
        raise WallClosureError("non-positive wall density in kinetic closure")
    A1 = -FL1[..., 0] / (rho_wall * u1neg)

    FR0 = rho_wall[..., None] * unitF
    FR1 = (rho_wall * A1)[..., None] * unitF
    F0 = FL0 + FR0
    F1 = FL1 + FR1

    def integrated(t_end):
        return F0 * t_end + 0.5 * F1 * t_end * t_end

    F_dt, F_half = integrated(dt), integrated(0.5 * dt)

    def state(t):
        return (WL0 + t * WL1 + rho_wall[..., None] * unitW
                + (rho_wall * A1 * t)[..., None] * unitW)

    W_dt, W_half = state(dt), state(0.5 * dt)

    if Pr != 1.0:
        qpre = heat_flux_terms(0.0 * one, 0.0 * one)
        qL0 = contract(L.table, _mul_terms(qpre, base_terms), POS)
        qL1 = -contract(L.table, _mul_terms(qpre, L.au_terms), POS)
        qR_unit = contract(wall, qpre, NEG)
        q0 = qL0 + rho_wall * qR_unit
        q1 = qL1 + rho_wall * A1 * qR_unit
        F_dt = prandtl_fix(F_dt, q0 * dt + 0.5 * q1 * dt * dt, Pr)
        F_half = prandtl_fix(F_half, q0 * dt / 2 + 0.125 * q1 * dt * dt, Pr)
    return FluxResult(F_dt, F_half, W_dt, W_half), rho_wall
