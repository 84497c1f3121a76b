"""Maxwellian parameterization, velocity-space moments and micro slopes.

Everything here is vectorized: state components may be scalars or arrays of
any common shape; moments and slope coefficients broadcast elementwise.

Distributions that are polynomial corrections of a Maxwellian are handled
through "term lists": a term (coef, a, b, e) stands for coef * u^a v^b xi^(2e)
multiplying the Maxwellian. Moments of term lists are contracted against a
precomputed MomentTable; the u-range can be full, u>0 or u<0.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import erfc

DEFAULT_K = 3          # internal degrees of freedom: diatomic gas in 2D
U_ORDER = 7            # highest u power held in a MomentTable
V_ORDER = 6
XI_ORDER = 3           # highest xi^(2e)

FULL, POS, NEG = "full", "pos", "neg"


class PositivityError(ValueError):
    """Density or internal energy is non-positive."""


def gamma_from_K(K):
    return (K + 4.0) / (K + 2.0)


@dataclass
class MaxwellianParams:
    rho: np.ndarray
    U: np.ndarray
    V: np.ndarray
    lam: np.ndarray
    K: float = DEFAULT_K


def cons_to_prim(W, K=DEFAULT_K, check=True):
    """Conserved (rho, rhoU, rhoV, rhoE) -> MaxwellianParams, pressure.

    W has shape (..., 4). lam = rho/(2p) with p = (gamma-1)(rhoE - rho q^2/2).
    """
    W = np.asarray(W, dtype=float)
    rho = W[..., 0]
    U = W[..., 1] / rho
    V = W[..., 2] / rho
    e_int = W[..., 3] - 0.5 * rho * (U * U + V * V)
    if check and (np.any(rho <= 0.0) or np.any(e_int <= 0.0)):
        raise PositivityError("non-positive density or internal energy")
    lam = (K + 2.0) * rho / (4.0 * e_int)
    p = 2.0 * e_int / (K + 2.0)
    return MaxwellianParams(rho, U, V, lam, K), p


def prim_to_cons(params):
    rho, U, V, lam, K = params.rho, params.U, params.V, params.lam, params.K
    rhoE = 0.5 * rho * (U * U + V * V) + (K + 2.0) * rho / (4.0 * lam)
    return np.stack([rho, rho * U, rho * V, rhoE], axis=-1)


def pressure(W, K=DEFAULT_K):
    W = np.asarray(W, dtype=float)
    e_int = W[..., 3] - 0.5 * (W[..., 1] ** 2 + W[..., 2] ** 2) / W[..., 0]
    return 2.0 * e_int / (K + 2.0)


def sound_speed(W, K=DEFAULT_K):
    return np.sqrt(gamma_from_K(K) * pressure(W, K) / np.asarray(W)[..., 0])


class MomentTable:
    """Normalized Maxwellian moments <u^n> (full and one-sided), <v^m>, <xi^2e>.

    Full u moments satisfy <u^(n+2)> = U <u^(n+1)> + (n+1)/(2 lam) <u^n>;
    the one-sided families satisfy the same recurrence with erfc/Gaussian
    seeds. Negative-side moments are stored as full - positive, so the
    splitting identity holds exactly as computed.
    """

    def __init__(self, params, u_order=U_ORDER, v_order=V_ORDER,
                 xi_order=XI_ORDER):
        rho, U, V, lam, K = (params.rho, params.U, params.V, params.lam,
                             params.K)
        shape = np.broadcast(rho, U, V, lam).shape
        U = np.broadcast_to(U, shape).astype(float)
        V = np.broadcast_to(V, shape).astype(float)
        lam = np.broadcast_to(lam, shape).astype(float)
        self.rho = np.broadcast_to(rho, shape).astype(float)
        self.U, self.V, self.lam, self.K = U, V, lam, K

        half = 0.5 / lam
        u = np.empty((u_order + 1,) + shape)
        u[0] = 1.0
        u[1] = U
        for n in range(2, u_order + 1):
            u[n] = U * u[n - 1] + (n - 1) * half * u[n - 2]
        sq = np.sqrt(lam)
        up = np.empty_like(u)
        up[0] = 0.5 * erfc(-sq * U)
        up[1] = U * up[0] + 0.5 * np.exp(-lam * U * U) / np.sqrt(np.pi * lam)
        for n in range(2, u_order + 1):
            up[n] = U * up[n - 1] + (n - 1) * half * up[n - 2]
        v = np.empty((v_order + 1,) + shape)
        v[0] = 1.0
        v[1] = V
        for n in range(2, v_order + 1):
            v[n] = V * v[n - 1] + (n - 1) * half * v[n - 2]
        xi = np.empty((xi_order + 1,) + shape)
        xi[0] = 1.0
        for e in range(1, xi_order + 1):
            xi[e] = (K + 2 * (e - 1)) * half * xi[e - 1]
        self.u_full, self.u_pos, self.u_neg = u, up, u - up
        self.v_full, self.xi = v, xi

    def u_mom(self, n, rng=FULL):
        if rng == FULL:
            return self.u_full[n]
        if rng == POS:
            return self.u_pos[n]
        return self.u_neg[n]

    def mono(self, a, b, e, rng=FULL):
        """<u^a v^b xi^(2e)> over the requested u-range, normalized by rho."""
        return self.u_mom(a, rng) * self.v_full[b] * self.xi[e]


# ---------------------------------------------------------------------------
# term-list algebra
# ---------------------------------------------------------------------------

def psi_terms(c, a=0, b=0, e=0):
    """Terms of (c1 + c2 u + c3 v + c4 (u^2+v^2+xi^2)/2) * u^a v^b xi^(2e)."""
    c1, c2, c3, c4 = c
    return [(c1, a, b, e), (c2, a + 1, b, e), (c3, a, b + 1, e),
            (0.5 * c4, a + 2, b, e), (0.5 * c4, a, b + 2, e),
            (0.5 * c4, a, b, e + 1)]


def shift_terms(terms, da=0, db=0, de=0):
    return [(w, a + da, b + db, e + de) for (w, a, b, e) in terms]


def scale_terms(terms, f):
    return [(np.asarray(w) * f, a, b, e) for (w, a, b, e) in terms]


def contract(table, terms, rng=FULL):
    """rho * <terms> over the requested u-range."""
    total = 0.0
    for (w, a, b, e) in terms:
        total = total + w * table.mono(a, b, e, rng)
    return table.rho * total


def project_psi(table, terms, rng=FULL):
    """rho * <terms * psi_m>, m = 0..3, stacked on the last axis."""
    out = []
    out.append(contract(table, terms, rng))
    out.append(contract(table, shift_terms(terms, da=1), rng))
    out.append(contract(table, shift_terms(terms, db=1), rng))
    energy = (contract(table, shift_terms(terms, da=2), rng)
              + contract(table, shift_terms(terms, db=2), rng)
              + contract(table, shift_terms(terms, de=1), rng))
    out.append(0.5 * energy)
    return np.stack(out, axis=-1)


UNIT_TERMS = [(1.0, 0, 0, 0)]


def conserved_moments(table, rng=FULL):
    return project_psi(table, UNIT_TERMS, rng)


def slopes_from_gradient(params, dW):
    """Solve rho <(c . psi) psi> = dW for the slope coefficients c.

    dW holds derivatives of the conserved variables (..., 4). The closed-form
    cascade solves the energy row first, then the momentum rows, then mass.
    """
    dW = np.asarray(dW, dtype=float)
    rho, U, V, lam, K = params.rho, params.U, params.V, params.lam, params.K
    b1 = dW[..., 0] / rho
    b2 = dW[..., 1] / rho
    b3 = dW[..., 2] / rho
    b4 = dW[..., 3] / rho
    ek = U * U + V * V + (K + 2.0) / (2.0 * lam)
    B2 = b2 - U * b1
    B3 = b3 - V * b1
    B4 = 2.0 * b4 - ek * b1
    c4 = 4.0 * lam * lam / (K + 2.0) * (B4 - 2.0 * U * B2 - 2.0 * V * B3)
    c3 = 2.0 * lam * B3 - V * c4
    c2 = 2.0 * lam * B2 - U * c4
    c1 = b1 - U * c2 - V * c3 - 0.5 * ek * c4
    return np.stack([c1, c2, c3, c4], axis=-1)


def moments_of_slope_times_psi(table, c, a=0, b=0, e=0, rng=FULL):
    """rho <u^a v^b xi^2e (c . psi) psi>, the shared kernel of the flux terms."""
    c = np.asarray(c)
    return project_psi(table, psi_terms(np.moveaxis(c, -1, 0), a, b, e), rng)
