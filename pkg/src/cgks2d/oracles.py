"""Independent numerical oracles used by the self-check suite and the tests.

These deliberately avoid the closed forms and recurrences of the production
code paths: moments are computed by adaptive quadrature over velocity space,
geometric integrals by adaptive quadrature over the parameter domain.
"""

import numpy as np
from scipy.integrate import quad, dblquad

from . import quadrature
from .kinetic import FULL, POS, NEG


def gaussian_1d(x, mean, lam):
    return np.sqrt(lam / np.pi) * np.exp(-lam * (x - mean) ** 2)


def u_moment_quad(n, U, lam, rng=FULL):
    """<u^n> of the 1D Maxwellian marginal by adaptive quadrature."""
    width = 12.0 / np.sqrt(lam)
    lo, hi = min(U, 0.0) - width, max(U, 0.0) + width
    if rng == POS:
        lo = 0.0
    elif rng == NEG:
        hi = 0.0
    val, _ = quad(lambda u: u ** n * gaussian_1d(u, U, lam), lo, hi,
                  limit=200, epsabs=1e-14, epsrel=1e-13)
    return val


def xi_moment_quad(e, lam, K):
    """<xi^(2e)> via the chi-type marginal of |xi| for K internal dofs."""
    from scipy.special import gamma as gamma_fn
    norm = 2.0 * lam ** (K / 2.0) / gamma_fn(K / 2.0)
    val, _ = quad(lambda s: norm * s ** (2 * e + K - 1) * np.exp(-lam * s * s),
                  0.0, 12.0 / np.sqrt(lam), limit=200, epsabs=1e-14,
                  epsrel=1e-13)
    return val


def mono_moment_quad(params, a, b, e, rng=FULL):
    """rho <u^a v^b xi^2e> by quadrature, scalar params only."""
    return (params.rho * u_moment_quad(a, params.U, params.lam, rng)
            * u_moment_quad(b, params.V, params.lam)
            * xi_moment_quad(e, params.lam, params.K))


def terms_moment_quad(params, terms, rng=FULL):
    return sum(w * mono_moment_quad(params, a, b, e, rng)
               for (w, a, b, e) in terms)


def project_psi_quad(params, terms, rng=FULL):
    """Quadrature counterpart of kinetic.project_psi for scalar params."""
    from .kinetic import shift_terms
    out = np.empty(4)
    out[0] = terms_moment_quad(params, terms, rng)
    out[1] = terms_moment_quad(params, shift_terms(terms, da=1), rng)
    out[2] = terms_moment_quad(params, shift_terms(terms, db=1), rng)
    out[3] = 0.5 * (terms_moment_quad(params, shift_terms(terms, da=2), rng)
                    + terms_moment_quad(params, shift_terms(terms, db=2), rng)
                    + terms_moment_quad(params, shift_terms(terms, de=1), rng))
    return out


def line_integral_quad(ctrl, fn):
    """int fn(x, y) ds over a quadratic edge by adaptive quadrature."""
    ctrl = np.asarray(ctrl, dtype=float)

    def integrand(xi):
        p = quadrature.edge_point(ctrl, xi)
        t = quadrature.edge_tangent(ctrl, xi)
        return fn(p[0], p[1]) * np.hypot(t[0], t[1])

    val, _ = quad(integrand, 0.0, 1.0, limit=200, epsabs=1e-14, epsrel=1e-13)
    return val


def line_normal_integral_quad(ctrl, fn_grad):
    """int grad(fn).n ds with fn_grad(x, y) -> (dP/dx, dP/dy)."""
    ctrl = np.asarray(ctrl, dtype=float)

    def integrand(xi):
        p = quadrature.edge_point(ctrl, xi)
        t = quadrature.edge_tangent(ctrl, xi)
        gx, gy = fn_grad(p[0], p[1])
        return gx * t[1] - gy * t[0]

    val, _ = quad(integrand, 0.0, 1.0, limit=200, epsabs=1e-14, epsrel=1e-13)
    return val


def tri6_integral_quad(nodes, fn):
    """int fn(x, y) dx dy over a curved triangle by adaptive 2D quadrature."""
    nodes = np.asarray(nodes, dtype=float)
    detj = quadrature.tri6_detJ_poly(nodes)

    def integrand(eta, xi):
        p = quadrature.tri6_point(nodes, xi, eta)
        jv = sum(detj[i, j] * xi ** i * eta ** j
                 for i in range(detj.shape[0]) for j in range(detj.shape[1]))
        return fn(p[0], p[1]) * jv

    val, _ = dblquad(integrand, 0.0, 1.0, 0.0, lambda xi: 1.0 - xi,
                     epsabs=1e-13, epsrel=1e-12)
    return val
