"""Exact integration on quadratic (curved) edges and triangles.

Curved geometry is described by isoparametric maps: a 3-node quadratic
edge x(xi) and a 6-node quadratic triangle x(xi, eta).  All integrals of
polynomials (degree <= 2 in physical coordinates) over these elements have
closed forms; no Gauss approximation is involved except in the explicitly
flagged degenerate fallback.

Polynomials in physical coordinates are passed as length-6 coefficient
vectors over the monomials (1, x, y, x^2, x*y, y^2).
"""

import numpy as np

# monomial exponents matching the 6-coefficient convention
MONOMIALS = [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]


# ---------------------------------------------------------------------------
# quadratic edge: x(xi) = v1(xi) x0 + v2(xi) x1 + v3(xi) x2
# with v1 = 1 - 3 xi + 2 xi^2, v2 = -xi + 2 xi^2, v3 = 4 xi - 4 xi^2;
# node 0/1 are the endpoints, node 2 the mid node.
# ---------------------------------------------------------------------------

def edge_point(ctrl, xi):
    """Map parameter values onto the quadratic edge. ctrl is (3, 2)."""
    xi = np.asarray(xi)
    v1 = 1.0 - 3.0 * xi + 2.0 * xi ** 2
    v2 = -xi + 2.0 * xi ** 2
    v3 = 4.0 * xi - 4.0 * xi ** 2
    return (np.multiply.outer(v1, ctrl[0]) + np.multiply.outer(v2, ctrl[1])
            + np.multiply.outer(v3, ctrl[2]))


def edge_velocity(ctrl):
    """Return (a, b) with dx/dxi = a + b*xi, each a 2-vector."""
    a = -3.0 * ctrl[0] - ctrl[1] + 4.0 * ctrl[2]
    b = 4.0 * ctrl[0] + 4.0 * ctrl[1] - 8.0 * ctrl[2]
    return a, b


def edge_tangent(ctrl, xi):
    a, b = edge_velocity(ctrl)
    xi = np.asarray(xi)
    return a + np.multiply.outer(xi, b)


def edge_normal(ctrl, xi):
    """Unit normal at parameter xi, pointing right of the 0->1 direction."""
    t = edge_tangent(ctrl, xi)
    n = np.stack([t[..., 1], -t[..., 0]], axis=-1)
    return n / np.linalg.norm(n, axis=-1, keepdims=True)


def midpoint_ctrl(p0, p1):
    """Control points of a straight edge (mid node at the chord midpoint)."""
    p0 = np.asarray(p0, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    return np.array([p0, p1, 0.5 * (p0 + p1)])


def _edge_param_coeffs(ctrl):
    """x(xi), y(xi) as polynomial coefficient arrays [c0, c1, c2]."""
    x0, x1, x2 = ctrl[:, 0]
    y0, y1, y2 = ctrl[:, 1]
    cx = np.array([x0, -3.0 * x0 - x1 + 4.0 * x2, 2.0 * x0 + 2.0 * x1 - 4.0 * x2])
    cy = np.array([y0, -3.0 * y0 - y1 + 4.0 * y2, 2.0 * y0 + 2.0 * y1 - 4.0 * y2])
    return cx, cy


def _compose_poly_on_edge(coeffs, cx, cy):
    """Coefficients in xi of P(x(xi), y(xi)) for a 6-coefficient quadratic P."""
    out = np.zeros(5)
    for c, (i, j) in zip(coeffs, MONOMIALS):
        if c == 0.0:
            continue
        term = np.array([c])
        for _ in range(i):
            term = np.convolve(term, cx)
        for _ in range(j):
            term = np.convolve(term, cy)
        out[:term.size] += term
    return out


def _antideriv_sqrt(p, s, a, c):
    """Antiderivative of s^p * sqrt(a s^2 + c) at s, for a > 0, c > 0."""
    r = np.sqrt(a * s * s + c)
    if p == 0:
        return 0.5 * (s * r + c / np.sqrt(a) * np.arcsinh(s * np.sqrt(a / c)))
    if p == 1:
        return r ** 3 / (3.0 * a)
    # reduction: int s^p R = (s^(p-1) R^3 - (p-1) c int s^(p-2) R) / ((p+2) a)
    return (s ** (p - 1) * r ** 3
            - (p - 1) * c * _antideriv_sqrt(p - 2, s, a, c)) / ((p + 2) * a)


def _sqrt_moments(ctrl, pmax):
    """J_p = int_0^1 xi^p sqrt(xdot^2 + ydot^2) dxi for p = 0..pmax.

    Returns (J, exact_flag). exact_flag is False only on the degenerate
    fallback branch (phi2 <= 0 up to roundoff), where a 64-point Gauss rule
    is used instead of the closed form.
    """
    a, b = edge_velocity(ctrl)
    phi0 = b @ b
    scale = a @ a + phi0
    if scale == 0.0:
        raise ValueError("degenerate edge: all control points coincide")
    J = np.zeros(pmax + 1)
    if phi0 <= 1e-26 * scale:
        # affine parameterization: constant speed |a|
        speed = np.sqrt(a @ a)
        for p in range(pmax + 1):
            J[p] = speed / (p + 1)
        return J, True
    phi1 = (a @ b) / phi0
    phi2 = a @ a - (a @ b) ** 2 / phi0
    if phi2 <= 1e-13 * scale:
        s0, s1 = phi1, 1.0 + phi1
        if phi2 <= 0.0 or s0 * s1 < 0.0:
            # speed sqrt(phi0)*|s| with a sign change inside the interval,
            # or slightly negative phi2 from cancellation: integrate numerically
            xg, wg = np.polynomial.legendre.leggauss(64)
            xi = 0.5 * (xg + 1.0)
            w = 0.5 * wg
            t = edge_tangent(ctrl, xi)
            speed = np.linalg.norm(t, axis=-1)
            for p in range(pmax + 1):
                J[p] = np.sum(w * xi ** p * speed)
            return J, False
        # straight line, non-uniform parameterization: speed = sqrt(phi0)|s|
        sgn = 1.0 if s0 >= 0.0 else -1.0
        root = np.sqrt(phi0)
        for p in range(pmax + 1):
            # expand xi^p = (s - phi1)^p, integrate s^k |s|
            for k in range(p + 1):
                coef = _binom(p, k) * (-phi1) ** (p - k)
                J[p] += coef * sgn * root * (s1 ** (k + 2) - s0 ** (k + 2)) / (k + 2)
        return J, True
    # generic closed form via s = xi + phi1
    s0, s1 = phi1, 1.0 + phi1
    S = np.zeros(pmax + 1)
    for p in range(pmax + 1):
        S[p] = (_antideriv_sqrt(p, s1, phi0, phi2)
                - _antideriv_sqrt(p, s0, phi0, phi2))
    for p in range(pmax + 1):
        for k in range(p + 1):
            J[p] += _binom(p, k) * (-phi1) ** (p - k) * S[k]
    return J, True


def _binom(n, k):
    from math import comb
    return float(comb(n, k))


def arc_length(ctrl):
    J, _ = _sqrt_moments(np.asarray(ctrl, dtype=float), 0)
    return J[0]


def line_integral(ctrl, coeffs):
    """int P ds over the quadratic edge, exact. Returns (value, exact_flag)."""
    ctrl = np.asarray(ctrl, dtype=float)
    cx, cy = _edge_param_coeffs(ctrl)
    poly = _compose_poly_on_edge(np.asarray(coeffs, dtype=float), cx, cy)
    J, exact = _sqrt_moments(ctrl, poly.size - 1)
    return float(poly @ J), exact


def line_average(ctrl, coeffs):
    """(1/L) int P ds over the quadratic edge. Returns (value, exact_flag)."""
    val, exact = line_integral(ctrl, coeffs)
    return val / arc_length(ctrl), exact


def line_normal_integral(ctrl, coeffs):
    """int (dP/dn) ds, exact.

    The unnormalized normal (ydot, -xdot) absorbs the arc-length factor, so
    the integrand is a plain polynomial in xi and no fallback is ever needed.
    """
    ctrl = np.asarray(ctrl, dtype=float)
    coeffs = np.asarray(coeffs, dtype=float)
    # dP/dx and dP/dy as 6-coefficient (linear) polynomials
    px = np.array([coeffs[1], 2.0 * coeffs[3], coeffs[4], 0.0, 0.0, 0.0])
    py = np.array([coeffs[2], coeffs[4], 2.0 * coeffs[5], 0.0, 0.0, 0.0])
    cx, cy = _edge_param_coeffs(ctrl)
    dcx = np.polynomial.polynomial.polyder(cx)
    dcy = np.polynomial.polynomial.polyder(cy)
    fx = _compose_poly_on_edge(px, cx, cy)
    fy = _compose_poly_on_edge(py, cx, cy)
    integrand = np.convolve(fx, dcy) - np.convolve(fy, dcx)
    powers = 1.0 / np.arange(1, integrand.size + 1)
    return float(integrand @ powers)


def line_normal_average(ctrl, coeffs):
    return line_normal_integral(ctrl, coeffs) / arc_length(ctrl)


# ---------------------------------------------------------------------------
# 6-node quadratic triangle: corners at nodes 0,1,2 mapping to (0,0), (1,0),
# (0,1); nodes 3,4,5 are the mid nodes of edges 01, 12, 20.
# ---------------------------------------------------------------------------

_TRI_SHAPES = None


def _tri_shape_polys():
    """Shape functions as 3x3 coefficient arrays C[i,j] for xi^i eta^j."""
    global _TRI_SHAPES
    if _TRI_SHAPES is None:
        v = np.zeros((6, 3, 3))
        v[0] = [[1, -3, 2], [-3, 4, 0], [2, 0, 0]]     # (xi+eta-1)(2xi+2eta-1)
        v[1] = [[0, 0, 0], [-1, 0, 0], [2, 0, 0]]      # xi(2xi-1)
        v[2] = [[0, -1, 2], [0, 0, 0], [0, 0, 0]]      # eta(2eta-1)
        v[3] = [[0, 0, 0], [4, -4, 0], [-4, 0, 0]]     # -4xi(xi+eta-1)
        v[4] = [[0, 0, 0], [0, 4, 0], [0, 0, 0]]       # 4 xi eta
        v[5] = [[0, 4, -4], [0, -4, 0], [0, 0, 0]]     # -4eta(xi+eta-1)
        _TRI_SHAPES = v
    return _TRI_SHAPES


def _poly2_mul(p, q):
    out = np.zeros((p.shape[0] + q.shape[0] - 1, p.shape[1] + q.shape[1] - 1))
    for i in range(p.shape[0]):
        for j in range(p.shape[1]):
            if p[i, j] != 0.0:
                out[i:i + q.shape[0], j:j + q.shape[1]] += p[i, j] * q
    return out


def _poly2_der(p, axis):
    if axis == 0:
        n = p.shape[0]
        if n == 1:
            return np.zeros((1, p.shape[1]))
        return p[1:, :] * np.arange(1, n)[:, None]
    n = p.shape[1]
    if n == 1:
        return np.zeros((p.shape[0], 1))
    return p[:, 1:] * np.arange(1, n)[None, :]


def ref_triangle_monomial(m, n):
    """int over the unit reference triangle of xi^m eta^n = m! n! / (m+n+2)!."""
    from math import factorial
    return factorial(m) * factorial(n) / factorial(m + n + 2)


def _poly2_tri_integral(p):
    total = 0.0
    for i in range(p.shape[0]):
        for j in range(p.shape[1]):
            if p[i, j] != 0.0:
                total += p[i, j] * ref_triangle_monomial(i, j)
    return total


def tri6_point(nodes, xi, eta):
    shapes = _tri_shape_polys()
    pt = np.zeros(2)
    for k in range(6):
        val = 0.0
        for i in range(3):
            for j in range(3):
                val += shapes[k][i, j] * xi ** i * eta ** j
        pt += val * nodes[k]
    return pt


def tri6_detJ_poly(nodes):
    """det of the isoparametric Jacobian as a 2D polynomial in (xi, eta)."""
    shapes = _tri_shape_polys()
    nodes = np.asarray(nodes, dtype=float)
    x = np.tensordot(nodes[:, 0], shapes, axes=(0, 0))
    y = np.tensordot(nodes[:, 1], shapes, axes=(0, 0))
    xxi, xeta = _poly2_der(x, 0), _poly2_der(x, 1)
    yxi, yeta = _poly2_der(y, 0), _poly2_der(y, 1)
    return _poly2_mul(xxi, yeta) - _poly2_mul(xeta, yxi)


_TRI_SAMPLES = [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (0.5, 0.0), (0.5, 0.5),
                (0.0, 0.5), (1.0 / 3.0, 1.0 / 3.0)]


class InvertedCellError(ValueError):
    pass


def tri6_monomial_integrals(nodes):
    """Exact integrals of (1, x, y, x^2, xy, y^2) over the curved triangle.

    Raises InvertedCellError if det J <= 0 at any of the 7 sample points.
    """
    nodes = np.asarray(nodes, dtype=float)
    detj = tri6_detJ_poly(nodes)
    for (sxi, seta) in _TRI_SAMPLES:
        val = sum(detj[i, j] * sxi ** i * seta ** j
                  for i in range(detj.shape[0]) for j in range(detj.shape[1]))
        if val <= 0.0:
            raise InvertedCellError("non-positive Jacobian in curved triangle")
    shapes = _tri_shape_polys()
    x = np.tensordot(nodes[:, 0], shapes, axes=(0, 0))
    y = np.tensordot(nodes[:, 1], shapes, axes=(0, 0))
    out = np.zeros(6)
    for m, (i, j) in enumerate(MONOMIALS):
        p = detj
        for _ in range(i):
            p = _poly2_mul(p, x)
        for _ in range(j):
            p = _poly2_mul(p, y)
        out[m] = _poly2_tri_integral(p)
    return out


def quad_monomial_integrals(corners, mids=None):
    """Exact integrals of (1, x, y, x^2, xy, y^2) over a (curved) quadrilateral.

    corners is (4, 2); mids, when given, is (4, 2) with the mid node of edge
    (k, k+1) at row k. The cell is split along the 0-2 diagonal into two
    quadratic triangles.
    """
    corners = np.asarray(corners, dtype=float)
    if mids is None:
        mids = 0.5 * (corners + np.roll(corners, -1, axis=0))
    mids = np.asarray(mids, dtype=float)
    d02 = 0.5 * (corners[0] + corners[2])
    tri_a = np.array([corners[0], corners[1], corners[2],
                      mids[0], mids[1], d02])
    tri_b = np.array([corners[0], corners[2], corners[3],
                      d02, mids[2], mids[3]])
    return tri6_monomial_integrals(tri_a) + tri6_monomial_integrals(tri_b)
