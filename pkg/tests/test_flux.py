import numpy as np
import pytest
from scipy.integrate import quad

from cgks2d import flux as fx
from cgks2d import kinetic as kn
from cgks2d import oracles
from cgks2d.kinetic import (MaxwellianParams, cons_to_prim, prim_to_cons,
                            POS, NEG)

GAMMA = 1.4


def euler_flux(W):
    rho, mu, mv, E = W
    U = mu / rho
    p = (GAMMA - 1.0) * (E - 0.5 * (mu ** 2 + mv ** 2) / rho)
    return np.array([mu, mu * U + p, mv * U, U * (E + p)])


class TestRotation:
    def test_x_normal_is_identity(self):
        W = np.array([1.0, 0.3, -0.2, 2.0])
        n = np.array([1.0, 0.0])
        assert np.allclose(fx.rotate_to_face(W, n), W)

    def test_y_normal_swaps(self):
        W = np.array([1.0, 0.3, -0.2, 2.0])
        n = np.array([0.0, 1.0])
        r = fx.rotate_to_face(W, n)
        assert np.allclose(r, [1.0, -0.2, -0.3, 2.0])

    def test_round_trip(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            th = rng.uniform(0, 2 * np.pi)
            n = np.array([np.cos(th), np.sin(th)])
            W = rng.uniform(-1, 1, 4)
            back = fx.rotate_from_face(fx.rotate_to_face(W, n), n)
            assert np.allclose(back, W, atol=1e-15)


class TestCollisionTimes:
    def test_physical(self):
        tau, tau_n = fx.collision_times(1e-3, 1.0, 1.0, 1.0, 0.1)
        assert tau == pytest.approx(1e-3)
        assert tau_n == pytest.approx(1e-3)

    def test_jump_term(self):
        tau, tau_n = fx.collision_times(0.0, 1.5, 2.0, 1.0, 0.01, C=1.0)
        assert tau == 0.0
        assert tau_n == pytest.approx(0.01 / 3.0)


def zero_grad(n=1):
    return np.zeros((n, 4)) if n > 1 else np.zeros(4)


class TestFluxSmooth:
    def test_uniform_equilibrium_gives_euler_flux(self):
        W = prim_to_cons(MaxwellianParams(
            np.array(1.0), np.array(1.0), np.array(0.0), np.array(0.7)))
        dt = 0.01
        res = fx.flux_smooth(W, W, zero_grad(), zero_grad(), zero_grad(),
                             zero_grad(), dt, 0.0)
        expect = euler_flux(W)
        assert np.allclose(res.F_dt / dt, expect, rtol=1e-12, atol=1e-13)
        assert np.allclose(res.F_half / (dt / 2), expect, rtol=1e-12,
                           atol=1e-13)
        assert np.allclose(res.W_dt, W, rtol=1e-13)

    def test_mirror_symmetric_mass_energy_vanish(self):
        W = prim_to_cons(MaxwellianParams(
            np.array(1.2), np.array(0.0), np.array(0.0), np.array(0.9)))
        res = fx.flux_smooth(W, W, zero_grad(), zero_grad(), zero_grad(),
                             zero_grad(), 0.02, 1e-3)
        assert abs(res.F_dt[0]) < 1e-13
        assert abs(res.F_dt[3]) < 1e-13

    def test_matches_distribution_quadrature(self):
        rng = np.random.default_rng(7)
        WL = prim_to_cons(MaxwellianParams(
            np.array(1.1), np.array(0.4), np.array(-0.1), np.array(0.8)))
        WR = prim_to_cons(MaxwellianParams(
            np.array(1.0), np.array(0.5), np.array(-0.05), np.array(0.75)))
        gnL = rng.uniform(-0.3, 0.3, 4)
        gnR = rng.uniform(-0.3, 0.3, 4)
        gtL = rng.uniform(-0.3, 0.3, 4)
        gtR = rng.uniform(-0.3, 0.3, 4)
        dt, tau = 0.01, 2e-3
        res = fx.flux_smooth(WL, WR, gnL, gnR, gtL, gtR, dt, tau)

        # oracle: same expansion coefficients, moments by adaptive quadrature
        tabL = kn.MomentTable(cons_to_prim(WL)[0])
        tabR = kn.MomentTable(cons_to_prim(WR)[0])
        Wc = (kn.project_psi(tabL, kn.UNIT_TERMS, POS)
              + kn.project_psi(tabR, kn.UNIT_TERMS, NEG))
        paramsC, _ = cons_to_prim(Wc)
        an = kn.slopes_from_gradient(paramsC, 0.5 * (gnL + gnR))
        at = kn.slopes_from_gradient(paramsC, 0.5 * (gtL + gtR))
        au = kn.psi_terms(an, a=1) + kn.psi_terms(at, b=1)
        dWdt = -oracles.project_psi_quad(paramsC, au)
        A = kn.slopes_from_gradient(paramsC, dWdt)
        A_terms = kn.psi_terms(A)
        F0 = (oracles.project_psi_quad(
                  paramsC, kn.shift_terms(kn.UNIT_TERMS, da=1))
              - tau * oracles.project_psi_quad(
                  paramsC, kn.shift_terms(au + A_terms, da=1)))
        F1 = oracles.project_psi_quad(paramsC, kn.shift_terms(A_terms, da=1))
        expect = F0 * dt + 0.5 * F1 * dt * dt
        assert np.allclose(res.F_dt, expect, rtol=1e-9, atol=1e-11)


class TestFluxFull:
    def test_equilibrium_matches_smooth_for_any_tau_n(self):
        W = prim_to_cons(MaxwellianParams(
            np.array(1.3), np.array(0.6), np.array(0.2), np.array(1.1)))
        dt = 0.02
        sm = fx.flux_smooth(W, W, zero_grad(), zero_grad(), zero_grad(),
                            zero_grad(), dt, 0.0)
        for tau_n in (0.0, 1e-4, 0.5):
            fl = fx.flux_full(W, W, zero_grad(), zero_grad(), zero_grad(),
                              zero_grad(), dt, 0.0, tau_n)
            assert np.allclose(fl.F_dt, sm.F_dt, rtol=1e-12, atol=1e-14)
            assert np.allclose(fl.W_dt, sm.W_dt, rtol=1e-12, atol=1e-14)

    def test_continuous_limit_approaches_smooth(self):
        rng = np.random.default_rng(3)
        W = prim_to_cons(MaxwellianParams(
            np.array(1.0), np.array(0.3), np.array(0.1), np.array(0.9)))
        g = rng.uniform(-0.2, 0.2, 4)
        gt = rng.uniform(-0.2, 0.2, 4)
        dt = 0.05
        tau = 1e-6
        sm = fx.flux_smooth(W, W, g, g, gt, gt, dt, tau)
        fl = fx.flux_full(W, W, g, g, gt, gt, dt, tau, tau)
        rel = np.abs(fl.F_dt - sm.F_dt) / (np.abs(sm.F_dt) + 1e-12)
        # difference decays like exp(-dt/tau_n) + O(tau)
        assert np.all(rel < 1e-4)

    def test_sod_jump_matches_quadrature_oracle(self):
        WL = prim_to_cons(MaxwellianParams(
            np.array(1.0), np.array(0.0), np.array(0.0), np.array(0.5)))
        WR = prim_to_cons(MaxwellianParams(
            np.array(0.125), np.array(0.0), np.array(0.0), np.array(0.625)))
        dt = 0.01
        tau, tau_n = 0.0, 0.5 * dt
        res = fx.flux_full(WL, WR, zero_grad(), zero_grad(), zero_grad(),
                           zero_grad(), dt, tau, tau_n)
        assert res.F_dt[0] > 0.0   # mass flows toward the low-pressure side

        paramsL, _ = cons_to_prim(WL)
        paramsR, _ = cons_to_prim(WR)
        tabL, tabR = kn.MomentTable(paramsL), kn.MomentTable(paramsR)
        Wc = (kn.project_psi(tabL, kn.UNIT_TERMS, POS)
              + kn.project_psi(tabR, kn.UNIT_TERMS, NEG))
        paramsC, _ = cons_to_prim(Wc)
        uterm = kn.shift_terms(kn.UNIT_TERMS, da=1)
        FC = oracles.project_psi_quad(paramsC, uterm)
        FU = (oracles.project_psi_quad(paramsL, uterm, POS)
              + oracles.project_psi_quad(paramsR, uterm, NEG))
        ic1 = quad(lambda t: 1 - np.exp(-t / tau_n), 0, dt)[0]
        ic4 = quad(lambda t: np.exp(-t / tau_n), 0, dt)[0]
        expect = ic1 * FC + ic4 * FU
        assert np.allclose(res.F_dt, expect, rtol=1e-8, atol=1e-11)


class TestPrandtl:
    def test_unit_prandtl_identity(self):
        F = np.array([1.0, 2.0, 3.0, 4.0])
        assert np.allclose(fx.prandtl_fix(F, 0.7, 1.0), F)

    def test_symmetric_equilibrium_no_correction(self):
        W = prim_to_cons(MaxwellianParams(
            np.array(1.0), np.array(0.0), np.array(0.0), np.array(0.8)))
        a = fx.flux_smooth(W, W, zero_grad(), zero_grad(), zero_grad(),
                           zero_grad(), 0.01, 1e-3, Pr=1.0)
        b = fx.flux_smooth(W, W, zero_grad(), zero_grad(), zero_grad(),
                           zero_grad(), 0.01, 1e-3, Pr=0.72)
        assert np.allclose(a.F_dt, b.F_dt, atol=1e-14)

    def test_correction_matches_quadrature(self):
        W = prim_to_cons(MaxwellianParams(
            np.array(1.0), np.array(0.2), np.array(0.0), np.array(0.9)))
        gn = np.array([0.1, 0.0, 0.0, 0.4])
        dt, tau, Pr = 0.01, 5e-3, 0.72
        a = fx.flux_smooth(W, W, gn, gn, zero_grad(), zero_grad(), dt, tau,
                           Pr=1.0)
        b = fx.flux_smooth(W, W, gn, gn, zero_grad(), zero_grad(), dt, tau,
                           Pr=Pr)
        got_q = (b.F_dt[3] - a.F_dt[3]) / (1.0 / Pr - 1.0)

        paramsC, _ = cons_to_prim(W)
        an = kn.slopes_from_gradient(paramsC, gn)
        au = kn.psi_terms(an, a=1)
        dWdt = -oracles.project_psi_quad(paramsC, au)
        A = kn.slopes_from_gradient(paramsC, dWdt)
        A_terms = kn.psi_terms(A)
        qpre = fx.heat_flux_terms(paramsC.U, paramsC.V)
        q0 = (oracles.terms_moment_quad(paramsC, qpre)
              - tau * oracles.terms_moment_quad(
                  paramsC, fx._mul_terms(qpre, au + A_terms)))
        q1 = oracles.terms_moment_quad(paramsC,
                                       fx._mul_terms(qpre, A_terms))
        expect_q = q0 * dt + 0.5 * q1 * dt * dt
        assert got_q == pytest.approx(expect_q, rel=1e-9, abs=1e-13)


class TestIsothermalWall:
    def wall_lam(self, T_wall, Rg=1.0):
        # lam = rho/(2p) = 1/(2 Rg T)
        return 1.0 / (2.0 * Rg * T_wall)

    def test_rest_wall_state(self):
        T_w = 0.8
        lam_w = self.wall_lam(T_w)
        rho = 1.0
        p = rho / (2 * lam_w)
        W = prim_to_cons(MaxwellianParams(
            np.array(rho), np.array(0.0), np.array(0.0), np.array(lam_w)))
        dt = 0.01
        res, rho_w = fx.isothermal_wall_flux(W, zero_grad(), zero_grad(),
                                             lam_w, dt, 0.0)
        assert rho_w == pytest.approx(rho, rel=1e-13)
        assert abs(res.F_dt[0]) < 1e-13
        assert abs(res.F_dt[2]) < 1e-13
        assert abs(res.F_dt[3]) < 1e-13
        assert res.F_dt[1] == pytest.approx(p * dt, rel=1e-12)

    def test_mass_no_penetration_any_state(self):
        rng = np.random.default_rng(9)
        lam_w = self.wall_lam(1.3)
        for _ in range(20):
            params = MaxwellianParams(
                np.array(rng.uniform(0.3, 2.0)),
                np.array(rng.uniform(-0.5, 0.5)),
                np.array(rng.uniform(-0.5, 0.5)),
                np.array(rng.uniform(0.3, 2.0)))
            W = prim_to_cons(params)
            gn = rng.uniform(-0.5, 0.5, 4)
            gt = rng.uniform(-0.5, 0.5, 4)
            dt = 0.01
            res, _ = fx.isothermal_wall_flux(W, gn, gt, lam_w, dt, 1e-3)
            F0, Ft = fx.extract_flux_and_derivative(res.F_dt, res.F_half, dt)
            # instantaneous mass flux at t=0 and t=dt (flux is linear in t)
            scale = abs(params.rho * params.U) + 1.0
            assert abs(F0[0]) < 1e-12 * scale
            assert abs(F0[0] + dt * Ft[0]) < 1e-12 * scale

    def test_hot_interior_heats_wall(self):
        lam_w = self.wall_lam(1.0)
        lam_hot = self.wall_lam(2.0)   # interior twice as hot
        W = prim_to_cons(MaxwellianParams(
            np.array(1.0), np.array(0.0), np.array(0.0), np.array(lam_hot)))
        res, _ = fx.isothermal_wall_flux(W, zero_grad(), zero_grad(), lam_w,
                                         0.01, 0.0)
        # energy leaves the fluid through the outward-pointing wall normal
        assert res.F_dt[3] > 0.0

        paramsL, _ = cons_to_prim(W)
        FL = oracles.project_psi_quad(
            paramsL, kn.shift_terms(kn.UNIT_TERMS, da=1), POS)
        wall_params = MaxwellianParams(np.array(1.0), np.array(0.0),
                                       np.array(0.0), np.array(lam_w))
        unit = oracles.project_psi_quad(
            wall_params, kn.shift_terms(kn.UNIT_TERMS, da=1), NEG)
        rho_w = -FL[0] / unit[0]
        expect = (FL[3] + rho_w * unit[3]) * 0.01
        assert res.F_dt[3] == pytest.approx(expect, rel=1e-9)


class TestExtract:
    def test_constant_flux(self):
        F0 = np.array([1.0, -2.0, 0.5, 3.0])
        dt = 0.1
        got0, got1 = fx.extract_flux_and_derivative(F0 * dt, F0 * dt / 2, dt)
        assert np.allclose(got0, F0, atol=1e-14)
        assert np.allclose(got1, 0.0, atol=1e-12)

    def test_linear_flux_exact(self):
        F0 = np.array([1.0, 2.0, 3.0, 4.0])
        F1 = np.array([-1.0, 0.5, 2.0, -3.0])
        dt = 0.2

        def integral(t):
            return F0 * t + 0.5 * F1 * t * t

        got0, got1 = fx.extract_flux_and_derivative(integral(dt),
                                                    integral(dt / 2), dt)
        assert np.allclose(got0, F0, rtol=1e-13)
        assert np.allclose(got1, F1, rtol=1e-13)

    def test_quadratic_truncation(self):
        # F(t) = t^2: documents the O(dt^2)/O(dt) truncation on cubics
        dt = 0.3

        def integral(t):
            return t ** 3 / 3.0

        got0, got1 = fx.extract_flux_and_derivative(
            np.array([integral(dt)]), np.array([integral(dt / 2)]), dt)
        assert got0[0] == pytest.approx(-dt * dt / 6.0, rel=1e-12)
        assert got1[0] == pytest.approx(dt, rel=1e-12)


class TestFrameInvariance:
    def test_rotated_inputs_give_rotated_flux(self):
        rng = np.random.default_rng(5)
        WLf = prim_to_cons(MaxwellianParams(
            np.array(1.0), np.array(0.3), np.array(0.1), np.array(0.8)))
        WRf = prim_to_cons(MaxwellianParams(
            np.array(0.9), np.array(0.25), np.array(0.15), np.array(0.85)))
        gn = rng.uniform(-0.2, 0.2, 4)
        gt = rng.uniform(-0.2, 0.2, 4)
        dt = 0.01
        base = fx.flux_full(WLf, WRf, gn, gn, gt, gt, dt, 1e-3, 2e-3)
        for th in (0.3, 1.2, -2.0):
            n = np.array([np.cos(th), np.sin(th)])
            # physical states whose face-frame image reproduces the inputs
            WLp = fx.rotate_from_face(WLf, n)
            WRp = fx.rotate_from_face(WRf, n)
            res = fx.flux_full(fx.rotate_to_face(WLp, n),
                               fx.rotate_to_face(WRp, n),
                               gn, gn, gt, gt, dt, 1e-3, 2e-3)
            phys = fx.rotate_from_face(res.F_dt, n)
            expect = fx.rotate_from_face(base.F_dt, n)
            assert np.allclose(phys, expect, rtol=1e-12, atol=1e-14)
