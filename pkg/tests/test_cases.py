import numpy as np
import pytest
from scipy import integrate

from cgks2d import cases, kinetic as kn, mesh as msh
from cgks2d.cases import CaseError, make_case


class TestCaseSpec:
    def test_invalid_parameters_rejected(self):
        with pytest.raises(CaseError):
            cases.CaseSpec(case="sine", Ma=-1.0)
        with pytest.raises(CaseError):
            cases.CaseSpec(case="sine", Ma=1.0, Re=0.0)
        with pytest.raises(CaseError):
            make_case("no_such_case")

    def test_free_stream_normalization(self):
        spec = make_case("cylinder_re40")
        W = spec.free_stream()
        assert W[0] == 1.0
        p = kn.pressure(W)
        assert p == pytest.approx(1.0 / 1.4, rel=1e-14)
        # sound speed 1 at the free stream, so |u| = Ma
        assert W[1] / W[0] == pytest.approx(0.15, rel=1e-14)
        c = np.sqrt(1.4 * p / W[0])
        assert c == pytest.approx(1.0, rel=1e-14)

    def test_viscosity_scaling(self):
        spec = make_case("cylinder_re40")
        assert spec.mu_inf == pytest.approx(0.15 / 40.0, rel=1e-14)
        plate = make_case("flat_plate")
        assert plate.mu_inf == pytest.approx(0.15 * 100 / 1e5, rel=1e-14)

    def test_hypersonic_wall_temperature(self):
        spec = make_case("hypersonic_cylinder")
        assert spec.T_wall / spec.T_inf == pytest.approx(294.44 / 124.94,
                                                         rel=1e-12)


class TestSineInit:
    def test_pointwise_density(self):
        W = cases.sine_field(0.0)(np.array([0.25]), np.array([0.25]))
        assert W[0, 0] == pytest.approx(1.2, rel=1e-14)

    def test_cell_average_matches_quadrature(self):
        m = msh.unit_square(4)
        geom = msh.build_geometry(m)
        W = cases.init_sine_wave(m, geom)
        c = 5   # some interior cell
        x0, y0 = m.nodes[m.cell_corners[c, 0]]
        val, _ = integrate.dblquad(
            lambda y, x: 1 + 0.2 * np.sin(2 * np.pi * x)
            * np.sin(2 * np.pi * y), x0, x0 + 0.25, y0, y0 + 0.25,
            epsabs=1e-13)
        # 3x3 Gauss truncation is ~h^6 on this smooth field
        assert W[c, 0] == pytest.approx(val / 0.0625, rel=3e-6)

    def test_exact_solution_periodic_in_time(self):
        m = msh.unit_square(8)
        geom = msh.build_geometry(m)
        assert np.allclose(cases.exact_sine(m, geom, 1.0),
                           cases.init_sine_wave(m, geom), atol=1e-13)


class TestErrorNorms:
    def test_synthetic_third_order_sequence(self):
        errs, orders = cases.l2_error_and_order([1e-3, 1.25e-4, 1.5625e-5])
        assert np.allclose(orders, 3.0, atol=1e-12)

    def test_reference_pair(self):
        _, orders = cases.l2_error_and_order([2.79e-4, 3.50e-5])
        assert orders[0] == pytest.approx(2.99, abs=0.01)

    def test_zero_for_exact(self):
        m = msh.unit_square(4)
        geom = msh.build_geometry(m)
        W = cases.init_sine_wave(m, geom)
        assert cases.l2_error(W, W, geom.cells.volume) == 0.0


class TestWakeLength:
    def test_synthetic_profile(self):
        spec = make_case("cylinder_re40",
                         mesh_params=dict(n_circ_pts=49, n_rad_pts=25,
                                          wall_h=0.05,
                                          outer_diameter=8.0))
        mesh, geom = cases.build_mesh(spec)
        solver = cases.build_solver(spec, mesh, geom)
        r = np.hypot(geom.cells.centroid[:, 0], geom.cells.centroid[:, 1])
        rho = np.ones_like(r)
        U = 0.1 * (r - 1.2)
        W = np.stack([rho, rho * U, np.zeros_like(r),
                      1.0 / (1.4 - 1) / 1.4 + 0.5 * rho * U * U], axis=-1)
        solver.W = W
        L = cases.wake_length(solver, spec)
        assert L == pytest.approx(0.7, abs=0.05)


class TestBlasiusStructure:
    def test_station_arrays(self):
        spec = make_case("flat_plate",
                         mesh_params=dict(nx_up=4, nx_plate=16, ny=8,
                                          wall_h=0.5))
        mesh, geom = cases.build_mesh(spec)
        solver = cases.build_solver(spec, mesh, geom)
        bl = cases.blasius_postprocess(solver, spec, stations=(5.0, 10.0))
        assert np.all(np.diff(bl["x"]) >= 0)
        assert np.allclose(bl["Re_x"], bl["x"] / 100.0 * 1e5, rtol=1e-12)
        assert set(bl["profiles"]) == {5.0, 10.0}
        eta, U_s, V_s = bl["profiles"][5.0]
        assert len(eta) == 8
        # free stream everywhere at initialization
        assert np.allclose(U_s, 1.0, atol=1e-12)


class TestHypersonicSurface:
    def test_smoke_on_free_stream(self):
        spec = make_case("hypersonic_cylinder",
                         mesh_params=dict(n_circ_pts=13, n_rad_pts=7,
                                          wall_h=0.02))
        mesh, geom = cases.build_mesh(spec)
        solver = cases.build_solver(spec, mesh, geom)
        rep, p_norm = cases.hypersonic_postprocess(solver, spec)
        assert np.all(np.isfinite(rep.q_norm))
        assert np.all(np.isfinite(p_norm))
        assert abs(rep.wall_mass_flux) < 1e-12
