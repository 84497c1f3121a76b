"""Command-line driver.

Subcommands: run a configured case, run the grid-refinement accuracy
sweep, or run the built-in verification checks.  Exit code 0 on success,
1 for configuration problems, 2 for numerical failure.
"""

import argparse
import os
import sys

import numpy as np

from . import cases, config, flux, kinetic, mesh as msh, oracles, output
from . import quadrature as q
from . import recon, stepper


def _build_parser():
    ap = argparse.ArgumentParser(prog="cgks2d",
                                 description="2D compact gas-kinetic "
                                 "Navier-Stokes solver")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a configured case")
    run.add_argument("config", help="key=value configuration file")
    run.add_argument("--method", choices=["I", "II", "III"])
    run.add_argument("--cfl", type=float)
    run.add_argument("--mesh", help="mesh file overriding the generator")
    run.add_argument("--steps", type=int, help="maximum step count")
    run.add_argument("--out", help="output directory")

    acc = sub.add_parser("accuracy", help="grid-refinement accuracy sweep")
    acc.add_argument("--levels", type=int, default=4,
                     help="number of refinement levels (from 1/20)")
    acc.add_argument("--t-end", type=float, default=1.0)

    sub.add_parser("verify", help="oracle and property checks")
    return ap


def cmd_run(args):
    try:
        with open(args.config) as fh:
            text = fh.read()
    except OSError as exc:
        print("cannot read config: %s" % exc, file=sys.stderr)
        return 1
    overrides = {"method": args.method, "cfl": args.cfl,
                 "mesh_file": args.mesh, "max_steps": args.steps,
                 "out_dir": args.out}
    cfg = config.parse_config(text, overrides)

    case_kw = {}
    if cfg.method is not None:
        case_kw["method"] = cfg.method
    if cfg.cfl is not None:
        case_kw["cfl"] = cfg.cfl
    if cfg.t_end is not None:
        case_kw["t_end"] = cfg.t_end
    if cfg.flux is not None:
        case_kw["flux_mode"] = cfg.flux
    if cfg.nonlinear is not None:
        case_kw["nonlinear"] = cfg.nonlinear
    if cfg.viscosity_law is not None:
        case_kw["viscosity_law"] = cfg.viscosity_law
    mesh_over = cfg.mesh_overrides()
    if mesh_over:
        case_kw["mesh_params"] = mesh_over
    spec = cases.make_case(cfg.case, **case_kw)

    if cfg.mesh_file:
        mesh = msh.read_mesh(cfg.mesh_file)
        geom = msh.build_geometry(mesh)
    else:
        mesh, geom = cases.build_mesh(spec)
    solver = cases.build_solver(spec, mesh, geom)

    os.makedirs(cfg.out_dir, exist_ok=True)
    meta = {"config_hash": config.config_hash(cfg), "case": spec.case,
            "mesh_checksum": msh.mesh_checksum(mesh),
            "method": spec.method}
    hist = output.HistoryWriter(os.path.join(cfg.out_dir, "history.csv"),
                                meta)
    has_walls = bool(np.any(np.isin(mesh.face_tag, msh.WALL_TAGS)))

    def emit(sv, res, dt):
        cd = cl = 0.0
        if has_walls:
            _, fxv, fyv = cases.wall_forces(sv, spec)
            qdyn = 0.5 * spec.Ma ** 2
            cd, cl = fxv / (qdyn * spec.length), fyv / (qdyn * spec.length)
        st = sv._assemble(sv.W, sv.Gx, sv.Gy, max(dt, 1e-300))
        hist.write(step=sv.nstep, t=sv.t, dt=dt, res_rho=res,
                   wall_mass_flux=st.wall_mass_flux, C_D=cd, C_L=cl)

    max_steps = cfg.max_steps
    if spec.t_end is not None:
        h = solver.run_unsteady(spec.t_end, cfl=spec.cfl,
                                max_steps=max_steps or 10 ** 7)
        for row in h.steps[::max(cfg.output_interval, 1)]:
            hist.write(C_D=0.0, C_L=0.0, **row)
    else:
        solver.run_steady(spec.cfl, tol_drop=cfg.steady_tol,
                          max_steps=max_steps or 200000,
                          report_every=cfg.output_interval,
                          callback=lambda sv, res, res0:
                          emit(sv, res, sv.cfl_dt(spec.cfl)))
    hist.close()

    if cfg.field_format == "vtk":
        output.write_vtk(os.path.join(cfg.out_dir, "fields.vtk"), mesh,
                         solver.W, meta, K=spec.K)
    else:
        output.write_csv(os.path.join(cfg.out_dir, "fields.csv"), mesh,
                         geom, solver.W, meta, K=spec.K)

    if spec.case == "cylinder_re40":
        rep = cases.cylinder_postprocess(solver, spec)
        output.write_surface_report(
            os.path.join(cfg.out_dir, "surface.csv"), rep, meta)
        print("C_D = %.6g  wake length = %.6g" % (rep.C_D,
                                                  rep.wake_length))
    elif spec.case == "hypersonic_cylinder":
        rep, _ = cases.hypersonic_postprocess(solver, spec)
        output.write_surface_report(
            os.path.join(cfg.out_dir, "surface.csv"), rep, meta)
        print("wall mass flux = %.3e" % rep.wall_mass_flux)
    elif spec.case == "flat_plate":
        bl = cases.blasius_postprocess(solver, spec)
        path = os.path.join(cfg.out_dir, "skin_friction.csv")
        with open(path, "w") as fh:
            fh.write("x,Re_x,C_f,C_f_ref\n")
            for k in range(len(bl["x"])):
                fh.write(",".join(output.FMT % v for v in
                                  (bl["x"][k], bl["Re_x"][k], bl["C_f"][k],
                                   bl["C_f_ref"][k])) + "\n")
    elif spec.case == "sine":
        err = cases.l2_error(solver.W,
                             cases.exact_sine(mesh, geom, solver.t),
                             geom.cells.volume)
        print("L2 density error at t=%.4g: %.6e" % (solver.t, err))
    print("finished after %d steps (t = %.6g)" % (solver.nstep, solver.t))
    return 0


def cmd_accuracy(args):
    ns = (20, 40, 80, 160)[:max(1, min(args.levels, 4))]
    print(" 1/h        L2 error     order")
    prev = [None]

    def progress(n, err):
        order = ("%5.2f" % np.log2(prev[0] / err)) if prev[0] else "  ---"
        print("%4d    %12.4e    %s" % (n, err, order), flush=True)
        prev[0] = err
    cases.run_accuracy(ns, t_end=args.t_end, progress=progress)
    return 0


def _check(name, ok, failures):
    print("%-52s %s" % (name, "ok" if ok else "FAIL"))
    if not ok:
        failures.append(name)


def cmd_verify(_args):
    failures = []
    rng = np.random.default_rng(12345)

    params = kinetic.MaxwellianParams(1.3, 0.4, -0.2, 0.9, 3)
    table = kinetic.MomentTable(params)
    for rng_kind, label in ((kinetic.FULL, "full"), (kinetic.POS, "u>0"),
                            (kinetic.NEG, "u<0")):
        got = kinetic.project_psi(table, kinetic.UNIT_TERMS, rng_kind)
        ref = oracles.project_psi_quad(params, kinetic.UNIT_TERMS, rng_kind)
        _check("Maxwellian moments vs quadrature (%s)" % label,
               np.allclose(got, ref, rtol=1e-10, atol=1e-12), failures)

    ctrl = np.array([[0.0, 0.0], [1.0, 0.3], [0.45, 0.35]])
    val, _ = q.line_integral(ctrl, np.array([0.2, 1.0, -0.5, 0.3, 0.1,
                                             0.05]))
    ref = oracles.line_integral_quad(
        ctrl, lambda x, y: 0.2 + x - 0.5 * y + 0.3 * x * x
        + 0.1 * x * y + 0.05 * y * y)
    _check("curved line integral vs adaptive quadrature",
           abs(val - ref) < 1e-11 * max(1.0, abs(ref)), failures)

    tri = np.array([[0, 0], [1, 0.1], [0.4, 1.0], [0.52, 0.02],
                    [0.72, 0.57], [0.18, 0.52]], dtype=float)
    got = q.tri6_monomial_integrals(tri)
    ok = True
    for k, (i, j) in enumerate(q.MONOMIALS):
        ref = oracles.tri6_integral_quad(
            tri, lambda x, y, i=i, j=j: x ** i * y ** j)
        ok = ok and abs(got[k] - ref) < 1e-11 * max(1.0, abs(ref))
    _check("quadratic-triangle monomial integrals", ok, failures)

    m = msh.unit_square(6)
    geom = msh.build_geometry(m)
    rc = recon.Reconstructor(m, geom)
    coef = rng.uniform(-1, 1, (6, 4))

    def field(x, y):
        return (coef[0] + coef[1] * x + coef[2] * y + coef[3] * x * x
                + coef[4] * x * y + coef[5] * y * y)
    mono = geom.cells.mono
    W = np.einsum("kd,ck->cd", coef, mono) / geom.cells.volume[:, None]
    cen = geom.cells.centroid
    gx = coef[1] + 2 * coef[3] * cen[:, 0:1] + coef[4] * cen[:, 1:2]
    gy = coef[2] + coef[4] * cen[:, 0:1] + 2 * coef[5] * cen[:, 1:2]
    data = rc.reconstruct(W, gx, gy)
    pts = rng.uniform(0.2, 0.8, (m.n_cells, 2))
    cells = np.arange(m.n_cells)
    inside = np.all(np.abs(pts - cen) < 0.5 / 6, axis=1)
    got, _, _ = rc.evaluate(data, cells[inside], pts[inside])
    _check("constrained least squares reproduces quadratics",
           np.allclose(got, field(pts[inside, 0], pts[inside, 1]),
                       rtol=1e-10, atol=1e-11), failures)

    Winf = np.array([1.0, 0.5, -0.3, 2.0])
    s = stepper.Solver(m, geom,
                       viscosity=stepper.constant_viscosity(0.01))
    s.set_state(np.tile(Winf, (m.n_cells, 1)))
    s.step(0.01)
    _check("uniform free stream is an exact steady state",
           np.allclose(s.W, Winf, rtol=1e-12, atol=1e-12), failures)

    print()
    if failures:
        print("%d check(s) failed" % len(failures))
        return 2
    print("all checks passed")
    return 0


def main(argv=None):
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return cmd_run(args)
        if args.command == "accuracy":
            return cmd_accuracy(args)
        return cmd_verify(args)
    except (config.ConfigError, cases.CaseError, msh.MeshError) as exc:
        print("configuration error: %s" % exc, file=sys.stderr)
        return 1
    except (stepper.NumericalError, kinetic.PositivityError,
            flux.WallClosureError, recon.ReconError) as exc:
        print("numerical failure: %s" % exc, file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
