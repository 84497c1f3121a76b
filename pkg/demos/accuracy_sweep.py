"""Grid-refinement study of the advected density wave.

A sine-shaped density perturbation is carried diagonally across a
periodic unit square by a uniform velocity field. The exact solution at
t = 1 is the initial condition, so the L2 density error isolates the
spatial and temporal discretization error. With quadratic
reconstruction and the two-stage fourth-order integrator the error
should fall by roughly a factor of eight per mesh halving.

Run with --full for the 1/20 .. 1/160 sweep (several minutes); the
default stops at 1/80.
"""

import argparse
import time

import numpy as np

from cgks2d import cases


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--full", action="store_true",
                    help="include the 160x160 mesh")
    args = ap.parse_args()
    ns = (20, 40, 80, 160) if args.full else (20, 40, 80)

    print("mesh      L2 density error   observed order")
    t0 = time.time()
    prev = None
    for n in ns:
        spec = cases.make_case("sine", mesh_params=dict(n=n))
        mesh, geom = cases.build_mesh(spec)
        solver = cases.build_solver(spec, mesh, geom)
        solver.run_unsteady(1.0, cfl=0.5)
        err = cases.l2_error(solver.W, cases.exact_sine(mesh, geom, 1.0),
                             geom.cells.volume)
        order = "   --" if prev is None else "%5.2f" % np.log2(prev / err)
        print("1/%-4d    %12.4e       %s   (%.0fs)"
              % (n, err, order, time.time() - t0), flush=True)
        prev = err


if __name__ == "__main__":
    main()
