"""Mass conservation at an isothermal wall under hypersonic flow.

A Mach 8.03 stream hits a cold-wall half cylinder on a reduced mesh.
The kinetic wall flux closes the incoming half of the distribution with
a resting wall-temperature Maxwellian whose density and time derivative
are chosen so the mass flux vanishes identically, not just to
truncation error. This script prints the integrated wall mass flux per
step: it should sit at rounding level (~1e-16) from the very first
iteration while the bow shock is still forming.
"""

import numpy as np

from cgks2d import cases


def main():
    spec = cases.make_case("hypersonic_cylinder",
                           mesh_params=dict(n_circ_pts=51, n_rad_pts=17,
                                            wall_h=5e-3))
    mesh, geom = cases.build_mesh(spec)
    solver = cases.build_solver(spec, mesh, geom)
    print("cells: %d, wall faces: %d"
          % (mesh.n_cells, int(np.sum(mesh.face_tag == 2))))
    print(" step      wall mass flux      min density")
    worst = 0.0
    for k in range(120):
        st = solver.step(solver.cfl_dt(spec.cfl))
        worst = max(worst, abs(st.wall_mass_flux))
        if k % 10 == 0:
            print("%5d      %12.3e      %10.4f"
                  % (k, st.wall_mass_flux, solver.W[:, 0].min()),
                  flush=True)
    print("\nlargest |mass flux| over the run: %.3e "
          "(free-stream unit: %.3g)" % (worst, spec.Ma))


if __name__ == "__main__":
    main()
