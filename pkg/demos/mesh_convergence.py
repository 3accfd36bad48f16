"""Discretization order check by manufactured solutions.

Plant a smooth exact solution of -Lap u + u = f, solve on a sequence of
uniformly refined meshes, and confirm the L2 error contracts at the
second-order rate expected of piecewise-linear elements.

Run:  python demos/mesh_convergence.py
"""

import numpy as np

from barrierfem import (
    FeFunction,
    Marker,
    ProblemSpec,
    apply_dirichlet,
    generate_annulus_mesh,
    generate_interval_mesh,
    l2_error,
    newton_standard,
)


def study(name, spec, exact, meshes):
    errors = []
    print(f"{name}:")
    for mesh in meshes:
        u0 = apply_dirichlet(FeFunction.constant(mesh, 0.0), mesh, spec)
        report = newton_standard(spec, mesh, u0)
        err = l2_error(mesh, report.solution, exact)
        order = "" if not errors else f"   order {np.log2(errors[-1] / err):.2f}"
        print(f"  {mesh.num_vertices:>5} vertices   L2 error {err:.3e}{order}")
        errors.append(err)
    print()


def exact_1d(x):
    return np.sin(np.pi * np.atleast_2d(x)[:, 0]) + 2.0


def source_1d(x):
    s = np.atleast_2d(x)[:, 0]
    return (np.pi**2 + 1.0) * np.sin(np.pi * s) + 2.0


study(
    "interval [0, 1]",
    ProblemSpec(power_terms=((1, 1.0),), source=source_1d, dirichlet_data=exact_1d),
    exact_1d,
    [generate_interval_mesh(0, 1, n) for n in (8, 16, 32, 64, 128)],
)


def exact_2d(x):
    x = np.atleast_2d(x)
    return np.sin(x[:, 0]) * np.cos(x[:, 1]) + 2.0


def source_2d(x):
    x = np.atleast_2d(x)
    return 3.0 * np.sin(x[:, 0]) * np.cos(x[:, 1]) + 2.0


study(
    "annulus 1 <= r <= 2",
    ProblemSpec(power_terms=((1, 1.0),), source=source_2d, dirichlet_data=exact_2d),
    exact_2d,
    [
        generate_annulus_mesh(1, 2, r, a, inner=Marker.DIRICHLET, outer=Marker.DIRICHLET)
        for r, a in ((3, 12), (6, 24), (12, 48), (24, 96))
    ],
)

print("both studies contract at order ~2, as expected for P1 elements.")
