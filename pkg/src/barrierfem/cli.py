"""Batch experiment driver and command-line interface.

Config files are flat ASCII `key = value` lines with `#` comments and
dot-namespaced keys, e.g.::

    problem.example = 1
    mesh.kind = shells          # the three built-in spherical shells
    methods = newton, safeguarded, barrier
    u0.constant = 1.0
    solver.mu0 = 1.0

Each (method x mesh) solve becomes one CSV row with columns
method,mesh,iterations,residual,sign,converged,mu_steps,wall_ms; the
process exit code is 0 iff every requested solve converged.
"""

import argparse
import datetime
import sys
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import BarrierFemError, ConfigError, InvalidGeometry, InvalidRange
from .fem import apply_dirichlet
from .mesh import (
    Marker,
    generate_annulus_mesh,
    generate_interval_mesh,
    generate_shell_mesh,
    load_mesh,
    save_mesh,
)
from .problem import FeFunction, builtin_example, lichnerowicz_spec
from .solvers import (
    SolveReport,
    SolverConfig,
    barrier_solve,
    newton_safeguarded,
    newton_standard,
)

CSV_HEADER = "method,mesh,iterations,residual,sign,converged,mu_steps,wall_ms"

METHODS = ("newton", "safeguarded", "barrier")

#: inner radii of the three built-in spherical shells (outer radius 100)
BUILTIN_SHELL_RADII = (50.0, 10.0, 1.0)
BUILTIN_SHELL_REFINEMENT = 2
BUILTIN_SHELL_LAYERS = 5


def builtin_shell_meshes(marker=Marker.ROBIN):
    """The three desk-scale experiment shells (labels shell_r50/r10/r1)."""
    meshes = []
    for r_in in BUILTIN_SHELL_RADII:
        mesh = generate_shell_mesh(
            r_in,
            100.0,
            BUILTIN_SHELL_REFINEMENT,
            inner=marker,
            outer=marker,
            n_layers=BUILTIN_SHELL_LAYERS,
        )
        meshes.append((f"shell_r{int(r_in)}", mesh))
    return meshes


@dataclass
class ExperimentConfig:
    spec: object
    meshes: list                 # (label, SimplicialMesh) pairs
    methods: list
    u0_value: float
    u0_vector: object            # optional explicit start vector
    solver: SolverConfig


def _parse_entries(path):
    entries = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            text = raw.split("#", 1)[0].strip()
            if not text:
                continue
            if "=" not in text:
                raise ConfigError("expected 'key = value'", line=lineno)
            key, _, value = text.partition("=")
            key, value = key.strip(), value.strip()
            if not key or not value:
                raise ConfigError("empty key or value", line=lineno)
            if key in entries:
                raise ConfigError(f"duplicate key {key!r}", line=lineno)
            entries[key] = (value, lineno)
    return entries


class _Entries:
    def __init__(self, entries):
        self.entries = entries
        self.used = set()

    def take(self, key, default=None, convert=str):
        if key not in self.entries:
            return default
        value, line = self.entries[key]
        self.used.add(key)
        try:
            return convert(value)
        except (TypeError, ValueError):
            raise ConfigError(f"bad value {value!r} for {key}", line=line) from None

    def line_of(self, key):
        return self.entries[key][1] if key in self.entries else None

    def check_all_used(self):
        for key, (_, line) in self.entries.items():
            if key not in self.used:
                raise ConfigError(f"unknown key {key!r}", line=line)


def _to_bool(text):
    lowered = text.lower()
    if lowered in ("true", "yes", "1", "on"):
        return True
    if lowered in ("false", "no", "0", "off"):
        return False
    raise ValueError(text)


def _to_marker(text):
    return Marker(text.lower())


def load_experiment(path):
    """Parse and validate a config file into an ExperimentConfig."""
    ent = _Entries(_parse_entries(path))

    example = ent.take("problem.example", convert=int)
    if example is not None:
        if example not in (1, 2, 3, 4):
            raise ConfigError(
                f"problem.example must be 1..4, got {example}",
                line=ent.line_of("problem.example"),
            )
        spec = builtin_example(example)
        default_marker = Marker.ROBIN if example in (1, 2) else Marker.DIRICHLET
    else:
        spec = lichnerowicz_spec(
            diffusion=ent.take("problem.diffusion", 1.0, float),
            scalar_curvature=ent.take("problem.scalar_curvature", 0.0, float),
            tau=ent.take("problem.tau", 0.0, float),
            sigma=ent.take("problem.sigma", 0.0, float),
            rho=ent.take("problem.rho", 0.0, float),
            robin_coeff=ent.take("problem.robin_c", 0.0, float),
            robin_data=ent.take("problem.robin_g", 0.0, float),
            dirichlet_data=ent.take("problem.dirichlet_g", 0.0, float),
        )
        default_marker = Marker.ROBIN

    inner = ent.take("mesh.inner_marker", default_marker, _to_marker)
    outer = ent.take("mesh.outer_marker", default_marker, _to_marker)

    kind = ent.take("mesh.kind")
    if kind is None:
        raise ConfigError("missing mesh.kind")
    try:
        if kind == "interval":
            mesh = generate_interval_mesh(
                ent.take("mesh.a", 0.0, float),
                ent.take("mesh.b", 1.0, float),
                ent.take("mesh.n_cells", 64, int),
                left=inner,
                right=outer,
            )
            meshes = [("interval", mesh)]
        elif kind == "annulus":
            mesh = generate_annulus_mesh(
                ent.take("mesh.r_in", 1.0, float),
                ent.take("mesh.r_out", 2.0, float),
                ent.take("mesh.n_radial", 8, int),
                ent.take("mesh.n_angular", 32, int),
                inner=inner,
                outer=outer,
            )
            meshes = [("annulus", mesh)]
        elif kind == "shell":
            mesh = generate_shell_mesh(
                ent.take("mesh.r_in", 50.0, float),
                ent.take("mesh.r_out", 100.0, float),
                ent.take("mesh.refinement", BUILTIN_SHELL_REFINEMENT, int),
                inner=inner,
                outer=outer,
                n_layers=ent.take("mesh.n_layers", None, int),
            )
            meshes = [("shell", mesh)]
        elif kind == "shells":
            meshes = builtin_shell_meshes(inner)
        elif kind == "file":
            mesh_path = ent.take("mesh.path")
            if mesh_path is None:
                raise ConfigError("mesh.kind = file requires mesh.path")
            meshes = [(Path(mesh_path).stem, load_mesh(mesh_path))]
        else:
            raise ConfigError(
                f"unknown mesh.kind {kind!r}", line=ent.line_of("mesh.kind")
            )
    except InvalidGeometry as exc:
        raise ConfigError(str(exc), line=ent.line_of("mesh.kind")) from exc

    methods_text = ent.take("methods", "newton")
    methods = [tok.strip() for tok in methods_text.split(",") if tok.strip()]
    if not methods:
        raise ConfigError("need at least one method", line=ent.line_of("methods"))
    for method in methods:
        if method not in METHODS:
            raise ConfigError(
                f"unknown method {method!r} (choose from {', '.join(METHODS)})",
                line=ent.line_of("methods"),
            )

    u0_vector = None
    u0_file = ent.take("u0.file")
    if u0_file is not None:
        u0_vector = np.loadtxt(u0_file).ravel()
    u0_value = ent.take("u0.constant", 1.0, float)

    solver = SolverConfig(
        eps=ent.take("solver.eps", 1.0e-7, float),
        mu0=ent.take("solver.mu0", 1.0, float),
        gamma=ent.take("solver.gamma", 0.1, float),
        eta=ent.take("solver.eta", 1.0e-4, float),
        backtrack=ent.take("solver.backtrack", 0.5, float),
        max_outer=ent.take("solver.max_outer", 60, int),
        max_inner=ent.take("solver.max_inner", 100, int),
        final_polish_mu_zero=ent.take("solver.final_polish", True, _to_bool),
    )

    ent.check_all_used()
    return ExperimentConfig(spec, meshes, methods, u0_value, u0_vector, solver)


def run_method(method, spec, mesh, u0, solver_config):
    """Dispatch one solve; failures become unconverged reports, not raises."""
    try:
        if method == "newton":
            return newton_standard(spec, mesh, u0, solver_config)
        if method == "safeguarded":
            return newton_safeguarded(spec, mesh, u0, solver_config)
        if method == "barrier":
            return barrier_solve(spec, mesh, u0, solver_config)
    except BarrierFemError as exc:
        return SolveReport(method=method, failure_reason=str(exc))
    raise ValueError(f"unknown method {method!r}")


def _csv_row(method_label, mesh_label, report):
    return ",".join(
        [
            method_label,
            mesh_label,
            str(report.total_newton_iterations),
            f"{report.final_residual:.6e}",
            report.sign.value,
            "true" if report.converged else "false",
            str(len(report.mu_trajectory)),
            f"{report.wall_time * 1000.0:.1f}",
        ]
    )


def run(config_path, out_dir="."):
    """Execute every (method x mesh) solve of a config; returns exit code.

    Writes results.csv (deterministic modulo the wall_ms column) and
    run_metadata.txt (timestamps) into out_dir.
    """
    config = load_experiment(config_path)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    started = datetime.datetime.now().isoformat(timespec="seconds")

    rows = [CSV_HEADER]
    all_converged = True
    for method in config.methods:
        for label, mesh in config.meshes:
            if config.u0_vector is not None:
                u0 = FeFunction(config.u0_vector)
            else:
                u0 = FeFunction.constant(mesh, config.u0_value)
            report = run_method(method, config.spec, mesh, u0, config.solver)
            all_converged &= report.converged
            rows.append(_csv_row(method, label, report))

    (out / "results.csv").write_text("\n".join(rows) + "\n")
    (out / "run_metadata.txt").write_text(
        f"started: {started}\nfinished: "
        f"{datetime.datetime.now().isoformat(timespec='seconds')}\n"
        f"config: {config_path}\n"
    )
    return 0 if all_converged else 1


def figure_integrand(scalar_curvature, u):
    """Pointwise part of the 1D energy integrand,
    I(u) = (R/16) u^2 + u^6 + u^-6 + u^-2 (gradient term omitted).

    Only even powers appear, so I(-u) = I(u); evaluating through |u|
    makes that exact in floating point as well.
    """
    a = np.abs(np.asarray(u, dtype=float))
    return scalar_curvature * a**2 / 16.0 + a**6 + a**-6.0 + a**-2.0


def plot_integrand(scalar_curvature, u_min, u_max, samples, out_path):
    """Sample the 1D energy integrand on a monotone grid into a CSV."""
    if not (0 < u_min < u_max):
        raise InvalidRange(f"need 0 < u_min < u_max, got [{u_min}, {u_max}]")
    if samples < 2:
        raise InvalidRange("need at least 2 samples")
    grid = np.linspace(u_min, u_max, samples)
    values = figure_integrand(scalar_curvature, grid)
    lines = [
        "# pointwise energy integrand I(u) = (R/16) u^2 + u^6 + u^-6 + u^-2",
        "# gradient term of the 1D energy omitted (pointwise profile in u)",
        f"# R = {scalar_curvature:g}",
        "u,I",
    ]
    lines += [f"{float(u)!r},{float(v)!r}" for u, v in zip(grid, values)]
    Path(out_path).write_text("\n".join(lines) + "\n")
    return out_path


# expected qualitative outcomes of the benchmark grid: (converged, sign)
# per method, same on every shell; None means mesh-dependent (not scored)
_SUITE = {
    1: {
        "newton": (True, "+"),
        "safeguarded": (True, "+"),
        "barrier@mu0=0": (True, "+"),
        "barrier@mu0=1": (True, "+"),
    },
    2: {
        "newton": None,
        "safeguarded": None,
        "barrier@mu0=50": (True, "+"),
    },
    3: {
        "newton": (True, "+"),
        "safeguarded": (True, "+"),
        "barrier@mu0=1": (True, "+"),
    },
    4: {
        "newton": None,
        "safeguarded": None,
        "barrier@mu0=10": (True, "+"),
    },
}


def _suite_method(label, spec, mesh, u0, base):
    if label == "newton":
        return newton_standard(spec, mesh, u0, base)
    if label == "safeguarded":
        return newton_safeguarded(spec, mesh, u0, base)
    mu0 = float(label.split("=", 1)[1])
    return barrier_solve(spec, mesh, u0, replace(base, mu0=mu0))


def emit_paper_suite(output_dir):
    """One-command benchmark grid on the three built-in shells.

    Writes example1.csv .. example4.csv, integrand.csv and summary.txt;
    returns the list of written paths.
    """
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    base = SolverConfig()
    summary = ["benchmark grid on shells r_in in {50, 10, 1}, r_out = 100", ""]
    written = []

    for example in (1, 2, 3, 4):
        spec = builtin_example(example)
        marker = Marker.ROBIN if example in (1, 2) else Marker.DIRICHLET
        meshes = builtin_shell_meshes(marker)
        rows = [CSV_HEADER]
        for method_label in _SUITE[example]:
            for mesh_label, mesh in meshes:
                u0 = FeFunction.constant(mesh, 1.0)
                try:
                    report = _suite_method(method_label, spec, mesh, u0, base)
                except BarrierFemError as exc:
                    report = SolveReport(method=method_label, failure_reason=str(exc))
                rows.append(_csv_row(method_label, mesh_label, report))
                expected = _SUITE[example][method_label]
                actual = (report.converged, report.sign.value)
                if expected is None:
                    verdict = f"observed {actual[1]}, converged={actual[0]} (not scored)"
                else:
                    verdict = "MATCH" if actual == expected else (
                        f"MISMATCH (expected sign {expected[1]}, "
                        f"converged={expected[0]}; got {actual[1]}, {actual[0]})"
                    )
                summary.append(
                    f"example{example} {method_label:<16} {mesh_label:<9} {verdict}"
                )
        path = out / f"example{example}.csv"
        path.write_text("\n".join(rows) + "\n")
        written.append(path)
        summary.append("")

    integrand_path = out / "integrand.csv"
    plot_integrand(-1000.0, 0.4, 3.0, 200, integrand_path)
    written.append(integrand_path)

    summary_path = out / "summary.txt"
    summary_path.write_text("\n".join(summary) + "\n")
    written.append(summary_path)
    return written


def _cmd_solve(args):
    return run(args.config, args.out)


def _cmd_plot_integrand(args):
    plot_integrand(args.R, args.min, args.max, args.samples, args.out)
    return 0


def _cmd_paper_suite(args):
    emit_paper_suite(args.out)
    return 0


def _cmd_mesh_gen(args):
    inner = Marker(args.inner_marker)
    outer = Marker(args.outer_marker)
    if args.kind == "interval":
        mesh = generate_interval_mesh(args.a, args.b, args.n_cells, left=inner, right=outer)
    elif args.kind == "annulus":
        mesh = generate_annulus_mesh(
            args.r_in, args.r_out, args.n_radial, args.n_angular, inner=inner, outer=outer
        )
    else:
        mesh = generate_shell_mesh(
            args.r_in, args.r_out, args.refinement,
            inner=inner, outer=outer, n_layers=args.n_layers,
        )
    save_mesh(mesh, args.out)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="barrierfem",
        description="Positive solutions of critical-exponent semilinear elliptic PDEs",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="run the solves described by a config file")
    p_solve.add_argument("--config", required=True)
    p_solve.add_argument("--out", default=".")
    p_solve.set_defaults(func=_cmd_solve)

    p_plot = sub.add_parser("plot-integrand", help="sample the 1D energy integrand")
    p_plot.add_argument("--R", type=float, required=True)
    p_plot.add_argument("--min", type=float, required=True)
    p_plot.add_argument("--max", type=float, required=True)
    p_plot.add_argument("--samples", type=int, default=200)
    p_plot.add_argument("--out", required=True)
    p_plot.set_defaults(func=_cmd_plot_integrand)

    p_suite = sub.add_parser("paper-suite", help="emit the benchmark experiment grid")
    p_suite.add_argument("--out", required=True)
    p_suite.set_defaults(func=_cmd_paper_suite)

    p_mesh = sub.add_parser("mesh-gen", help="generate a mesh file")
    p_mesh.add_argument("--kind", choices=("interval", "annulus", "shell"), required=True)
    p_mesh.add_argument("--out", required=True)
    p_mesh.add_argument("--a", type=float, default=0.0)
    p_mesh.add_argument("--b", type=float, default=1.0)
    p_mesh.add_argument("--n-cells", type=int, default=64)
    p_mesh.add_argument("--r-in", type=float, default=1.0)
    p_mesh.add_argument("--r-out", type=float, default=2.0)
    p_mesh.add_argument("--n-radial", type=int, default=8)
    p_mesh.add_argument("--n-angular", type=int, default=32)
    p_mesh.add_argument("--refinement", type=int, default=2)
    p_mesh.add_argument("--n-layers", type=int, default=None)
    p_mesh.add_argument("--inner-marker", choices=("dirichlet", "robin"), default="robin")
    p_mesh.add_argument("--outer-marker", choices=("dirichlet", "robin"), default="robin")
    p_mesh.set_defaults(func=_cmd_mesh_gen)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except BarrierFemError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
