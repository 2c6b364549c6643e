"""``hessian-bellman <solve|ladder|props|audit> --config PATH [--out DIR] [--seed N]``.

Exit status: 0 when every asserted property holds, 1 on a property
failure, 2 on a configuration error, 3 on non-convergence, 4 on I/O
errors.  Failures print a ``[failure]`` block to stderr with ``kind``,
``field`` and ``message`` lines.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import warnings

import numpy as np

from . import props
from .bellman import build_control_net
from .config import COMMANDS, load_config
from .exact import exact_solution, radial_square_solution
from .io import format_section, read_csv, write_csv
from .solver.howard import ConvergenceError, policy_iteration
from .solver.ladder import LadderError, degeneracy_ladder
from .solver.monitors import admissibility_audit
from .solver.problem import ConfigError, build_problem

THREADS_ENV = "HESSIAN_BELLMAN_THREADS"

EXIT_OK, EXIT_PROPERTY, EXIT_CONFIG, EXIT_CONVERGENCE, EXIT_IO = 0, 1, 2, 3, 4


class PropertyFailure(RuntimeError):
    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


def failure_block(kind, message, field=None):
    lines = ["[failure]", f"kind = {kind}"]
    if field:
        lines.append(f"field = {field}")
    lines.append(f"message = {' '.join(str(message).split())}")
    return "\n".join(lines)


def _threads():
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        n = int(raw)
    except ValueError as exc:
        raise ConfigError(f"{THREADS_ENV} must be an integer, got {raw!r}", THREADS_ENV) from exc
    if n < 1:
        raise ConfigError(f"{THREADS_ENV} must be positive", THREADS_ENV)
    return n


def _problem(cfg):
    table = None
    if cfg.g == "tabulated":
        if cfg.g_file is None:
            raise ConfigError("tabulated g needs problem.g_file", "problem.g_file")
        try:
            table = np.loadtxt(cfg.g_file, delimiter=",", skiprows=1, ndmin=2)
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot read g table: {exc}", "problem.g_file") from exc
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return build_problem(cfg.domain, cfg.d, cfg.m, cfg.h, cfg.g, cfg.g_value, cfg.g_scale, cfg.K, table)


def _net(cfg):
    try:
        return build_control_net(cfg.d, cfg.m, cfg.frames, cfg.profiles, cfg.net_seed)
    except ValueError as exc:
        raise ConfigError(str(exc), "net.frames") from exc


def _problem_section(cfg, problem):
    return format_section("problem", {
        "domain": cfg.domain, "d": cfg.d, "m": cfg.m, "h": problem.h, "g": cfg.g,
        "unknowns": problem.grid.size,
    })


def _net_section(cfg, net):
    return format_section("net", {"frames": cfg.frames, "profiles": cfg.profiles, "seed": cfg.net_seed,
                                  "controls": len(net)})


def _assumption_section(problem):
    a = problem.assumption
    return format_section("assumption", {
        "K": a.K, "K_needed": a.K_needed, "gradient_ok": a.gradient_ok, "min_slack": a.min_slack,
        "sup_ok": a.sup_ok, "passed": a.passed, "warnings": "; ".join(a.warnings) or "none",
    })


def _solve_sections(rep):
    return [
        format_section("solver", {
            "method": rep.method, "iterations": rep.iterations, "converged": rep.converged,
            "residual": rep.residual, "residual_history": rep.residual_history,
            "u_max": float(np.max(rep.u, initial=0.0)),
        }),
        format_section("monitors", rep.monitors.as_dict()),
    ]


def _error_section(problem, u, exact=None):
    if exact is None:
        exact = exact_solution(problem)
    if exact is None:
        return None
    return format_section("error", {"sup_error": float(np.max(np.abs(u - exact), initial=0.0))})


def _write(path, text):
    with open(path, "w", newline="\n") as fh:
        fh.write(text.rstrip("\n") + "\n")


def run_solve(cfg):
    problem = _problem(cfg)
    net = _net(cfg)
    rep = policy_iteration(problem, net, cfg.tol, cfg.max_iters, cfg.method, cfg.linear_solver)
    write_csv(os.path.join(cfg.out_dir, "u.csv"), problem.grid, rep.u)
    sections = [format_section("run", {"command": "solve"}), _problem_section(cfg, problem), _net_section(cfg, net),
                _assumption_section(problem), *_solve_sections(rep)]
    if (err := _error_section(problem, rep.u)) is not None:
        sections.append(err)
    text = "\n\n".join(sections)
    _write(os.path.join(cfg.out_dir, "report.txt"), text)
    return text


def run_ladder(cfg):
    problem = _problem(cfg)
    net = _net(cfg)
    lad = degeneracy_ladder(problem, cfg.n_list, net, cfg.tol, cfg.max_iters, cfg.method, cfg.linear_solver)
    sections = [format_section("run", {"command": "ladder"}), _problem_section(cfg, problem), _net_section(cfg, net),
                _assumption_section(problem)]
    exact = None
    if problem.domain_name == "disc" and cfg.g == "radial-square" and cfg.m == 2:
        exact = np.sqrt(cfg.g_scale) * radial_square_solution(problem.grid.coords, cfg.d)
    elif cfg.g == "constant":
        exact = exact_solution(problem)
    for rung in lad.rungs:
        write_csv(os.path.join(cfg.out_dir, f"u_n{rung.n}.csv"), problem.grid, rung.report.u)
        rows = {"n": rung.n, "shift": rung.shift, "iterations": rung.report.iterations,
                "residual": rung.report.residual, **rung.report.monitors.as_dict()}
        if exact is not None:
            rows["sup_error"] = float(np.max(np.abs(rung.report.u - exact)))
        sections.append(format_section(f"rung n={rung.n}", rows))
    sections.append(format_section("ladder", {
        "n": [r.n for r in lad.rungs],
        "top_half": [lad.rungs[i].n for i in lad.top_half],
        "d2_variation": lad.d2_variation,
        "c11_ok": lad.c11_ok,
        "distances": [float(x) for x in lad.distances[np.triu_indices(len(lad.rungs), 1)]],
    }))
    text = "\n\n".join(sections)
    _write(os.path.join(cfg.out_dir, "ladder_report.txt"), text)
    if not lad.c11_ok:
        raise PropertyFailure(f"interior second differences vary by {lad.d2_variation:.3g} > 10% "
                              "across the top half of the ladder", "ladder")
    return text


def run_props(cfg):
    rows = props.run_all(pairs=cfg.pairs, seed=cfg.props_seed, cases=cfg.cases, workers=_threads())
    text = props.format_table(rows)
    _write(os.path.join(cfg.out_dir, "props_report.txt"), text)
    failed = [r.name for _, r in rows if not r.passed]
    if failed:
        raise PropertyFailure(f"{len(failed)} properties violated: {'; '.join(failed)}", "props")
    return text


def run_audit(cfg):
    problem = _problem(cfg)
    try:
        u = read_csv(cfg.u_file, problem.grid)
    except OSError as exc:
        raise ConfigError(f"cannot read {cfg.u_file}: {exc}", "audit.u_file") from exc
    except ValueError as exc:
        raise ConfigError(str(exc), "audit.u_file") from exc
    audit = admissibility_audit(u, problem)
    text = "\n\n".join([format_section("run", {"command": "audit"}), _problem_section(cfg, problem),
                        format_section("audit", audit)])
    _write(os.path.join(cfg.out_dir, "audit_report.txt"), text)
    if audit.fraction < cfg.min_fraction:
        raise PropertyFailure(f"only {audit.fraction:.4f} of nodes are admissible "
                              f"(required {cfg.min_fraction})", "audit.min_fraction")
    return text


RUNNERS = {"solve": run_solve, "ladder": run_ladder, "props": run_props, "audit": run_audit}


def build_parser():
    p = argparse.ArgumentParser(prog="hessian-bellman",
                                description="Bellman-form solver and property checks for m-Hessian equations.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", required=True, help="run configuration file")
    p.add_argument("--out", help="output directory (overrides [output] dir)")
    p.add_argument("--seed", type=int, help="seed for the control net and the property suites")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config, args.command)
        if args.out:
            cfg.out_dir = args.out
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError("--seed must be nonnegative", "seed")
            cfg.net_seed = cfg.props_seed = args.seed
        try:
            os.makedirs(cfg.out_dir, exist_ok=True)
        except OSError as exc:
            raise ConfigError(f"cannot create output directory: {exc}", "output.dir") from exc
        text = RUNNERS[cfg.command](cfg)
    except ConfigError as exc:
        print(failure_block("config", exc, exc.field), file=sys.stderr)
        return EXIT_CONFIG
    except (ConvergenceError, LadderError) as exc:
        print(failure_block("convergence", exc, "solver"), file=sys.stderr)
        return EXIT_CONVERGENCE
    except PropertyFailure as exc:
        print(failure_block("property", exc, exc.field), file=sys.stderr)
        return EXIT_PROPERTY
    except OSError as exc:
        print(failure_block("io", exc, "output.dir"), file=sys.stderr)
        return EXIT_IO
    print(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
