"""Command-line interface.

Every subcommand reads its inputs from files or built-in graph names and
writes one artifact.  The fully resolved configuration goes into the
artifact's ``#`` header.  Exit codes: 0 success, 1 usage or input error,
2 numerical failure, 3 I/O error.
"""

from __future__ import annotations

import argparse
import re
import sys
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from . import io as gio
from .builders import FAMILIES, gaussian_clusters, gen_family, gen_mcgee, knn_gaussian_graph
from .evaluation import (
    check_theorem,
    design_strength,
    integrate,
    random_baseline,
    sweep_dimension,
    sweep_ell,
)
from .graph import DiffusionOperator, GraphError, WeightedGraph
from .heatball import energy, gram_matrix, theorem_bound
from .placement import METRICS, DistanceOracle, local_search_placement
from .spectral import ConvergenceError, eigendecompose, x_lambda_norm
from .weights import QuadratureRule, optimize_weights_qp, optimize_weights_spectral

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_IO = 0, 1, 2, 3

_BUILTIN = re.compile(r"^(cycle|path|complete|star)(\d+)$|^grid(\d+)x(\d+)$")


class UsageError(Exception):
    pass


class NumericalFailure(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


@dataclass
class RunConfig:
    """Resolved flags of one invocation, echoed into every output header."""

    subcommand: str
    options: dict = field(default_factory=dict)

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> RunConfig:
        opts = {k: v for k, v in sorted(vars(args).items())
                if k not in ("func", "command", "stamp")}
        cfg = cls(args.command, opts)
        if args.stamp:
            cfg.options["timestamp"] = datetime.now(timezone.utc).isoformat()
        return cfg

    def header(self) -> list[str]:
        lines = [f"graphquad {__version__} {self.subcommand}"]
        lines += [f"{k} = {_show(v)}" for k, v in self.options.items()]
        return lines


def _show(v) -> str:
    if isinstance(v, (list, tuple)):
        return ",".join(map(str, v))
    return str(v)


# --- argument helpers --------------------------------------------------------------


def load_graph(source: str) -> WeightedGraph:
    """A graph from an edge-list path or a built-in name.

    Built-ins: ``mcgee``, ``cycleN``, ``pathN``, ``completeN``, ``starM``
    (M leaves) and ``gridRxC``.
    """
    if Path(source).is_file():
        return gio.read_edge_list(source)
    if source == "mcgee":
        return gen_mcgee()
    m = _BUILTIN.match(source)
    if not m:
        raise UsageError(f"graph {source!r} is neither a file nor a built-in name")
    if m.group(1):
        return gen_family(m.group(1), int(m.group(2)))
    return gen_family("grid", int(m.group(3)), int(m.group(4)))


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _float_list(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated reals, got {text!r}")


def _range(text: str) -> list[int]:
    if ".." in text:
        lo, hi = text.split("..", 1)
        try:
            return list(range(int(lo), int(hi) + 1))
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad range {text!r}")
    return _int_list(text)


def _vertices(args) -> list[int]:
    if args.W is not None:
        return args.W
    if args.W_file is not None:
        return gio.read_vertices(args.W_file)
    raise UsageError("one of --W or --W-file is required")


def _emit(args, text: str) -> None:
    if getattr(args, "out", None):
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _header_text(cfg: RunConfig, extra=()) -> str:
    return "".join(f"# {line}\n" for line in list(cfg.header()) + list(extra))


# --- subcommands -------------------------------------------------------------------


def cmd_gen(args, cfg):
    if args.family == "mcgee":
        g = gen_mcgee()
    elif args.family == "grid":
        if args.rows is None or args.cols is None:
            raise UsageError("grid needs --rows and --cols")
        g = gen_family("grid", args.rows, args.cols)
    else:
        if args.n is None:
            raise UsageError(f"family {args.family} needs --n")
        g = gen_family(args.family, args.n)
    _emit(args, gio.format_edge_list(g, cfg.header()))


def cmd_knn_build(args, cfg):
    if args.points:
        cloud = gio.read_point_cloud(args.points, labeled=args.labeled)
    elif args.clusters:
        if args.seed is None:
            raise UsageError("--seed is required when sampling clusters")
        if not args.centers:
            raise UsageError("--clusters needs --centers")
        centers = [[float(x) for x in c.split(",")] for c in args.centers.split(";")]
        cloud = gaussian_clusters(args.clusters, centers, args.std, args.seed)
    else:
        raise UsageError("one of --points or --clusters is required")
    bandwidth = "global-mean-knn" if args.sigma is None else args.sigma
    g, sigma = knn_gaussian_graph(cloud, args.k, bandwidth, return_sigma=True)
    _emit(args, gio.format_edge_list(g, cfg.header() + [f"sigma = {sigma:.17g}"]))
    if args.points_out:
        Path(args.points_out).write_text(
            gio.format_point_cloud(cloud, labeled=cloud.labels is not None), encoding="utf-8")


def cmd_select(args, cfg):
    g = load_graph(args.graph)
    res = local_search_placement(DistanceOracle(g, args.metric), args.k, args.seed,
                                 args.max_passes)
    extra = [f"objective = {res.objective:.17g}", f"passes = {res.passes}",
             f"converged = {res.converged}"]
    _emit(args, gio.format_vertices(res.vertices, cfg.header() + extra))


def _check_qp(res):
    if not res.converged:
        raise NumericalFailure(
            f"weight optimization did not converge (KKT residual {res.kkt_residual:.3e})")


def cmd_weigh(args, cfg):
    g = load_graph(args.graph)
    M = gram_matrix(DiffusionOperator(g), _vertices(args), args.ell)
    res = optimize_weights_qp(M, nonneg=args.nonneg, tol=args.tol, max_iters=args.max_iters)
    _check_qp(res)
    rule = QuadratureRule(M.vertices, res.weights)
    extra = [f"energy = {energy(M, res.weights):.17g}", f"kkt_residual = {res.kkt_residual:.3e}",
             f"iterations = {res.iterations}"]
    _emit(args, gio.format_rule(rule, cfg.header() + extra))


def cmd_weigh_spectral(args, cfg):
    g = load_graph(args.graph)
    s = eigendecompose(DiffusionOperator(g))
    res = optimize_weights_spectral(s, _vertices(args), args.lam, nonneg=args.nonneg,
                                    tol=args.tol, max_iters=args.max_iters)
    _check_qp(res)
    extra = [f"objective = {res.objective:.17g}", f"dim = {res.dim}",
             f"kkt_residual = {res.kkt_residual:.3e}"]
    _emit(args, gio.format_rule(res.rule, cfg.header() + extra))


def _rule_in_gram_order(rule: QuadratureRule):
    order = np.argsort(rule.vertices)
    return [rule.vertices[i] for i in order], rule.weights[order]


def cmd_energy(args, cfg):
    g = load_graph(args.graph)
    rule = gio.read_rule(args.rule)
    W, a = _rule_in_gram_order(rule)
    M = gram_matrix(DiffusionOperator(g), W, args.ell)
    _emit(args, _header_text(cfg) + f"{energy(M, a):.17g}\n")


def cmd_bound(args, cfg):
    g = load_graph(args.graph)
    rule = gio.read_rule(args.rule)
    W, a = _rule_in_gram_order(rule)
    d = DiffusionOperator(g)
    e = energy(gram_matrix(d, W, args.ell), a)
    if args.f is not None:
        f_norm = x_lambda_norm(eigendecompose(d), gio.read_vector(args.f), args.lam)
    else:
        f_norm = args.f_norm
    b = theorem_bound(e, args.lam, args.ell, f_norm)
    _emit(args, _header_text(cfg, [f"energy = {e:.17g}", f"f_norm = {f_norm:.17g}"])
          + f"{b:.17g}\n")


def cmd_integrate(args, cfg):
    rule = gio.read_rule(args.rule)
    f = gio.read_vector(args.f)
    if args.graph is not None and load_graph(args.graph).n != len(f):
        raise UsageError("function length does not match the graph")
    est = integrate(rule, f)
    mean = float(f.mean())
    _emit(args, _header_text(cfg) + f"estimate {est:.17g}\nmean {mean:.17g}\n"
          f"error {mean - est:.17g}\n")


def cmd_strength(args, cfg):
    g = load_graph(args.graph)
    rule = gio.read_rule(args.rule)
    s = eigendecompose(DiffusionOperator(g))
    value = design_strength(s, rule, tol=args.tol, count=args.count)
    _emit(args, f"{value}\n")


def cmd_baseline(args, cfg):
    g = load_graph(args.graph)
    f = gio.read_vector(args.f)
    st = random_baseline(g, f, args.k, args.trials, args.seed)
    _emit(args, _header_text(cfg) + f"mean {st.mean:.17g}\nstd {st.std:.17g}\n"
          f"stderr {st.stderr:.17g}\n")


def _emit_result(args, cfg, result):
    result.config.update({k: _show(v) for k, v in cfg.options.items()})
    _emit(args, result.to_csv() if args.csv else result.to_text())


def cmd_sweep_ell(args, cfg):
    g = load_graph(args.graph)
    d = DiffusionOperator(g)
    fs = [gio.read_vector(p) for p in args.f]
    s = eigendecompose(d) if args.x_norm else None
    result = sweep_ell(d, _vertices(args), fs, args.lam, args.ell, nonneg=args.nonneg,
                       spectrum=s)
    _emit_result(args, cfg, result)


def cmd_sweep_dim(args, cfg):
    g = load_graph(args.graph)
    s = eigendecompose(DiffusionOperator(g))
    result = sweep_dimension(s, _vertices(args), args.dims, nonneg=args.nonneg)
    _emit_result(args, cfg, result)


def cmd_check_theorem(args, cfg):
    g = load_graph(args.graph)
    d = DiffusionOperator(g)
    s = eigendecompose(d)
    rng = np.random.default_rng(args.seed)
    rules = []
    for _ in range(args.rules):
        k = int(rng.integers(1, g.n + 1))
        W = sorted(int(v) for v in rng.choice(g.n, size=k, replace=False))
        a = rng.standard_normal(k)
        rules.append(QuadratureRule(W, a - (a.sum() - 1.0) / k))
    result = check_theorem(d, s, rules, args.lams, args.ells, args.functions,
                           seed=args.seed + 1)
    _emit_result(args, cfg, result)
    if result.column("violations").sum() > 0:
        raise NumericalFailure("error bound violated")


# --- parser ------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="graphquad", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"graphquad {__version__}")
    sub = p.add_subparsers(dest="command", parser_class=_Parser, required=True)

    def command(name, func, help):
        sp = sub.add_parser(name, help=help, description=help)
        sp.set_defaults(func=func)
        sp.add_argument("--out", help="output file (default: standard output)")
        sp.add_argument("--stamp", action="store_true", help="add a timestamp to the header")
        return sp

    def graph_arg(sp, required=True):
        sp.add_argument("--graph", required=required,
                        help="edge-list file or built-in name (mcgee, cycle8, star3, grid3x4, ...)")

    def vertex_args(sp):
        sp.add_argument("--W", type=_int_list, help="comma-separated vertex ids")
        sp.add_argument("--W-file", help="file with one vertex id per line")

    def solver_args(sp):
        sp.add_argument("--nonneg", action=argparse.BooleanOptionalAction, default=True,
                        help="constrain weights to be nonnegative (default on)")
        sp.add_argument("--tol", type=float, default=1e-9)
        sp.add_argument("--max-iters", type=int, default=100_000)

    sp = command("gen", cmd_gen, "write a standard graph as an edge list")
    sp.add_argument("--family", required=True, choices=FAMILIES + ("mcgee",))
    sp.add_argument("--n", type=int, help="size (number of leaves for star)")
    sp.add_argument("--rows", type=int)
    sp.add_argument("--cols", type=int)

    sp = command("knn-build", cmd_knn_build, "build a k-NN Gaussian-kernel graph")
    sp.add_argument("--points", help="CSV point cloud")
    sp.add_argument("--labeled", action="store_true", help="last CSV column is a label")
    sp.add_argument("--clusters", type=_int_list, help="sample Gaussian clusters of these sizes")
    sp.add_argument("--centers", help="cluster centers, e.g. '0,0;4,0'")
    sp.add_argument("--std", type=float, default=1.0)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--k", type=int, default=10)
    sp.add_argument("--sigma", type=float, help="fixed bandwidth (default: global-mean-knn)")
    sp.add_argument("--points-out", help="also write the (sampled) cloud as CSV")

    sp = command("select", cmd_select, "place vertices by local search on mutual distance")
    graph_arg(sp)
    sp.add_argument("--k", type=int, required=True)
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--metric", choices=METRICS, default="hop")
    sp.add_argument("--max-passes", type=int, default=1000)

    sp = command("weigh", cmd_weigh, "heat-ball packing weights for a vertex set")
    graph_arg(sp)
    vertex_args(sp)
    sp.add_argument("--ell", type=int, required=True)
    solver_args(sp)

    sp = command("weigh-spectral", cmd_weigh_spectral, "weights minimizing the X_lambda residual")
    graph_arg(sp)
    vertex_args(sp)
    sp.add_argument("--lam", type=float, required=True)
    solver_args(sp)

    sp = command("energy", cmd_energy, "heat-ball packing energy of a rule")
    graph_arg(sp)
    sp.add_argument("--rule", required=True)
    sp.add_argument("--ell", type=int, required=True)

    sp = command("bound", cmd_bound, "error bound for a rule")
    graph_arg(sp)
    sp.add_argument("--rule", required=True)
    sp.add_argument("--ell", type=int, required=True)
    sp.add_argument("--lam", type=float, required=True)
    group = sp.add_mutually_exclusive_group(required=True)
    group.add_argument("--f", help="function file; its X_lambda norm is used")
    group.add_argument("--f-norm", type=float)

    sp = command("integrate", cmd_integrate, "apply a rule to a function")
    graph_arg(sp, required=False)
    sp.add_argument("--rule", required=True)
    sp.add_argument("--f", required=True)

    sp = command("strength", cmd_strength, "number of eigenfunctions integrated exactly")
    graph_arg(sp)
    sp.add_argument("--rule", required=True)
    sp.add_argument("--tol", type=float, default=1e-8)
    sp.add_argument("--count", choices=("eigenspace", "eigenvector"), default="eigenspace")

    sp = command("baseline", cmd_baseline, "error of uniform weights on random subsets")
    graph_arg(sp)
    sp.add_argument("--f", required=True)
    sp.add_argument("--k", type=int, required=True)
    sp.add_argument("--trials", type=int, default=10_000)
    sp.add_argument("--seed", type=int, required=True)

    sp = command("sweep-ell", cmd_sweep_ell, "refit weights over a range of diffusion steps")
    graph_arg(sp)
    vertex_args(sp)
    sp.add_argument("--f", action="append", required=True, help="function file (repeatable)")
    sp.add_argument("--lam", type=float, required=True)
    sp.add_argument("--ell", type=_range, required=True, help="e.g. 1..12 or 1,2,4")
    sp.add_argument("--nonneg", action=argparse.BooleanOptionalAction, default=True)
    sp.add_argument("--x-norm", action="store_true",
                    help="use the X_lambda norm of f in the bound (needs the spectrum)")
    sp.add_argument("--csv", action="store_true")

    sp = command("sweep-dim", cmd_sweep_dim, "spectral weights across X_lambda dimensions")
    graph_arg(sp)
    vertex_args(sp)
    sp.add_argument("--dims", type=_int_list, required=True)
    sp.add_argument("--nonneg", action=argparse.BooleanOptionalAction, default=True)
    sp.add_argument("--csv", action="store_true")

    sp = command("check-theorem", cmd_check_theorem, "test the error bound on random rules")
    graph_arg(sp)
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--rules", type=int, default=10)
    sp.add_argument("--functions", type=int, default=20)
    sp.add_argument("--lams", type=_float_list, default=[0.3, 0.6, 0.9])
    sp.add_argument("--ells", type=_range, default=list(range(1, 9)))
    sp.add_argument("--csv", action="store_true")
    return p


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = RunConfig.from_args(args)
        args.func(args, cfg)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except (NumericalFailure, ConvergenceError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (OSError, gio.FormatError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (GraphError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
