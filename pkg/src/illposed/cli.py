"""Command-line interface: ``illposed <group> <action> [options]``.

Operators are named with a compact ``kind:param:grid`` notation::

    integration:<order>[:<grid>]        hausdorff:<moments>[:<grid>]
    hausdorff_adjoint:<moments>[:<grid>]
    cesaro[:<grid>]                     cesaro:adjoint[:<grid>]
    diagonal:<rule>[:<m>]               mimic:<rule>:<cells>:<subgrid>
    embedding:<cells>:<subgrid>         frechet:<one|t|t2|sin|number>[:<grid>]
    file:<path>

A trailing ``^T`` transposes the operator.  Rules are ``harmonic``,
``power<p>``, ``geometric<r>`` or a comma list of values.  When ``--grid``
lists levels, the grid field is replaced level by level.

Exit status: 0 success, 2 usage error, 3 data or format error, 4 numerical
failure.
"""

import argparse
import math
import sys

import numpy as np

from . import __version__, _kernels, gallery, nonlinear, ordering, profiler
from .errors import IllposedError, InvalidSpec, NumericalFailure, RangeInclusionViolated, UsageError
from .io import Report, RunConfig, emit_report, read_matrix, write_matrix
from .linalg_core import singular_values

DEFAULT_GRID = 128


class ArgumentParser(argparse.ArgumentParser):
    """argparse parser that raises :class:`UsageError` instead of exiting."""

    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


# -- operator specs -----------------------------------------------------------


def _int(text, what):
    try:
        v = int(text)
    except ValueError:
        raise InvalidSpec(f"{what} must be an integer, got {text!r}") from None
    if v < 1:
        raise InvalidSpec(f"{what} must be >= 1, got {v}")
    return v


def _rule(text):
    if "," in text:
        try:
            return [float(v) for v in text.split(",")]
        except ValueError:
            raise InvalidSpec(f"bad value list {text!r}") from None
    return text


def base_function(name, grid_n):
    """Grid function for ``one``, ``t``, ``t2``, ``sin`` or a constant."""
    named = {
        "one": lambda t: np.ones_like(t),
        "t": lambda t: t,
        "t2": lambda t: t**2,
        "sin": lambda t: np.sin(np.pi * t),
    }
    if name in named:
        return gallery.GridFunction.from_function(named[name], grid_n)
    try:
        return gallery.GridFunction.constant(float(name), grid_n)
    except ValueError:
        raise InvalidSpec(f"unknown base function {name!r}") from None


def parse_operator_spec(text, grid=None):
    """Build a :class:`DiscretizedOperator` from ``kind:param:grid`` notation.

    ``grid`` replaces the grid field (or supplies it when omitted).
    """
    text = text.strip()
    transpose = text.endswith("^T")
    if transpose:
        text = text[:-2]
    kind, _, rest = text.partition(":")
    kind = kind.lower()
    if kind == "file":
        if not rest:
            raise InvalidSpec("file: needs a path")
        op = gallery.as_operator(read_matrix(rest), "file")
        op.params = {"path": rest}
        return op.T if transpose else op
    parts = rest.split(":") if rest else []

    def grid_at(i, what="grid"):
        if grid is not None:
            return int(grid)
        if len(parts) > i:
            return _int(parts[i], what)
        raise InvalidSpec(f"{kind} spec {text!r} needs a {what} field or --grid")

    def need(k):
        if len(parts) < k:
            raise InvalidSpec(f"{kind} spec {text!r} needs {k} fields")

    if kind == "integration":
        need(1)
        try:
            order = float(parts[0])
        except ValueError:
            raise InvalidSpec(f"bad integration order {parts[0]!r}") from None
        op = gallery.build_integration(order, grid_at(1))
    elif kind in ("hausdorff", "hausdorff_adjoint"):
        need(1)
        op = gallery.build_hausdorff(grid_at(1), _int(parts[0], "moments"))
        if kind == "hausdorff_adjoint":
            op = op.T
    elif kind == "cesaro":
        adjoint = bool(parts) and parts[0] == "adjoint"
        op = gallery.build_cesaro(grid_at(1 if adjoint else 0), adjoint=adjoint)
    elif kind == "diagonal":
        need(1)
        op = gallery.build_diagonal(_rule(parts[0]), grid_at(1, "length"))
    elif kind == "mimic":
        need(3)
        cells = int(grid) if grid is not None else _int(parts[1], "cells")
        op = gallery.build_mimic(_rule(parts[0]), cells, _int(parts[2], "subgrid"))
    elif kind == "embedding":
        need(2)
        cells = int(grid) if grid is not None else _int(parts[0], "cells")
        op = gallery.build_embedding(cells, _int(parts[1], "subgrid"))
    elif kind == "frechet":
        need(1)
        op = gallery.autoconv_frechet(base_function(parts[0], grid_at(1)))
        op.params = {"base": parts[0]}
    else:
        raise InvalidSpec(f"unknown operator kind {kind!r}")
    return op.T if transpose else op


# -- argument helpers ---------------------------------------------------------


def _seed(text):
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid seed {text!r}") from None
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return v


def _int_list(text):
    try:
        vals = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not vals or min(vals) < 1:
        raise argparse.ArgumentTypeError("expected positive integers")
    return vals


def _float_list(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _window(text):
    lo, _, hi = text.partition(",")
    try:
        return int(lo), int(hi)
    except ValueError:
        raise argparse.ArgumentTypeError(f"window must be LO,HI, got {text!r}") from None


def _alpha_grid(text):
    parts = text.split(":")
    try:
        lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
    except (ValueError, IndexError):
        raise argparse.ArgumentTypeError(f"alphas must be LO:HI:COUNT, got {text!r}") from None
    if lo <= 0 or hi <= 0 or count < 1:
        raise argparse.ArgumentTypeError("alphas need positive bounds and count")
    return list(np.geomspace(lo, hi, count))


def _triples(text):
    out = []
    for chunk in text.split(";"):
        vals = _float_list(chunk)
        if len(vals) != 3:
            raise argparse.ArgumentTypeError(f"triple needs three exponents, got {chunk!r}")
        out.append(tuple(vals))
    return out


def _common():
    p = ArgumentParser(add_help=False)
    g = p.add_argument_group("run options")
    g.add_argument("--seed", type=_seed, default=0, help="64-bit unsigned RNG seed (default 0)")
    g.add_argument("--budget", type=float, default=10.0, help="tolerance budget for ordering verdicts")
    g.add_argument("--grid", type=_int_list, default=None, help="grid level(s), comma separated")
    g.add_argument("--rank-cutoff", type=float, default=None, help="relative rank cutoff")
    g.add_argument("--out", default=None, help="output path (default stdout or $ILLPOSED_OUTPUT_DIR)")
    g.add_argument("--format", choices=("json", "csv"), default="json")
    return p


def _table(columns, rows):
    return {"columns": list(columns), "rows": [list(r) for r in rows]}


def _first_grid(args, default=DEFAULT_GRID):
    return args.grid[0] if args.grid else default


def _operator(args, attr):
    spec = getattr(args, attr)
    return parse_operator_spec(spec, _first_grid(args, None) if args.grid else None)


# -- handlers -----------------------------------------------------------------
# each returns (results, provenance)


def cmd_gallery_build(args):
    op = _operator(args, "op")
    sv = singular_values(op.matrix)
    if args.matrix_out:
        write_matrix(args.matrix_out, op.matrix)
    head = sv[: args.head]
    results = {
        "kind": op.kind,
        "params": op.params,
        "shape": list(op.shape),
        "grid_n": op.grid_n,
        "scaling_note": op.scaling_note,
        "sigma_max": float(sv[0]),
        "rank": profiler.numerical_rank(sv),
        "singular_values_head": head,
        "matrix_out": args.matrix_out,
        "tables": {"singular_values": _table(("n", "sigma_n"), ((i + 1, float(s)) for i, s in enumerate(sv)))},
    }
    return results, {"operators": [op.kind]}


def _analyzed_sigma(args):
    if args.matrix:
        return singular_values(read_matrix(args.matrix)), "file"
    if not args.op:
        raise UsageError("analyze needs --op SPEC or --matrix PATH")
    op = _operator(args, "op")
    return singular_values(op.matrix), op.kind


def cmd_analyze_decay(args):
    sv, kind = _analyzed_sigma(args)
    lo, hi = profiler._resolve_window(sv, args.window or "auto", profiler.HEAD_FRACTION, profiler.TAIL_FRACTION)
    mu, rms = profiler.estimate_decay_exponent(sv, (lo, hi))
    results = {
        "mu_hat": mu,
        "fit_residual": rms,
        "fit_window": [lo, hi],
        "rank": profiler.numerical_rank(sv),
        "tables": {"singular_values": _table(("n", "sigma_n"), ((i + 1, float(s)) for i, s in enumerate(sv)))},
    }
    return results, {"operators": [kind]}


def cmd_analyze_interval(args):
    sv, kind = _analyzed_sigma(args)
    prof = profiler.profile(sv, window=args.window or "auto", window_count=args.window_count)
    n, q = profiler.q_sequence(sv, prof.fit_window)
    results = prof.as_dict()
    results["window_count"] = args.window_count
    results["tables"] = {"q_sequence": _table(("n", "q_n"), zip(n.astype(int).tolist(), q.tolist()))}
    return results, {"operators": [kind]}


def _pair(args):
    return _operator(args, "a_prime"), _operator(args, "a")


def cmd_compare_sigma(args):
    if args.grid and len(args.grid) > 1:
        v = ordering.sigma_order_levels(
            lambda n: parse_operator_spec(args.a_prime, n),
            lambda n: parse_operator_spec(args.a, n),
            args.grid, args.budget, args.n_max,
        )
        rows = [(g, f, b) for g, f, b in zip(args.grid, v.constants_per_level, v.backward_per_level)]
        kinds = [parse_operator_spec(args.a_prime, args.grid[0]).kind, parse_operator_spec(args.a, args.grid[0]).kind]
    else:
        Ap, A = _pair(args)
        v = ordering.sigma_order(Ap, A, args.budget, args.n_max, args.rank_cutoff)
        rows = [(Ap.grid_n, v.forward_constant, v.backward_constant)]
        kinds = [Ap.kind, A.kind]
    results = v.as_dict()
    results["tables"] = {"levels": _table(("grid_n", "forward_constant", "backward_constant"), rows)}
    return results, {"operators": kinds}


def cmd_compare_norm(args):
    Ap, A = _pair(args)
    c = ordering.norm_order_constant(Ap, A, args.rank_cutoff)
    return {"constant": c, "holds": math.isfinite(c)}, {"operators": [Ap.kind, A.kind]}


def _douglas(args, write=False):
    Ap, A = _pair(args)
    prov = {"operators": [Ap.kind, A.kind]}
    try:
        fac = ordering.douglas_factorize(Ap, A, rel_tol=args.rank_cutoff)
    except RangeInclusionViolated as exc:
        return {"included": False, "message": str(exc), "residual": exc.residual,
                "range_constant": exc.range_constant}, prov
    if write and args.factor_out:
        write_matrix(args.factor_out, fac.right_factor)
    results = {"included": True, **fac.as_dict()}
    return results, prov


def cmd_compare_douglas(args):
    return _douglas(args)


def cmd_factorize_douglas(args):
    return _douglas(args, write=True)


def cmd_factorize_connect(args):
    Ap, A = _pair(args)
    fac = ordering.construct_connecting_factors(Ap, A, args.rank_cutoff)
    if args.left_out:
        write_matrix(args.left_out, fac.left_factor)
    if args.right_out:
        write_matrix(args.right_out, fac.right_factor)
    return fac.as_dict(), {"operators": [Ap.kind, A.kind]}


def cmd_compare_tikhonov(args):
    Ap, A = _pair(args)
    rng = np.random.default_rng(args.seed)
    sols = rng.standard_normal((args.solutions, A.shape[1]))
    rep = ordering.tikhonov_compare(Ap, A, list(sols), args.alphas)
    results = rep.as_dict()
    del results["table"]
    results["tables"] = {"tikhonov": _table(("solution_id", "alpha", "err_A_prime", "err_A"), rep.rows())}
    return results, {"operators": [Ap.kind, A.kind]}


def cmd_compare_injectivity(args):
    A = _operator(args, "a")
    n = A.shape[1]
    dims = args.dims or list(range(1, n + 1))
    fam = ordering.coordinate_family(n, dims)
    vals = ordering.modulus_of_injectivity(A, fam, args.delta)
    rows = [(d, j, om) for d, (j, om) in zip(dims, vals)]
    return {"tables": {"injectivity": _table(("dim", "j", "omega"), rows)}}, {"operators": [A.kind]}


def _problem(args):
    n = _first_grid(args)
    if args.linear:
        op = parse_operator_spec(args.linear, n)
        return nonlinear.linear_problem(op, radius=args.radius), "linear:" + op.kind
    return nonlinear.autoconvolution_problem(n, base_function(args.base, n), args.radius), "autoconvolution"


def cmd_nonlinear_remainder(args):
    prob, kind = _problem(args)
    rng = np.random.default_rng(args.seed)
    rows = []
    for i, h in enumerate(nonlinear.sample_ball(prob, args.samples, rng)):
        x = prob.base_point + gallery.GridFunction(h, prob.grid_n)
        rows.append((i, *nonlinear.taylor_remainder(prob, x).norms()))
    ratio = max((r[1] / r[4] ** 2 for r in rows if r[4] > 0), default=0.0)
    results = {
        "max_remainder_over_step_squared": ratio,
        "tables": {"remainder": _table(("sample", "remainder_norm", "linear_norm", "difference_norm", "step_norm"), rows)},
    }
    return results, {"operators": [kind]}


def cmd_nonlinear_degree(args):
    prob, kind = _problem(args)
    verdicts = nonlinear.degree_of_nonlinearity_check(
        prob, args.samples, args.seed, args.triples, args.shrink, not args.no_adversarial)
    rows = [(*v.triple, v.q, v.q_shrunk, v.q_low_frequency, v.passed, v.skipped) for v in verdicts]
    results = {
        "verdicts": [v.as_dict() for v in verdicts],
        "tables": {"degree": _table(("g1", "g2", "g3", "q", "q_shrunk", "q_low_frequency", "passed", "skipped"), rows)},
    }
    return results, {"operators": [kind]}


def cmd_nonlinear_cone(args):
    upper, lower = nonlinear.tangential_cone_constants(args.q, args.sigma)
    return {"q": args.q, "sigma": args.sigma, "K_upper": upper, "K_lower": lower}, {"operators": []}


def cmd_nonlinear_stability(args):
    prob, kind = _problem(args)
    pts = [base_function(p, prob.grid_n) for p in args.points]
    scan = nonlinear.stable_illposedness_scan(prob, args.samples, args.seed, args.n_max, pts)
    results = scan.as_dict()
    del results["stability_ratios"]
    rows = []
    for i, (r, e, d) in enumerate(zip(scan.stability_ratios, scan.decay_exponents, scan.distances)):
        rows.append((i, d, e, float(r.min()) if r.size else None, float(r.max()) if r.size else None))
    results["points"] = list(args.points)
    results["tables"] = {"stability": _table(("sample", "distance", "decay_exponent", "ratio_min", "ratio_max"), rows)}
    return results, {"operators": [kind]}


def cmd_nonlinear_probe(args):
    prob, kind = _problem(args)
    probe = nonlinear.local_illposedness_probe(prob, args.terms)
    results = probe.as_dict()
    del results["table"]
    rows = [(i + 1, a, b) for i, (a, b) in enumerate(probe.table)]
    results["tables"] = {"probe": _table(("n", "image_norm", "step_norm"), rows)}
    return results, {"operators": [kind]}


def cmd_nonlinear_nfactor(args):
    prob, kind = _problem(args)
    b = nonlinear.n_factor_bounds(prob, args.samples, args.seed, tuple(args.scales), not args.no_adversarial)
    results = {"K_lower": b.K_lower, "K_upper": b.K_upper, "note": b.note,
               "tables": {"nfactor": _table(("eps", "K_lower", "K_upper"), b.per_scale)}}
    return results, {"operators": [kind]}


# -- parser -------------------------------------------------------------------


def build_parser():
    common = _common()
    parser = ArgumentParser(prog="illposed", description="Ill-posedness orderings and diagnostics.")
    parser.add_argument("--version", action="version", version=f"illposed {__version__}")
    groups = parser.add_subparsers(dest="group", metavar="group", required=True)

    def leaf(sub, name, func, help_text):
        p = sub.add_parser(name, parents=[common], help=help_text)
        p.set_defaults(func=func)
        return p

    g = groups.add_parser("gallery", help="build and inspect operators")
    sub = g.add_subparsers(dest="action", metavar="action", required=True)
    p = leaf(sub, "build", cmd_gallery_build, "build an operator and report its spectrum")
    p.add_argument("--op", required=True)
    p.add_argument("--matrix-out", default=None)
    p.add_argument("--head", type=int, default=10)

    g = groups.add_parser("analyze", help="singular-value decay profiling")
    sub = g.add_subparsers(dest="action", metavar="action", required=True)
    for name, func in (("decay", cmd_analyze_decay), ("interval", cmd_analyze_interval)):
        p = leaf(sub, name, func, f"{name} of the singular values")
        p.add_argument("--op", default=None)
        p.add_argument("--matrix", default=None)
        p.add_argument("--window", type=_window, default=None, help="1-based inclusive LO,HI")
        if name == "interval":
            p.add_argument("--window-count", type=int, default=profiler.DEFAULT_WINDOW_COUNT)

    g = groups.add_parser("compare", help="orderings between two operators")
    sub = g.add_subparsers(dest="action", metavar="action", required=True)
    for name, func in (("sigma", cmd_compare_sigma), ("norm", cmd_compare_norm),
                       ("douglas", cmd_compare_douglas), ("tikhonov", cmd_compare_tikhonov)):
        p = leaf(sub, name, func, f"{name} ordering of A' against A")
        p.add_argument("--a", required=True)
        p.add_argument("--a-prime", required=True)
        if name == "sigma":
            p.add_argument("--n-max", type=int, default=None)
        if name == "tikhonov":
            p.add_argument("--solutions", type=int, default=10)
            p.add_argument("--alphas", type=_alpha_grid, default=_alpha_grid("1e-6:1:12"), help="LO:HI:COUNT")
    p = leaf(sub, "injectivity", cmd_compare_injectivity, "modulus of injectivity on coordinate subspaces")
    p.add_argument("--a", required=True)
    p.add_argument("--dims", type=_int_list, default=None)
    p.add_argument("--delta", type=float, default=None)

    g = groups.add_parser("factorize", help="connecting factors")
    sub = g.add_subparsers(dest="action", metavar="action", required=True)
    p = leaf(sub, "connect", cmd_factorize_connect, "factors with A' = T A S")
    p.add_argument("--a", required=True)
    p.add_argument("--a-prime", required=True)
    p.add_argument("--left-out", default=None)
    p.add_argument("--right-out", default=None)
    p = leaf(sub, "douglas", cmd_factorize_douglas, "S = A^+ A' under range inclusion")
    p.add_argument("--a", required=True)
    p.add_argument("--a-prime", required=True)
    p.add_argument("--factor-out", default=None)

    g = groups.add_parser("nonlinear", help="nonlinear diagnostics (autoconvolution by default)")
    sub = g.add_subparsers(dest="action", metavar="action", required=True)
    actions = (
        ("remainder", cmd_nonlinear_remainder), ("degree", cmd_nonlinear_degree),
        ("stability", cmd_nonlinear_stability), ("probe", cmd_nonlinear_probe),
        ("nfactor", cmd_nonlinear_nfactor),
    )
    for name, func in actions:
        p = leaf(sub, name, func, f"{name} diagnostic")
        p.add_argument("--base", default="one", help="one, t, t2, sin or a constant")
        p.add_argument("--linear", default=None, help="operator spec for a linear control problem")
        p.add_argument("--radius", type=float, default=1.0)
        if name in ("remainder", "degree", "stability", "nfactor"):
            p.add_argument("--samples", type=int, default={"degree": 100, "nfactor": 100}.get(name, 20))
        if name == "degree":
            p.add_argument("--triples", type=_triples, default=[(0.0, 0.0, 2.0)], help="g1,g2,g3;...")
            p.add_argument("--shrink", type=float, default=4.0)
        if name in ("degree", "nfactor"):
            p.add_argument("--no-adversarial", action="store_true")
        if name == "stability":
            p.add_argument("--n-max", type=int, default=None)
            p.add_argument("--points", type=lambda s: [v for v in s.split(",") if v], default=[])
        if name == "probe":
            p.add_argument("--terms", type=int, default=64)
        if name == "nfactor":
            p.add_argument("--scales", type=_float_list, default=[1e-1, 1e-2, 1e-3])
    p = leaf(sub, "cone", cmd_nonlinear_cone, "tangential cone constants K_upper, K_lower")
    p.add_argument("--q", type=float, required=True)
    p.add_argument("--sigma", type=float, required=True)
    return parser


def parse_command(argv):
    """Parse ``argv`` into a namespace with ``func`` set; raises :class:`UsageError`."""
    argv = list(argv)
    parser = build_parser()
    if not argv:
        raise UsageError(parser.format_usage() + "illposed: error: no command given")
    return parser.parse_args(argv)


def run(args):
    config = RunConfig(
        seed=args.seed,
        tolerance_budget=args.budget,
        rank_cutoff_rel=args.rank_cutoff,
        grid_levels=list(args.grid or []),
        output_format=args.format,
        output_path=args.out,
    )
    results, prov = args.func(args)
    prov = {**prov, "grid_levels": config.grid_levels, "backend": _kernels.BACKEND}
    echo = {k: v for k, v in vars(args).items() if k not in ("func", "group", "action")}
    report = Report(
        tool_version=__version__,
        command=f"{args.group} {args.action}",
        config={**config.as_dict(), "arguments": echo},
        results=results,
        provenance=prov,
    )
    return emit_report(report, config)


def main(argv=None):
    argv = sys.argv[1:] if argv is None else argv
    try:
        args = parse_command(argv)
        text, path = run(args)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return exc.exit_code
    except IllposedError as exc:
        print(f"illposed: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"illposed: I/O error: {exc}", file=sys.stderr)
        return 3
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"illposed: numerical failure: {exc}", file=sys.stderr)
        return NumericalFailure.exit_code
    if path is None:
        sys.stdout.write(text)
    else:
        print(f"wrote {path}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
