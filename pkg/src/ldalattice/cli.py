"""``lda`` command-line entry point."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import bounds as bd
from . import experiments as ex
from .construction import (build_lattice, fullrank_monte_carlo, load_bundle, randomize_skeleton,
                           save_bundle, syndrome_distribution_test)
from .exceptions import BudgetExceededError, InvalidConfigError, ResampleBudgetError
from .expander import ExpansionParams, read_graph, sample_standard_ensemble, verify_expansion, write_graph
from .finite_field import PrimeContext, check_modulus
from .geometry import DEFAULT_BUDGET

EXIT_OK, EXIT_BUDGET, EXIT_CONFIG = 0, 2, 3


class _Parser(argparse.ArgumentParser):
    # usage errors are configuration errors, keep 2 for budget exhaustion
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _ints(s: str) -> list[int]:
    return [int(v) for v in s.split(",") if v.strip()]


def _common() -> argparse.ArgumentParser:
    c = argparse.ArgumentParser(add_help=False)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--workers", type=int, default=1)
    c.add_argument("--out", default="-", help="output path, '-' for stdout")
    c.add_argument("--format", choices=("csv", "json"), default=None)
    return c


def _config(args, **extra) -> dict:
    cfg = {k: v for k, v in vars(args).items() if k not in ("func", "out")}
    cfg["schema_version"] = ex.SCHEMA_VERSION
    cfg.update(extra)
    return cfg


def _fmt(args, default: str) -> str:
    return args.format or default


def _prime(args, n: int) -> int:
    """``--p`` directly, or the smallest prime >= n^lambda."""
    if args.p is not None:
        return check_modulus(args.p)
    if args.lam is None:
        raise InvalidConfigError("give --p or --lambda")
    return PrimeContext.from_growth(n, args.lam).p


# -- subcommands ------------------------------------------------------------

def cmd_gen_graph(args):
    g = sample_standard_ensemble(args.n, args.dv, args.dc, seed=args.seed)
    if args.out == "-":
        from .expander import format_graph
        sys.stdout.write(format_graph(g))
    else:
        write_graph(args.out, g)


def cmd_check_expansion(args):
    g = read_graph(args.graph)
    params = ExpansionParams.with_defaults(g.rate, args.alpha, args.A, args.beta, args.B,
                                           args.epsilon, args.vartheta)
    rep = verify_expansion(g, params, args.cap, args.mode, args.samples, args.seed)
    doc = rep.to_dict()
    doc["certified"] = rep.certified
    doc["params"] = vars(params)
    ex.emit(doc, _fmt(args, "json"), args.out, _config(args))


def cmd_build(args):
    g = read_graph(args.graph)
    p = _prime(args, g.n)
    H = randomize_skeleton(g, p, args.seed)
    L = build_lattice(H, p, g)
    if args.out == "-":
        sys.stdout.write(json.dumps(L.to_bundle(str(args.graph)), sort_keys=True) + "\n")
    else:
        save_bundle(args.out, L, str(args.graph))


def cmd_metrics(args):
    L = load_bundle(args.lattice)
    doc = ex.lattice_metrics(L, args.nsm_samples, args.seed, args.budget, args.workers)
    ex.emit(doc, _fmt(args, "json"), args.out, _config(args))


def cmd_decode_sim(args):
    L = load_bundle(args.lattice)
    grid = ex.parse_sigma_grid(args.sigma_grid)
    curve = ex.awgn_error_experiment(L, grid, args.trials, args.decoder, args.seed, args.workers,
                                     args.random_codeword, max_iters=args.max_iters,
                                     budget=args.budget)
    ex.emit(curve.rows, _fmt(args, "csv"), args.out, _config(args), ex.CURVE_COLUMNS)


def cmd_fullrank_mc(args):
    g = read_graph(args.graph)
    est = fullrank_monte_carlo(g, check_modulus(args.p), args.trials, args.seed, args.workers)
    doc = {"p": args.p, "trials": est.trials, "failures": est.failures,
           "frequency": est.frequency, "ci_low": est.ci_low, "ci_high": est.ci_high}
    ex.emit(doc, _fmt(args, "json"), args.out, _config(args))


def cmd_syndrome_test(args):
    g = read_graph(args.graph)
    u = _ints(args.u)
    if len(u) != g.m:
        raise InvalidConfigError(f"u needs {g.m} entries")
    rep = syndrome_distribution_test(g, check_modulus(args.p), u, args.trials, args.seed,
                                     args.significance)
    doc = {"support": rep.support, "trials": rep.trials,
           "off_support_nonzero": rep.off_support_nonzero,
           "marginal_pvalues": {str(k): v for k, v in rep.marginal_pvalues.items()},
           "pair": list(rep.pair) if rep.pair else None, "pair_pvalue": rep.pair_pvalue,
           "significance": rep.significance, "passed": rep.passed}
    ex.emit(doc, _fmt(args, "json"), args.out, _config(args))


def cmd_bounds(args):
    raw = json.loads(Path(args.params).read_text())
    try:
        ps = bd.ParameterSet(**raw)
    except TypeError as e:
        raise InvalidConfigError(str(e)) from None
    grid = bd.parse_n_grid(args.n_grid)
    curves = bd.bound_curves(ps, grid)
    table = [{"n": n, **{c.label: c.values[i] for c in curves}} for i, n in enumerate(grid)]
    summary = {
        "params": ps.to_dict(),
        "graph_violations": ps.graph_violations(),
        "lambda_main": bd.lambda_threshold_main(ps),
        "lambda_main_mse_reading": bd.lambda_threshold_main(ps, "mse"),
        "lambda_mse": bd.lambda_threshold_mse(ps),
        "lambda_awgn": bd.lambda_threshold_awgn(ps),
        "lambda_dual": bd.lambda_threshold_dual(ps),
        "a_term_discrepancy": bd.a_term_discrepancy(ps),
        "mse_conditions_hold": bd.mse_conditions_hold(ps),
        "dual_conditions_hold": bd.dual_conditions_hold(ps),
        "delta": bd.delta_mse(ps),
    }
    if _fmt(args, "csv") == "csv":
        ex.emit(table, "csv", args.out, _config(args, summary=summary))
    else:
        ex.emit({"summary": summary, "curves": table}, "json", args.out, _config(args))


def cmd_semi_ergodic(args):
    rows = ex.semi_norm_ergodic_check(args.noise, _ints(args.n_grid), args.delta, args.trials,
                                      args.seed, args.df, args.workers)
    ex.emit(rows, _fmt(args, "csv"), args.out, _config(args), ex.ERGODIC_COLUMNS)


def cmd_report(args):
    g = read_graph(args.graph)
    seeds = _ints(args.seeds) if args.seeds else [args.seed]
    doc = ex.goodness_report(g, check_modulus(args.p), seeds, args.nsm_samples, args.wer_trials,
                             budget=args.budget, workers=args.workers)
    ex.emit(doc, _fmt(args, "json"), args.out, _config(args))


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    ap = _Parser(prog="lda", description="Low-density Construction-A lattice toolkit.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("gen-graph", parents=[common], help="sample a regular skeleton graph")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--dv", type=int, required=True)
    s.add_argument("--dc", type=int, required=True)
    s.set_defaults(func=cmd_gen_graph)

    s = sub.add_parser("check-expansion", parents=[common], help="verify expansion properties")
    s.add_argument("--graph", required=True)
    for name in ("alpha", "A", "beta", "B"):
        s.add_argument(f"--{name}", type=float, required=True)
    s.add_argument("--epsilon", type=float)
    s.add_argument("--vartheta", type=float)
    s.add_argument("--mode", choices=("exhaustive", "sampled"), default="exhaustive")
    s.add_argument("--cap", type=int, default=12)
    s.add_argument("--samples", type=int, default=10_000)
    s.set_defaults(func=cmd_check_expansion)

    s = sub.add_parser("build", parents=[common], help="randomize a skeleton into a lattice bundle")
    s.add_argument("--graph", required=True)
    s.add_argument("--p", type=int)
    s.add_argument("--lambda", dest="lam", type=float, help="use the smallest prime >= n^lambda")
    s.set_defaults(func=cmd_build)

    s = sub.add_parser("metrics", parents=[common], help="radii, shortest vector and NSM")
    s.add_argument("--lattice", required=True)
    s.add_argument("--nsm-samples", type=int, default=10_000)
    s.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    s.set_defaults(func=cmd_metrics)

    s = sub.add_parser("decode-sim", parents=[common], help="AWGN word-error curve")
    s.add_argument("--lattice", required=True)
    s.add_argument("--sigma-grid", required=True, help="a:b:steps or comma list")
    s.add_argument("--trials", type=int, default=1000)
    s.add_argument("--decoder", choices=("ml", "bp"), default="ml")
    s.add_argument("--max-iters", type=int, default=50)
    s.add_argument("--random-codeword", action="store_true")
    s.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    s.set_defaults(func=cmd_decode_sim)

    s = sub.add_parser("fullrank-mc", parents=[common], help="rank-deficiency frequency")
    s.add_argument("--graph", required=True)
    s.add_argument("--p", type=int, required=True)
    s.add_argument("--trials", type=int, default=10_000)
    s.set_defaults(func=cmd_fullrank_mc)

    s = sub.add_parser("syndrome-test", parents=[common], help="law of H^T u")
    s.add_argument("--graph", required=True)
    s.add_argument("--p", type=int, required=True)
    s.add_argument("--u", required=True, help="comma-separated check-side vector")
    s.add_argument("--trials", type=int, default=100_000)
    s.add_argument("--significance", type=float, default=1e-3)
    s.set_defaults(func=cmd_syndrome_test)

    s = sub.add_parser("bounds", parents=[common], help="evaluate the numeric bound engine")
    s.add_argument("--params", required=True, help="JSON file with R, lam, alpha, A, beta, B")
    s.add_argument("--n-grid", default="1e2:1e6:log10")
    s.set_defaults(func=cmd_bounds)

    s = sub.add_parser("semi-ergodic", parents=[common], help="noise norm exceedance table")
    s.add_argument("--noise", choices=ex.NOISE_KINDS, default="gaussian_iid")
    s.add_argument("--df", type=float, default=5.0)
    s.add_argument("--n-grid", default="10,100,1000")
    s.add_argument("--delta", type=float, default=0.1)
    s.add_argument("--trials", type=int, default=10_000)
    s.set_defaults(func=cmd_semi_ergodic)

    s = sub.add_parser("report", parents=[common], help="goodness report over several seeds")
    s.add_argument("--graph", required=True)
    s.add_argument("--p", type=int, required=True)
    s.add_argument("--seeds", default=None, help="comma-separated, defaults to --seed")
    s.add_argument("--nsm-samples", type=int, default=5_000)
    s.add_argument("--wer-trials", type=int, default=1_000)
    s.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    s.set_defaults(func=cmd_report)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.workers < 1:
            raise InvalidConfigError("--workers must be >= 1")
        args.func(args)
    except BudgetExceededError as e:
        print(f"lda: budget exceeded: {e}", file=sys.stderr)
        return EXIT_BUDGET
    except (InvalidConfigError, ResampleBudgetError, ValueError, OverflowError,
            FileNotFoundError, json.JSONDecodeError) as e:
        print(f"lda: invalid configuration: {e}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
