"""Command-line front end.  One subcommand per worked example; every run
echoes its resolved configuration and emits json, csv, or text.

Exit codes: 0 success, 1 usage error, 2 numeric non-convergence.  Errors go
to stderr as one line with an "ERROR:<code>:" prefix.  The environment
variable SGAP_THREADS caps BLAS/OpenMP parallelism.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from datetime import datetime, timezone

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NO_CONVERGENCE = 2

CITATIONS = {
    "tree-norm": "Kesten 1959: spectral radius of the simple walk on a free group / regular tree",
    "return-prob": "Kesten 1959; Berg-Christensen 1974: operator norm as the limit of return-probability roots",
    "pgl2": "Serre, Trees II.1; Efrat 1991: the modular half-line walk and its spectrum",
    "cheeger": "Lawler-Sokal 1988; Sinclair 1992: Cheeger inequality for reversible chains",
    "cayley": "standard Cayley-graph spectral analysis for finite matrix groups",
    "torus": "Fourier reduction of toral automorphism actions to dual lattice orbits",
    "bernoulli": "shift actions on finite configurations and their orbit graphs",
    "expanders": "Margulis 1973: expanders from Property (T) congruence quotients",
    "lyapunov": "Furstenberg 1963; Guivarc'h: growth of random matrix products",
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        print(f"ERROR:usage:{message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _apply_thread_cap() -> None:
    cap = os.environ.get("SGAP_THREADS")
    if cap:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ.setdefault(var, cap)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sgaplab", description=__doc__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p):
        p.add_argument("--format", choices=("json", "csv", "text"), default="json")
        p.add_argument("--output", default=None, help="write to this path instead of stdout")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--no-timestamp", action="store_true")
        p.add_argument("--cite", action="store_true", help="print the literature source and exit")

    p = sub.add_parser("tree-norm", help="compressed norm of a regular-tree ball")
    p.add_argument("--degree", type=int, required=True)
    p.add_argument("--depth", type=int, required=True)
    p.add_argument("--ladder", action="store_true", help="include every radius up to depth")
    common(p)

    p = sub.add_parser("return-prob", help="return-probability roots r_n")
    p.add_argument(
        "--preset",
        choices=("free-symmetric", "z", "free-ab"),
        default=None,
        help="free-symmetric: uniform on all signed generators; z: walk on the integers; free-ab: uniform on the two positive generators",
    )
    p.add_argument("--rank", type=int, default=2)
    p.add_argument("--n-max", type=int, default=1000)
    p.add_argument("--measure-file", default=None, help="JSON measure overriding --preset")
    common(p)

    p = sub.add_parser("pgl2", help="truncated half-line walk diagnostics")
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--trunc", type=int, required=True)
    p.add_argument("--mode", choices=("lumped", "compression"), default="lumped")
    common(p)

    p = sub.add_parser("cheeger", help="Cheeger constant of a chain from JSON")
    p.add_argument("--input", required=True)
    group = p.add_mutually_exclusive_group()
    group.add_argument("--exact", action="store_true")
    group.add_argument("--sweep", action="store_true")
    common(p)

    p = sub.add_parser("cayley", help="Cayley graph of SL_n(F_p) with elementary generators")
    p.add_argument("--n", type=int, choices=(2, 3), required=True)
    p.add_argument("--p", type=int, required=True)
    common(p)

    p = sub.add_parser("torus", help="compressed norms over a dual-action orbit ladder")
    p.add_argument("--radius", type=int, default=20, help="sup-norm truncation of the lattice ball")
    p.add_argument("--basepoint", default="1,0")
    p.add_argument("--ladder-step", type=int, default=1)
    common(p)

    p = sub.add_parser("bernoulli", help="compressed norm over a configuration-shift orbit")
    p.add_argument("--config", default="e", help="comma-separated words, e.g. 'e' or 'e,a'")
    p.add_argument("--rank", type=int, default=2)
    p.add_argument("--radius", type=int, default=6)
    common(p)

    p = sub.add_parser("expanders", help="certificate for SL_n congruence quotients")
    p.add_argument("--n", type=int, choices=(2, 3), required=True)
    p.add_argument("--primes", required=True, help="comma-separated primes")
    common(p)

    p = sub.add_parser("lyapunov", help="Lyapunov estimate, exact small-n table, and the spectral bound")
    p.add_argument("--n-steps", type=int, default=2000)
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--u-max", type=int, default=6)
    common(p)

    return parser


# ---------------------------------------------------------------------------
# emitters
# ---------------------------------------------------------------------------

def _emit(payload: dict, csv_text: str, text_lines: list[str], args) -> None:
    if args.format == "json":
        body = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    elif args.format == "csv":
        body = csv_text
    else:
        body = "\n".join(text_lines) + "\n"
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(body)
    else:
        sys.stdout.write(body)


def _header(args, **params) -> dict:
    config = {"subcommand": args.subcommand, "seed": args.seed, "format": args.format}
    config.update(params)
    head = {"config": config}
    if not args.no_timestamp:
        head["generated_at"] = datetime.now(timezone.utc).isoformat()
    return head


# ---------------------------------------------------------------------------
# subcommand bodies
# ---------------------------------------------------------------------------

def _run_tree_norm(args) -> int:
    from . import group_algebra as ga
    from . import spectral_engine as se
    from . import walk_models as wm

    if args.degree % 2 != 0:
        print("ERROR:usage:--degree must be even to carry a free-group measure", file=sys.stderr)
        return EXIT_USAGE
    graph = wm.build_tree(args.degree, args.depth)
    rank = args.degree // 2
    mu = ga.ProbMeasure.uniform(
        [ga.free_word(rank, [s]) for i in range(1, rank + 1) for s in (i, -i)]
    )
    radii = list(range(args.depth + 1)) if args.ladder else [args.depth]
    ladder = se.compression_ladder(graph, mu, radii)
    limit = 2.0 * (args.degree - 1) ** 0.5 / args.degree
    payload = _header(args, degree=args.degree, depth=args.depth, ladder=args.ladder)
    payload["result"] = {
        "compressed_norm": ladder.norms[-1],
        "radii": list(ladder.radii),
        "norms": list(ladder.norms),
        "limit_walk_norm": limit,
    }
    lines = [
        f"tree degree {args.degree}, ball depth {args.depth}",
        f"compressed norm = {ladder.norms[-1]:.9f}",
        f"walk operator norm (infinite tree) = {limit:.9f}",
    ]
    _emit(payload, ladder.to_csv(), lines, args)
    return EXIT_OK


def _measure_for_preset(preset: str, rank: int):
    from . import group_algebra as ga

    if preset == "free-symmetric":
        elems = [ga.free_word(rank, [s]) for i in range(1, rank + 1) for s in (i, -i)]
        return ga.ProbMeasure.uniform(elems)
    if preset == "z":
        return ga.ProbMeasure.uniform([ga.free_word(1, [1]), ga.free_word(1, [-1])])
    if preset == "free-ab":
        return ga.ProbMeasure.uniform([ga.free_word(2, [1]), ga.free_word(2, [2])])
    raise ValueError(f"unknown preset {preset!r}")


def _run_return_prob(args) -> int:
    from . import group_algebra as ga

    if args.measure_file:
        with open(args.measure_file) as fh:
            mu = ga.ProbMeasure.from_json(fh.read())
    elif args.preset:
        mu = _measure_for_preset(args.preset, args.rank)
    else:
        print("ERROR:usage:need --preset or --measure-file", file=sys.stderr)
        return EXIT_USAGE
    series = ga.spectral_radius_return(mu, args.n_max)
    payload = _header(args, preset=args.preset, rank=args.rank, n_max=args.n_max)
    payload["result"] = {
        "method": series.method,
        "symmetric": series.symmetric,
        "certified_lower_bound": series.certified_lower_bound,
        "monotone": bool((series.roots[1:] >= series.roots[:-1]).all()),
        "final_root": float(series.roots[-1]),
    }
    csv_lines = ["n,root"] + [
        f"{i + 1},{series.roots[i]!r}" for i in range(series.n_max)
    ]
    lines = [
        f"return-probability roots via {series.method}",
        f"r_{series.n_max} = {series.roots[-1]:.9f} (certified lower bound on the operator norm)",
    ]
    _emit(payload, "\n".join(csv_lines) + "\n", lines, args)
    return EXIT_OK


def _run_pgl2(args) -> int:
    import numpy as np

    from . import cheeger as ch
    from . import markov_core as mc
    from . import walk_models as wm

    spec = wm.HalfLineSpec(q=args.q, length=args.trunc, mode=args.mode)
    chain = wm.build_pgl2_halfline(spec)
    violation = mc.check_detailed_balance(chain)
    result = {
        "q": args.q,
        "mode": args.mode,
        "states": chain.n,
        "cheeger_bound": wm.pgl2_cheeger_bound(args.q),
        "detailed_balance_violation": violation,
        "band_edge": 2.0 * args.q**0.5 / (args.q + 1),
    }
    if args.mode == "lumped":
        theta, _ = mc.chain_spectrum(chain)
        alternating = np.array([(-1) ** i for i in range(chain.n)], dtype=float)
        result["second_eigenvalue"] = float(theta[1])
        result["bottom_eigenvalue"] = float(theta[-1])
        result["alternating_defect"] = float(
            np.max(np.abs(mc.apply_markov(chain, alternating) + alternating))
        )
        if chain.n <= 22:
            result["cheeger_exact"] = ch.cheeger_exact(chain).h
    payload = _header(args, q=args.q, trunc=args.trunc, mode=args.mode)
    payload["result"] = result
    csv_text = "key,value\n" + "\n".join(f"{k},{v!r}" for k, v in result.items()) + "\n"
    lines = [f"{k} = {v}" for k, v in result.items()]
    _emit(payload, csv_text, lines, args)
    return EXIT_OK


def _run_cheeger(args) -> int:
    from . import cheeger as ch
    from . import markov_core as mc

    with open(args.input) as fh:
        chain = mc.chain_from_json(fh.read())
    report = ch.cheeger_sweep(chain) if args.sweep else ch.cheeger_exact(chain)
    payload = _header(args, input=args.input, exact=not args.sweep)
    payload["result"] = report.to_json_dict()
    csv_text = "h,method\n" + f"{report.h!r},{report.method}\n"
    lines = [
        f"h = {report.h:.9f} ({report.method})",
        f"argmin subset = {list(report.argmin_subset)}",
    ]
    _emit(payload, csv_text, lines, args)
    return EXIT_OK


def _run_cayley(args) -> int:
    from . import expanders as ex
    from . import markov_core as mc
    from . import spectral_engine as se
    from . import walk_models as wm

    graph = ex.build_member_graph(args.n, args.p)
    chain = wm.graph_to_simple_walk_chain(graph)
    lam_report = mc.lambda1(chain)
    mc.require_converged(lam_report)
    lam, bound = se.expander_bound_check(chain)
    result = {
        "vertices": graph.n_vertices,
        "degree": graph.n_generators,
        "lambda_1": lam,
        "gap_bound": bound,
        "method": lam_report.method,
    }
    payload = _header(args, n=args.n, p=args.p)
    payload["result"] = result
    csv_text = "key,value\n" + "\n".join(f"{k},{v!r}" for k, v in result.items()) + "\n"
    _emit(payload, csv_text, [f"{k} = {v}" for k, v in result.items()], args)
    return EXIT_OK


def _run_torus(args) -> int:
    from . import group_algebra as ga
    from . import spectral_engine as se
    from . import walk_models as wm

    base = tuple(int(x) for x in args.basepoint.split(","))
    gens = wm.sanov_generators()
    graph = wm.build_torus_schreier(gens, base, args.radius)
    mu = ga.ProbMeasure.uniform(gens)
    max_r = int(graph.distances_from_basepoint.max())
    radii = list(range(0, max_r + 1, max(1, args.ladder_step)))
    if radii[-1] != max_r:
        radii.append(max_r)
    ladder = se.compression_ladder(
        graph, mu, radii, limit_claim=3.0**0.5 / 2.0, claim_tag="free-group walk norm"
    )
    payload = _header(args, radius=args.radius, basepoint=list(base))
    payload["result"] = {
        "orbit_vertices": graph.n_vertices,
        "radii": list(ladder.radii),
        "norms": list(ladder.norms),
        "supremum": ladder.supremum,
        "ceiling": 3.0**0.5 / 2.0,
    }
    lines = [
        f"orbit ball: {graph.n_vertices} vertices (sup-norm radius {args.radius})",
        f"ladder supremum = {ladder.supremum:.9f} (ceiling 0.866025...)",
    ]
    _emit(payload, ladder.to_csv(), lines, args)
    return EXIT_OK


def _run_bernoulli(args) -> int:
    from . import group_algebra as ga
    from . import spectral_engine as se
    from . import walk_models as wm

    names = [w.strip() for w in args.config.split(",") if w.strip()]
    words = []
    for name in names:
        if name == "e":
            words.append(ga.free_word(args.rank, []))
        else:
            letters = []
            for chc in name:
                if chc.islower():
                    letters.append(ord(chc) - ord("a") + 1)
                else:
                    letters.append(-(ord(chc.lower()) - ord("a") + 1))
            words.append(ga.free_word(args.rank, letters))
    graph = wm.build_bernoulli_schreier(args.rank, words, args.radius)
    gens = [ga.free_word(args.rank, [s]) for i in range(1, args.rank + 1) for s in (i, -i)]
    mu = ga.ProbMeasure.uniform(gens)
    norm = se.compressed_norm(graph, mu, args.radius)
    payload = _header(args, config=names, rank=args.rank, radius=args.radius)
    payload["result"] = {
        "orbit_vertices": graph.n_vertices,
        "compressed_norm": norm,
        "ceiling": (2 * args.rank - 1) ** 0.5 / args.rank,
    }
    csv_text = f"radius,norm\n{args.radius},{norm!r}\n"
    lines = [f"orbit vertices = {graph.n_vertices}", f"compressed norm = {norm:.9f}"]
    _emit(payload, csv_text, lines, args)
    return EXIT_OK


def _run_expanders(args) -> int:
    from . import expanders as ex

    primes = [int(x) for x in args.primes.split(",") if x.strip()]
    cert = ex.build_family(args.n, primes)
    payload = _header(args, n=args.n, primes=primes)
    payload["result"] = cert.to_json_dict()
    payload["result"]["expanding_constant_lower"] = ex.expanding_constant_report(cert)
    lines = [
        f"SL_{args.n} family over primes {primes}",
        f"family inf lambda_1 = {cert.family_inf_lambda1:.9f}",
    ] + [
        f"p={r.prime}: order {r.order}, lambda_1 {r.lambda_1:.6f}, bound {r.gap_bound:.6f}"
        for r in cert.members
    ]
    _emit(payload, cert.to_csv(), lines, args)
    return EXIT_OK


def _run_lyapunov(args) -> int:
    from . import lyapunov as ly

    measure = ly.sanov_matrix_measure()
    estimate = ly.estimate_lyapunov(measure, args.n_steps, args.trials, args.seed)
    u_vals = ly.exact_u_n(ly.sanov_group_measure(), args.u_max)
    u_over_n = [u / (i + 1) for i, u in enumerate(u_vals)]
    bound = ly.furstenberg_bound((3.0**0.5 / 2.0) ** 0.5, 2)
    payload = _header(args, n_steps=args.n_steps, trials=args.trials, u_max=args.u_max)
    payload["result"] = {
        "estimate": estimate.to_json_dict(),
        "u_over_n": u_over_n,
        "spectral_bound": bound,
    }
    csv_lines = ["n,u_over_n"] + [f"{i + 1},{x!r}" for i, x in enumerate(u_over_n)]
    csv_lines.append(f"mc@{args.n_steps},{estimate.point_estimate!r}")
    csv_lines.append(f"bound,{bound!r}")
    lines = ["n   u_n / n"]
    lines += [f"{i + 1:<3d} {x:.9f}" for i, x in enumerate(u_over_n)]
    lines.append(
        f"monte-carlo at n={args.n_steps}: {estimate.point_estimate:.6f} "
        f"(ci half-width {estimate.ci_half_width:.6f})"
    )
    lines.append(f"spectral lower bound: {bound:.6f}")
    _emit(payload, "\n".join(csv_lines) + "\n", lines, args)
    return EXIT_OK


_RUNNERS = {
    "tree-norm": _run_tree_norm,
    "return-prob": _run_return_prob,
    "pgl2": _run_pgl2,
    "cheeger": _run_cheeger,
    "cayley": _run_cayley,
    "torus": _run_torus,
    "bernoulli": _run_bernoulli,
    "expanders": _run_expanders,
    "lyapunov": _run_lyapunov,
}


def run(argv=None) -> int:
    _apply_thread_cap()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if getattr(args, "cite", False):
        print(CITATIONS[args.subcommand])
        return EXIT_OK
    from .errors import BudgetExceededError, ConvergenceError, SgapError

    try:
        return _RUNNERS[args.subcommand](args)
    except ConvergenceError as exc:
        print(f"ERROR:converge:{exc}", file=sys.stderr)
        return EXIT_NO_CONVERGENCE
    except BudgetExceededError as exc:
        print(f"ERROR:budget:{exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SgapError, ValueError, OSError) as exc:
        print(f"ERROR:invalid:{exc}", file=sys.stderr)
        return EXIT_USAGE


def main() -> None:
    raise SystemExit(run())


if __name__ == "__main__":
    main()
