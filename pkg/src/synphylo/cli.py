"""Command-line front end.

Exit status: 0 on success (or an accepted tree), 1 when the invariant test
rejects the tree, 2 on any input or usage error.
"""

import argparse
import sys
from pathlib import Path

from .charmatrix import CharacterDataError, fully_mapped, load_matrix, parse_csv, parse_json, restrict, to_csv, to_json
from .distance import DistanceError, Policy, distance_matrix, format_distance_matrix, parse_distance_matrix
from .invariants import (
    DEFAULT_EPSILON,
    InvariantError,
    empirical_distribution,
    epsilon_test,
    format_report,
    format_scan,
    parse_weights,
    rank_topology_scan,
    weighted_empirical_distribution,
)
from .jcmodel import (
    ModelError,
    expected_distribution,
    format_distribution,
    parse_params,
    parse_rational,
    sample,
)
from .reconstruct import neighbor_joining, upgma
from .tree import TreeError, emit_newick, parse_newick

EXIT_OK, EXIT_REJECTED, EXIT_INPUT = 0, 1, 2


class InputError(Exception):
    pass


def _read(path):
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None


def _write(path, text):
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot write {path}: {exc.strerror}") from None


def _tree_arg(value):
    """A Newick string, or a path to a file holding one."""
    text = value.strip()
    if not text.endswith(";"):
        text = _read(value).strip()
    return parse_newick(text)


def cmd_ingest(args):
    text = _read(args.input)
    m = parse_csv(text) if args.format == "csv" else parse_json(text)
    out_json = args.out is not None and args.out.endswith(".json")
    _write(args.out, to_json(m, indent=1) if out_json else to_csv(m))
    return EXIT_OK


def cmd_dist(args):
    m = load_matrix(_read(args.matrix))
    d = distance_matrix(m, Policy(args.policy), args.min_overlap)
    _write(args.out, format_distance_matrix(d, lower=args.lower, precision=args.precision))
    return EXIT_OK


def cmd_tree(args):
    d = parse_distance_matrix(_read(args.dist))
    build = neighbor_joining if args.method == "nj" else upgma
    _write(args.out, emit_newick(build(d)) + "\n")
    return EXIT_OK


def _langs(args, m):
    if not args.langs:
        return m.languages
    return tuple(lang.strip() for lang in args.langs.split(",") if lang.strip())


def cmd_invariants(args):
    if args.tree is None and not args.scan:
        raise InputError("give --tree, --scan, or both")
    m = load_matrix(_read(args.matrix))
    langs = _langs(args, m)
    sub = fully_mapped(restrict(m, langs))
    if args.weights:
        P = weighted_empirical_distribution(sub, langs, parse_weights(_read(args.weights)))
    else:
        P = empirical_distribution(sub, langs)

    out = [f"parameters\t{len(sub.parameters)}\n"]
    status = EXIT_OK
    if args.tree is not None:
        report = epsilon_test(P, _tree_arg(args.tree), args.epsilon)
        out.append(format_report(report))
        status = EXIT_OK if report.accepted else EXIT_REJECTED
    if args.scan:
        out.append("scan\n")
        out.append(format_scan(rank_topology_scan(P), decimal=args.decimal))
    _write(args.out, "".join(out))
    return status


def _model_inputs(args):
    tree = _tree_arg(args.tree)
    if not tree.is_rooted:
        raise InputError("the model needs a rooted tree (top-level node with two children)")
    return tree, parse_params(_read(args.params), tree)


def cmd_simulate(args):
    tree, params = _model_inputs(args)
    if args.sites < 1:
        raise InputError("--sites must be at least 1")
    m = sample(tree, params, args.sites, args.seed)
    _write(args.out, to_csv(m))
    return EXIT_OK


def cmd_expected(args):
    tree, params = _model_inputs(args)
    P = expected_distribution(tree, params)
    _write(args.out, format_distribution(P, decimal=args.decimal))
    return EXIT_OK


def _rational(text):
    try:
        value = parse_rational(text)
    except ModelError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None
    if value <= 0:
        raise argparse.ArgumentTypeError("must be positive")
    return value


def build_parser():
    parser = argparse.ArgumentParser(prog="synphylo", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse character data and write it in canonical form")
    p.add_argument("--format", choices=("csv", "json"), required=True)
    p.add_argument("--in", dest="input", required=True, metavar="PATH")
    p.add_argument("--out", help="output path; .json selects JSON, anything else pipe-CSV (default stdout)")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("dist", help="normalized Hamming distance matrix")
    p.add_argument("--matrix", required=True)
    p.add_argument("--policy", choices=[x.value for x in Policy], default=Policy.SHARED_ONLY.value)
    p.add_argument("--min-overlap", type=int, default=20)
    p.add_argument("--lower", action="store_true", help="write the lower triangle only")
    p.add_argument("--precision", type=int, default=6)
    p.add_argument("--out")
    p.set_defaults(func=cmd_dist)

    p = sub.add_parser("tree", help="build a tree from a distance matrix")
    p.add_argument("--dist", required=True)
    p.add_argument("--method", choices=("nj", "upgma"), default="nj")
    p.add_argument("--out")
    p.set_defaults(func=cmd_tree)

    p = sub.add_parser("invariants", help="evaluate 3x3-minor invariants of a candidate tree")
    p.add_argument("--matrix", required=True)
    p.add_argument("--langs", help="comma-separated languages, in leaf order (default: all)")
    p.add_argument("--tree", help="Newick string or file")
    p.add_argument("--epsilon", type=_rational, default=DEFAULT_EPSILON)
    p.add_argument("--scan", action="store_true", help="rank every topology on the languages")
    p.add_argument("--weights", help="file of 'parameter|weight' lines")
    p.add_argument("--decimal", action="store_true", help="decimal scores in the scan table")
    p.add_argument("--out")
    p.set_defaults(func=cmd_invariants)

    for name, func, help_text in (
        ("simulate", cmd_simulate, "sample characters from the model on a rooted tree"),
        ("expected", cmd_expected, "exact expected leaf distribution of the model"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--tree", required=True, help="rooted Newick string or file")
        p.add_argument("--params", required=True, help="file of 'root <pi>' and 'edge <child> <p>' lines")
        if name == "simulate":
            p.add_argument("--sites", type=int, required=True)
            p.add_argument("--seed", type=int, default=0)
        else:
            p.add_argument("--decimal", action="store_true")
        p.add_argument("--out")
        p.set_defaults(func=func)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InputError, CharacterDataError, DistanceError, TreeError, ModelError, InvariantError) as exc:
        print(f"synphylo {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
