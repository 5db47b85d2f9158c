"""Command-line entry point: ``clvsim {generate,classify,experiment,scan}``."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .classify import DEFAULT_RESTARTS, classify
from .clv import correlation_distance_matrix, cut_tree, extract_rvs, ward_linkage
from .config import generator_params_from_mapping, load_flat
from .datagen import GeneratorParams, generate_dataset
from .errors import CLVError
from .experiment import GridConfig, default_workers, descriptive_scan, run_grid, with_overrides, write_outputs
from .io import fmt, read_dataset, write_classification, write_dataset, write_rows

PROG = "clvsim"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _seed(value):
    try:
        seed = int(value, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid seed {value!r}") from None
    if not 0 <= seed < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return seed


def _rv(value):
    rv = int(value)
    if rv not in range(2, 7):
        raise argparse.ArgumentTypeError(f"--rv must be in 2..6, got {rv}")
    return rv


def _positive(value):
    n = int(value)
    if n < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return n


def fresh_seed():
    return int(np.random.SeedSequence().generate_state(1, dtype=np.uint64)[0])


def build_parser():
    parser = _Parser(prog=PROG, description="Classify subjects by clustering variables around latent components.")
    parser.add_argument("--version", action="version", version=f"{PROG} {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    gen = sub.add_parser("generate", help="draw one synthetic two-group dataset")
    gen.add_argument("--config", type=Path, help="flat key-value generator config")
    gen.add_argument("--variables", type=int)
    gen.add_argument("--subjects", type=int)
    gen.add_argument("--factors", type=int)
    gen.add_argument("--k", type=float)
    gen.add_argument("--q", type=float)
    gen.add_argument("--seed", type=_seed)
    gen.add_argument("--out", type=Path, help="output CSV (default: stdout)")

    cls = sub.add_parser("classify", help="split the subjects of a dataset CSV into two groups")
    cls.add_argument("input", type=Path)
    cls.add_argument("--rv", type=_rv, default=6, help="number of resultant vectors (2..6)")
    cls.add_argument("--restarts", type=_positive, default=DEFAULT_RESTARTS)
    cls.add_argument("--seed", type=_seed)
    cls.add_argument("--out", type=Path, help="classification CSV (default: stdout)")

    exp = sub.add_parser("experiment", help="run the Monte-Carlo grid")
    exp.add_argument("--config", type=Path, help="grid config (default: the full built-in grid)")
    exp.add_argument("--out", type=Path, required=True, help="output directory")
    exp.add_argument("--workers", type=_positive, default=None)
    exp.add_argument("--seed", type=_seed, help="base seed (overrides the config)")
    exp.add_argument("--restarts", type=_positive)

    scan = sub.add_parser("scan", help="U-test and correlation scans of a labeled dataset")
    scan.add_argument("input", type=Path)
    scan.add_argument("--out", type=Path, help="one-row CSV with the scan results")
    return parser


def cmd_generate(args, out, err):
    mapping = load_flat(args.config) if args.config else {}
    flags = {
        "variables": args.variables, "subjects": args.subjects, "factors": args.factors,
        "k": args.k, "q": args.q, "seed": args.seed,
    }
    mapping.update({key: value for key, value in flags.items() if value is not None})
    if "seed" not in mapping:
        mapping["seed"] = fresh_seed()
    params = generator_params_from_mapping(mapping, source=str(args.config or "flags"), base=GeneratorParams())
    params.validate()
    dataset = generate_dataset(params)[0]
    if args.out:
        write_dataset(dataset, args.out)
    else:
        write_dataset(dataset, out)
    print(f"seed={params.seed}", file=err)
    return 0


def cmd_classify(args, out, err):
    dataset = read_dataset(args.input)
    if args.rv > dataset.num_variables:
        raise CLVError(f"--rv {args.rv} exceeds the number of variables ({dataset.num_variables})")
    seed = args.seed if args.seed is not None else fresh_seed()
    tree = ward_linkage(correlation_distance_matrix(dataset))
    rvs = extract_rvs(dataset, cut_tree(tree, args.rv))
    result = classify(rvs, dataset.true_labels, restarts=args.restarts, seed=seed)
    if args.out:
        write_classification(result, dataset.true_labels, args.out)
    print(f"seed={seed}", file=err)
    if dataset.true_labels is not None:
        print(f"congruence_count={result.congruence_count} "
              f"congruence_fraction={fmt(result.congruence_fraction)}", file=out)
        if not args.out:
            write_classification(result, dataset.true_labels, out)
    else:
        if args.out:
            print(" ".join(str(int(v)) for v in result.predicted_labels), file=out)
        else:
            write_classification(result, None, out)
    return 0


def cmd_experiment(args, out, err):
    config = GridConfig.load(args.config) if args.config else GridConfig().validate()
    config = with_overrides(config, base_seed=args.seed, restarts=args.restarts)
    workers = args.workers or default_workers()
    print(f"base_seed={config.base_seed} restarts={config.restarts} workers={workers}", file=err)
    results, summaries = run_grid(config, workers=workers, progress=lambda msg: print(msg, file=out, flush=True))
    write_outputs(args.out, results, summaries, config)
    n_err = sum(1 for r in results if r.error)
    print(f"wrote {args.out} ({len(results)} replicates, {n_err} errors)", file=out)
    return 0


def cmd_scan(args, out, err):
    dataset = read_dataset(args.input)
    desc = descriptive_scan(dataset)
    if dataset.num_variables % 2:
        print("correlation scan skipped: odd number of variables", file=err)
    header = ["u_sig_fraction", "r_sig_fraction", "mean_r", "mean_abs_r"]
    row = (desc.u_sig_fraction, desc.r_sig_fraction, desc.mean_r, desc.mean_abs_r)
    if args.out:
        write_rows(args.out, header, [row])
    print(" ".join(f"{h}={fmt(v)}" for h, v in zip(header, row)), file=out)
    return 0


COMMANDS = {
    "generate": cmd_generate,
    "classify": cmd_classify,
    "experiment": cmd_experiment,
    "scan": cmd_scan,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return COMMANDS[args.command](args, sys.stdout, sys.stderr)
    except UsageError as exc:
        print(f"{PROG}: usage error: {exc}", file=sys.stderr)
        return 2
    except (CLVError, OSError) as exc:
        print(f"{PROG}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
