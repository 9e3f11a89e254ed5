"""``dagrca`` command-line tool.

Subcommands::

    dagrca simulate --out case/ --profile step --seed 3
    dagrca learn    --input case/data.csv --out run/ [--dot]
    dagrca localize --input case/data.csv --out case/
    dagrca eval     case/ranking.json case/truth.json
    dagrca eval     --batch cases/

Exit codes: 0 success, 1 usage or invalid parameters, 2 input/IO problems,
3 numeric or training failures.
"""
import argparse
import logging
import os
import sys

import numpy as np

from . import artifacts
from .errors import ContractError, DagRcaError, InputError, NumericError
from .evaluation.metrics import ac_at_k, avg_at_k
from .evaluation.synthetic import PROFILES, PROFILE_ALIASES, make_case
from .ingestion import (ScrapeWindow, align, align_and_standardize, fetch_prometheus,
                        load_csv, read_queries, write_csv)
from .ingestion.frame import split_metric_id
from .ranking import DEFAULT_ALPHA, DEFAULT_TAU, rank_causes
from .structure.train import StructureLearnConfig, train

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2, 3
DEFAULT_AC_K = (1, 3)
DEFAULT_AVG_K = (5,)

log = logging.getLogger("dagrca")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on bad usage; this tool reserves 2 for input errors."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# input --------------------------------------------------------------------

def _csv_window(series, step=None):
    stamps = np.unique(np.concatenate([s.timestamps for s in series]))
    if stamps.size < 2:
        raise InputError("need at least two timestamps to infer the sampling step")
    if step is None:
        step = float(np.median(np.diff(stamps)))
    return ScrapeWindow(float(stamps[0]), float(stamps[-1]), step)


def load_frame(args):
    """Series from --input CSV or --prom-url/--queries, aligned onto one grid."""
    if args.input:
        if not os.path.exists(args.input):
            raise InputError(f"input file not found: {args.input}")
        series = load_csv(args.input)
        window = _csv_window(series, args.step)
    else:
        queries = read_queries(args.queries)
        if args.start is not None and args.end is not None:
            window = ScrapeWindow(args.start, args.end, args.step or 5.0)
        elif args.start is None and args.end is None:
            window = ScrapeWindow.last(step=args.step or 5.0)
        else:
            raise UsageError("give both --start and --end, or neither")
        series = fetch_prometheus(args.prom_url, queries, window)
    prep = align if args.no_standardize else align_and_standardize
    try:
        return prep(series, window, difference=tuple(args.difference or ()))
    except ContractError as exc:
        raise InputError(str(exc)) from None


def _learn_config(args):
    kwargs = {"seed": args.seed}
    if args.epochs is not None:
        kwargs["epochs_per_outer"] = args.epochs
    if args.lr is not None:
        kwargs["lr"] = args.lr
    if args.max_outer is not None:
        kwargs["max_outer_iterations"] = args.max_outer
    return StructureLearnConfig(**kwargs)


def _ensure_dir(path):
    os.makedirs(path, exist_ok=True)
    return path


# subcommands --------------------------------------------------------------

def cmd_learn(args):
    frame = load_frame(args)
    cfg = _learn_config(args)
    result = train(frame, cfg)
    out = _ensure_dir(args.out)
    config = cfg.to_dict()
    config["tau"] = args.tau
    artifacts.write_json(os.path.join(out, "dag.json"), artifacts.dag_document(result, config))
    if args.dot:
        with open(os.path.join(out, "dag.dot"), "w", encoding="utf-8", newline="\n") as fh:
            fh.write(artifacts.dag_dot(result.dag, args.tau))
    print(f"learned {len(result.dag.node_labels)}-node graph, h={result.h:.3e}, "
          f"converged={result.converged}; wrote {os.path.join(out, 'dag.json')}")
    return EXIT_OK


def cmd_localize(args):
    frame = load_frame(args)
    result = train(frame, _learn_config(args))
    ranked = rank_causes(result.dag, alpha=args.alpha_teleport, tau=args.tau)
    if args.granularity == "service":
        ranked = ranked.by_service()
    out = _ensure_dir(args.out)
    doc = artifacts.ranking_document(ranked, args.granularity, args.alpha_teleport, args.tau)
    artifacts.write_json(os.path.join(out, "ranking.json"), doc)
    for row in doc["ranking"][:5]:
        name = row["service"] if args.granularity == "service" else row["metric"]
        print(f"{row['rank']:>3}  {row['score']:.6f}  {name}")
    return EXIT_OK


def cmd_simulate(args):
    if args.nodes < 2:
        raise UsageError("--nodes must be at least 2")
    if not 0 <= args.edge_prob <= 1:
        raise UsageError("--edge-prob must lie in [0, 1]")
    if args.samples < 2:
        raise UsageError("--samples must be at least 2")
    case = make_case(m=args.nodes, edge_prob=args.edge_prob, n=args.samples,
                     profile=args.profile, seed=args.seed, noise_scale=args.noise_scale,
                     onset_fraction=args.onset, magnitude=args.magnitude)
    out = _ensure_dir(args.out)
    write_csv(case.frame, os.path.join(out, "data.csv"))
    params = {"nodes": args.nodes, "edge_prob": args.edge_prob, "samples": args.samples,
              "noise_scale": args.noise_scale, "onset": args.onset}
    artifacts.write_json(os.path.join(out, "truth.json"),
                         artifacts.truth_document(case, args.seed, params))
    print(f"wrote case to {out}: fault at {case.fault_id} ({case.profile}), "
          f"onset row {case.onset_index}")
    return EXIT_OK


def _case_scores(ranking_doc, truth_doc, ac_ks, avg_ks, where):
    service_mode = ranking_doc.get("granularity") == "service"
    key = "service" if service_mode else "metric"
    labels = [row[key] for row in ranking_doc["ranking"]]
    roots = truth_doc["root_causes"]
    if service_mode:
        roots = [split_metric_id(r)[0] for r in roots]
    orphans = sorted(set(roots) - set(labels))
    if orphans:
        raise InputError(f"{where}: root causes not in ranking: {', '.join(orphans)}")
    for k in tuple(ac_ks) + tuple(avg_ks):
        if not 1 <= k <= len(labels):
            raise UsageError(f"k={k} exceeds the ranking length {len(labels)}; "
                             f"pass smaller values with --k / --avg-k")
    row = {}
    for k in ac_ks:
        row[f"AC@{k}"] = ac_at_k(labels, roots, k)
    for k in avg_ks:
        row[f"Avg@{k}"] = avg_at_k(labels, roots, k)
    return row


def _batch_cases(root):
    if not os.path.isdir(root):
        raise InputError(f"batch directory not found: {root}")
    cases = []
    for name in sorted(os.listdir(root)):
        d = os.path.join(root, name)
        if os.path.isfile(os.path.join(d, "ranking.json")) and os.path.isfile(os.path.join(d, "truth.json")):
            cases.append((name, os.path.join(d, "ranking.json"), os.path.join(d, "truth.json")))
    if not cases:
        raise InputError(f"no case directories with ranking.json and truth.json under {root}")
    return cases


def cmd_eval(args):
    ac_ks = tuple(args.k) if args.k else DEFAULT_AC_K
    avg_ks = tuple(args.avg_k) if args.avg_k else DEFAULT_AVG_K
    if args.batch:
        if args.ranking or args.truth:
            raise UsageError("give either --batch or RANKING TRUTH, not both")
        cases = _batch_cases(args.batch)
    else:
        if not (args.ranking and args.truth):
            raise UsageError("eval needs RANKING and TRUTH files (or --batch DIR)")
        cases = [(os.path.basename(os.path.dirname(os.path.abspath(args.ranking))) or "case",
                  args.ranking, args.truth)]
    columns = [f"AC@{k}" for k in ac_ks] + [f"Avg@{k}" for k in avg_ks]
    rows = []
    for name, rpath, tpath in cases:
        scores = _case_scores(artifacts.read_ranking(rpath), artifacts.read_truth(tpath),
                              ac_ks, avg_ks, name)
        rows.append({"case": name, **scores})
    mean = {c: float(np.mean([r[c] for r in rows])) for c in columns}
    width = max(len("mean"), *(len(r["case"]) for r in rows))
    print(f"{'case':<{width}}  " + "  ".join(f"{c:>7}" for c in columns))
    for r in rows + [{"case": "mean", **mean}]:
        print(f"{r['case']:<{width}}  " + "  ".join(f"{r[c]:>7.4f}" for c in columns))
    out = _ensure_dir(args.out)
    artifacts.write_json(os.path.join(out, "eval.json"),
                         artifacts.eval_document(columns, rows, mean))
    return EXIT_OK


# parser -------------------------------------------------------------------

def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _add_input(p):
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--input", help="CSV file: 'timestamp' column then one column per metric")
    src.add_argument("--prom-url", help="Prometheus base URL (needs --queries)")
    p.add_argument("--queries", help="file of 'metric_id query' lines for --prom-url")
    p.add_argument("--start", type=float, help="window start, epoch seconds (Prometheus)")
    p.add_argument("--end", type=float, help="window end, epoch seconds (Prometheus)")
    p.add_argument("--step", type=float, help="grid step in seconds (default: 5, or inferred from CSV)")
    p.add_argument("--difference", nargs="*", metavar="METRIC",
                   help="metric ids to replace by their first difference (counters)")
    p.add_argument("--no-standardize", action="store_true",
                   help="train on the aligned values without per-column z-scoring")


def _add_training(p):
    p.add_argument("--epochs", type=_positive_int, help="Adam steps per outer iteration (default 1000)")
    p.add_argument("--max-outer", type=_positive_int, help="outer Lagrangian iterations (default 10)")
    p.add_argument("--lr", type=float, help="Adam learning rate (default 1e-3)")
    p.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    p.add_argument("--tau", type=float, default=DEFAULT_TAU, help="edge prune threshold (default 0.3)")


def build_parser():
    parser = _Parser(prog="dagrca", description="Causal-graph root-cause localization for metrics.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log training progress")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("learn", help="learn a weighted DAG and write dag.json")
    _add_input(p)
    _add_training(p)
    p.add_argument("--out", default=".", help="output directory (default: current)")
    p.add_argument("--dot", action="store_true", help="also write dag.dot")
    p.set_defaults(func=cmd_learn)

    p = sub.add_parser("localize", help="learn, rank root causes and write ranking.json")
    _add_input(p)
    _add_training(p)
    p.add_argument("--alpha-teleport", type=float, default=DEFAULT_ALPHA,
                   help="PageRank damping factor (default 0.85)")
    p.add_argument("--granularity", choices=("metric", "service"), default="metric",
                   help="rank metrics, or services by their best metric")
    p.add_argument("--out", default=".", help="output directory (default: current)")
    p.set_defaults(func=cmd_localize)

    p = sub.add_parser("simulate", help="write a synthetic fault case (data.csv, truth.json)")
    p.add_argument("--nodes", type=int, default=10, help="number of metrics (default 10)")
    p.add_argument("--edge-prob", type=float, default=0.3, help="edge probability (default 0.3)")
    p.add_argument("--samples", type=int, default=300, help="samples (default 300)")
    p.add_argument("--profile", default="step", choices=PROFILES + tuple(PROFILE_ALIASES),
                   help="fault profile (default step)")
    p.add_argument("--noise-scale", type=float, default=1.0)
    p.add_argument("--onset", type=float, default=0.5, help="fault onset as a fraction of samples")
    p.add_argument("--magnitude", type=float, help="fault size (default 3 x noise scale)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=".", help="case directory")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("eval", help="score rankings against ground truth (AC@k, Avg@k)")
    p.add_argument("ranking", nargs="?", help="ranking.json")
    p.add_argument("truth", nargs="?", help="truth.json")
    p.add_argument("--batch", metavar="DIR", help="directory of case folders to score")
    p.add_argument("--k", type=_positive_int, nargs="+", help="AC@k cut-offs (default 1 3)")
    p.add_argument("--avg-k", type=_positive_int, nargs="+", help="Avg@k cut-offs (default 5)")
    p.add_argument("--out", default=".", help="directory for eval.json")
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "prom_url", None) and not args.queries:
            parser.error("--prom-url needs --queries")
    except SystemExit as exc:  # usage errors and --help
        return exc.code
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"dagrca: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericError as exc:
        print(f"dagrca: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except InputError as exc:
        print(f"dagrca: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ContractError as exc:
        print(f"dagrca: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"dagrca: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except DagRcaError as exc:
        print(f"dagrca: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
