"""Command-line entry point: ``persistent-dbn <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import sys

from .bench import ExperimentSpec, emit_plot_data, forward_sample, gen_random_prototype, run_benchmark
from .bench.runner import write_csv
from .errors import EvidenceError, ParseError, PersistentDBNError, SchemaViolation, ValidationError
from .filtering import bk_filter, fixed_window_filter
from .inference import smooth
from .model import (
    EvidenceSet,
    changepoint_transform,
    dumps_model,
    evidence_to_list,
    load_evidence,
    load_model,
    save_evidence,
    save_model,
    validate_prototype,
)
from .oracle import DEFAULT_VE_BUDGET
from .posterior import ZeroEvidenceProbability

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_ZERO_EVIDENCE = 3


def _int_list(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def _str_list(text: str) -> list[str]:
    return [x.strip() for x in text.split(",") if x.strip()]


def _write(text: str, out) -> None:
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _emit_rows(rows, columns, out) -> None:
    if out:
        write_csv(rows, columns, out)
    else:
        write_csv(rows, columns, sys.stdout)


def cmd_validate(args) -> int:
    report = validate_prototype(load_model(args.model))
    _write(json.dumps(report.as_dict(), indent=2) + "\n", args.out)
    return EXIT_OK if report.supported else EXIT_INVALID


def cmd_smooth(args) -> int:
    net = load_model(args.model)
    ev = load_evidence(args.evidence, net) if args.evidence else None
    post = smooth(changepoint_transform(net, args.slices), ev)
    if isinstance(post, ZeroEvidenceProbability):
        print(post.reason, file=sys.stderr)
        return EXIT_ZERO_EVIDENCE
    rows = []
    for k in net.node_ids:
        for t, p in enumerate(post.marginals[k], start=1):
            rows.append({"quantity": "marginal", "node": k, "index": t, "probability": float(p)})
        if k in post.changepoint:
            for j, p in enumerate(post.changepoint[k]):
                rows.append({"quantity": "changepoint", "node": k, "index": j, "probability": float(p)})
    rows.append({"quantity": "log_likelihood", "node": "", "index": "", "probability": post.log_likelihood})
    _emit_rows(rows, ["quantity", "node", "index", "probability"], args.out)
    return EXIT_OK


def cmd_filter(args) -> int:
    net = load_model(args.model)
    ev = load_evidence(args.evidence, net) if args.evidence else None
    ev = ev or EvidenceSet()
    if args.method == "bk":
        run = bk_filter(net, ev, args.slices)
    else:
        run = fixed_window_filter(net, ev, args.slices, args.window or args.slices, pin=args.pin)
    if isinstance(run, ZeroEvidenceProbability):
        print(run.reason, file=sys.stderr)
        return EXIT_ZERO_EVIDENCE
    rows = [{"node": k, "t": t, "probability": float(p)}
            for k in net.node_ids for t, p in enumerate(run.marginals[k], start=1)]
    _emit_rows(rows, ["node", "t", "probability"], args.out)
    return EXIT_OK


def cmd_gen(args) -> int:
    net = gen_random_prototype(args.nodes, args.kind, seed=args.seed, max_in_degree=args.max_in_degree)
    if args.out:
        save_model(net, args.out)
    else:
        sys.stdout.write(dumps_model(net))
    return EXIT_OK


def cmd_sample(args) -> int:
    net = load_model(args.model)
    sample = forward_sample(net, args.slices, seed=args.seed, mode=args.mode, fraction=args.fraction)
    if args.out:
        save_evidence(sample.evidence, args.out)
    else:
        sys.stdout.write(json.dumps(evidence_to_list(sample.evidence), indent=2) + "\n")
    return EXIT_OK


def cmd_bench(args) -> int:
    spec = ExperimentSpec(
        kind=args.kind,
        n_values=_int_list(args.nodes),
        m_values=_int_list(args.slices),
        evidence_fraction=args.fraction,
        repetitions=args.reps,
        seed=args.seed,
        algorithms=_str_list(args.algorithms),
        windows=_int_list(args.windows),
        max_in_degree=args.max_in_degree,
        mode=args.mode,
        pin=args.pin,
        ve_budget=args.budget,
        deterministic=args.deterministic,
    )
    run_benchmark(spec, out=args.out or sys.stdout, steps_out=args.steps_out)
    return EXIT_OK


def cmd_plotdata(args) -> int:
    paths = emit_plot_data(args.csv, args.out)
    for p in paths.values():
        print(p)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="persistent-dbn", description="Exact smoothing and approximate filtering "
                                "in dynamic Bayesian networks with persistent variables.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("validate", help="report structure class and check the model")
    s.add_argument("--model", required=True)
    s.add_argument("--out")
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("smooth", help="exact posteriors over all slices")
    s.add_argument("--model", required=True)
    s.add_argument("--evidence")
    s.add_argument("--slices", type=int, required=True)
    s.add_argument("--out")
    s.set_defaults(func=cmd_smooth)

    s = sub.add_parser("filter", help="online marginals by fixed-window smoothing or BK")
    s.add_argument("--model", required=True)
    s.add_argument("--evidence")
    s.add_argument("--slices", type=int, required=True)
    s.add_argument("--window", type=int)
    s.add_argument("--pin", action="store_true")
    s.add_argument("--method", choices=["window", "bk"], default="window")
    s.add_argument("--out")
    s.set_defaults(func=cmd_filter)

    s = sub.add_parser("gen", help="random tree or polytree prototype")
    s.add_argument("--kind", choices=["tree", "polytree"], default="tree")
    s.add_argument("--nodes", type=int, required=True)
    s.add_argument("--max-in-degree", type=int, default=2)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out")
    s.set_defaults(func=cmd_gen)

    s = sub.add_parser("sample", help="forward-sample evidence from a model")
    s.add_argument("--model", required=True)
    s.add_argument("--slices", type=int, required=True)
    s.add_argument("--mode", choices=["speed", "accuracy"], default="speed")
    s.add_argument("--fraction", type=float, default=0.10)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out")
    s.set_defaults(func=cmd_sample)

    s = sub.add_parser("bench", help="timing or accuracy sweep written as CSV")
    s.add_argument("--kind", choices=["tree", "polytree"], default="tree")
    s.add_argument("--nodes", default="15", help="comma-separated N values")
    s.add_argument("--slices", default="20", help="comma-separated M values")
    s.add_argument("--algorithms", default="pct", help="comma-separated: pct,ppt,ve,enum,bk,window")
    s.add_argument("--window", dest="windows", default="1,2,4,8,16", help="comma-separated W values")
    s.add_argument("--reps", type=int, default=1)
    s.add_argument("--mode", choices=["speed", "accuracy"], default="speed")
    s.add_argument("--fraction", type=float, default=0.10)
    s.add_argument("--max-in-degree", type=int, default=2)
    s.add_argument("--pin", action="store_true")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--budget", type=int, default=DEFAULT_VE_BUDGET, help="largest VE table, in entries")
    s.add_argument("--deterministic", action="store_true", help="zero the wall-time column")
    s.add_argument("--steps-out", help="per-slice error rows (accuracy mode)")
    s.add_argument("--out")
    s.set_defaults(func=cmd_bench)

    s = sub.add_parser("plotdata", help="aggregate a bench CSV into per-plot tables")
    s.add_argument("--csv", required=True)
    s.add_argument("--out", required=True, help="output directory")
    s.set_defaults(func=cmd_plotdata)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValidationError, EvidenceError, ParseError, SchemaViolation) as e:
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_INVALID
    except PersistentDBNError as e:
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
