"""Command-line surface.

Subcommands: oracle, synth, train, eval, sweep, lambda, report.  Every
command accepts --seed and --threads plus an optional key=value config file;
explicit flags win over config entries, which win over built-in defaults.
Exit codes: 0 success, 1 I/O or file-format error, 2 domain error (invalid
input, oracle cap, constraint violations).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .constraints import SORTED_PROFILE_CAP, distance, max_oracle, min_oracle
from .errors import FormatError, OracleCapError, TreeprobeError
from .greedy import (
    PredictedDepths,
    greedy_farthest,
    greedy_nearest,
    sorted_gaps_within_one,
)
from .geometry import build_synthetic_corpus
from .ingest import (
    MODES,
    DepthAnnotation,
    attach_annotations,
    read_depths,
    read_embeddings,
    select_mode_corpus,
    write_embeddings,
    write_jsonl_depths,
)
from .metrics import (
    DEFAULT_ESSP_EDGES,
    DEFAULT_SSP_EDGES,
    MetricReport,
    aggregate,
    group_by_ranges,
    reports_to_csv,
)
from .probe import ProbeMatrix, TrainConfig, evaluate, train
from .reference import reference_reports

_SUBPARSERS: dict[str, argparse.ArgumentParser] = {}


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=0, help="random seed")
    parser.add_argument(
        "--threads", type=int, default=1,
        help="worker threads for evaluation; affects wall time only",
    )
    parser.add_argument(
        "--config", type=str, default=None,
        help="plain-text key=value file supplying defaults for any flag",
    )
    parser.add_argument("--out", type=str, default=None, help="write output here instead of stdout")


def _add_train_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--epochs", type=int, default=10)
    parser.add_argument("--learning-rate", type=float, default=2e-5)
    parser.add_argument("--epsilon", type=float, default=1e-8)
    parser.add_argument("--batch-size", type=int, default=32)
    parser.add_argument("--warmup-fraction", type=float, default=0.1)
    parser.add_argument("--init-range", type=float, default=0.05)
    parser.add_argument("--weight-decay", type=float, default=0.0)
    parser.add_argument("--rank", type=int, default=None, help="probe rows; default n//2")


def _train_config(args, mode: str) -> TrainConfig:
    return TrainConfig(
        learning_rate=args.learning_rate,
        optimizer_epsilon=args.epsilon,
        epochs=args.epochs,
        warmup_fraction=args.warmup_fraction,
        batch_size=args.batch_size,
        init_range=args.init_range,
        seed=args.seed,
        target_mode=mode,
        rank=args.rank,
        weight_decay=args.weight_decay,
    )


def _apply_config(
    args: argparse.Namespace, parser: argparse.ArgumentParser, argv: list[str]
) -> None:
    """Fill flags not given on the command line from the key=value config file."""
    if not getattr(args, "config", None):
        return
    entries: dict[str, str] = {}
    for lineno, line in enumerate(Path(args.config).read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise FormatError(f"{args.config}:{lineno}: expected key=value")
        key, _, value = line.partition("=")
        entries[key.strip().replace("-", "_")] = value.strip()
    given = {token.split("=", 1)[0] for token in argv if token.startswith("--")}
    for action in parser._actions:
        dest = action.dest
        if dest in ("help", "config") or dest not in entries:
            continue
        if any(option in given for option in action.option_strings):
            continue  # explicit flag wins
        raw = entries[dest]
        if isinstance(action, argparse._StoreTrueAction):
            setattr(args, dest, raw.lower() in ("1", "true", "yes"))
        elif action.type is not None:
            setattr(args, dest, action.type(raw))
        else:
            setattr(args, dest, raw)


def _emit(text: str, args) -> None:
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _edges(raw: str) -> tuple[float, ...]:
    return tuple(float(v) for v in raw.split(",") if v.strip())


def _load_corpus(args):
    corpus = read_embeddings(args.embeddings)
    if getattr(args, "annotations", None):
        attach_annotations(corpus, read_depths(args.annotations))
    return select_mode_corpus(corpus, args.measurement)


# ---------------------------------------------------------------------------
# Subcommands


def cmd_oracle(args) -> int:
    if args.random is not None:
        rng = np.random.default_rng(args.seed)
        values = list(np.round(rng.uniform(0.0, args.random, size=args.random), 4))
    else:
        if not args.values:
            raise TreeprobeError("provide depth values or --random L")
        values = [float(v) for v in args.values]
    pdep = PredictedDepths(values)
    near = greedy_nearest(pdep)
    far = greedy_farthest(pdep)
    result = {
        "values": values,
        "greedy_nearest": list(near.values),
        "greedy_nearest_distance": distance(values, near.values),
        "greedy_farthest": list(far.values),
        "greedy_farthest_distance": distance(values, far.values),
        "gaps_within_one": sorted_gaps_within_one(pdep),
    }
    if not args.greedy_only:
        if len(values) > args.cap:
            raise OracleCapError(
                f"length {len(values)} exceeds the oracle cap {args.cap}; "
                "pass --greedy-only for long inputs"
            )
        nearest, lo = min_oracle(values, cap=args.cap)
        farthest, hi = max_oracle(values, cap=args.cap)
        result.update(
            nearest=list(nearest.values),
            nearest_distance=lo,
            farthest=list(farthest.values),
            farthest_distance=hi,
        )
    if args.json:
        _emit(json.dumps(result, indent=2), args)
    else:
        lines = [f"values            {values}"]
        if "nearest" in result:
            lines.append(f"nearest           {result['nearest']}  distance {result['nearest_distance']:.6g}")
            lines.append(f"farthest          {result['farthest']}  distance {result['farthest_distance']:.6g}")
        lines.append(f"greedy nearest    {result['greedy_nearest']}  distance {result['greedy_nearest_distance']:.6g}")
        lines.append(f"greedy farthest   {result['greedy_farthest']}  distance {result['greedy_farthest_distance']:.6g}")
        lines.append(f"gaps within one   {result['gaps_within_one']}")
        _emit("\n".join(lines), args)
    return 0


def cmd_synth(args) -> int:
    corpus = build_synthetic_corpus(
        num_sentences=args.sentences,
        length_range=(args.min_length, args.max_length),
        m=args.m,
        n=args.n,
        seed=args.seed,
        eps_factor=args.eps_factor,
    )
    write_embeddings(corpus, args.out_embeddings)
    write_jsonl_depths(
        [DepthAnnotation(k, v) for k, v in corpus.annotations.items()],
        args.out_annotations,
    )
    _emit(
        json.dumps(
            {
                "sentences": len(corpus),
                "n": corpus.n,
                "embeddings": args.out_embeddings,
                "annotations": args.out_annotations,
            }
        ),
        args,
    )
    return 0


def cmd_train(args) -> int:
    corpus = _load_corpus(args)
    cfg = _train_config(args, args.mode)
    probe, metric = train(corpus, cfg)
    if args.probe_out:
        probe.save(args.probe_out)
    _emit(
        json.dumps(
            {
                "mode": args.mode,
                "final_metric": metric,
                "m": probe.m,
                "n": probe.n,
                "sentences": len(corpus),
                "checkpoint": args.probe_out,
            }
        ),
        args,
    )
    return 0


def cmd_eval(args) -> int:
    corpus = _load_corpus(args)
    probe = ProbeMatrix.load(args.probe)
    metric = evaluate(corpus, probe, args.mode, threads=args.threads)
    _emit(json.dumps({"mode": args.mode, "metric": metric, "sentences": len(corpus)}), args)
    return 0


def cmd_sweep(args) -> int:
    reports = []
    for path in args.embeddings:
        corpus = read_embeddings(path)
        if args.annotations:
            attach_annotations(corpus, read_depths(args.annotations))
        corpus = select_mode_corpus(corpus, args.measurement)
        slice_id = Path(path).stem
        probe_ssp, _ = train(corpus, _train_config(args, "ssp"))
        probe_essp, _ = train(corpus, _train_config(args, "essp"))
        probe_sup = None
        if corpus.annotations:
            probe_sup, _ = train(corpus, _train_config(args, "supervised"))
        reports.append(
            aggregate(
                corpus,
                probe_ssp,
                probe_essp,
                probe_sup,
                slice_id=slice_id,
                exact=args.exact,
                threads=args.threads,
            )
        )
    payload = {
        "slices": [r.to_dict() for r in reports],
        "groupings": _groupings(reports, args),
    }
    if args.out_json:
        Path(args.out_json).write_text(json.dumps(payload, indent=2), encoding="utf-8")
    _emit(reports_to_csv(reports), args)
    return 0


def _groupings(reports, args) -> dict:
    return {
        "x_ssp": [
            {"lower": g.lower, "upper": g.upper, "slices": list(g.slices)}
            for g in group_by_ranges(reports, "x_ssp", _edges(args.ssp_bins))
        ],
        "x_essp": [
            {"lower": g.lower, "upper": g.upper, "slices": list(g.slices)}
            for g in group_by_ranges(reports, "x_essp", _edges(args.essp_bins))
        ],
    }


def cmd_lambda(args) -> int:
    if args.x_ssp <= 0:
        raise TreeprobeError(
            f"regularization scaling needs a positive self-supervised metric, got {args.x_ssp}"
        )
    value = args.ratio * args.task_loss / args.x_ssp
    _emit(json.dumps({"lambda": value}) if args.json else f"{value:.10g}", args)
    return 0


def cmd_report(args) -> int:
    if args.reference:
        reports = reference_reports()
    elif args.from_json:
        payload = json.loads(Path(args.from_json).read_text(encoding="utf-8"))
        rows = payload["slices"] if isinstance(payload, dict) else payload
        reports = [
            MetricReport.build(
                slice_id=row["slice"],
                x_ssp=row["x_ssp"],
                x_essp=row["x_essp"],
                x_sp_true=row.get("x_sp_true"),
                position_histogram=(
                    tuple(row["position_histogram"])
                    if row.get("position_histogram")
                    else None
                ),
                corpus_size=row.get("corpus_size", 0),
            )
            for row in rows
        ]
    else:
        raise TreeprobeError("provide --from-json PATH or --reference")
    if args.format == "csv":
        _emit(reports_to_csv(reports), args)
    else:
        payload = {
            "slices": [r.to_dict() for r in reports],
            "groupings": _groupings(reports, args),
        }
        _emit(json.dumps(payload, indent=2), args)
    return 0


# ---------------------------------------------------------------------------
# Parser assembly


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="treeprobe",
        description="Tree topological probing of embedding dumps",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("oracle", help="nearest/farthest valid sequences for given depths")
    p.add_argument("values", nargs="*", help="predicted depth values")
    p.add_argument("--random", type=int, default=None, metavar="L",
                   help="use L random depths instead of explicit values")
    p.add_argument("--greedy-only", action="store_true",
                   help="skip the exact oracles (no length cap)")
    p.add_argument("--cap", type=int, default=SORTED_PROFILE_CAP,
                   help="exact-oracle length cap")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_oracle)
    _add_common(p)
    _SUBPARSERS["oracle"] = p

    p = sub.add_parser("synth", help="generate a planted synthetic corpus")
    p.add_argument("--sentences", type=int, default=100)
    p.add_argument("--min-length", type=int, default=3)
    p.add_argument("--max-length", type=int, default=8)
    p.add_argument("--m", type=int, default=4)
    p.add_argument("--n", type=int, default=8)
    p.add_argument("--eps-factor", type=float, default=1e-4)
    p.add_argument("--out-embeddings", type=str, required=True)
    p.add_argument("--out-annotations", type=str, required=True)
    p.set_defaults(func=cmd_synth)
    _add_common(p)
    _SUBPARSERS["synth"] = p

    p = sub.add_parser("train", help="train one probe on an embedding dump")
    p.add_argument("--embeddings", type=str, required=True)
    p.add_argument("--mode", choices=("supervised", "ssp", "essp"), default="ssp")
    p.add_argument("--annotations", type=str, default=None)
    p.add_argument("--measurement", choices=MODES, default="e1")
    p.add_argument("--probe-out", type=str, default=None)
    _add_train_flags(p)
    p.set_defaults(func=cmd_train)
    _add_common(p)
    _SUBPARSERS["train"] = p

    p = sub.add_parser("eval", help="evaluate a stored probe on an embedding dump")
    p.add_argument("--embeddings", type=str, required=True)
    p.add_argument("--probe", type=str, required=True)
    p.add_argument("--mode", choices=("supervised", "ssp", "essp"), default="ssp")
    p.add_argument("--annotations", type=str, default=None)
    p.add_argument("--measurement", choices=MODES, default="e1")
    p.set_defaults(func=cmd_eval)
    _add_common(p)
    _SUBPARSERS["eval"] = p

    p = sub.add_parser("sweep", help="train and report all metrics per model slice")
    p.add_argument("embeddings", nargs="+", help="one embedding dump per slice")
    p.add_argument("--annotations", type=str, default=None)
    p.add_argument("--measurement", choices=MODES, default="e1")
    p.add_argument("--exact", action="store_true",
                   help="use exact oracles for position samples when lengths allow")
    p.add_argument("--out-json", type=str, default=None)
    p.add_argument("--ssp-bins", type=str, default=",".join(map(str, DEFAULT_SSP_EDGES)))
    p.add_argument("--essp-bins", type=str, default=",".join(map(str, DEFAULT_ESSP_EDGES)))
    _add_train_flags(p)
    p.set_defaults(func=cmd_sweep)
    _add_common(p)
    _SUBPARSERS["sweep"] = p

    p = sub.add_parser("lambda", help="regularization coefficient from a target loss ratio")
    p.add_argument("--task-loss", type=float, required=True)
    p.add_argument("--x-ssp", type=float, required=True)
    p.add_argument("--ratio", type=float, default=0.1)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_lambda)
    _add_common(p)
    _SUBPARSERS["lambda"] = p

    p = sub.add_parser("report", help="groupings and plot data from sweep results")
    p.add_argument("--from-json", type=str, default=None)
    p.add_argument("--reference", action="store_true",
                   help="use the built-in BERT-large reference table")
    p.add_argument("--format", choices=("csv", "json"), default="json")
    p.add_argument("--ssp-bins", type=str, default=",".join(map(str, DEFAULT_SSP_EDGES)))
    p.add_argument("--essp-bins", type=str, default=",".join(map(str, DEFAULT_ESSP_EDGES)))
    p.set_defaults(func=cmd_report)
    _add_common(p)
    _SUBPARSERS["report"] = p

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    if argv is None:
        argv = sys.argv[1:]
    args = parser.parse_args(argv)
    try:
        _apply_config(args, _SUBPARSERS[args.command], list(argv))
        return args.func(args)
    except (FormatError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except TreeprobeError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
