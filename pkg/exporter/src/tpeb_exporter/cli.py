"""Command-line entry for the per-layer hidden-state exporter."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .export import ExportJob, export


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tpeb-export",
        description="Dump per-layer transformer hidden states into TPEB files",
    )
    parser.add_argument("--model", required=True, help="model name or local path")
    parser.add_argument(
        "--layers", required=True,
        help="comma-separated layer indices; 0 is the embedding layer",
    )
    parser.add_argument("--input", required=True, help="text file, one sentence per line")
    parser.add_argument("--outdir", required=True, help="directory for layer_<i>.tpeb files")
    parser.add_argument("--batch-size", type=int, default=16)
    parser.add_argument("--device", default="cpu")
    parser.add_argument("--max-length", type=int, default=None)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    try:
        layers = tuple(int(v) for v in args.layers.split(",") if v.strip())
        job = ExportJob(
            model=args.model,
            layers=layers,
            input_path=args.input,
            output_dir=args.outdir,
            batch_size=args.batch_size,
            device=args.device,
            max_length=args.max_length,
        )
        result = export(job)
    except (OSError, ValueError, RuntimeError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    print(
        json.dumps(
            {
                "files": result.files,
                "sentences_written": result.sentences_written,
                "sentences_skipped": result.sentences_skipped,
                "alignment_available": result.alignment_available,
            }
        )
    )
    return 0


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
