"""Command line: elicit responses from a checkpoint or export its vocabulary."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .runner import ElicitationJob, ProbeFileError, elicit
from .vocab import ModelUnavailableError, export_vocabulary


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="relprobe-elicit",
        description="Produce response files and vocabulary exports from LM checkpoints.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("elicit", help="score probes and write a response file")
    run.add_argument("--model", required=True, help="checkpoint path or identifier")
    run.add_argument("--kind", required=True, choices=("masked", "causal"))
    run.add_argument("--probes", required=True, type=Path, help="probes JSONL from the dataset build")
    run.add_argument("--topk", type=int, default=100)
    run.add_argument("--out", required=True, type=Path)
    run.add_argument("--batch", type=int, default=16)
    run.add_argument("--device", default="cpu")
    run.add_argument("--agent", default=None, help="agent name to stamp (default: model basename)")

    vocab = sub.add_parser("export-vocab", help="write the single-token word list")
    vocab.add_argument("--model", required=True)
    vocab.add_argument("--out", required=True, type=Path)

    parser.add_argument("-v", "--verbose", action="store_true")
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")

    try:
        if args.command == "elicit":
            job = ElicitationJob(
                probes=args.probes, model=args.model, kind=args.kind,
                topk=args.topk, batch_size=args.batch, device=args.device, agent=args.agent,
            )
            out = elicit(job, args.out)
            print(f"wrote {out}")
        else:
            words = export_vocabulary(args.model, args.out)
            print(f"wrote {args.out} ({len(words)} words)")
        return 0
    except (ModelUnavailableError, ProbeFileError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
