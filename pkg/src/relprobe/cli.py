"""Command-line entry points: build, validate, evaluate, report.

Exit codes: 0 success, 2 validation failure, 3 missing input,
4 internal invariant breach.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import pipeline, responses
from .config import ConfigError, MissingInputError, RunConfig, load_config
from .lexicon import IngestError
from .probegen import TemplateError

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_MISSING_INPUT = 3
EXIT_INVARIANT = 4


def cmd_build(cfg: RunConfig) -> int:
    build = pipeline.build_dataset(cfg)
    dataset_dir = pipeline.write_build(build, cfg)
    counts = build.counts()
    print(f"built dataset in {dataset_dir}")
    print(f"  tuples: {counts['tuples_raw']} raw -> {counts['tuples_augmented']} augmented")
    print(f"  probes: {counts['probes']} ({counts['probes_per_relation']})")
    return EXIT_OK


def cmd_validate(cfg: RunConfig) -> int:
    build = pipeline.build_dataset(cfg)
    failures = 0

    if cfg.human_responses is not None:
        try:
            key = responses.load_bogus_key(cfg.bogus_key)
            report = responses.HumanIngestReport()
            responses.ingest_human(cfg.human_responses, key, known_probes=build.probes,
                                   report=report)
        except responses.ResponseError as exc:
            print(f"FAIL {cfg.human_responses}: {exc}")
            failures += 1
        else:
            print(f"ok   {cfg.human_responses}: {report.accepted_rows} rows pooled, "
                  f"{len(report.rejected_submissions)} submissions rejected, "
                  f"{report.skipped_unknown_probe} unknown-probe rows skipped")

    for src in cfg.model_responses:
        try:
            dists = responses.ingest_model(src.path, probes=build.probes, agent_name=src.agent)
        except responses.ResponseError as exc:
            print(f"FAIL {src.path}: {exc}")
            failures += 1
        else:
            print(f"ok   {src.path}: {len(dists)} (probe, variant) distributions")

    if failures:
        print(f"{failures} response file(s) failed validation")
        return EXIT_VALIDATION
    print("all response files conform to the schema")
    return EXIT_OK


def _evaluate(cfg: RunConfig):
    data, vocab, dataset_manifest = pipeline.load_dataset(cfg)
    agents = pipeline.load_agents(cfg, data.probes)
    evals, proto_subset, entropies = pipeline.evaluate_all(
        data, agents, cfg.symmetry_k, vocab, workers=cfg.workers)
    pipeline.check_invariants(evals)
    return data, agents, evals, proto_subset, entropies, dataset_manifest


def cmd_evaluate(cfg: RunConfig) -> int:
    data, agents, evals, proto_subset, entropies, dataset_manifest = _evaluate(cfg)
    pipeline.emit_evaluation(cfg, data, agents, evals, entropies, proto_subset,
                             dataset_manifest.get("counts", {}))
    print(f"evaluated {len(evals)} agent(s) over {len(data.probes)} probes "
          f"-> {cfg.output_dir}")
    for ev in sorted(evals, key=lambda e: e.agent.name):
        print(f"  {ev.agent.name}: AuDC={float(ev.audc):.3f}")
    return EXIT_OK


def cmd_report(cfg: RunConfig) -> int:
    _, agents, evals, proto_subset, entropies, _ = _evaluate(cfg)
    pipeline.emit_report(cfg, evals, entropies)
    print(f"report tables and figure data written under {cfg.output_dir}")
    return EXIT_OK


COMMANDS = {
    "build": cmd_build,
    "validate": cmd_validate,
    "evaluate": cmd_evaluate,
    "report": cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="relprobe",
        description="Build semantic-relation probe datasets and evaluate agent responses.",
    )
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("config", type=Path, help="path to the JSON run configuration")
    parser.add_argument("-v", "--verbose", action="store_true")
    args = parser.parse_args(argv)

    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        cfg.validate()
        return COMMANDS[args.command](cfg)
    except MissingInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISSING_INPUT
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISSING_INPUT
    except (ConfigError, IngestError, TemplateError, responses.ResponseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except pipeline.InvariantError as exc:
        print(f"invariant breach: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
