"""In-memory build + evaluation of the shipped fixture, shared by tests."""

from pathlib import Path

FIXTURE_SRC = Path(__file__).resolve().parent / "data" / "fixture"


def build_fixture_run() -> dict:
    """Build and evaluate the shipped fixture in memory (writes nothing)."""
    from relprobe.config import load_config
    from relprobe.metrics import EvalData
    from relprobe.pipeline import build_dataset, evaluate_all, load_agents

    cfg = load_config(FIXTURE_SRC / "fixture.json")
    build = build_dataset(cfg)
    data = EvalData(build.probes, build.relatum_sets, build.tuples)
    agents = load_agents(cfg, build.probes)
    evals, proto_subset, entropies = evaluate_all(
        data, agents, cfg.symmetry_k, build.vocab, workers=1)
    return {
        "cfg": cfg,
        "build": build,
        "data": data,
        "agents": {a.agent.name: a for a in agents},
        "evals": {e.agent.name: e for e in evals},
        "proto_subset": proto_subset,
        "entropies": entropies,
    }
