#!/usr/bin/env python3
"""Regenerate the deterministic test fixture under tests/data/fixture/.

The fixture world has ten target words covering all six relations, a
two-step hypernym chain, a multi-sense synonym/hyponym ambiguity that the
pruning step must resolve, four synthetic model agents (two families, two
sizes each), and a four-participant human pool with one submission that
fails a bogus probe.
"""

from __future__ import annotations

import json
import random
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from relprobe.config import load_config
from relprobe.pipeline import build_dataset

FIXTURE = Path(__file__).resolve().parents[1] / "tests" / "data" / "fixture"

GRAPH = [
    {"sense": "robin/1", "edges": [["HYP", "bird/1"], ["MER", "wing/1"], ["SYN", "redbreast/1"]]},
    {"sense": "sparrow/1", "edges": [["HYP", "bird/1"], ["MER", "wing/1"]]},
    {"sense": "bird/1", "edges": [["HYP", "animal/1"], ["MER", "wing/1"], ["MER", "beak/1"],
                                  ["SYN", "fowl/1"]]},
    {"sense": "animal/1", "edges": [["HYP", "creature/1"]]},
    {"sense": "wall/1", "edges": [["HOL", "building/1"], ["HOL", "room/1"], ["MER", "brick/1"],
                                  ["SYN", "partition/1"], ["HYP", "barrier/1"]]},
    {"sense": "window/1", "edges": [["HOL", "wall/1"]]},
    {"sense": "room/1", "edges": [["HOL", "building/1"], ["HOL", "house/1"], ["MER", "door/1"],
                                  ["MER", "window/1"], ["SYN", "chamber/1"]]},
    {"sense": "building/1", "edges": [["HYP", "structure/1"], ["HOL", "city/1"],
                                      ["SYN", "edifice/1"]]},
    {"sense": "hot/1", "edges": [["ANT", "cold/1"], ["SYN", "warm/1"], ["HYP", "quality/1"]]},
    {"sense": "cold/1", "edges": [["ANT", "hot/1"], ["SYN", "cool/1"], ["HYP", "quality/1"]]},
    {"sense": "ending/1", "edges": [["SYN", "termination/1"], ["ANT", "beginning/1"],
                                    ["HYP", "event/1"]]},
    {"sense": "ending/2", "edges": [["HPO", "conclusion/2"], ["HPO", "finale/1"]]},
    {"sense": "ending/3", "edges": [["SYN", "conclusion/1"]]},
    {"sense": "termination/1", "edges": [["ANT", "beginning/1"], ["HYP", "event/1"]]},
]

TUPLES = [
    {"w": "robin", "r": "HYP", "v": "bird", "pos": "N"},
    {"w": "sparrow", "r": "HYP", "v": "bird", "pos": "N"},
    {"w": "building", "r": "MER", "v": "wall", "pos": "N"},
    {"w": "building", "r": "MER", "v": "room", "pos": "N"},
    {"w": "hot", "r": "ANT", "v": "cold", "pos": "N"},
    {"w": "ending", "r": "SYN", "v": "termination", "pos": "N"},
]

WORDS = [
    "robin", "sparrow", "bird", "animal", "creature", "wing", "beak", "fowl", "redbreast",
    "wall", "room", "window", "building", "structure", "brick", "partition", "barrier",
    "door", "house", "chamber", "city", "edifice",
    "hot", "cold", "warm", "cool", "quality",
    "ending", "termination", "conclusion", "beginning", "event", "finale",
    "sky", "stone", "tree", "water", "idea", "egg", "apple",
]

BOGUS = [
    {"probe": "bogus-1", "accepted": ["sun"]},
    {"probe": "bogus-2", "accepted": ["water", "sea", "ocean"]},
]

NOISE = ["sky", "stone", "door", "house", "tree", "idea", "egg", "apple"]

CONFIG = {
    "tuples": [{"path": "tuples.jsonl", "format": "native-jsonl"}],
    "lexicon_graph": "graph.jsonl",
    "vocab": ["vocab_a.txt", "vocab_b.txt"],
    "human_responses": "human.jsonl",
    "bogus_key": "bogus_key.jsonl",
    "frequency": "frequency.tsv",
    "model_responses": [
        {"agent": "alpha-small", "path": "responses_alpha-small.jsonl",
         "family": "alpha", "params": 100, "pretraining": "mlm"},
        {"agent": "alpha-large", "path": "responses_alpha-large.jsonl",
         "family": "alpha", "params": 300, "pretraining": "mlm"},
        {"agent": "beta-small", "path": "responses_beta-small.jsonl",
         "family": "beta", "params": 1000, "pretraining": "clm"},
        {"agent": "beta-large", "path": "responses_beta-large.jsonl",
         "family": "beta", "params": 8000, "pretraining": "clm"},
    ],
    "determiner_alpha": 0.8,
    "symmetry_k": [1, 5, 10],
    "significance_alpha": 0.05,
    "model_topk": 100,
    "output_dir": "out",
}

#: per-agent probability that a drawn word is a gold relatum of the probe
SKILL = {"alpha-small": 0.45, "alpha-large": 0.6, "beta-small": 0.5, "beta-large": 0.7}


def write_jsonl(path: Path, rows) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row) + "\n")


def draw_words(rng, gold, other, n, p_gold, p_other=0.2):
    """n distinct words, biased toward gold relata, then other relata, then noise."""
    picked = []
    pool_gold = sorted(gold)
    pool_other = sorted(other)
    while len(picked) < n:
        u = rng.random()
        if pool_gold and u < p_gold:
            w = rng.choice(pool_gold)
        elif pool_other and u < p_gold + p_other:
            w = rng.choice(pool_other)
        else:
            w = rng.choice(NOISE)
        if w not in picked:
            picked.append(w)
    return picked


def main() -> None:
    FIXTURE.mkdir(parents=True, exist_ok=True)
    write_jsonl(FIXTURE / "graph.jsonl", GRAPH)
    write_jsonl(FIXTURE / "tuples.jsonl", TUPLES)
    (FIXTURE / "vocab_a.txt").write_text("\n".join(WORDS + ["zebra"]) + "\n", encoding="utf-8")
    (FIXTURE / "vocab_b.txt").write_text("\n".join(WORDS + ["xylophone"]) + "\n", encoding="utf-8")
    write_jsonl(FIXTURE / "bogus_key.jsonl", BOGUS)
    rng = random.Random(20240925)
    with open(FIXTURE / "frequency.tsv", "w", encoding="utf-8") as fh:
        for w in WORDS:
            if w == "conclusion":  # deliberately absent from the frequency table
                continue
            fh.write(f"{w}\t{rng.randint(50, 100000)}\n")
    with open(FIXTURE / "fixture.json", "w", encoding="utf-8") as fh:
        json.dump(CONFIG, fh, indent=2)
        fh.write("\n")

    cfg = load_config(FIXTURE / "fixture.json")
    build = build_dataset(cfg)
    probes = sorted(build.probes.values(), key=lambda p: p.id)
    gold_of = lambda p: build.relatum_sets.get(p.target, {}).get(p.relation, frozenset())
    others_of = lambda p: frozenset().union(*(
        m for r, m in build.relatum_sets.get(p.target, {}).items() if r is not p.relation
    )) if build.relatum_sets.get(p.target) else frozenset()

    # --- human pool: 4 participants, 2 subsets, one failed bogus probe -----
    half = len(probes) // 2
    subsets = {"s1": probes[:half], "s2": probes[half:]}
    human_rows = []
    for participant in ("p1", "p2", "p3", "p4"):
        for subset, members in subsets.items():
            for probe in members:
                n = rng.randint(1, 4)
                words = draw_words(rng, gold_of(probe), others_of(probe), n, p_gold=0.75)
                human_rows.append({"participant": participant, "subset": subset,
                                   "probe": probe.id, "words": words})
            for bogus in BOGUS:
                if participant == "p4" and subset == "s1" and bogus["probe"] == "bogus-1":
                    answer = ["moon"]  # fails the control; (p4, s1) must be rejected
                else:
                    answer = [sorted(bogus["accepted"])[0]]
                human_rows.append({"participant": participant, "subset": subset,
                                   "probe": bogus["probe"], "words": answer})
    write_jsonl(FIXTURE / "human.jsonl", human_rows)

    # --- model agents ------------------------------------------------------
    for agent, skill in SKILL.items():
        rows = []
        for probe in probes:
            variants = ("a", "an") if probe.det_before_v else ("none",)
            for variant in variants:
                words = draw_words(rng, gold_of(probe), others_of(probe), 6, p_gold=skill)
                weights = sorted((rng.random() for _ in words), reverse=True)
                total = sum(weights)
                topk = [[w, round(0.9 * weight / total, 6)] for w, weight in zip(words, weights)]
                rows.append({"probe": probe.id, "agent": agent, "variant": variant, "topk": topk})
        write_jsonl(FIXTURE / f"responses_{agent}.jsonl", rows)

    counts = build.counts()
    print(f"fixture written to {FIXTURE}")
    print(f"  probes: {counts['probes']}  targets: {counts['targets_per_relation']}")


if __name__ == "__main__":
    main()
