"""Batched elicitation of top-K word distributions from LM checkpoints.

Masked models score the distribution at a single mask token substituted for
the probe's open slot; causal models score the next-token distribution after
the text preceding the slot. Scoring is restricted to the model's
single-token word vocabulary so the emitted candidates are words, not
subword fragments.

Rows are appended to a ``.partial`` file and atomically renamed on
completion, so a crashed job resumes where it stopped. A full re-run from
scratch is byte-identical; a resumed run may differ from a single pass in
float dust where batch boundaries moved.
"""

from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass
from pathlib import Path

import torch

from .vocab import load_tokenizer, single_token_words, word_token_ids

log = logging.getLogger(__name__)

V_SLOT = "[V]"

KINDS = ("masked", "causal")


class ProbeFileError(Exception):
    """The probes file does not match the expected JSONL layout."""


@dataclass(frozen=True)
class ElicitationJob:
    probes: Path
    model: str
    kind: str
    topk: int = 100
    batch_size: int = 16
    device: str = "cpu"
    agent: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.topk < 10:
            raise ValueError(f"topk must be at least 10, got {self.topk}")
        if self.batch_size < 1:
            raise ValueError("batch_size must be positive")

    @property
    def agent_name(self) -> str:
        return self.agent if self.agent else Path(str(self.model)).name


def load_probe_tasks(path: str | Path) -> list[tuple[str, str, str]]:
    """(probe id, variant, surface) triples, sorted for reproducible output."""
    tasks: list[tuple[str, str, str]] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                pid, surface_a = rec["id"], rec["surface_a"]
                surface_an = rec.get("surface_an")
            except (json.JSONDecodeError, KeyError) as exc:
                raise ProbeFileError(f"{path}:{lineno}: bad probe row ({exc})") from exc
            surfaces = ([("none", surface_a)] if surface_an is None
                        else [("a", surface_a), ("an", surface_an)])
            for variant, surface in surfaces:
                if not surface.endswith(V_SLOT):
                    raise ProbeFileError(
                        f"{path}:{lineno}: surface does not end with the open slot: {surface!r}")
                tasks.append((pid, variant, surface))
    if not tasks:
        raise ProbeFileError(f"{path}: no probes found")
    tasks.sort()
    return tasks


def _load_model(job: ElicitationJob):
    from transformers import AutoModelForCausalLM, AutoModelForMaskedLM

    cls = AutoModelForMaskedLM if job.kind == "masked" else AutoModelForCausalLM
    model = cls.from_pretrained(job.model).to(job.device)
    model.eval()
    return model


@torch.no_grad()
def _score_batch(model, tokenizer, surfaces: list[str], kind: str, device: str) -> torch.Tensor:
    """Per-row probability over the full token vocabulary at the open slot."""
    if kind == "masked":
        texts = [s.replace(V_SLOT, tokenizer.mask_token) for s in surfaces]
        enc = tokenizer(texts, return_tensors="pt", padding=True).to(device)
        logits = model(**enc).logits
        mask_rows, mask_cols = (enc["input_ids"] == tokenizer.mask_token_id).nonzero(as_tuple=True)
        if len(mask_rows) != len(surfaces) or mask_rows.tolist() != list(range(len(surfaces))):
            raise ProbeFileError("each masked probe must contain exactly one mask token")
        slot_logits = logits[mask_rows, mask_cols]
    else:
        texts = [s[: -len(V_SLOT)].rstrip() for s in surfaces]
        enc = tokenizer(texts, return_tensors="pt", padding=True).to(device)
        logits = model(**enc).logits
        last = enc["attention_mask"].sum(dim=1) - 1
        slot_logits = logits[torch.arange(len(surfaces)), last]
    return torch.softmax(slot_logits.float(), dim=-1)


def top_words(probs: torch.Tensor, words: list[str], word_ids: torch.Tensor, k: int) -> list[list]:
    """Top-k (word, probability) pairs, probability-descending, ties by word."""
    word_probs = probs[word_ids].tolist()
    order = sorted(range(len(words)), key=lambda i: (-word_probs[i], words[i]))[:k]
    return [[words[i], word_probs[i]] for i in order]


def _read_done(partial: Path) -> set[tuple[str, str]]:
    done: set[tuple[str, str]] = set()
    if partial.is_file():
        with open(partial, encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    rec = json.loads(line)
                    done.add((rec["probe"], rec["variant"]))
    return done


def elicit(job: ElicitationJob, out_path: str | Path) -> Path:
    """Run the job and write the response file in the evaluation schema."""
    out_path = Path(out_path)
    tokenizer = load_tokenizer(job.model)
    if job.kind == "masked" and tokenizer.mask_token is None:
        raise ValueError(f"{job.model} has no mask token; not a masked LM tokenizer")
    if tokenizer.pad_token is None:
        tokenizer.pad_token = tokenizer.eos_token
    model = _load_model(job)

    words = single_token_words(tokenizer)
    mapping = word_token_ids(tokenizer, words)
    words = sorted(mapping)
    word_ids = torch.tensor([mapping[w] for w in words], dtype=torch.long, device=job.device)
    k = min(job.topk, len(words))
    log.info("%s: scoring %d words, emitting top %d", job.agent_name, len(words), k)

    tasks = load_probe_tasks(job.probes)
    partial = out_path.with_name(out_path.name + ".partial")
    done = _read_done(partial)
    todo = [t for t in tasks if (t[0], t[1]) not in done]
    if done:
        log.info("resuming: %d rows present, %d to go", len(done), len(todo))

    agent = job.agent_name
    with open(partial, "a", encoding="utf-8") as fh:
        for start in range(0, len(todo), job.batch_size):
            batch = todo[start:start + job.batch_size]
            probs = _score_batch(model, tokenizer, [s for (_, _, s) in batch], job.kind, job.device)
            for (pid, variant, _), row_probs in zip(batch, probs):
                rec = {"probe": pid, "agent": agent, "variant": variant,
                       "topk": top_words(row_probs, words, word_ids, k)}
                fh.write(json.dumps(rec) + "\n")
            fh.flush()
            os.fsync(fh.fileno())
    os.replace(partial, out_path)
    return out_path
