"""Declarative run configuration.

One JSON file drives the whole pipeline; every path is resolved relative to
the config file's directory so a run directory can be shipped as a unit.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path


class ConfigError(Exception):
    """Malformed configuration."""


class MissingInputError(ConfigError):
    """A referenced input file does not exist."""


@dataclass(frozen=True)
class TupleSource:
    path: Path
    format: str


@dataclass(frozen=True)
class ModelSource:
    agent: str
    path: Path
    family: str | None = None
    params: int | None = None
    pretraining: str | None = None  # "mlm" | "clm"


@dataclass
class RunConfig:
    tuples: list[TupleSource]
    lexicon_graph: Path
    vocab: list[Path]
    output_dir: Path
    templates: Path | None = None
    pronunciation: Path | None = None
    frequency: Path | None = None
    human_responses: Path | None = None
    bogus_key: Path | None = None
    model_responses: list[ModelSource] = field(default_factory=list)
    determiner_alpha: float = 0.5
    symmetry_k: list[int] = field(default_factory=lambda: [1, 5, 10])
    significance_alpha: float = 0.05
    model_topk: int = 100
    workers: int = 1
    source_path: Path | None = None

    def validate(self) -> None:
        if not 0 <= self.determiner_alpha <= 1:
            raise ConfigError(f"determiner_alpha must lie in [0, 1], got {self.determiner_alpha}")
        if not 0 < self.significance_alpha < 1:
            raise ConfigError(f"significance_alpha must lie in (0, 1), got {self.significance_alpha}")
        if not self.symmetry_k or any(k < 1 for k in self.symmetry_k):
            raise ConfigError(f"symmetry_k values must be positive, got {self.symmetry_k}")
        if self.model_topk < 1:
            raise ConfigError("model_topk must be positive")
        if not self.tuples:
            raise ConfigError("at least one tuple source is required")
        if not self.vocab:
            raise ConfigError("at least one vocabulary file is required")
        for p in self.input_files():
            if not p.is_file():
                raise MissingInputError(f"missing input file: {p}")
        names = [m.agent for m in self.model_responses]
        if len(names) != len(set(names)):
            raise ConfigError(f"duplicate agent names: {sorted(names)}")

    def input_files(self) -> list[Path]:
        files = [src.path for src in self.tuples]
        files.append(self.lexicon_graph)
        files.extend(self.vocab)
        for opt in (self.templates, self.pronunciation, self.frequency,
                    self.human_responses, self.bogus_key):
            if opt is not None:
                files.append(opt)
        files.extend(m.path for m in self.model_responses)
        return files

    def config_hash(self) -> str:
        payload = {
            "tuples": [[str(s.path), s.format] for s in self.tuples],
            "lexicon_graph": str(self.lexicon_graph),
            "vocab": [str(p) for p in self.vocab],
            "templates": str(self.templates) if self.templates else None,
            "pronunciation": str(self.pronunciation) if self.pronunciation else None,
            "frequency": str(self.frequency) if self.frequency else None,
            "human_responses": str(self.human_responses) if self.human_responses else None,
            "bogus_key": str(self.bogus_key) if self.bogus_key else None,
            "model_responses": [
                [m.agent, str(m.path), m.family, m.params, m.pretraining]
                for m in self.model_responses
            ],
            "determiner_alpha": self.determiner_alpha,
            "symmetry_k": self.symmetry_k,
            "significance_alpha": self.significance_alpha,
            "model_topk": self.model_topk,
        }
        blob = json.dumps(payload, sort_keys=True).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise MissingInputError(f"config file not found: {path}")
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc.msg})") from exc
    base = path.parent

    def resolve(p: str | None) -> Path | None:
        return None if p is None else (base / p).resolve()

    try:
        cfg = RunConfig(
            tuples=[TupleSource(resolve(s["path"]), s["format"]) for s in raw["tuples"]],
            lexicon_graph=resolve(raw["lexicon_graph"]),
            vocab=[resolve(p) for p in raw["vocab"]],
            output_dir=resolve(raw["output_dir"]),
            templates=resolve(raw.get("templates")),
            pronunciation=resolve(raw.get("pronunciation")),
            frequency=resolve(raw.get("frequency")),
            human_responses=resolve(raw.get("human_responses")),
            bogus_key=resolve(raw.get("bogus_key")),
            model_responses=[
                ModelSource(
                    agent=m["agent"],
                    path=resolve(m["path"]),
                    family=m.get("family"),
                    params=m.get("params"),
                    pretraining=m.get("pretraining"),
                )
                for m in raw.get("model_responses", [])
            ],
            determiner_alpha=float(raw.get("determiner_alpha", 0.5)),
            symmetry_k=[int(k) for k in raw.get("symmetry_k", [1, 5, 10])],
            significance_alpha=float(raw.get("significance_alpha", 0.05)),
            model_topk=int(raw.get("model_topk", 100)),
            workers=int(raw.get("workers", 1)),
            source_path=path.resolve(),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: bad config structure ({exc})") from exc
    if cfg.human_responses is not None and cfg.bogus_key is None:
        raise ConfigError("human_responses requires a bogus_key file")
    return cfg
