"""Single-token word vocabulary export.

The evaluation compares humans and models on the same word-level candidate
space, so each model contributes the set of word forms its tokenizer encodes
as exactly one token when the word appears after a space (the position the
probes put the prediction slot in). Subword continuations, non-alphabetic
tokens, and anything that round-trips through the unknown token are dropped;
the result is lowercase-normalized and sorted.
"""

from __future__ import annotations

import logging
from pathlib import Path

log = logging.getLogger(__name__)

#: boundary markers used by byte-level BPE (GPT-style) and SentencePiece
_BOUNDARY_MARKERS = ("Ġ", "▁")
#: continuation prefix used by WordPiece vocabularies
_CONTINUATION = "##"


class ModelUnavailableError(Exception):
    """The model identifier cannot be resolved to a local or remote checkpoint."""


def load_tokenizer(model_id: str):
    from transformers import AutoTokenizer

    try:
        return AutoTokenizer.from_pretrained(model_id)
    except Exception as exc:  # transformers raises a zoo of types here
        raise ModelUnavailableError(f"cannot load tokenizer for {model_id!r}: {exc}") from exc


def single_token_words(tokenizer) -> list[str]:
    """Lowercased word forms that re-tokenize to one token with a word boundary."""
    candidates: set[str] = set()
    for token in tokenizer.get_vocab():
        word = token
        for marker in _BOUNDARY_MARKERS:
            if word.startswith(marker):
                word = word[len(marker):]
        if word.startswith(_CONTINUATION):
            continue
        word = word.lower()
        if word and word.isalpha():
            candidates.add(word)
    unk = tokenizer.unk_token_id
    kept = []
    for word in sorted(candidates):
        ids = tokenizer(" " + word, add_special_tokens=False)["input_ids"]
        if len(ids) == 1 and (unk is None or ids[0] != unk):
            kept.append(word)
    return kept


def word_token_ids(tokenizer, words) -> dict[str, int]:
    """Map each exportable word to its single token id at a word boundary."""
    unk = tokenizer.unk_token_id
    mapping: dict[str, int] = {}
    for word in words:
        ids = tokenizer(" " + word, add_special_tokens=False)["input_ids"]
        if len(ids) == 1 and (unk is None or ids[0] != unk):
            mapping[word] = ids[0]
    return mapping


def export_vocabulary(model_id: str, out_path: str | Path | None = None) -> list[str]:
    """Write (optionally) and return the model's single-token word list."""
    tokenizer = load_tokenizer(model_id)
    words = single_token_words(tokenizer)
    log.info("%s: %d single-token words", model_id, len(words))
    if out_path is not None:
        Path(out_path).write_text("\n".join(words) + "\n", encoding="utf-8")
    return words
