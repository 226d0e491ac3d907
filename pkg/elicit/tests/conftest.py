"""Builds tiny masked and causal checkpoints for the tests.

No hub access is assumed: tokenizers are constructed offline (WordPiece for
the masked model, byte-level BPE for the causal one) and 2-layer models are
briefly trained on a small corpus of relation sentences, so slot predictions
reflect genuinely learned statistics. Published small checkpoints can be
substituted by pointing the same fixtures at local paths.
"""

from __future__ import annotations

import pytest
import torch
from tokenizers import Tokenizer, decoders, models, pre_tokenizers, processors, trainers
from transformers import (
    BertConfig,
    BertForMaskedLM,
    GPT2Config,
    GPT2LMHeadModel,
    PreTrainedTokenizerFast,
)

PAIRS = [
    ("hammer", "tool"), ("saw", "tool"), ("robin", "bird"), ("sparrow", "bird"),
    ("wall", "building"), ("apple", "fruit"), ("pear", "fruit"), ("dog", "animal"),
    ("cat", "animal"), ("chair", "furniture"), ("oak", "tree"),
]

TEMPLATES = [
    "a {w} is a {v}",
    "a {w} is a kind of a {v}",
    "a {w} is a type of a {v}",
]


def corpus_lines() -> list[str]:
    return [t.format(w=w, v=v) for w, v in PAIRS for t in TEMPLATES]


def _special_vocab_words() -> list[str]:
    words = sorted({w for line in corpus_lines() for w in line.split()})
    return words + ["sun", "moon", "water", "x9z"]  # extras beyond the corpus


@pytest.fixture(scope="session")
def tiny_mlm(tmp_path_factory) -> str:
    torch.manual_seed(0)
    out = tmp_path_factory.mktemp("tiny-mlm")
    specials = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"]
    vocab = {tok: i for i, tok in enumerate(specials + _special_vocab_words())}
    wp = Tokenizer(models.WordPiece(vocab=vocab, unk_token="[UNK]"))
    wp.pre_tokenizer = pre_tokenizers.BertPreTokenizer()
    wp.post_processor = processors.TemplateProcessing(
        single="[CLS] $A [SEP]",
        pair="[CLS] $A [SEP] $B [SEP]",
        special_tokens=[("[CLS]", vocab["[CLS]"]), ("[SEP]", vocab["[SEP]"])],
    )
    tokenizer = PreTrainedTokenizerFast(
        tokenizer_object=wp, unk_token="[UNK]", pad_token="[PAD]", cls_token="[CLS]",
        sep_token="[SEP]", mask_token="[MASK]", model_max_length=160,
    )
    config = BertConfig(
        vocab_size=len(vocab), hidden_size=64, num_hidden_layers=2, num_attention_heads=2,
        intermediate_size=128, max_position_embeddings=160,
        pad_token_id=vocab["[PAD]"],
    )
    model = BertForMaskedLM(config)

    enc = tokenizer(corpus_lines(), return_tensors="pt", padding=True)
    input_ids, attention = enc["input_ids"], enc["attention_mask"]
    # mask the final content token (the relatum slot) of every sentence
    last = attention.sum(dim=1) - 2
    rows = torch.arange(input_ids.shape[0])
    labels = torch.full_like(input_ids, -100)
    labels[rows, last] = input_ids[rows, last]
    masked = input_ids.clone()
    masked[rows, last] = tokenizer.mask_token_id

    optimizer = torch.optim.Adam(model.parameters(), lr=5e-3)
    model.train()
    for _ in range(150):
        optimizer.zero_grad()
        loss = model(input_ids=masked, attention_mask=attention, labels=labels).loss
        loss.backward()
        optimizer.step()
    model.eval()
    model.save_pretrained(out)
    tokenizer.save_pretrained(out)
    return str(out)


@pytest.fixture(scope="session")
def tiny_clm(tmp_path_factory) -> str:
    torch.manual_seed(1)
    out = tmp_path_factory.mktemp("tiny-clm")
    bpe = Tokenizer(models.BPE(unk_token=None))
    bpe.pre_tokenizer = pre_tokenizers.ByteLevel(add_prefix_space=False)
    bpe.decoder = decoders.ByteLevel()
    trainer = trainers.BpeTrainer(
        vocab_size=400, min_frequency=1, special_tokens=["<|endoftext|>"],
        initial_alphabet=pre_tokenizers.ByteLevel.alphabet(),
    )
    bpe.train_from_iterator(corpus_lines() + ["sun moon water"], trainer)
    tokenizer = PreTrainedTokenizerFast(
        tokenizer_object=bpe, eos_token="<|endoftext|>", pad_token="<|endoftext|>",
        model_max_length=160,
    )
    config = GPT2Config(
        vocab_size=tokenizer.vocab_size, n_positions=160, n_embd=64, n_layer=2, n_head=2,
    )
    model = GPT2LMHeadModel(config)

    enc = tokenizer(corpus_lines(), return_tensors="pt", padding=True)
    labels = enc["input_ids"].clone()
    labels[enc["attention_mask"] == 0] = -100

    optimizer = torch.optim.Adam(model.parameters(), lr=5e-3)
    model.train()
    for _ in range(200):
        optimizer.zero_grad()
        loss = model(input_ids=enc["input_ids"], attention_mask=enc["attention_mask"],
                     labels=labels).loss
        loss.backward()
        optimizer.step()
    model.eval()
    model.save_pretrained(out)
    tokenizer.save_pretrained(out)
    return str(out)
