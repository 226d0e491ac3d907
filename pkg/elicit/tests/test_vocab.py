import time

from relprobe_elicit.vocab import export_vocabulary, load_tokenizer, single_token_words, word_token_ids


def test_export_words_retokenize_to_one_token(tiny_mlm, tiny_clm):
    start = time.perf_counter()
    for model_dir in (tiny_mlm, tiny_clm):
        tokenizer = load_tokenizer(model_dir)
        words = single_token_words(tokenizer)
        assert words, model_dir
        assert words == sorted(words)
        assert all(w == w.lower() and w.isalpha() for w in words)
        unk = tokenizer.unk_token_id
        for w in words:
            ids = tokenizer(" " + w, add_special_tokens=False)["input_ids"]
            assert len(ids) == 1
            assert unk is None or ids[0] != unk
    assert time.perf_counter() - start < 60
    print(f"[PASS] vocabulary-export: {time.perf_counter() - start:.2f}s (budget 60s)")


def test_vocab_excludes_specials_and_subwords(tiny_mlm):
    tokenizer = load_tokenizer(tiny_mlm)
    words = single_token_words(tokenizer)
    for special in ("[CLS]", "[SEP]", "[MASK]", "[PAD]", "[UNK]"):
        assert special not in words and special.lower() not in words
    assert "x9z" not in words  # non-alphabetic


def test_export_writes_file(tiny_clm, tmp_path):
    out = tmp_path / "vocab.txt"
    words = export_vocabulary(tiny_clm, out)
    assert out.read_text(encoding="utf-8").splitlines() == words


def test_intersection_symmetric_and_deterministic(tiny_mlm, tiny_clm):
    a = set(export_vocabulary(tiny_mlm))
    b = set(export_vocabulary(tiny_clm))
    assert a & b == b & a
    assert sorted(a & b) == sorted(set(export_vocabulary(tiny_mlm)) & set(export_vocabulary(tiny_clm)))
    assert "tool" in a & b and "bird" in a & b


def test_word_token_ids_cover_exports(tiny_mlm):
    tokenizer = load_tokenizer(tiny_mlm)
    words = single_token_words(tokenizer)
    mapping = word_token_ids(tokenizer, words)
    assert sorted(mapping) == words
    assert len(set(mapping.values())) == len(mapping)


def test_unavailable_model_raises(tmp_path):
    import pytest

    from relprobe_elicit.vocab import ModelUnavailableError

    with pytest.raises(ModelUnavailableError):
        export_vocabulary(str(tmp_path / "nope"))
