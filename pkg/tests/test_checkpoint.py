import json

import numpy as np
import pytest

from hashtaggen.checkpoint import (
    MODEL_KIND_MASKEDLM,
    MODEL_KIND_SEQ2SEQ,
    CheckpointError,
    load_checkpoint,
    save_checkpoint,
)
from hashtaggen.corpus import MASK, SEP, SPECIAL_TOKENS, Vocabulary
from hashtaggen.maskedlm import MaskedLMModel, TransformerConfig
from hashtaggen.seq2seq import Seq2SeqConfig, Seq2SeqModel


def small_vocab(n=12):
    words = [f"w{i}" for i in range(n - 6)]
    return Vocabulary(SPECIAL_TOKENS + words)


class TestRoundTripSeq2Seq:
    def test_bitwise_params_and_identical_decode(self, tmp_path):
        cfg = Seq2SeqConfig(vocab_size=12, embed_dim=5, encoder_layers=2,
                            encoder_cells=4, decoder_layers=2, decoder_cells=6,
                            max_source_len=7, max_target_len=6, attention_dim=3)
        model = Seq2SeqModel(cfg, seed=11)
        vocab = small_vocab()
        path = tmp_path / "s2s.json"
        save_checkpoint(model, vocab, path)

        loaded_model, loaded_vocab, kind = load_checkpoint(path)
        assert kind == MODEL_KIND_SEQ2SEQ
        assert loaded_vocab.tokens == vocab.tokens
        for name, p in model.params.items():
            q = loaded_model.params[name]
            assert p.value.tobytes() == q.value.tobytes()
        src = [6, 7, 8, 9]
        assert loaded_model.greedy_decode(src) == model.greedy_decode(src)

    def test_save_is_deterministic(self, tmp_path):
        cfg = Seq2SeqConfig(vocab_size=12, embed_dim=4, encoder_layers=1,
                            encoder_cells=3, decoder_layers=1, decoder_cells=4,
                            max_source_len=5, max_target_len=4, attention_dim=2)
        model = Seq2SeqModel(cfg, seed=0)
        vocab = small_vocab()
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        save_checkpoint(model, vocab, a)
        save_checkpoint(model, vocab, b)
        assert a.read_bytes() == b.read_bytes()


class TestRoundTripMaskedLM:
    def test_bitwise_params_and_identical_logits(self, tmp_path):
        cfg = TransformerConfig(vocab_size=12, num_layers=2, hidden_size=8,
                                num_heads=2, ffn_dim=16, max_len=16,
                                dropout_rate=0.1)
        model = MaskedLMModel(cfg, seed=5)
        vocab = small_vocab()
        path = tmp_path / "mlm.json"
        save_checkpoint(model, vocab, path)

        loaded_model, loaded_vocab, kind = load_checkpoint(path)
        assert kind == MODEL_KIND_MASKEDLM
        for name, p in model.params.items():
            assert p.value.tobytes() == loaded_model.params[name].value.tobytes()
        ctx = [7, 8, SEP, 9, MASK]
        np.testing.assert_array_equal(
            model.forward_mask_logits(ctx, 4),
            loaded_model.forward_mask_logits(ctx, 4),
        )
        assert loaded_model.config == cfg


class TestFormat:
    def test_json_shape(self, tmp_path):
        cfg = TransformerConfig(vocab_size=12, num_layers=1, hidden_size=4,
                                num_heads=2, ffn_dim=8, max_len=8)
        path = tmp_path / "c.json"
        save_checkpoint(MaskedLMModel(cfg, seed=0), small_vocab(), path)
        blob = json.loads(path.read_text())
        assert blob["format_version"] == 1
        assert blob["model_kind"] == MODEL_KIND_MASKEDLM
        assert set(blob) >= {"config", "vocab", "params"}
        for entry in blob["params"].values():
            assert list(np.asarray(entry["data"], dtype=np.float64).reshape(
                entry["shape"]).shape) == entry["shape"]

    def test_missing_file(self, tmp_path):
        with pytest.raises(CheckpointError):
            load_checkpoint(tmp_path / "nope.json")

    def test_corrupt_file(self, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text("{]")
        with pytest.raises(CheckpointError):
            load_checkpoint(p)

    def test_unknown_kind(self, tmp_path):
        cfg = TransformerConfig(vocab_size=12, num_layers=1, hidden_size=4,
                                num_heads=2, ffn_dim=8, max_len=8)
        p = tmp_path / "c.json"
        save_checkpoint(MaskedLMModel(cfg, seed=0), small_vocab(), p)
        blob = json.loads(p.read_text())
        blob["model_kind"] = "rnn_transducer"
        p.write_text(json.dumps(blob))
        with pytest.raises(CheckpointError):
            load_checkpoint(p)
