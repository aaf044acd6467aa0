"""Acceptance suite: one test per release criterion, one PASS line each.

Run with `pytest tests/test_acceptance.py -v -s` to see the lines.
"""

import json

import numpy as np
import pytest

from hashtaggen import corpus, metrics
from hashtaggen.checkpoint import load_checkpoint, save_checkpoint
from hashtaggen.cli import SAMPLE_CSV, main as cli_main
from hashtaggen.corpus import END, MASK, PAD, SEP, START
from hashtaggen.maskedlm import MaskedLMModel, TransformerConfig, generate_autoregressive
from hashtaggen.nn import Adam, Parameter, gradient_check, lstm_cell, lstm_cell_backward
from hashtaggen.seq2seq import Seq2SeqConfig, Seq2SeqModel

from oracles import bleu_oracle, meteor_oracle, nist_oracle


def _passed(name):
    print(f"\n[PRIMARY] {name}: PASS")


class TestAcceptance:
    def test_preprocessing_golden(self, worked_record, sample_vocab):
        v = sample_vocab
        text_toks = "fica super lindo ele aplicado , veio conforme o anunciado !".split()
        title_toks = "adorei o produto !".split()
        steps = corpus.expand_masked_examples(worked_record, v)
        assert len(steps) == 5
        for k, step in enumerate(steps):
            want_ctx = (
                [v.token_id(t) for t in text_toks]
                + [SEP]
                + [v.token_id(t) for t in title_toks[:k]]
                + [MASK]
            )
            assert step.context_ids[: len(want_ctx)] == want_ctx
            assert all(i == PAD for i in step.context_ids[len(want_ctx):])
            assert step.target_id == (v.token_id(title_toks[k]) if k < 4 else SEP)
        rec = corpus.ReviewRecord(
            id="s",
            title_raw="Produto muito bom",
            text_raw="Excelente qualidade, chegou dentro do prazo, recomendo",
        )
        ex = corpus.make_seq2seq_example(rec, v)
        want = [START] + [v.token_id(t) for t in ["produto", "muito", "bom"]] + [END]
        assert [i for i in ex.target_ids if i != PAD] == want
        _passed("preprocessing golden (masked worked example + seq2seq sample)")

    def test_statistics_consistency(self):
        pairs = [
            (2.632, 1.647, 62.57),
            (2.964, 1.866, 62.96),
            (2.117, 1.096, 51.77),
            (1.784, 0.525, 29.43),
        ]
        for mean, sd, want in pairs:
            assert metrics.cv_percent(mean, sd) == pytest.approx(want, abs=0.02)
        _passed("statistics consistency (published %CV table within ±0.02)")

    def test_gradient_suite(self):
        # LSTM cell
        rng = np.random.default_rng(0)
        d_in, d_h, B = 3, 4, 2
        params = [
            Parameter("W", rng.normal(scale=0.5, size=(d_in, 4 * d_h))),
            Parameter("U", rng.normal(scale=0.5, size=(d_h, 4 * d_h))),
            Parameter("b", rng.normal(scale=0.5, size=4 * d_h)),
        ]
        x = rng.normal(size=(B, d_in))
        h0, c0 = rng.normal(size=(B, d_h)), rng.normal(size=(B, d_h))
        wh, wc = rng.normal(size=(B, d_h)), rng.normal(size=(B, d_h))

        def cell_loss():
            h, c, _ = lstm_cell(x, h0, c0, *[p.value for p in params])
            return float((wh * h).sum() + (wc * c).sum())

        _, _, cache = lstm_cell(x, h0, c0, *[p.value for p in params])
        _, _, _, dW, dU, db = lstm_cell_backward(wh, wc, cache)
        for p, g in zip(params, (dW, dU, db)):
            p.grad[...] = g
        assert gradient_check(cell_loss, params) < 1e-4

        # full seq2seq step, with attention parameters checked on their own
        cfg = Seq2SeqConfig(vocab_size=12, embed_dim=5, encoder_layers=2,
                            encoder_cells=4, decoder_layers=2, decoder_cells=6,
                            max_source_len=7, max_target_len=6, attention_dim=3)
        src = np.array([[7, 8, 9, 10, 0, 0, 0], [6, 7, 11, 9, 10, 8, 0]])
        tgt = np.array([[START, 7, 8, END, 0, 0], [START, 9, 10, 11, 8, END]])
        m = Seq2SeqModel(cfg, seed=1)
        opt = Adam(m.parameters(), lr=1e-2)
        for _ in range(30):  # warm up so no gradient sits in the FD noise floor
            opt.zero_grad()
            m.forward_batch(src, tgt, backward=True)
            opt.step()
        m.zero_grad()
        m.forward_batch(src, tgt, backward=True)
        attn = [m.params[n] for n in ("attn_W", "attn_U", "attn_v")]
        s2s_loss = lambda: m.forward_batch(src, tgt)[0]
        assert gradient_check(s2s_loss, attn, max_coords=40, seed=2) < 1e-4
        assert gradient_check(s2s_loss, m.parameters(), max_coords=25, seed=3) < 1e-4

        # transformer block and full masked-LM step
        ctx = np.array([[7, 8, 4, 9, 5, 0, 0], [6, 7, 11, 4, 10, 9, 5]])
        pos, tgt_m = np.array([4, 6]), np.array([9, 3])
        for layers in (1, 2):
            t = MaskedLMModel(TransformerConfig(
                vocab_size=12, num_layers=layers, hidden_size=8, num_heads=2,
                ffn_dim=16, max_len=16, dropout_rate=0.0), seed=4)
            t.zero_grad()
            t.loss_batch(ctx, pos, tgt_m, backward=True)
            err = gradient_check(lambda: t.loss_batch(ctx, pos, tgt_m)[0],
                                 t.parameters(), max_coords=25, seed=5)
            assert err < 1e-4
        _passed("gradient suite (all components < 1e-4 relative error)")

    def test_overfit_oracle(self, toy_corpus, toy_vocab):
        titles = {
            r.id: corpus.encode(corpus.clean_text(r.title_raw), toy_vocab, 14)
            for r in toy_corpus
        }
        # bilstm
        s2s_exs = [corpus.make_seq2seq_example(r, toy_vocab) for r in toy_corpus]
        cfg = Seq2SeqConfig(vocab_size=len(toy_vocab), embed_dim=32,
                            encoder_layers=1, encoder_cells=16, decoder_layers=1,
                            decoder_cells=32, attention_dim=16)
        m = Seq2SeqModel(cfg, seed=0)
        opt = Adam(m.parameters(), lr=5e-3)
        for epoch in range(500):
            stats = m.train_epoch(s2s_exs, opt, batch_size=32, seed=epoch)
            if stats.accuracy >= 0.999:
                break
        assert stats.accuracy >= 0.95
        exact = sum(
            m.greedy_decode(corpus.encode(corpus.clean_text(r.text_raw),
                                          toy_vocab, cfg.max_source_len))
            == titles[r.id]
            for r in toy_corpus
        )
        assert exact >= 0.90 * len(toy_corpus)

        # masked LM
        mlm_exs = []
        for r in toy_corpus:
            mlm_exs.extend(corpus.expand_masked_examples(r, toy_vocab))
        tcfg = TransformerConfig(vocab_size=len(toy_vocab), num_layers=2,
                                 hidden_size=32, num_heads=2, ffn_dim=64,
                                 max_len=72, dropout_rate=0.0)
        t = MaskedLMModel(tcfg, seed=0)
        topt = Adam(t.parameters(), lr=2e-3)
        for epoch in range(500):
            stats = t.train_epoch(mlm_exs, topt, batch_size=32, seed=epoch)
            if stats.accuracy >= 0.999:
                break
        assert stats.accuracy >= 0.95
        exact = sum(
            generate_autoregressive(
                t, corpus.encode(corpus.clean_text(r.text_raw), toy_vocab, 70))
            == titles[r.id]
            for r in toy_corpus
        )
        assert exact >= 0.90 * len(toy_corpus)
        _passed("overfit oracle (≥95% accuracy, ≥90% exact decodes, both models)")

    def test_metric_oracles(self):
        cases = [
            ("bom", "bom"),
            ("a b c", "a b c"),
            ("b a", "a b"),
            ("produto muito bom", "produto bom"),
            ("muito bom mesmo", "muito bom mesmo"),
            ("a b c d", "d c b a"),
            ("entrega rapida", "entrega muito rapida"),
            ("otimo", "pessimo"),
            ("recomendo a todos", "recomendo"),
            ("chegou antes do prazo", "chegou no prazo certo"),
        ]
        refs = [r.split() for _, r in cases]
        for hyp_s, ref_s in cases:
            hyp, ref = hyp_s.split(), ref_s.split()
            table = metrics.NistInfoTable(refs)
            assert metrics.bleu(hyp, ref) == pytest.approx(
                bleu_oracle(hyp, ref), abs=1e-9)
            assert metrics.nist(hyp, ref, table) == pytest.approx(
                nist_oracle(hyp, ref, refs), abs=1e-9)
            assert metrics.meteor(hyp, ref) == pytest.approx(
                meteor_oracle(hyp, ref), abs=1e-9)
            if hyp == ref:
                assert metrics.bleu(hyp, ref) == pytest.approx(1.0, abs=1e-9)
        assert metrics.meteor("a b c".split(), "a b c".split()) == pytest.approx(
            53 / 54, abs=1e-9)
        _passed("metric oracles (10-case fixture vs brute force, 1e-9)")

    def test_decoding_invariants(self):
        rng = np.random.default_rng(42)

        class RandomModel:
            def forward_mask_logits(self, context_ids, mask_position):
                assert context_ids[mask_position] == MASK
                logits = np.zeros(40)
                tok = SEP if rng.random() < 0.15 else int(rng.integers(6, 40))
                logits[tok] = 1.0
                return logits

        model = RandomModel()
        for _ in range(1000):
            review = list(rng.integers(6, 40, size=int(rng.integers(1, 80))))
            trace = []
            out = generate_autoregressive(model, review, trace=trace)
            # realized sequence: truncated review + SEP + generated title
            total = len(trace[0][0]) - 1 + len(out)
            assert total <= 72
            for k, (ctx, pred) in enumerate(trace):
                assert ctx.count(MASK) == 1 and ctx[-1] == MASK
                assert len(ctx) <= 72
                if k > 0:
                    prev_ctx, prev_pred = trace[k - 1]
                    assert ctx == prev_ctx[:-1] + [prev_pred, MASK]

        cfg = Seq2SeqConfig(vocab_size=12, embed_dim=5, encoder_layers=1,
                            encoder_cells=4, decoder_layers=1, decoder_cells=6,
                            max_source_len=10, max_target_len=6, attention_dim=3)
        m = Seq2SeqModel(cfg, seed=0)
        for _ in range(1000):
            n = int(rng.integers(1, 8))
            src = np.concatenate([rng.integers(6, 12, size=n),
                                  np.zeros(10 - n, dtype=int)])[None, :]
            ann, mask, _ = m.encode(src)
            q = rng.normal(size=(1, cfg.decoder_cells))
            _, w, _ = m._attend(q, ann, ann @ m.params["attn_U"].value, mask)
            assert np.all(w >= -1e-9)
            assert abs(w.sum() - 1.0) < 1e-9
            assert np.all(w[0, n:] == 0.0)
        _passed("decoding invariants (1000 generation traces + 1000 attention calls)")

    def test_pipeline_composition(self, tmp_path):
        work = tmp_path / "pipeline"
        assert cli_main(["preprocess", "--input", str(SAMPLE_CSV),
                         "--outdir", str(work), "--seed", "3"]) == 0
        ckpt = work / "model.json"
        assert cli_main(["train", "--data", str(work), "--model", "bilstm",
                         "--out", str(ckpt), "--preset", "tiny",
                         "--epochs", "2", "--batch", "32"]) == 0
        preds = work / "preds.jsonl"
        assert cli_main(["predict", "--checkpoint", str(ckpt), "--data", str(work),
                         "--split", "test", "--out", str(preds)]) == 0
        report_path = work / "report.json"
        assert cli_main(["evaluate", "--preds", str(preds),
                         "--report", str(report_path)]) == 0
        report = json.loads(report_path.read_text())
        assert 0.0 <= report["metrics"]["bleu"]["mean"] <= 1.0
        assert 0.0 <= report["metrics"]["meteor"]["mean"] <= 1.0
        assert report["metrics"]["nist"]["mean"] >= 0.0
        for side in ("original", "predicted"):
            block = report["lengths"][side]
            assert set(block) >= {"mean", "sd", "cv_percent"}
        assert report_path.with_suffix(".png").exists()
        _passed("pipeline composition (preprocess→train→predict→evaluate, 200 rows)")

    def test_checkpoint_round_trip(self, tmp_path, toy_vocab):
        # bilstm
        cfg = Seq2SeqConfig(vocab_size=len(toy_vocab), embed_dim=8,
                            encoder_layers=1, encoder_cells=6, decoder_layers=1,
                            decoder_cells=8, max_source_len=12, max_target_len=6,
                            attention_dim=4)
        m = Seq2SeqModel(cfg, seed=9)
        path = tmp_path / "s2s.json"
        save_checkpoint(m, toy_vocab, path)
        lm, _, _ = load_checkpoint(path)
        srcs = [[6, 7, 8], [9, 10], [11, 12, 13, 14]]
        assert [lm.greedy_decode(s) for s in srcs] == [m.greedy_decode(s) for s in srcs]
        for name, p in m.params.items():
            assert p.value.tobytes() == lm.params[name].value.tobytes()

        # masked LM
        tcfg = TransformerConfig(vocab_size=len(toy_vocab), num_layers=2,
                                 hidden_size=8, num_heads=2, ffn_dim=16, max_len=24)
        t = MaskedLMModel(tcfg, seed=9)
        path2 = tmp_path / "mlm.json"
        save_checkpoint(t, toy_vocab, path2)
        lt, _, _ = load_checkpoint(path2)
        review = [6, 7, 8, 9]
        assert generate_autoregressive(lt, review, max_total_len=20) == \
            generate_autoregressive(t, review, max_total_len=20)
        for name, p in t.params.items():
            assert p.value.tobytes() == lt.params[name].value.tobytes()
        _passed("checkpoint round-trip (byte-identical parameters and predictions)")
