"""BiLSTM encoder-decoder with additive attention.

Teacher-forced training with sparse categorical cross entropy over non-PAD
target positions, greedy decoding at inference. Forward and backward passes
are hand-written over numpy; the backward pass is exercised by the
finite-difference suite in the tests.
"""

from __future__ import annotations

from dataclasses import dataclass, asdict

import numpy as np

from .corpus import PAD, START, END, Seq2SeqExample
from .nn import (
    Adam,
    NumericsError,
    Parameter,
    glorot_uniform,
    lstm_cell,
    lstm_cell_backward,
    softmax,
)

_NEG_INF = -1e30


@dataclass
class Seq2SeqConfig:
    vocab_size: int
    embed_dim: int = 64
    encoder_layers: int = 3
    encoder_cells: int = 32
    decoder_layers: int = 2
    decoder_cells: int = 64
    max_source_len: int = 60
    max_target_len: int = 16
    attention_dim: int = 32

    def __post_init__(self):
        for name, v in asdict(self).items():
            if v <= 0:
                raise ValueError(f"{name} must be positive, got {v}")


@dataclass
class EpochStats:
    loss: float
    accuracy: float


def teacher_forcing_shift(tgt: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Decoder inputs are the one-step-lagged gold sequence.

    For [START, y1..yn, END, PAD...] the inputs are tgt[:, :-1] and the
    prediction targets tgt[:, 1:].
    """
    return tgt[:, :-1], tgt[:, 1:]


class Seq2SeqModel:
    def __init__(self, config: Seq2SeqConfig, seed: int = 0):
        self.config = config
        self.params: dict[str, Parameter] = {}
        self._init_params(np.random.default_rng(seed))

    # -- parameters ---------------------------------------------------------

    def _add(self, name: str, value: np.ndarray) -> None:
        self.params[name] = Parameter(name, value)

    def _init_params(self, rng: np.random.Generator) -> None:
        c = self.config
        H, Hd, E, A = c.encoder_cells, c.decoder_cells, c.embed_dim, c.attention_dim
        self._add("emb_src", glorot_uniform(rng, (c.vocab_size, E)))
        self._add("emb_tgt", glorot_uniform(rng, (c.vocab_size, E)))
        for l in range(c.encoder_layers):
            d_in = E if l == 0 else 2 * H
            for d in ("f", "b"):
                self._add(f"enc{l}{d}_W", glorot_uniform(rng, (d_in, 4 * H)))
                self._add(f"enc{l}{d}_U", glorot_uniform(rng, (H, 4 * H)))
                b = np.zeros(4 * H)
                b[H : 2 * H] = 1.0  # forget-gate bias
                self._add(f"enc{l}{d}_b", b)
        for l in range(c.decoder_layers):
            self._add(f"bridge{l}_W", glorot_uniform(rng, (2 * H, Hd)))
            self._add(f"bridge{l}_b", np.zeros(Hd))
            d_in = (E + 2 * H) if l == 0 else Hd
            self._add(f"dec{l}_W", glorot_uniform(rng, (d_in, 4 * Hd)))
            self._add(f"dec{l}_U", glorot_uniform(rng, (Hd, 4 * Hd)))
            b = np.zeros(4 * Hd)
            b[Hd : 2 * Hd] = 1.0
            self._add(f"dec{l}_b", b)
        self._add("attn_W", glorot_uniform(rng, (Hd, A)))
        self._add("attn_U", glorot_uniform(rng, (2 * H, A)))
        self._add("attn_v", glorot_uniform(rng, (A, 1)).reshape(A))
        self._add("out_W", glorot_uniform(rng, (Hd + 2 * H, c.vocab_size)))
        self._add("out_b", np.zeros(c.vocab_size))

    def parameters(self) -> list[Parameter]:
        return list(self.params.values())

    def zero_grad(self) -> None:
        for p in self.params.values():
            p.zero_grad()

    def _v(self, name: str) -> np.ndarray:
        return self.params[name].value

    def _g(self, name: str) -> np.ndarray:
        return self.params[name].grad

    # -- encoder ------------------------------------------------------------

    def encode(self, src: np.ndarray) -> tuple[np.ndarray, np.ndarray, dict]:
        """Bidirectional LSTM stack over (B, S) ids.

        Returns (annotations (B, S, 2H), pad_mask (B, S), cache). PAD
        positions carry the previous state forward so the final state per
        direction is taken at the last real token.
        """
        c = self.config
        if np.any(src >= c.vocab_size) or np.any(src < 0):
            raise NumericsError("source id out of vocabulary range")
        B, S = src.shape
        H = c.encoder_cells
        mask = (src != PAD).astype(np.float64)
        X = self._v("emb_src")[src]
        cache: dict = {"src": src, "mask": mask, "layer_inputs": [], "cells": []}
        for l in range(c.encoder_layers):
            cache["layer_inputs"].append(X)
            outs = {}
            cells = {}
            for d, order in (("f", range(S)), ("b", range(S - 1, -1, -1))):
                W, U, b = (self._v(f"enc{l}{d}_{k}") for k in ("W", "U", "b"))
                h = np.zeros((B, H))
                cst = np.zeros((B, H))
                Hs = np.zeros((B, S, H))
                ccs = {}
                for t in order:
                    h_new, c_new, cc = lstm_cell(X[:, t], h, cst, W, U, b)
                    m = mask[:, t, None]
                    h = m * h_new + (1 - m) * h
                    cst = m * c_new + (1 - m) * cst
                    Hs[:, t] = h
                    ccs[t] = cc
                outs[d] = Hs
                cells[d] = ccs
            cache["cells"].append(cells)
            X = np.concatenate([outs["f"], outs["b"]], axis=2)
        lengths = mask.sum(axis=1).astype(int)
        cache["last_idx"] = lengths - 1
        return X, mask, cache

    def _encoder_backward(self, d_ann: np.ndarray, cache: dict) -> None:
        c = self.config
        H = c.encoder_cells
        mask = cache["mask"]
        B, S = mask.shape
        dX = d_ann
        for l in range(c.encoder_layers - 1, -1, -1):
            X_in = cache["layer_inputs"][l]
            dX_in = np.zeros_like(X_in)
            for d, order in (("f", range(S - 1, -1, -1)), ("b", range(S))):
                dHs = dX[:, :, :H] if d == "f" else dX[:, :, H:]
                ccs = cache["cells"][l][d]
                dh_rec = np.zeros((B, H))
                dc_rec = np.zeros((B, H))
                for t in order:
                    m = mask[:, t, None]
                    dh_tot = dHs[:, t] + dh_rec
                    dc_tot = dc_rec
                    dx, dh_prev, dc_prev, dW, dU, db = lstm_cell_backward(
                        m * dh_tot, m * dc_tot, ccs[t]
                    )
                    self._g(f"enc{l}{d}_W")[...] += dW
                    self._g(f"enc{l}{d}_U")[...] += dU
                    self._g(f"enc{l}{d}_b")[...] += db
                    dh_rec = dh_prev + (1 - m) * dh_tot
                    dc_rec = dc_prev + (1 - m) * dc_tot
                    dX_in[:, t] += dx
            dX = dX_in
        src = cache["src"]
        demb = self._g("emb_src")
        np.add.at(demb, src.reshape(-1), dX.reshape(-1, dX.shape[-1]))

    # -- attention ----------------------------------------------------------

    def _attend(
        self,
        query: np.ndarray,
        annotations: np.ndarray,
        ann_proj: np.ndarray,
        pad_mask: np.ndarray,
    ) -> tuple[np.ndarray, np.ndarray, dict]:
        """Masked additive attention; PAD positions get exactly zero weight."""
        if not np.any(pad_mask):
            raise NumericsError("attention over fully masked input")
        score_pre = np.tanh((query @ self._v("attn_W"))[:, None, :] + ann_proj)
        e = score_pre @ self._v("attn_v")
        e = np.where(pad_mask > 0, e, _NEG_INF)
        alpha = softmax(e, axis=1)
        ctx = np.einsum("bs,bsh->bh", alpha, annotations)
        cache = {"query": query, "score_pre": score_pre, "alpha": alpha}
        return ctx, alpha, cache

    def _attend_backward(
        self,
        dctx: np.ndarray,
        annotations: np.ndarray,
        cache: dict,
    ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Returns (dquery, d_annotations_direct, d_ann_proj)."""
        alpha, score_pre, query = cache["alpha"], cache["score_pre"], cache["query"]
        dalpha = np.einsum("bh,bsh->bs", dctx, annotations)
        d_ann = alpha[:, :, None] * dctx[:, None, :]
        de = alpha * (dalpha - np.sum(alpha * dalpha, axis=1, keepdims=True))
        self._g("attn_v")[...] += np.einsum("bs,bsa->a", de, score_pre)
        dz = (de[:, :, None] * self._v("attn_v")) * (1.0 - score_pre * score_pre)
        dq_proj = dz.sum(axis=1)
        self._g("attn_W")[...] += query.T @ dq_proj
        dquery = dq_proj @ self._v("attn_W").T
        return dquery, d_ann, dz

    # -- teacher-forced forward / backward ----------------------------------

    def forward_batch(
        self, src: np.ndarray, tgt: np.ndarray, backward: bool = False
    ) -> tuple[float, float]:
        """Mean loss and teacher-forced token accuracy over a batch.

        tgt rows are [START, y1..yn, END, PAD...]; decoder input at step t is
        tgt[:, t] and the target is tgt[:, t+1]. With backward=True,
        gradients are accumulated into the parameters.
        """
        c = self.config
        L = c.decoder_layers
        Hd, E, H2 = c.decoder_cells, c.embed_dim, 2 * c.encoder_cells
        B = src.shape[0]
        annotations, pad_mask, enc_cache = self.encode(src)
        last_idx = enc_cache["last_idx"]
        ann_last = annotations[np.arange(B), last_idx]
        ann_proj = annotations @ self._v("attn_U")

        h = []
        cst = []
        bridge_pre = []
        for l in range(L):
            pre = ann_last @ self._v(f"bridge{l}_W") + self._v(f"bridge{l}_b")
            h.append(np.tanh(pre))
            bridge_pre.append(h[-1])
            cst.append(np.zeros((B, Hd)))

        y_in, y_out = teacher_forcing_shift(tgt)
        tmask = (y_out != PAD).astype(np.float64)
        norm = tmask.sum()
        if norm == 0:
            raise NumericsError("batch has no target tokens")
        T = y_in.shape[1]

        steps = []
        total_loss = 0.0
        correct = 0.0
        for t in range(T):
            query = h[L - 1]
            ctx, _, att_cache = self._attend(query, annotations, ann_proj, pad_mask)
            x = np.concatenate([self._v("emb_tgt")[y_in[:, t]], ctx], axis=1)
            cells = []
            inp = x
            for l in range(L):
                W, U, b = (self._v(f"dec{l}_{k}") for k in ("W", "U", "b"))
                h[l], cst[l], cc = lstm_cell(inp, h[l], cst[l], W, U, b)
                cells.append(cc)
                inp = h[l]
            out = np.concatenate([h[L - 1], ctx], axis=1)
            logits = out @ self._v("out_W") + self._v("out_b")
            z = logits - logits.max(axis=1, keepdims=True)
            lse = np.log(np.exp(z).sum(axis=1))
            rows = np.arange(B)
            losses = lse - z[rows, y_out[:, t]]
            total_loss += float((losses * tmask[:, t]).sum())
            correct += float(
                ((np.argmax(logits, axis=1) == y_out[:, t]) * tmask[:, t]).sum()
            )
            if backward:
                dlogits = np.exp(z - lse[:, None])
                dlogits[rows, y_out[:, t]] -= 1.0
                dlogits *= tmask[:, t, None] / norm
                steps.append(
                    {"att": att_cache, "cells": cells, "out": out, "dlogits": dlogits}
                )
        loss = total_loss / norm
        acc = correct / norm
        if not np.isfinite(loss):
            raise NumericsError("non-finite loss")
        if not backward:
            return loss, acc

        # ---- backward ----
        d_ann = np.zeros_like(annotations)
        d_ann_proj = np.zeros_like(ann_proj)
        dh = [np.zeros((B, Hd)) for _ in range(L)]
        dc = [np.zeros((B, Hd)) for _ in range(L)]
        for t in range(T - 1, -1, -1):
            st = steps[t]
            dlogits = st["dlogits"]
            self._g("out_W")[...] += st["out"].T @ dlogits
            self._g("out_b")[...] += dlogits.sum(axis=0)
            dout = dlogits @ self._v("out_W").T
            dh[L - 1] += dout[:, :Hd]
            dctx = dout[:, Hd:].copy()
            dx_down = None
            for l in range(L - 1, -1, -1):
                if dx_down is not None:
                    dh[l] += dx_down
                dx, dh_prev, dc_prev, dW, dU, db = lstm_cell_backward(
                    dh[l], dc[l], st["cells"][l]
                )
                self._g(f"dec{l}_W")[...] += dW
                self._g(f"dec{l}_U")[...] += dU
                self._g(f"dec{l}_b")[...] += db
                dh[l] = dh_prev
                dc[l] = dc_prev
                dx_down = dx
            demb = self._g("emb_tgt")
            np.add.at(demb, y_in[:, t], dx_down[:, :E])
            dctx += dx_down[:, E:]
            dquery, d_ann_step, dz = self._attend_backward(dctx, annotations, st["att"])
            d_ann += d_ann_step
            d_ann_proj += dz
            dh[L - 1] += dquery
        # bridge
        d_ann_last = np.zeros((B, H2))
        for l in range(L):
            h0 = bridge_pre[l]
            dpre = dh[l] * (1.0 - h0 * h0)
            self._g(f"bridge{l}_W")[...] += ann_last.T @ dpre
            self._g(f"bridge{l}_b")[...] += dpre.sum(axis=0)
            d_ann_last += dpre @ self._v(f"bridge{l}_W").T
        np.add.at(d_ann, (np.arange(B), last_idx), d_ann_last)
        # ann_proj = annotations @ attn_U
        self._g("attn_U")[...] += np.einsum("bsh,bsa->ha", annotations, d_ann_proj)
        d_ann += d_ann_proj @ self._v("attn_U").T
        self._encoder_backward(d_ann, enc_cache)
        return loss, acc

    # -- inference ----------------------------------------------------------

    def greedy_decode(self, source_ids: list[int], max_len: int | None = None) -> list[int]:
        """Feed own argmax predictions from START; stop at END or max_len.

        Returns generated token ids, END excluded.
        """
        c = self.config
        max_len = max_len or c.max_target_len
        src = np.asarray([source_ids], dtype=int)
        annotations, pad_mask, enc_cache = self.encode(src)
        ann_last = annotations[np.arange(1), enc_cache["last_idx"]]
        ann_proj = annotations @ self._v("attn_U")
        L, Hd = c.decoder_layers, c.decoder_cells
        h = [
            np.tanh(ann_last @ self._v(f"bridge{l}_W") + self._v(f"bridge{l}_b"))
            for l in range(L)
        ]
        cst = [np.zeros((1, Hd)) for _ in range(L)]
        token = START
        out_ids: list[int] = []
        for _ in range(max_len):
            ctx, _, _ = self._attend(h[L - 1], annotations, ann_proj, pad_mask)
            inp = np.concatenate([self._v("emb_tgt")[[token]], ctx], axis=1)
            for l in range(L):
                W, U, b = (self._v(f"dec{l}_{k}") for k in ("W", "U", "b"))
                h[l], cst[l], _ = lstm_cell(inp, h[l], cst[l], W, U, b)
                inp = h[l]
            logits = np.concatenate([h[L - 1], ctx], axis=1) @ self._v("out_W") + self._v(
                "out_b"
            )
            token = int(np.argmax(logits[0]))
            if token == END:
                break
            out_ids.append(token)
        return out_ids

    # -- training -----------------------------------------------------------

    def train_epoch(
        self,
        examples: list[Seq2SeqExample],
        optimizer: Adam,
        batch_size: int = 128,
        seed: int = 0,
    ) -> EpochStats:
        if not examples:
            raise ValueError("no training examples")
        order = np.random.default_rng(seed).permutation(len(examples))
        total_loss = 0.0
        total_acc = 0.0
        n_batches = 0
        for start in range(0, len(order), batch_size):
            idx = order[start : start + batch_size]
            src = np.asarray([examples[i].source_ids for i in idx], dtype=int)
            tgt = np.asarray([examples[i].target_ids for i in idx], dtype=int)
            optimizer.zero_grad()
            loss, acc = self.forward_batch(src, tgt, backward=True)
            optimizer.step()
            total_loss += loss
            total_acc += acc
            n_batches += 1
        return EpochStats(total_loss / n_batches, total_acc / n_batches)

    def evaluate(
        self, examples: list[Seq2SeqExample], batch_size: int = 128
    ) -> EpochStats:
        total_loss = 0.0
        total_acc = 0.0
        n_batches = 0
        for start in range(0, len(examples), batch_size):
            chunk = examples[start : start + batch_size]
            src = np.asarray([e.source_ids for e in chunk], dtype=int)
            tgt = np.asarray([e.target_ids for e in chunk], dtype=int)
            loss, acc = self.forward_batch(src, tgt, backward=False)
            total_loss += loss
            total_acc += acc
            n_batches += 1
        return EpochStats(total_loss / n_batches, total_acc / n_batches)
