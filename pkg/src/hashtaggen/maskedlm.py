"""Tiny trainable transformer-encoder masked LM and its autoregressive
append-[MASK] generation loop.

Pre-layer-norm blocks, learned positional embeddings, GELU activations and a
weight-tied LM head. The backward pass is hand-written and covered by the
finite-difference suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, asdict

import numpy as np

from .corpus import MASK, PAD, SEP, MaskedStepExample
from .nn import (
    Adam,
    NumericsError,
    Parameter,
    gelu,
    gelu_backward,
    glorot_uniform,
    layer_norm,
    layer_norm_backward,
    softmax,
)
from .seq2seq import EpochStats

_NEG_INF = -1e30


@dataclass
class TransformerConfig:
    vocab_size: int
    num_layers: int = 2
    hidden_size: int = 64
    num_heads: int = 2
    ffn_dim: int = 128
    max_len: int = 72
    dropout_rate: float = 0.1

    def __post_init__(self):
        for name in ("vocab_size", "num_layers", "hidden_size", "num_heads", "ffn_dim"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.hidden_size % self.num_heads != 0:
            raise ValueError("hidden_size must be divisible by num_heads")
        if self.max_len < 2:
            raise ValueError("max_len must be >= 2")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError("dropout_rate must be in [0, 1)")


class MaskedLMModel:
    def __init__(self, config: TransformerConfig, seed: int = 0):
        self.config = config
        self.params: dict[str, Parameter] = {}
        self._init_params(np.random.default_rng(seed))

    def _add(self, name: str, value: np.ndarray) -> None:
        self.params[name] = Parameter(name, value)

    def _init_params(self, rng: np.random.Generator) -> None:
        c = self.config
        H, F = c.hidden_size, c.ffn_dim
        self._add("emb", glorot_uniform(rng, (c.vocab_size, H)))
        self._add("pos", glorot_uniform(rng, (c.max_len, H)))
        for l in range(c.num_layers):
            self._add(f"l{l}_ln1_g", np.ones(H))
            self._add(f"l{l}_ln1_b", np.zeros(H))
            for k in ("q", "k", "v", "o"):
                self._add(f"l{l}_W{k}", glorot_uniform(rng, (H, H)))
                if k != "k":
                    # no key bias: softmax scores are invariant to it
                    self._add(f"l{l}_b{k}", np.zeros(H))
            self._add(f"l{l}_ln2_g", np.ones(H))
            self._add(f"l{l}_ln2_b", np.zeros(H))
            self._add(f"l{l}_W1", glorot_uniform(rng, (H, F)))
            self._add(f"l{l}_b1", np.zeros(F))
            self._add(f"l{l}_W2", glorot_uniform(rng, (F, H)))
            self._add(f"l{l}_b2", np.zeros(H))
        self._add("lnf_g", np.ones(H))
        self._add("lnf_b", np.zeros(H))
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

    # -- forward ------------------------------------------------------------

    def _forward(
        self,
        ctx: np.ndarray,
        dropout_rng: np.random.Generator | None = None,
    ) -> tuple[np.ndarray, dict]:
        """Hidden states (B, T, H) after the final layer norm, plus cache.

        ctx (B, T) int ids; PAD positions are excluded as attention keys so
        they never influence real positions. Dropout is active only when a
        dropout_rng is supplied.
        """
        c = self.config
        B, T = ctx.shape
        if T > c.max_len:
            raise NumericsError(f"context length {T} exceeds max_len {c.max_len}")
        if np.any(ctx >= c.vocab_size) or np.any(ctx < 0):
            raise NumericsError("context id out of vocabulary range")
        H, A = c.hidden_size, c.num_heads
        dh = H // A
        scale = 1.0 / math.sqrt(dh)
        key_mask = (ctx != PAD)[:, None, None, :]  # (B,1,1,T)
        x = self._v("emb")[ctx] + self._v("pos")[:T]
        cache: dict = {"ctx": ctx, "key_mask": key_mask, "layers": []}
        rate = c.dropout_rate if dropout_rng is not None else 0.0
        for l in range(c.num_layers):
            lc: dict = {"x_in": x}
            xn, lc["ln1"] = layer_norm(x, self._v(f"l{l}_ln1_g"), self._v(f"l{l}_ln1_b"))
            lc["xn1"] = xn
            q = xn @ self._v(f"l{l}_Wq") + self._v(f"l{l}_bq")
            k = xn @ self._v(f"l{l}_Wk")
            v = xn @ self._v(f"l{l}_Wv") + self._v(f"l{l}_bv")
            # (B, A, T, dh)
            q = q.reshape(B, T, A, dh).transpose(0, 2, 1, 3)
            k = k.reshape(B, T, A, dh).transpose(0, 2, 1, 3)
            v = v.reshape(B, T, A, dh).transpose(0, 2, 1, 3)
            scores = np.matmul(q, k.transpose(0, 1, 3, 2)) * scale
            scores = np.where(key_mask, scores, _NEG_INF)
            probs = softmax(scores, axis=-1)
            att = np.matmul(probs, v)  # (B, A, T, dh)
            merged = att.transpose(0, 2, 1, 3).reshape(B, T, H)
            y = merged @ self._v(f"l{l}_Wo") + self._v(f"l{l}_bo")
            if rate > 0:
                m = (dropout_rng.random(y.shape) >= rate) / (1 - rate)
                y *= m
                lc["drop_att"] = m
            lc.update(q=q, k=k, v=v, probs=probs, merged=merged)
            x = x + y
            lc["x_mid"] = x
            xn2, lc["ln2"] = layer_norm(x, self._v(f"l{l}_ln2_g"), self._v(f"l{l}_ln2_b"))
            lc["xn2"] = xn2
            pre = xn2 @ self._v(f"l{l}_W1") + self._v(f"l{l}_b1")
            act = gelu(pre)
            y2 = act @ self._v(f"l{l}_W2") + self._v(f"l{l}_b2")
            if rate > 0:
                m2 = (dropout_rng.random(y2.shape) >= rate) / (1 - rate)
                y2 *= m2
                lc["drop_ffn"] = m2
            lc.update(pre=pre, act=act)
            x = x + y2
            cache["layers"].append(lc)
        out, cache["lnf"] = layer_norm(x, self._v("lnf_g"), self._v("lnf_b"))
        cache["h_final"] = out
        return out, cache

    def _backward(self, dout: np.ndarray, cache: dict) -> None:
        c = self.config
        B, T = cache["ctx"].shape
        H, A = c.hidden_size, c.num_heads
        dh_dim = H // A
        scale = 1.0 / math.sqrt(dh_dim)
        dx, dg, db = layer_norm_backward(dout, cache["lnf"])
        self._g("lnf_g")[...] += dg
        self._g("lnf_b")[...] += db
        for l in range(c.num_layers - 1, -1, -1):
            lc = cache["layers"][l]
            # FFN branch
            dy2 = dx.copy()
            if "drop_ffn" in lc:
                dy2 *= lc["drop_ffn"]
            self._g(f"l{l}_W2")[...] += np.einsum("btf,bth->fh", lc["act"], dy2)
            self._g(f"l{l}_b2")[...] += dy2.reshape(-1, H).sum(axis=0)
            dact = dy2 @ self._v(f"l{l}_W2").T
            dpre = gelu_backward(dact, lc["pre"])
            self._g(f"l{l}_W1")[...] += np.einsum("bth,btf->hf", lc["xn2"], dpre)
            self._g(f"l{l}_b1")[...] += dpre.reshape(-1, c.ffn_dim).sum(axis=0)
            dxn2 = dpre @ self._v(f"l{l}_W1").T
            dx_mid, dg, db = layer_norm_backward(dxn2, lc["ln2"])
            self._g(f"l{l}_ln2_g")[...] += dg
            self._g(f"l{l}_ln2_b")[...] += db
            dx = dx + dx_mid
            # attention branch
            dy = dx.copy()
            if "drop_att" in lc:
                dy *= lc["drop_att"]
            self._g(f"l{l}_Wo")[...] += np.einsum("bth,btg->hg", lc["merged"], dy)
            self._g(f"l{l}_bo")[...] += dy.reshape(-1, H).sum(axis=0)
            dmerged = dy @ self._v(f"l{l}_Wo").T
            datt = dmerged.reshape(B, T, A, dh_dim).transpose(0, 2, 1, 3)
            probs, q, k, v = lc["probs"], lc["q"], lc["k"], lc["v"]
            dprobs = np.matmul(datt, v.transpose(0, 1, 3, 2))
            dv = np.matmul(probs.transpose(0, 1, 3, 2), datt)
            dscores = probs * (dprobs - np.sum(dprobs * probs, axis=-1, keepdims=True))
            dq = np.matmul(dscores, k) * scale
            dk = np.matmul(dscores.transpose(0, 1, 3, 2), q) * scale
            dq = dq.transpose(0, 2, 1, 3).reshape(B, T, H)
            dk = dk.transpose(0, 2, 1, 3).reshape(B, T, H)
            dv = dv.transpose(0, 2, 1, 3).reshape(B, T, H)
            xn = lc["xn1"]
            dxn = np.zeros_like(xn)
            for name, d in (("q", dq), ("k", dk), ("v", dv)):
                self._g(f"l{l}_W{name}")[...] += np.einsum("bth,btg->hg", xn, d)
                if name != "k":
                    self._g(f"l{l}_b{name}")[...] += d.reshape(-1, H).sum(axis=0)
                dxn += d @ self._v(f"l{l}_W{name}").T
            dx_in, dg, db = layer_norm_backward(dxn, lc["ln1"])
            self._g(f"l{l}_ln1_g")[...] += dg
            self._g(f"l{l}_ln1_b")[...] += db
            dx = dx + dx_in
        ctx = cache["ctx"]
        np.add.at(self._g("emb"), ctx.reshape(-1), dx.reshape(-1, H))
        self._g("pos")[:T] += dx.sum(axis=0)

    # -- public ops ---------------------------------------------------------

    def forward_mask_logits(
        self, context_ids: list[int] | np.ndarray, mask_position: int
    ) -> np.ndarray:
        """LM-head logits at the single MASK position of one context."""
        ctx = np.asarray(context_ids, dtype=int)
        if not 0 <= mask_position < len(ctx):
            raise NumericsError("mask_position out of bounds")
        if ctx[mask_position] != MASK:
            raise NumericsError("context_ids[mask_position] is not [MASK]")
        h, _ = self._forward(ctx[None, :])
        return h[0, mask_position] @ self._v("emb").T + self._v("out_b")

    def loss_batch(
        self,
        ctx: np.ndarray,
        mask_positions: np.ndarray,
        targets: np.ndarray,
        backward: bool = False,
        dropout_rng: np.random.Generator | None = None,
    ) -> tuple[float, float]:
        """Mean cross-entropy at the mask positions, plus argmax accuracy."""
        B = ctx.shape[0]
        rows = np.arange(B)
        if np.any(ctx[rows, mask_positions] != MASK):
            raise NumericsError("every context must hold [MASK] at its mask position")
        h, cache = self._forward(ctx, dropout_rng=dropout_rng)
        hm = h[rows, mask_positions]  # (B, H)
        logits = hm @ self._v("emb").T + self._v("out_b")
        z = logits - logits.max(axis=1, keepdims=True)
        lse = np.log(np.exp(z).sum(axis=1))
        loss = float((lse - z[rows, targets]).mean())
        acc = float((np.argmax(logits, axis=1) == targets).mean())
        if not np.isfinite(loss):
            raise NumericsError("non-finite loss")
        if backward:
            dlogits = np.exp(z - lse[:, None])
            dlogits[rows, targets] -= 1.0
            dlogits /= B
            self._g("out_b")[...] += dlogits.sum(axis=0)
            self._g("emb")[...] += dlogits.T @ hm
            dhm = dlogits @ self._v("emb")
            dout = np.zeros_like(h)
            dout[rows, mask_positions] = dhm
            self._backward(dout, cache)
        return loss, acc

    def train_epoch(
        self,
        examples: list[MaskedStepExample],
        optimizer: Adam,
        batch_size: int = 128,
        seed: int = 0,
    ) -> EpochStats:
        if not examples:
            raise ValueError("no training examples")
        rng = np.random.default_rng(seed)
        order = rng.permutation(len(examples))
        total_loss = total_acc = 0.0
        n_batches = 0
        for start in range(0, len(order), batch_size):
            idx = order[start : start + batch_size]
            ctx, pos, tgt = self._pack([examples[i] for i in idx])
            optimizer.zero_grad()
            drop = rng if self.config.dropout_rate > 0 else None
            loss, acc = self.loss_batch(ctx, pos, tgt, backward=True, dropout_rng=drop)
            optimizer.step()
            total_loss += loss
            total_acc += acc
            n_batches += 1
        return EpochStats(total_loss / n_batches, total_acc / n_batches)

    def evaluate(
        self, examples: list[MaskedStepExample], batch_size: int = 128
    ) -> EpochStats:
        total_loss = total_acc = 0.0
        n_batches = 0
        for start in range(0, len(examples), batch_size):
            ctx, pos, tgt = self._pack(examples[start : start + batch_size])
            loss, acc = self.loss_batch(ctx, pos, tgt)
            total_loss += loss
            total_acc += acc
            n_batches += 1
        return EpochStats(total_loss / n_batches, total_acc / n_batches)

    @staticmethod
    def _pack(
        batch: list[MaskedStepExample],
    ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Stack a batch, trimming shared trailing padding for speed."""
        width = max(len(e.context_ids) for e in batch)
        ctx = np.full((len(batch), width), PAD, dtype=int)
        for i, e in enumerate(batch):
            ctx[i, : len(e.context_ids)] = e.context_ids
        pos = np.asarray([e.mask_position for e in batch], dtype=int)
        tgt = np.asarray([e.target_id for e in batch], dtype=int)
        nonpad_cols = np.flatnonzero((ctx != PAD).any(axis=0))
        real = int(nonpad_cols[-1]) + 1
        return ctx[:, :real], pos, tgt


def generate_autoregressive(
    model,
    review_ids: list[int],
    max_total_len: int = 72,
    trace: list | None = None,
) -> list[int]:
    """The append-[MASK] generation loop.

    Each iteration presents "review [SEP] generated-so-far [MASK]" and takes
    the argmax prediction at the MASK; SEP terminates. Reviews too long to
    leave room for "[SEP] [MASK]" are truncated from the right. model needs
    only a forward_mask_logits(context_ids, mask_position) method; pass a
    trace list to record each (context, predicted_id) pair.
    """
    review = [int(t) for t in review_ids if t != PAD]
    if len(review) + 2 > max_total_len:
        review = review[: max_total_len - 2]
    generated: list[int] = []
    while True:
        context = review + [SEP] + generated + [MASK]
        mask_pos = len(context) - 1
        logits = model.forward_mask_logits(context, mask_pos)
        pred = int(np.argmax(logits))
        if trace is not None:
            trace.append((context, pred))
        if pred == SEP:
            break
        generated.append(pred)
        if len(review) + 1 + len(generated) + 1 > max_total_len:
            break
    return generated
