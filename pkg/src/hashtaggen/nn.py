"""Dense-tensor numerics shared by both models.

Everything runs in float64 numpy. Backward passes are analytic and are
validated against central finite differences by gradient_check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import erf


class NumericsError(Exception):
    """Non-finite values or shape violations in a public operation."""


@dataclass
class Parameter:
    name: str
    value: np.ndarray
    grad: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        self.value = np.asarray(self.value, dtype=np.float64)
        if self.grad is None:
            self.grad = np.zeros_like(self.value)
        if self.grad.shape != self.value.shape:
            raise NumericsError(f"gradient shape mismatch for {self.name}")

    def zero_grad(self) -> None:
        self.grad.fill(0.0)


def glorot_uniform(rng: np.random.Generator, shape: tuple[int, ...]) -> np.ndarray:
    fan_in, fan_out = shape[0], shape[-1]
    r = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-r, r, size=shape)


def softmax(x: np.ndarray, axis: int = -1) -> np.ndarray:
    z = x - np.max(x, axis=axis, keepdims=True)
    e = np.exp(z)
    return e / np.sum(e, axis=axis, keepdims=True)


def softmax_cross_entropy(
    logits: np.ndarray, target_id: int
) -> tuple[float, np.ndarray]:
    """Loss -log softmax(logits)[target] and its gradient wrt logits."""
    logits = np.asarray(logits, dtype=np.float64)
    if not 0 <= target_id < logits.shape[-1]:
        raise NumericsError(f"target id {target_id} out of range")
    z = logits - np.max(logits)
    logsumexp = math.log(np.sum(np.exp(z)))
    loss = logsumexp - z[target_id]
    grad = np.exp(z - logsumexp)
    grad[target_id] -= 1.0
    return loss, grad


def batched_softmax_cross_entropy(
    logits: np.ndarray, targets: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Per-row loss and gradient; logits (B, V), targets (B,)."""
    z = logits - np.max(logits, axis=-1, keepdims=True)
    lse = np.log(np.sum(np.exp(z), axis=-1))
    rows = np.arange(logits.shape[0])
    losses = lse - z[rows, targets]
    grads = np.exp(z - lse[:, None])
    grads[rows, targets] -= 1.0
    return losses, grads


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-np.clip(x, -60.0, 60.0)))


def lstm_cell(
    x: np.ndarray,
    h_prev: np.ndarray,
    c_prev: np.ndarray,
    W: np.ndarray,
    U: np.ndarray,
    b: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, dict]:
    """One LSTM step; gate order i, f, g, o in the fused weight matrices.

    x (B, d_in) or (d_in,); W (d_in, 4H), U (H, 4H), b (4H,).
    Returns (h, c, cache) with cache holding what backward needs.
    """
    squeeze = x.ndim == 1
    if squeeze:
        x, h_prev, c_prev = x[None, :], h_prev[None, :], c_prev[None, :]
    H = U.shape[0]
    z = x @ W + h_prev @ U + b
    i = _sigmoid(z[:, :H])
    f = _sigmoid(z[:, H : 2 * H])
    g = np.tanh(z[:, 2 * H : 3 * H])
    o = _sigmoid(z[:, 3 * H :])
    c = f * c_prev + i * g
    tc = np.tanh(c)
    h = o * tc
    cache = {"x": x, "h_prev": h_prev, "c_prev": c_prev, "i": i, "f": f, "g": g,
             "o": o, "c": c, "tc": tc, "W": W, "U": U}
    if squeeze:
        return h[0], c[0], cache
    return h, c, cache


def lstm_cell_backward(
    dh: np.ndarray, dc: np.ndarray, cache: dict
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Backward of lstm_cell. Returns (dx, dh_prev, dc_prev, dW, dU, db)."""
    i, f, g, o = cache["i"], cache["f"], cache["g"], cache["o"]
    tc, c_prev = cache["tc"], cache["c_prev"]
    if dh.ndim == 1:
        dh, dc = dh[None, :], dc[None, :]
    dc_total = dc + dh * o * (1.0 - tc * tc)
    do = dh * tc
    di = dc_total * g
    df = dc_total * c_prev
    dg = dc_total * i
    dz = np.concatenate(
        [di * i * (1 - i), df * f * (1 - f), dg * (1 - g * g), do * o * (1 - o)],
        axis=1,
    )
    dx = dz @ cache["W"].T
    dh_prev = dz @ cache["U"].T
    dc_prev = dc_total * f
    dW = cache["x"].T @ dz
    dU = cache["h_prev"].T @ dz
    db = dz.sum(axis=0)
    return dx, dh_prev, dc_prev, dW, dU, db


def layer_norm(
    x: np.ndarray, gamma: np.ndarray, beta: np.ndarray, eps: float = 1e-5
) -> tuple[np.ndarray, dict]:
    """Normalize over the last axis."""
    mu = x.mean(axis=-1, keepdims=True)
    var = x.var(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = (x - mu) * inv
    return xhat * gamma + beta, {"xhat": xhat, "inv": inv, "gamma": gamma}


def layer_norm_backward(
    dy: np.ndarray, cache: dict
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    xhat, inv, gamma = cache["xhat"], cache["inv"], cache["gamma"]
    H = xhat.shape[-1]
    dgamma = (dy * xhat).reshape(-1, H).sum(axis=0)
    dbeta = dy.reshape(-1, H).sum(axis=0)
    dxhat = dy * gamma
    dx = inv * (
        dxhat
        - dxhat.mean(axis=-1, keepdims=True)
        - xhat * (dxhat * xhat).mean(axis=-1, keepdims=True)
    )
    return dx, dgamma, dbeta


_INV_SQRT2 = 1.0 / math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def gelu(x: np.ndarray) -> np.ndarray:
    return 0.5 * x * (1.0 + erf(x * _INV_SQRT2))


def gelu_backward(dy: np.ndarray, x: np.ndarray) -> np.ndarray:
    cdf = 0.5 * (1.0 + erf(x * _INV_SQRT2))
    pdf = _INV_SQRT_2PI * np.exp(-0.5 * x * x)
    return dy * (cdf + x * pdf)


class Adam:
    """Adam optimizer over a list of Parameters."""

    def __init__(
        self,
        params: list[Parameter],
        lr: float = 1e-3,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ):
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = {p.name: np.zeros_like(p.value) for p in params}
        self.v = {p.name: np.zeros_like(p.value) for p in params}

    def step(self) -> None:
        self.t += 1
        for p in self.params:
            if not np.all(np.isfinite(p.grad)):
                raise NumericsError(f"non-finite gradient in {p.name}")
            m = self.m[p.name]
            v = self.v[p.name]
            m *= self.beta1
            m += (1 - self.beta1) * p.grad
            v *= self.beta2
            v += (1 - self.beta2) * p.grad**2
            mhat = m / (1 - self.beta1**self.t)
            vhat = v / (1 - self.beta2**self.t)
            p.value -= self.lr * mhat / (np.sqrt(vhat) + self.eps)

    def zero_grad(self) -> None:
        for p in self.params:
            p.zero_grad()


def gradient_check(
    loss_fn: Callable[[], float],
    params: list[Parameter],
    epsilon: float = 1e-5,
    max_coords: int = 200,
    seed: int = 0,
) -> float:
    """Max relative error between analytic grads and central differences.

    params must already carry analytic gradients for the loss loss_fn()
    computes from their current values. At most max_coords coordinates are
    probed per tensor (random subsample, deterministic by seed).
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    rng = np.random.default_rng(seed)
    worst = 0.0
    for p in params:
        flat = p.value.reshape(-1)
        gflat = p.grad.reshape(-1)
        n = flat.size
        idx = np.arange(n) if n <= max_coords else rng.choice(n, max_coords, replace=False)
        for j in idx:
            orig = flat[j]
            flat[j] = orig + epsilon
            lp = loss_fn()
            flat[j] = orig - epsilon
            lm = loss_fn()
            flat[j] = orig
            if not (math.isfinite(lp) and math.isfinite(lm)):
                raise NumericsError(f"non-finite loss probing {p.name}")
            numeric = (lp - lm) / (2 * epsilon)
            analytic = gflat[j]
            err = abs(analytic - numeric) / max(abs(analytic), abs(numeric), 1e-8)
            worst = max(worst, err)
    return worst
