"""Minimal MLP substrate: tanh hidden layers, analytic backprop, SGD/Adam."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

LINEAR = "linear"
SOFTMAX = "softmax"

CHECKPOINT_VERSION = "1"


class DivergenceError(RuntimeError):
    """Non-finite gradients or parameters: the run has diverged."""


@dataclass
class Mlp:
    """Fully connected net; tanh hidden activations, linear or softmax head."""

    dims: list[int]
    head: str
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def copy(self) -> "Mlp":
        return Mlp(
            list(self.dims),
            self.head,
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
        )


@dataclass
class GradientSet:
    d_weights: list[np.ndarray]
    d_biases: list[np.ndarray]


def init_mlp(dims, head: str, seed) -> Mlp:
    """Uniform init scaled by 1/sqrt(fan_in); biases zero; seed-deterministic."""
    if head not in (LINEAR, SOFTMAX):
        raise ValueError(f"unknown head {head!r}")
    if len(dims) < 2 or any(d < 1 for d in dims):
        raise ValueError(f"bad layer dims {dims}")
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(dims, dims[1:]):
        scale = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-scale, scale, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return Mlp(list(dims), head, weights, biases)


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def log_softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


def forward(net: Mlp, x: np.ndarray):
    """Run the net; returns (output, cache). Accepts a vector or a batch."""
    x = np.asarray(x, dtype=float)
    squeeze = x.ndim == 1
    if squeeze:
        x = x[None, :]
    if x.shape[1] != net.dims[0]:
        raise ValueError(f"input dim {x.shape[1]} != {net.dims[0]}")
    activations = [x]
    h = x
    last = len(net.weights) - 1
    logits = None
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        z = h @ w + b
        if i < last:
            h = np.tanh(z)
            activations.append(h)
        else:
            logits = z
    out = softmax(logits) if net.head == SOFTMAX else logits
    cache = (activations, logits, out)
    return (out[0] if squeeze else out), cache


def backward(net: Mlp, cache, grad_out: np.ndarray,
             from_logits: bool = False) -> GradientSet:
    """Analytic gradients of a scalar loss given dLoss/d(output).

    With a softmax head, grad_out is w.r.t. the probabilities unless
    `from_logits` is set, in which case it is w.r.t. the pre-softmax logits.
    """
    activations, logits, out = cache
    g = np.asarray(grad_out, dtype=float)
    if g.ndim == 1:
        g = g[None, :]
    if net.head == SOFTMAX and not from_logits:
        p = out
        g = p * (g - (g * p).sum(axis=-1, keepdims=True))
    d_weights = [None] * len(net.weights)
    d_biases = [None] * len(net.biases)
    for i in range(len(net.weights) - 1, -1, -1):
        h_in = activations[i]
        d_weights[i] = h_in.T @ g
        d_biases[i] = g.sum(axis=0)
        if i > 0:
            g = (g @ net.weights[i].T) * (1.0 - activations[i] ** 2)
    return GradientSet(d_weights, d_biases)


@dataclass
class OptimizerState:
    kind: str = "adam"  # "sgd" | "adam"
    lr: float = 0.005
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)

    def __post_init__(self):
        if self.lr <= 0:
            raise ValueError("learning rate must be positive")
        if self.kind not in ("sgd", "adam"):
            raise ValueError(f"unknown optimizer {self.kind!r}")


def _flat_params(net: Mlp):
    return net.weights + net.biases


def _flat_grads(grads: GradientSet):
    return grads.d_weights + grads.d_biases


def apply_update(net: Mlp, opt: OptimizerState, grads: GradientSet,
                 direction: str = "descend") -> None:
    """One optimizer step in place; `ascend` adds the gradient, `descend` subtracts."""
    if direction not in ("ascend", "descend"):
        raise ValueError(f"unknown direction {direction!r}")
    sign = 1.0 if direction == "ascend" else -1.0
    params = _flat_params(net)
    gs = _flat_grads(grads)
    for p, g in zip(params, gs):
        if p.shape != g.shape:
            raise ValueError("gradient/parameter shape mismatch")
        if not np.all(np.isfinite(g)):
            raise DivergenceError("non-finite gradient")
    if opt.kind == "sgd":
        for p, g in zip(params, gs):
            p += sign * opt.lr * g
        opt.step += 1
        return
    if not opt.m:
        opt.m = [np.zeros_like(p) for p in params]
        opt.v = [np.zeros_like(p) for p in params]
    opt.step += 1
    b1c = 1.0 - opt.beta1 ** opt.step
    b2c = 1.0 - opt.beta2 ** opt.step
    for p, g, m, v in zip(params, gs, opt.m, opt.v):
        m *= opt.beta1
        m += (1 - opt.beta1) * g
        v *= opt.beta2
        v += (1 - opt.beta2) * g * g
        p += sign * opt.lr * (m / b1c) / (np.sqrt(v / b2c) + opt.eps)


def clip_gradients(grads: GradientSet, max_norm: float) -> float:
    """Scale grads in place to a global norm cap; returns the pre-clip norm."""
    total = float(
        np.sqrt(sum(float((g ** 2).sum()) for g in _flat_grads(grads)))
    )
    if max_norm > 0 and total > max_norm:
        scale = max_norm / total
        for g in _flat_grads(grads):
            g *= scale
    return total


def net_to_dict(net: Mlp) -> dict:
    return {
        "version": CHECKPOINT_VERSION,
        "layer_dims": list(net.dims),
        "head": net.head,
        "weights": [w.ravel().tolist() for w in net.weights],
        "biases": [b.tolist() for b in net.biases],
    }


def net_from_dict(doc: dict) -> Mlp:
    if doc.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {doc.get('version')!r}")
    dims = [int(d) for d in doc["layer_dims"]]
    weights = [
        np.asarray(w, dtype=float).reshape(fan_in, fan_out)
        for w, fan_in, fan_out in zip(doc["weights"], dims, dims[1:])
    ]
    biases = [np.asarray(b, dtype=float) for b in doc["biases"]]
    return Mlp(dims, doc["head"], weights, biases)


def save_net(net: Mlp, path) -> None:
    Path(path).write_text(json.dumps(net_to_dict(net)))


def load_net(path) -> Mlp:
    return net_from_dict(json.loads(Path(path).read_text()))
