"""Minimal numpy neural-net primitives.

Just enough for the two model families: valid 2-D convolution (im2col),
max pooling, inference-mode batch norm, dense layers, and a small
multi-layer perceptron with analytic backprop for binary cross-entropy.
"""

from __future__ import annotations

import numpy as np


def he_uniform(shape, fan_in: int, rng: np.random.Generator) -> np.ndarray:
    limit = np.sqrt(6.0 / fan_in)
    return rng.uniform(-limit, limit, size=shape)


def relu(x):
    return np.maximum(x, 0.0)


def sigmoid(x):
    out = np.empty_like(x, dtype=np.float64)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def bce_loss(p, y, eps: float = 1e-12) -> np.ndarray:
    """Per-example binary cross-entropy."""
    p = np.clip(p, eps, 1.0 - eps)
    return -(y * np.log(p) + (1.0 - y) * np.log(1.0 - p))


def conv2d_valid(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Valid convolution. x: (B,H,W,Cin), w: (K1,K2,Cin,Cout), b: (Cout,)."""
    batch, height, width, _ = x.shape
    k1, k2, c_in, c_out = w.shape
    out_h, out_w = height - k1 + 1, width - k2 + 1
    s = x.strides
    cols = np.lib.stride_tricks.as_strided(
        x,
        shape=(batch, out_h, out_w, k1, k2, c_in),
        strides=(s[0], s[1], s[2], s[1], s[2], s[3]),
    ).reshape(batch, out_h, out_w, k1 * k2 * c_in)
    return cols @ w.reshape(k1 * k2 * c_in, c_out) + b


def maxpool2d(x: np.ndarray, pool_h: int, pool_w: int) -> np.ndarray:
    """Non-overlapping max pool; trailing remainder rows/cols dropped."""
    batch, height, width, chan = x.shape
    out_h, out_w = height // pool_h, width // pool_w
    trimmed = x[:, : out_h * pool_h, : out_w * pool_w, :]
    return trimmed.reshape(batch, out_h, pool_h, out_w, pool_w, chan).max(axis=(2, 4))


def batchnorm_inference(x, gamma, beta, mean, var, eps: float = 1e-5):
    """Normalize with stored running statistics (per-channel, last axis)."""
    return gamma * (x - mean) / np.sqrt(var + eps) + beta


class MlpNetwork:
    """Fully-connected ReLU net with a sigmoid output unit.

    Parameters live in ``weights``/``biases`` (float64). ``layer_dims``
    is [input, hidden..., 1].
    """

    def __init__(self, layer_dims, rng: np.random.Generator | None = None):
        if len(layer_dims) < 2 or layer_dims[-1] != 1:
            raise ValueError("layer_dims must be [input, hidden..., 1]")
        self.layer_dims = list(layer_dims)
        rng = rng or np.random.default_rng(0)
        self.weights = [
            he_uniform((d_in, d_out), d_in, rng)
            for d_in, d_out in zip(layer_dims[:-1], layer_dims[1:])
        ]
        self.biases = [np.zeros(d_out) for d_out in layer_dims[1:]]

    def forward(self, x: np.ndarray) -> np.ndarray:
        """Probabilities for a (B, input_dim) batch."""
        h = np.asarray(x, dtype=np.float64)
        for w, b in zip(self.weights[:-1], self.biases[:-1]):
            h = relu(h @ w + b)
        z = h @ self.weights[-1] + self.biases[-1]
        return sigmoid(z)[:, 0]

    def loss_and_gradients(self, x: np.ndarray, y: np.ndarray):
        """Mean BCE loss and its gradients w.r.t. every parameter."""
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        activations = [x]
        h = x
        for w, b in zip(self.weights[:-1], self.biases[:-1]):
            h = relu(h @ w + b)
            activations.append(h)
        z = h @ self.weights[-1] + self.biases[-1]
        p = sigmoid(z)[:, 0]
        loss = float(np.mean(bce_loss(p, y)))

        batch = len(y)
        delta = ((p - y) / batch)[:, None]  # dL/dz for sigmoid + BCE
        grads_w = [None] * len(self.weights)
        grads_b = [None] * len(self.biases)
        for layer in range(len(self.weights) - 1, -1, -1):
            grads_w[layer] = activations[layer].T @ delta
            grads_b[layer] = delta.sum(axis=0)
            if layer > 0:
                delta = (delta @ self.weights[layer].T) * (activations[layer] > 0)
        return loss, grads_w, grads_b

    def apply_gradients(self, grads_w, grads_b, lr: float):
        for w, gw in zip(self.weights, grads_w):
            w -= lr * gw
        for b, gb in zip(self.biases, grads_b):
            b -= lr * gb

    def get_parameters(self):
        return [w.copy() for w in self.weights], [b.copy() for b in self.biases]

    def set_parameters(self, weights, biases):
        self.weights = [w.copy() for w in weights]
        self.biases = [b.copy() for b in biases]

    @property
    def n_parameters(self) -> int:
        return sum(w.size for w in self.weights) + sum(b.size for b in self.biases)
