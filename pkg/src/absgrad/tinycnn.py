"""A tiny numpy convnet used as a deterministic test-grade classifier.

Two 3x3 same-padding conv layers with tanh activations, 2x2 average pooling
after each, and a linear head. Everything is smooth, so input gradients from
the hand-written backward pass agree with central finite differences to
near machine precision, which keeps the attribution pipeline honest.

Forward, input-gradient and parameter-gradient passes are implemented with
im2col/col2im; the images involved are 16x16, so clarity beats throughput.
"""

from __future__ import annotations

import numpy as np

from .models import CAP_INPUT_GRADIENT, ClassifierAdapter

__all__ = ["TinyCnnModel", "TinyConvNet", "train_network"]


def _im2col(x: np.ndarray, k: int, pad: int) -> np.ndarray:
    """(C, H, W) -> (C*k*k, H*W) patch matrix for stride-1 same convolution."""
    c, h, w = x.shape
    xp = np.pad(x, ((0, 0), (pad, pad), (pad, pad)))
    cols = np.empty((c, k, k, h, w), dtype=np.float64)
    for i in range(k):
        for j in range(k):
            cols[:, i, j] = xp[:, i : i + h, j : j + w]
    return cols.reshape(c * k * k, h * w)


def _col2im(cols: np.ndarray, c: int, h: int, w: int, k: int, pad: int) -> np.ndarray:
    """Scatter-add inverse of :func:`_im2col`."""
    cols = cols.reshape(c, k, k, h, w)
    xp = np.zeros((c, h + 2 * pad, w + 2 * pad), dtype=np.float64)
    for i in range(k):
        for j in range(k):
            xp[:, i : i + h, j : j + w] += cols[:, i, j]
    return xp[:, pad : pad + h, pad : pad + w]


def _conv_forward(x, weight, bias, k, pad):
    cols = _im2col(x, k, pad)
    f = weight.shape[0]
    out = (weight.reshape(f, -1) @ cols).reshape(f, x.shape[1], x.shape[2])
    return out + bias[:, None, None], cols


def _pool2_forward(x):
    c, h, w = x.shape
    return x.reshape(c, h // 2, 2, w // 2, 2).mean(axis=(2, 4))


def _pool2_backward(dout):
    c, h, w = dout.shape
    up = np.repeat(np.repeat(dout, 2, axis=1), 2, axis=2)
    return up / 4.0


class TinyConvNet:
    """conv(3x3) -> tanh -> pool2 -> conv(3x3) -> tanh -> pool2 -> linear."""

    KERNEL = 3
    PAD = 1

    def __init__(self, params: dict[str, np.ndarray]):
        self.params = {k: np.asarray(v, dtype=np.float64) for k, v in params.items()}
        self.in_channels = self.params["conv1_w"].shape[1]
        self.num_classes = self.params["fc_w"].shape[0]

    @classmethod
    def init_random(cls, in_channels=1, c1=6, c2=12, side=16, num_classes=2, seed=0):
        rng = np.random.default_rng(seed)
        flat = c2 * (side // 4) * (side // 4)

        def he(shape, fan_in):
            return rng.normal(0.0, np.sqrt(2.0 / fan_in), size=shape)

        k = cls.KERNEL
        return cls(
            {
                "conv1_w": he((c1, in_channels, k, k), in_channels * k * k),
                "conv1_b": np.zeros(c1),
                "conv2_w": he((c2, c1, k, k), c1 * k * k),
                "conv2_b": np.zeros(c2),
                "fc_w": he((num_classes, flat), flat),
                "fc_b": np.zeros(num_classes),
            }
        )

    def forward(self, x: np.ndarray):
        """Return (scores, cache); cache feeds :meth:`backward`."""
        p = self.params
        z1, cols1 = _conv_forward(x, p["conv1_w"], p["conv1_b"], self.KERNEL, self.PAD)
        a1 = np.tanh(z1)
        p1 = _pool2_forward(a1)
        z2, cols2 = _conv_forward(p1, p["conv2_w"], p["conv2_b"], self.KERNEL, self.PAD)
        a2 = np.tanh(z2)
        p2 = _pool2_forward(a2)
        flat = p2.ravel()
        scores = p["fc_w"] @ flat + p["fc_b"]
        cache = {"x": x, "cols1": cols1, "a1": a1, "p1": p1, "cols2": cols2, "a2": a2, "flat": flat}
        return scores, cache

    def backward(self, cache, dscores, want_param_grads: bool = False):
        """Backpropagate a score-space gradient to the input.

        Returns (dx, param_grads); param_grads is None unless requested.
        """
        p = self.params
        grads: dict[str, np.ndarray] | None = {} if want_param_grads else None

        dflat = p["fc_w"].T @ dscores
        if grads is not None:
            grads["fc_w"] = np.outer(dscores, cache["flat"])
            grads["fc_b"] = dscores.copy()

        a2 = cache["a2"]
        dp2 = dflat.reshape(a2.shape[0], a2.shape[1] // 2, a2.shape[2] // 2)
        da2 = _pool2_backward(dp2)
        dz2 = da2 * (1.0 - a2 * a2)

        f2 = p["conv2_w"].shape[0]
        if grads is not None:
            grads["conv2_w"] = (dz2.reshape(f2, -1) @ cache["cols2"].T).reshape(p["conv2_w"].shape)
            grads["conv2_b"] = dz2.sum(axis=(1, 2))
        dcols2 = p["conv2_w"].reshape(f2, -1).T @ dz2.reshape(f2, -1)
        p1 = cache["p1"]
        dp1 = _col2im(dcols2, p1.shape[0], p1.shape[1], p1.shape[2], self.KERNEL, self.PAD)

        a1 = cache["a1"]
        da1 = _pool2_backward(dp1)
        dz1 = da1 * (1.0 - a1 * a1)

        f1 = p["conv1_w"].shape[0]
        if grads is not None:
            grads["conv1_w"] = (dz1.reshape(f1, -1) @ cache["cols1"].T).reshape(p["conv1_w"].shape)
            grads["conv1_b"] = dz1.sum(axis=(1, 2))
        dcols1 = p["conv1_w"].reshape(f1, -1).T @ dz1.reshape(f1, -1)
        x = cache["x"]
        dx = _col2im(dcols1, x.shape[0], x.shape[1], x.shape[2], self.KERNEL, self.PAD)
        return dx, grads


def train_network(
    net: TinyConvNet,
    images: np.ndarray,
    labels: np.ndarray,
    epochs: int = 300,
    lr: float = 3e-3,
) -> float:
    """Full-batch Adam on softmax cross-entropy; returns final train accuracy."""
    m = {k: np.zeros_like(v) for k, v in net.params.items()}
    v = {k: np.zeros_like(vv) for k, vv in net.params.items()}
    beta1, beta2, eps = 0.9, 0.999, 1e-8
    step = 0
    n = len(images)
    for _ in range(epochs):
        total = {k: np.zeros_like(p) for k, p in net.params.items()}
        for x, y in zip(images, labels):
            scores, cache = net.forward(x)
            z = scores - scores.max()
            probs = np.exp(z) / np.exp(z).sum()
            dscores = probs.copy()
            dscores[y] -= 1.0
            _, grads = net.backward(cache, dscores / n, want_param_grads=True)
            for k in total:
                total[k] += grads[k]
        step += 1
        for k in net.params:
            m[k] = beta1 * m[k] + (1 - beta1) * total[k]
            v[k] = beta2 * v[k] + (1 - beta2) * total[k] ** 2
            mhat = m[k] / (1 - beta1**step)
            vhat = v[k] / (1 - beta2**step)
            net.params[k] -= lr * mhat / (np.sqrt(vhat) + eps)
    correct = sum(int(np.argmax(net.forward(x)[0]) == y) for x, y in zip(images, labels))
    return correct / n


class TinyCnnModel(ClassifierAdapter):
    """Adapter wrapping :class:`TinyConvNet` with input-gradient support."""

    capabilities = frozenset({CAP_INPUT_GRADIENT})

    def __init__(self, net: TinyConvNet, side: int = 16):
        self.net = net
        self.num_classes = net.num_classes
        self.input_shape = (net.in_channels, side, side)

    def class_scores(self, image) -> np.ndarray:
        arr = self.check_image(image)
        return self.net.forward(arr)[0]

    def input_gradient(self, image, c: int) -> np.ndarray:
        arr = self.check_image(image)
        c = self.check_class(c)
        scores, cache = self.net.forward(arr)
        dscores = np.zeros_like(scores)
        dscores[c] = 1.0
        dx, _ = self.net.backward(cache, dscores)
        return dx
