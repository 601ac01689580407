"""Small numpy function approximator with hand-written backpropagation.

Supports valid (unpadded) strided 2-D convolutions and dense layers, each
with an optional ReLU. Everything is float64. Inputs may be a single sample
of ``input_shape`` or a batch with one extra leading axis.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

PARAMS_MAGIC = "antijam-params v1"


@dataclass(frozen=True)
class Conv:
    filters: int
    kernel_h: int
    kernel_w: int
    stride: int = 1
    relu: bool = True

    def __post_init__(self):
        if self.filters < 1 or self.kernel_h < 1 or self.kernel_w < 1 or self.stride < 1:
            raise ValueError(f"invalid conv spec {self}")


@dataclass(frozen=True)
class Dense:
    units: int
    relu: bool = False

    def __post_init__(self):
        if self.units < 1:
            raise ValueError(f"invalid dense spec {self}")


LayerSpec = Union[Conv, Dense]


def _conv_out(size: int, k: int, s: int) -> int:
    return (size - k) // s + 1


class Network:
    """Feed-forward stack; ``params`` alternates weight and bias per layer.

    Conv weights have shape ``(filters, in_channels, kh, kw)`` and expect
    ``(C, H, W)`` inputs; dense weights are ``(fan_in, units)`` and flatten
    whatever arrives.
    """

    def __init__(self, layers: Sequence[LayerSpec], input_shape, rng=None):
        self.layers = list(layers)
        self.input_shape = tuple(int(d) for d in input_shape)
        if rng is None or isinstance(rng, (int, np.integer)):
            rng = np.random.default_rng(rng)
        self.params: list[np.ndarray] = []
        self.shapes = [self.input_shape]
        shape = self.input_shape
        for spec in self.layers:
            if isinstance(spec, Conv):
                if len(shape) != 3:
                    raise ValueError(f"conv layer needs a (C, H, W) input, got {shape}")
                c, h, w = shape
                ho = _conv_out(h, spec.kernel_h, spec.stride)
                wo = _conv_out(w, spec.kernel_w, spec.stride)
                if ho < 1 or wo < 1:
                    raise ValueError(f"conv {spec} does not fit input {shape}")
                fan_in = c * spec.kernel_h * spec.kernel_w
                wshape = (spec.filters, c, spec.kernel_h, spec.kernel_w)
                shape = (spec.filters, ho, wo)
                nout = spec.filters
            else:
                fan_in = int(np.prod(shape))
                wshape = (fan_in, spec.units)
                shape = (spec.units,)
                nout = spec.units
            bound = 1.0 / math.sqrt(fan_in)
            self.params.append(rng.uniform(-bound, bound, size=wshape))
            self.params.append(rng.uniform(-bound, bound, size=nout))
            self.shapes.append(shape)
        if len(self.shapes[-1]) != 1:
            raise ValueError("the final layer must be dense")

    @property
    def output_size(self) -> int:
        return self.shapes[-1][0]

    @property
    def num_params(self) -> int:
        return sum(p.size for p in self.params)

    def same_architecture(self, other: "Network") -> bool:
        return (
            self.layers == other.layers
            and self.input_shape == other.input_shape
            and [p.shape for p in self.params] == [p.shape for p in other.params]
        )

    def _as_batch(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.shape == self.input_shape:
            return x[None], True
        if x.shape[1:] == self.input_shape:
            return x, False
        raise ValueError(f"input shape {x.shape} does not match network input {self.input_shape}")

    def _run(self, xb):
        """Forward pass keeping every layer input and pre-activation."""
        cache = []
        a = xb
        for li, spec in enumerate(self.layers):
            w, b = self.params[2 * li], self.params[2 * li + 1]
            if isinstance(spec, Conv):
                win = sliding_window_view(a, (spec.kernel_h, spec.kernel_w), axis=(2, 3))
                win = win[:, :, :: spec.stride, :: spec.stride]
                z = np.einsum("bchwij,fcij->bfhw", win, w, optimize=True) + b[None, :, None, None]
            else:
                win = None
                a = a.reshape(a.shape[0], -1)
                z = a @ w + b
            cache.append((a, win, z))
            a = np.maximum(z, 0.0) if spec.relu else z
        return a, cache

    def forward(self, x) -> np.ndarray:
        xb, single = self._as_batch(x)
        out, _ = self._run(xb)
        return out[0] if single else out

    __call__ = forward

    def backward(self, cache, grad_out) -> list:
        """Parameter gradients given dLoss/dOutput for a cached batch."""
        grads: list = [None] * len(self.params)
        g = grad_out
        for li in range(len(self.layers) - 1, -1, -1):
            spec = self.layers[li]
            a, win, z = cache[li]
            w = self.params[2 * li]
            if spec.relu:
                g = g * (z > 0)
            if isinstance(spec, Conv):
                grads[2 * li] = np.einsum("bchwij,bfhw->fcij", win, g, optimize=True)
                grads[2 * li + 1] = g.sum(axis=(0, 2, 3))
                if li > 0:
                    s = spec.stride
                    ho, wo = g.shape[2], g.shape[3]
                    da = np.zeros_like(a)
                    for i in range(spec.kernel_h):
                        for j in range(spec.kernel_w):
                            da[:, :, i : i + s * ho : s, j : j + s * wo : s] += np.einsum(
                                "bfhw,fc->bchw", g, w[:, :, i, j]
                            )
                    g = da
            else:
                grads[2 * li] = a.T @ g
                grads[2 * li + 1] = g.sum(axis=0)
                if li > 0:
                    g = (g @ w.T).reshape((g.shape[0],) + self.shapes[li])
        return grads


def forward(net: Network, x) -> np.ndarray:
    return net.forward(x)


def loss_and_grad(net: Network, inputs, actions, targets, weights=None):
    """Weighted squared TD loss and its parameter gradients.

    ``psi_i = target_i - Q(x_i)[a_i]``; ``loss = mean(w_i * psi_i**2)``.
    Targets are constants. Returns ``(loss, grads, psi)``.
    """
    xb, _ = net._as_batch(inputs)
    m = xb.shape[0]
    actions = np.asarray(actions, dtype=np.intp).reshape(-1)
    targets = np.asarray(targets, dtype=np.float64).reshape(-1)
    weights = np.ones(m) if weights is None else np.asarray(weights, dtype=np.float64).reshape(-1)
    if not (len(actions) == len(targets) == len(weights) == m):
        raise ValueError("batch arguments disagree in length")
    q, cache = net._run(xb)
    rows = np.arange(m)
    psi = targets - q[rows, actions]
    loss = float(np.mean(weights * psi**2))
    if not np.isfinite(loss):
        raise FloatingPointError(
            f"non-finite loss {loss}: max|Q|={np.nanmax(np.abs(q))}, max|target|={np.nanmax(np.abs(targets))}"
        )
    grad_q = np.zeros_like(q)
    grad_q[rows, actions] = -2.0 * weights * psi / m
    return loss, net.backward(cache, grad_q), psi


def sgd_step(net: Network, grads, learning_rate: float) -> None:
    for p, g in zip(net.params, grads):
        if p.shape != g.shape:
            raise ValueError(f"gradient shape {g.shape} does not match parameter {p.shape}")
        p -= learning_rate * g


def copy_from(dst: Network, src: Network) -> None:
    if not dst.same_architecture(src):
        raise ValueError("cannot copy parameters between different architectures")
    for d, s in zip(dst.params, src.params):
        np.copyto(d, s)


def mlp_preset(input_len: int, n_outputs: int, hidden=(64, 64), rng=None) -> Network:
    layers = [Dense(h, relu=True) for h in hidden] + [Dense(n_outputs)]
    return Network(layers, (input_len,), rng)


def conv_preset(image_hw, n_outputs: int, rng=None) -> Network:
    """Two ReLU convs (20@3x3, 40@2x2, stride 1), a 180-unit ReLU layer, linear head."""
    layers = [Conv(20, 3, 3, 1), Conv(40, 2, 2, 1), Dense(180, relu=True), Dense(n_outputs)]
    return Network(layers, (1,) + tuple(image_hw), rng)


# -- parameter files ---------------------------------------------------------
#
#   antijam-params v1
#   tensors <count>
#   tensor <ndim> <d0> <d1> ...
#   <one float.hex() value per line, row-major>
#
# Hex floats make the round-trip bit-exact.


def write_params(params, fh) -> None:
    fh.write(f"{PARAMS_MAGIC}\n")
    fh.write(f"tensors {len(params)}\n")
    for p in params:
        p = np.asarray(p, dtype=np.float64)
        fh.write("tensor " + " ".join(str(d) for d in (p.ndim,) + p.shape) + "\n")
        fh.writelines(float(v).hex() + "\n" for v in p.ravel())


def read_params(fh) -> list:
    header = fh.readline().strip()
    if header != PARAMS_MAGIC:
        raise ValueError(f"not a parameter block: {header!r}")
    tag, count = fh.readline().split()
    if tag != "tensors":
        raise ValueError("missing tensor count")
    out = []
    for _ in range(int(count)):
        fields = fh.readline().split()
        if not fields or fields[0] != "tensor":
            raise ValueError("malformed tensor header")
        ndim = int(fields[1])
        shape = tuple(int(d) for d in fields[2 : 2 + ndim])
        n = int(np.prod(shape)) if shape else 1
        vals = [float.fromhex(fh.readline().strip()) for _ in range(n)]
        out.append(np.array(vals, dtype=np.float64).reshape(shape))
    return out


def save_params(net: Network, path) -> None:
    with open(path, "w") as fh:
        write_params(net.params, fh)


def load_params(net: Network, path) -> None:
    with open(path) as fh:
        params = read_params(fh)
    if [p.shape for p in params] != [p.shape for p in net.params]:
        raise ValueError("parameter file does not match the network architecture")
    for d, s in zip(net.params, params):
        np.copyto(d, s)


def params_to_text(params) -> str:
    buf = io.StringIO()
    write_params(params, buf)
    return buf.getvalue()
