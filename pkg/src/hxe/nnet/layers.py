"""Parameterised layers built on the autodiff ops.

Modules own named :class:`Parameter` leaves and expose them through
``named_parameters`` in a fixed, deterministic order (attribute definition order,
depth first). That order is what the checkpoint format and the optimizer rely on.
"""

from __future__ import annotations

import math
from typing import Iterator

import numpy as np

from hxe.core import ShapeError
from hxe.nnet import tensor as T
from hxe.nnet.tensor import Tensor


class Parameter(Tensor):
    """A trainable leaf tensor. Gradients accumulate in ``grad`` during backward."""

    __slots__ = ()

    def __init__(self, data: np.ndarray, name: str = ""):
        super().__init__(np.asarray(data), requires_grad=True, name=name)


class Module:
    def named_parameters(self, prefix: str = "") -> Iterator[tuple[str, Parameter]]:
        for key, val in vars(self).items():
            path = f"{prefix}{key}"
            if isinstance(val, Parameter):
                yield path, val
            elif isinstance(val, Module):
                yield from val.named_parameters(path + ".")
            elif isinstance(val, (list, tuple)):
                for i, item in enumerate(val):
                    if isinstance(item, Module):
                        yield from item.named_parameters(f"{path}.{i}.")

    def parameters(self) -> list[Parameter]:
        return [p for _, p in self.named_parameters()]

    def state_dict(self) -> dict[str, np.ndarray]:
        return {k: p.data.copy() for k, p in self.named_parameters()}

    def load_state_dict(self, state: dict[str, np.ndarray]) -> None:
        own = dict(self.named_parameters())
        missing = set(own) - set(state)
        extra = set(state) - set(own)
        if missing or extra:
            raise KeyError(f"state mismatch: missing {sorted(missing)}, unexpected {sorted(extra)}")
        for k, p in own.items():
            if state[k].shape != p.shape:
                raise ShapeError(f"parameter {k}: checkpoint shape {state[k].shape} vs model {p.shape}")
            p.data = np.array(state[k], dtype=p.data.dtype)

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.grad = None

    def astype(self, dtype) -> "Module":
        for p in self.parameters():
            p.data = p.data.astype(dtype)
        return self

    def num_parameters(self) -> int:
        return sum(p.size for p in self.parameters())


def _uniform(rng: np.random.Generator, shape, fan_in: int, dtype) -> np.ndarray:
    bound = 1.0 / math.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape).astype(dtype)


class Linear(Module):
    def __init__(self, n_in: int, n_out: int, rng: np.random.Generator, dtype=np.float64):
        self.w = Parameter(_uniform(rng, (n_in, n_out), n_in, dtype))
        self.b = Parameter(np.zeros(n_out, dtype=dtype))

    def __call__(self, x: Tensor) -> Tensor:
        if x.shape[-1] != self.w.shape[0]:
            raise ShapeError(f"Linear expects last dim {self.w.shape[0]}, got input {x.shape}")
        return T.matmul(x, self.w) + self.b


class Conv2d(Module):
    def __init__(self, c_in: int, c_out: int, k: int, rng: np.random.Generator, stride: int = 1, pad: int = 0, dtype=np.float64):
        self.w = Parameter(_uniform(rng, (c_out, c_in, k, k), c_in * k * k, dtype))
        self.b = Parameter(np.zeros(c_out, dtype=dtype))
        self.stride = stride
        self.pad = pad

    def __call__(self, x: Tensor) -> Tensor:
        return T.conv2d(x, self.w, self.b, self.stride, self.pad)


class LayerNorm(Module):
    def __init__(self, d: int, dtype=np.float64):
        self.gamma = Parameter(np.ones(d, dtype=dtype))
        self.beta = Parameter(np.zeros(d, dtype=dtype))

    def __call__(self, x: Tensor) -> Tensor:
        return T.layer_norm(x, self.gamma, self.beta)


class MultiHeadAttention(Module):
    def __init__(self, d: int, heads: int, rng: np.random.Generator, dtype=np.float64):
        if d % heads:
            raise ShapeError(f"width {d} not divisible by {heads} heads")
        self.heads = heads
        self.q = Linear(d, d, rng, dtype)
        self.k = Linear(d, d, rng, dtype)
        self.v = Linear(d, d, rng, dtype)
        self.o = Linear(d, d, rng, dtype)

    def __call__(self, x: Tensor) -> Tensor:
        return T.multi_head_attention(
            x, self.q.w, self.q.b, self.k.w, self.k.b, self.v.w, self.v.b, self.o.w, self.o.b, self.heads
        )


class MLP(Module):
    """Linear layers with GELU between them (none after the last)."""

    def __init__(self, sizes: list[int], rng: np.random.Generator, dtype=np.float64):
        self.layers = [Linear(a, b, rng, dtype) for a, b in zip(sizes[:-1], sizes[1:])]

    def __call__(self, x: Tensor) -> Tensor:
        for i, layer in enumerate(self.layers):
            x = layer(x)
            if i < len(self.layers) - 1:
                x = T.gelu(x)
        return x


class TransformerBlock(Module):
    """Pre-norm block: x + attn(ln(x)), then x + mlp(ln(x))."""

    def __init__(self, d: int, heads: int, hidden: int, rng: np.random.Generator, dtype=np.float64):
        self.ln1 = LayerNorm(d, dtype)
        self.attn = MultiHeadAttention(d, heads, rng, dtype)
        self.ln2 = LayerNorm(d, dtype)
        self.mlp = MLP([d, hidden, d], rng, dtype)

    def __call__(self, x: Tensor) -> Tensor:
        x = x + self.attn(self.ln1(x))
        return x + self.mlp(self.ln2(x))
