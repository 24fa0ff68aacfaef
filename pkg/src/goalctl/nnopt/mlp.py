"""Dense tanh networks stored as plain numpy parameter lists."""

from dataclasses import dataclass

import numpy as np

from goalctl.errors import ShapeMismatch


def apply(params, x, xp=np):
    """Feed-forward pass; works with numpy or jax.numpy arrays alike."""
    h = x
    last = len(params) - 1
    for i, layer in enumerate(params):
        h = h @ layer["W"] + layer["b"]
        if i < last:
            h = xp.tanh(h)
    return h


def init_params(sizes, rng, scale=1.0):
    """Uniform(+-1/sqrt(fan_in)) initialisation, the usual dense-layer default."""
    params = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = scale / np.sqrt(fan_in)
        params.append({
            "W": rng.uniform(-bound, bound, size=(fan_in, fan_out)),
            "b": rng.uniform(-bound, bound, size=(fan_out,)),
        })
    return params


@dataclass
class MLP:
    sizes: tuple
    params: list

    @classmethod
    def create(cls, sizes, rng, scale=1.0):
        return cls(tuple(int(s) for s in sizes), init_params(sizes, rng, scale))

    @classmethod
    def zeros(cls, sizes):
        params = [{"W": np.zeros((a, b)), "b": np.zeros(b)} for a, b in zip(sizes[:-1], sizes[1:])]
        return cls(tuple(sizes), params)

    @property
    def in_dim(self):
        return self.sizes[0]

    @property
    def out_dim(self):
        return self.sizes[-1]

    def copy(self):
        return MLP(self.sizes, [{k: v.copy() for k, v in layer.items()} for layer in self.params])

    def check(self):
        for i, layer in enumerate(self.params):
            if layer["W"].shape != (self.sizes[i], self.sizes[i + 1]) or layer["b"].shape != (self.sizes[i + 1],):
                raise ShapeMismatch(f"layer {i} has inconsistent shapes")


def forward(net, x):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != net.in_dim:
        raise ShapeMismatch(f"expected input of size {net.in_dim}, got {x.shape[-1]}")
    return apply(net.params, x)
