"""Reverse-mode gradients.

A :class:`GradTape` holds the primal value of one forward evaluation together with
its pullback, so a single ``backward`` call yields exact adjoints for the parameters
and, on request, for the inputs. The pullback itself comes from ``jax.vjp``.
"""

from dataclasses import dataclass
from typing import Any, Callable

import jax
import jax.numpy as jnp
import numpy as np


@dataclass
class GradTape:
    value: Any
    pullback: Callable
    with_inputs: bool = False


def _to_numpy(tree):
    return jax.tree_util.tree_map(lambda a: np.asarray(a, dtype=float), tree)


def record(fn, params, *inputs, with_inputs=False):
    """Evaluate ``fn(params, *inputs)`` and keep what ``backward`` needs."""
    value, pullback = jax.vjp(fn, params, *inputs)
    return GradTape(value, pullback, with_inputs)


def backward(tape, cotangent=None):
    """Adjoints of a scalar (or ``cotangent``-weighted) output.

    Returns parameter gradients, or ``(param_grads, input_grads)`` when the tape was
    recorded with ``with_inputs=True``.
    """
    if cotangent is None:
        cotangent = jnp.ones_like(tape.value)
    grads = tape.pullback(cotangent)
    if tape.with_inputs:
        return _to_numpy(grads[0]), tuple(_to_numpy(g) for g in grads[1:])
    return _to_numpy(grads[0])


def value_and_grad(fn):
    """Compiled ``(value, param_grads)`` for repeated training-loop use."""
    compiled = jax.jit(jax.value_and_grad(fn))

    def run(params, *inputs):
        value, grads = compiled(params, *inputs)
        return float(value), _to_numpy(grads)

    return run
