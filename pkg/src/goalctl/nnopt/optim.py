"""Adam and SOAP over pytrees of numpy arrays.

Both steps descend: ``params - lr * update``. Callers maximising an objective pass
negated gradients. Optimizer state is updated in place; new parameters are returned.
"""

from dataclasses import dataclass, field
import logging

import jax
import numpy as np

from goalctl.errors import EigendecompositionFailure

log = logging.getLogger(__name__)

_tree = jax.tree_util


@dataclass
class AdamState:
    lr: float = 3e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: list = None
    v: list = None


def _adam_direction(m, v, t, beta1, beta2, eps):
    m_hat = m / (1.0 - beta1**t)
    v_hat = v / (1.0 - beta2**t)
    return m_hat / (np.sqrt(v_hat) + eps)


def adam_step(state, params, grads):
    leaves, treedef = _tree.tree_flatten(params)
    g_leaves = _tree.tree_leaves(grads)
    if state.m is None:
        state.m = [np.zeros_like(p) for p in leaves]
        state.v = [np.zeros_like(p) for p in leaves]
    state.t += 1
    out = []
    for i, (p, g) in enumerate(zip(leaves, g_leaves)):
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g
        d = _adam_direction(state.m[i], state.v[i], state.t, state.beta1, state.beta2, state.eps)
        out.append(p - state.lr * d)
    return _tree.tree_unflatten(treedef, out)


@dataclass
class SoapState:
    """Adam run in the eigenbasis of Kronecker gradient factors.

    Per matrix parameter ``G`` (m x n): ``L <- b*L + (1-b) G G^T`` and
    ``R <- b*R + (1-b) G^T G``; eigenbases ``QL, QR`` are refreshed every
    ``precondition_frequency`` steps (``None`` keeps identity bases forever).
    The first moment lives in the parameter basis and is rotated on use, the second
    moment lives in the rotated basis. Vectors (biases) get plain Adam.
    """

    lr: float = 3e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    shampoo_beta: float = 0.95
    precondition_frequency: int | None = 10
    t: int = 0
    m: list = None
    v: list = None
    L: list = None
    R: list = None
    QL: list = None
    QR: list = None
    failures: int = field(default=0)


def _eigenbasis(mat):
    try:
        vals, vecs = np.linalg.eigh(mat)
    except np.linalg.LinAlgError as exc:
        raise EigendecompositionFailure(str(exc)) from exc
    if not np.all(np.isfinite(vecs)):
        raise EigendecompositionFailure("non-finite eigenvectors")
    return vecs


def soap_step(state, params, grads):
    leaves, treedef = _tree.tree_flatten(params)
    g_leaves = _tree.tree_leaves(grads)
    if state.m is None:
        state.m = [np.zeros_like(p) for p in leaves]
        state.v = [np.zeros_like(p) for p in leaves]
        state.L = [np.zeros((p.shape[0],) * 2) if p.ndim == 2 else None for p in leaves]
        state.R = [np.zeros((p.shape[1],) * 2) if p.ndim == 2 else None for p in leaves]
        state.QL = [np.eye(p.shape[0]) if p.ndim == 2 else None for p in leaves]
        state.QR = [np.eye(p.shape[1]) if p.ndim == 2 else None for p in leaves]
    state.t += 1
    b1, b2, sb = state.beta1, state.beta2, state.shampoo_beta
    freq = state.precondition_frequency
    out = []
    for i, (p, g) in enumerate(zip(leaves, g_leaves)):
        state.m[i] = b1 * state.m[i] + (1.0 - b1) * g
        if p.ndim != 2:
            state.v[i] = b2 * state.v[i] + (1.0 - b2) * g * g
            out.append(p - state.lr * _adam_direction(state.m[i], state.v[i], state.t, b1, b2, state.eps))
            continue
        if freq is not None:
            state.L[i] = sb * state.L[i] + (1.0 - sb) * (g @ g.T)
            state.R[i] = sb * state.R[i] + (1.0 - sb) * (g.T @ g)
            if state.t == 1 or state.t % freq == 0:
                try:
                    state.QL[i] = _eigenbasis(state.L[i])
                    state.QR[i] = _eigenbasis(state.R[i])
                except EigendecompositionFailure as exc:
                    # keep the previous bases; this step degenerates to Adam there
                    state.failures += 1
                    log.warning("SOAP eigendecomposition failed (%s); using previous basis", exc)
        ql, qr = state.QL[i], state.QR[i]
        g_rot = ql.T @ g @ qr
        state.v[i] = b2 * state.v[i] + (1.0 - b2) * g_rot * g_rot
        m_rot = ql.T @ state.m[i] @ qr
        d_rot = _adam_direction(m_rot, state.v[i], state.t, b1, b2, state.eps)
        out.append(p - state.lr * (ql @ d_rot @ qr.T))
    return _tree.tree_unflatten(treedef, out)


def make_optimizer(name, **kwargs):
    """Return ``(state, step_fn)`` for ``"adam"`` or ``"soap"``."""
    if name == "adam":
        return AdamState(**kwargs), adam_step
    if name == "soap":
        return SoapState(**kwargs), soap_step
    raise ValueError(f"unknown optimizer {name!r}")
