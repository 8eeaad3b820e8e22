"""Dense numeric kernels: losses, the forecast normalizer, Adam, linear layers.

Everything works on float64 numpy arrays and is pure; optimizer state is
passed in and a fresh copy is returned.
"""
from dataclasses import dataclass, replace

import numpy as np

from .exceptions import DegenerateTargetError, DimensionError

EPS_NORM = 1e-12


def _as_vec(a, name="a"):
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 1 or a.size == 0:
        raise DimensionError(f"{name} must be a non-empty 1-d vector, got shape {a.shape}")
    return a


def _same_shape(a, b):
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch: {a.shape} vs {b.shape}")


def dot(a, b):
    a, b = _as_vec(a), _as_vec(b, "b")
    _same_shape(a, b)
    return float(a @ b)


def cosine_similarity(a, b):
    """Cosine of the angle between ``a`` and ``b``; 0 if either is ~zero."""
    a, b = _as_vec(a), _as_vec(b, "b")
    _same_shape(a, b)
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na < EPS_NORM or nb < EPS_NORM:
        return 0.0
    return float(a @ b / (na * nb))


def cosine_matrix(X, P):
    """Row-wise cosine similarities between ``X`` (n, d) and ``P`` (k, d).

    Rows with near-zero norm on either side produce 0.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    P = np.atleast_2d(np.asarray(P, dtype=np.float64))
    if X.shape[1] != P.shape[1]:
        raise DimensionError(f"dimension mismatch: {X.shape[1]} vs {P.shape[1]}")
    xn = np.linalg.norm(X, axis=1)
    pn = np.linalg.norm(P, axis=1)
    xs = np.where(xn < EPS_NORM, 0.0, 1.0 / np.where(xn < EPS_NORM, 1.0, xn))
    ps = np.where(pn < EPS_NORM, 0.0, 1.0 / np.where(pn < EPS_NORM, 1.0, pn))
    return (X * xs[:, None]) @ (P * ps[:, None]).T


def mse_loss(pred, target):
    """Mean squared error over all entries and its gradient w.r.t. ``pred``."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    _same_shape(pred, target)
    diff = pred - target
    loss = float(np.mean(diff**2))
    return loss, 2.0 * diff / diff.size


def cosine_loss(pred, target):
    """``1 - cos(pred, target)`` and its gradient w.r.t. ``pred``.

    When ``pred`` is ~zero the loss is 1 and the returned gradient is
    ``-target/|target|``, pointing descent towards the target.
    """
    pred, target = _as_vec(pred, "pred"), _as_vec(target, "target")
    _same_shape(pred, target)
    nt = np.linalg.norm(target)
    if nt < EPS_NORM:
        raise DegenerateTargetError("cosine loss target has zero norm")
    npred = np.linalg.norm(pred)
    if npred < EPS_NORM:
        return 1.0, -target / nt
    cos = float(pred @ target / (npred * nt))
    grad = -(target / (npred * nt) - cos * pred / npred**2)
    return 1.0 - cos, grad


def batch_cosine_loss(pred, target):
    """Mean of per-row cosine losses for 2-d ``pred``/``target``.

    Returns the mean loss and the gradient of that mean w.r.t. ``pred``.
    """
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    _same_shape(pred, target)
    n = pred.shape[0]
    total = 0.0
    grad = np.empty_like(pred)
    for i in range(n):
        loss_i, grad[i] = cosine_loss(pred[i], target[i])
        total += loss_i
    return total / n, grad / n


def normalize_forecast(v):
    """Shift a forecast by its minimum and rescale it to sum to one.

    A constant vector maps to the uniform distribution.
    """
    v = _as_vec(v, "v")
    if not np.all(np.isfinite(v)):
        raise ValueError("forecast contains non-finite values")
    shifted = v - v.min()
    total = shifted.sum()
    if total < EPS_NORM:
        return np.full(v.shape, 1.0 / v.size)
    return shifted / total


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def like(cls, params, **hyper):
        params = np.asarray(params, dtype=np.float64)
        return cls(np.zeros_like(params), np.zeros_like(params), **hyper)


def adam_step(params, grads, state):
    """One bias-corrected Adam update. Returns ``(new_params, new_state)``."""
    params = np.asarray(params, dtype=np.float64)
    grads = np.asarray(grads, dtype=np.float64)
    _same_shape(params, grads)
    _same_shape(params, state.m)
    t = state.t + 1
    m = state.beta1 * state.m + (1.0 - state.beta1) * grads
    v = state.beta2 * state.v + (1.0 - state.beta2) * grads**2
    m_hat = m / (1.0 - state.beta1**t)
    v_hat = v / (1.0 - state.beta2**t)
    new_params = params - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return new_params, replace(state, m=m, v=v, t=t)


def linear_forward(W, b, x):
    """``y = W x + b``. ``x`` may be a vector or an (n, in) batch."""
    W = np.asarray(W, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if W.ndim != 2 or b.shape != (W.shape[0],) or x.shape[-1] != W.shape[1]:
        raise DimensionError(
            f"incompatible layer: W {W.shape}, b {b.shape}, x {x.shape}"
        )
    return x @ W.T + b


def linear_backward(W, b, x, upstream):
    """Gradients ``(dW, db, dx)`` of a linear layer given ``dL/dy``.

    For a batch the parameter gradients are summed over rows.
    """
    W = np.asarray(W, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    g = np.asarray(upstream, dtype=np.float64)
    if g.shape[-1] != W.shape[0] or x.shape[-1] != W.shape[1] or g.ndim != x.ndim:
        raise DimensionError(
            f"incompatible layer: W {W.shape}, x {x.shape}, upstream {g.shape}"
        )
    if x.ndim == 1:
        return np.outer(g, x), g.copy(), W.T @ g
    return g.T @ x, g.sum(axis=0), g @ W
