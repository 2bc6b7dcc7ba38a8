"""Batched univariate truncated power series.

Coefficient arrays have the series index on the LAST axis (length order+1);
all leading axes broadcast, so a whole batch of quadrature nodes moves through
the profile recurrences in a handful of vector operations.  This is the
one-variable counterpart of :mod:`fminlab.jets`, specialized for speed.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import SingularityError


def u_const(value: np.ndarray | float, order: int) -> np.ndarray:
    value = np.asarray(value, float)
    out = np.zeros(value.shape + (order + 1,))
    out[..., 0] = value
    return out


def u_var(value: np.ndarray | float, order: int) -> np.ndarray:
    out = u_const(value, order)
    if order >= 1:
        out[..., 1] = 1.0
    return out


def u_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    K = a.shape[-1]
    out = np.zeros(np.broadcast_shapes(a.shape[:-1], b.shape[:-1]) + (K,))
    for k in range(K):
        for i in range(k + 1):
            out[..., k] += a[..., i] * b[..., k - i]
    return out


def u_div(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    K = a.shape[-1]
    b0 = b[..., 0]
    if np.any(np.abs(b0) < 1e-300):
        raise SingularityError("series division by zero constant term")
    shape = np.broadcast_shapes(a.shape[:-1], b.shape[:-1]) + (K,)
    a = np.broadcast_to(a, shape)
    b = np.broadcast_to(b, shape)
    out = np.zeros(shape)
    out[..., 0] = a[..., 0] / b[..., 0]
    for k in range(1, K):
        acc = a[..., k].copy()
        for i in range(1, k + 1):
            acc -= b[..., i] * out[..., k - i]
        out[..., k] = acc / b[..., 0]
    return out


def _compose(a: np.ndarray, coef: list[np.ndarray]) -> np.ndarray:
    """Horner evaluation of sum coef[k] * (a - a0)^k."""
    K = a.shape[-1]
    hat = a.copy()
    hat[..., 0] = 0.0
    out = u_const(coef[-1], K - 1)
    for c in reversed(coef[:-1]):
        out = u_mul(out, hat)
        out[..., 0] += c
    return out


def u_sin(a: np.ndarray) -> np.ndarray:
    K = a.shape[-1]
    a0 = a[..., 0]
    coef = [np.sin(a0 + 0.5 * math.pi * k) / math.factorial(k) for k in range(K)]
    return _compose(a, coef)


def u_cos(a: np.ndarray) -> np.ndarray:
    K = a.shape[-1]
    a0 = a[..., 0]
    coef = [np.cos(a0 + 0.5 * math.pi * k) / math.factorial(k) for k in range(K)]
    return _compose(a, coef)


def u_exp(a: np.ndarray) -> np.ndarray:
    K = a.shape[-1]
    e = np.exp(a[..., 0])
    coef = [e / math.factorial(k) for k in range(K)]
    return _compose(a, coef)


def u_deriv(a: np.ndarray) -> np.ndarray:
    """Series of the derivative, one order shorter (padded with a zero)."""
    K = a.shape[-1]
    out = np.zeros_like(a)
    for k in range(K - 1):
        out[..., k] = (k + 1) * a[..., k + 1]
    return out


def u_integrate(a: np.ndarray, const: np.ndarray | float) -> np.ndarray:
    """Antiderivative with the given constant term, same length (top
    coefficient of `a` is dropped)."""
    out = np.zeros_like(a)
    out[..., 0] = const
    K = a.shape[-1]
    for k in range(1, K):
        out[..., k] = a[..., k - 1] / k
    return out


def u_eval(a: np.ndarray, ds: np.ndarray | float) -> np.ndarray:
    """Horner evaluation of the polynomial at offset ds."""
    ds = np.asarray(ds, float)
    out = a[..., -1] * np.ones_like(ds)
    for k in range(a.shape[-1] - 2, -1, -1):
        out = out * ds + a[..., k]
    return out
