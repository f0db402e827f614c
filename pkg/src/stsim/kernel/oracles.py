"""Independent reference computations for the kernel checks.

None of these share code with the kernels they check: the BPTT oracle
pushes tangents forward through time one input at a time, the BN oracle
differentiates a from-scratch forward numerically, and the matmul oracle is
a scalar triple loop.
"""

from __future__ import annotations

import numpy as np


def _lif_trace(bn_in: np.ndarray, alpha: float, th_f: float, th_r: float):
    T = len(bn_in)
    U, S = [0.0] * T, [0.0] * T
    u, sp = 0.0, 0.0
    for t in range(T):
        u = alpha * u * (1.0 - sp) + bn_in[t]
        sp = 1.0 if u >= th_f else 0.0
        U[t], S[t] = u, sp
    mask = [1.0 if th_f < u < th_r else 0.0 for u in U]
    return U, S, mask


def _push(U, S, mask, alpha, start, du, ds, mm):
    """Propagate a tangent (du at U_start, ds at S_start) to later steps.

    Returns sum_t mm[t] * dS_t over t > start (dS_t from the surrogate).
    """
    T = len(U)
    acc = 0.0
    for t in range(start + 1, T):
        du = alpha * du * (1.0 - S[t - 1]) - alpha * U[t - 1] * ds
        ds = mask[t] * du
        acc += mm[t] * ds
    return acc


def unrolled_bptt(bn_in, mm_grad, alpha: float, th_f: float, th_r: float):
    """dL/dU and dL/dS per neuron for L = sum_t MM_t * S_t, forward mode.

    bn_in, mm_grad: (T, X). Spikes use the rectangular surrogate derivative.
    """
    bn_in = np.asarray(bn_in, dtype=np.float64)
    mm = np.asarray(mm_grad, dtype=np.float64)
    T, X = bn_in.shape
    dU = np.zeros((T, X))
    dS = np.zeros((T, X))
    for n in range(X):
        U, S, mask = _lif_trace(bn_in[:, n], alpha, th_f, th_r)
        g = mm[:, n]
        for j in range(T):
            # unit tangent on U_j: U_j feeds S_j through the mask
            ds_j = mask[j]
            dU[j, n] = g[j] * ds_j + _push(U, S, mask, alpha, j, 1.0, ds_j, g)
            # unit tangent on S_j alone
            dS[j, n] = g[j] + _push(U, S, mask, alpha, j, 0.0, 1.0, g)
    return dU, dS


def bn_reference(x, gamma, beta, eps):
    """Two-pass batch normalization, no shared intermediates with the kernel."""
    x = np.asarray(x, dtype=np.float64)
    mu = np.mean(x, axis=0)
    var = np.mean((x - mu) ** 2, axis=0)
    return gamma * (x - mu) / np.sqrt(var + eps) + beta


def bn_finite_difference(x, gamma, beta, eps, g, h: float = 1e-6):
    """Central differences of L = sum(g * y) w.r.t. x, gamma and beta."""
    x = np.asarray(x, dtype=np.float64)
    gamma = np.asarray(gamma, dtype=np.float64)
    beta = np.asarray(beta, dtype=np.float64)

    def loss(xx, gg, bb):
        return float(np.sum(g * bn_reference(xx, gg, bb, eps)))

    def diff(arr, f):
        out = np.zeros_like(arr)
        for idx in np.ndindex(arr.shape):
            old = arr[idx]
            arr[idx] = old + h
            lp = f()
            arr[idx] = old - h
            lm = f()
            arr[idx] = old
            out[idx] = (lp - lm) / (2 * h)
        return out

    x, gamma, beta = x.copy(), gamma.copy(), beta.copy()
    dx = diff(x, lambda: loss(x, gamma, beta))
    dgamma = diff(gamma, lambda: loss(x, gamma, beta))
    dbeta = diff(beta, lambda: loss(x, gamma, beta))
    return dx, dgamma, dbeta


def dense_matmul(a, b) -> np.ndarray:
    """Scalar triple loop, accumulating along the shared axis in order."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    B, C = a.shape
    K = b.shape[1]
    out = np.zeros((B, K))
    for i in range(B):
        for j in range(K):
            acc = 0.0
            for c in range(C):
                acc += a[i, c] * b[c, j]
            out[i, j] = acc
    return out
