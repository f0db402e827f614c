"""Batch normalization over m samples x D features, forward and backward.

The forward pass computes the variance as E[x^2] - mu^2 and keeps the
centered inputs N = x - mu; the backward pass consumes those instead of
recomputing them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class BnCache:
    mu: np.ndarray
    xsq: np.ndarray
    var: np.ndarray
    sqrt_d: np.ndarray
    N: np.ndarray
    gamma: np.ndarray
    beta: np.ndarray

    @property
    def m(self) -> int:
        return self.N.shape[0]


@dataclass
class RunningStats:
    """Inference-time statistics, updated by momentum during training."""

    mean: np.ndarray
    var: np.ndarray
    momentum: float = 0.1

    @classmethod
    def zeros(cls, D: int, momentum: float = 0.1) -> "RunningStats":
        return cls(np.zeros(D), np.ones(D), momentum)

    def update(self, cache: BnCache) -> None:
        k = self.momentum
        self.mean = (1 - k) * self.mean + k * cache.mu
        self.var = (1 - k) * self.var + k * cache.var


def bn_forward(x, gamma, beta, eps: float, running: RunningStats | None = None):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError(f"x must be (m, D), got {x.shape}")
    m, D = x.shape
    if m < 2:
        raise ValueError(f"need at least 2 samples for batch statistics, got m={m}")
    gamma = np.broadcast_to(np.asarray(gamma, dtype=np.float64), (D,)).copy()
    beta = np.broadcast_to(np.asarray(beta, dtype=np.float64), (D,)).copy()

    mu = x.sum(axis=0) / m
    xsq = (x * x).sum(axis=0) / m
    var = xsq - mu * mu
    sqrt_d = np.sqrt(var + eps)
    N = x - mu
    y = gamma * (N / sqrt_d) + beta

    cache = BnCache(mu=mu, xsq=xsq, var=var, sqrt_d=sqrt_d, N=N, gamma=gamma, beta=beta)
    if running is not None:
        running.update(cache)
    return y, cache


def bn_backward(g, cache: BnCache):
    """Gradients w.r.t. x, gamma, beta for upstream gradient g = dL/dy."""
    g = np.asarray(g, dtype=np.float64)
    if g.shape != cache.N.shape:
        raise ValueError(f"g shape {g.shape} does not match cached {cache.N.shape}")
    if np.any(cache.gamma == 0):
        raise ValueError("gamma has zero entries; dgamma = S_MN / gamma is undefined")
    m = cache.m
    sq = cache.sqrt_d
    N = cache.N

    M = cache.gamma * g / sq
    S_N = N.sum(axis=0)
    S_M = M.sum(axis=0)
    S_MN = (M * N).sum(axis=0)

    dgamma = S_MN / cache.gamma
    dbeta = g.sum(axis=0)
    sq2 = sq * sq
    dx = M - N * (S_MN / (m * sq2)) + (S_N * S_MN) / (sq2 * m * m) - S_M / m
    return dx, dgamma, dbeta
