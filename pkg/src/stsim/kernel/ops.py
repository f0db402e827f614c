from __future__ import annotations

import numpy as np


def _check_binary(a: np.ndarray, name: str) -> None:
    if not np.all((a == 0) | (a == 1)):
        raise ValueError(f"{name} must be binary (0/1)")


def spike_matmul(spikes, weights) -> np.ndarray:
    """(B, C) spikes x (C, K) weights using additions only.

    Rows of ``weights`` are accumulated in increasing C order wherever a
    spike is present.
    """
    s = np.asarray(spikes)
    w = np.asarray(weights, dtype=np.float64)
    if s.ndim != 2 or w.ndim != 2 or s.shape[1] != w.shape[0]:
        raise ValueError(f"shape mismatch {s.shape} x {w.shape}")
    _check_binary(s, "spikes")
    fire = s.astype(bool)
    out = np.zeros((s.shape[0], w.shape[1]))
    for c in range(w.shape[0]):
        rows = fire[:, c]
        if rows.any():
            out[rows] += w[c]
    return out


def ssa_forward(Q, K, V, s_scale: float) -> np.ndarray:
    """Spiking self-attention without softmax: (Q K^T V) * s.

    Works on one (N, d_h) head instance or on stacked instances (..., N, d_h).
    """
    Q, K, V = (np.asarray(a, dtype=np.float64) for a in (Q, K, V))
    for a, n in ((Q, "Q"), (K, "K"), (V, "V")):
        _check_binary(a, n)
    if not (Q.shape == K.shape == V.shape):
        raise ValueError(f"Q, K, V shapes differ: {Q.shape}, {K.shape}, {V.shape}")
    scores = Q @ np.swapaxes(K, -1, -2)
    return (scores @ V) * s_scale


def residual_add(a, b) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    return a + b
