"""LIF neuron (SOMA) forward pass and its BPTT counterpart (GRAD).

Arrays are shaped (T, X): timestep first, every neuron flattened into X.
The step function's derivative is replaced by the binary spike-gradient mask
(a rectangular window of height 1 on th_f < U < th_r).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class LifState:
    U: np.ndarray
    S: np.ndarray
    mask: np.ndarray


@dataclass
class GradState:
    dU: np.ndarray
    dS: np.ndarray


def _as_tx(a, name: str) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2:
        raise ValueError(f"{name} must be shaped (T, X), got {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains non-finite values")
    return a


def soma_forward(bn_out, cfg) -> LifState:
    """Integrate, fire and reset over T steps, starting from U_0 = S_0 = 0.

    ``cfg`` supplies alpha, th_f and th_r (a ModelConfig works).
    """
    if not cfg.th_r > cfg.th_f:
        raise ValueError(f"th_r={cfg.th_r} must exceed th_f={cfg.th_f}")
    x = _as_tx(bn_out, "bn_out")
    T = x.shape[0]
    U = np.empty_like(x)
    S = np.empty_like(x)
    u_prev = np.zeros(x.shape[1])
    s_prev = np.zeros(x.shape[1])
    for t in range(T):
        u = cfg.alpha * u_prev * (1.0 - s_prev) + x[t]
        s = (u >= cfg.th_f).astype(np.float64)
        U[t], S[t] = u, s
        u_prev, s_prev = u, s
    mask = ((U > cfg.th_f) & (U < cfg.th_r)).astype(np.float64)
    return LifState(U=U, S=S, mask=mask)


def grad_backward(lif: LifState, mm_grad, cfg) -> GradState:
    """Reverse-time recursion with grad(U_{T+1}) = 0.

    dS_t = dU_{t+1} * (-alpha * U_t) + MM_t
    dU_t = dU_{t+1} * alpha * (1 - S_t) + dS_t * mask_t
    """
    g = _as_tx(mm_grad, "mm_grad")
    if g.shape != lif.U.shape:
        raise ValueError(f"mm_grad shape {g.shape} does not match state {lif.U.shape}")
    a = cfg.alpha
    T = g.shape[0]
    dU = np.empty_like(g)
    dS = np.empty_like(g)
    du_next = np.zeros(g.shape[1])
    for t in range(T - 1, -1, -1):
        ds = du_next * (-a * lif.U[t]) + g[t]
        du = du_next * a * (1.0 - lif.S[t]) + ds * lif.mask[t]
        dS[t], dU[t] = ds, du
        du_next = du
    return GradState(dU=dU, dS=dS)
