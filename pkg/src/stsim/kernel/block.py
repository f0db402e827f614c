"""One spiking transformer block, forward and hand-written backward.

Rows are laid out (T, BS, N) with T outermost, so a (m, D) activation
reshapes to the (T, X) view the LIF functions expect without copying.
Runs at desk scale to measure spike / mask / gradient sparsity.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bn import BnCache, bn_backward, bn_forward
from .lif import GradState, LifState, grad_backward, soma_forward
from .ops import residual_add, ssa_forward

LINEARS = ("Q", "K", "V", "Z", "A", "B")


@dataclass
class BlockShape:
    T: int
    BS: int
    N: int
    d: int
    h: int
    mlp_ratio: int = 4

    def __post_init__(self):
        if self.d % self.h:
            raise ValueError(f"d={self.d} not divisible by h={self.h}")

    @property
    def m(self) -> int:
        return self.T * self.BS * self.N

    @property
    def d_h(self) -> int:
        return self.d // self.h


@dataclass
class BlockParams:
    W: dict[str, np.ndarray]
    gamma: dict[str, np.ndarray]
    beta: dict[str, np.ndarray]


def init_params(shape: BlockShape, rng: np.random.Generator) -> BlockParams:
    d, f = shape.d, shape.d * shape.mlp_ratio
    io = {"Q": (d, d), "K": (d, d), "V": (d, d), "Z": (d, d), "A": (d, f), "B": (f, d)}
    W = {k: rng.normal(0.0, 1.0 / np.sqrt(i), size=(i, o)) for k, (i, o) in io.items()}
    gamma = {k: np.ones(io[k][1]) for k in LINEARS}
    beta = {k: np.zeros(io[k][1]) for k in LINEARS}
    return BlockParams(W, gamma, beta)


@dataclass
class BlockTrace:
    y: np.ndarray
    dx: np.ndarray
    dW: dict[str, np.ndarray]
    dgamma: dict[str, np.ndarray]
    dbeta: dict[str, np.ndarray]
    lif: dict[str, LifState] = field(default_factory=dict)
    grad: dict[str, GradState] = field(default_factory=dict)


def _heads(a: np.ndarray, s: BlockShape) -> np.ndarray:
    # (m, d) -> (T, BS, h, N, d_h)
    return a.reshape(s.T, s.BS, s.N, s.h, s.d_h).transpose(0, 1, 3, 2, 4)


def _unheads(a: np.ndarray, s: BlockShape) -> np.ndarray:
    return a.transpose(0, 1, 3, 2, 4).reshape(s.m, s.d)


def run_block(x, dy, params: BlockParams, shape: BlockShape, cfg) -> BlockTrace:
    """Forward then backward for upstream gradient dy = dL/dY.

    cfg supplies alpha, th_f, th_r, eps and s_scale.
    """
    s = shape
    x = np.asarray(x, dtype=np.float64).reshape(s.m, s.d)
    dy = np.asarray(dy, dtype=np.float64).reshape(s.m, s.d)
    W, gam, bet = params.W, params.gamma, params.beta
    T = s.T

    def soma(a):
        st = soma_forward(a.reshape(T, -1), cfg)
        return st, st.S.reshape(a.shape)

    def grad(st, g):
        gs = grad_backward(st, g.reshape(T, -1), cfg)
        return gs, gs.dU.reshape(g.shape)

    lif: dict[str, LifState] = {}
    bn: dict[str, BnCache] = {}

    # forward
    lif["in"], xs = soma(x)
    spikes = {}
    for p in ("Q", "K", "V"):
        a, bn[p] = bn_forward(xs @ W[p], gam[p], bet[p], cfg.eps)
        lif[p], spikes[p] = soma(a)
    q, k, v = (_heads(spikes[p], s) for p in ("Q", "K", "V"))
    attn = _unheads(ssa_forward(q, k, v, cfg.s_scale), s)
    lif["attn"], os_ = soma(attn)
    z, bn["Z"] = bn_forward(os_ @ W["Z"], gam["Z"], bet["Z"], cfg.eps)
    x1 = residual_add(z, x)
    lif["mlp_in"], ms = soma(x1)
    a, bn["A"] = bn_forward(ms @ W["A"], gam["A"], bet["A"], cfg.eps)
    lif["A"], as_ = soma(a)
    b, bn["B"] = bn_forward(as_ @ W["B"], gam["B"], bet["B"], cfg.eps)
    y = residual_add(b, x1)

    # backward
    gst: dict[str, GradState] = {}
    dW, dg, db = {}, {}, {}

    def bn_linear_bp(name, g_out, inp):
        d_pre, dg[name], db[name] = bn_backward(g_out, bn[name])
        dW[name] = inp.T @ d_pre
        return d_pre @ W[name].T

    dx1 = dy.copy()
    d_as = bn_linear_bp("B", dy, as_)
    gst["A"], d_abn = grad(lif["A"], d_as)
    d_ms = bn_linear_bp("A", d_abn, ms)
    gst["mlp_in"], d_x1_mlp = grad(lif["mlp_in"], d_ms)
    dx1 = dx1 + d_x1_mlp
    dx = dx1.copy()
    d_os = bn_linear_bp("Z", dx1, os_)
    gst["attn"], d_attn = grad(lif["attn"], d_os)

    dO = _heads(d_attn, s) * cfg.s_scale
    kt = np.swapaxes(k, -1, -2)
    scores = q @ kt
    dv = np.swapaxes(scores, -1, -2) @ dO
    d_scores = dO @ np.swapaxes(v, -1, -2)
    dq = d_scores @ k
    dk = np.swapaxes(d_scores, -1, -2) @ q
    d_spk = {"Q": _unheads(dq, s), "K": _unheads(dk, s), "V": _unheads(dv, s)}

    d_xs = np.zeros_like(xs)
    for p in ("Q", "K", "V"):
        gst[p], d_pbn = grad(lif[p], d_spk[p])
        d_xs += bn_linear_bp(p, d_pbn, xs)
    gst["in"], d_x_in = grad(lif["in"], d_xs)
    dx = dx + d_x_in
    return BlockTrace(y=y, dx=dx, dW=dW, dgamma=dg, dbeta=db, lif=lif, grad=gst)


def probe_block(model_cfg, BS: int, P: int, d_model: int, h: int, seed: int) -> BlockTrace:
    """Gaussian input and upstream gradient through a randomly initialized block."""
    shape = BlockShape(T=model_cfg.T, BS=BS, N=P * P, d=d_model, h=h,
                       mlp_ratio=model_cfg.mlp_ratio)
    rng = np.random.default_rng(seed)
    params = init_params(shape, rng)
    x = rng.normal(size=(shape.m, shape.d))
    dy = rng.normal(size=(shape.m, shape.d))
    return run_block(x, dy, params, shape, model_cfg)
