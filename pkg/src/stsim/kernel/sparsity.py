from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lif import GradState, LifState


@dataclass(frozen=True)
class SparsityStats:
    """Fractions of active spikes, active mask bits and nonzero potential gradients."""

    s_s: float
    s_smg: float
    s_pg: float

    def __post_init__(self):
        for name in ("s_s", "s_smg", "s_pg"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} outside [0, 1]")


def measure_sparsity(lif_states: list[LifState],
                     grad_states: list[GradState] | None = None) -> SparsityStats:
    """Element-weighted means over every SOMA site (and GRAD site) of a pass.

    Without gradient states s_pg is reported as 0.
    """
    if not lif_states:
        raise ValueError("no LIF states: empty pass")
    n = sum(st.S.size for st in lif_states)
    if n == 0:
        raise ValueError("empty pass")
    s_s = sum(float(st.S.sum()) for st in lif_states) / n
    s_smg = sum(float(st.mask.sum()) for st in lif_states) / n
    s_pg = 0.0
    if grad_states:
        ng = sum(gs.dU.size for gs in grad_states)
        s_pg = sum(int(np.count_nonzero(gs.dU)) for gs in grad_states) / ng
    return SparsityStats(s_s=s_s, s_smg=s_smg, s_pg=s_pg)
