"""Kernel validation against the independent oracles."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import RunConfig
from .kernel.bn import bn_backward, bn_forward
from .kernel.lif import grad_backward, soma_forward
from .kernel.ops import spike_matmul
from .kernel.oracles import bn_finite_difference, dense_matmul, unrolled_bptt

BPTT_TOL = 1e-10
BN_TOL = 1e-4
BN_SUM_TOL = 1e-6


@dataclass
class CheckResult:
    name: str
    instances: int
    max_error: float
    tolerance: float
    worst_case: str = ""

    @property
    def passed(self) -> bool:
        return self.max_error <= self.tolerance


@dataclass
class GradcheckSummary:
    seed: int
    checks: list[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def lines(self) -> list[str]:
        out = []
        for c in self.checks:
            tag = "PASS" if c.passed else "FAIL"
            line = f"{tag} {c.name}: max error {c.max_error:.3e} (tol {c.tolerance:.0e}, n={c.instances})"
            if not c.passed and c.worst_case:
                line += f" worst case: {c.worst_case}"
            out.append(line)
        return out


def rel_err(a: np.ndarray, b: np.ndarray) -> float:
    """Max abs difference scaled by the reference's max magnitude."""
    scale = float(np.max(np.abs(b))) if b.size else 0.0
    diff = float(np.max(np.abs(a - b))) if a.size else 0.0
    if scale == 0.0:
        return diff
    return diff / scale


def check_bptt(model, rng: np.random.Generator, n: int, corrupt: bool = False,
               max_T: int = 4, max_X: int = 8) -> CheckResult:
    worst, case = 0.0, ""
    for i in range(n):
        T = int(rng.integers(1, max_T + 1))
        X = int(rng.integers(1, max_X + 1))
        x = rng.normal(model.th_f, 1.0, size=(T, X))
        g = rng.normal(size=(T, X))
        gs = grad_backward(soma_forward(x, model), g, model)
        dU = gs.dU * (1 + 1e-3) if corrupt else gs.dU
        ref_u, ref_s = unrolled_bptt(x, g, model.alpha, model.th_f, model.th_r)
        err = max(rel_err(dU, ref_u), rel_err(gs.dS, ref_s))
        if err > worst:
            worst, case = err, f"instance {i} (T={T}, X={X})"
    return CheckResult("bptt_vs_unrolled", n, worst, BPTT_TOL, case)


def check_bn(model, rng: np.random.Generator, n: int, corrupt: bool = False,
             m: int = 8, D: int = 4) -> list[CheckResult]:
    names = ("bn_dx", "bn_dgamma", "bn_dbeta")
    worst = dict.fromkeys(names, 0.0)
    cases = dict.fromkeys(names, "")
    sum_worst, sum_case = 0.0, ""
    for i in range(n):
        x = rng.normal(size=(m, D)) * rng.uniform(0.5, 3.0) + rng.normal()
        gamma = rng.uniform(0.5, 2.0, size=D) * rng.choice([-1.0, 1.0], size=D)
        beta = rng.normal(size=D)
        g = rng.normal(size=(m, D))
        _, cache = bn_forward(x, gamma, beta, model.eps)
        dx, dgamma, dbeta = bn_backward(g, cache)
        if corrupt:
            dx = dx * 1.01 + 1e-3
        fd = bn_finite_difference(x, gamma, beta, model.eps, g)
        for name, got, ref in zip(names, (dx, dgamma, dbeta), fd):
            err = float(np.linalg.norm(got - ref) / max(np.linalg.norm(ref), 1e-300))
            if err > worst[name]:
                worst[name], cases[name] = err, f"instance {i}"
        s = float(np.max(np.abs(dx.sum(axis=0))))
        if s > sum_worst:
            sum_worst, sum_case = s, f"instance {i}"
    out = [CheckResult(k, n, worst[k], BN_TOL, cases[k]) for k in names]
    out.append(CheckResult("bn_dx_feature_sum", n, sum_worst, BN_SUM_TOL, sum_case))
    return out


def check_spike_matmul(rng: np.random.Generator, n: int, corrupt: bool = False,
                       max_dim: int = 8) -> CheckResult:
    bad, case = 0, ""
    for i in range(n):
        B, C, K = (int(v) for v in rng.integers(1, max_dim + 1, size=3))
        s = rng.integers(0, 2, size=(B, C)).astype(np.float64)
        w = rng.normal(size=(C, K))
        got = spike_matmul(s, w)
        if corrupt:
            got = got + 1e-12
        if not np.array_equal(got, dense_matmul(s, w)):
            bad += 1
            case = case or f"instance {i} ({B}x{C}x{K})"
    return CheckResult("spike_matmul_exact", n, float(bad), 0.0, case)


def run_gradcheck(cfg: RunConfig, seed: int, corrupt: bool = False, n_bptt: int = 200,
                  n_bn: int = 20, n_matmul: int = 200) -> GradcheckSummary:
    """Runs every kernel check; ``corrupt`` perturbs the analytic results."""
    rng = np.random.default_rng(seed)
    summary = GradcheckSummary(seed=seed)
    summary.checks.append(check_bptt(cfg.model, rng, n_bptt, corrupt))
    summary.checks.extend(check_bn(cfg.model, rng, n_bn, corrupt))
    summary.checks.append(check_spike_matmul(rng, n_matmul, corrupt))
    return summary
