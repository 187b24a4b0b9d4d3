"""Cooperative benchmark: both sellers jointly maximize their summed revenue.

The joint objective is not concave (each Epoch II stage contributes a 2x2
Hessian block with negative determinant whenever Epoch III is non-empty), so
the solver runs projected gradient ascent from many starting points and keeps
the best local maximum.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .core import EpochLayout, Scenario, Schedule, validate_scenario
from .reserve import algorithm1_search

MAX_ITERS = 10_000


def project_capped_simplex(v: np.ndarray, budget: float) -> np.ndarray:
    """Euclidean projection onto {x >= 0, sum(x) <= budget}."""
    x = np.maximum(v, 0.0)
    if x.sum() <= budget:
        return x
    if budget <= 0:
        return np.zeros_like(v)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - budget
    idx = np.arange(1, len(v) + 1)
    hits = np.nonzero(u - css / idx > 0)[0]
    rho = hits[-1] if len(hits) else 0  # index 0 always qualifies up to rounding
    theta = css[rho] / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


@dataclass
class _Problem:
    c0: float
    c1: float
    w1_shared: np.ndarray   # seller-1 weights on Epoch II stages
    w1_alone: np.ndarray    # seller-1 weights on Epoch III stages
    w2: np.ndarray          # seller-2 weights on Epoch II stages
    q1: float
    q2: float

    @property
    def m(self) -> int:
        return len(self.w1_shared)

    def split(self, z):
        m = self.m
        return z[:m], z[m:m + len(self.w1_alone)], z[m + len(self.w1_alone):]

    def value(self, z) -> float:
        a, b, c = self.split(z)
        shared = (self.c0 - self.c1 * (a + c)) * (a * self.w1_shared + c * self.w2)
        alone = (self.c0 - self.c1 * b) * b * self.w1_alone
        return float(shared.sum() + alone.sum())

    def grad(self, z) -> np.ndarray:
        a, b, c = self.split(z)
        price = self.c0 - self.c1 * (a + c)
        paid = a * self.w1_shared + c * self.w2
        ga = price * self.w1_shared - self.c1 * paid
        gc = price * self.w2 - self.c1 * paid
        gb = self.w1_alone * (self.c0 - 2 * self.c1 * b)
        return np.concatenate([ga, gb, gc])

    def project(self, z) -> np.ndarray:
        k = self.m + len(self.w1_alone)
        return np.concatenate([project_capped_simplex(z[:k], self.q1),
                               project_capped_simplex(z[k:], self.q2)])

    def kkt_residual(self, z) -> float:
        """Largest violation of first-order optimality across both budget blocks."""
        g = self.grad(z)
        k = self.m + len(self.w1_alone)
        worst = 0.0
        for block, grad in ((z[:k], g[:k]), (z[k:], g[k:])):
            if len(block) == 0:
                continue
            active = block > 1e-9 * max(1.0, block.sum())
            lam = grad[active].max() if active.any() else max(grad.max(), 0.0)
            if active.any():
                worst = max(worst, float(np.abs(grad[active] - lam).max()))
            worst = max(worst, float(np.maximum(grad[~active] - lam, 0.0).max(initial=0.0)))
        return worst


def _ascend(p: _Problem, z0: np.ndarray, step0: float) -> Tuple[np.ndarray, float]:
    z = p.project(z0)
    f = p.value(z)
    step = step0
    for _ in range(MAX_ITERS):
        cand = p.project(z + step * p.grad(z))
        fc = p.value(cand)
        if fc > f:
            moved = np.abs(cand - z).max()
            z, f = cand, fc
            if moved <= 1e-13 * max(1.0, p.q1 + p.q2):
                break
        else:
            step *= 0.5
            if step < step0 * 1e-12:
                break
    return z, f


@dataclass(frozen=True)
class CooperativeSolution:
    d1: Schedule
    d2: Schedule
    revenue1: float
    revenue2: float
    restarts: int
    best_values: Tuple[float, ...]
    kkt_residual: float

    @property
    def total(self) -> float:
        return self.revenue1 + self.revenue2

    @property
    def restart_spread(self) -> float:
        """Relative spread between the best and median restart objective."""
        vals = np.asarray(self.best_values)
        top = vals.max()
        return float((top - np.median(vals)) / max(1.0, abs(top)))


def _starts(p: _Problem, restarts: int, rng: np.random.Generator) -> List[np.ndarray]:
    k1 = p.m + len(p.w1_alone)
    w1 = np.concatenate([p.w1_shared, p.w1_alone])
    starts = []
    # seller 1 takes the heaviest stages first; seller 2 spreads by weight
    prio = np.zeros(k1)
    left = p.q1
    for i in np.argsort(-w1, kind="stable"):
        take = min(left, p.q1 / max(1, p.m))
        prio[i] = take
        left -= take
    starts.append(np.concatenate([prio, p.q2 * p.w2 / max(p.w2.sum(), 1e-300)]))
    starts.append(np.concatenate([p.q1 * w1 / w1.sum(), p.q2 * p.w2 / max(p.w2.sum(), 1e-300)]))
    starts.append(np.concatenate([np.full(k1, p.q1 / k1), np.full(p.m, p.q2 / p.m)]))
    while len(starts) < restarts:
        a = rng.dirichlet(np.ones(k1)) * p.q1
        b = rng.dirichlet(np.ones(p.m)) * p.q2
        starts.append(np.concatenate([a, b]))
    return starts


def solve_cooperative(s: Scenario, layout: EpochLayout, q1: float, q2_epoch2: float,
                      restarts: int = 32, seed: Optional[int] = 0) -> CooperativeSolution:
    """Joint revenue maximization over Epochs II and III (multi-start)."""
    validate_scenario(s)
    e2, e3 = list(layout.epoch2), list(layout.epoch3)
    p = _Problem(s.c0, s.c1,
                 np.array(e2, dtype=float), np.array(e3, dtype=float),
                 np.array([n - layout.n3 for n in e2], dtype=float), q1, q2_epoch2)
    step0 = 1.0 / (4.0 * s.c1 * max(e2 + e3))
    rng = np.random.default_rng(seed)
    best_z, best_f = None, -np.inf
    values = []
    for z0 in _starts(p, max(restarts, 1), rng):
        z, f = _ascend(p, z0, step0)
        values.append(f)
        if f > best_f:
            best_z, best_f = z, f
    a, b, c = p.split(best_z)
    d1 = {n: float(v) for n, v in zip(e2 + e3, np.concatenate([a, b]))}
    d2 = {n: float(v) for n, v in zip(e2, c)}
    price = s.c0 - s.c1 * (a + c)
    r1 = float((price * a * p.w1_shared).sum() + ((s.c0 - s.c1 * b) * b * p.w1_alone).sum())
    r2 = float((price * c * p.w2).sum())
    return CooperativeSolution(d1, d2, r1, r2, len(values), tuple(values),
                               p.kkt_residual(best_z))


@dataclass(frozen=True)
class SchemeRow:
    q1: float
    q2: float
    scheme: str
    revenue1: float
    revenue2: float

    @property
    def total(self) -> float:
        return self.revenue1 + self.revenue2


def proposed_revenues(s: Scenario, layout: EpochLayout, q1: float,
                      q2_epoch2: float) -> Tuple[float, float]:
    """Seller revenues over Epochs II and III under reserve search plus equilibrium play."""
    sc = s.with_budgets(q1, max(s.q2, q2_epoch2))
    res = algorithm1_search(sc, layout, q2_epoch2)
    return res.r_star, res.equilibrium.revenue2


def compare_schemes(s: Scenario, layout: EpochLayout, configs: Sequence[Tuple[float, float]],
                    restarts: int = 32, seed: Optional[int] = 0) -> List[SchemeRow]:
    """Proposed vs cooperative revenues per (q1, q2) configuration; Epoch I is ignored."""
    rows = []
    for q1, q2 in configs:
        sc = validate_scenario(s.with_budgets(q1, q2))
        r1, r2 = proposed_revenues(sc, layout, q1, q2)
        rows.append(SchemeRow(q1, q2, "proposed", r1, r2))
        coop = solve_cooperative(sc, layout, q1, q2, restarts, seed)
        rows.append(SchemeRow(q1, q2, "cooperative", coop.revenue1, coop.revenue2))
    return rows
