"""Single-seller weighted concave allocation and stock inference.

Every monopoly problem in the model has the form

    max  sum_n w_n (a_n - c1 d_n) d_n   s.t.  sum_n d_n <= Q,  d_n >= 0

with a_n = c0 for a pure monopoly and a_n = c0 - c1 * (opponent offer) for a
best response.  The optimum is d_n = max(0, (a_n - lam / w_n) / (2 c1)) where
the budget multiplier ``lam`` is found by bisection.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

from .core import EpochLayout, Scenario, Schedule, SolverError, stage_weight

MAX_BISECTION_ITERS = 200


@dataclass(frozen=True)
class MonopolyProblem:
    weights: Tuple[int, ...]
    budget: float
    c0: float
    c1: float

    def __post_init__(self):
        if any(w <= 0 for w in self.weights):
            raise ValueError("weights must be strictly positive")
        if self.budget < 0:
            raise ValueError("budget must be non-negative")


@dataclass(frozen=True)
class MonopolySolution:
    allocation: Tuple[float, ...]
    lam: float
    objective: float


def _alloc(intercepts, weights, c1, lam):
    return [max(0.0, (a - lam / w) / (2.0 * c1)) for a, w in zip(intercepts, weights)]


def waterfill(intercepts: Sequence[float], weights: Sequence[float], c1: float,
              budget: float, tol: float = 1e-9) -> Tuple[List[float], float]:
    """Solve the separable concave allocation; returns (allocation, multiplier)."""
    if not weights:
        return [], 0.0
    cap = sum(max(0.0, a) for a in intercepts) / (2.0 * c1)
    if cap <= budget:
        # budget slack: every stage sits at its unconstrained optimum
        return _alloc(intercepts, weights, c1, 0.0), 0.0
    hi = max(max(a, 0.0) * w for a, w in zip(intercepts, weights))
    if budget <= 0:
        return [0.0] * len(weights), hi
    lo = 0.0
    target = tol * max(1.0, budget)
    lam = 0.5 * (lo + hi)
    for _ in range(MAX_BISECTION_ITERS):
        lam = 0.5 * (lo + hi)
        excess = sum(_alloc(intercepts, weights, c1, lam)) - budget
        if abs(excess) <= target:
            break
        if excess > 0:
            lo = lam
        else:
            hi = lam
        if hi - lo <= 4e-16 * hi:
            break
    else:
        raise SolverError("budget bisection did not converge")
    if abs(sum(_alloc(intercepts, weights, c1, lam)) - budget) > target:
        raise SolverError(
            f"budget residual above tolerance {target:g}; tolerance too tight")

    # closed-form multiplier on the active set removes the bisection residual
    active = [(a, w) for a, w in zip(intercepts, weights) if a - lam / w > 0]
    exact = (sum(a for a, _ in active) - 2.0 * c1 * budget) / sum(1.0 / w for _, w in active)
    d = _alloc(intercepts, weights, c1, exact)
    consistent = all((a - exact / w > 0) == (a - lam / w > 0)
                     for a, w in zip(intercepts, weights))
    if consistent and exact >= 0:
        return d, exact
    return _alloc(intercepts, weights, c1, lam), lam


def objective(intercepts, weights, c1, d) -> float:
    return sum(w * (a - c1 * x) * x for a, w, x in zip(intercepts, weights, d))


def solve_weighted_allocation(p: MonopolyProblem, tol: float = 1e-9) -> MonopolySolution:
    """Maximize sum_n w_n (c0 - c1 d_n) d_n under a total budget."""
    if not p.weights:
        raise ValueError("at least one stage is required")
    a = [p.c0] * len(p.weights)
    d, lam = waterfill(a, p.weights, p.c1, p.budget, tol)
    return MonopolySolution(tuple(d), lam, objective(a, p.weights, p.c1, d))


def plan_monopoly_epoch(s: Scenario, layout: EpochLayout, seller: int,
                        start_stage: int, budget: float) -> Schedule:
    """Optimal monopoly schedule for ``seller`` over its stages ``start_stage``..end."""
    stages = [n for n in layout.stages_of(seller) if n <= start_stage]
    if start_stage not in layout.stages_of(seller):
        raise ValueError(f"stage {start_stage} is outside seller {seller}'s period")
    weights = tuple(stage_weight(layout, seller, n) for n in stages)
    sol = solve_weighted_allocation(MonopolyProblem(weights, budget, s.c0, s.c1), s.tol)
    return dict(zip(stages, sol.allocation))


def epoch3_value(s: Scenario, layout: EpochLayout, x: float) -> Tuple[float, Schedule]:
    """Seller 1's optimal Epoch III revenue V(x) when ``x`` is reserved, and its schedule."""
    if x < -s.tol or x > s.q1 + s.tol * max(1.0, s.q1):
        raise ValueError(f"reserve {x} outside [0, {s.q1}]")
    stages = list(layout.epoch3)
    if not stages:
        return 0.0, {}
    x = min(max(x, 0.0), s.q1)
    sol = solve_weighted_allocation(MonopolyProblem(tuple(stages), x, s.c0, s.c1), s.tol)
    return sol.objective, dict(zip(stages, sol.allocation))


def first_stage_offer(budget: float, weights: Sequence[int], c0: float, c1: float,
                      tol: float = 1e-9) -> float:
    top = max(range(len(weights)), key=lambda i: weights[i])
    d, _ = waterfill([c0] * len(weights), weights, c1, budget, tol)
    return d[top]


def infer_stock(observed_d: float, observed_horizon: int, s: Scenario,
                weights: Optional[Sequence[int]] = None) -> float:
    """Recover the budget behind a reported first-stage monopoly offer.

    The reporting seller is assumed to have planned over ``observed_horizon``
    stages with weights 1..horizon; ``weights`` overrides that.  The offer is
    nondecreasing in the budget, so a bisection over the budget suffices.
    """
    if observed_d < 0:
        raise ValueError("observed offer must be non-negative")
    if observed_horizon < 1:
        raise ValueError("horizon must be at least one stage")
    if weights is None:
        weights = list(range(1, observed_horizon + 1))
    if observed_d <= s.tol:
        return 0.0
    lo, hi = 0.0, s.c0 / (2.0 * s.c1) * observed_horizon
    if first_stage_offer(hi, weights, s.c0, s.c1, s.tol) < observed_d - s.tol * max(1.0, observed_d):
        raise ValueError(
            f"offer {observed_d} exceeds the largest achievable first-stage offer; "
            "inconsistent report")
    for _ in range(MAX_BISECTION_ITERS):
        mid = 0.5 * (lo + hi)
        if first_stage_offer(mid, weights, s.c0, s.c1, s.tol) < observed_d:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * max(1.0, hi):
            break
    return 0.5 * (lo + hi)
