"""Seller 1's choice of how much bandwidth to hold back for Epoch III.

With reserve x, seller 1 offers q1 - x in Epoch II.  For a fixed decomposition
every KKT quantity is affine in x, so the set of x where the decomposition stays
feasible is an interval, and seller 1's Epoch II revenue splits into a
difference of two nondecreasing functions G(x) - H(x).  Adding the concave,
increasing Epoch III value V(x) gives a difference-of-monotone objective that a
one-dimensional branch and bound maximizes with a certified gap.
"""

from __future__ import annotations

import heapq
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from .core import EpochLayout, Scenario, SolverError, validate_scenario
from .monopoly import epoch3_value
from .nash import (Decomposition, EquilibriumCandidate, GameParams, candidate_from,
                   find_all_equilibria, select_equilibrium)

log = logging.getLogger(__name__)


def game_at(s: Scenario, layout: EpochLayout, q2_epoch2: float, x: float) -> GameParams:
    return GameParams(s, layout, s.q1 - x, q2_epoch2)


def _clip(s: Scenario, x: float) -> float:
    return min(max(x, 0.0), s.q1)


def _quantities(c: EquilibriumCandidate, g: GameParams) -> Dict[str, float]:
    """Named KKT quantities whose sign decides feasibility, plus budget residuals."""
    q = {}
    if not c.lambda_free:
        q["lam"] = c.lam
        for n, v in zip(c.stages, c.mu):
            q[f"mu[{n}]"] = v
    if not c.zeta_free:
        q["zeta"] = c.zeta
        for n, v in zip(c.stages, c.nu):
            q[f"nu[{n}]"] = v
    for n, a, b in zip(c.stages, c.d1, c.d2):
        q[f"d1[{n}]"] = a
        q[f"d2[{n}]"] = b
    q["budget1"] = sum(c.d1) - g.q1_epoch2
    q["budget2"] = sum(c.d2) - g.q2_epoch2
    return q


@dataclass(frozen=True)
class LinearizedKKT:
    decomposition: Decomposition
    intercept: Dict[str, float]
    slope: Dict[str, float]

    def at(self, x: float) -> Dict[str, float]:
        return {k: self.intercept[k] + self.slope[k] * x for k in self.intercept}


def linearize_kkt(d: Decomposition, s: Scenario, layout: EpochLayout, q2_epoch2: float,
                  probes: Optional[Tuple[float, float]] = None) -> LinearizedKKT:
    """Recover intercept and slope in x of every KKT quantity from two evaluations.

    A third evaluation at the midpoint must agree with the fitted lines.
    Multipliers left free by the decomposition (a seller with no positive
    stage) are omitted; they are non-negative by construction.
    """
    xa, xb = probes if probes is not None else (0.0, s.q1)
    if xb == xa:
        xa, xb = xa, xa + 1.0
    ga = _loose_game(s, layout, q2_epoch2, xa)
    gb = _loose_game(s, layout, q2_epoch2, xb)
    qa = _quantities(candidate_from(d, ga), ga)
    qb = _quantities(candidate_from(d, gb), gb)
    slope = {k: (qb[k] - qa[k]) / (xb - xa) for k in qa}
    intercept = {k: qa[k] - slope[k] * xa for k in qa}
    lin = LinearizedKKT(d, intercept, slope)

    xm = 0.5 * (xa + xb)
    gm = _loose_game(s, layout, q2_epoch2, xm)
    qm = _quantities(candidate_from(d, gm), gm)
    fit = lin.at(xm)
    scale = max(1.0, s.c0 * layout.first_epoch2_stage)
    worst = max(abs(fit[k] - qm[k]) for k in qm)
    if worst > 1e3 * s.tol * scale:
        raise SolverError(f"KKT quantities of {d.label()} are not affine in x "
                          f"(midpoint residual {worst:g})")
    return lin


class _LooseGame(GameParams):
    """GameParams that skips the budget-range check, for extrapolated probes."""

    def __post_init__(self):
        pass


def _loose_game(s, layout, q2_epoch2, x) -> GameParams:
    return _LooseGame(s, layout, s.q1 - x, q2_epoch2)


@dataclass(frozen=True)
class FeasibilityInterval:
    decomposition: Decomposition
    x_lo: float
    x_hi: float

    @property
    def width(self) -> float:
        return self.x_hi - self.x_lo


def _feasible(d: Decomposition, s, layout, q2_epoch2, x) -> bool:
    return candidate_from(d, game_at(s, layout, q2_epoch2, x)).feasible


def feasibility_interval(d: Decomposition, x0: float, s: Scenario, layout: EpochLayout,
                         q2_epoch2: float, method: str = "exact") -> FeasibilityInterval:
    """Largest interval around ``x0`` on which the decomposition stays feasible.

    ``method="exact"`` intersects the half-lines of the affine KKT quantities;
    ``method="bisection"`` searches the feasibility flip points directly.
    """
    x0 = _clip(s, x0)
    if not _feasible(d, s, layout, q2_epoch2, x0):
        raise ValueError(f"{d.label()} is infeasible at x={x0}")
    if method == "bisection":
        return FeasibilityInterval(d, *_bisect_interval(d, x0, s, layout, q2_epoch2))
    if method != "exact":
        raise ValueError(f"unknown method {method!r}")
    if s.q1 <= 0:
        return FeasibilityInterval(d, 0.0, 0.0)

    lin = linearize_kkt(d, s, layout, q2_epoch2)
    g0 = game_at(s, layout, q2_epoch2, x0)
    lo, hi = 0.0, s.q1
    for k, a in lin.intercept.items():
        b = lin.slope[k]
        tol_k = g0.tol_alloc if k.startswith(("d", "budget")) else g0.tol_mult
        if abs(b) * s.q1 <= tol_k:
            continue  # constant on the domain; already non-negative at x0
        if k.startswith("budget"):
            # equality: |a + b x| <= tol
            r1, r2 = (-tol_k - a) / b, (tol_k - a) / b
            lo, hi = max(lo, min(r1, r2)), min(hi, max(r1, r2))
            continue
        root = -a / b
        if b > 0:
            lo = max(lo, root)
        else:
            hi = min(hi, root)
    return FeasibilityInterval(d, min(max(lo, 0.0), x0), max(min(hi, s.q1), x0))


def _bisect_interval(d, x0, s, layout, q2_epoch2, iters: int = 200):
    def edge(inside, outside):
        for _ in range(iters):
            mid = 0.5 * (inside + outside)
            if _feasible(d, s, layout, q2_epoch2, mid):
                inside = mid
            else:
                outside = mid
            if abs(outside - inside) <= 1e-13 * max(1.0, s.q1):
                break
        return inside

    hi = s.q1 if _feasible(d, s, layout, q2_epoch2, s.q1) else edge(x0, s.q1)
    lo = 0.0 if _feasible(d, s, layout, q2_epoch2, 0.0) else edge(x0, 0.0)
    return lo, hi


def g_h_terms(c: EquilibriumCandidate, s: Scenario, layout: EpochLayout) -> Tuple[float, float]:
    """The increasing parts G and H of seller 1's Epoch II revenue, U = G - H."""
    c0, c1, n3 = s.c0, s.c1, layout.n3
    lam, zeta = c.lam, c.zeta
    g = h = 0.0
    for n, z, d1 in zip(c.stages, c.decomposition.labels, c.d1):
        w = n - n3
        if z == 1:
            g += (zeta ** 2 / (9 * c1 * w ** 2) + 2 * c0 * zeta / (9 * c1 * w)
                  + c0 ** 2 / (9 * c1)) * n
            h += (zeta * lam / (9 * c1 * n * w) + 2 * lam ** 2 / (9 * c1 * n ** 2)
                  + c0 * lam / (9 * c1 * n)) * n
        elif z == 2:
            h -= (c0 - c1 * d1) * d1 * n
    return g, h


def evaluate_G_H_U(d: Decomposition, x: float, s: Scenario, layout: EpochLayout,
                   q2_epoch2: float) -> Tuple[float, float, float]:
    g = game_at(s, layout, q2_epoch2, _clip(s, x))
    c = candidate_from(d, g)
    if not c.feasible:
        raise ValueError(f"{d.label()} is infeasible at x={x} ({c.reason})")
    G, H = g_h_terms(c, s, layout)
    U = c.revenue1
    if abs(U - (G - H)) > s.tol * max(1.0, abs(U)):
        raise SolverError(f"U != G - H at x={x}: {U} vs {G - H}")
    return G, H, U


@dataclass
class _Evaluator:
    d: Decomposition
    s: Scenario
    layout: EpochLayout
    q2_epoch2: float
    cache: Dict[float, Tuple[float, float, float]] = field(default_factory=dict)

    def __call__(self, x: float) -> Tuple[float, float, float]:
        """(G + V, H, F) at x with the decomposition held fixed."""
        if x not in self.cache:
            c = candidate_from(self.d, _loose_game(self.s, self.layout, self.q2_epoch2, x))
            G, H = g_h_terms(c, self.s, self.layout)
            V, _ = epoch3_value(self.s, self.layout, _clip(self.s, x))
            self.cache[x] = (G + V, H, c.revenue1 + V)
        return self.cache[x]


@dataclass(frozen=True)
class BranchAndBoundTrace:
    evaluations: int
    nodes: int
    final_gap: float
    bound_violations: int


def maximize_over_interval(iv: FeasibilityInterval, s: Scenario, layout: EpochLayout,
                           q2_epoch2: float, tol_obj: Optional[float] = None,
                           max_nodes: int = 100_000) -> Tuple[float, float, BranchAndBoundTrace]:
    """Maximize F(x) = U(q1 - x) + V(x) on the interval by monotone branch and bound.

    On [a, b] the bound F <= (G + V)(b) - H(a) holds because G + V and H are
    nondecreasing.  Stops when the best open bound is within ``tol_obj`` of the
    incumbent (default 1e-6 * max(1, incumbent)).
    """
    f = _Evaluator(iv.decomposition, s, layout, q2_epoch2)
    a, b = iv.x_lo, iv.x_hi
    best_x, best_f = a, f(a)[2]
    if f(b)[2] > best_f:
        best_x, best_f = b, f(b)[2]
    if b - a <= 0:
        return best_x, best_f, BranchAndBoundTrace(len(f.cache), 0, 0.0, 0)

    def tol_now():
        return tol_obj if tol_obj is not None else 1e-6 * max(1.0, abs(best_f))

    def bound(lo, hi):
        return f(hi)[0] - f(lo)[1]

    heap = [(-bound(a, b), a, b)]
    nodes = violations = 0
    gap = 0.0
    while heap:
        neg_ub, lo, hi = heapq.heappop(heap)
        ub = -neg_ub
        gap = ub - best_f
        if gap <= tol_now() or nodes >= max_nodes:
            break
        nodes += 1
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            continue
        fm = f(mid)[2]
        if fm > best_f:
            best_x, best_f = mid, fm
        for cl, ch in ((lo, mid), (mid, hi)):
            cub = bound(cl, ch)
            if cub < max(f(cl)[2], f(ch)[2]) - 1e-9 * max(1.0, abs(cub)):
                violations += 1  # monotone structure broken; bound is unsafe
            if cub > best_f + tol_now():
                heapq.heappush(heap, (-cub, cl, ch))
    else:
        gap = 0.0
    return best_x, best_f, BranchAndBoundTrace(len(f.cache), nodes, max(gap, 0.0), violations)


@dataclass(frozen=True)
class IntervalRecord:
    x_lo: float
    x_hi: float
    decomposition: str
    x_hat: float
    r_hat: float
    revisit: bool


@dataclass(frozen=True)
class ReserveResult:
    x_star: float
    r_star: float
    intervals: Tuple[IntervalRecord, ...]
    equilibrium: EquilibriumCandidate
    epoch3_revenue: float


def total_revenue_seller1(s: Scenario, layout: EpochLayout, q2_epoch2: float, x: float,
                          pruned: bool = True) -> Tuple[float, EquilibriumCandidate]:
    """U(q1 - x) + V(x) with a full equilibrium re-solve at x."""
    x = _clip(s, x)
    g = game_at(s, layout, q2_epoch2, x)
    eq = select_equilibrium(find_all_equilibria(g, pruned), g)
    return eq.revenue1 + epoch3_value(s, layout, x)[0], eq


def _widest(eq: EquilibriumCandidate, x: float, s, layout, q2_epoch2) -> FeasibilityInterval:
    """Among decompositions sharing the selected allocation, the one reaching furthest right."""
    best = None
    for d in (eq.decomposition,) + eq.aliases:
        iv = feasibility_interval(d, x, s, layout, q2_epoch2)
        if best is None or iv.x_hi > best.x_hi:
            best = iv
    return best


def algorithm1_search(s: Scenario, layout: EpochLayout, q2_epoch2: float,
                      pruned: bool = True, eps: Optional[float] = None) -> ReserveResult:
    """Sweep [0, q1] interval by interval, maximizing seller 1's total revenue on each."""
    validate_scenario(s)
    if layout.n3 == 0 or s.q1 <= 0:
        r, eq = total_revenue_seller1(s, layout, q2_epoch2, 0.0, pruned)
        return ReserveResult(0.0, r, (), eq, 0.0)
    eps = 1e-6 * s.q1 if eps is None else eps
    x_dag = 0.0
    x_star, r_star = 0.0, -float("inf")
    seen = set()
    records: List[IntervalRecord] = []
    while True:
        g = game_at(s, layout, q2_epoch2, x_dag)
        eq = select_equilibrium(find_all_equilibria(g, pruned), g)
        iv = _widest(eq, x_dag, s, layout, q2_epoch2)
        x_ddag = iv.x_hi
        label = iv.decomposition.label()
        revisit = label in seen
        if revisit:
            log.info("decomposition %s revisited at x=%g", label, x_dag)
        seen.add(label)
        lo = x_dag
        x_hat, r_hat, _ = maximize_over_interval(
            FeasibilityInterval(iv.decomposition, lo, x_ddag), s, layout, q2_epoch2)
        records.append(IntervalRecord(lo, x_ddag, label, x_hat, r_hat, revisit))
        if r_hat > r_star:
            x_star, r_star = x_hat, r_hat
        if x_ddag >= s.q1:
            break
        x_dag = x_ddag if x_ddag > x_dag + s.tol * max(1.0, s.q1) else min(x_dag + eps, s.q1)
    r_final, eq_final = total_revenue_seller1(s, layout, q2_epoch2, x_star, pruned)
    return ReserveResult(x_star, r_final, tuple(records), eq_final,
                         epoch3_value(s, layout, x_star)[0])
