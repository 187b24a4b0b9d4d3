"""Epoch II non-cooperative game: closed-form equilibria by decomposition enumeration.

Each Epoch II stage is labelled by which sellers offer positive bandwidth:

    1 -> both sellers (Z1)      2 -> seller 1 only (Z2)
    3 -> seller 2 only (Z3)     4 -> neither (Z4)

For a fixed labelling the joint KKT system reduces to a 2x2 linear system in
the budget multipliers (lam for seller 1, zeta for seller 2); every other KKT
quantity follows in closed form.  A labelling whose quantities are all
non-negative is an equilibrium.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

from .core import (EpochLayout, Scenario, Schedule, SolverError, stage_weight,
                   validate_scenario)
from .monopoly import objective, waterfill

DEDUP_TOL = 1e-6
UNIQUENESS_MAX_EPOCH3 = 12


@dataclass(frozen=True)
class GameParams:
    scenario: Scenario
    layout: EpochLayout
    q1_epoch2: float
    q2_epoch2: float

    def __post_init__(self):
        s = self.scenario
        slack = s.tol * max(1.0, s.q1 + s.q2)
        if not -slack <= self.q1_epoch2 <= s.q1 + slack:
            raise ValueError(f"q1_epoch2={self.q1_epoch2} outside [0, {s.q1}]")
        if not -slack <= self.q2_epoch2 <= s.q2 + slack:
            raise ValueError(f"q2_epoch2={self.q2_epoch2} outside [0, {s.q2}]")

    @property
    def stages(self) -> Tuple[int, ...]:
        return tuple(self.layout.epoch2)

    @property
    def tol_alloc(self) -> float:
        s = self.scenario
        return s.tol * max(1.0, s.q1 + s.q2)

    @property
    def tol_mult(self) -> float:
        s = self.scenario
        return s.tol * max(1.0, s.c0 * self.layout.first_epoch2_stage)


@dataclass(frozen=True)
class Decomposition:
    """Zone label (1..4) for each Epoch II stage, stages in ascending order."""

    stages: Tuple[int, ...]
    labels: Tuple[int, ...]

    def __post_init__(self):
        if len(self.stages) != len(self.labels):
            raise ValueError("one label per stage is required")
        if any(z not in (1, 2, 3, 4) for z in self.labels):
            raise ValueError("labels must be in 1..4")

    def zone(self, k: int) -> Tuple[int, ...]:
        return tuple(n for n, z in zip(self.stages, self.labels) if z == k)

    @property
    def z1(self):
        return self.zone(1)

    @property
    def z2(self):
        return self.zone(2)

    @property
    def z3(self):
        return self.zone(3)

    @property
    def z4(self):
        return self.zone(4)

    @classmethod
    def from_zones(cls, stages: Sequence[int], z1=(), z2=(), z3=(), z4=None) -> "Decomposition":
        stages = tuple(sorted(stages))
        lookup = {}
        for k, zone in ((1, z1), (2, z2), (3, z3)):
            for n in zone:
                if n in lookup:
                    raise ValueError(f"stage {n} assigned twice")
                lookup[n] = k
        if z4 is not None:
            for n in z4:
                if n in lookup:
                    raise ValueError(f"stage {n} assigned twice")
                lookup[n] = 4
        unknown = set(lookup) - set(stages)
        if unknown:
            raise ValueError(f"stages {sorted(unknown)} are not Epoch II stages")
        if z4 is not None and len(lookup) != len(stages):
            raise ValueError("zones do not cover every Epoch II stage")
        return cls(stages, tuple(lookup.get(n, 4) for n in stages))

    @classmethod
    def parse(cls, text: str, stages: Sequence[int]) -> "Decomposition":
        """Parse ``"Z1=7,8;Z2=6;Z3=;Z4=4,5"``; stages not named fall into Z4."""
        zones = {1: (), 2: (), 3: (), 4: None}
        for part in filter(None, (p.strip() for p in text.split(";"))):
            key, _, vals = part.partition("=")
            key = key.strip().upper()
            if key not in ("Z1", "Z2", "Z3", "Z4"):
                raise ValueError(f"unknown zone {key!r}")
            vals = vals.strip().strip("{}")
            zones[int(key[1])] = tuple(int(v) for v in vals.split(",") if v.strip())
        return cls.from_zones(stages, zones[1], zones[2], zones[3], zones[4])

    def label(self) -> str:
        return ";".join(f"Z{k}={','.join(map(str, self.zone(k)))}" for k in (1, 2, 3, 4))

    def is_canonical(self) -> bool:
        """True if the Z4 stages form a run of the lowest Epoch II indices."""
        k = self.labels.count(4)
        return all(z == 4 for z in self.labels[:k])


@dataclass(frozen=True)
class CoefficientsA:
    a11: float
    a12: float
    a21: float
    a22: float

    @property
    def det(self) -> float:
        return self.a11 * self.a22 - self.a21 * self.a12


@dataclass(frozen=True)
class EquilibriumCandidate:
    decomposition: Decomposition
    lam: float
    zeta: float
    d1: Tuple[float, ...]
    d2: Tuple[float, ...]
    mu: Tuple[float, ...]
    nu: Tuple[float, ...]
    feasible: bool
    reason: Optional[str]
    revenue1: float
    revenue2: float
    unit1: float
    unit2: float
    lambda_free: bool = False
    zeta_free: bool = False
    aliases: Tuple[Decomposition, ...] = field(default=(), compare=False)

    @property
    def stages(self) -> Tuple[int, ...]:
        return self.decomposition.stages

    @property
    def schedule1(self) -> Schedule:
        return dict(zip(self.stages, self.d1))

    @property
    def schedule2(self) -> Schedule:
        return dict(zip(self.stages, self.d2))

    @property
    def min_unit_revenue(self) -> float:
        return min(self.unit1, self.unit2)


def pruned_count(m: int) -> int:
    return (3 ** (m + 1) - 1) // 2


def total_count(m: int) -> int:
    return 4 ** m


def _labels_with_fours(m: int, k: int) -> Iterator[Tuple[int, ...]]:
    """All label tuples of length m with exactly k fours, in lexicographic order."""
    if m == 0:
        yield ()
        return
    for first in (1, 2, 3, 4):
        if first == 4:
            if k == 0:
                continue
            rest_k = k - 1
        else:
            if m - 1 < k:
                continue
            rest_k = k
        for rest in _labels_with_fours(m - 1, rest_k):
            yield (first,) + rest


def enumerate_labels(m: int, pruned: bool = True) -> Iterator[Tuple[int, ...]]:
    """Label tuples ordered by |Z4| ascending, then lexicographically."""
    if m < 1:
        raise ValueError("Epoch II needs at least one stage")
    for k in range(m + 1):
        if pruned:
            head = (4,) * k
            for rest in itertools.product((1, 2, 3), repeat=m - k):
                yield head + rest
        else:
            yield from _labels_with_fours(m, k)


def enumerate_decompositions(m: int, pruned: bool = True,
                             stages: Optional[Sequence[int]] = None) -> Iterator[Decomposition]:
    stages = tuple(range(1, m + 1)) if stages is None else tuple(sorted(stages))
    if len(stages) != m:
        raise ValueError("stage list length must equal m")
    for labels in enumerate_labels(m, pruned):
        yield Decomposition(stages, labels)


def coefficients_of(d: Decomposition, s: Scenario, layout: EpochLayout) -> CoefficientsA:
    a11 = a12 = a21 = a22 = 0.0
    c1, n3 = s.c1, layout.n3
    for n, z in zip(d.stages, d.labels):
        w = n - n3
        if z == 1:
            a11 += 2.0 / (3.0 * c1 * n)
            a12 += 1.0 / (3.0 * c1 * w)
            a21 += 1.0 / (3.0 * c1 * n)
            a22 += 2.0 / (3.0 * c1 * w)
        elif z == 2:
            a11 += 1.0 / (2.0 * c1 * n)
        elif z == 3:
            a22 += 1.0 / (2.0 * c1 * w)
    return CoefficientsA(a11, a12, a21, a22)


def _solve(stages, labels, c0, c1, n3, q1c, q2, tol_d, tol_m):
    """Closed-form KKT point for one labelling; plain floats for speed."""
    a11 = a12 = a21 = a22 = 0.0
    k1 = k2 = k3 = 0
    for n, z in zip(stages, labels):
        if z == 1:
            w = n - n3
            a11 += 2.0 / (3.0 * c1 * n)
            a12 += 1.0 / (3.0 * c1 * w)
            a21 += 1.0 / (3.0 * c1 * n)
            a22 += 2.0 / (3.0 * c1 * w)
            k1 += 1
        elif z == 2:
            a11 += 1.0 / (2.0 * c1 * n)
            k2 += 1
        elif z == 3:
            a22 += 1.0 / (2.0 * c1 * (n - n3))
            k3 += 1
    b1 = q1c - k1 * c0 / (3.0 * c1) - k2 * c0 / (2.0 * c1)
    b2 = q2 - k1 * c0 / (3.0 * c1) - k3 * c0 / (2.0 * c1)

    lam_free = k1 + k2 == 0
    zeta_free = k1 + k3 == 0
    lam = zeta = 0.0
    if not lam_free and not zeta_free:
        det = a11 * a22 - a21 * a12
        lam = -(a22 * b1 + a12 * b2) / det
        zeta = -(a21 * b1 + a11 * b2) / det
    elif not lam_free:
        lam = -b1 / a11
    elif not zeta_free:
        zeta = -b2 / a22

    m = len(stages)
    d1 = [0.0] * m
    d2 = [0.0] * m
    for i, (n, z) in enumerate(zip(stages, labels)):
        w = n - n3
        if z == 1:
            d1[i] = 2.0 * (c0 * n - lam) / (3.0 * c1 * n) - (c0 * w - zeta) / (3.0 * c1 * w)
            d2[i] = -(c0 * n - lam) / (3.0 * c1 * n) + 2.0 * (c0 * w - zeta) / (3.0 * c1 * w)
        elif z == 2:
            d1[i] = (c0 * n - lam) / (2.0 * c1 * n)
        elif z == 3:
            d2[i] = (c0 * w - zeta) / (2.0 * c1 * w)

    # a seller with no positive stage has an undetermined budget multiplier;
    # take the smallest value keeping every slack multiplier non-negative
    if lam_free:
        lam = max(n * (c0 - c1 * d2[i]) for i, n in enumerate(stages))
    if zeta_free:
        zeta = max((n - n3) * (c0 - c1 * d1[i]) for i, n in enumerate(stages))

    mu = [0.0] * m
    nu = [0.0] * m
    for i, (n, z) in enumerate(zip(stages, labels)):
        w = n - n3
        if z in (3, 4):
            mu[i] = 2.0 * c1 * n * d1[i] - (c0 - c1 * d2[i]) * n + lam
        if z in (2, 4):
            nu[i] = 2.0 * c1 * w * d2[i] - (c0 - c1 * d1[i]) * w + zeta

    reason = None
    if lam < -tol_m or zeta < -tol_m:
        reason = "negative-budget-multiplier"
    elif min(d1) < -tol_d or min(d2) < -tol_d:
        reason = "negative-allocation"
    elif min(mu) < -tol_m or min(nu) < -tol_m:
        reason = "negative-slack-multiplier"
    elif abs(sum(d1) - q1c) > tol_d or abs(sum(d2) - q2) > tol_d:
        reason = "budget-unplaceable"
    return lam, zeta, d1, d2, mu, nu, reason, lam_free, zeta_free


def _revenues(stages, n3, c0, c1, d1, d2):
    r1 = r2 = 0.0
    for n, x, y in zip(stages, d1, d2):
        p = c0 - c1 * (x + y)
        r1 += p * x * n
        r2 += p * y * (n - n3)
    return r1, r2


def _unit(revenue: float, budget: float, tol: float) -> float:
    return math.inf if budget <= tol else revenue / budget


def candidate_from(d: Decomposition, g: GameParams) -> EquilibriumCandidate:
    """Evaluate the closed-form KKT point of one decomposition and check feasibility."""
    if d.stages != g.stages:
        raise ValueError("decomposition stages differ from the Epoch II stages")
    s = g.scenario
    solved = _solve(d.stages, d.labels, s.c0, s.c1, g.layout.n3, g.q1_epoch2,
                    g.q2_epoch2, g.tol_alloc, g.tol_mult)
    return _build(d, g, solved)


def _build(d: Decomposition, g: GameParams, solved) -> EquilibriumCandidate:
    s, n3 = g.scenario, g.layout.n3
    lam, zeta, d1, d2, mu, nu, reason, lf, zf = solved
    r1, r2 = _revenues(d.stages, n3, s.c0, s.c1, d1, d2)
    return EquilibriumCandidate(
        d, lam, zeta, tuple(d1), tuple(d2), tuple(mu), tuple(nu),
        reason is None, reason, r1, r2,
        _unit(r1, g.q1_epoch2, g.tol_alloc), _unit(r2, g.q2_epoch2, g.tol_alloc),
        lf, zf)


def _same_allocation(a: EquilibriumCandidate, b: EquilibriumCandidate, tol: float) -> bool:
    return (all(abs(x - y) <= tol for x, y in zip(a.d1, b.d1))
            and all(abs(x - y) <= tol for x, y in zip(a.d2, b.d2)))


def find_all_equilibria(g: GameParams, pruned: bool = True,
                        dedup_tol: float = DEDUP_TOL) -> List[EquilibriumCandidate]:
    """All feasible decompositions, merged when their allocations coincide.

    Merged decompositions are kept on the survivor as ``aliases``.
    """
    validate_scenario(g.scenario)
    s = g.scenario
    stages = g.stages
    consts = (s.c0, s.c1, g.layout.n3, g.q1_epoch2, g.q2_epoch2, g.tol_alloc, g.tol_mult)
    found: List[EquilibriumCandidate] = []
    aliases: List[List[Decomposition]] = []
    for labels in enumerate_labels(len(stages), pruned):
        solved = _solve(stages, labels, *consts)
        if solved[6] is not None:
            continue
        c = _build(Decomposition(stages, labels), g, solved)
        for i, kept in enumerate(found):
            if _same_allocation(kept, c, dedup_tol):
                aliases[i].append(c.decomposition)
                break
        else:
            found.append(c)
            aliases.append([])
    if not found:
        raise SolverError("no feasible decomposition; tolerance too tight")
    return [_with_aliases(c, a) for c, a in zip(found, aliases)]


def _with_aliases(c: EquilibriumCandidate, extra: List[Decomposition]) -> EquilibriumCandidate:
    return replace(c, aliases=tuple(extra))


def uniqueness_guaranteed(layout: EpochLayout) -> bool:
    return layout.n3 <= UNIQUENESS_MAX_EPOCH3


def best_response(opponent: Schedule, seller: int, budget: float, g: GameParams) -> Schedule:
    """Optimal Epoch II schedule of ``seller`` against a fixed opponent schedule."""
    s = g.scenario
    stages = g.stages
    intercepts = [s.c0 - s.c1 * opponent.get(n, 0.0) for n in stages]
    weights = [stage_weight(g.layout, seller, n) for n in stages]
    d, _ = waterfill(intercepts, weights, s.c1, budget, s.tol)
    return dict(zip(stages, d))


def _seller_revenue(own: Schedule, opponent: Schedule, seller: int, g: GameParams) -> float:
    s = g.scenario
    stages = g.stages
    a = [s.c0 - s.c1 * opponent.get(n, 0.0) for n in stages]
    w = [stage_weight(g.layout, seller, n) for n in stages]
    return objective(a, w, s.c1, [own.get(n, 0.0) for n in stages])


def verify_equilibrium(c: EquilibriumCandidate, g: GameParams,
                       rel_tol: Optional[float] = None) -> Tuple[bool, Dict[str, float]]:
    """Check that neither seller gains by a unilateral deviation.

    Returns the verdict and residuals: revenue gaps to each best response and
    budget-usage excesses.
    """
    rel_tol = g.scenario.tol if rel_tol is None else rel_tol
    s1, s2 = c.schedule1, c.schedule2
    res = {}
    ok = True
    for seller, own, opp, budget in ((1, s1, s2, g.q1_epoch2), (2, s2, s1, g.q2_epoch2)):
        current = _seller_revenue(own, opp, seller, g)
        best = _seller_revenue(best_response(opp, seller, budget, g), opp, seller, g)
        gap = best - current
        over = sum(own.values()) - budget
        res[f"gap{seller}"] = gap
        res[f"overuse{seller}"] = over
        if gap > rel_tol * max(1.0, abs(best)):
            ok = False
        if over > g.tol_alloc or min(own.values(), default=0.0) < -g.tol_alloc:
            ok = False
    return ok, res


def select_equilibrium(candidates: Sequence[EquilibriumCandidate],
                       g: Optional[GameParams] = None) -> EquilibriumCandidate:
    """Max-min unit-bandwidth revenue; ties go to higher seller-1 revenue, then order."""
    if not candidates:
        raise ValueError("no equilibria to select from")
    best_i = 0
    for i, c in enumerate(candidates[1:], start=1):
        b = candidates[best_i]
        if (c.min_unit_revenue, c.revenue1) > (b.min_unit_revenue, b.revenue1):
            best_i = i
    return candidates[best_i]


def solve_game(g: GameParams, pruned: bool = True) -> EquilibriumCandidate:
    return select_equilibrium(find_all_equilibria(g, pruned), g)
