"""Market parameters, stage indexing, the linear price curve and revenue accounting.

Stage indices count down over time: stage 1 is the last stage of seller 1's
leasing period and stage N is the first stage of seller 2's.  Epoch III
occupies the lowest indices, Epoch I the highest.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Mapping, Optional

#: A schedule maps stage index -> offered bandwidth for one seller.
Schedule = Dict[int, float]


class ScenarioError(ValueError):
    """Raised when market parameters violate a model invariant."""


class SolverError(RuntimeError):
    """Raised when a numerical routine fails to reach its tolerance."""


@dataclass(frozen=True)
class EpochLayout:
    """Sizes of the three epochs; stage sets are derived from them."""

    len_epoch1: int
    len_epoch2: int
    len_epoch3: int

    def __post_init__(self):
        if min(self.len_epoch1, self.len_epoch2, self.len_epoch3) < 0:
            raise ScenarioError("epoch lengths must be non-negative")
        if self.len_epoch2 < 1:
            raise ScenarioError("Epoch II needs at least one stage")

    @property
    def n_total(self) -> int:
        return self.len_epoch1 + self.len_epoch2 + self.len_epoch3

    @property
    def n3(self) -> int:
        return self.len_epoch3

    @property
    def epoch1(self) -> range:
        return range(self.len_epoch3 + self.len_epoch2 + 1, self.n_total + 1)

    @property
    def epoch2(self) -> range:
        return range(self.len_epoch3 + 1, self.len_epoch3 + self.len_epoch2 + 1)

    @property
    def epoch3(self) -> range:
        return range(1, self.len_epoch3 + 1)

    @property
    def seller1_stages(self) -> range:
        return range(1, self.len_epoch3 + self.len_epoch2 + 1)

    @property
    def seller2_stages(self) -> range:
        return range(self.len_epoch3 + 1, self.n_total + 1)

    @property
    def first_epoch2_stage(self) -> int:
        return self.len_epoch3 + self.len_epoch2

    def stages_of(self, seller: int) -> range:
        if seller == 1:
            return self.seller1_stages
        if seller == 2:
            return self.seller2_stages
        raise ValueError(f"seller must be 1 or 2, got {seller!r}")

    def epoch_of(self, n: int) -> int:
        if n in self.epoch3:
            return 3
        if n in self.epoch2:
            return 2
        if n in self.epoch1:
            return 1
        raise ValueError(f"stage {n} outside 1..{self.n_total}")


@dataclass(frozen=True)
class Scenario:
    """Price coefficients, budgets and epoch lengths of one market."""

    c0: float
    c1: float
    q1: float
    q2: float
    len_epoch1: int = 0
    len_epoch2: int = 1
    len_epoch3: int = 0
    tol: float = 1e-9

    @property
    def layout(self) -> EpochLayout:
        return EpochLayout(self.len_epoch1, self.len_epoch2, self.len_epoch3)

    def with_budgets(self, q1: float, q2: float) -> "Scenario":
        return Scenario(self.c0, self.c1, q1, q2, self.len_epoch1,
                        self.len_epoch2, self.len_epoch3, self.tol)


def validate_scenario(s: Scenario) -> Scenario:
    """Return ``s`` unchanged if every invariant holds, else raise ScenarioError."""
    if not s.c0 > 0:
        raise ScenarioError(f"c0 must be positive, got {s.c0}")
    if not s.c1 > 0:
        raise ScenarioError(f"c1 must be positive, got {s.c1}")
    if not s.q1 >= 0:
        raise ScenarioError(f"q1 must be non-negative, got {s.q1}")
    if not s.q2 >= 0:
        raise ScenarioError(f"q2 must be non-negative, got {s.q2}")
    if not s.tol > 0:
        raise ScenarioError(f"tol must be positive, got {s.tol}")
    if not s.c0 > 2 * s.c1 * (s.q1 + s.q2):
        raise ScenarioError(
            f"price-coefficient condition violated: c0 <= 2 c1 (q1+q2) "
            f"({s.c0:g} <= {2 * s.c1 * (s.q1 + s.q2):g}); "
            "total revenue must increase with leased bandwidth")
    s.layout  # epoch lengths are checked by EpochLayout
    return s


def unit_price(s: Scenario, total_demand: float) -> float:
    if total_demand < 0:
        raise ValueError(f"demand must be non-negative, got {total_demand}")
    return s.c0 - s.c1 * total_demand


def stage_weight(layout: EpochLayout, seller: int, n: int) -> int:
    """Number of stages a lease granted at stage ``n`` is paid for."""
    if n not in layout.stages_of(seller):
        raise ValueError(f"stage {n} is outside seller {seller}'s leasing period")
    return n if seller == 1 else n - layout.n3


def check_schedule(layout: EpochLayout, seller: int, sched: Mapping[int, float],
                   tol: float = 0.0) -> None:
    stages = layout.stages_of(seller)
    for n, d in sched.items():
        if n not in stages:
            raise ValueError(f"seller {seller} has no leasing period at stage {n}")
        if d < -tol:
            raise ValueError(f"negative offer {d} for seller {seller} at stage {n}")


@dataclass(frozen=True)
class RevenueReport:
    prices: Dict[int, float]
    revenue1: Dict[int, float]
    revenue2: Dict[int, float]
    total1: float = field(init=False)
    total2: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "total1", sum(self.revenue1.values()))
        object.__setattr__(self, "total2", sum(self.revenue2.values()))

    @property
    def total(self) -> float:
        return self.total1 + self.total2


def revenue_of(s: Scenario, layout: EpochLayout, sched1: Mapping[int, float],
               sched2: Mapping[int, float]) -> RevenueReport:
    check_schedule(layout, 1, sched1, s.tol)
    check_schedule(layout, 2, sched2, s.tol)
    prices, rev1, rev2 = {}, {}, {}
    for n in sorted(set(sched1) | set(sched2), reverse=True):
        d1 = sched1.get(n, 0.0)
        d2 = sched2.get(n, 0.0)
        p = s.c0 - s.c1 * (d1 + d2)
        prices[n] = p
        if n in sched1:
            rev1[n] = p * d1 * stage_weight(layout, 1, n)
        if n in sched2:
            rev2[n] = p * d2 * stage_weight(layout, 2, n)
    return RevenueReport(prices, rev1, rev2)


def reference_scenario(q1: float = 100.0, q2: float = 60.0, len_epoch1: int = 0,
                   len_epoch2: int = 5, len_epoch3: int = 3,
                   tol: Optional[float] = None) -> Scenario:
    """Reference market: c0=480, c1=1, q1=100, Epoch II stock 60, stages 4..8 and 1..3."""
    return Scenario(480.0, 1.0, q1, q2, len_epoch1, len_epoch2, len_epoch3,
                    1e-9 if tol is None else tol)
