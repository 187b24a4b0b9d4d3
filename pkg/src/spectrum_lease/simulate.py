"""Stage-by-stage replay of the coordinator protocol.

Stages run from N down to 1.  In Epoch I seller 2 leases as a monopolist.  At
the first Epoch II stage both sellers report monopoly offers, learn of each
other, infer each other's stock from the reports, and resubmit equilibrium
offers (seller 1 having fixed its Epoch III reserve).  The remaining Epoch II
stages follow the equilibrium schedule and Epoch III is seller 1's monopoly.

The outcome is always rebuilt from the event log, so ``replay`` of a logged
run reproduces it exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

from .core import EpochLayout, RevenueReport, Scenario, validate_scenario
from .monopoly import epoch3_value, infer_stock, plan_monopoly_epoch
from .nash import GameParams, find_all_equilibria, select_equilibrium
from .reserve import algorithm1_search

OFFER = "offer-report"
PRICE = "price-announce"
DISCOVERY = "discovery-feedback"
INFERENCE = "stock-inference"
RESUBMIT = "resubmission"
GRANT = "lease-grant"
KINDS = (OFFER, PRICE, DISCOVERY, INFERENCE, RESUBMIT, GRANT)

COORDINATOR = "coordinator"


class ProtocolError(ValueError):
    """A log that does not follow the stage protocol."""


@dataclass(frozen=True)
class MarketEvent:
    stage: int
    kind: str
    actor: str
    payload: Tuple[Tuple[str, float], ...]

    def get(self, key: str) -> float:
        return dict(self.payload)[key]


def _event(stage, kind, actor, **payload) -> MarketEvent:
    return MarketEvent(stage, kind, actor, tuple(payload.items()))


@dataclass(frozen=True)
class SimulationOutcome:
    events: Tuple[MarketEvent, ...]
    prices: Dict[int, float]
    demands: Dict[int, float]
    grants1: Dict[int, float]
    grants2: Dict[int, float]
    stock1: Dict[int, float]   # remaining stock after each stage
    stock2: Dict[int, float]
    report: RevenueReport
    reserve: float
    inferred_q1: float
    inferred_q2_epoch2: float


def _expected(layout: EpochLayout, n: int) -> List[Tuple[str, str]]:
    """(kind, actor) sequence the protocol prescribes for stage ``n``."""
    epoch = layout.epoch_of(n)
    if epoch == 1:
        return [(OFFER, "seller2"), (PRICE, COORDINATOR), (GRANT, "seller2")]
    if epoch == 3:
        return [(OFFER, "seller1"), (PRICE, COORDINATOR), (GRANT, "seller1")]
    head = [(OFFER, "seller1"), (OFFER, "seller2")]
    if n == layout.first_epoch2_stage:
        head += [(DISCOVERY, COORDINATOR), (INFERENCE, "seller2"), (INFERENCE, "seller1"),
                 (RESUBMIT, "seller1"), (RESUBMIT, "seller2")]
    return head + [(PRICE, COORDINATOR), (GRANT, "seller1"), (GRANT, "seller2")]


def _check_log(events: Sequence[MarketEvent], layout: EpochLayout) -> None:
    expected = [(n, k, a) for n in range(layout.n_total, 0, -1) for k, a in _expected(layout, n)]
    for i, (n, kind, actor) in enumerate(expected):
        if i >= len(events):
            raise ProtocolError(f"log truncated: missing {kind} by {actor} at stage {n}")
        ev = events[i]
        if (ev.stage, ev.kind, ev.actor) != (n, kind, actor):
            raise ProtocolError(
                f"event {i}: expected {kind} by {actor} at stage {n}, "
                f"got {ev.kind} by {ev.actor} at stage {ev.stage}")
        for key, val in ev.payload:
            if val < 0:
                raise ProtocolError(f"event {i}: negative payload {key}={val}")
    if len(events) > len(expected):
        raise ProtocolError(f"{len(events) - len(expected)} unexpected trailing events")


def replay(events: Sequence[MarketEvent], s: Scenario) -> SimulationOutcome:
    """Rebuild the outcome of a run from its event log."""
    layout = s.layout
    events = tuple(events)
    _check_log(events, layout)
    prices, demands, grants1, grants2 = {}, {}, {}, {}
    rev1, rev2 = {}, {}
    stock1, stock2 = {}, {}
    left1, left2 = s.q1, s.q2
    reserve = inferred_q1 = inferred_q2 = 0.0
    for ev in events:
        if ev.kind == PRICE:
            prices[ev.stage] = ev.get("price")
            demands[ev.stage] = ev.get("demand")
        elif ev.kind == GRANT:
            amount = ev.get("amount")
            pay = ev.get("price") * amount * ev.get("weight")
            if ev.actor == "seller1":
                grants1[ev.stage], rev1[ev.stage] = amount, pay
                left1 -= amount
            else:
                grants2[ev.stage], rev2[ev.stage] = amount, pay
                left2 -= amount
        elif ev.kind == INFERENCE:
            if ev.actor == "seller2":
                inferred_q1 = ev.get("inferred")
            else:
                inferred_q2 = ev.get("inferred")
        elif ev.kind == RESUBMIT and ev.actor == "seller1":
            reserve = ev.get("reserve")
        if ev.kind in (PRICE, GRANT):
            stock1[ev.stage], stock2[ev.stage] = left1, left2
    return SimulationOutcome(events, prices, demands, grants1, grants2, stock1, stock2,
                             RevenueReport(prices, rev1, rev2), reserve,
                             inferred_q1, inferred_q2)


def _close_stage(events, layout, s, n, d1, d2):
    demand = (d1 or 0.0) + (d2 or 0.0)
    price = s.c0 - s.c1 * demand
    events.append(_event(n, PRICE, COORDINATOR, price=price, demand=demand))
    if d1 is not None:
        events.append(_event(n, GRANT, "seller1", amount=d1, price=price, weight=float(n)))
    if d2 is not None:
        events.append(_event(n, GRANT, "seller2", amount=d2, price=price,
                             weight=float(n - layout.n3)))


def _clean(sched):
    return {n: max(0.0, d) for n, d in sched.items()}


def run_simulation(s: Scenario, pruned: bool = True) -> SimulationOutcome:
    validate_scenario(s)
    layout = s.layout
    events: List[MarketEvent] = []
    l = layout.first_epoch2_stage

    # Epoch I: seller 2 commits to its full-period monopoly plan
    plan2 = plan_monopoly_epoch(s, layout, 2, layout.n_total, s.q2)
    q2_left = s.q2
    for n in reversed(layout.epoch1):
        d2 = max(0.0, min(plan2[n], q2_left))
        events.append(_event(n, OFFER, "seller2", amount=d2,
                             horizon=float(n - layout.n3)))
        _close_stage(events, layout, s, n, None, d2)
        q2_left -= d2
    q2_epoch2 = max(q2_left, 0.0)

    # stage l: monopoly reports, discovery, stock inference, resubmission
    mono1 = _clean(plan_monopoly_epoch(s, layout, 1, l, s.q1))
    mono2 = _clean(plan_monopoly_epoch(s, layout, 2, l, q2_epoch2))
    h1, h2 = l, layout.len_epoch2
    events.append(_event(l, OFFER, "seller1", amount=mono1[l], horizon=float(h1)))
    events.append(_event(l, OFFER, "seller2", amount=mono2[l], horizon=float(h2)))
    events.append(_event(l, DISCOVERY, COORDINATOR, offer1=mono1[l], offer2=mono2[l],
                         horizon1=float(h1), horizon2=float(h2)))
    q1_seen = infer_stock(mono1[l], h1, s)
    q2_seen = infer_stock(mono2[l], h2, s)
    events.append(_event(l, INFERENCE, "seller2", inferred=q1_seen))
    events.append(_event(l, INFERENCE, "seller1", inferred=q2_seen))

    # seller 1 chooses its reserve against the inferred rival stock and announces
    # the Epoch II amount; each seller then plays its own copy of the equilibrium
    q2_view = min(q2_seen, s.q2)
    x_star = algorithm1_search(s, layout, q2_view, pruned).x_star
    q1_epoch2 = s.q1 - x_star
    g1 = GameParams(s, layout, q1_epoch2, q2_view)
    g2 = GameParams(s, layout, q1_epoch2, q2_epoch2)
    plan1 = _clean(select_equilibrium(find_all_equilibria(g1, pruned), g1).schedule1)
    plan2_ii = _clean(select_equilibrium(find_all_equilibria(g2, pruned), g2).schedule2)

    events.append(_event(l, RESUBMIT, "seller1", amount=plan1[l], reserve=x_star,
                         epoch2_budget=q1_epoch2))
    events.append(_event(l, RESUBMIT, "seller2", amount=plan2_ii[l]))
    _close_stage(events, layout, s, l, plan1[l], plan2_ii[l])

    for n in range(l - 1, layout.n3, -1):
        events.append(_event(n, OFFER, "seller1", amount=plan1[n], horizon=float(n)))
        events.append(_event(n, OFFER, "seller2", amount=plan2_ii[n],
                             horizon=float(n - layout.n3)))
        _close_stage(events, layout, s, n, plan1[n], plan2_ii[n])

    _, plan3 = epoch3_value(s, layout, x_star)
    for n in range(layout.n3, 0, -1):
        events.append(_event(n, OFFER, "seller1", amount=plan3[n], horizon=float(n)))
        _close_stage(events, layout, s, n, plan3[n], None)

    return replay(events, s)
