"""Discrete-event simulation of an online policy.

The simulator owns the clock and the passengers. At every event time it
first releases new requests, then lands arriving vehicles, and finally asks
the policy once what each vehicle standing at a node should do. The policy
only ever sees requests released so far.
"""
from __future__ import annotations

import heapq
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Protocol

from .core import (
    DEPOT,
    DROPOFF,
    PICKUP,
    FleetConfig,
    Move,
    Request,
    RequestSequence,
    ServiceEvent,
    Topology,
    TransportationSchedule,
    fraction_to_json,
    make_onboard,
)

RELEASE = "release"
ARRIVAL = "arrival"
HORIZON_END = "horizon-end"
_KIND_ORDER = {RELEASE: 0, ARRIVAL: 1, HORIZON_END: 2}


class SimulationError(RuntimeError):
    """The policy produced an illegal action or stopped making progress."""


@dataclass(frozen=True, order=True)
class SimEvent:
    time: Fraction
    order: int
    ident: int
    kind: str = field(compare=False)

    @classmethod
    def make(cls, time, kind: str, ident: int) -> "SimEvent":
        return cls(time, _KIND_ORDER[kind], ident, kind)


@dataclass(frozen=True)
class Action:
    """What one stopped vehicle does now.

    Passengers in ``alight`` leave first, then ``board`` passengers enter;
    afterwards the vehicle either drives to the adjacent node ``move_to`` or
    waits where it is (``move_to is None``).
    """

    alight: tuple = ()
    board: tuple = ()
    move_to: Optional[int] = None


WAIT = Action()


@dataclass(frozen=True)
class VehicleView:
    id: int
    node: Optional[int]
    moving: bool
    onboard: tuple
    destination_counts: tuple

    @property
    def load(self) -> int:
        return sum(c for _, c in self.onboard)

    def onboard_dict(self) -> dict:
        return dict(self.onboard)


@dataclass(frozen=True)
class SimState:
    """Snapshot handed to the policy. ``waiting`` lists ``(request, count)`` in FIFO order."""

    time: Fraction
    horizon: Fraction
    horizon_reached: bool
    topology: Topology
    fleet: FleetConfig
    vehicles: tuple
    released: tuple
    waiting: tuple
    releases_pending: bool

    def waiting_at(self, node: int) -> list:
        return [(r, c) for r, c in self.waiting if r.origin == node]

    @property
    def requests(self) -> dict:
        return {r.id: r for r in self.released}


class Policy(Protocol):
    name: str

    def decide(self, state: SimState) -> dict:
        """Return ``{vehicle_id: Action}`` for vehicles standing at a node."""


@dataclass
class _Vehicle:
    id: int
    node: int = DEPOT
    moving: bool = False
    onboard: dict = field(default_factory=dict)
    tour: list = field(default_factory=list)
    pending_move: Optional[Move] = None


class Simulator:
    def __init__(self, policy, topo: Topology, sigma: RequestSequence, fleet: FleetConfig,
                 horizon: Optional[Fraction] = None, trace=None, max_rounds: int = 1_000_000):
        sigma.check_nodes(topo)
        self.policy = policy
        self.topo = topo
        self.sigma = sigma
        self.fleet = fleet
        self.horizon = Fraction(sigma.horizon if horizon is None else horizon)
        self.trace = trace
        self.max_rounds = max_rounds
        self.vehicles = [_Vehicle(i) for i in range(fleet.num_vehicles)]
        self.requests = sigma.by_id
        self.released = []
        self.waiting = {}
        self.delivered = {r.id: 0 for r in sigma.requests}
        self.events = []
        self.queue = []
        self.time = Fraction(0)
        self.horizon_reached = False

    def _log(self, **record) -> None:
        if self.trace is None:
            return
        out = {k: fraction_to_json(v) if isinstance(v, Fraction) else v for k, v in record.items()}
        self.trace.write(json.dumps(out, sort_keys=True) + "\n")

    def _state(self) -> SimState:
        views = []
        for v in self.vehicles:
            dests = {}
            for rid, c in v.onboard.items():
                y = self.requests[rid].destination
                dests[y] = dests.get(y, 0) + c
            views.append(VehicleView(v.id, None if v.moving else v.node, v.moving,
                                     make_onboard(v.onboard), tuple(sorted(dests.items()))))
        waiting = tuple((self.requests[rid], c) for rid, c in self.waiting.items() if c > 0)
        return SimState(self.time, self.horizon, self.horizon_reached, self.topo, self.fleet,
                        tuple(views), tuple(self.released), waiting, bool(self._pending_releases()))

    def _pending_releases(self) -> bool:
        return any(e.kind == RELEASE for e in self.queue)

    def _work_left(self) -> bool:
        return any(self.delivered[r.id] < r.load for r in self.sigma.requests)

    def _apply(self, v: _Vehicle, action: Action) -> None:
        if v.moving:
            raise SimulationError(f"t={self.time}: vehicle {v.id} is driving and cannot act")
        for rid, c in action.alight:
            if c <= 0 or v.onboard.get(rid, 0) < c:
                raise SimulationError(f"t={self.time}: vehicle {v.id} cannot drop {c} of request {rid}")
            if self.requests[rid].destination != v.node:
                raise SimulationError(f"t={self.time}: request {rid} dropped away from its destination")
            v.onboard[rid] -= c
            if not v.onboard[rid]:
                del v.onboard[rid]
            self.delivered[rid] += c
            self.events.append(ServiceEvent(DROPOFF, rid, c, v.node, self.time, v.id))
            self._log(t=self.time, event=DROPOFF, vehicle=v.id, request=rid, count=c, node=v.node)
        for rid, c in action.board:
            r = self.requests.get(rid)
            if c <= 0 or r is None or r.origin != v.node or self.waiting.get(rid, 0) < c:
                raise SimulationError(f"t={self.time}: vehicle {v.id} cannot board {c} of request {rid} "
                                      f"at node {v.node}")
            if sum(v.onboard.values()) + c > self.fleet.capacity:
                raise SimulationError(f"t={self.time}: vehicle {v.id} over capacity")
            self.waiting[rid] -= c
            v.onboard[rid] = v.onboard.get(rid, 0) + c
            self.events.append(ServiceEvent(PICKUP, rid, c, v.node, self.time, v.id))
            self._log(t=self.time, event=PICKUP, vehicle=v.id, request=rid, count=c, node=v.node)
        if action.move_to is not None:
            if not self.topo.is_legal_move(v.node, action.move_to):
                raise SimulationError(f"t={self.time}: illegal move {v.node}->{action.move_to}")
            length = self.topo.edge_length(v.node, action.move_to)
            arrive = self.time + length / self.fleet.speed
            move = Move(v.id, self.time, v.node, action.move_to, length, arrive, make_onboard(v.onboard))
            v.tour.append(move)
            v.pending_move = move
            v.moving = True
            heapq.heappush(self.queue, SimEvent.make(arrive, ARRIVAL, v.id))
            self._log(t=self.time, event="depart", vehicle=v.id, source=v.node, target=action.move_to)

    def run(self) -> TransportationSchedule:
        for r in self.sigma.requests:
            heapq.heappush(self.queue, SimEvent.make(r.release, RELEASE, r.id))
        heapq.heappush(self.queue, SimEvent.make(self.horizon, HORIZON_END, 0))
        rounds = 0
        while True:
            if self.queue:
                self.time = self.queue[0].time
                while self.queue and self.queue[0].time == self.time:
                    ev = heapq.heappop(self.queue)
                    if ev.kind == RELEASE:
                        r = self.requests[ev.ident]
                        self.released.append(r)
                        self.waiting[r.id] = r.load
                        self._log(t=self.time, event=RELEASE, request=r.id)
                    elif ev.kind == ARRIVAL:
                        v = self.vehicles[ev.ident]
                        v.node = v.pending_move.target
                        v.moving = False
                        v.pending_move = None
                        self._log(t=self.time, event=ARRIVAL, vehicle=v.id, node=v.node)
                    else:
                        self.horizon_reached = True
            elif not self._work_left() and all(v.node == DEPOT for v in self.vehicles):
                break
            rounds += 1
            if rounds > self.max_rounds:
                raise SimulationError("too many decision rounds")
            state = self._state()
            decisions = self.policy.decide(state) or {}
            any_move = False
            for vid, action in sorted(decisions.items()):
                if not 0 <= vid < len(self.vehicles):
                    raise SimulationError(f"unknown vehicle {vid}")
                self._apply(self.vehicles[vid], action)
                any_move = any_move or action.move_to is not None
            if not self.queue and not any_move:
                if self._work_left() or any(v.node != DEPOT for v in self.vehicles):
                    raise SimulationError(f"t={self.time}: policy {getattr(self.policy, 'name', '?')} "
                                          f"stalled with work left")
                break
        tours = tuple(tuple(v.tour) for v in self.vehicles)
        return TransportationSchedule(tours, tuple(self.events))


def run(policy, topo: Topology, sigma: RequestSequence, fleet: FleetConfig,
        horizon: Optional[Fraction] = None, trace=None) -> TransportationSchedule:
    """Simulate ``policy`` on the instance and return the recorded schedule."""
    return Simulator(policy, topo, sigma, fleet, horizon, trace).run()
