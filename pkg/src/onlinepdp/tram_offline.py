"""Offline optimum for tram mode (circuit, one driving direction).

The circuit is cut open at the depot into the path ``P = (v_0, ..., v_n, v_0)``.
Every passenger becomes an interval on ``P``; a greedy colouring of the
resulting interval graph assigns passengers to seats, and ``Cap`` colour
classes fit into one loop of the circuit.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from fractions import Fraction

from .core import (
    DEPOT,
    DROPOFF,
    PICKUP,
    FleetConfig,
    Move,
    RequestSequence,
    ServiceEvent,
    Topology,
    TransportationSchedule,
    edge_loads,
    make_onboard,
)


class CrossesDepotError(ValueError):
    """A request would have to pass through the depot in its interior."""


@dataclass(frozen=True, order=True)
class PassengerInterval:
    """One passenger of request ``request_id`` riding from ``start`` to ``end`` on ``P``.

    Positions are node indices on the cut-open path, so the depot appears as
    ``0`` at the start and as ``n + 1`` at the end.
    """

    start: int
    end: int
    request_id: int
    passenger: int

    @property
    def label(self) -> str:
        return f"I_{self.request_id}.{self.passenger}"

    def overlaps(self, other: "PassengerInterval") -> bool:
        # touching endpoints do not conflict: a seat is freed and reused at the same stop
        return self.start < other.end and other.start < self.end


@dataclass(frozen=True)
class IntervalColoring:
    intervals: tuple
    colors: tuple
    clique_number: int

    @property
    def num_colors(self) -> int:
        return max(self.colors, default=0)

    def color_of(self, interval: PassengerInterval) -> int:
        return self.colors[self.intervals.index(interval)]

    def classes(self) -> dict:
        out = {}
        for iv, c in zip(self.intervals, self.colors):
            out.setdefault(c, []).append(iv)
        return out


def _require_circuit(topo: Topology) -> None:
    if not topo.is_circuit:
        raise ValueError("tram mode needs a circuit topology")


def request_interval(topo: Topology, origin: int, destination: int) -> tuple:
    """Endpoints of ``origin -> destination`` on the cut-open path, or raise."""
    _require_circuit(topo)
    end = destination if destination != DEPOT else topo.n + 1
    if end <= origin:
        raise CrossesDepotError(f"request {origin}->{destination} passes through the depot")
    return origin, end


def split_to_intervals(sigma: RequestSequence, topo: Topology) -> list:
    """One interval per passenger, sorted by left endpoint (ties: right endpoint, id)."""
    _require_circuit(topo)
    out = []
    for r in sigma.requests:
        start, end = request_interval(topo, r.origin, r.destination)
        out.extend(PassengerInterval(start, end, r.id, p) for p in range(1, r.load + 1))
    out.sort()
    return out


def greedy_color(intervals: list) -> IntervalColoring:
    """Smallest-free-colour greedy in left-endpoint order.

    A heap of (end, colour) for active intervals and a heap of released
    colours keep this at ``O(N log N)``.
    """
    intervals = tuple(intervals)
    for a, b in zip(intervals, intervals[1:]):
        if b.start < a.start:
            raise ValueError("intervals must be sorted by left endpoint")
    active = []
    free = []
    next_color = 1
    colors = []
    clique = 0
    for iv in intervals:
        while active and active[0][0] <= iv.start:
            _, c = heapq.heappop(active)
            heapq.heappush(free, c)
        if free:
            c = heapq.heappop(free)
        else:
            c = next_color
            next_color += 1
        colors.append(c)
        heapq.heappush(active, (iv.end, c))
        clique = max(clique, len(active))
    return IntervalColoring(intervals, tuple(colors), clique)


def max_edge_load(sigma: RequestSequence, topo: Topology) -> int:
    """Largest number of passengers crossing one circuit edge."""
    _require_circuit(topo)
    for r in sigma.requests:
        request_interval(topo, r.origin, r.destination)
    return max(edge_loads(topo, sigma.requests), default=0)


def opt_tram_cost(sigma: RequestSequence, topo: Topology, fleet: FleetConfig) -> Fraction:
    """``ceil(w / Cap) * |C|``; independent of the number of vehicles."""
    w = max_edge_load(sigma, topo)
    return math.ceil(w / fleet.capacity) * topo.total_length


def opt_tram_schedule(sigma: RequestSequence, topo: Topology, fleet: FleetConfig) -> TransportationSchedule:
    """Wait until the last release, then run one loop per group of ``Cap`` colours.

    Colours are grouped in ascending order and loops are handed to the
    vehicles round-robin; all loops start at the last release time.
    """
    coloring = greedy_color(split_to_intervals(sigma, topo))
    k = coloring.num_colors
    if k == 0:
        return TransportationSchedule.empty(fleet.num_vehicles)
    classes = coloring.classes()
    start_time = sigma.last_release
    tours = [[] for _ in range(fleet.num_vehicles)]
    clocks = [start_time] * fleet.num_vehicles
    events = []
    num_loops = math.ceil(k / fleet.capacity)
    for loop in range(num_loops):
        v = loop % fleet.num_vehicles
        group = range(loop * fleet.capacity + 1, min(k, (loop + 1) * fleet.capacity) + 1)
        riders = [iv for c in group for iv in classes[c]]
        boarding = {}
        alighting = {}
        for iv in riders:
            boarding.setdefault(iv.start, {}).setdefault(iv.request_id, 0)
            boarding[iv.start][iv.request_id] += 1
            end = iv.end % (topo.n + 1)
            alighting.setdefault(end, {}).setdefault(iv.request_id, 0)
            alighting[end][iv.request_id] += 1
        onboard = {}
        t = clocks[v]
        for pos in range(topo.n + 1):
            # the depot at the end of the loop is handled after the last move
            if pos != DEPOT:
                for rid, c in sorted(alighting.get(pos, {}).items()):
                    events.append(ServiceEvent(DROPOFF, rid, c, pos, t, v))
                    onboard[rid] -= c
            for rid, c in sorted(boarding.get(pos, {}).items()):
                events.append(ServiceEvent(PICKUP, rid, c, pos, t, v))
                onboard[rid] = onboard.get(rid, 0) + c
            nxt = (pos + 1) % (topo.n + 1)
            length = topo.edge_length(pos, nxt)
            arrive = t + length / fleet.speed
            tours[v].append(Move(v, t, pos, nxt, length, arrive, make_onboard(onboard)))
            t = arrive
        for rid, c in sorted(alighting.get(DEPOT, {}).items()):
            events.append(ServiceEvent(DROPOFF, rid, c, DEPOT, t, v))
        clocks[v] = t
    return TransportationSchedule(tuple(tuple(t) for t in tours), tuple(events))
