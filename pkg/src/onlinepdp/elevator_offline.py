"""Offline optimum for elevator mode (one vehicle on a line).

Release dates are ignored: the arc loads fix how often each up and down arc
must be driven, a min-cost integer flow links those traversals into one
depot-to-depot walk, and the vehicle simply waits at the depot until every
request is released before driving it.

The integer program is solved by a small branch and bound over LP
relaxations (scipy's HiGHS backend). Cuts ``delta(W) >= 2`` that forbid
cycles detached from the source are added lazily whenever an integral
solution contains one.
"""
from __future__ import annotations

import json
import math
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np
from scipy.optimize import linprog

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
    fraction_to_json,
    make_onboard,
)

SOURCE = ("s",)
SINK = ("t",)
UP_O, UP_D, DOWN_O, DOWN_D = "up_o", "up_d", "down_o", "down_d"

A_SOURCE, A_UP, A_DOWN, A_LINK, A_SINK = "source", "up", "down", "link", "sink"

_TOL = 1e-6


class EmptyNetworkError(ValueError):
    """No arc has to be driven, so there is nothing to optimize."""


class SolverError(RuntimeError):
    """The integer program could not be solved."""


class DecompositionError(RuntimeError):
    """No ordering of the optimal walk could route every passenger."""


def _require_line(topo: Topology) -> None:
    if topo.is_circuit:
        raise ValueError("elevator mode needs a line topology")


@dataclass(frozen=True)
class ArcLoads:
    """Passenger loads per line edge; index ``i`` is the edge ``v_i - v_{i+1}``."""

    up_load: tuple
    down_load: tuple
    capacity: int

    @property
    def m_up(self) -> tuple:
        return tuple(math.ceil(x / self.capacity) for x in self.up_load)

    @property
    def m_down(self) -> tuple:
        return tuple(math.ceil(x / self.capacity) for x in self.down_load)

    @property
    def total_multiplicity(self) -> int:
        return sum(self.m_up) + sum(self.m_down)


def compute_arc_loads(sigma: RequestSequence, topo: Topology, fleet: FleetConfig) -> ArcLoads:
    _require_line(topo)
    sigma.check_nodes(topo)
    up = edge_loads(topo, sigma.requests, forward=True)
    down = edge_loads(topo, sigma.requests, forward=False)
    return ArcLoads(tuple(up), tuple(down), fleet.capacity)


@dataclass(frozen=True)
class FlowArc:
    tail: tuple
    head: tuple
    cost: Fraction
    kind: str
    required: Optional[int] = None


@dataclass(frozen=True)
class FlowNetwork:
    nodes: tuple
    arcs: tuple
    topology: Topology

    @staticmethod
    def position(node: tuple) -> int:
        return DEPOT if node in (SOURCE, SINK) else node[1]

    def upper_bound(self, arc: FlowArc) -> int:
        if arc.required is not None:
            return arc.required
        if arc.kind in (A_SOURCE, A_SINK):
            return 1
        return sum(a.required for a in self.arcs if a.required is not None)

    def to_dict(self) -> dict:
        """Plain structure for debugging dumps."""
        def name(v):
            return v[0] if len(v) == 1 else f"{v[0]}{v[1]}"
        return {
            "nodes": [name(v) for v in self.nodes],
            "arcs": [
                {"tail": name(a.tail), "head": name(a.head), "cost": fraction_to_json(a.cost),
                 "kind": a.kind, "required": a.required}
                for a in self.arcs
            ],
        }


def build_flow_network(loads: ArcLoads, topo: Topology) -> FlowNetwork:
    """Network with four copies per line node plus source and sink.

    Link arcs run from every destination copy (up or down) to every origin
    copy (up or down), so the walk can also continue in the same direction.
    """
    _require_line(topo)
    if loads.total_multiplicity == 0:
        raise EmptyNetworkError("all multiplicities are zero")
    m_up, m_down = loads.m_up, loads.m_down
    required = []
    origins = []
    dests = []
    for i, m in enumerate(m_up):
        if m:
            required.append(((UP_O, i), (UP_D, i + 1), m, A_UP))
            origins.append((UP_O, i))
            dests.append((UP_D, i + 1))
    for i, m in enumerate(m_down):
        if m:
            required.append(((DOWN_O, i + 1), (DOWN_D, i), m, A_DOWN))
            origins.append((DOWN_O, i + 1))
            dests.append((DOWN_D, i))
    order = {UP_O: 0, UP_D: 1, DOWN_O: 2, DOWN_D: 3}
    origins.sort(key=lambda v: (order[v[0]], v[1]))
    dests.sort(key=lambda v: (order[v[0]], v[1]))

    def d(u, v):
        return topo.distance(FlowNetwork.position(u), FlowNetwork.position(v))

    arcs = [FlowArc(SOURCE, o, d(SOURCE, o), A_SOURCE) for o in origins]
    arcs += [FlowArc(u, v, d(u, v), kind, m) for u, v, m, kind in required]
    arcs += [FlowArc(u, v, d(u, v), A_LINK) for u in dests for v in origins]
    arcs += [FlowArc(u, SINK, d(u, SINK), A_SINK) for u in dests]
    nodes = (SOURCE,) + tuple(origins) + tuple(dests) + (SINK,)
    return FlowNetwork(nodes, tuple(arcs), topo)


@dataclass(frozen=True)
class IntegerFlow:
    network: FlowNetwork
    flow: tuple
    objective: Fraction
    cuts: tuple = ()
    lp_solves: int = 0

    def arc_flows(self) -> list:
        return [(a, f) for a, f in zip(self.network.arcs, self.flow) if f]

    def to_dict(self) -> dict:
        data = self.network.to_dict()
        for arc, f in zip(data["arcs"], self.flow):
            arc["flow"] = f
        data["objective"] = fraction_to_json(self.objective)
        return data

    def dump(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _detached_components(net: FlowNetwork, flow) -> list:
    """Node sets of support components that do not contain the source."""
    parent = {v: v for v in net.nodes}

    def find(v):
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    touched = set()
    for a, f in zip(net.arcs, flow):
        if f > 0:
            touched.update((a.tail, a.head))
            ra, rb = find(a.tail), find(a.head)
            if ra != rb:
                parent[ra] = rb
    groups = defaultdict(set)
    for v in touched:
        groups[find(v)].add(v)
    root = find(SOURCE)
    return [frozenset(g) for r, g in groups.items() if r != root]


@dataclass
class _Model:
    net: FlowNetwork
    c: np.ndarray
    a_eq: np.ndarray
    b_eq: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    cut_rows: list = field(default_factory=list)
    cuts: list = field(default_factory=list)
    solves: int = 0

    def add_cut(self, w: frozenset) -> None:
        if w in self.cuts:
            raise AssertionError(f"cut for {sorted(w)} generated twice")
        row = np.zeros(len(self.net.arcs))
        for j, a in enumerate(self.net.arcs):
            if (a.tail in w) != (a.head in w):
                row[j] = -1.0
        self.cut_rows.append(row)
        self.cuts.append(w)

    def solve_lp(self, lower, upper):
        self.solves += 1
        kwargs = {}
        if self.cut_rows:
            kwargs["A_ub"] = np.array(self.cut_rows)
            kwargs["b_ub"] = np.full(len(self.cut_rows), -2.0)
        res = linprog(self.c, A_eq=self.a_eq, b_eq=self.b_eq, bounds=list(zip(lower, upper)),
                      method="highs", **kwargs)
        if res.status == 2:
            return None
        if res.status != 0:
            raise SolverError(f"LP solver failed: {res.message}")
        return res


def _build_model(net: FlowNetwork) -> _Model:
    """Equality rows: one unit out of the source, conservation at inner nodes."""
    n_arcs = len(net.arcs)
    internal = [v for v in net.nodes if v not in (SOURCE, SINK)]
    rows = []
    rhs = []
    out_s = np.zeros(n_arcs)
    for j, a in enumerate(net.arcs):
        if a.tail == SOURCE:
            out_s[j] = 1.0
    rows.append(out_s)
    rhs.append(1.0)
    for v in internal:
        row = np.zeros(n_arcs)
        for j, a in enumerate(net.arcs):
            if a.head == v:
                row[j] += 1.0
            if a.tail == v:
                row[j] -= 1.0
        rows.append(row)
        rhs.append(0.0)
    lower = np.array([float(a.required or 0) for a in net.arcs])
    upper = np.array([float(net.upper_bound(a)) for a in net.arcs])
    c = np.array([float(a.cost) for a in net.arcs])
    return _Model(net, c, np.array(rows), np.array(rhs), lower, upper)


def solve_min_cost_flow(net: FlowNetwork, max_nodes: int = 100_000) -> IntegerFlow:
    """Exact integer optimum by depth-first branch and bound with lazy cuts."""
    model = _build_model(net)
    costs = [a.cost for a in net.arcs]
    # branch on expensive arcs first
    branch_order = sorted(range(len(net.arcs)), key=lambda j: (-costs[j], j))
    best = None
    best_value = math.inf
    stack = [(model.lower.copy(), model.upper.copy())]
    explored = 0
    while stack:
        lower, upper = stack.pop()
        explored += 1
        if explored > max_nodes:
            raise SolverError("branch and bound node limit exceeded")
        while True:
            res = model.solve_lp(lower, upper)
            if res is None or res.fun >= best_value - _TOL:
                break
            x = res.x
            frac = [j for j in branch_order if abs(x[j] - round(x[j])) > _TOL]
            if frac:
                j = frac[0]
                lo_up = upper.copy()
                lo_up[j] = math.floor(x[j])
                hi_lo = lower.copy()
                hi_lo[j] = math.ceil(x[j])
                stack.append((lower, lo_up))
                stack.append((hi_lo, upper))
                break
            flow = tuple(int(round(v)) for v in x)
            detached = _detached_components(net, flow)
            if detached:
                for w in detached:
                    model.add_cut(w)
                continue
            value = sum((c * f for c, f in zip(costs, flow)), Fraction(0))
            best_value = float(value)
            best = (flow, value)
            break
    if best is None:
        raise SolverError("integer program is infeasible")
    flow, value = best
    return IntegerFlow(net, flow, value, tuple(model.cuts), model.solves)


# ---------------------------------------------------------------------------
# decomposition into a schedule


def _euler_path(net: FlowNetwork, flow) -> list:
    """Hierholzer on the support multigraph; returns the arcs from source to sink."""
    out = defaultdict(list)
    for a, f in zip(net.arcs, flow):
        out[a.tail].extend([a] * f)
    for v in out:
        out[v].reverse()
    stack = [(SOURCE, None)]
    path = []
    while stack:
        v, via = stack[-1]
        if out[v]:
            a = out[v].pop()
            stack.append((a.head, a))
        else:
            stack.pop()
            if via is not None:
                path.append(via)
    path.reverse()
    if sum(flow) != len(path):
        raise DecompositionError("flow support is not connected")
    return path


def _physical_walk(net: FlowNetwork, arcs: list) -> list:
    walk = [DEPOT]
    for a in arcs:
        target = FlowNetwork.position(a.head)
        step = 1 if target > walk[-1] else -1
        while walk[-1] != target:
            walk.append(walk[-1] + step)
    return walk


class _Router:
    """Greedy passenger assignment for a fixed order of traversals.

    Passengers waiting at the tail of a traversal ride it if they travel in
    its direction; when more than ``Cap`` qualify, the ones going farthest
    win. Passengers may wait at intermediate nodes for a later traversal.
    """

    def __init__(self, sigma: RequestSequence, cap: int):
        self.cap = cap
        self.dest = {r.id: r.destination for r in sigma.requests}
        self.at = defaultdict(int)
        for r in sigma.requests:
            self.at[(r.id, r.origin)] += r.load

    def copy(self) -> "_Router":
        other = object.__new__(_Router)
        other.cap = self.cap
        other.dest = self.dest
        other.at = defaultdict(int, self.at)
        return other

    def step(self, u: int, v: int) -> dict:
        up = v > u
        cand = []
        for (rid, node), c in self.at.items():
            if node != u or c <= 0:
                continue
            y = self.dest[rid]
            if (y > u) if up else (y < u):
                cand.append((-y if up else y, rid, c))
        cand.sort()
        room = self.cap
        riders = {}
        for _, rid, c in cand:
            if room <= 0:
                break
            k = min(room, c)
            riders[rid] = k
            room -= k
            self.at[(rid, u)] -= k
            if self.dest[rid] != v:
                self.at[(rid, v)] += k
        return riders

    def pending(self) -> int:
        return sum(c for (rid, node), c in self.at.items() if node != self.dest[rid] and c > 0)

    def demand(self, edge: int, up: bool) -> int:
        """Passengers still needing to cross ``edge`` in the given direction."""
        total = 0
        for (rid, node), c in self.at.items():
            if c <= 0:
                continue
            y = self.dest[rid]
            if up and node <= edge < y:
                total += c
            elif not up and y <= edge < node:
                total += c
        return total


def _route(walk: list, sigma: RequestSequence, cap: int):
    router = _Router(sigma, cap)
    riders = [router.step(u, v) for u, v in zip(walk, walk[1:])]
    return riders if router.pending() == 0 else None


def _search_walk(walk: list, sigma: RequestSequence, cap: int, limit: int):
    """Depth-first search over reorderings of the walk's edge traversals."""
    n_edges = max(walk) if walk else 0
    up = [0] * max(n_edges, 1)
    down = [0] * max(n_edges, 1)
    for u, v in zip(walk, walk[1:]):
        if v > u:
            up[u] += 1
        else:
            down[v] += 1
    total = len(walk) - 1
    budget = [limit]

    def feasible(router: _Router) -> bool:
        for e in range(len(up)):
            if router.demand(e, True) > cap * up[e] or router.demand(e, False) > cap * down[e]:
                return False
        return True

    def dfs(pos: int, router: _Router, done: list):
        budget[0] -= 1
        if budget[0] < 0:
            raise DecompositionError("walk search exceeded its node limit")
        if len(done) == total:
            return done if pos == DEPOT and router.pending() == 0 else None
        options = []
        if pos < len(up) and up[pos] > 0:
            options.append(pos + 1)
        if pos > 0 and down[pos - 1] > 0:
            above = any(up[e] or down[e] for e in range(pos, len(up)))
            if up[pos - 1] > 0 or not above:
                options.append(pos - 1)
        for nxt in options:
            edge = min(pos, nxt)
            counter = up if nxt > pos else down
            counter[edge] -= 1
            child = router.copy()
            riders = child.step(pos, nxt)
            if feasible(child):
                found = dfs(nxt, child, done + [(pos, nxt, riders)])
                if found is not None:
                    counter[edge] += 1
                    return found
            counter[edge] += 1
        return None

    result = dfs(DEPOT, _Router(sigma, cap), [])
    if result is None:
        return None
    walk2 = [DEPOT] + [v for _, v, _ in result]
    return walk2, [r for _, _, r in result]


def decompose_flow(flow: Optional[IntegerFlow], net: Optional[FlowNetwork], sigma: RequestSequence,
                   fleet: FleetConfig, search_limit: int = 200_000) -> TransportationSchedule:
    """Turn an optimal flow into a timed single-vehicle schedule.

    The Euler path of the flow is expanded into line moves and passengers
    are routed greedily; if that ordering strands somebody, other orderings
    of the same traversals are searched. The vehicle waits at the depot
    until the last release, so every pickup is on time. Passengers may
    change vehicle trips at intermediate stops.
    """
    if flow is None or not any(flow.flow):
        return TransportationSchedule.empty(fleet.num_vehicles)
    topo = net.topology
    walk = _physical_walk(net, _euler_path(net, flow.flow))
    riders = _route(walk, sigma, fleet.capacity)
    if riders is None:
        found = _search_walk(walk, sigma, fleet.capacity, search_limit)
        if found is None:
            raise DecompositionError("no ordering of the optimal traversals serves every passenger")
        walk, riders = found
    t = sigma.last_release
    moves = []
    events = []
    previous = {}
    for k, (u, v) in enumerate(zip(walk, walk[1:])):
        now = riders[k]
        for rid in sorted(set(previous) | set(now)):
            drop = previous.get(rid, 0) - now.get(rid, 0)
            if drop > 0:
                events.append(ServiceEvent(DROPOFF, rid, drop, u, t, 0))
        for rid in sorted(set(previous) | set(now)):
            pick = now.get(rid, 0) - previous.get(rid, 0)
            if pick > 0:
                events.append(ServiceEvent(PICKUP, rid, pick, u, t, 0))
        length = topo.edge_length(u, v)
        arrive = t + length / fleet.speed
        moves.append(Move(0, t, u, v, length, arrive, make_onboard(now)))
        t = arrive
        previous = now
    for rid, c in sorted(previous.items()):
        events.append(ServiceEvent(DROPOFF, rid, c, walk[-1], t, 0))
    tours = (tuple(moves),) + tuple(() for _ in range(fleet.num_vehicles - 1))
    return TransportationSchedule(tours, tuple(events))


def elevator_opt(sigma: RequestSequence, topo: Topology, fleet: FleetConfig):
    """Solve and decompose; returns ``(flow or None, schedule)``."""
    loads = compute_arc_loads(sigma, topo, fleet)
    try:
        net = build_flow_network(loads, topo)
    except EmptyNetworkError:
        return None, TransportationSchedule.empty(fleet.num_vehicles)
    flow = solve_min_cost_flow(net)
    return flow, decompose_flow(flow, net, sigma, fleet)


def elevator_opt_cost(sigma: RequestSequence, topo: Topology, fleet: FleetConfig) -> Fraction:
    loads = compute_arc_loads(sigma, topo, fleet)
    try:
        net = build_flow_network(loads, topo)
    except EmptyNetworkError:
        return Fraction(0)
    return solve_min_cost_flow(net).objective
