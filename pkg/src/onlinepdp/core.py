"""Domain model: networks, requests, fleets, schedules and their validation.

All lengths and times are exact :class:`fractions.Fraction` values so that
tour lengths and competitive ratios can be compared without rounding.
"""
from __future__ import annotations

import json
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

CIRCUIT = "circuit"
LINE = "line"
DEPOT = 0

PICKUP = "pickup"
DROPOFF = "dropoff"


def as_fraction(value) -> Fraction:
    """Convert ints, decimal floats and ``"p/q"`` strings to an exact Fraction."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not numbers here")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        # repr keeps the decimal the user wrote (0.1 -> 1/10, not the binary value)
        return Fraction(repr(value))
    return Fraction(str(value))


def fraction_to_json(value: Fraction):
    value = Fraction(value)
    if value.denominator == 1:
        return value.numerator
    return f"{value.numerator}/{value.denominator}"


@dataclass(frozen=True)
class Topology:
    """A circuit or a line with depot ``v_0 = 0``.

    A line ``v_0..v_n`` has ``n`` edges and is traversed in both directions.
    A circuit ``v_0..v_n`` has ``n + 1`` edges (the last closes ``v_n -> v_0``)
    and is traversed in increasing index order only.
    """

    kind: str
    edge_lengths: tuple

    def __post_init__(self):
        if self.kind not in (CIRCUIT, LINE):
            raise ValueError(f"unknown topology kind {self.kind!r}")
        lengths = tuple(as_fraction(x) for x in self.edge_lengths)
        min_edges = 2 if self.kind == CIRCUIT else 1
        if len(lengths) < min_edges:
            raise ValueError(f"a {self.kind} needs at least {min_edges} edges")
        if any(x <= 0 for x in lengths):
            raise ValueError("edge lengths must be positive")
        object.__setattr__(self, "edge_lengths", lengths)

    @classmethod
    def circuit(cls, lengths: Iterable) -> "Topology":
        return cls(CIRCUIT, tuple(lengths))

    @classmethod
    def line(cls, lengths: Iterable) -> "Topology":
        return cls(LINE, tuple(lengths))

    @classmethod
    def unit_circuit(cls, n: int) -> "Topology":
        """Circuit ``v_0..v_n`` with unit edges, so ``|C| = n + 1``."""
        return cls(CIRCUIT, (1,) * (n + 1))

    @classmethod
    def unit_line(cls, n: int) -> "Topology":
        """Line ``v_0..v_n`` with unit edges, so ``|L| = n``."""
        return cls(LINE, (1,) * n)

    @property
    def is_circuit(self) -> bool:
        return self.kind == CIRCUIT

    @property
    def n(self) -> int:
        """Index of the last node."""
        return len(self.edge_lengths) - 1 if self.is_circuit else len(self.edge_lengths)

    @property
    def nodes(self) -> range:
        return range(self.n + 1)

    @property
    def total_length(self) -> Fraction:
        return sum(self.edge_lengths, Fraction(0))

    def check_node(self, v) -> int:
        if not isinstance(v, int) or isinstance(v, bool) or not 0 <= v <= self.n:
            raise ValueError(f"unknown node {v!r} (valid: 0..{self.n})")
        return v

    def successors(self, u: int) -> tuple:
        self.check_node(u)
        if self.is_circuit:
            return ((u + 1) % (self.n + 1),)
        return tuple(v for v in (u - 1, u + 1) if 0 <= v <= self.n)

    def is_legal_move(self, u: int, v: int) -> bool:
        try:
            return v in self.successors(u)
        except ValueError:
            return False

    def edge_length(self, u: int, v: int) -> Fraction:
        """Length of the single edge between adjacent nodes in the legal direction."""
        if not self.is_legal_move(u, v):
            raise ValueError(f"illegal move {u}->{v} on {self.kind}")
        if self.is_circuit:
            return self.edge_lengths[u]
        return self.edge_lengths[min(u, v)]

    def offset(self, v: int) -> Fraction:
        """Distance from the depot going forward (circuit) or outward (line)."""
        self.check_node(v)
        return sum(self.edge_lengths[:v], Fraction(0))

    def distance(self, u: int, v: int) -> Fraction:
        self.check_node(u)
        self.check_node(v)
        if self.is_circuit:
            d = self.offset(v) - self.offset(u)
            return d if d >= 0 else d + self.total_length
        return abs(self.offset(v) - self.offset(u))

    def to_dict(self) -> dict:
        return {"kind": self.kind, "edge_lengths": [fraction_to_json(x) for x in self.edge_lengths]}

    @classmethod
    def from_dict(cls, data: dict) -> "Topology":
        return cls(data["kind"], tuple(data["edge_lengths"]))


def distance(topo: Topology, u: int, v: int) -> Fraction:
    """Shortest legal path length from ``u`` to ``v``."""
    return topo.distance(u, v)


@dataclass(frozen=True)
class Request:
    id: int
    release: Fraction
    origin: int
    destination: int
    load: int

    def __post_init__(self):
        object.__setattr__(self, "release", as_fraction(self.release))
        if self.release < 0:
            raise ValueError(f"request {self.id}: negative release time")
        if self.origin == self.destination:
            raise ValueError(f"request {self.id}: origin equals destination")
        if not isinstance(self.load, int) or self.load < 1:
            raise ValueError(f"request {self.id}: load must be a positive integer")


@dataclass(frozen=True)
class RequestSequence:
    requests: tuple
    horizon: Fraction

    def __post_init__(self):
        reqs = tuple(self.requests)
        object.__setattr__(self, "requests", reqs)
        object.__setattr__(self, "horizon", as_fraction(self.horizon))
        if len({r.id for r in reqs}) != len(reqs):
            raise ValueError("request ids must be unique")
        for a, b in zip(reqs, reqs[1:]):
            if b.release < a.release:
                raise ValueError("requests must be sorted by release time")
        if reqs and reqs[-1].release > self.horizon:
            raise ValueError("horizon precedes the last release")

    @classmethod
    def from_tuples(cls, rows: Iterable, horizon=None) -> "RequestSequence":
        """Build from ``(t, x, y, z)`` tuples; ids follow the given order."""
        reqs = [Request(i, t, x, y, z) for i, (t, x, y, z) in enumerate(rows)]
        order = sorted(reqs, key=lambda r: (r.release, r.id))
        if horizon is None:
            horizon = order[-1].release if order else 0
        return cls(tuple(order), horizon)

    def __len__(self) -> int:
        return len(self.requests)

    def __iter__(self):
        return iter(self.requests)

    @property
    def by_id(self) -> dict:
        return {r.id: r for r in self.requests}

    @property
    def last_release(self) -> Fraction:
        return self.requests[-1].release if self.requests else Fraction(0)

    @property
    def total_passengers(self) -> int:
        return sum(r.load for r in self.requests)

    def check_nodes(self, topo: Topology) -> None:
        for r in self.requests:
            topo.check_node(r.origin)
            topo.check_node(r.destination)


@dataclass(frozen=True)
class FleetConfig:
    num_vehicles: int = 1
    capacity: int = 1
    speed: Fraction = Fraction(1)

    def __post_init__(self):
        object.__setattr__(self, "speed", as_fraction(self.speed))
        if self.num_vehicles < 1:
            raise ValueError("need at least one vehicle")
        if self.capacity < 1:
            raise ValueError("capacity must be at least 1")
        if self.speed <= 0:
            raise ValueError("speed must be positive")


@dataclass(frozen=True)
class Move:
    """One edge traversal. ``onboard`` holds ``(request_id, count)`` pairs."""

    vehicle: int
    depart: Fraction
    source: int
    target: int
    length: Fraction
    arrive: Fraction
    onboard: tuple = ()

    @property
    def load(self) -> int:
        return sum(c for _, c in self.onboard)


@dataclass(frozen=True)
class ServiceEvent:
    kind: str
    request_id: int
    count: int
    node: int
    time: Fraction
    vehicle: int


@dataclass(frozen=True)
class TransportationSchedule:
    """Per-vehicle tours plus the pickup/dropoff events that realize them."""

    tours: tuple
    events: tuple = ()

    @classmethod
    def empty(cls, num_vehicles: int = 1) -> "TransportationSchedule":
        return cls(tuple(() for _ in range(num_vehicles)), ())

    @property
    def moves(self) -> list:
        return [m for tour in self.tours for m in tour]

    @property
    def total_tour_length(self) -> Fraction:
        return total_tour_length(self)


def total_tour_length(schedule: TransportationSchedule) -> Fraction:
    """Total distance driven by all vehicles; waiting is free."""
    return sum((m.length for tour in schedule.tours for m in tour), Fraction(0))


def make_onboard(counts: dict) -> tuple:
    return tuple(sorted((rid, c) for rid, c in counts.items() if c > 0))


@dataclass(frozen=True)
class Violation:
    kind: str
    message: str


@dataclass
class ValidationReport:
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def kinds(self) -> Counter:
        return Counter(v.kind for v in self.violations)

    def add(self, kind: str, message: str) -> None:
        self.violations.append(Violation(kind, message))

    def __str__(self) -> str:
        if self.ok:
            return "valid schedule"
        return "\n".join(f"[{v.kind}] {v.message}" for v in self.violations)


_INF = float("inf")


def validate_schedule(
    schedule: TransportationSchedule,
    sigma: RequestSequence,
    topo: Topology,
    fleet: FleetConfig,
    allow_transfers: bool = False,
) -> ValidationReport:
    """Check a schedule against the instance and list every violation found.

    Violation kinds: ``fleet``, ``depot``, ``direction``, ``continuity``,
    ``timing``, ``capacity``, ``onboard``, ``stop``, ``pickup``,
    ``dropoff``, ``early-service``, ``preemption`` and ``unserved``.
    With ``allow_transfers`` a passenger may leave the vehicle at an
    intermediate node and continue later (node-preemption).
    """
    report = ValidationReport()
    reqs = sigma.by_id

    if len(schedule.tours) > fleet.num_vehicles:
        report.add("fleet", f"{len(schedule.tours)} tours for {fleet.num_vehicles} vehicles")

    visits = {}
    timeline = []
    for v, tour in enumerate(schedule.tours):
        stops = []
        if not tour:
            stops.append((DEPOT, -_INF, _INF))
            visits[v] = stops
            continue
        if tour[0].source != DEPOT:
            report.add("depot", f"vehicle {v} starts at node {tour[0].source}")
        if tour[-1].target != DEPOT:
            report.add("depot", f"vehicle {v} ends at node {tour[-1].target}")
        if tour[0].depart < 0:
            report.add("timing", f"vehicle {v} departs before time 0")
        stops.append((tour[0].source, -_INF, tour[0].depart))
        for k, mv in enumerate(tour):
            if mv.vehicle != v:
                report.add("continuity", f"move {k} of tour {v} is labelled vehicle {mv.vehicle}")
            if not topo.is_legal_move(mv.source, mv.target):
                report.add("direction", f"vehicle {v} moves {mv.source}->{mv.target} on a {topo.kind}")
            elif mv.length != topo.edge_length(mv.source, mv.target):
                report.add("timing", f"vehicle {v} move {k} has wrong length {mv.length}")
            if mv.arrive != mv.depart + mv.length / fleet.speed:
                report.add("timing", f"vehicle {v} move {k} arrives at {mv.arrive}, expected "
                                     f"{mv.depart + mv.length / fleet.speed}")
            if k + 1 < len(tour):
                nxt = tour[k + 1]
                if nxt.source != mv.target:
                    report.add("continuity", f"vehicle {v} jumps from {mv.target} to {nxt.source}")
                if nxt.depart < mv.arrive:
                    report.add("continuity", f"vehicle {v} departs {nxt.source} before arriving")
                end = nxt.depart
            else:
                end = _INF
            stops.append((mv.target, mv.arrive, end))
            if mv.load > fleet.capacity:
                report.add("capacity", f"vehicle {v} carries {mv.load} > {fleet.capacity} "
                                       f"on {mv.source}->{mv.target} at t={mv.depart}")
            timeline.append((mv.depart, 2, v, k, mv))
        visits[v] = stops

    for ev in schedule.events:
        order = 0 if ev.kind == DROPOFF else 1
        timeline.append((ev.time, order, ev.vehicle, -1, ev))
    timeline.sort(key=lambda e: (e[0], e[1], e[2], e[3]))

    waiting = defaultdict(int)
    released = {}
    for r in sigma.requests:
        waiting[(r.id, r.origin)] += r.load
        released[r.id] = r.release
    aboard = defaultdict(lambda: defaultdict(int))
    delivered = defaultdict(int)

    for time, _, v, _, item in timeline:
        if isinstance(item, Move):
            actual = make_onboard(aboard[v])
            if actual != tuple(sorted(item.onboard)):
                report.add("onboard", f"vehicle {v} leaves {item.source} at t={time} with {actual}, "
                                      f"move records {item.onboard}")
            continue
        ev = item
        if ev.request_id not in reqs:
            report.add("pickup", f"event for unknown request {ev.request_id}")
            continue
        r = reqs[ev.request_id]
        if ev.vehicle not in visits:
            report.add("stop", f"event for unknown vehicle {ev.vehicle}")
            continue
        if not any(node == ev.node and lo <= ev.time <= hi for node, lo, hi in visits[ev.vehicle]):
            report.add("stop", f"vehicle {ev.vehicle} is not at node {ev.node} at t={ev.time}")
        if ev.count <= 0:
            report.add(ev.kind, f"non-positive count in {ev}")
            continue
        if ev.kind == PICKUP:
            if ev.time < released[r.id]:
                report.add("early-service", f"request {r.id} picked up at t={ev.time} "
                                            f"before release {r.release}")
            if waiting[(r.id, ev.node)] < ev.count:
                report.add("pickup", f"request {r.id}: only {waiting[(r.id, ev.node)]} waiting at "
                                     f"node {ev.node}, picked {ev.count}")
            waiting[(r.id, ev.node)] -= ev.count
            aboard[ev.vehicle][r.id] += ev.count
        elif ev.kind == DROPOFF:
            if aboard[ev.vehicle][r.id] < ev.count:
                report.add("dropoff", f"request {r.id}: vehicle {ev.vehicle} drops {ev.count} but "
                                      f"carries {aboard[ev.vehicle][r.id]}")
            aboard[ev.vehicle][r.id] -= ev.count
            if ev.node == r.destination:
                delivered[r.id] += ev.count
            else:
                if not allow_transfers:
                    report.add("preemption", f"request {r.id} dropped at intermediate node {ev.node}")
                waiting[(r.id, ev.node)] += ev.count
        else:
            report.add("pickup", f"unknown event kind {ev.kind!r}")

    for r in sigma.requests:
        if delivered[r.id] != r.load:
            report.add("unserved", f"request {r.id}: {delivered[r.id]} of {r.load} passengers delivered")
    return report


@dataclass(frozen=True)
class Instance:
    """A complete problem: network, fleet and request sequence."""

    topology: Topology
    fleet: FleetConfig
    requests: RequestSequence
    name: str = ""

    def __post_init__(self):
        self.requests.check_nodes(self.topology)

    def parts(self) -> tuple:
        """``(topology, requests, fleet)`` in the order most functions take them."""
        return self.topology, self.requests, self.fleet

    def to_dict(self) -> dict:
        data = {
            "topology": self.topology.to_dict(),
            "fleet": {
                "k": self.fleet.num_vehicles,
                "cap": self.fleet.capacity,
                "speed": fraction_to_json(self.fleet.speed),
            },
            "horizon": fraction_to_json(self.requests.horizon),
            "requests": [
                {"t": fraction_to_json(r.release), "x": r.origin, "y": r.destination, "z": r.load}
                for r in sorted(self.requests.requests, key=lambda r: r.id)
            ],
        }
        if self.name:
            data["name"] = self.name
        return data

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, data: dict) -> "Instance":
        topo = Topology.from_dict(data["topology"])
        fl = data.get("fleet", {})
        fleet = FleetConfig(int(fl.get("k", 1)), int(fl.get("cap", 1)), fl.get("speed", 1))
        rows = [(q["t"], q["x"], q["y"], q["z"]) for q in data.get("requests", [])]
        sigma = RequestSequence.from_tuples(rows, data.get("horizon"))
        return cls(topo, fleet, sigma, data.get("name", ""))

    @classmethod
    def from_json(cls, text: str) -> "Instance":
        return cls.from_dict(json.loads(text))


def edge_loads(topo: Topology, sigma: Sequence, forward: bool = True) -> list:
    """Passenger load per edge.

    On a circuit every request uses the forward path, so ``forward`` is
    ignored and index ``i`` is the edge ``v_i -> v_{i+1}``. On a line index
    ``i`` is the edge between ``v_i`` and ``v_{i+1}``, counting requests that
    travel up (``forward``) or down.
    """
    loads = [0] * len(topo.edge_lengths)
    for r in sigma:
        if topo.is_circuit:
            v = r.origin
            while v != r.destination:
                loads[v] += r.load
                v = (v + 1) % (topo.n + 1)
        elif (r.origin < r.destination) == forward:
            lo, hi = sorted((r.origin, r.destination))
            for i in range(lo, hi):
                loads[i] += r.load
    return loads
