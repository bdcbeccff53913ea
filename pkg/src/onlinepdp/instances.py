"""Scenario and adversarial instance generators, plus instance file I/O.

Randomness comes from Python's ``random.Random`` (Mersenne Twister MT19937)
seeded with the given integer, drawing only through ``randrange`` and
``randint``. The same seed therefore gives the same instance file on every
CPython version since 3.2.
"""
from __future__ import annotations

import random
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .core import CIRCUIT, DEPOT, LINE, FleetConfig, Instance, RequestSequence, Topology

MORNING = "morning"
EVENING = "evening"
LUNCH = "lunch"
GENERAL = "general"
SCENARIOS = (MORNING, EVENING, LUNCH, GENERAL)

SIR_GENERAL = "sir-general"
SIR_LUNCH = "sir-lunch"
SIR_MORNING = "sir-morning"
SIR_EVENING = "sir-evening"
SIF_LUNCH = "sif-lunch"
MAIN_GENERAL = "main-general"
MAIN_LUNCH = "main-lunch"
MAIN_MORNING = "main-morning"
MAIN_EVENING = "main-evening"
TRAM_FAMILIES = (SIR_GENERAL, SIR_LUNCH, SIR_MORNING, SIR_EVENING, SIF_LUNCH)
LINE_FAMILIES = (MAIN_GENERAL, MAIN_LUNCH, MAIN_MORNING, MAIN_EVENING)
FAMILIES = TRAM_FAMILIES + LINE_FAMILIES


@dataclass(frozen=True)
class ScenarioSpec:
    """Parameters of a random instance.

    ``n`` is the index of the last node. Releases are integers drawn
    uniformly from ``[0, span]`` (default ``4 * m``).
    """

    scenario: str
    kind: str = CIRCUIT
    n: int = 4
    m: int = 10
    z_max: int = 1
    seed: int = 0
    cap: int = 2
    k: int = 1
    edge_length: int = 1
    span: Optional[int] = None

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ValueError(f"unknown scenario {self.scenario!r}")
        if self.kind not in (CIRCUIT, LINE):
            raise ValueError(f"unknown topology kind {self.kind!r}")
        if self.n < 1 or self.m < 0 or self.z_max < 1 or self.cap < 1 or self.k < 1:
            raise ValueError("n, z_max, cap and k must be positive and m non-negative")
        if self.edge_length < 1:
            raise ValueError("edge_length must be a positive integer")

    def topology(self) -> Topology:
        edges = self.n + 1 if self.kind == CIRCUIT else self.n
        return Topology(self.kind, (self.edge_length,) * edges)


def _pick_pair(rng: random.Random, scenario: str, kind: str, n: int) -> tuple:
    if scenario == LUNCH:
        scenario = MORNING if rng.randrange(2) == 0 else EVENING
    if scenario == MORNING:
        return DEPOT, rng.randint(1, n)
    if scenario == EVENING:
        return rng.randint(1, n), DEPOT
    if kind == LINE:
        x = rng.randint(0, n)
        y = rng.randint(0, n - 1)
        return x, y if y < x else y + 1
    # circuit: positions 0..n+1 on the cut-open path, never the whole loop
    while True:
        a = rng.randint(0, n)
        b = rng.randint(a + 1, n + 1)
        if (a, b) != (0, n + 1):
            return a, b % (n + 1)


def gen_scenario(spec: ScenarioSpec) -> Instance:
    rng = random.Random(spec.seed)
    span = 4 * spec.m if spec.span is None else spec.span
    times = sorted(rng.randint(0, span) for _ in range(spec.m))
    rows = []
    for t in times:
        x, y = _pick_pair(rng, spec.scenario, spec.kind, spec.n)
        rows.append((t, x, y, rng.randint(1, spec.z_max)))
    sigma = RequestSequence.from_tuples(rows)
    name = f"{spec.scenario}-{spec.kind}-n{spec.n}-m{spec.m}-cap{spec.cap}-seed{spec.seed}"
    return Instance(spec.topology(), FleetConfig(spec.k, spec.cap), sigma, name)


@dataclass(frozen=True)
class AdversaryParams:
    family: str
    cap: int = 3
    n: int = 3
    ell: int = 1

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown adversary family {self.family!r}")
        if self.cap < 1 or self.n < 1:
            raise ValueError("cap and n must be positive")
        if self.ell < 1:
            raise ValueError("ell must be at least 1")


def _sir_rows(cap: int, n: int) -> list:
    size = n + 1
    rows = []
    for j in range((n + 1) * cap):
        b = j // cap
        rows.append((j * size, b, (b + 1) % size, 1))
    return rows


def _main_rows(cap: int, n: int, ell: int) -> list:
    pairs = []
    for i in range(n):
        pairs += [(i, i + 1)] * cap
    for _ in range(ell):
        pairs += [(n, n - 1)] * cap + [(n - 1, n)] * cap
    for i in range(n, 0, -1):
        pairs += [(i, i - 1)] * cap
    rows = []
    t = 0
    for j, (x, y) in enumerate(pairs):
        if j:
            px, py = pairs[j - 1]
            t += 2 * max(px, py)
        rows.append((t, x, y, 1))
    return rows


def gen_adversary(p: AdversaryParams) -> Instance:
    """Worst-case sequences on unit-length networks with unit loads."""
    cap, n = p.cap, p.n
    if p.family in TRAM_FAMILIES:
        topo = Topology.unit_circuit(n)
        if p.family == SIF_LUNCH:
            size = n + 1
            rows = [(0, DEPOT, 1, 1)] * cap + [(size, n, DEPOT, 1)] * cap
        else:
            rows = _sir_rows(cap, n)
            rows = {
                SIR_GENERAL: rows,
                SIR_LUNCH: rows[:cap] + rows[-cap:],
                SIR_MORNING: rows[:cap],
                SIR_EVENING: rows[-cap:],
            }[p.family]
    else:
        topo = Topology.unit_line(n)
        rows = _main_rows(cap, n, p.ell)
        rows = {
            MAIN_GENERAL: rows,
            MAIN_LUNCH: rows[:cap] + rows[-cap:],
            MAIN_MORNING: rows[:cap],
            MAIN_EVENING: rows[-cap:],
        }[p.family]
    name = f"{p.family}-cap{cap}-n{n}" + (f"-l{p.ell}" if p.family == MAIN_GENERAL else "")
    return Instance(topo, FleetConfig(1, cap), RequestSequence.from_tuples(rows), name)


def classify_scenario(inst: Instance) -> str:
    """Most specific scenario whose structure the requests satisfy."""
    reqs = inst.requests.requests
    if reqs and all(r.origin == DEPOT for r in reqs):
        return MORNING
    if reqs and all(r.destination == DEPOT for r in reqs):
        return EVENING
    if reqs and all(DEPOT in (r.origin, r.destination) for r in reqs):
        return LUNCH
    return GENERAL


def save_instance(inst: Instance, path) -> None:
    Path(path).write_text(inst.to_json())


def load_instance(path) -> Instance:
    inst = Instance.from_json(Path(path).read_text())
    if not inst.name:
        inst = Instance(inst.topology, inst.fleet, inst.requests, Path(path).stem)
    return inst

