"""Online tram-mode policies: SIR and the SIF family.

Every vehicle that leaves the depot drives one full loop of the circuit and
comes back; in between it only stops to let passengers in or out. The
policies differ in when a loop starts and who may board.
"""
from __future__ import annotations

from .core import DEPOT
from .sim import WAIT, Action, SimState
from .tram_offline import request_interval


def _check_circuit(state: SimState) -> None:
    if not state.topology.is_circuit:
        raise ValueError("tram policies need a circuit topology")
    for r in state.released:
        # raises CrossesDepotError for requests that would wrap past the depot
        request_interval(state.topology, r.origin, r.destination)


def _next_node(state: SimState, node: int) -> int:
    return state.topology.successors(node)[0]


def _alight_here(state: SimState, veh) -> tuple:
    reqs = state.requests
    return tuple((rid, c) for rid, c in veh.onboard if reqs[rid].destination == veh.node)


def _ahead_on_loop(node: int, destination: int) -> bool:
    """True when ``destination`` is still to come on the loop currently at ``node``."""
    return destination == DEPOT or destination > node


class SirPolicy:
    """Stop If Requested.

    An idle vehicle at the depot starts a loop as soon as some released
    passenger is waiting and not yet claimed by another loop; it claims all
    such passengers. On the loop it boards, first come first served, its own
    claimed passengers and unclaimed ones whose destination lies ahead.
    Claims still waiting when the loop ends are released again.
    """

    name = "sir"

    def __init__(self):
        self.on_loop = set()
        self.claims = {}

    def _board(self, state: SimState, veh, load: int, avail: dict) -> tuple:
        room = state.fleet.capacity - load
        board = []
        for r, _ in state.waiting_at(veh.node):
            if room <= 0:
                break
            if avail.get(r.id, 0) <= 0 or self.claims.get(r.id, veh.id) != veh.id:
                continue
            if not _ahead_on_loop(veh.node, r.destination):
                continue
            c = min(room, avail[r.id])
            board.append((r.id, c))
            avail[r.id] -= c
            room -= c
        return tuple(board)

    def decide(self, state: SimState) -> dict:
        _check_circuit(state)
        avail = {r.id: c for r, c in state.waiting}
        self.claims = {rid: v for rid, v in self.claims.items() if avail.get(rid, 0) > 0}
        out = {}
        idle = []
        for veh in state.vehicles:
            if veh.moving:
                continue
            alight = _alight_here(state, veh)
            if veh.node == DEPOT:
                if veh.id in self.on_loop:
                    self.on_loop.discard(veh.id)
                    self.claims = {rid: v for rid, v in self.claims.items() if v != veh.id}
                idle.append((veh, alight))
                continue
            load = veh.load - sum(c for _, c in alight)
            board = self._board(state, veh, load, avail)
            out[veh.id] = Action(alight, board, _next_node(state, veh.node))
        for veh, alight in idle:
            unclaimed = [rid for rid, c in avail.items() if c > 0 and rid not in self.claims]
            if not unclaimed:
                out[veh.id] = Action(alight) if alight else WAIT
                continue
            for rid in unclaimed:
                self.claims[rid] = veh.id
            self.on_loop.add(veh.id)
            board = self._board(state, veh, 0, avail)
            out[veh.id] = Action(alight, board, _next_node(state, DEPOT))
        return out


FIRST_ARC = "first"
LAST_ARC = "last"
ANY_ARC = "any"


class SifPolicy:
    """Start If Fully loaded, with the trigger arc as parameter.

    Waiting, unassigned passengers are packed first come first served into a
    plan for the next loop, admitting a passenger only if no arc of its ride
    would exceed ``Cap``. An idle vehicle at the depot takes the plan once it
    is fully loaded on the first arc (morning), the last arc (evening) or any
    arc (lunch). From the horizon on, plans leave whatever their load.
    """

    def __init__(self, trigger: str, name: str):
        if trigger not in (FIRST_ARC, LAST_ARC, ANY_ARC):
            raise ValueError(f"unknown trigger {trigger!r}")
        self.trigger = trigger
        self.name = name
        self.on_loop = set()
        self.assigned = {}

    def plan(self, state: SimState, avail: dict) -> tuple:
        """Greedy FIFO packing of unassigned passengers; returns (plan, arc loads)."""
        topo = state.topology
        cap = state.fleet.capacity
        loads = [0] * (topo.n + 1)
        plan = {}
        for r, _ in state.waiting:
            left = avail.get(r.id, 0)
            if left <= 0:
                continue
            start, end = request_interval(topo, r.origin, r.destination)
            fit = min(left, min(cap - loads[a] for a in range(start, end)))
            if fit <= 0:
                continue
            for a in range(start, end):
                loads[a] += fit
            plan[r.id] = fit
        return plan, loads

    def _triggered(self, loads: list, cap: int) -> bool:
        if self.trigger == FIRST_ARC:
            return loads[0] >= cap
        if self.trigger == LAST_ARC:
            return loads[-1] >= cap
        return max(loads) >= cap

    def _board(self, state: SimState, veh) -> tuple:
        mine = self.assigned.get(veh.id, {})
        board = []
        for r, c in state.waiting_at(veh.node):
            if mine.get(r.id, 0) > 0:
                k = min(c, mine[r.id])
                board.append((r.id, k))
                mine[r.id] -= k
                if not mine[r.id]:
                    del mine[r.id]
        return tuple(board)

    def decide(self, state: SimState) -> dict:
        _check_circuit(state)
        avail = {r.id: c for r, c in state.waiting}
        for mine in self.assigned.values():
            for rid, c in mine.items():
                avail[rid] = avail.get(rid, 0) - c
        out = {}
        idle = []
        for veh in state.vehicles:
            if veh.moving:
                continue
            alight = _alight_here(state, veh)
            if veh.node == DEPOT:
                if veh.id in self.on_loop:
                    self.on_loop.discard(veh.id)
                    if self.assigned.pop(veh.id, None):
                        raise AssertionError("loop ended with assigned passengers left behind")
                idle.append((veh, alight))
                continue
            out[veh.id] = Action(alight, self._board(state, veh), _next_node(state, veh.node))
        for veh, alight in idle:
            plan, loads = self.plan(state, avail)
            go = plan and (state.horizon_reached or self._triggered(loads, state.fleet.capacity))
            if not go:
                out[veh.id] = Action(alight) if alight else WAIT
                continue
            for rid, c in plan.items():
                avail[rid] -= c
            self.assigned[veh.id] = dict(plan)
            self.on_loop.add(veh.id)
            out[veh.id] = Action(alight, self._board(state, veh), _next_node(state, DEPOT))
        return out


def sir_policy() -> SirPolicy:
    return SirPolicy()


def sif_m_policy() -> SifPolicy:
    return SifPolicy(FIRST_ARC, "sif-m")


def sif_e_policy() -> SifPolicy:
    return SifPolicy(LAST_ARC, "sif-e")


def sif_l_policy() -> SifPolicy:
    return SifPolicy(ANY_ARC, "sif-l")
