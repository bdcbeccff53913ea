"""MAIN ("move away if necessary"): the online elevator policy for one vehicle.

Decisions are taken whenever the vehicle stands at a node ``s``:

1. passengers whose destination is ``s`` get off;
2. if passengers remain on board, keep driving in their direction and let
   waiting requests at ``s`` going the same way board (first come first
   served, up to ``Cap``);
3. an empty vehicle serves up-requests with origin at or above ``s`` first,
   sweeping upwards and boarding them on the way;
4. otherwise it fetches the highest pending down-request and carries down-
   requests towards the depot;
5. with nothing reachable it heads back to the depot and waits there.

Returning to the depot when idle is what keeps up-requests below the
vehicle from starving, since they are only eligible once ``s <= x``.
"""
from __future__ import annotations

from .core import DEPOT
from .sim import WAIT, Action, SimState


def _board(state: SimState, node: int, room: int, going_up: bool) -> tuple:
    board = []
    for r, c in state.waiting_at(node):
        if room <= 0:
            break
        if (r.destination > node) != going_up:
            continue
        k = min(room, c)
        board.append((r.id, k))
        room -= k
    return tuple(board)


class MainPolicy:
    name = "main"

    def decide(self, state: SimState) -> dict:
        if state.topology.is_circuit:
            raise ValueError("MAIN needs a line topology")
        if state.fleet.num_vehicles != 1:
            raise ValueError("MAIN drives a single vehicle")
        veh = state.vehicles[0]
        if veh.moving:
            return {}
        s = veh.node
        reqs = state.requests
        alight = tuple((rid, c) for rid, c in veh.onboard if reqs[rid].destination == s)
        staying = [(rid, c) for rid, c in veh.onboard if reqs[rid].destination != s]
        cap = state.fleet.capacity
        if staying:
            going_up = reqs[staying[0][0]].destination > s
            room = cap - sum(c for _, c in staying)
            board = _board(state, s, room, going_up)
            return {0: Action(alight, board, s + 1 if going_up else s - 1)}

        ups = [r for r, _ in state.waiting if r.origin < r.destination and r.origin >= s]
        downs = [r for r, _ in state.waiting if r.origin > r.destination]
        if ups:
            return {0: Action(alight, _board(state, s, cap, True), s + 1)}
        if downs:
            top = max(r.origin for r in downs)
            if top > s:
                return {0: Action(alight, (), s + 1)}
            board = _board(state, s, cap, False)
            return {0: Action(alight, board, s - 1)}
        if s != DEPOT:
            return {0: Action(alight, (), s - 1)}
        return {0: Action(alight)} if alight else {0: WAIT}


def main_policy() -> MainPolicy:
    return MainPolicy()
