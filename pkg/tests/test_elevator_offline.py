import random

import pytest

from onlinepdp.core import FleetConfig, RequestSequence, Topology, total_tour_length, validate_schedule
from onlinepdp.elevator_offline import (
    A_LINK,
    SOURCE,
    EmptyNetworkError,
    build_flow_network,
    compute_arc_loads,
    decompose_flow,
    elevator_opt,
    elevator_opt_cost,
    solve_min_cost_flow,
)
from onlinepdp.elevator_online import main_policy
from onlinepdp.instances import AdversaryParams, gen_adversary
from onlinepdp.sim import run

from cases import ELEVATOR_EXAMPLE_ROWS, elevator_example
from oracles import elevator_passenger_oracle, elevator_walk_oracle


def solve(sigma, topo, fleet):
    net = build_flow_network(compute_arc_loads(sigma, topo, fleet), topo)
    return net, solve_min_cost_flow(net)


class TestLoads:
    def test_example_fixture(self):
        loads = compute_arc_loads(*elevator_example())
        assert loads.up_load == (3, 1, 1, 4)
        assert loads.down_load == (1, 0, 1, 5)
        assert loads.m_up == (2, 1, 1, 2)
        assert loads.m_down == (1, 0, 1, 3)

    def test_single_request(self):
        sigma = RequestSequence.from_tuples([(0, 1, 3, 3)])
        loads = compute_arc_loads(sigma, Topology.unit_line(3), FleetConfig(1, 2))
        assert loads.up_load == (0, 3, 3) and loads.down_load == (0, 0, 0)
        assert loads.m_up == (0, 2, 2) and loads.total_multiplicity == 4

    def test_circuit_rejected(self):
        with pytest.raises(ValueError):
            compute_arc_loads(RequestSequence.from_tuples([]), Topology.unit_circuit(3), FleetConfig())


class TestNetwork:
    def test_empty_network(self):
        loads = compute_arc_loads(RequestSequence.from_tuples([]), Topology.unit_line(3), FleetConfig())
        with pytest.raises(EmptyNetworkError):
            build_flow_network(loads, Topology.unit_line(3))

    def test_nodes_only_for_used_arcs(self):
        topo = Topology.unit_line(4)
        sigma = RequestSequence.from_tuples([(0, 1, 2, 1)])
        net = build_flow_network(compute_arc_loads(sigma, topo, FleetConfig()), topo)
        assert set(net.nodes) == {("s",), ("t",), ("up_o", 1), ("up_d", 2)}
        assert len(net.arcs) == 4

    def test_link_arcs_between_all_copies(self):
        topo = Topology.unit_line(4)
        sigma = RequestSequence.from_tuples([(0, 0, 1, 1), (0, 4, 3, 1)])
        net = build_flow_network(compute_arc_loads(sigma, topo, FleetConfig()), topo)
        links = {(a.tail, a.head): a.cost for a in net.arcs if a.kind == A_LINK}
        assert len(links) == 4
        assert links[(("up_d", 1), ("down_o", 4))] == 3
        assert links[(("down_d", 3), ("up_o", 0))] == 3

    def test_costs_are_line_distances(self):
        topo = Topology.line([2, 3, 5])
        sigma = RequestSequence.from_tuples([(0, 2, 3, 1)])
        net = build_flow_network(compute_arc_loads(sigma, topo, FleetConfig()), topo)
        costs = {a.kind: a.cost for a in net.arcs}
        assert costs == {"source": 5, "up": 5, "link": 5, "sink": 10}


class TestSolver:
    def test_example_optimum(self):
        sigma, topo, fleet = elevator_example()
        _, flow = solve(sigma, topo, fleet)
        assert flow.objective == 14
        rows = [(x, y, z) for _, x, y, z in ELEVATOR_EXAMPLE_ROWS]
        assert elevator_walk_oracle(rows, [1] * 4, 2) == 14

    def test_single_arc(self):
        sigma = RequestSequence.from_tuples([(0, 0, 1, 1)])
        _, flow = solve(sigma, Topology.unit_line(3), FleetConfig())
        assert flow.objective == 2

    def test_natural_cycle(self):
        sigma = RequestSequence.from_tuples([(0, 1, 2, 1), (0, 2, 1, 1)])
        _, flow = solve(sigma, Topology.unit_line(3), FleetConfig())
        assert flow.objective == 4

    def test_detached_cycle_is_cut(self):
        # a far-away up/down pair costs nothing by itself but must be reached
        sigma = RequestSequence.from_tuples([(0, 0, 1, 1), (0, 3, 4, 1), (0, 4, 3, 1)])
        _, flow = solve(sigma, Topology.unit_line(4), FleetConfig())
        assert flow.objective == 8
        assert len(set(flow.cuts)) == len(flow.cuts)

    def test_main_adversary_optimum(self):
        topo, sigma, fleet = gen_adversary(AdversaryParams("main-general", 3, 5, 1)).parts()
        assert elevator_opt_cost(sigma, topo, fleet) == 12

    def test_flow_covers_multiplicities(self):
        sigma, topo, fleet = elevator_example()
        net, flow = solve(sigma, topo, fleet)
        for arc, f in zip(net.arcs, flow.flow):
            if arc.required is not None:
                assert f >= arc.required
        assert sum(f for a, f in flow.arc_flows() if a.tail == SOURCE) == 1

    def test_dump_is_json(self):
        sigma, topo, fleet = elevator_example()
        _, flow = solve(sigma, topo, fleet)
        assert '"objective": 14' in flow.dump()


class TestDecomposition:
    def test_example_schedule(self):
        sigma, topo, fleet = elevator_example()
        flow, sched = elevator_opt(sigma, topo, fleet)
        assert total_tour_length(sched) == flow.objective == 14
        assert validate_schedule(sched, sigma, topo, fleet, allow_transfers=True).ok
        assert sched.tours[0][0].depart == sigma.last_release

    def test_empty(self):
        flow, sched = elevator_opt(RequestSequence.from_tuples([]), Topology.unit_line(3), FleetConfig(2, 1))
        assert flow is None and total_tour_length(sched) == 0 and len(sched.tours) == 2
        assert decompose_flow(None, None, RequestSequence.from_tuples([]), FleetConfig()).tours == ((),)

    def test_traversals_cover_multiplicities(self):
        sigma, topo, fleet = elevator_example()
        loads = compute_arc_loads(sigma, topo, fleet)
        _, sched = elevator_opt(sigma, topo, fleet)
        for i in range(topo.n):
            ups = sum(1 for m in sched.tours[0] if (m.source, m.target) == (i, i + 1))
            downs = sum(1 for m in sched.tours[0] if (m.source, m.target) == (i + 1, i))
            assert ups >= loads.m_up[i] and downs >= loads.m_down[i]

    def test_opt_never_beats_passenger_oracle(self):
        rng = random.Random(3)
        for _ in range(25):
            n = rng.randint(1, 3)
            rows = []
            for _ in range(rng.randint(1, 3)):
                x, y = rng.sample(range(n + 1), 2)
                rows.append((0, x, y, rng.randint(1, 2)))
            cap = rng.randint(1, 2)
            expected = elevator_passenger_oracle([(x, y, z) for _, x, y, z in rows], n, cap)
            cost = elevator_opt_cost(RequestSequence.from_tuples(rows), Topology.unit_line(n), FleetConfig(1, cap))
            assert cost == expected

    def test_online_never_beats_opt(self):
        rng = random.Random(8)
        for _ in range(30):
            n = rng.randint(1, 4)
            topo = Topology.line([rng.randint(1, 3) for _ in range(n)])
            rows = []
            for _ in range(rng.randint(1, 6)):
                x, y = rng.sample(range(n + 1), 2)
                rows.append((rng.randint(0, 15), x, y, rng.randint(1, 3)))
            sigma = RequestSequence.from_tuples(rows)
            fleet = FleetConfig(1, rng.randint(1, 3))
            flow, sched = elevator_opt(sigma, topo, fleet)
            assert validate_schedule(sched, sigma, topo, fleet, allow_transfers=True).ok
            assert total_tour_length(sched) == flow.objective
            assert flow.objective <= total_tour_length(run(main_policy(), topo, sigma, fleet))
