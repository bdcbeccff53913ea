"""Shared instances for the tests."""
from onlinepdp.core import FleetConfig, RequestSequence, Topology

# circuit (a, b, c, d, e) with origin a; node indices 0..4
A, B, C, D, E = range(5)

# the six tram requests r_1..r_6 as (t, x, y, z); request id j-1 is r_j
TRAM_EXAMPLE_ROWS = [
    (1, C, E, 2),
    (2, A, D, 1),
    (3, D, E, 1),
    (4, B, C, 2),
    (5, A, B, 1),
    (6, B, E, 1),
]

# nine requests on the line v_0..v_4 whose loads match the reference load table
# (up 3,1,1,4 / down 1,0,1,5); r_3 carries two passengers from v_3 to v_4
ELEVATOR_EXAMPLE_ROWS = [
    (0, 0, 1, 1),
    (1, 0, 4, 1),
    (2, 3, 4, 2),
    (3, 0, 1, 1),
    (4, 3, 4, 1),
    (5, 1, 0, 1),
    (6, 4, 2, 1),
    (7, 4, 3, 2),
    (8, 4, 3, 2),
]


def tram_example(cap=2, k=1):
    return (RequestSequence.from_tuples(TRAM_EXAMPLE_ROWS), Topology.unit_circuit(4), FleetConfig(k, cap))


def elevator_example(cap=2):
    return (RequestSequence.from_tuples(ELEVATOR_EXAMPLE_ROWS), Topology.unit_line(4), FleetConfig(1, cap))


def example_label(interval):
    """``I_5``, ``I_41`` style label with 1-based request numbers."""
    r = interval.request_id + 1
    return f"I_{r}{interval.passenger}" if interval.passenger > 1 or _multi(r) else f"I_{r}"


def _multi(r):
    return TRAM_EXAMPLE_ROWS[r - 1][3] > 1
