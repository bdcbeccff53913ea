"""Online pickup and delivery on circuits (tram mode) and lines (elevator mode)."""

from .core import (
    CIRCUIT,
    LINE,
    FleetConfig,
    Instance,
    Move,
    Request,
    RequestSequence,
    ServiceEvent,
    Topology,
    TransportationSchedule,
    ValidationReport,
    distance,
    total_tour_length,
    validate_schedule,
)

__version__ = "0.1.0"

__all__ = [
    "CIRCUIT",
    "LINE",
    "FleetConfig",
    "Instance",
    "Move",
    "Request",
    "RequestSequence",
    "ServiceEvent",
    "Topology",
    "TransportationSchedule",
    "ValidationReport",
    "distance",
    "total_tour_length",
    "validate_schedule",
]
