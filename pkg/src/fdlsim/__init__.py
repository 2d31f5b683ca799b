"""Slotted-time simulator of a two-stage shared-FDL optical packet switch."""

from .delays import DelayProfile, build_profile, num_delay_values
from .engine import RunPlan, RunResult, drain_bound, format_event_log, run, step
from .metrics import (AggregateStats, RunMetrics, aggregate, avg_delay,
                      loss_reduction, plr)
from .model import (AUX1, AUX2_FEEDBACK, AUX2_FORWARD, FdlBank,
                    FdlEntryOccupiedError, FdlPipeline, Packet, PortClaims,
                    ReservationCalendar, SwitchConfig, SwitchState)
from .scheduler import (BUFFERED, DELIVERED, DROP_REASONS, DROPPED,
                        RECIRCULATED, SRC_ARRIVAL, Disposition, assign_phase,
                        release_phase, select_aux1_fdl, select_feedback_fdl)
from .traffic import (Trace, TrafficConfig, generate_arrivals, read_trace,
                      record_trace, write_trace)

__all__ = [
    "AUX1", "AUX2_FEEDBACK", "AUX2_FORWARD", "AggregateStats", "BUFFERED",
    "DELIVERED", "DROP_REASONS", "DROPPED", "DelayProfile", "Disposition",
    "FdlBank", "FdlEntryOccupiedError", "FdlPipeline", "Packet", "PortClaims",
    "RECIRCULATED", "ReservationCalendar", "RunMetrics", "RunPlan",
    "RunResult", "SRC_ARRIVAL", "SwitchConfig", "SwitchState", "Trace",
    "TrafficConfig", "aggregate", "assign_phase", "avg_delay",
    "build_profile", "drain_bound", "format_event_log", "generate_arrivals",
    "loss_reduction", "num_delay_values", "plr", "read_trace",
    "record_trace", "release_phase", "run", "select_aux1_fdl",
    "select_feedback_fdl", "step", "write_trace",
]

__version__ = "0.1.0"
