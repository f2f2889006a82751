"""Multiparty session actors: Scribble protocols projected to per-role FSMs
that monitor every message an actor sends or receives."""

from .fsm import Action, Fsm, build_fsm, emit_dot, fsm_accepts
from .monitor import MonitorInstance, Violation, create_monitor
from .projection import project_role
from .scribble import GlobalProtocol, ProtocolError, parse_global, pretty, roles_of, validate

__all__ = [
    "Action",
    "Fsm",
    "GlobalProtocol",
    "MonitorInstance",
    "ProtocolError",
    "Violation",
    "build_fsm",
    "create_monitor",
    "emit_dot",
    "fsm_accepts",
    "parse_global",
    "pretty",
    "project_role",
    "roles_of",
    "validate",
]
