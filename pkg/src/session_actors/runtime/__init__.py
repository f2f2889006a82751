from .actor import (
    SELF,
    HandlerError,
    RegistrationError,
    RoleContext,
    SessionActor,
    SessionEnded,
    SessionError,
    protocol,
    role,
)
from .system import (
    DROP,
    HALT,
    LOG_ONLY,
    POLICIES,
    ActorSystem,
    JoinError,
    PolicyActor,
    Registration,
    RuntimeConfig,
    Session,
)

__all__ = [
    "SELF",
    "DROP",
    "HALT",
    "LOG_ONLY",
    "POLICIES",
    "ActorSystem",
    "HandlerError",
    "JoinError",
    "PolicyActor",
    "Registration",
    "RegistrationError",
    "RoleContext",
    "RuntimeConfig",
    "Session",
    "SessionActor",
    "SessionEnded",
    "SessionError",
    "protocol",
    "role",
]
