from .ast import (
    SORTS,
    Choice,
    Continue,
    Diagnostic,
    GlobalProtocol,
    MessageSignature,
    PayloadItem,
    ProtocolError,
    Rec,
    Transfer,
    roles_of,
)
from .parser import parse_file, parse_global
from .pretty import pretty
from .validate import validate

__all__ = [
    "SORTS",
    "Choice",
    "Continue",
    "Diagnostic",
    "GlobalProtocol",
    "MessageSignature",
    "PayloadItem",
    "ProtocolError",
    "Rec",
    "Transfer",
    "parse_file",
    "parse_global",
    "pretty",
    "roles_of",
    "validate",
]
