"""Bundled protocol sources."""

from __future__ import annotations

from functools import lru_cache
from importlib import resources

from ..scribble import GlobalProtocol, parse_global

NAMES = ("purchase", "purchase_loop", "storeload", "pingpong")


def source(name: str) -> str:
    return resources.files(__name__).joinpath(f"{name}.scr").read_text(encoding="utf-8")


@lru_cache(maxsize=None)
def load(name: str) -> GlobalProtocol:
    return parse_global(source(name))
