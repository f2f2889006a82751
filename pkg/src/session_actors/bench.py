"""Throughput of monitored vs unmonitored sessions, and per-step monitor latency."""

from __future__ import annotations

import gc
import statistics
import time

from .fsm import RECEIVE, SEND, Action, build_fsm
from .monitor import create_monitor
from .projection import project_role
from .protocols import load
from .runtime import ActorSystem, RuntimeConfig, SessionActor, protocol, role

PINGPONG = load("pingpong")


@protocol("c", PINGPONG, "P")
class Pinger(SessionActor):
    def __init__(self, rounds: int):
        self.rounds = rounds
        self.done = 0

    def join(self, c):
        c.send("Q", "ping", 0)

    @role("c", "Q")
    def pong(self, c, k):
        self.done += 1
        if self.done < self.rounds:
            c.send("Q", "ping", self.done)
        else:
            c.send("Q", "stop")


@protocol("c", PINGPONG, "Q")
class Ponger(SessionActor):
    @role("c", "P")
    def ping(self, c, k):
        c.send("P", "pong", k)

    @role("c", "P")
    def stop(self, c):
        pass


def run_pingpong(n: int, monitor: bool = True, seed: int = 0) -> dict:
    """``n`` round trips through the full runtime; returns the bench record."""
    system = ActorSystem(RuntimeConfig(monitoring=monitor, seed=seed))
    system.register(Pinger)
    system.register(Ponger)
    pinger = system.spawn(Pinger, n)
    system.spawn(Ponger)
    system.start_session(PINGPONG)
    gc_was_enabled = gc.isenabled()
    gc.disable()
    try:
        t0 = time.perf_counter()
        system.run()
        elapsed = time.perf_counter() - t0
    finally:
        if gc_was_enabled:
            gc.enable()
    if pinger.done != n or system.violations:
        raise RuntimeError(f"bench run did not complete cleanly ({pinger.done}/{n} rounds)")
    messages = 2 * n + 1
    return {
        "mode": "on" if monitor else "off",
        "n": n,
        "messages": messages,
        "seconds": round(elapsed, 6),
        "msgs_per_sec": round(messages / elapsed, 1),
    }


def overhead(n: int, repeats: int = 5, seed: int = 0) -> dict:
    """Median throughput of both modes over ``repeats`` interleaved runs.

    ``overhead`` is the fraction of unmonitored throughput lost to monitoring.
    """
    on, off = [], []
    for _ in range(repeats):
        off.append(run_pingpong(n, monitor=False, seed=seed))
        on.append(run_pingpong(n, monitor=True, seed=seed))
    med_on = statistics.median(r["msgs_per_sec"] for r in on)
    med_off = statistics.median(r["msgs_per_sec"] for r in off)
    ratio = med_on / med_off
    return {
        "n": n,
        "repeats": repeats,
        "on": {"mode": "on", "n": n, "msgs_per_sec": round(med_on, 1)},
        "off": {"mode": "off", "n": n, "msgs_per_sec": round(med_off, 1)},
        "ratio": round(ratio, 3),
        "overhead": round(1.0 - ratio, 3),
    }


def step_latencies(n: int = 100_000) -> list[int]:
    """Wall-clock nanoseconds of each of ``n`` monitor steps on the ping-pong FSM."""
    fsm = build_fsm(project_role(PINGPONG, "P"))
    m = create_monitor(fsm, "bench", "P")
    ping = Action(SEND, "Q", "ping", ("int",))
    pong = Action(RECEIVE, "Q", "pong", ("int",))
    clock = time.perf_counter_ns
    out = [0] * n
    gc_was_enabled = gc.isenabled()
    gc.disable()
    try:
        for i in range(n):
            a = ping if i % 2 == 0 else pong
            t0 = clock()
            m.step(a)
            out[i] = clock() - t0
    finally:
        if gc_was_enabled:
            gc.enable()
    return out


def latency_profile(n: int = 100_000, bins: int = 10) -> dict:
    lat = step_latencies(n)
    width = n // bins
    medians = [statistics.median(lat[k * width:(k + 1) * width]) for k in range(bins)]
    return {
        "steps": n,
        "decile_median_ns": medians,
        "first_last_ratio": round(max(medians[0], medians[-1]) / max(1, min(medians[0], medians[-1])), 3),
    }
