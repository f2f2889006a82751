"""Turn schedulers: a seeded single-threaded loop and a thread pool."""

from __future__ import annotations

import random
import time
from concurrent.futures import FIRST_COMPLETED, ThreadPoolExecutor, wait
from typing import Optional


class DeterministicScheduler:
    """Runs one turn at a time, picking the next runnable process with a seeded RNG.

    Time is virtual: it only advances, to the earliest pending join
    deadline, when nothing is runnable.
    """

    def __init__(self, system, seed: int = 0):
        self.system = system
        self.rng = random.Random(seed)
        self.now = 0.0

    def clock(self) -> float:
        return self.now

    def run(self, max_turns: Optional[int] = None, detect_stuck: bool = True) -> int:
        procs = self.system.processes
        rng = self.rng
        turns = 0
        while max_turns is None or turns < max_turns:
            runnable = [p for p in procs if p.has_work()]
            if not runnable:
                deadline = self.system.pending_deadline()
                if deadline is not None:
                    self.now = max(self.now, deadline)
                if self.system._on_quiescent(self.now, detect_stuck):
                    continue
                break
            p = runnable[rng.randrange(len(runnable))] if len(runnable) > 1 else runnable[0]
            p.dispatch()
            turns += 1
        return turns


class PoolScheduler:
    """Runs turns of distinct processes in parallel; a process never overlaps itself."""

    def __init__(self, system, workers: int = 4):
        self.system = system
        self.workers = workers
        self._t0 = time.monotonic()

    def clock(self) -> float:
        return time.monotonic() - self._t0

    def run(self, max_turns: Optional[int] = None, detect_stuck: bool = True) -> int:
        turns = 0
        running: dict = {}
        with ThreadPoolExecutor(max_workers=self.workers) as pool:
            while max_turns is None or turns < max_turns:
                for p in list(self.system.processes):
                    if p not in running and p.has_work():
                        running[p] = pool.submit(p.dispatch)
                if not running:
                    # nothing can ack a pending join any more: expire it now
                    if self.system._on_quiescent(float("inf"), detect_stuck):
                        continue
                    break
                wait(list(running.values()), timeout=0.05, return_when=FIRST_COMPLETED)
                for p, fut in list(running.items()):
                    if fut.done():
                        del running[p]
                        fut.result()
                        turns += 1
                self.system._expire_barriers(self.clock())
        return turns


def make_scheduler(system):
    cfg = system.config
    if cfg.parallel:
        return PoolScheduler(system, cfg.workers)
    return DeterministicScheduler(system, cfg.seed)
