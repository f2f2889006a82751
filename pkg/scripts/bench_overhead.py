"""Monitoring overhead on the ping-pong bench, plus the per-step latency profile.

    python3 scripts/bench_overhead.py --messages 100000 --repeats 5
"""

from __future__ import annotations

import argparse
import json

from session_actors.bench import latency_profile, overhead


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--messages", type=int, default=100_000)
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args()

    rep = overhead(args.messages, repeats=args.repeats)
    prof = latency_profile(args.messages)
    print(json.dumps(rep["on"]))
    print(json.dumps(rep["off"]))
    print(f"ratio monitored/unmonitored: {rep['ratio']:.3f}  (overhead {rep['overhead']:.1%})")
    print("per-step median ns by decile:", " ".join(f"{m:.0f}" for m in prof["decile_median_ns"]))
    print(f"first/last decile ratio: {prof['first_last_ratio']:.3f}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
