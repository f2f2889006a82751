"""Run every warehouse demo scenario and summarise the outcome.

    python3 scripts/run_demos.py                 # summary table
    python3 scripts/run_demos.py --seeds 0 1 2   # check transcripts agree across seeds' reruns
    python3 scripts/run_demos.py --write-golden tests/golden
"""

from __future__ import annotations

import argparse
from pathlib import Path

from session_actors.demo import SCENARIOS, run_scenario


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, nargs="+", default=[0])
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--write-golden", type=Path, default=None, help="directory for seed-0 transcripts")
    args = ap.parse_args()

    print(f"{'scenario':26} {'seed':>4} {'exit':>4} {'msgs':>5} {'viol':>4} {'stable':>6}")
    for name in SCENARIOS:
        for seed in args.seeds:
            runs = [run_scenario(name, seed=seed) for _ in range(args.repeats)]
            first = runs[0]
            stable = all(r.transcript() == first.transcript() for r in runs)
            print(
                f"{name:26} {seed:>4} {first.exit_code:>4} {len(first.system.transcript):>5} "
                f"{len(first.system.violations):>4} {str(stable):>6}"
            )
        if args.write_golden is not None:
            args.write_golden.mkdir(parents=True, exist_ok=True)
            (args.write_golden / f"{name}.jsonl").write_text(run_scenario(name, seed=0).transcript())
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
