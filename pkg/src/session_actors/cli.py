"""Command-line entry point: ``session-actors <command> ...``.

Exit codes: 0 ok, 1 diagnostics or violations, 2 usage or I/O errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from typing import Optional, Sequence

from .fsm import Action, Fsm, build_fsm, emit_dot, fsm_accepts
from .projection import ProjectionError, format_local, project_role
from .scribble import ProtocolError, parse_global, validate

OK, FAILED, USAGE = 0, 1, 2


@dataclass
class CommandResult:
    exit_code: int
    output: str


def _read(path: str) -> str:
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def cmd_check(path: str) -> CommandResult:
    try:
        source = _read(path)
    except OSError as exc:
        return CommandResult(USAGE, f"error: cannot read {path}: {exc.strerror}\n")
    try:
        proto = parse_global(source)
    except ProtocolError as exc:
        return CommandResult(FAILED, "".join(f"{path}:{d}\n" for d in exc.diagnostics))
    diags = validate(proto)
    out = "".join(f"{path}:{d}\n" for d in diags)
    if any(d.severity == "error" for d in diags):
        return CommandResult(FAILED, out)
    return CommandResult(OK, out + f"{path}: protocol {proto.name} ok ({', '.join(proto.roles)})\n")


def cmd_project(path: str, role: str, fmt: str = "text") -> CommandResult:
    checked = cmd_check(path)
    if checked.exit_code != OK:
        return checked
    proto = parse_global(_read(path))
    if role not in proto.roles:
        return CommandResult(USAGE, f"error: {role} is not a role of {proto.name} ({', '.join(proto.roles)})\n")
    try:
        local = project_role(proto, role)
    except ProjectionError as exc:
        return CommandResult(FAILED, f"error: {exc}\n")
    if fmt == "text":
        return CommandResult(OK, format_local(local) + "\n")
    fsm = build_fsm(local)
    if fmt == "dot":
        return CommandResult(OK, emit_dot(fsm, name=f"{proto.name}_{role}"))
    if fmt == "json":
        return CommandResult(OK, fsm.dumps())
    return CommandResult(USAGE, f"error: unknown format {fmt!r}\n")


def _load_trace(path: str) -> list[Action]:
    trace = []
    for lineno, line in enumerate(_read(path).splitlines(), 1):
        if not line.strip():
            continue
        try:
            trace.append(Action.from_json(json.loads(line)))
        except (ValueError, KeyError, TypeError) as exc:
            raise ValueError(f"{path}:{lineno}: bad trace entry ({exc})") from None
    return trace


def cmd_replay(fsm_path: str, trace_path: str) -> CommandResult:
    try:
        fsm = Fsm.from_json(json.loads(_read(fsm_path)))
        trace = _load_trace(trace_path)
    except OSError as exc:
        return CommandResult(USAGE, f"error: {exc}\n")
    except (ValueError, KeyError, TypeError) as exc:
        return CommandResult(USAGE, f"error: malformed input: {exc}\n")
    res = fsm_accepts(fsm, trace)
    if res.accepted:
        final = " (final)" if res.state in fsm.finals else ""
        return CommandResult(OK, f"accepted {len(trace)} action(s); state s{res.state}{final}\n")
    return CommandResult(
        FAILED, f"rejected at index {res.index}: {trace[res.index]} not enabled in state s{res.state}\n"
    )


def cmd_run_demo(
    scenario: str,
    seed: int = 0,
    transcript: Optional[str] = None,
    policy: str = "halt",
    parallel: bool = False,
    join_timeout_ms: int = 5000,
    policy_log: Optional[str] = None,
) -> CommandResult:
    from .demo import run_scenario

    run = run_scenario(scenario, seed=seed, policy=policy, parallel=parallel, join_timeout_ms=join_timeout_ms)
    system = run.system
    lines = []
    try:
        if transcript:
            system.write_transcript(transcript)
            lines.append(f"transcript: {len(system.transcript)} envelope(s) -> {transcript}")
        if policy_log:
            system.write_policy_log(policy_log)
    except OSError as exc:
        return CommandResult(USAGE, f"error: {exc}\n")
    else:
        if not transcript:
            lines.extend(system.transcript_lines())
    for v in system.violations:
        lines.append("violation: " + json.dumps(v))
    for actor_id, label, exc in system.faults:
        lines.append(f"fault: {actor_id} handling {label!r}: {exc!r}")
    ended = ", ".join(f"{s.id}={s.end_reason or 'open'}" for s in system.sessions.values())
    lines.append(f"scenario {scenario}: {len(system.violations)} violation(s); sessions {ended}")
    return CommandResult(run.exit_code, "\n".join(lines) + "\n")


def cmd_bench(messages: int, monitor: str = "on", both: bool = False) -> CommandResult:
    from .bench import latency_profile, overhead, run_pingpong

    if messages < 1000:
        return CommandResult(USAGE, "error: --messages must be at least 1000\n")
    if both:
        rep = overhead(messages)
        rep["latency"] = latency_profile(min(messages, 100_000))
        text = (
            json.dumps(rep["on"]) + "\n" + json.dumps(rep["off"]) + "\n"
            + f"ratio monitored/unmonitored: {rep['ratio']:.3f}\n"
            + json.dumps(rep) + "\n"
        )
        return CommandResult(OK, text)
    rec = run_pingpong(messages, monitor=(monitor == "on"))
    out = {k: rec[k] for k in ("mode", "n", "msgs_per_sec")}
    text = json.dumps(out) + "\n"
    if monitor == "on":
        prof = latency_profile(min(messages, 100_000))
        text += "per-step median ns by decile: " + " ".join(f"{m:.0f}" for m in prof["decile_median_ns"]) + "\n"
    return CommandResult(OK, text)


def build_parser() -> argparse.ArgumentParser:
    from .demo import SCENARIOS
    from .runtime import POLICIES

    ap = argparse.ArgumentParser(prog="session-actors", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="parse and validate a protocol file")
    p.add_argument("file")

    p = sub.add_parser("project", help="project a protocol onto one role")
    p.add_argument("file")
    p.add_argument("--role", required=True)
    p.add_argument("--format", choices=("text", "dot", "json"), default="text")

    p = sub.add_parser("run", help="run a warehouse demo scenario")
    p.add_argument("scenario", choices=SCENARIOS)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--transcript", default=None, help="write the JSON-lines transcript here")
    p.add_argument("--policy", choices=POLICIES, default="halt")
    p.add_argument("--parallel", action="store_true")
    p.add_argument("--join-timeout-ms", type=int, default=5000)
    p.add_argument("--policy-log", default=None, help="write violations as JSON lines here")

    p = sub.add_parser("replay", help="check a trace against an FSM")
    p.add_argument("--fsm", required=True)
    p.add_argument("--trace", required=True)

    p = sub.add_parser("bench", help="measure monitoring overhead on a ping-pong protocol")
    p.add_argument("--messages", type=int, default=100_000, help="round trips")
    p.add_argument("--monitor", choices=("on", "off", "both"), default="on")
    return ap


def run(argv: Optional[Sequence[str]] = None) -> CommandResult:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return CommandResult(USAGE if exc.code else OK, "")
    if args.command == "check":
        return cmd_check(args.file)
    if args.command == "project":
        try:
            return cmd_project(args.file, args.role, args.format)
        except OSError as exc:
            return CommandResult(USAGE, f"error: {exc}\n")
    if args.command == "run":
        return cmd_run_demo(
            args.scenario, args.seed, args.transcript, args.policy, args.parallel,
            args.join_timeout_ms, args.policy_log,
        )
    if args.command == "replay":
        return cmd_replay(args.fsm, args.trace)
    return cmd_bench(args.messages, args.monitor, both=args.monitor == "both")


def main(argv: Optional[Sequence[str]] = None) -> int:
    res = run(argv)
    stream = sys.stdout if res.exit_code == OK else sys.stderr
    stream.write(res.output)
    return res.exit_code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
