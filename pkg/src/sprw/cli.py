"""Deterministic trace-replay command line.

Subcommands:
  run     replay a trace through one actor, emitting one JSON record per line
  check   parse/expand/compile a pattern file and report structure
  oracle  run engine and brute-force reference side by side and compare
  fuzz    seeded random differential testing over the operator grid

Exit codes: 0 success, 2 parse/load error, 3 runtime diagnostics occurred
(run), 1 divergence (oracle/fuzz).  All time comes from the trace; the
harness never reads the wall clock.
"""

from __future__ import annotations

import argparse
import os
import sys

from .actor import deliver, spawn, step
from .compile import compile_program
from .engine import replay_trace
from .errors import SprwError
from .expand import expand
from .fuzzgen import OP_GRID, generate_case
from .nodes import Program, Selector, Var
from .oracle import oracle_run
from .parser import parse_program
from .printer import pattern_text
from .tracefile import AdvanceEvent, MessageEvent, load_trace, record_line, records_for
from .values import Duration, TIME_UNITS


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="sprw", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="replay a trace through one actor")
    p_run.add_argument("--patterns", required=True)
    p_run.add_argument("--trace", required=True)
    p_run.add_argument("--out")
    p_run.add_argument("--lifetime", help="default message lifetime, e.g. '{1, :hours}' or ms")

    p_check = sub.add_parser("check", help="parse, expand and compile a pattern file")
    p_check.add_argument("--patterns", required=True)

    p_oracle = sub.add_parser("oracle", help="diff engine output against the reference matcher")
    p_oracle.add_argument("--patterns", required=True)
    p_oracle.add_argument("--trace", required=True)
    p_oracle.add_argument("--diff", action="store_true")
    p_oracle.add_argument("--lifetime")
    p_oracle.add_argument("--perturb", action="store_true",
                          help="test-only: drop one engine record to show diff output")

    p_fuzz = sub.add_parser("fuzz", help="random differential testing")
    p_fuzz.add_argument("--count", type=int, default=200)
    p_fuzz.add_argument("--events", type=int, default=120)
    p_fuzz.add_argument("--seed", type=int,
                        default=int(os.environ.get("SPRW_SEED", "0")))

    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "check":
            return _cmd_check(args)
        if args.command == "oracle":
            return _cmd_oracle(args)
        return _cmd_fuzz(args)
    except SprwError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


def _load_program(path: str) -> Program:
    with open(path, encoding="utf-8") as fh:
        return parse_program(fh.read())


def _load_events(path: str):
    with open(path, encoding="utf-8") as fh:
        return load_trace(fh.read())


def parse_lifetime(text: str | None) -> int | None:
    if text is None:
        return None
    text = text.strip()
    if text.isdigit():
        return int(text)
    if text.startswith("{") and text.endswith("}"):
        inner = text[1:-1]
        amount_s, _, unit_s = inner.partition(",")
        unit = unit_s.strip().lstrip(":")
        if amount_s.strip().isdigit() and unit in TIME_UNITS:
            return Duration(int(amount_s.strip()), unit).ms
    raise SprwError(f"cannot parse lifetime {text!r} (use ms or '{{2, :mins}}')")


def run_records(program: Program, events, lifetime_ms: int | None = None):
    """Replay a loaded trace through one actor; returns (record lines, diagnostics)."""
    cell = spawn(program, lifetime_ms=lifetime_ms)
    for ev in events:
        if isinstance(ev, AdvanceEvent):
            step(cell, ev.to)
        else:
            deliver(cell, ev.type_tag, ev.attrs, ev.ts)
            step(cell, ev.ts)
    lines = [record_line(rec) for rec in cell.outputs]
    return lines, list(cell.network.diagnostics) + list(cell.diagnostics), cell


def _cmd_run(args) -> int:
    program = _load_program(args.patterns)
    events = _load_events(args.trace)
    lifetime = parse_lifetime(args.lifetime)
    lines, diagnostics, cell = run_records(program, events, lifetime)
    _warn_unrouted(cell.compiled, events)
    text = "".join(line + "\n" for line in lines)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    for d in diagnostics:
        print(f"diagnostic: {d.kind} in {d.pattern} at {d.at}: {d.detail}", file=sys.stderr)
    return 3 if diagnostics else 0


def _warn_unrouted(compiled, events) -> None:
    warned: set[str] = set()
    for ev in events:
        if isinstance(ev, MessageEvent) and ev.type_tag.name not in compiled.routing:
            if ev.type_tag.name not in warned:
                warned.add(ev.type_tag.name)
                print(f"warning: no pattern references message type :{ev.type_tag.name}",
                      file=sys.stderr)
    for tag, bound in compiled.retention_ms.items():
        if bound is None:
            print(f"warning: messages of type :{tag} are retained until consumed",
                  file=sys.stderr)


def _cmd_check(args) -> int:
    program = _load_program(args.patterns)
    expanded = expand(program)
    compiled = compile_program(expanded)
    for cp in compiled.patterns:
        print(f"pattern {cp.name}:")
        print(f"  expanded: {pattern_text(expanded.patterns[cp.index])}")
        shared = _shared_variables(cp)
        if shared:
            for name, slots in shared:
                where = ", ".join(str(i + 1) for i in slots)
                print(f"  shared variable {name!r} across constituents {where}")
        else:
            print("  shared variables: none")
    print(f"alpha nodes: {len(compiled.alphas)}")
    for key, spec in compiled.alphas.items():
        tests = ", ".join(f"{i}={v!r}" for i, v in spec.const_tests) or "no constant tests"
        extra = []
        if spec.every_n is not None:
            extra.append(f"every {spec.every_n}")
        if spec.debounce_ms is not None:
            extra.append(f"debounce {spec.debounce_ms}ms")
        suffix = f" ({', '.join(extra)})" if extra else ""
        users = ", ".join(
            f"{compiled.patterns[p].name}#{c + 1}" for p, _, c in spec.downstream
        )
        print(f"  :{spec.type_tag.name}/{spec.arity} [{tests}]{suffix} -> {users}")
    return 0


def _shared_variables(cp):
    out = []
    for alt in cp.alternatives:
        seen: dict[str, list[int]] = {}
        for cons in alt.constituents:
            assert isinstance(cons.selector, Selector)
            for term in cons.selector.terms:
                if isinstance(term, Var):
                    slots = seen.setdefault(term.name, [])
                    if cons.cons_index not in slots:
                        slots.append(cons.cons_index)
        for name, slots in seen.items():
            if len(slots) > 1:
                out.append((name, slots))
    return out


def _both_outputs(args):
    program = _load_program(args.patterns)
    events = _load_events(args.trace)
    lifetime = parse_lifetime(getattr(args, "lifetime", None))
    compiled = compile_program(expand(program))
    labels: dict[str, list[str]] = {}
    for b in compiled.bindings:
        labels.setdefault(b.pattern, []).append(b.label)

    def reactions_of(name):
        return labels.get(name, [])

    engine_matches, _ = replay_trace(compiled, events, lifetime)
    oracle_out = oracle_run(compiled, events, lifetime)
    engine_records = [record_line(r) for r in records_for(engine_matches, reactions_of)]
    oracle_records = [record_line(r) for r in records_for(oracle_out.results, reactions_of)]
    return engine_records, oracle_records


def _cmd_oracle(args) -> int:
    engine_records, oracle_records = _both_outputs(args)
    if args.perturb and engine_records:
        del engine_records[len(engine_records) // 2]
    identical = engine_records == oracle_records
    if args.diff:
        if identical:
            print(f"identical ({len(engine_records)} records)")
        else:
            for i in range(max(len(engine_records), len(oracle_records))):
                e = engine_records[i] if i < len(engine_records) else "<missing>"
                o = oracle_records[i] if i < len(oracle_records) else "<missing>"
                if e != o:
                    print(f"first divergence at record {i}:")
                    print(f"  engine: {e}")
                    print(f"  oracle: {o}")
                    break
    else:
        sys.stdout.write("".join(line + "\n" for line in oracle_records))
    return 0 if identical else 1


def _cmd_fuzz(args) -> int:
    from .fuzz import run_case

    failures = 0
    covered: set[str] = set()
    for i in range(args.count):
        seed = args.seed + i
        force = OP_GRID[i % len(OP_GRID)]
        case = generate_case(seed, n_events=args.events, force_op=force)
        covered |= case.ops
        ok, detail = run_case(case)
        if not ok:
            failures += 1
            print(f"seed {seed}: DIVERGENCE\n{detail}", file=sys.stderr)
            print("program:\n" + case.program_text, file=sys.stderr)
            break
    if failures == 0:
        missing = set(OP_GRID) - covered
        note = f" (grid not covered: {sorted(missing)})" if missing else ""
        print(f"ok: {args.count} cases identical{note}")
        return 0
    return 1


if __name__ == "__main__":
    raise SystemExit(main())
