"""Differential runner: one generated case through engine and oracle."""

from __future__ import annotations

from .compile import compile_program
from .engine import replay_trace
from .expand import expand
from .fuzzgen import FuzzCase
from .oracle import oracle_run
from .parser import parse_program
from .tracefile import record_line, records_for


def case_outputs(case: FuzzCase, lifetime_ms: int | None = None):
    """Run engine and oracle on one case; the program goes through the full
    parse path so the surface syntax is exercised too."""
    program = parse_program(case.program_text)
    compiled = compile_program(expand(program))
    labels: dict[str, list[str]] = {}
    for b in compiled.bindings:
        labels.setdefault(b.pattern, []).append(b.label)

    def reactions_of(name: str):
        return labels.get(name, [])

    engine_matches, net = replay_trace(compiled, case.trace, lifetime_ms)
    oracle_out = oracle_run(compiled, case.trace, lifetime_ms)
    engine_records = [record_line(r) for r in records_for(engine_matches, reactions_of)]
    oracle_records = [record_line(r) for r in records_for(oracle_out.results, reactions_of)]
    return engine_records, oracle_records, engine_matches, oracle_out, net


def run_case(case: FuzzCase, lifetime_ms: int | None = None) -> tuple[bool, str]:
    engine_records, oracle_records, _, _, _ = case_outputs(case, lifetime_ms)
    if engine_records == oracle_records:
        return True, ""
    for i in range(max(len(engine_records), len(oracle_records))):
        e = engine_records[i] if i < len(engine_records) else "<missing>"
        o = oracle_records[i] if i < len(oracle_records) else "<missing>"
        if e != o:
            return False, f"record {i}:\n  engine: {e}\n  oracle: {o}"
    return False, "length mismatch"
