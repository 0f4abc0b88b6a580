from __future__ import annotations

from sprw.compile import compile_program
from sprw.expand import expand
from sprw.fuzz import run_case
from sprw.fuzzgen import generate_case
from sprw.oracle import oracle_run
from sprw.parser import parse_program
from sprw.tracefile import AdvanceEvent, MessageEvent
from sprw.values import Symbol


def compiled(text):
    return compile_program(expand(parse_program(text)))


def events(*items):
    return [
        MessageEvent(ts, Symbol(tag), tuple(attrs)) if kind == "m" else AdvanceEvent(ts)
        for kind, ts, tag, attrs in items
    ]


def test_single_elementary_pattern_is_a_linear_filter():
    c = compiled("pattern p as {:a, x, :on}")
    trace = events(
        ("m", 0, "a", (1, Symbol("on"))),
        ("m", 10, "a", (2, Symbol("off"))),
        ("m", 20, "a", (3, Symbol("on"))),
        ("m", 30, "b", (4,)),
    )
    out = oracle_run(c, trace)
    assert [(m.at, m.bindings["x"]) for m in out.results] == [(0, 1), (20, 3)]


def test_count_trace_matches_hand_derivation():
    c = compiled("pattern hf as {:heating_f, id, @code}[count: 3]")
    trace = events(
        ("m", 0, "heating_f", ("b1", Symbol("c1"))),
        ("m", 1000, "heating_f", ("b1", Symbol("c2"))),
        ("m", 2000, "heating_f", ("b2", Symbol("c3"))),
        ("m", 3000, "heating_f", ("b1", Symbol("c1"))),
    )
    out = oracle_run(c, trace)
    assert len(out.results) == 1
    assert [m.id for m in out.results[0].messages] == [1, 2, 4]
    assert out.results[0].at == 3000


def test_pure_function_of_inputs():
    case = generate_case(7, n_events=60)
    c = compiled(case.program_text)
    first = oracle_run(c, case.trace)
    second = oracle_run(c, case.trace)
    assert [(m.pattern, m.at, tuple(x.id for x in m.messages)) for m in first.results] == [
        (m.pattern, m.at, tuple(x.id for x in m.messages)) for m in second.results
    ]


def test_time_insensitive_programs_derive_no_timer_points():
    # no negation, debounce or window: only event times can produce matches
    c = compiled("pattern p as {:a, x} and {:b, x}")
    trace = events(
        ("m", 0, "a", (1,)),
        ("m", 10, "b", (1,)),
        ("a", 100_000, "", ()),
    )
    out = oracle_run(c, trace)
    event_times = {0, 10}
    assert all(m.at in event_times for m in out.results)


def test_seeded_cases_agree_with_engine():
    for seed in range(25):
        case = generate_case(5000 + seed, n_events=100)
        ok, detail = run_case(case)
        assert ok, f"seed {case.seed}: {detail}\n{case.program_text}"
