"""Brute-force reference matcher.

Semantically identical to the incremental engine but with no incrementality:
alpha routing is precomputed in one forward pass over the trace (the stream
operators are deterministic in the message order alone), every evaluation
point re-enumerates candidate combinations over the full retained message
set, and the decision procedure itself is the shared one from
:mod:`sprw.combine`.  Evaluation points are derived from the trace: every
message event, plus every window/negation boundary a routed message induces,
plus debounce-clear points injected as matches occur.

The output is a pure function of (program, trace, lifetime); the acceptance
suite requires it to be byte-identical to the engine's.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

from .combine import evaluate_pattern
from .compile import AlphaRouter, CompiledProgram, eligibility_predicate
from .matching import Diagnostic, MatchResult, Message, extend_env
from .tracefile import AdvanceEvent, TraceEvent


@dataclass(slots=True)
class OracleOutput:
    results: list[MatchResult] = field(default_factory=list)
    diagnostics: list[Diagnostic] = field(default_factory=list)


def oracle_run(
    compiled: CompiledProgram,
    trace: list[TraceEvent],
    lifetime_ms: int | None = None,
) -> OracleOutput:
    out = OracleOutput()
    if not trace:
        return out
    horizon = _horizon(trace)

    # Forward pass: materialise messages and their alpha routing.
    router = AlphaRouter(compiled)
    messages: list[Message] = []
    routed: list[list] = []  # per message: list of (cons, p_idx, a_idx)
    for ev in trace:
        if isinstance(ev, AdvanceEvent):
            continue
        n = len(messages) + 1
        msg = Message(id=n, seq=n, ts=ev.ts, type_tag=ev.type_tag, attrs=ev.attrs)
        slots = []
        for spec in router.route(ev.type_tag.name, ev.attrs, ev.ts):
            for p_idx, a_idx, cons in spec.targets:
                if cons.needs_local_check and extend_env(cons.bind_terms, msg, {}, {}) is None:
                    continue
                slots.append((cons, p_idx, a_idx))
        messages.append(msg)
        routed.append(slots)

    # Static timer points: window/negation boundaries induced by routing.
    timer_points: set[int] = set()
    for msg, slots in zip(messages, routed):
        for cons, p_idx, a_idx in slots:
            if cons.window_ms is not None:
                t = msg.ts + cons.window_ms
                if t <= horizon:
                    timer_points.add(t)
            if not cons.negated:
                for neg in compiled.patterns[p_idx].alternatives[a_idx].negatives:
                    if neg.window_ms is not None:
                        t = msg.ts + neg.window_ms
                        if t <= horizon:
                            timer_points.add(t)

    # Worklist: (time, phase, order) — timers (phase 0) precede events (1).
    work: list[tuple[int, int, int]] = [(t, 0, 0) for t in timer_points]
    for i, msg in enumerate(messages):
        work.append((msg.ts, 1, i))
    heapq.heapify(work)
    scheduled: set[int] = set(timer_points)

    # Retained store, indexed per (pattern, alternative, constituent).  A per
    # slot start index skips messages that can never match again (consumed by
    # this pattern, or past their window/retention forever); eligibility at
    # the current instant is still decided by the shared predicates.
    cands: dict[tuple[int, int, int], list[Message]] = {}
    blocks: dict[tuple[int, int, int], list[Message]] = {}
    starts: dict[tuple[int, int, int], int] = {}
    consumed: list[set[int]] = [set() for _ in compiled.patterns]
    last_activation: list[int | None] = [None] * len(compiled.patterns)
    retention = compiled.retention_ms
    cycle = 0
    empty: list[Message] = []

    def dead_forever(m: Message, cons, now: int) -> bool:
        if cons.window_ms is not None and m.ts + cons.window_ms <= now:
            return True
        if cons.slot_bound_ms is not None and now - m.ts > cons.slot_bound_ms:
            return True
        if lifetime_ms is not None and now - m.ts > lifetime_ms:
            return True
        bound = retention.get(m.type_tag.name)
        return bound is not None and now - m.ts > bound

    def live_slice(store, slot, cons, now, skip_consumed):
        lst = store.get(slot)
        if not lst:
            return empty
        start = starts.get(slot, 0)
        while start < len(lst) and (
            (skip_consumed is not None and lst[start].id in skip_consumed)
            or dead_forever(lst[start], cons, now)
        ):
            start += 1
        starts[slot] = start
        if skip_consumed:
            return [m for m in lst[start:] if m.id not in skip_consumed]
        return lst[start:]

    def eval_all(now: int) -> None:
        nonlocal cycle
        cycle += 1
        eligible = eligibility_predicate(compiled, lifetime_ms, now)
        for cp in compiled.patterns:
            p_idx = cp.index
            if cp.debounce_ms is not None:
                last = last_activation[p_idx]
                if last is not None and now - last <= cp.debounce_ms:
                    continue

            def get_candidates(a_idx, c_idx, _p=p_idx, _cp=cp):
                cons = _cp.alternatives[a_idx].constituents[c_idx]
                return live_slice(cands, (_p, a_idx, c_idx), cons, now, consumed[_p])

            def get_blockers(a_idx, c_idx, _p=p_idx, _cp=cp):
                cons = _cp.alternatives[a_idx].constituents[c_idx]
                return live_slice(blocks, (_p, a_idx, c_idx), cons, now, None)

            outcome = evaluate_pattern(cp, get_candidates, get_blockers, now, eligible, cycle)
            out.diagnostics.extend(outcome.diagnostics)
            if outcome.result is not None:
                consumed[p_idx].update(m.id for m in outcome.result.messages)
                last_activation[p_idx] = now
                out.results.append(outcome.result)
                if cp.debounce_ms is not None:
                    t = now + cp.debounce_ms + 1
                    if t <= horizon and t not in scheduled:
                        scheduled.add(t)
                        heapq.heappush(work, (t, 0, 0))

    while work:
        time, phase, order = heapq.heappop(work)
        if phase == 1:
            msg = messages[order]
            for cons, p_idx, a_idx in routed[order]:
                store = blocks if cons.negated else cands
                store.setdefault((p_idx, a_idx, cons.cons_index), []).append(msg)
        eval_all(time)
    return out


def _horizon(trace: list[TraceEvent]) -> int:
    last = 0
    for ev in trace:
        last = ev.to if isinstance(ev, AdvanceEvent) else ev.ts
    return last
