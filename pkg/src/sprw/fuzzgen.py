"""Seeded random (program, trace) pairs for differential testing.

Each case is a pure function of its seed: a small program drawn from the
full operator grid plus a trace over a tiny typed alphabet whose value pools
are deliberately narrow, so unification collisions, guard flips, distinctness
conflicts and window boundaries all occur often.  ``force_op`` regenerates
until the requested operator family appears, which lets a suite of N seeds
guarantee grid coverage deterministically.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .nodes import (
    AndGroup,
    Bind,
    BinOp,
    Const,
    Count,
    Debounce,
    ElemPattern,
    Every,
    Fold,
    FoldFn,
    Lit,
    MayDistinct,
    MustDistinct,
    Options,
    OrGroup,
    PatternAst,
    Program,
    ReactionBinding,
    Selector,
    Var,
    VarRef,
    Window,
    body_leaves,
)
from .printer import pretty_print
from .tracefile import AdvanceEvent, MessageEvent, TraceEvent
from .values import Duration, Symbol

OP_GRID = (
    "const", "guard", "and", "or", "seq", "interval", "last", "not_window",
    "count", "window", "count_window", "every", "debounce", "must", "may",
    "fold_bind",
)

# alphabet: tag -> per-position value kind
_TYPES = {
    "ta": ("sym", "int"),
    "tb": ("str", "int"),
    "tc": ("sym", "int", "int"),
    "td": ("int",),
}
_POOLS = {
    "sym": (Symbol("on"), Symbol("off"), Symbol("hall")),
    "int": (1, 2, 3),
    "str": ("x", "y"),
}
_VARS = ("v1", "v2", "v3")


@dataclass(slots=True)
class FuzzCase:
    seed: int
    program: Program
    program_text: str
    trace: list[TraceEvent]
    ops: set[str] = field(default_factory=set)


def generate_case(seed: int, n_events: int = 120, force_op: str | None = None) -> FuzzCase:
    for attempt in range(64):
        rng = random.Random((seed << 8) + attempt)
        program = _gen_program(rng)
        ops = _ops_of(program)
        if force_op is None or force_op in ops:
            trace = _gen_trace(rng, n_events)
            return FuzzCase(seed, program, pretty_print(program), trace, ops)
    raise AssertionError(f"could not generate a case containing {force_op!r}")


def _gen_program(rng: random.Random) -> Program:
    patterns = []
    bindings = []
    for i in range(rng.randint(1, 3)):
        name = f"p{i + 1}"
        patterns.append(_gen_pattern(rng, name))
        if rng.random() < 0.7:
            bindings.append(ReactionBinding(name, f"r{i + 1}", emit_form=True))
    return Program(tuple(patterns), tuple(bindings))


def _gen_pattern(rng: random.Random, name: str) -> PatternAst:
    n_alts = 2 if rng.random() < 0.25 else 1
    alts = []
    int_vars: set[str] = set()
    bound_vars: set[str] = set()
    folded: list[str] = []
    for _ in range(n_alts):
        n_cons = rng.randint(1, 3)
        leaves = []
        for c in range(n_cons):
            negate = n_cons > 1 and c > 0 and rng.random() < 0.18
            leaves.append(_gen_leaf(rng, negate, int_vars, bound_vars, folded))
        alts.append(AndGroup(tuple(leaves)))
    body = OrGroup(tuple(alts))

    guard = None
    if rng.random() < 0.45:
        guard = _gen_guard(rng, int_vars, bound_vars, folded)

    seq = rng.random() < 0.25
    last = rng.random() < 0.4
    interval = Duration(rng.randint(2, 8), "secs") if rng.random() < 0.3 else None
    debounce = Duration(rng.randint(1, 4), "secs") if rng.random() < 0.12 else None
    return PatternAst(name, body, guard, Options(seq=seq, interval=interval,
                                                 last=last, debounce=debounce))


def _gen_leaf(rng, negated, int_vars, bound_vars, folded) -> ElemPattern:
    tag = rng.choice(sorted(_TYPES))
    kinds = _TYPES[tag]
    terms = []
    for pos, kind in enumerate(kinds):
        roll = rng.random()
        if roll < 0.3:
            terms.append(Const(rng.choice(_POOLS[kind])))
        elif roll < 0.78:
            v = rng.choice(_VARS)
            terms.append(Var(v))
            if not negated:
                bound_vars.add(v)
                if kind == "int":
                    int_vars.add(v)
        elif roll < 0.9:
            terms.append(MayDistinct(rng.choice(_VARS)))
        else:
            terms.append(MustDistinct(rng.choice(_VARS)))
    selector = Selector(Symbol(tag), tuple(terms))

    operators = []
    if negated:
        if rng.random() < 0.9:
            operators.append(Window(Duration(rng.randint(1, 5), "secs")))
    else:
        roll = rng.random()
        if roll < 0.14:
            operators.append(Count(rng.randint(2, 3)))
        elif roll < 0.3:
            operators.append(Window(Duration(rng.randint(1, 5), "secs")))
        elif roll < 0.4:
            operators.append(Count(rng.randint(2, 3)))
            operators.append(Window(Duration(rng.randint(2, 6), "secs")))
        elif roll < 0.47:
            operators.append(Every(rng.randint(2, 3)))
        elif roll < 0.53:
            operators.append(Debounce(Duration(rng.randint(1, 3), "secs")))

    transformers = []
    has_acc = any(isinstance(op, (Count, Window)) for op in operators)
    int_positions = [i for i, k in enumerate(kinds) if k == "int"]
    if not negated and has_acc and int_positions and rng.random() < 0.5:
        pos = rng.choice(int_positions)
        params = [None] * (len(kinds) + 1)
        params[pos + 1] = "v"
        total = f"t{len(folded) + 1}"
        transformers = [
            Fold(Lit(0), FoldFn(tuple(params), "acc", BinOp("+", VarRef("acc"), VarRef("v")))),
            Bind(total),
        ]
        folded.append(total)
    return ElemPattern(negated, selector, tuple(operators), tuple(transformers))


def _gen_guard(rng, int_vars, bound_vars, folded):
    choices = []
    if folded:
        choices.append(("total", rng.choice(folded)))
    if int_vars:
        choices.append(("int", rng.choice(sorted(int_vars))))
    if len(bound_vars) >= 2:
        pair = rng.sample(sorted(bound_vars), 2)
        choices.append(("pair", pair))
    if not choices:
        return None
    kind, payload = rng.choice(choices)
    if kind == "total":
        return BinOp(rng.choice((">", ">=", "<")), VarRef(payload), Lit(rng.randint(1, 6)))
    if kind == "int":
        return BinOp(rng.choice((">", "<", "==", "!=")), VarRef(payload), Lit(rng.randint(1, 3)))
    left, right = payload
    cmp = BinOp(rng.choice(("==", "!=")), VarRef(left), VarRef(right))
    if rng.random() < 0.3:
        return BinOp("or", cmp, BinOp("==", VarRef(left), VarRef(left)))
    return cmp


def _gen_trace(rng: random.Random, n_events: int) -> list[TraceEvent]:
    events: list[TraceEvent] = []
    ts = 0
    for _ in range(n_events):
        if rng.random() < 0.08:
            ts += rng.randint(500, 5000)
            events.append(AdvanceEvent(ts))
            continue
        if rng.random() >= 0.1:  # occasionally keep the same timestamp
            ts += rng.randint(50, 1500)
        if rng.random() < 0.04:
            events.append(MessageEvent(ts, Symbol("zz"), (1,)))
            continue
        tag = rng.choice(sorted(_TYPES))
        attrs = tuple(rng.choice(_POOLS[k]) for k in _TYPES[tag])
        events.append(MessageEvent(ts, Symbol(tag), attrs))
    events.append(AdvanceEvent(ts + 20_000))
    return events


def _ops_of(program: Program) -> set[str]:
    ops: set[str] = set()
    for p in program.patterns:
        leaves = body_leaves(p.body)
        if len(p.body.alts) > 1:
            ops.add("or")
        if any(len(a.parts) > 1 for a in p.body.alts):
            ops.add("and")
        if p.guard is not None:
            ops.add("guard")
        if p.options.seq:
            ops.add("seq")
        if p.options.interval is not None:
            ops.add("interval")
        if p.options.last:
            ops.add("last")
        if p.options.debounce is not None:
            ops.add("debounce")
        for leaf in leaves:
            kinds = {type(op) for op in leaf.operators}
            if leaf.negated and Window in kinds:
                ops.add("not_window")
            if Count in kinds and Window in kinds:
                ops.add("count_window")
            elif Count in kinds:
                ops.add("count")
            elif Window in kinds and not leaf.negated:
                ops.add("window")
            if Every in kinds:
                ops.add("every")
            if Debounce in kinds:
                ops.add("debounce")
            if leaf.transformers:
                ops.add("fold_bind")
            assert isinstance(leaf.base, Selector)
            for t in leaf.base.terms:
                if isinstance(t, Const):
                    ops.add("const")
                elif isinstance(t, MustDistinct):
                    ops.add("must")
                elif isinstance(t, MayDistinct):
                    ops.add("may")
    return ops
