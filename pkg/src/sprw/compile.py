"""Compilation of an expanded program into a discrimination-network plan.

The compiled form is pure data shared by the incremental engine and the
brute-force oracle: alpha-node signatures (constant tests plus every/debounce
config, deduplicated across patterns), per-pattern alternatives in disjunctive
normal form, and per-type retention bounds.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import CompileError
from .nodes import (
    AndGroup,
    Body,
    Const,
    Count,
    Debounce,
    ElemPattern,
    Every,
    Expr,
    MustDistinct,
    NamedRef,
    Options,
    OrGroup,
    Program,
    Selector,
    Var,
    Window,
)
from .values import Symbol, Value


@dataclass(slots=True)
class CompiledConstituent:
    cons_index: int
    negated: bool
    selector: Selector
    count_n: int | None
    window_ms: int | None
    every_n: int | None
    debounce_ms: int | None
    transformers: tuple
    alpha_key: tuple = ()
    # non-constant terms as (attr index, name, kind 0=var/1=must-distinct);
    # constant tests are already guaranteed by the alpha node, and
    # may-distinct terms impose nothing, so the join only walks these
    bind_terms: tuple[tuple[int, str, int], ...] = ()
    needs_local_check: bool = False  # selector repeats a variable name
    # age past which a buffered candidate provably cannot join any future
    # combination (pattern interval plus the tightest partner window)
    slot_bound_ms: int | None = None

    @property
    def accumulates(self) -> bool:
        return self.count_n is not None or self.window_ms is not None


@dataclass(slots=True)
class CompiledAlternative:
    constituents: list[CompiledConstituent]
    positives: list[CompiledConstituent] = field(default_factory=list)
    negatives: list[CompiledConstituent] = field(default_factory=list)


@dataclass(slots=True)
class CompiledPattern:
    index: int
    name: str
    alternatives: list[CompiledAlternative]
    guard: Expr | None
    seq: bool
    interval_ms: int | None
    last: bool
    debounce_ms: int | None
    fastpath: bool = False


@dataclass(slots=True)
class AlphaSpec:
    """One shared alpha node: constant tests plus stream-operator config."""

    key: tuple
    type_tag: Symbol
    arity: int
    const_tests: tuple[tuple[int, Value], ...]
    every_n: int | None
    debounce_ms: int | None
    downstream: list[tuple[int, int, int]] = field(default_factory=list)
    targets: list = field(default_factory=list)  # (pattern idx, alt idx, constituent)

    def passes_constants(self, attrs: tuple[Value, ...]) -> bool:
        from .values import values_equal

        if len(attrs) != self.arity:
            return False
        for idx, expected in self.const_tests:
            if not values_equal(attrs[idx], expected):
                return False
        return True


@dataclass(slots=True)
class CompiledProgram:
    patterns: list[CompiledPattern]
    alphas: dict[tuple, AlphaSpec]
    routing: dict[str, list[tuple]]  # type-tag name -> alpha keys
    retention_ms: dict[str, int | None]  # None = retained until consumed
    bindings: tuple
    source: Program


def _dnf(body: Body) -> list[list[ElemPattern]]:
    if isinstance(body, ElemPattern):
        return [[body]]
    if isinstance(body, OrGroup):
        out: list[list[ElemPattern]] = []
        for alt in body.alts:
            out.extend(_dnf(alt))
        return out
    combos: list[list[ElemPattern]] = [[]]
    for part in body.parts:
        combos = [c + alt for c in combos for alt in _dnf(part)]
    return combos


def compile_program(program: Program) -> CompiledProgram:
    """Build the network plan.  The program must already be expanded."""
    patterns: list[CompiledPattern] = []
    alphas: dict[tuple, AlphaSpec] = {}
    routing: dict[str, list[tuple]] = {}

    for p_idx, past in enumerate(program.patterns):
        alternatives: list[CompiledAlternative] = []
        for a_idx, leaves in enumerate(_dnf(past.body)):
            constituents: list[CompiledConstituent] = []
            for c_idx, leaf in enumerate(leaves):
                if isinstance(leaf.base, NamedRef):
                    raise CompileError(
                        "UnexpandedRef",
                        f"pattern {past.name!r} still references {leaf.base.name!r}",
                    )
                if leaf.negated and leaf.transformers:
                    raise CompileError(
                        "TransformersOnNegated",
                        f"pattern {past.name!r} applies transformers to a negated constituent",
                    )
                count_n = window_ms = every_n = debounce_ms = None
                for op in leaf.operators:
                    if isinstance(op, Count):
                        count_n = op.n
                    elif isinstance(op, Window):
                        window_ms = op.duration.ms
                    elif isinstance(op, Every):
                        every_n = op.n
                    else:
                        assert isinstance(op, Debounce)
                        debounce_ms = op.duration.ms
                bind_terms = []
                var_names = []
                for pos, term in enumerate(leaf.base.terms):
                    if isinstance(term, Var):
                        bind_terms.append((pos, term.name, 0))
                        var_names.append(term.name)
                    elif isinstance(term, MustDistinct):
                        bind_terms.append((pos, term.name, 1))
                constituents.append(
                    CompiledConstituent(
                        cons_index=c_idx,
                        negated=leaf.negated,
                        selector=leaf.base,
                        count_n=count_n,
                        window_ms=window_ms,
                        every_n=every_n,
                        debounce_ms=debounce_ms,
                        transformers=leaf.transformers,
                        bind_terms=tuple(bind_terms),
                        needs_local_check=len(var_names) != len(set(var_names)),
                    )
                )
            alt = CompiledAlternative(constituents)
            alt.positives = [c for c in constituents if not c.negated]
            alt.negatives = [c for c in constituents if c.negated]
            if not alt.positives:
                raise CompileError(
                    "NoPositiveConstituent",
                    f"pattern {past.name!r} has an alternative with no positive constituent",
                )
            alternatives.append(alt)

            for cons in constituents:
                key = _alpha_key(cons)
                cons.alpha_key = key
                spec = alphas.get(key)
                if spec is None:
                    spec = AlphaSpec(
                        key=key,
                        type_tag=cons.selector.type_tag,
                        arity=cons.selector.arity,
                        const_tests=_const_tests(cons.selector),
                        every_n=cons.every_n,
                        debounce_ms=cons.debounce_ms,
                    )
                    alphas[key] = spec
                    routing.setdefault(cons.selector.type_tag.name, []).append(key)
                spec.downstream.append((p_idx, a_idx, cons.cons_index))
                spec.targets.append((p_idx, a_idx, cons))

        opts: Options = past.options
        interval_ms = opts.interval.ms if opts.interval else None
        if interval_ms is not None:
            for alt in alternatives:
                for cons in alt.positives:
                    if cons.window_ms is not None:
                        continue
                    partners = [
                        o.window_ms for o in alt.positives
                        if o is not cons and o.window_ms is not None
                    ]
                    if partners:
                        cons.slot_bound_ms = interval_ms + min(partners)
        patterns.append(
            CompiledPattern(
                index=p_idx,
                name=past.name,
                alternatives=alternatives,
                guard=past.guard,
                seq=opts.seq,
                interval_ms=interval_ms,
                last=opts.last,
                debounce_ms=opts.debounce.ms if opts.debounce else None,
            )
        )

    retention = _retention_bounds(patterns)
    for cp in patterns:
        cp.fastpath = _fastpath_capable(cp, retention)

    return CompiledProgram(
        patterns=patterns,
        alphas=alphas,
        routing=routing,
        retention_ms=retention,
        bindings=program.bindings,
        source=program,
    )


class AlphaRouter:
    """Stateful pass/drop filter over the shared alpha nodes.

    Every(n) counts messages passing the node's constant tests and passes
    each n-th; Debounce(d) is leading-edge (passes, then drops followers
    within d of the last passed message).  State is per alpha node, so
    patterns sharing a node share the counter.
    """

    def __init__(self, compiled: CompiledProgram):
        self.compiled = compiled
        self.counts: dict[tuple, int] = {}
        self.last_passed: dict[tuple, int] = {}

    def route(self, type_tag_name: str, attrs, ts: int) -> list[AlphaSpec]:
        passing = []
        for key in self.compiled.routing.get(type_tag_name, ()):
            spec = self.compiled.alphas[key]
            if not spec.passes_constants(attrs):
                continue
            if spec.every_n is not None:
                count = self.counts.get(key, 0) + 1
                self.counts[key] = count
                if count % spec.every_n != 0:
                    continue
            if spec.debounce_ms is not None:
                last = self.last_passed.get(key)
                if last is not None and ts - last <= spec.debounce_ms:
                    continue
                self.last_passed[key] = ts
            passing.append(spec)
        return passing


def eligibility_predicate(compiled: CompiledProgram, lifetime_ms: int | None, now: int):
    """Retention/lifetime predicate applied to every candidate and blocker."""
    retention = compiled.retention_ms

    def eligible(m) -> bool:
        age = now - m.ts
        if lifetime_ms is not None and age > lifetime_ms:
            return False
        bound = retention.get(m.type_tag.name)
        return bound is None or age <= bound

    return eligible


def _const_tests(sel: Selector) -> tuple[tuple[int, Value], ...]:
    return tuple((i, t.value) for i, t in enumerate(sel.terms) if isinstance(t, Const))


def _alpha_key(cons: CompiledConstituent) -> tuple:
    return (
        cons.selector.type_tag.name,
        cons.selector.arity,
        _const_tests(cons.selector),
        cons.every_n,
        cons.debounce_ms,
    )


def _retention_bounds(patterns: list[CompiledPattern]) -> dict[str, int | None]:
    """Useful lifetime per message type: max over referencing windows and
    pattern intervals; any unwindowed reference in an interval-free pattern
    makes the type live until consumed (None)."""
    bounds: dict[str, int | None] = {}
    unbounded: set[str] = set()
    for cp in patterns:
        for alt in cp.alternatives:
            for cons in alt.constituents:
                tag = cons.selector.type_tag.name
                if cons.window_ms is not None:
                    b = cons.window_ms
                elif not cons.negated and cp.interval_ms is not None:
                    b = cp.interval_ms
                else:
                    unbounded.add(tag)
                    continue
                prev = bounds.get(tag)
                if prev is None or b > prev:
                    bounds[tag] = b
    for tag in unbounded:
        bounds[tag] = None
    return bounds


def _fastpath_capable(cp: CompiledPattern, retention: dict[str, int | None]) -> bool:
    """True when the pattern's evaluation outcome can only change at a
    buffer/timer event, so a cached miss may be reused between events.
    Plain constituents whose candidates can silently expire (finite retention
    without a matching window timer) rule it out."""
    for alt in cp.alternatives:
        for cons in alt.constituents:
            if cons.window_ms is not None:
                continue  # expiry is timer-driven
            if retention.get(cons.selector.type_tag.name) is not None:
                return False
    return True
