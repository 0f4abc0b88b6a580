"""Pattern-language syntax tree.

All nodes are frozen dataclasses so parsed programs are immutable values;
expansion and compilation build new trees instead of mutating.

A parsed pattern body is always an :class:`OrGroup` of :class:`AndGroup` of
:class:`ElemPattern` leaves (the surface grammar has no parentheses, and
``and`` binds tighter than ``or``).  Expansion of named references may splice
a composite body into a leaf position, so expanded bodies are general trees.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .values import Duration, Symbol, Value

# --------------------------------------------------------------------------
# selector terms


@dataclass(frozen=True, slots=True)
class Const:
    value: Value


@dataclass(frozen=True, slots=True)
class Var:
    name: str


@dataclass(frozen=True, slots=True)
class MustDistinct:
    """``!name`` — the bound values must be pairwise distinct across a group."""

    name: str


@dataclass(frozen=True, slots=True)
class MayDistinct:
    """``@name`` — matches any value, adds no constraint and no binding."""

    name: str


Term = Const | Var | MustDistinct | MayDistinct


@dataclass(frozen=True, slots=True)
class Selector:
    """A message shape: constant type tag plus ordered attribute terms."""

    type_tag: Symbol
    terms: tuple[Term, ...]

    @property
    def arity(self) -> int:
        return len(self.terms)


# --------------------------------------------------------------------------
# guard / transformer expressions


@dataclass(frozen=True, slots=True)
class Lit:
    value: Value


@dataclass(frozen=True, slots=True)
class VarRef:
    name: str


@dataclass(frozen=True, slots=True)
class NotOp:
    operand: "Expr"


@dataclass(frozen=True, slots=True)
class BinOp:
    op: str  # and or == != < <= > >= + - * /
    left: "Expr"
    right: "Expr"


Expr = Lit | VarRef | NotOp | BinOp


@dataclass(frozen=True, slots=True)
class FoldFn:
    """``fn({_, _, v}, acc) -> body end`` — params destructure the full
    message tuple (type tag first); ``None`` entries are wildcards."""

    params: tuple[str | None, ...]
    acc_name: str
    body: Expr


@dataclass(frozen=True, slots=True)
class Fold:
    init: Expr
    fn: FoldFn


@dataclass(frozen=True, slots=True)
class Bind:
    name: str


Transformer = Fold | Bind


# --------------------------------------------------------------------------
# elementary-pattern operators


@dataclass(frozen=True, slots=True)
class Window:
    duration: Duration


@dataclass(frozen=True, slots=True)
class Debounce:
    duration: Duration


@dataclass(frozen=True, slots=True)
class Every:
    n: int


@dataclass(frozen=True, slots=True)
class Count:
    n: int


ElemOperator = Window | Debounce | Every | Count


# --------------------------------------------------------------------------
# named-reference refinements


@dataclass(frozen=True, slots=True)
class InlineGuard:
    """``name = literal`` — substitute the variable with a constant."""

    name: str
    value: Expr


@dataclass(frozen=True, slots=True)
class AliasOp:
    """``src ~> dst`` — rename a logic variable during expansion."""

    src: str
    dst: str


@dataclass(frozen=True, slots=True)
class DistinctMark:
    """``@name`` / ``!name`` inside a refinement group — re-mark a variable."""

    marker: str  # "@" or "!"
    name: str


Refinement = InlineGuard | AliasOp | DistinctMark


@dataclass(frozen=True, slots=True)
class NamedRef:
    name: str
    refinements: tuple[Refinement, ...] = ()


# --------------------------------------------------------------------------
# pattern bodies


@dataclass(frozen=True, slots=True)
class ElemPattern:
    negated: bool
    base: Selector | NamedRef
    operators: tuple[ElemOperator, ...] = ()
    transformers: tuple[Transformer, ...] = ()


@dataclass(frozen=True, slots=True)
class AndGroup:
    parts: tuple["Body", ...]


@dataclass(frozen=True, slots=True)
class OrGroup:
    alts: tuple["Body", ...]


Body = ElemPattern | AndGroup | OrGroup


def body_leaves(body: Body) -> list[ElemPattern]:
    """All elementary leaves in textual (left-to-right) order."""
    if isinstance(body, ElemPattern):
        return [body]
    parts = body.parts if isinstance(body, AndGroup) else body.alts
    out: list[ElemPattern] = []
    for p in parts:
        out.extend(body_leaves(p))
    return out


@dataclass(frozen=True, slots=True)
class Options:
    seq: bool = False
    interval: Duration | None = None
    last: bool = False
    debounce: Duration | None = None

    def is_default(self) -> bool:
        return self == Options()


@dataclass(frozen=True, slots=True)
class PatternAst:
    name: str
    body: Body
    guard: Expr | None = None
    options: Options = field(default_factory=Options)


@dataclass(frozen=True, slots=True)
class ReactionBinding:
    pattern: str
    label: str
    emit_form: bool = False  # surface style only: `emit(label)` vs bare label


@dataclass(frozen=True, slots=True)
class Program:
    patterns: tuple[PatternAst, ...]
    bindings: tuple[ReactionBinding, ...] = ()

    def pattern_named(self, name: str) -> PatternAst | None:
        for p in self.patterns:
            if p.name == name:
                return p
        return None
