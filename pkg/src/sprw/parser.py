"""Recursive-descent parser for the pattern language.

``parse_program`` turns a ``.sprw`` source string into a :class:`Program`.
Named references are recorded but not expanded here (see :mod:`sprw.expand`).

The parser counts how often each grammar production fires (``productions``),
which the test suite uses to assert full grammar coverage over the corpus.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass

from .errors import ParseError
from .nodes import (
    AliasOp,
    AndGroup,
    Bind,
    BinOp,
    Const,
    Count,
    Debounce,
    DistinctMark,
    ElemPattern,
    Every,
    Fold,
    FoldFn,
    InlineGuard,
    Lit,
    MayDistinct,
    MustDistinct,
    NamedRef,
    NotOp,
    Options,
    OrGroup,
    PatternAst,
    Program,
    ReactionBinding,
    Selector,
    Var,
    VarRef,
    Window,
)
from .values import Duration, Symbol, TIME_UNITS

# --------------------------------------------------------------------------
# lexer

_TOKEN_RE = re.compile(
    r"""
      (?P<comment>\#[^\n]*)
    | (?P<ws>[ \t\r]+)
    | (?P<nl>\n)
    | (?P<float>\d+\.\d+)
    | (?P<int>\d+)
    | (?P<symbol>:[A-Za-z_][A-Za-z0-9_]*)
    | (?P<string>"(?:\\.|[^"\\\n])*")
    | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
    | (?P<op>\|>|~>|->|==|!=|<=|>=|[{}()\[\],:=<>+\-*/@!])
    """,
    re.VERBOSE,
)

_KEYWORDS = {
    "pattern", "as", "and", "or", "not", "when", "options",
    "true", "false", "fold", "bind", "fn", "end", "react_to", "with", "emit",
}


@dataclass(frozen=True, slots=True)
class Token:
    kind: str  # IDENT SYMBOL INT FLOAT STRING keyword-or-operator EOF
    text: str
    line: int
    column: int


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    line, col, pos = 1, 1, 0
    n = len(text)
    while pos < n:
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        lexeme = m.group()
        if kind == "nl":
            line += 1
            col = 1
        elif kind in ("ws", "comment"):
            col += len(lexeme)
        else:
            if kind == "ident":
                tok_kind = lexeme if lexeme in _KEYWORDS else "IDENT"
            elif kind == "op":
                tok_kind = lexeme
            else:
                tok_kind = kind.upper()
            tokens.append(Token(tok_kind, lexeme, line, col))
            col += len(lexeme)
        pos = m.end()
    tokens.append(Token("EOF", "", line, col))
    return tokens


def _unquote(raw: str) -> str:
    body = raw[1:-1]
    out = []
    i = 0
    while i < len(body):
        c = body[i]
        if c == "\\" and i + 1 < len(body):
            nxt = body[i + 1]
            out.append({"n": "\n", "t": "\t", '"': '"', "\\": "\\"}.get(nxt, nxt))
            i += 2
        else:
            out.append(c)
            i += 1
    return "".join(out)


# --------------------------------------------------------------------------
# parser

_OPTION_KEYS = ("seq", "interval", "last", "debounce")
_OPERATOR_KEYS = ("window", "debounce", "every", "count")


class Parser:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.pos = 0
        self.productions: Counter[str] = Counter()

    # -- token plumbing ----------------------------------------------------

    def peek(self, offset: int = 0) -> Token:
        i = min(self.pos + offset, len(self.tokens) - 1)
        return self.tokens[i]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != "EOF":
            self.pos += 1
        return tok

    def at(self, *kinds: str) -> bool:
        return self.peek().kind in kinds

    def expect(self, kind: str) -> Token:
        tok = self.peek()
        if tok.kind != kind:
            self.fail(f"expected {kind!r}, got {tok.text or 'end-of-input'!r}", {kind})
        return self.advance()

    def fail(self, message: str, expected=()) -> None:
        tok = self.peek()
        raise ParseError(message, tok.line, tok.column, expected)

    # -- program -----------------------------------------------------------

    def parse_program(self) -> Program:
        self.productions["program"] += 1
        patterns: list[PatternAst] = []
        bindings: list[ReactionBinding] = []
        seen: set[str] = set()
        while not self.at("EOF"):
            if self.at("pattern"):
                p = self.parse_pattern_definition()
                if p.name in seen:
                    raise ParseError(
                        f"duplicate pattern {p.name!r}",
                        self.peek().line, self.peek().column,
                        code="DuplicatePattern",
                    )
                seen.add(p.name)
                patterns.append(p)
            elif self.at("react_to"):
                bindings.append(self.parse_react_to())
            else:
                self.fail(
                    f"expected declaration, got {self.peek().text!r}",
                    {"pattern", "react_to"},
                )
        return Program(tuple(patterns), tuple(bindings))

    def parse_react_to(self) -> ReactionBinding:
        self.productions["react-to"] += 1
        self.expect("react_to")
        name = self.expect("IDENT").text
        self.expect(",")
        self.expect("with")
        self.expect(":")
        if self.at("emit"):
            self.advance()
            self.expect("(")
            label = self.expect("IDENT").text
            self.expect(")")
            return ReactionBinding(name, label, emit_form=True)
        label = self.expect("IDENT").text
        return ReactionBinding(name, label)

    # -- pattern definitions -------------------------------------------------

    def parse_pattern_definition(self) -> PatternAst:
        self.productions["pattern-definition"] += 1
        self.expect("pattern")
        name = self.expect("IDENT").text
        self.expect("as")
        body = self.parse_body()
        guard = None
        if self.at("when"):
            self.productions["guard"] += 1
            self.advance()
            guard = self.parse_expr()
        options = Options()
        if self.at(",") and self.peek(1).kind == "options":
            self.advance()
            self.expect("options")
            self.expect(":")
            options = self.parse_options()
        return PatternAst(name, body, guard, options)

    def parse_body(self) -> OrGroup:
        # `and` binds tighter than `or`; both chains are left-to-right.
        self.productions["pattern"] += 1
        alts: list[AndGroup] = []
        parts: list[ElemPattern] = [self.parse_elem_pattern()]
        while self.at("and", "or"):
            op = self.advance().kind
            nxt = self.parse_elem_pattern()
            if op == "and":
                parts.append(nxt)
            else:
                alts.append(AndGroup(tuple(parts)))
                parts = [nxt]
        alts.append(AndGroup(tuple(parts)))
        return OrGroup(tuple(alts))

    def parse_elem_pattern(self) -> ElemPattern:
        self.productions["elem-pattern"] += 1
        negated = False
        if self.at("not"):
            self.advance()
            negated = True
        base = self.parse_selector_or_ref()
        operators = []
        seen_kinds: set[type] = set()
        while self.at("["):
            for op in self.parse_operator_group():
                if type(op) in seen_kinds:
                    self.fail(f"duplicate operator {type(op).__name__.lower()!r}")
                seen_kinds.add(type(op))
                operators.append(op)
        transformers = []
        saw_fold = False
        while self.at("|>"):
            self.advance()
            t = self.parse_transformer()
            if isinstance(t, Fold):
                saw_fold = True
            elif not saw_fold:
                self.fail("bind must be preceded by a fold")
            transformers.append(t)
        return ElemPattern(negated, base, tuple(operators), tuple(transformers))

    def parse_selector_or_ref(self):
        if self.at("{"):
            return self.parse_selector()
        if self.at("IDENT"):
            self.productions["selector-ref"] += 1
            name = self.advance().text
            refinements = []
            while self.at("{"):
                refinements.extend(self.parse_refinement_group())
            return NamedRef(name, tuple(refinements))
        self.fail(f"expected selector, got {self.peek().text or 'end-of-input'!r}",
                  {"{", "IDENT"})

    def parse_selector(self) -> Selector:
        self.productions["selector"] += 1
        self.expect("{")
        tag_tok = self.expect("SYMBOL")
        terms = []
        while self.at(","):
            self.advance()
            terms.append(self.parse_attribute())
        self.expect("}")
        return Selector(Symbol(tag_tok.text[1:]), tuple(terms))

    def parse_attribute(self):
        self.productions["attribute"] += 1
        tok = self.peek()
        if tok.kind in ("@", "!"):
            self.productions["logic-var-marked"] += 1
            marker = self.advance().kind
            name = self.expect("IDENT").text
            return MustDistinct(name) if marker == "!" else MayDistinct(name)
        if tok.kind == "IDENT":
            self.productions["logic-var"] += 1
            return Var(self.advance().text)
        return Const(self.parse_value())

    def parse_value(self):
        tok = self.peek()
        if tok.kind == "SYMBOL":
            self.productions["value-symbol"] += 1
            self.advance()
            return Symbol(tok.text[1:])
        if tok.kind == "INT":
            self.advance()
            return int(tok.text)
        if tok.kind == "FLOAT":
            self.advance()
            return float(tok.text)
        if tok.kind == "STRING":
            self.advance()
            return _unquote(tok.text)
        if tok.kind in ("true", "false"):
            self.advance()
            return tok.kind == "true"
        if tok.kind == "-" and self.peek(1).kind in ("INT", "FLOAT"):
            self.advance()
            num = self.advance()
            return -int(num.text) if num.kind == "INT" else -float(num.text)
        self.fail(f"expected value, got {tok.text or 'end-of-input'!r}",
                  {"SYMBOL", "INT", "FLOAT", "STRING", "true", "false"})

    def parse_refinement_group(self):
        self.expect("{")
        out = [self.parse_refinement()]
        while self.at(","):
            self.advance()
            out.append(self.parse_refinement())
        self.expect("}")
        return out

    def parse_refinement(self):
        tok = self.peek()
        if tok.kind in ("@", "!"):
            self.productions["refinement-distinct"] += 1
            marker = self.advance().kind
            name = self.expect("IDENT").text
            return DistinctMark(marker, name)
        name = self.expect("IDENT").text
        if self.at("~>"):
            self.productions["alias-op"] += 1
            self.advance()
            dst = self.expect("IDENT").text
            return AliasOp(name, dst)
        if self.at("="):
            self.productions["inline-guard"] += 1
            self.advance()
            return InlineGuard(name, self.parse_expr())
        self.fail(f"expected refinement operator after {name!r}", {"=", "~>"})

    # -- operators, transformers, options ------------------------------------

    def parse_operator_group(self):
        self.expect("[")
        ops = [self.parse_operator()]
        while self.at(","):
            self.advance()
            ops.append(self.parse_operator())
        self.expect("]")
        return ops

    def parse_operator(self):
        tok = self.peek()
        key = tok.text
        if tok.kind != "IDENT" or key not in _OPERATOR_KEYS:
            self.fail(
                f"expected operator name, got {tok.text!r} "
                f"(valid operators: {', '.join(_OPERATOR_KEYS)})",
                set(_OPERATOR_KEYS),
            )
        self.advance()
        self.expect(":")
        self.productions[f"operator-{key}"] += 1
        if key in ("window", "debounce"):
            dur = self.parse_time()
            return Window(dur) if key == "window" else Debounce(dur)
        n_tok = self.expect("INT")
        n = int(n_tok.text)
        if n <= 0:
            raise ParseError(f"{key} requires a positive count", n_tok.line, n_tok.column)
        return Every(n) if key == "every" else Count(n)

    def parse_time(self) -> Duration:
        self.productions["time"] += 1
        self.expect("{")
        amount_tok = self.expect("INT")
        amount = int(amount_tok.text)
        if amount <= 0:
            raise ParseError("duration must be positive", amount_tok.line, amount_tok.column)
        self.expect(",")
        unit_tok = self.expect("SYMBOL")
        unit = unit_tok.text[1:]
        if unit not in TIME_UNITS:
            raise ParseError(
                f"unknown time unit :{unit} (expected one of {', '.join(':' + u for u in TIME_UNITS)})",
                unit_tok.line, unit_tok.column,
            )
        self.expect("}")
        return Duration(amount, unit)

    def parse_transformer(self):
        tok = self.peek()
        if tok.kind == "fold":
            self.productions["transformer-fold"] += 1
            self.advance()
            self.expect("(")
            init = self.parse_expr()
            self.expect(",")
            fn = self.parse_fold_fn()
            self.expect(")")
            return Fold(init, fn)
        if tok.kind == "bind":
            self.productions["transformer-bind"] += 1
            self.advance()
            self.expect("(")
            name = self.expect("IDENT").text
            self.expect(")")
            return Bind(name)
        self.fail(f"expected transformer, got {tok.text!r}", {"fold", "bind"})

    def parse_fold_fn(self) -> FoldFn:
        self.expect("fn")
        self.expect("(")
        self.expect("{")
        params: list[str | None] = [self.parse_fold_param()]
        while self.at(","):
            self.advance()
            params.append(self.parse_fold_param())
        self.expect("}")
        self.expect(",")
        acc = self.expect("IDENT").text
        self.expect(")")
        self.expect("->")
        body = self.parse_expr()
        self.expect("end")
        return FoldFn(tuple(params), acc, body)

    def parse_fold_param(self) -> str | None:
        name = self.expect("IDENT").text
        return None if name == "_" else name

    def parse_options(self) -> Options:
        self.expect("[")
        seq = False
        last = False
        interval = None
        debounce = None
        while True:
            tok = self.peek()
            key = tok.text
            if tok.kind != "IDENT" or key not in _OPTION_KEYS:
                self.fail(
                    f"unknown option {tok.text!r} "
                    f"(valid options: {', '.join(_OPTION_KEYS)})",
                    set(_OPTION_KEYS),
                )
            self.advance()
            self.expect(":")
            self.productions[f"option-{key}"] += 1
            if key == "seq":
                seq = self.parse_bool()
            elif key == "last":
                last = self.parse_bool()
            elif key == "interval":
                interval = self.parse_time()
            else:
                debounce = self.parse_time()
            if self.at(","):
                self.advance()
                continue
            break
        self.expect("]")
        return Options(seq=seq, interval=interval, last=last, debounce=debounce)

    def parse_bool(self) -> bool:
        tok = self.peek()
        if tok.kind in ("true", "false"):
            self.advance()
            return tok.kind == "true"
        self.fail(f"expected boolean, got {tok.text!r}", {"true", "false"})

    # -- expressions ---------------------------------------------------------
    # or < and < not < comparison < additive < multiplicative < primary

    def parse_expr(self):
        self.productions["expression"] += 1
        return self.parse_or_expr()

    def parse_or_expr(self):
        left = self.parse_and_expr()
        while self.at("or"):
            self.advance()
            left = BinOp("or", left, self.parse_and_expr())
        return left

    def parse_and_expr(self):
        left = self.parse_not_expr()
        while self.at("and"):
            self.advance()
            left = BinOp("and", left, self.parse_not_expr())
        return left

    def parse_not_expr(self):
        if self.at("not"):
            self.advance()
            return NotOp(self.parse_not_expr())
        return self.parse_comparison()

    def parse_comparison(self):
        left = self.parse_additive()
        while self.at("==", "!=", "<", "<=", ">", ">="):
            op = self.advance().kind
            left = BinOp(op, left, self.parse_additive())
        return left

    def parse_additive(self):
        left = self.parse_multiplicative()
        while self.at("+", "-"):
            op = self.advance().kind
            left = BinOp(op, left, self.parse_multiplicative())
        return left

    def parse_multiplicative(self):
        left = self.parse_primary()
        while self.at("*", "/"):
            op = self.advance().kind
            left = BinOp(op, left, self.parse_primary())
        return left

    def parse_primary(self):
        tok = self.peek()
        if tok.kind == "(":
            self.advance()
            inner = self.parse_or_expr()
            self.expect(")")
            return inner
        if tok.kind == "IDENT":
            self.advance()
            return VarRef(tok.text)
        return Lit(self.parse_value())


def parse_program(text: str) -> Program:
    """Parse a full ``.sprw`` source into a :class:`Program`."""
    return Parser(text).parse_program()


def parse_program_counted(text: str) -> tuple[Program, Counter]:
    """Like :func:`parse_program` but also returns production firing counts."""
    p = Parser(text)
    return p.parse_program(), p.productions
