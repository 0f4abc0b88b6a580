"""Pure matching kernel: unification, guard evaluation, transformers.

Everything here is a pure function over immutable inputs; both the
incremental engine and the brute-force oracle are built on this module, so
any divergence between the two localises to their scheduling, not to the
matching semantics.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import EvalError
from .nodes import (
    Bind,
    BinOp,
    Const,
    Expr,
    Fold,
    Lit,
    MayDistinct,
    MustDistinct,
    NotOp,
    Selector,
    Var,
    VarRef,
)
from .values import Symbol, Value, is_number, value_in, values_equal


@dataclass(frozen=True, slots=True)
class Message:
    """One ingested message: the unit of matching."""

    id: int
    seq: int
    ts: int
    type_tag: Symbol
    attrs: tuple[Value, ...]

    def tuple(self) -> tuple[Value, ...]:
        return (self.type_tag, *self.attrs)


@dataclass(frozen=True, slots=True)
class MatchResult:
    """One successful pattern activation."""

    pattern: str
    messages: tuple[Message, ...]
    bindings: dict[str, Value]
    intermediates: dict[str, Value]
    at: int
    cycle: int = 0  # engine-internal match-cycle index; not part of the output format


@dataclass(frozen=True, slots=True)
class Diagnostic:
    """Non-fatal evaluation failure reported on the diagnostics channel."""

    kind: str
    pattern: str
    at: int
    detail: str


# --------------------------------------------------------------------------
# unification


def merge_bindings(base: dict[str, Value], extra: dict[str, Value]) -> dict[str, Value] | None:
    """Consistent union of two binding maps, or None on a conflict."""
    out = dict(base)
    for name, value in extra.items():
        if name in out:
            if not values_equal(out[name], value):
                return None
        else:
            out[name] = value
    return out


def unify_selector(
    sel: Selector,
    msg: Message,
    env: dict[str, Value] | None = None,
    distinct: dict[str, list[Value]] | None = None,
) -> tuple[dict[str, Value], dict[str, list[Value]]] | None:
    """Unify one message against one selector under existing bindings.

    Bare variables bind or must agree with ``env``.  ``@name`` matches any
    value without touching the environment.  ``!name`` adds the value to the
    name's distinctness set and fails if it is already present.  Returns the
    extended (env, distinct) pair, or None when the message does not match.
    """
    env = env if env is not None else {}
    distinct = distinct if distinct is not None else {}
    if msg.type_tag != sel.type_tag or len(msg.attrs) != len(sel.terms):
        return None
    new_env: dict[str, Value] | None = None
    new_distinct: dict[str, list[Value]] | None = None
    for term, value in zip(sel.terms, msg.attrs):
        if isinstance(term, Const):
            if not values_equal(term.value, value):
                return None
        elif isinstance(term, Var):
            current = (new_env or env).get(term.name, _MISSING)
            if current is _MISSING:
                if new_env is None:
                    new_env = dict(env)
                new_env[term.name] = value
            elif not values_equal(current, value):
                return None
        elif isinstance(term, MayDistinct):
            pass
        else:  # MustDistinct
            seen = (new_distinct or distinct).get(term.name, ())
            if value_in(value, seen):
                return None
            if new_distinct is None:
                new_distinct = {k: list(v) for k, v in distinct.items()}
            new_distinct.setdefault(term.name, []).append(value)
    return (new_env if new_env is not None else env,
            new_distinct if new_distinct is not None else distinct)


_MISSING = object()


def extend_env(bind_terms, msg: Message, env, distinct):
    """Join-step unification against a message already admitted by its alpha
    node (type, arity and constant tests hold), walking only the variable and
    must-distinct terms.  Semantics identical to :func:`unify_selector`."""
    attrs = msg.attrs
    new_env = None
    new_distinct = None
    for pos, name, kind in bind_terms:
        value = attrs[pos]
        if kind == 0:
            current = (new_env or env).get(name, _MISSING)
            if current is _MISSING:
                if new_env is None:
                    new_env = dict(env)
                new_env[name] = value
            elif not values_equal(current, value):
                return None
        else:
            seen = (new_distinct or distinct).get(name, ())
            if value_in(value, seen):
                return None
            if new_distinct is None:
                new_distinct = {k: list(v) for k, v in distinct.items()}
            new_distinct.setdefault(name, []).append(value)
    return (new_env if new_env is not None else env,
            new_distinct if new_distinct is not None else distinct)


# --------------------------------------------------------------------------
# guard expressions


def eval_expr(expr: Expr, env: dict[str, Value]) -> Value:
    """Evaluate a guard/transformer expression.

    Deterministic and side-effect free.  ``and``/``or`` short-circuit and
    require booleans; comparison operators promote int to float; symbols
    compare only with ``==``/``!=``; division always yields a float.
    Raises :class:`EvalError` (UnboundVariable / TypeMismatch /
    DivisionByZero) instead of producing a value.
    """
    if isinstance(expr, Lit):
        return expr.value
    if isinstance(expr, VarRef):
        if expr.name not in env:
            raise EvalError("UnboundVariable", expr.name)
        return env[expr.name]
    if isinstance(expr, NotOp):
        v = eval_expr(expr.operand, env)
        if not isinstance(v, bool):
            raise EvalError("TypeMismatch", f"not applied to {v!r}")
        return not v
    op = expr.op
    if op in ("and", "or"):
        left = eval_expr(expr.left, env)
        if not isinstance(left, bool):
            raise EvalError("TypeMismatch", f"{op} applied to {left!r}")
        if op == "and" and not left:
            return False
        if op == "or" and left:
            return True
        right = eval_expr(expr.right, env)
        if not isinstance(right, bool):
            raise EvalError("TypeMismatch", f"{op} applied to {right!r}")
        return right
    left = eval_expr(expr.left, env)
    right = eval_expr(expr.right, env)
    if op in ("==", "!="):
        if is_number(left) and is_number(right):
            equal = float(left) == float(right)
        else:
            equal = values_equal(left, right)
        return equal if op == "==" else not equal
    if op in ("<", "<=", ">", ">="):
        if not (is_number(left) and is_number(right)):
            raise EvalError("TypeMismatch", f"{left!r} {op} {right!r}")
        if op == "<":
            return left < right
        if op == "<=":
            return left <= right
        if op == ">":
            return left > right
        return left >= right
    if not (is_number(left) and is_number(right)):
        raise EvalError("TypeMismatch", f"{left!r} {op} {right!r}")
    if op == "+":
        return left + right
    if op == "-":
        return left - right
    if op == "*":
        return left * right
    if op == "/":
        if right == 0:
            raise EvalError("DivisionByZero", f"{left!r} / {right!r}")
        return left / right
    raise EvalError("TypeMismatch", f"unknown operator {op!r}")


# --------------------------------------------------------------------------
# transformers


def apply_transformers(
    msgs: list[Message],
    transformers,
    env: dict[str, Value],
) -> tuple[Value | None, dict[str, Value]]:
    """Run a fold/bind chain over a group of messages.

    ``msgs`` must be ordered by (ts, seq) ascending.  Fold left-folds its
    function over the full message tuples starting from the evaluated init;
    bind snapshots the current accumulated value under its name.
    """
    current: Value | None = None
    intermediates: dict[str, Value] = {}
    for t in transformers:
        if isinstance(t, Fold):
            current = eval_expr(t.init, env)
            params = t.fn.params
            for m in msgs:
                tup = m.tuple()
                if len(tup) != len(params):
                    raise EvalError(
                        "ArityMismatch",
                        f"fold pattern has {len(params)} slots, message has {len(tup)}",
                    )
                fenv = dict(env)
                fenv.update(intermediates)
                for name, value in zip(params, tup):
                    if name is not None:
                        fenv[name] = value
                fenv[t.fn.acc_name] = current
                current = eval_expr(t.fn.body, fenv)
        else:  # Bind
            assert isinstance(t, Bind)
            if current is None:
                raise EvalError("BindWithoutFold", t.name)
            intermediates[t.name] = current
    return current, intermediates
