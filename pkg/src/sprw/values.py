"""Runtime values and durations.

Attribute values are plain Python ``int``/``float``/``str``/``bool`` plus the
interned-identifier :class:`Symbol`.  Structural equality is deliberately
stricter than Python ``==``: ints and floats never compare equal, and bools
are not ints.  Guard evaluation has its own promoting comparison; everything
that feeds unification or distinctness must go through :func:`values_equal`.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True, slots=True)
class Symbol:
    """Interned identifier written ``:name`` in the surface language."""

    name: str

    def __repr__(self) -> str:
        return f":{self.name}"


Value = Symbol | int | float | str | bool


def values_equal(a: Value, b: Value) -> bool:
    """Structural equality: same kind and same content, no numeric coercion."""
    if type(a) is not type(b):
        return False
    return a == b


def value_in(v: Value, seq) -> bool:
    return any(values_equal(v, x) for x in seq)


def is_number(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


UNIT_MS = {
    "secs": 1_000,
    "mins": 60_000,
    "hours": 3_600_000,
    "days": 86_400_000,
    "weeks": 604_800_000,
}

TIME_UNITS = tuple(UNIT_MS)


@dataclass(frozen=True, slots=True)
class Duration:
    """A surface duration like ``{2, :mins}``.

    The written amount/unit pair is preserved verbatim for printing;
    canonicalisation to milliseconds happens only when compiling.
    """

    amount: int
    unit: str

    @property
    def ms(self) -> int:
        return self.amount * UNIT_MS[self.unit]
