from __future__ import annotations

import pytest
from hypothesis import given, settings

from sprw.errors import ExpandError
from sprw.expand import expand
from sprw.nodes import Const, MayDistinct, Selector, Var, body_leaves
from sprw.parser import parse_program
from sprw.values import Symbol

from conftest import corpus_text
from test_printer_roundtrip import programs


def expand_text(text):
    return expand(parse_program(text))


def leaves_of(program, name):
    return body_leaves(program.pattern_named(name).body)


def test_inline_guard_becomes_constant():
    program = expand_text(corpus_text("fig8"))
    (leaf,) = leaves_of(program, "kitchen_window_b")
    assert leaf.base == Selector(
        Symbol("window"),
        (Var("id"), Const(Symbol("open")), Const(Symbol("kitchen"))),
    )


def test_referenced_guard_is_conjoined():
    program = expand_text(corpus_text("fig8"))
    refd = program.pattern_named("kitchen_window_a")
    assert refd.guard is not None
    (leaf,) = leaves_of(program, "kitchen_window_a")
    assert isinstance(leaf.base, Selector)


def test_unhygienic_sharing_fig9():
    program = expand_text(corpus_text("fig9"))
    leaves = leaves_of(program, "occupied_home")
    names = [
        {t.name for t in leaf.base.terms if isinstance(t, Var)} for leaf in leaves
    ]
    assert all("id" in n for n in names)


def test_alias_removes_sharing_fig10c():
    program = expand_text(corpus_text("fig10c"))
    leaves = leaves_of(program, "occupied_home")
    assert {t.name for t in leaves[0].base.terms if isinstance(t, Var)} == {"id"}
    assert {t.name for t in leaves[1].base.terms if isinstance(t, Var)} == {"cid"}
    assert {t.name for t in leaves[2].base.terms if isinstance(t, Var)} == {"mid"}


def test_distinct_mark_refinement_fig15():
    program = expand_text(corpus_text("fig15"))
    (leaf,) = leaves_of(program, "electricity_alert")
    assert MayDistinct("value") in leaf.base.terms
    assert leaf.operators  # window carried over from the reference site


def test_binding_must_reference_declared_pattern():
    with pytest.raises(ExpandError) as err:
        expand_text("pattern p as {:a, x}\nreact_to q, with: emit(r)")
    assert err.value.code == "UnknownPatternRef"


def test_unknown_reference():
    with pytest.raises(ExpandError) as err:
        expand_text("pattern p as missing_one and {:a, x}")
    assert err.value.code == "UnknownPatternRef"


def test_forward_reference_is_unknown():
    with pytest.raises(ExpandError) as err:
        expand_text("pattern p as q\npattern q as {:a, x}")
    assert err.value.code == "UnknownPatternRef"


def test_alias_collision():
    with pytest.raises(ExpandError) as err:
        expand_text(
            "pattern base as {:a, x, y}\npattern p as base{x ~> y}"
        )
    assert err.value.code == "AliasCollision"


def test_inline_guard_on_constant():
    with pytest.raises(ExpandError) as err:
        expand_text(
            "pattern base as {:a, x}\npattern p as base{x = 1, x = 2}"
        )
    assert err.value.code == "InlineGuardOnConst"


def test_refinement_unknown_var():
    with pytest.raises(ExpandError) as err:
        expand_text("pattern base as {:a, x}\npattern p as base{zz = 1}")
    assert err.value.code == "RefinementUnknownVar"


def test_referenced_options_rejected():
    with pytest.raises(ExpandError) as err:
        expand_text(
            "pattern base as {:a, x}, options: [last: true]\npattern p as base and {:b, y}"
        )
    assert err.value.code == "ReferencedPatternHasOptions"


def test_composite_reference_splices():
    program = expand_text(
        "pattern pair as {:a, x} and {:b, x}\n"
        "pattern triple as pair and {:c, x}\n"
    )
    leaves = leaves_of(program, "triple")
    assert len(leaves) == 3
    assert [leaf.base.type_tag.name for leaf in leaves] == ["a", "b", "c"]


def test_negating_composite_reference_fails():
    with pytest.raises(ExpandError) as err:
        expand_text(
            "pattern pair as {:a, x} and {:b, x}\n"
            "pattern p as not pair and {:c, x}\n"
        )
    assert err.value.code == "NegatedCompositeRef"


def test_operator_merge_through_reference():
    program = expand_text(
        "pattern fail as {:f, id, @code}\n"
        "pattern burst as fail[count: 3, window: {60, :mins}]\n"
    )
    (leaf,) = leaves_of(program, "burst")
    assert len(leaf.operators) == 2


def test_chained_references_expand_transitively():
    program = expand_text(corpus_text("fig18c"))
    leaves = leaves_of(program, "occupied_home")
    assert len(leaves) == 3
    assert all(isinstance(leaf.base, Selector) for leaf in leaves)
    front, contact, hall = leaves
    assert front.base.terms[2] == Const(Symbol("front_door"))
    assert hall.base.terms[0] == Var("mid")
    assert contact.base.type_tag == Symbol("contact")


@settings(max_examples=150, deadline=None)
@given(programs())
def test_expand_is_idempotent(program):
    once = expand(program)
    assert expand(once) == once


@settings(max_examples=150, deadline=None)
@given(programs())
def test_expand_preserves_leaf_count_without_refs(program):
    # generated programs contain no named references, so leaf counts are stable
    expanded = expand(program)
    for before, after in zip(program.patterns, expanded.patterns):
        assert len(body_leaves(before.body)) == len(body_leaves(after.body))


def test_leaf_count_sums_over_references():
    program = expand_text(
        "pattern pair as {:a, x} and {:b, x}\n"
        "pattern big as pair and pair and {:c, y}\n"
    )
    assert len(leaves_of(program, "big")) == 5
