import pytest
from hypothesis import given, settings, strategies as st

from mcterm.dsl import ParseError, format_system, parse_system
from mcterm.model import Arc, VarTerm
from mcterm.oracle import random_system

from conftest import mc_by_name


def test_parse_ex1(ex1):
    assert ex1.n == 3
    assert ex1.var_names == ("x", "y", "z")
    assert list(ex1.points) == ["f"]
    assert [m.name for m in ex1.mcs] == ["G1", "G2"]
    g1 = mc_by_name(ex1, "G1")
    # x < y stores as y > x; z = y' as a pair of non-strict arcs
    assert Arc(VarTerm(2), VarTerm(1), True) in g1.arcs
    assert Arc(VarTerm(3), VarTerm(2, True), False) in g1.arcs
    assert Arc(VarTerm(2, True), VarTerm(3), False) in g1.arcs
    assert Arc(VarTerm(1, True), VarTerm(3, True), True) in g1.arcs
    assert len(g1.arcs) == 4


def test_parse_minimal_terminating():
    cs = parse_system("vars x\npoint f\nmc g f -> f { x > x' }\n")
    assert cs.n == 1 and len(cs.mcs) == 1


def test_undeclared_point_error_has_span():
    with pytest.raises(ParseError) as exc:
        parse_system("vars x\npoint f\nmc g f -> h {}\n")
    assert "undeclared point 'h'" in str(exc.value)
    assert exc.value.span.line == 3


def test_undeclared_variable_error():
    with pytest.raises(ParseError, match="undeclared variable 'w'"):
        parse_system("vars x\npoint f\nmc g f -> f { w > x' }\n")


def test_primed_term_in_invariant_rejected():
    with pytest.raises(ParseError, match="not allowed in an invariant"):
        parse_system("vars x y\npoint f inv { x > y' }\n")


def test_comments_and_blank_lines():
    cs = parse_system("# header\nvars x  # trailing\n\npoint f\nmc g f -> f {}\n")
    assert cs.var_names == ("x",)


def test_empty_constraint_block_allowed():
    cs = parse_system("vars x\npoint f\nmc g f -> f {}\n")
    assert mc_by_name(cs, "g").arcs == frozenset()


def test_invariant_parsing():
    cs = parse_system("vars x y\npoint f inv { x < y }\npoint h\nmc g f -> h {}\n")
    assert Arc(VarTerm(2), VarTerm(1), True) in cs.points["f"].arcs
    assert cs.points["h"].trivial


def test_duplicate_point_rejected():
    with pytest.raises(ParseError, match="duplicate point"):
        parse_system("vars x\npoint f\npoint f\n")


def test_vacuous_self_constraint_dropped():
    cs = parse_system("vars x\npoint f\nmc g f -> f { x >= x }\n")
    assert mc_by_name(cs, "g").arcs == frozenset()


def test_strict_self_constraint_kept_for_closure_to_reject():
    cs = parse_system("vars x\npoint f\nmc g f -> f { x > x }\n")
    assert Arc(VarTerm(1), VarTerm(1), True) in mc_by_name(cs, "g").arcs


def test_missing_vars():
    with pytest.raises(ParseError, match="vars"):
        parse_system("point f\n")


def test_unterminated_block():
    with pytest.raises(ParseError, match="unterminated"):
        parse_system("vars x\npoint f\nmc g f -> f { x > x'\n")


def test_roundtrip_ex1(ex1):
    again = parse_system(format_system(ex1))
    assert again == ex1


def test_roundtrip_generated_point_names():
    text = "vars x y\npoint f@x<y inv { y > x }\nmc g@a@b f@x<y -> f@x<y { x >= y' }\n"
    cs = parse_system(text)
    assert "f@x<y" in cs.points
    assert parse_system(format_system(cs)) == cs


def test_roundtrip_stabilized_system(ex1):
    # stabilization generates point names carrying constraint text
    from mcterm.elaborate import stabilize

    st_sys = stabilize(ex1)
    again = parse_system(format_system(st_sys))
    assert set(again.points) == set(st_sys.points)
    assert {p: inv.arcs for p, inv in again.points.items()} == {
        p: inv.arcs for p, inv in st_sys.points.items()
    }
    assert [(m.src_point, m.dst_point, m.arcs) for m in again.mcs] == [
        (m.src_point, m.dst_point, m.arcs) for m in st_sys.mcs
    ]


@given(st.integers(0, 10_000))
@settings(max_examples=40, deadline=None)
def test_roundtrip_random_systems(seed):
    cs = random_system(
        n=1 + seed % 3,
        points=1 + seed % 3,
        mcs=seed % 4,
        density=(seed % 5) / 5,
        seed=seed,
        inv_density=0.1,
    )
    assert parse_system(format_system(cs)) == cs
