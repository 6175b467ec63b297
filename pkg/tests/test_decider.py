"""Closure-set construction, the Local Termination Test and the decider."""

import pytest

from mcterm.closure import close, compose
from mcterm.decider import (
    ClosureOptions,
    build_circular_variant,
    closure_set,
    decide_closure,
    find_ltt_failure,
    is_idempotent,
    local_termination_test,
    sagiv_test,
)
from mcterm.dsl import parse_system
from mcterm.model import (
    Arc,
    ConfigurationError,
    ConstraintSystem,
    Invariant,
    MonotonicityConstraint,
    ResourceBudgetError,
    VarTerm,
)
from mcterm.oracle import random_system

from conftest import mc_by_name


def cyclic_mc(*constraints, name="g"):
    arcs = frozenset(Arc(VarTerm(i, ip), VarTerm(j, jp), s) for i, ip, j, jp, s in constraints)
    return MonotonicityConstraint(name, "f", "f", arcs)


def closed(*constraints, name="g"):
    out = close(cyclic_mc(*constraints, name=name))
    assert out is not None
    return out


# spec regression: idempotent, no in-situ descent, yet the LTT passes
# (found by seeded search; the descent runs through the target-target arc:
#  x2 > x3' ~> x3 >= x1 ~> x1' > x2' ~> back to x2)
FIGLTT_SUBSTITUTE = closed(
    (1, True, 2, True, True),  # x1' > x2'
    (2, False, 3, True, True),  # x2 > x3'
    (3, False, 1, False, False),  # x3 >= x1
)


def _bruteforce_saturation(cs):
    """Unoptimized breadth-first saturation; the independent oracle for the
    closure-set fixed point."""
    members = {}
    frontier = []
    for g in cs.mcs:
        c = close(g, cs.invariant_of(g.src_point), cs.invariant_of(g.dst_point))
        if c is not None:
            key = (c.src_point, c.dst_point, c.arcs)
            if key not in members:
                members[key] = c
                frontier.append(c)
    while frontier:
        new = []
        for g in list(members.values()):
            for h in frontier:
                for a, b in ((g, h), (h, g)):
                    if a.dst_point == b.src_point:
                        c = compose(a, b)
                        if c is not None:
                            key = (c.src_point, c.dst_point, c.arcs)
                            if key not in members:
                                members[key] = c
                                new.append(c)
        frontier = new
    return set(members)


class TestClosureSet:
    def test_ex1_matches_bruteforce_oracle(self, ex1):
        cset = closure_set(ex1)
        assert set(cset.members) == _bruteforce_saturation(ex1)

    def test_ex1_contains_expected_members(self, ex1):
        g1, g2 = (close(mc_by_name(ex1, n)) for n in ("G1", "G2"))
        keys = set(closure_set(ex1).members)
        for expected in (g1, g2, compose(g1, g1), compose(g1, g2), compose(g2, g2)):
            assert ("f", "f", expected.arcs) in keys

    def test_ex1_no_derivation_through_g2_g1(self, ex1):
        for member in closure_set(ex1):
            prov = member.provenance
            assert ("G2", "G1") not in list(zip(prov, prov[1:]))

    def test_singleton_idempotent(self):
        cs = parse_system("vars x1\npoint f\nmc g f -> f { x1 > x1' }\n")
        cset = closure_set(cs)
        assert len(cset) == 1
        (member,) = list(cset)
        assert member.mc.arcs == frozenset({Arc(VarTerm(1), VarTerm(1, True), True)})

    def test_self_contradicting_composition(self):
        # H = x1 > x2 and x2' > x1': H;H forces x_mid > x_mid
        cs = parse_system("vars x1 x2\npoint f\nmc H f -> f { x1 > x2, x2' > x1' }\n")
        cset = closure_set(cs)
        assert len(cset) == 1

    def test_members_equal_collapse_of_provenance(self, ex1):
        from mcterm.closure import collapse

        by_name = {m.name: m for m in ex1.mcs}
        for member in closure_set(ex1):
            path = [by_name[name] for name in member.provenance]
            again = collapse(path, ex1.points)
            assert again is not None and again.arcs == member.mc.arcs

    def test_budget_error(self, ex1):
        with pytest.raises(ResourceBudgetError):
            closure_set(ex1, ClosureOptions(budget=1))


class TestLtt:
    def test_in_situ_descent_passes(self):
        result = local_termination_test(closed((1, False, 1, True, True)))
        assert result.passed
        assert any(e.strict for e in result.cycle)

    def test_nonstrict_only_fails(self):
        assert not local_termination_test(closed((1, False, 1, True, False)))

    def test_balanced_cycle(self):
        # x1 > x2 with x2' > x1': balanced 4-arc cycle
        # x1 > x2 ~fwd~> x2' ... x2' > x1' ~back~> x1
        g = closed((1, False, 2, False, True), (2, True, 1, True, True))
        result = local_termination_test(g, n=2)
        assert result.passed
        weight = sum(e.weight for e in result.cycle)
        assert weight == 0  # balanced, not forward
        assert any(e.strict for e in result.cycle)

    def test_empty_constraint_fails(self):
        g = close(MonotonicityConstraint("g", "f", "f", frozenset()))
        assert not local_termination_test(g, n=2)

    def test_witness_cycle_is_closed_walk(self):
        result = local_termination_test(closed((1, False, 1, True, True)))
        cycle = result.cycle
        for e, nxt in zip(cycle, cycle[1:] + cycle[:1]):
            assert e.dst == nxt.src

    def test_witness_cycles_are_forward_or_balanced_descending(self):
        # weight <= 0 and at least one strict arc, on a batch of random MCs
        import random as _random

        rng = _random.Random(7)
        n = 3
        terms = [VarTerm(i, p) for p in (False, True) for i in range(1, n + 1)]
        pairs = [(a, b) for a in terms for b in terms if a != b]
        seen = 0
        while seen < 150:
            arcs = frozenset(
                Arc(a, b, rng.random() < 0.5) for a, b in pairs if rng.random() < 0.25
            )
            g = close(MonotonicityConstraint("g", "f", "f", arcs))
            if g is None:
                continue
            result = local_termination_test(g, n)
            if not result.passed:
                continue
            seen += 1
            assert sum(e.weight for e in result.cycle) <= 0
            assert any(e.strict for e in result.cycle)
            for e, nxt in zip(result.cycle, result.cycle[1:] + result.cycle[:1]):
                assert e.dst == nxt.src

    def test_witness_rendering(self):
        result = local_termination_test(closed((1, False, 1, True, True)))
        rendered = [e.text(1, ("v",)) for e in result.cycle]
        assert "v > v'" in rendered
        assert any("shortcut" in line for line in rendered)

    def test_figltt_substitute_regression(self):
        g = FIGLTT_SUBSTITUTE
        assert is_idempotent(g)
        in_situ = any(
            a.strict and not a.src.primed and a.dst.primed and a.src.index == a.dst.index
            for a in g.arcs
        )
        assert not in_situ
        assert local_termination_test(g, n=3).passed

    def test_requires_closed_input(self):
        with pytest.raises(ValueError):
            local_termination_test(cyclic_mc((1, False, 1, True, True)))

    def test_requires_cyclic(self):
        g = MonotonicityConstraint("g", "f", "h", frozenset())
        with pytest.raises(ValueError):
            build_circular_variant(g)


class TestSagiv:
    def test_in_situ_zigzag(self):
        assert sagiv_test(closed((1, False, 1, True, True)))

    def test_nonstrict_fails(self):
        assert not sagiv_test(closed((1, False, 1, True, False)))

    def test_incomplete_on_balanced_example(self):
        # no forward arcs exist in the closure, so the zig-zag test is blind
        g = closed((1, False, 2, False, True), (2, True, 1, True, True))
        assert not any(not a.src.primed and a.dst.primed for a in g.arcs)
        assert not sagiv_test(g, n=2)
        assert local_termination_test(g, n=2).passed

    def test_never_stronger_than_ltt(self):
        for seed in range(300):
            cs = random_system(3, 1, 1, 0.25, seed)
            c = close(cs.mcs[0])
            if c is None or not c.cyclic:
                continue
            if sagiv_test(c, 3):
                assert local_termination_test(c, 3).passed


class TestDecideClosure:
    def test_ex1_terminating(self, ex1):
        assert decide_closure(ex1).terminating

    def test_scg_approximation_nonterminating(self, ex1_scg):
        verdict = decide_closure(ex1_scg)
        assert not verdict.terminating
        assert verdict.witness is not None
        assert set(verdict.witness.cycle) <= {"G1scg", "G2scg"}

    def test_nonstrict_self_loop_nonterminating(self):
        cs = parse_system("vars x1\npoint f\nmc g f -> f { x1 >= x1' }\n")
        verdict = decide_closure(cs)
        assert not verdict.terminating
        assert verdict.witness.mc.arcs == frozenset({Arc(VarTerm(1), VarTerm(1, True), False)})
        assert verdict.witness.cycle == ("g",)

    def test_forbidden_flag_combination(self, ex1):
        with pytest.raises(ConfigurationError):
            decide_closure(ex1, ClosureOptions(subsumption=True, idempotent_only=True))

    def test_unsatisfiable_mcs_are_ignored(self):
        cs = parse_system(
            "vars x1\npoint f\nmc bad f -> f { x1 > x1 }\nmc g f -> f { x1 > x1' }\n"
        )
        assert decide_closure(cs).terminating

    def test_empty_system_terminates(self):
        cs = ConstraintSystem(1, ("x",), {"f": Invariant()}, ())
        assert decide_closure(cs).terminating

    def test_verdict_independent_of_insertion_order(self):
        for seed in range(60):
            cs = random_system(2, 2, 3, 0.3, seed)
            reversed_cs = ConstraintSystem(
                cs.n, cs.var_names, cs.points, tuple(reversed(cs.mcs))
            )
            a, b = decide_closure(cs), decide_closure(reversed_cs)
            assert a.terminating == b.terminating
            if not a.terminating:
                assert a.witness.mc.arcs == b.witness.mc.arcs

    def test_subsumption_preserves_verdicts(self):
        for seed in range(120):
            cs = random_system(1 + seed % 3, 1 + seed % 2, 1 + seed % 4, 0.3, seed)
            plain = decide_closure(cs)
            pruned = decide_closure(cs, ClosureOptions(subsumption=True))
            assert plain.terminating == pruned.terminating

    def test_idempotent_only_preserves_verdicts(self):
        for seed in range(120):
            cs = random_system(1 + seed % 3, 1 + seed % 2, 1 + seed % 4, 0.3, seed)
            plain = decide_closure(cs)
            idem = decide_closure(cs, ClosureOptions(idempotent_only=True))
            assert plain.terminating == idem.terminating

    def test_subsumption_shrinks_or_keeps_set(self, ex1):
        plain = closure_set(ex1)
        pruned = closure_set(ex1, ClosureOptions(subsumption=True))
        assert len(pruned) <= len(plain)

    def test_subsumption_drops_new_covered_element(self):
        # the weaker constraint is seeded first and absorbs the stronger one
        cs = parse_system(
            "vars x1\npoint f\nmc weak f -> f { x1 >= x1' }\nmc strong f -> f { x1 > x1' }\n"
        )
        pruned = closure_set(cs, ClosureOptions(subsumption=True))
        arcs = [m.mc.arcs for m in pruned]
        assert arcs == [frozenset({Arc(VarTerm(1), VarTerm(1, True), False)})]

    def test_subsumption_replaces_existing_covered_element(self):
        # seeded the other way round: the stronger member is replaced
        cs = parse_system(
            "vars x1\npoint f\nmc strong f -> f { x1 > x1' }\nmc weak f -> f { x1 >= x1' }\n"
        )
        pruned = closure_set(cs, ClosureOptions(subsumption=True))
        arcs = [m.mc.arcs for m in pruned]
        assert arcs == [frozenset({Arc(VarTerm(1), VarTerm(1, True), False)})]


class TestVerdictPreservation:
    def test_stabilization_preserves_verdicts(self):
        from mcterm.elaborate import stabilize

        for seed in range(40):
            cs = random_system(2, 2, 2, 0.3, seed)
            assert decide_closure(cs).terminating == decide_closure(stabilize(cs)).terminating

    def test_elaboration_preserves_closure_verdicts(self):
        from mcterm.elaborate import fully_elaborate

        for seed in range(30):
            cs = random_system(2, 2, 2, 0.3, seed)
            elaborated = fully_elaborate(cs).system
            assert decide_closure(cs).terminating == decide_closure(elaborated).terminating

    def test_witness_powers_always_satisfiable(self):
        from mcterm.oracle import satisfiable_power
        from mcterm.ranking import decide_elaborate

        found = 0
        for seed in range(60):
            cs = random_system(1 + seed % 3, 1 + seed % 2, 1 + seed % 3, 0.25, seed)
            for verdict in (decide_closure(cs), decide_elaborate(cs)):
                if verdict.terminating:
                    continue
                found += 1
                assert all(satisfiable_power(verdict.witness.mc, k) for k in range(1, 9))
        assert found > 0


class TestFindLttFailure:
    def test_agrees_with_decide_closure(self):
        for seed in range(80):
            cs = random_system(1 + seed % 3, 1 + seed % 2, 1 + seed % 4, 0.3, seed)
            failing = find_ltt_failure(cs)
            assert (failing is None) == decide_closure(cs).terminating
            if failing is not None:
                assert not local_termination_test(failing.mc, cs.n)

    def test_witness_has_valid_provenance(self, ex1_scg):
        from mcterm.closure import collapse

        failing = find_ltt_failure(ex1_scg)
        by_name = {m.name: m for m in ex1_scg.mcs}
        path = [by_name[name] for name in failing.provenance]
        again = collapse(path, ex1_scg.points)
        assert again is not None and again.arcs == failing.mc.arcs


def test_is_idempotent_examples(ex1):
    ident = closed((1, False, 1, True, False), (1, True, 1, False, False))
    assert is_idempotent(ident)
    g1 = close(mc_by_name(ex1, "G1"))
    assert not is_idempotent(g1)  # G1;G1 gains z > y'
    swap = closed((1, False, 2, False, True), (2, True, 1, True, True))
    assert not is_idempotent(swap)  # swap;swap is unsatisfiable
