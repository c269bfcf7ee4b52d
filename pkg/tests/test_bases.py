import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rsw.bases import (
    AtomicRuleBI,
    AtomicRuleIMALL,
    AtomicRuleIPL,
    EnumerationTooLarge,
    ExtensionBounds,
    RuleSchemaBI,
    base_union,
    candidate_rules,
    count_extensions,
    empty_base,
    enumerate_extensions,
    instantiate_schema,
    make_base,
    parse_rule,
    validate_rule,
)
from rsw.bunches import (
    ContextualBunch,
    canonical,
    contexts,
    from_canonical,
    leaf,
    plug,
    substitute_at,
)
from rsw.formulas import LogicMismatch
from rsw.parser import ParseError, parse_bunch


# --- rule syntax --------------------------------------------------------------


def test_ipl_axiom_and_rule():
    ax = validate_rule("=> c", "ipl")
    assert ax == AtomicRuleIPL((), "c")
    r = parse_rule("[a b > c, d] => p", "ipl")
    assert r.conclusion == "p"
    assert set(r.premises) == {(frozenset({"a", "b"}), "c"), (frozenset(), "d")}
    assert parse_rule(r.encode(), "ipl") == r


def test_imall_vending_rule():
    r = validate_rule("{ e1 } => c", "imall")
    assert isinstance(r, AtomicRuleIMALL)
    assert len(r.groups) == 1 and r.conclusion == "c"
    assert parse_rule(r.encode(), "imall") == r
    two = parse_rule("{p p > q, r} {s} => t", "imall")
    assert sorted(len(g) for g in two.groups) == [1, 2]


def test_bi_rule_and_schema():
    r = parse_rule("(p , o) |- s => p |- s", "bi")
    assert isinstance(r, AtomicRuleBI)
    assert r.context == canonical(parse_bunch("p"))
    s = parse_rule("forall U . forall x . U(( p ; t ) , h) |- x => U(p) |- x", "bi")
    assert isinstance(s, RuleSchemaBI)
    assert s.hole_var == "U" and s.atom_vars == frozenset({"x"})


@pytest.mark.parametrize(
    "text, logic",
    [
        ("=> p /\\ q", "ipl"),
        ("{e1} => c", "ipl"),
        ("[p > q] => r", "imall"),
        ("p |- q", "bi"),
        ("forall U . p |- q => U(r) |- q", "bi"),
    ],
)
def test_malformed_rules(text, logic):
    with pytest.raises((ParseError, ValueError, LogicMismatch)):
        parse_rule(text, logic)


def test_base_logic_checked():
    with pytest.raises(ValueError):
        make_base("ipl", [AtomicRuleIMALL(((((), "p"),),), "q")])
    with pytest.raises(ValueError):
        base_union(empty_base("ipl"), empty_base("bi"))


# --- union laws ---------------------------------------------------------------


RULES = candidate_rules("ipl", ["p", "q"], ExtensionBounds(max_premises=1, max_hyps=1))
bases_st = st.frozensets(st.sampled_from(RULES), max_size=4).map(lambda rs: make_base("ipl", rs))


@given(bases_st, bases_st, bases_st)
def test_union_is_a_semilattice(a, b, c):
    assert base_union(a, b) == base_union(b, a)
    assert base_union(base_union(a, b), c) == base_union(a, base_union(b, c))
    assert base_union(a, a) == a
    u = base_union(a, b)
    assert u.issuperset(a) and u.issuperset(b)


def test_union_of_empties():
    assert base_union(empty_base("bi"), empty_base("bi")) == empty_base("bi")


# --- extension enumeration ----------------------------------------------------


def test_enumeration_tiny_case():
    out = list(enumerate_extensions(empty_base("ipl"), ["p"], ExtensionBounds(max_rules=1, max_premises=0)))
    assert out == [empty_base("ipl"), make_base("ipl", ["=> p"])]


def _brute_ipl_rules(atoms, max_premises):
    # premises are hypothesis-free; a rule is a set of premise atoms plus a conclusion
    out = set()
    for k in range(max_premises + 1):
        for prem in itertools.combinations(sorted(atoms), k):
            for c in atoms:
                out.add(AtomicRuleIPL(tuple((frozenset(), a) for a in prem), c))
    return out


def test_enumeration_count_matches_brute_force():
    bounds = ExtensionBounds(max_rules=1, max_premises=1, max_hyps=0)
    out = list(enumerate_extensions(empty_base("ipl"), ["p", "q"], bounds))
    assert len(out) == 1 + 2 + 2 * 2
    brute = _brute_ipl_rules(["p", "q"], 1)
    assert {r for b in out for r in b.rules} == brute
    assert count_extensions(empty_base("ipl"), ["p", "q"], bounds) == len(out)


def test_enumeration_is_reflexive_superset_and_deterministic():
    b = make_base("ipl", ["=> p"])
    bounds = ExtensionBounds(max_rules=2, max_premises=1, max_hyps=1)
    first = list(enumerate_extensions(b, ["p", "q"], bounds))
    assert first[0] == b
    assert all(e.issuperset(b) for e in first)
    assert first == list(enumerate_extensions(b, ["p", "q"], bounds))
    assert len(set(first)) == len(first)
    sizes = [len(e) for e in first]
    assert sizes == sorted(sizes)


def test_enumeration_cap():
    with pytest.raises(EnumerationTooLarge) as err:
        list(enumerate_extensions(empty_base("ipl"), ["p", "q", "r"], ExtensionBounds(max_rules=3, max_premises=2, max_hyps=2, cap=1000)))
    assert err.value.estimate > 1000


def test_imall_and_bi_enumerations_are_supersets():
    for logic in ("imall", "bi"):
        b = empty_base(logic)
        out = list(enumerate_extensions(b, ["p"], ExtensionBounds(max_rules=1, max_premises=1, max_hyps=1)))
        assert out[0] == b and len(out) > 1
        assert all(e.logic == b.logic for e in out)


# --- schema instantiation -----------------------------------------------------


CHECKIN = parse_rule("forall U . forall x . U(( p ; t ) , h) |- x => U(p) |- x", "bi")


def test_checkin_instance_at_identity_hole():
    r = instantiate_schema(CHECKIN, ContextualBunch.identity(), {"x": "f"})
    assert r == parse_rule("(( p ; t ) , h) |- f => p |- f", "bi")


def test_instance_with_multiplicative_frame():
    frame = ContextualBunch(parse_bunch("_ , r", hole="_"))
    r = instantiate_schema(CHECKIN, frame, {"x": "f"})
    assert r.context == canonical(parse_bunch("p , r"))
    assert r.premises[0][0] == canonical(parse_bunch("((p ; t) , h) , r"))


def test_unbound_metavariable():
    with pytest.raises((KeyError, ValueError)):
        instantiate_schema(CHECKIN, ContextualBunch.identity(), {})


def test_ground_schema_is_unchanged_by_identity_binding():
    s = parse_rule("forall U . U(p) |- q => U(r) |- q", "bi")
    r = instantiate_schema(s, ContextualBunch.identity(), {})
    assert r == parse_rule("p |- q => r |- q", "bi")


@settings(max_examples=100, deadline=None)
@given(st.sampled_from(contexts(3, ["a", "b"], units=True)))
def test_instantiation_commutes_with_substitution(frame):
    shape = from_canonical(frame)
    r = instantiate_schema(CHECKIN, ContextualBunch(shape), {"x": "f"})
    hole_path = ContextualBunch(shape).hole_path()
    pattern = parse_bunch("(p ; t) , h")
    assert r.premises[0][0] == canonical(substitute_at(shape, hole_path, pattern))
    assert r.context == plug(frame, leaf("p"))
