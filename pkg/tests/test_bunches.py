import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rsw.bunches import (
    ADD_UNIT,
    MUL_UNIT,
    AddJoin,
    AddUnit,
    ContextualBunch,
    Hole,
    Leaf,
    MulJoin,
    MulUnit,
    PathError,
    add,
    at_path,
    bunch_equiv,
    bunch_extends,
    canon_ge,
    canon_size,
    canonical,
    contexts,
    enumerate_canon,
    from_canonical,
    leaf,
    mul,
    normalize,
    occurrences,
    paths,
    plug,
    structurally_follows,
    substitute_at,
)
from rsw.parser import parse_bunch

from oracles import all_trees, reachable, rewriting_closure, tree_size

leaf_st = st.sampled_from([Leaf("p"), Leaf("q"), Leaf("r"), AddUnit(), MulUnit()])
bunch_st = st.recursive(
    leaf_st,
    lambda kids: st.builds(AddJoin, kids, kids) | st.builds(MulJoin, kids, kids),
    max_leaves=6,
)


# --- coherent equivalence ---------------------------------------------------


def test_equiv_matches_rewriting_closure():
    trees = [t for n in (1, 2, 3) for t in all_trees(n, ["p", "q"])]
    for t in trees:
        closure = rewriting_closure(t, 4)
        for u in trees:
            assert (u in closure) == bunch_equiv(t, u), (t, u)


@given(bunch_st, bunch_st)
def test_join_commutes(a, b):
    assert bunch_equiv(AddJoin(a, b), AddJoin(b, a))
    assert bunch_equiv(MulJoin(a, b), MulJoin(b, a))


@given(bunch_st, bunch_st, bunch_st)
def test_join_associates(a, b, c):
    assert bunch_equiv(AddJoin(AddJoin(a, b), c), AddJoin(a, AddJoin(b, c)))
    assert bunch_equiv(MulJoin(MulJoin(a, b), c), MulJoin(a, MulJoin(b, c)))


@given(bunch_st)
def test_units_are_neutral(a):
    assert bunch_equiv(AddJoin(a, AddUnit()), a)
    assert bunch_equiv(MulJoin(MulUnit(), a), a)


@given(bunch_st)
def test_normalize_is_idempotent_and_equivalent(a):
    n = normalize(a)
    assert normalize(n) == n
    assert bunch_equiv(a, n)
    assert canonical(from_canonical(canonical(a))) == canonical(a)


def test_units_do_not_collapse_across_kinds():
    assert not bunch_equiv(AddJoin(Leaf("p"), MulUnit()), Leaf("p"))
    assert not bunch_equiv(AddUnit(), MulUnit())


# --- paths and contexts -----------------------------------------------------


def test_substitution_is_occurrence_sensitive():
    b = parse_bunch("(p ; q) , p")
    assert substitute_at(b, ("R",), Leaf("r")) == MulJoin(AddJoin(Leaf("p"), Leaf("q")), Leaf("r"))
    assert substitute_at(b, ("L", "L"), Leaf("r")) == MulJoin(AddJoin(Leaf("r"), Leaf("q")), Leaf("p"))
    with pytest.raises(PathError):
        at_path(b, ("R", "L"))


@given(bunch_st)
def test_substituting_a_subtree_by_itself_is_identity(b):
    for p in paths(b):
        assert substitute_at(b, p, at_path(b, p)) == b


def test_contextual_bunch_needs_exactly_one_hole():
    with pytest.raises(ValueError):
        ContextualBunch(AddJoin(Hole(), Hole()))
    with pytest.raises(ValueError):
        ContextualBunch(Leaf("p"))
    ctx = ContextualBunch(MulJoin(Hole(), Leaf("h")))
    assert ctx.apply(Leaf("p")) == MulJoin(Leaf("p"), Leaf("h"))
    assert ctx.hole_path() == ("L",)
    assert ContextualBunch.identity().apply(Leaf("q")) == Leaf("q")


def test_plug_agrees_with_apply():
    for c in contexts(3, ["p", "q"]):
        shape = from_canonical(c)
        for r in enumerate_canon(2, ["p", "r"]):
            assert plug(c, r) == canonical(ContextualBunch(shape).apply(from_canonical(r)))


def test_occurrences_rebuild_identity():
    for c in enumerate_canon(4, ["p", "q"], units=True):
        for sub, rebuild in occurrences(c):
            assert rebuild(sub) == c


# --- bunch extension and weak/contraction preorder --------------------------

@pytest.mark.slow
def test_extension_matches_weakening_bfs():
    targets = enumerate_canon(3, ["p", "q"], units=True)
    for h in targets:
        reach = reachable(h, 3, ["p", "q"])
        for g in targets:
            assert canon_ge(g, h, False) == (g in reach), (g, h)


@pytest.mark.slow
def test_extension_matches_weakening_bfs_one_atom_four_leaves():
    targets = enumerate_canon(4, ["p"], units=True)
    for h in enumerate_canon(3, ["p"], units=True):
        reach = reachable(h, 4, ["p"])
        for g in targets:
            assert canon_ge(g, h, False) == (g in reach), (g, h)


@pytest.mark.slow
def test_structural_preorder_matches_bfs_with_contraction():
    small = enumerate_canon(2, ["p", "q"], units=True)
    for h in small:
        reach = reachable(h, 3, ["p", "q"], contraction=True)
        for g in small:
            assert canon_ge(g, h, True) == (g in reach), (g, h)


def test_unit_weakening_corner_cases():
    e_add, e_mul, p = ADD_UNIT, MUL_UNIT, leaf("p")
    # e+ weakens to e*, so e+ children of a product can vanish
    assert canon_ge(p, ("M", (e_add, e_add)), False)
    assert canon_ge(e_add, ("M", (e_add, e_add)), False)
    assert not canon_ge(e_add, e_mul, False)
    # an additive bunch grows a product through  X , e*
    ee = add(e_mul, e_mul)
    assert canon_ge(mul(ee, ee), ee, False)
    assert canon_ge(add(mul(p, add(e_mul, leaf("q"))), leaf("r")), p, False)


def test_extension_examples():
    assert bunch_extends(parse_bunch("p ; q"), parse_bunch("p"))
    assert bunch_extends(parse_bunch("(p ; r) , q"), parse_bunch("p , q"))
    assert bunch_extends(parse_bunch("p , (e* ; r)"), parse_bunch("p"))
    assert not bunch_extends(parse_bunch("p , r"), parse_bunch("p"))
    assert not bunch_extends(parse_bunch("p"), parse_bunch("p ; p"))
    assert structurally_follows(parse_bunch("p"), parse_bunch("p ; p"))


@settings(max_examples=60)
@given(bunch_st, bunch_st)
def test_extension_by_weakening(a, b):
    assert bunch_extends(AddJoin(a, b), a)


@settings(max_examples=60)
@given(bunch_st)
def test_extension_is_reflexive(a):
    assert bunch_extends(a, a)
    assert structurally_follows(a, a)


def test_extension_is_transitive_on_small_bunches():
    cs = enumerate_canon(3, ["p", "q"], units=True)
    for a, b, c in itertools.product(cs, repeat=3):
        if canon_ge(a, b, False) and canon_ge(b, c, False):
            assert canon_ge(a, c, False)


def test_canonical_constructors():
    p, q = leaf("p"), leaf("q")
    assert add(p, ADD_UNIT) == p
    assert mul(MUL_UNIT) == MUL_UNIT
    assert mul(q, mul(p, q)) == ("M", (p, q, q))
    assert canon_size(add(p, mul(q, MUL_UNIT, p))) == 3


@given(bunch_st)
def test_canonical_size_never_grows(b):
    assert canon_size(canonical(b)) <= tree_size(b)
