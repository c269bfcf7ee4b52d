import json
import random

import pytest

from rsw.bases import ExtensionBounds, empty_base, enumerate_extensions, make_base, parse_rule
from rsw.bunches import HOLE, contexts, leaf, map_canon_leaves, plug
from rsw.derivability import Status, derive
from rsw.formulas import Atom, enumerate_formulas
from rsw.parser import parse_formula, parse_formula_bunch
from rsw.provers import prove
from rsw.support import (
    Judgment,
    Method,
    RefuteBounds,
    SupportStatus,
    build_simulation_base,
    check_completeness_instance,
    check_support,
    check_validity,
    find_counterexample_extension,
    make_judgment,
    replay_evidence,
    replay_witness,
    rule_formula,
)

from agreement import universe

MFA_RULES = [
    "forall U . forall x . U(s_acc) |- x => U(p , o) |- x",
    "forall U . forall x . U(s_acc) |- x => U(p , fob) |- x",
    "forall U . forall x . U(s_acc) |- x => U(o , fob) |- x",
]
VENDING = make_base("imall", ["{ e1 } => c"])
SMALL = RefuteBounds(max_instances=3_000)


def F(text, logic):
    return parse_formula(text, logic)


def _check_fail_replays(j, v):
    assert v.fails and v.witness is not None
    assert replay_witness(j, v.witness)


# --- exact clauses ------------------------------------------------------------


def test_vending_one_euro_buys_one_bar():
    j = make_judgment("imall", VENDING, "e1", None, "c")
    v = check_support(j)
    assert v.holds and v.method is Method.ATOMIC
    assert replay_evidence(v.evidence)
    two = make_judgment("imall", VENDING, "e1 e1", None, "c")
    _check_fail_replays(two, check_support(two))


def test_bi_multiplicative_unit_at_empty_resource():
    v = check_support(make_judgment("bi", empty_base("bi"), None, None, "top*"))
    assert v.holds and v.method is Method.ATOMIC
    j = make_judgment("bi", empty_base("bi"), "p", None, "top*")
    _check_fail_replays(j, check_support(j))
    assert check_support(make_judgment("bi", empty_base("bi"), "p , q", None, "top")).holds


def test_mfa_support():
    b = make_base("bi", MFA_RULES)
    assert check_support(make_judgment("bi", b, "p , o", None, "s_acc")).holds
    for res in ["p", "p ; o"]:
        j = make_judgment("bi", b, res, None, "s_acc")
        _check_fail_replays(j, check_support(j))


def test_bottom_fails_even_when_the_vocabulary_is_derivable():
    b = make_base("ipl", ["=> p", "=> q"])
    j = make_judgment("ipl", b, None, "", "bot")
    _check_fail_replays(j, check_support(j))
    assert check_support(make_judgment("ipl", b, None, "bot", "q /\\ p")).holds


def test_implication_and_conjunction_unfold():
    b = make_base("ipl", ["[p] => q"])
    v = check_support(make_judgment("ipl", b, None, "", "p -> (q /\\ p)"))
    assert v.holds and v.method is Method.ATOMIC and replay_evidence(v.evidence)
    j = make_judgment("ipl", b, None, "", "q -> p")
    _check_fail_replays(j, check_support(j))
    v = check_support(make_judgment("imall", VENDING, "", "", "e1 -o c"))
    assert v.holds
    j = make_judgment("imall", VENDING, "", "", "(e1 -o c) & (c -o c) & (c -o e1)")
    _check_fail_replays(j, check_support(j))


def test_bi_implications_move_into_the_resource():
    b = make_base("bi", MFA_RULES)
    assert check_support(make_judgment("bi", b, "p", None, "o -* s_acc")).holds
    j = make_judgment("bi", b, "p", None, "o -> s_acc")
    _check_fail_replays(j, check_support(j))


# --- invariants ---------------------------------------------------------------


def _atomic_cases(logic, rng):
    rules, ctxs, bounds = universe(logic)
    for _ in range(60):
        b = empty_base(logic).with_rules(rng.sample(rules, rng.randint(0, 2)))
        c = rng.choice(ctxs)
        g = rng.choice("pq")
        yield b, c, g, bounds


@pytest.mark.parametrize("logic", ["ipl", "imall", "bi"])
def test_atomic_exactness(logic):
    rng = random.Random(5)
    for b, c, g, bounds in _atomic_cases(logic, rng):
        if logic == "ipl":
            j = Judgment(logic, b, None, [Atom(a) for a in c], Atom(g))
        elif logic == "imall":
            cut = rng.randint(0, len(c))
            j = Judgment(logic, b, c[:cut], [Atom(a) for a in c[cut:]], Atom(g))
        else:
            frame = rng.choice([HOLE] + contexts(2, ["p", "q"]))
            j = Judgment(logic, b, frame, map_canon_leaves(c, lambda x: leaf(Atom(x))), Atom(g))
            c = plug(frame, c)
        d = derive(b, c, g, bounds)
        v = check_support(j, "exact", bounds)
        if d.status is Status.EXHAUSTED:
            assert v.status is SupportStatus.UNKNOWN
        else:
            assert v.holds == d.derivable, (b.describe(), c, g)
            assert v.fails == (not d.derivable)


@pytest.mark.parametrize("logic", ["ipl", "imall", "bi"])
def test_atomic_holds_is_monotone(logic):
    rng = random.Random(9)
    for b, c, g, bounds in _atomic_cases(logic, rng):
        j = Judgment(logic, b, c if logic == "imall" else None, None, Atom(g)) if logic != "ipl" else None
        if logic == "ipl":
            j = Judgment(logic, b, None, [Atom(a) for a in c], Atom(g))
        if logic == "bi":
            j = Judgment(logic, b, c, None, Atom(g))
        if not check_support(j, "exact", bounds).holds:
            continue
        exts = list(enumerate_extensions(b, ["p", "q"], ExtensionBounds(1, 1, 1)))
        for e in rng.sample(exts, min(6, len(exts))):
            assert check_support(j.with_base(e), "exact", bounds).holds


def _corpus(rng, n):
    for _ in range(n):
        logic = rng.choice(["ipl", "imall", "bi"])
        rules, _, _ = universe(logic)
        b = empty_base(logic).with_rules(rng.sample(rules, rng.randint(0, 1)))
        fs = enumerate_formulas(logic, ["p", "q"], 3, constants=False)
        goal = rng.choice(fs)
        if logic == "ipl":
            yield Judgment(logic, b, None, rng.sample(fs, rng.randint(0, 1)), goal)
        elif logic == "imall":
            yield Judgment(logic, b, tuple(rng.sample("pq", rng.randint(0, 1))), rng.sample(fs, rng.randint(0, 1)), goal)
        else:
            yield Judgment(logic, b, rng.choice(["p", "q", "p , q", "p ; q"]), None, goal)


def test_witnesses_replay_and_strategies_cohere():
    rng = random.Random(13)
    seen_fail = seen_internal = 0
    for j in _corpus(rng, 40):
        r = check_support(j, "refute", refute=SMALL)
        assert r.status is not SupportStatus.HOLDS or r.method is not Method.INTERNALIZED
        if r.fails:
            seen_fail += 1
            assert replay_witness(j, r.witness), j.render()
        i = check_support(j, "internalize", refute=SMALL)
        if i.holds:
            assert not r.fails, j.render()
            seen_internal += i.method is Method.INTERNALIZED
            assert i.heuristic == (i.method is Method.INTERNALIZED)
    assert seen_fail > 5


def test_enumeration_alone_never_concludes_holds():
    b = make_base("ipl", ["=> p"])
    j = make_judgment("ipl", b, None, "", "p \\/ q")
    r = check_support(j, "refute")
    assert r.status is SupportStatus.UNKNOWN
    a = check_support(j, "auto")
    assert a.holds and a.method is Method.INTERNALIZED and a.heuristic
    assert a.to_json()["heuristic"] is True


# --- counterexamples and validity ---------------------------------------------


def test_counterexample_for_atomic_entailment():
    j = make_judgment("ipl", empty_base("ipl"), None, "p", "q")
    ext, inst = find_counterexample_extension(j)
    assert ext == make_base("ipl", ["=> p"])


def test_disjunction_counterexample():
    j = make_judgment("ipl", empty_base("ipl"), None, "", "p \\/ q")
    v = check_support(j, "refute")
    _check_fail_replays(j, v)
    assert v.witness.clause == "∨"


def test_vending_non_entailment_has_a_witness():
    j = make_judgment("imall", VENDING, "", "e1 -o c", "e1 -o (c * c)")
    found = find_counterexample_extension(j)
    assert found is not None
    ext, _ = found
    assert ext.issuperset(VENDING)
    v = check_support(j, "refute")
    _check_fail_replays(j, v)
    assert v.meta["tensor_reading"]


def test_validity_follows_the_prover():
    assert check_validity("ipl", [], F("p -> p", "ipl")).holds
    v = check_validity("imall", [F("e1 -o c", "imall")], F("e1 -o (c * c)", "imall"))
    assert v.fails
    g = parse_formula_bunch("(p -> q) ; p", "bi")
    assert check_validity("bi", g, F("q", "bi")).holds == prove("bi", g, F("q", "bi")).proved
    v = check_validity("ipl", [], F("p \\/ q", "ipl"))
    assert v.fails and replay_witness(make_judgment("ipl", empty_base("ipl"), None, "", "p \\/ q"), v.witness)


def test_prover_backed_holds_in_any_base():
    for b in [empty_base("ipl"), make_base("ipl", ["[p] => q"])]:
        v = check_support(make_judgment("ipl", b, None, "p \\/ q", "q \\/ p"))
        assert v.holds and v.method is Method.PROVER and replay_evidence(v.evidence)


# --- simulation bases ---------------------------------------------------------


def test_disjunction_simulation_rules():
    b, enc = build_simulation_base([F("p \\/ q", "ipl")], "ipl")
    d = enc.atom(F("p \\/ q", "ipl"))
    assert d not in {"p", "q"} and enc.atom(Atom("p")) == "p"
    expected = ["[p] => D", "[q] => D"] + [f"[D, p > {x}, q > {x}] => {x}" for x in ["p", "q", "D"]]
    assert b.rules == make_base("ipl", [r.replace("D", d) for r in expected]).rules


def test_atom_encodes_itself():
    b, enc = build_simulation_base([Atom("p")], "ipl")
    assert not b.rules and enc.pairs == ((Atom("p"), "p"),)


def test_tensor_simulation_rules():
    b, enc = build_simulation_base([F("p * q", "imall")], "imall")
    t = enc.atom(F("p * q", "imall"))
    expected = [f"{{p}} {{q}} => {t}"] + [f"{{{t}}} {{p q > {x}}} => {x}" for x in ["p", "q", t]]
    assert b.rules == make_base("imall", expected).rules


def test_simulation_refuses_bi():
    with pytest.raises(ValueError):
        build_simulation_base([F("p", "bi")], "bi")


def test_completeness_instances():
    r = check_completeness_instance([], F("p -> p", "ipl"), "ipl")
    assert (r.prover, r.simulation, r.agree) == ("Proved", "Derivable", True)
    th = [F("e1 -o c", "imall")]
    r = check_completeness_instance([], F("(e1 * e1) -o (c * c)", "imall"), "imall", theory=th)
    assert (r.prover, r.simulation, r.agree) == ("Proved", "Derivable", True)
    for f in enumerate_formulas("ipl", ["p", "q"], 4):
        assert check_completeness_instance([], f, "ipl").agree is True, f
    rng = random.Random(3)
    for f in rng.sample(enumerate_formulas("imall", ["p", "q"], 4), 60):
        assert check_completeness_instance([], f, "imall").agree is True, f


# --- translation, shapes and serialization -----------------------------------


def test_internalized_rule_shape():
    r = parse_rule("[a b > c, d] => p", "ipl")
    assert rule_formula(r) == F("d -> ((a /\\ b -> c) -> p)", "ipl")
    assert rule_formula(parse_rule("{e1} => c", "imall")) == F("e1 -o c", "imall")
    assert rule_formula(parse_rule("(p , o) |- s => e* |- s", "bi")) == F("((o * p) -* s) -> (top* -* s)", "bi")


def test_shape_errors():
    with pytest.raises(ValueError):
        Judgment("ipl", empty_base("ipl"), ("p",), (), Atom("p"))
    with pytest.raises(ValueError):
        make_judgment("bi", empty_base("bi"), "p", "q", "q")
    with pytest.raises(ValueError):
        Judgment("imall", empty_base("ipl"), (), (), Atom("p"))
    with pytest.raises(ValueError):
        check_support(make_judgment("ipl", empty_base("ipl"), None, "", "p"), "guess")


def test_json_shape():
    v = check_support(make_judgment("imall", VENDING, "e1 e1", None, "c"))
    out = json.loads(json.dumps(v.to_json()))
    assert {"status", "method", "bounds", "vocabulary", "witness"} <= set(out)
    assert out["status"] == "Fails" and "fresh" in out["vocabulary"]
    assert "tensor_reading" in out
