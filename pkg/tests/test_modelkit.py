import json
import pytest

from rsw.bases import base_union, make_base
from rsw.bunches import canonical, enumerate_canon
from rsw.derivability import SearchBounds, check_derivation, derive, derive_oracle
from rsw.formulas import Logic
from rsw.modelkit import ModelError, evaluate_model, fixture_text, load_model, load_model_file
from rsw.parser import parse_bunch, parse_formula


def fixture(name):
    return load_model(fixture_text(name))


# --- loading the fixtures -----------------------------------------------------


def test_vending_fixture():
    m = fixture("vending")
    assert m.logic is Logic.IMALL
    assert m.bases["V"] == make_base("imall", ["{ e1 } => c"])
    buy = m.judgment("buy")
    assert buy.kind == "derive" and buy.expect == "Holds"
    assert buy.judgment.resource == ("e1",)
    assert m.judgment("deal").kind == "validity" and len(m.judgment("deal").theory) == 1


def test_mfa_fixture():
    m = fixture("mfa")
    assert m.policies["G"] == parse_formula("((p * o) \\/ (p * fob) \\/ (o * fob)) -* s_acc", "bi")
    assert len(m.bases["B"].schemas) == 3
    assert [j.name for j in m.judgments][:3] == ["grant2", "grant1", "shared"]
    assert m.judgment("shared").judgment.resource == canonical(parse_bunch("p ; o"))


def test_airport_fixture():
    m = fixture("airport")
    names = [f"B{i}" for i in range(1, 7)] + ["C1", "C2"]
    assert set(names) <= set(m.bases)
    union = m.bases["B1"]
    for n in names[1:]:
        union = base_union(union, m.bases[n])
    assert m.bases["B"] == union
    p = m.policies
    F = lambda s: parse_formula(s, "bi")
    assert p["Phi1"] == F("p -* ((p /\\ t) * h)")
    assert p["Psi2"] == F("(t -> s_cab) /\\ ((s_cab /\\ p) -> s_pass) /\\ ((s_pass /\\ p /\\ t) -> s_gate)")
    assert p["Gamma"] == F(
        "(p -* ((p /\\ t) * h)) -* (((h -* s_hold) * ((t -> s_cab) /\\ ((s_cab /\\ p) -> s_pass)"
        " /\\ ((s_pass /\\ p /\\ t) -> s_gate))) -* ((s_gate * s_hold) -* f))"
    )


def test_root_fixture_directory_matches_package(tmp_path):
    from pathlib import Path

    root = Path(__file__).resolve().parent.parent / "fixtures" / "vending.rsm"
    assert load_model_file(root).bases == fixture("vending").bases


# --- evaluating them ----------------------------------------------------------


@pytest.mark.parametrize("name", ["vending", "mfa", "airport"])
def test_fixture_expectations_hold(name):
    m = fixture(name)
    rep = evaluate_model(m)
    assert [e.name for e in rep.entries] == [j.name for j in m.judgments]
    assert rep.mismatches == []
    s = rep.summary
    assert s["judgments"] == len(m.judgments) == s["Holds"] + s["Fails"] + s["Unknown"]


def test_mfa_statuses():
    rep = evaluate_model(fixture("mfa"))
    got = {e.name: e.status for e in rep.entries}
    assert (got["grant2"], got["grant1"], got["shared"]) == ("Holds", "Fails", "Fails")


def test_report_is_deterministic_modulo_timing():
    m = fixture("vending")
    a = json.dumps(evaluate_model(m).to_json(timing=False), sort_keys=True)
    b = json.dumps(evaluate_model(fixture("vending")).to_json(timing=False), sort_keys=True)
    assert a == b
    assert "elapsed" in evaluate_model(m).to_json()["judgments"][0]


def test_mfa_separation_exhaustive():
    b = fixture("mfa").bases["B"]
    bounds = SearchBounds(max_context_size=3)
    granted = set()
    for c in enumerate_canon(2, ["p", "o", "fob"], units=True):
        r = derive(b, c, "s_acc", bounds)
        assert r.derivable == derive_oracle(b, c, "s_acc", "bi", bounds)
        if r.derivable:
            granted.add(c)
    pairs = {canonical(parse_bunch(s)) for s in ("p , o", "p , fob", "o , fob")}
    assert granted == pairs


def _schemas_used(node, out):
    for v in node.info.values():
        if hasattr(v, "encode") and not isinstance(v, str):
            out.add(v.encode())
    for c in node.children:
        _schemas_used(c, out)
    return out


def test_airport_chain_uses_every_location():
    m = fixture("airport")
    b = m.bases["B"]
    r = derive(b, "p", "f")
    assert r.derivable and check_derivation(b, r.tree)
    used = _schemas_used(r.tree, set())
    for i in range(1, 7):
        (s,) = m.bases[f"B{i}"].schemas
        assert s.encode() in used, f"B{i}"
    # every location is needed
    for i in range(1, 7):
        rest = [m.bases[f"B{k}"] for k in range(1, 7) if k != i]
        u = rest[0]
        for x in rest[1:]:
            u = base_union(u, x)
        assert not derive(u, "p", "f").derivable, f"B{i}"


def test_airport_negative_controls():
    b = fixture("airport").bases["B"]
    for ctx in ("e*", "t", "h", "s_gate ; s_hold", "t ; h"):
        assert not derive(b, ctx, "f").derivable, ctx


# --- the format ---------------------------------------------------------------


SMALL = """\
logic IPL
atoms p q r
base A {
  [q] => p
}
base E { => q }
base AE = A + E
policy Q = q -> p
judgment d  : A ; q |- p          expect holds
judgment s  : A ; |- Q            expect holds
judgment c  : AE ; | Q |- p /\\ q  expect holds
judgment v  : p, q |- p /\\ q      expect holds
"""


def test_small_ipl_model():
    m = load_model(SMALL)
    assert [j.kind for j in m.judgments] == ["derive", "support", "support", "validity"]
    assert m.vocabulary == ("p", "q", "r")
    assert evaluate_model(m).mismatches == []


def test_named_resources_are_spliced():
    m = load_model(
        "logic BI\natoms p o s\nbase B { => (p , o) |- s }\n"
        "resource R = p , o\njudgment g : B ; R |- s expect holds\n"
        "judgment h : B ; (R ; p) |- s expect holds\n"
    )
    assert m.judgment("g").judgment.resource == canonical(parse_bunch("p , o"))
    assert evaluate_model(m).mismatches == []


def test_mismatch_is_reported_not_raised():
    m = load_model("logic IMALL\nbase V { {e1} => c }\njudgment x : V ; e1 e1 |- c expect holds\n")
    rep = evaluate_model(m)
    assert len(rep.mismatches) == 1 and rep.summary["mismatches"] == 1
    assert "MISMATCH" in rep.render_text()


@pytest.mark.parametrize(
    "text, line, col, fragment",
    [
        ("logic XYZ\n", 1, 7, "unknown logic"),
        ("atoms p\n", 1, 1, "first declaration"),
        ("logic BI\nbase B {\n  => p |-\n}\n", 3, None, ""),
        ("logic BI\njudgment j : Nope ; p |- p\n", 2, 14, "unknown base"),
        ("logic BI\natoms p\nbase B { => p |- q }\n", 3, None, "unknown atom 'q'"),
        ("logic BI\npolicy G = p -o q\n", 2, None, "logic mismatch"),
        ("logic IPL\nbase A { }\nbase A { }\n", 3, 6, "already declared"),
        ("logic IPL\nbase A {\n  => p\n", 2, None, "not closed"),
        ("logic IPL\nbase A { }\njudgment j : A ; |- p expect maybe\n", 3, 30, "unknown expectation"),
        ("logic IPL\njudgment j : p |- P\n", 2, 19, "unknown name"),
        ("logic BI\nfrobnicate\n", 2, 1, "expected a declaration"),
    ],
)
def test_errors_carry_positions(text, line, col, fragment):
    with pytest.raises(ModelError) as err:
        load_model(text)
    assert err.value.line == line
    if col is not None:
        assert err.value.column == col
    assert fragment in str(err.value)
