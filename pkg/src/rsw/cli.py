"""Command-line front end.

Exit codes: 0 answered (and as expected), 1 expectation mismatch or Fails
where Holds was demanded, 2 usage or parse error, 3 Unknown under --strict.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from rsw.bases import Base, base_union, make_base
from rsw.derivability import SearchBounds, Status, UniverseTooLarge, derive, derive_oracle
from rsw.formulas import Logic, LogicMismatch, atoms_of
from rsw.modelkit import (
    EXPECT,
    FIXTURES,
    Model,
    ModelError,
    evaluate_model,
    fixture_text,
    load_model,
)
from rsw.parser import ParseError, parse_bunch, parse_formula, parse_formula_bunch, render
from rsw.provers import ProofStatus, prove
from rsw.support import (
    RefuteBounds,
    Strategy,
    build_simulation_base,
    check_completeness_instance,
    check_support,
    make_judgment,
)

OK, MISMATCH, USAGE, UNKNOWN = 0, 1, 2, 3


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# argument parsing


def _common(top: bool) -> argparse.ArgumentParser:
    """Global options, accepted before or after the command.  Below the top
    level the defaults are suppressed so they do not overwrite values given
    before the command."""

    def d(v):
        return v if top else argparse.SUPPRESS

    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("global options")
    g.add_argument("--logic", type=str.lower, choices=["ipl", "imall", "bi"], default=d(None), help="object logic")
    g.add_argument("--depth", type=int, default=d(None), help="search depth bound")
    g.add_argument("--context-size", type=int, default=d(None), help="context size bound")
    g.add_argument("--budget", type=int, default=d(None), help="node budget")
    g.add_argument("--vocab", default=d(""), help="extra vocabulary atoms, comma separated")
    g.add_argument("--strategy", default=d("auto"), choices=[s.value for s in Strategy], help="support strategy")
    g.add_argument("--strict", action="store_true", default=d(False), help="exit 3 on Unknown")
    g.add_argument("--json", action="store_true", default=d(False), help="JSON output")
    return p


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rsw", description=__doc__.splitlines()[0], parents=[_common(True)])
    common = _common(False)
    sub = ap.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def cmd(name, help):
        return sub.add_parser(name, help=help, parents=[common], description=help)

    p = cmd("parse", "parse a formula, bunch, rule or model file and print it back")
    p.add_argument("text", help="source text, or a .rsm path")
    p.add_argument("--kind", choices=["auto", "formula", "bunch", "rule", "model"], default="auto")

    for name, help in (("derive", "atomic derivability in a base"), ("oracle", "least-relation oracle")):
        p = cmd(name, help)
        _base_args(p)
        p.add_argument("--ctx", default="", help="atomic context (multiset or bunch)")
        p.add_argument("--goal", required=True, help="goal atom")
        p.add_argument("--expect", choices=sorted(EXPECT), help="demanded answer")

    p = cmd("prove", "sequent provability")
    p.add_argument("--ctx", default="", help="context formulas (comma list, or a bunch for BI)")
    p.add_argument("--theory", action="append", default=[], help="reusable IMALL hypothesis (repeatable)")
    p.add_argument("--goal", required=True)
    p.add_argument("--expect", choices=sorted(EXPECT))

    p = cmd("support", "support judgment ctx |=_B^res goal")
    _base_args(p)
    p.add_argument("--res", default=None, help="resource (IMALL multiset; BI bunch, hole written _)")
    p.add_argument("--ctx", default=None, help="context formulas")
    p.add_argument("--goal", required=True)
    p.add_argument("--instances", type=int, default=None, help="refute search work budget")
    p.add_argument("--expect", choices=sorted(EXPECT))

    p = cmd("check", "evaluate every judgment of a model file")
    p.add_argument("model", help="a .rsm path, or a bundled fixture name")

    p = cmd("simulate", "build the simulation base of a sequent and compare with the prover")
    p.add_argument("--ctx", default="")
    p.add_argument("--goal", required=True)
    p.add_argument("--theory", action="append", default=[])
    return ap


def _base_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--base", default=None, help=".rsm model file providing the base")
    p.add_argument("--base-name", default=None, help="which base of the model file")
    p.add_argument("--rule", action="append", default=[], help="inline base rule (repeatable)")


# ---------------------------------------------------------------------------
# helpers


def _bounds(a) -> SearchBounds:
    d = SearchBounds()
    return SearchBounds(
        a.depth if a.depth is not None else d.max_depth,
        a.context_size if a.context_size is not None else d.max_context_size,
        a.budget if a.budget is not None else d.node_budget,
    )


def _vocab(a) -> list[str]:
    return [v.strip() for v in a.vocab.split(",") if v.strip()]


def read_model(ref: str) -> Model:
    path = Path(ref)
    if path.exists():
        return load_model(path.read_text(encoding="utf-8"))
    stem = path.stem
    if stem in FIXTURES and (path.parent.name in ("fixtures", "") or ref == stem):
        return load_model(fixture_text(stem))
    raise UsageError(f"no such model file: {ref}")


def _logic(a, model: Model | None = None) -> Logic:
    if a.logic:
        logic = Logic.coerce(a.logic)
        if model is not None and model.logic is not logic:
            raise UsageError(f"--logic {logic.value} but the model is {model.logic.value}")
        return logic
    if model is not None:
        return model.logic
    raise UsageError("--logic is required")


def _base(a) -> tuple[Logic, Base]:
    model = read_model(a.base) if a.base else None
    logic = _logic(a, model)
    if model is None:
        base = make_base(logic, [], "inline")
    elif a.base_name:
        if a.base_name not in model.bases:
            raise UsageError(f"model has no base {a.base_name!r} (have {', '.join(model.bases)})")
        base = model.bases[a.base_name]
    elif len(model.bases) == 1:
        base = next(iter(model.bases.values()))
    elif "B" in model.bases:
        base = model.bases["B"]
    else:
        raise UsageError(f"choose a base with --base-name ({', '.join(model.bases)})")
    if a.rule:
        base = base_union(base, make_base(logic, a.rule), base.name or "inline")
    return logic, base


def _atomic_ctx(logic: Logic, text: str):
    text = text.strip()
    if logic is Logic.BI:
        return "e*" if not text else text
    return [t for t in text.replace(",", " ").split() if t]


def _formula_ctx(logic: Logic, text: str):
    if logic is Logic.BI:
        return None if not text.strip() else parse_formula_bunch(text, logic)
    from rsw.support import _split_commas

    return [parse_formula(t, logic) for t in _split_commas(text)]


def _finish(a, status: str, payload: dict, text: str) -> int:
    """Print and pick the exit code; ``status`` is Holds, Fails or Unknown."""
    if a.json:
        print(json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False))
    else:
        print(text)
    expect = getattr(a, "expect", None)
    if expect is not None and EXPECT[expect] != status:
        return MISMATCH
    if status == "Unknown" and a.strict:
        return UNKNOWN
    return OK


# ---------------------------------------------------------------------------
# commands


def cmd_parse(a) -> int:
    kind, text = a.kind, a.text
    if kind == "auto":
        kind = "model" if text.endswith(".rsm") else "formula"
    if kind == "model":
        m = read_model(text)
        out = {
            "logic": m.logic.value,
            "vocabulary": list(m.vocabulary),
            "bases": {n: b.describe() for n, b in m.bases.items()},
            "policies": {n: render(f) for n, f in m.policies.items()},
            "judgments": [{"name": j.name, "kind": j.kind, "judgment": j.render(), "expect": j.expect} for j in m.judgments],
        }
        lines = [f"logic {out['logic']}", f"atoms {' '.join(out['vocabulary'])}"]
        lines += [f"base {n}: {len(r)} rules" for n, r in out["bases"].items()]
        lines += [f"policy {n} = {f}" for n, f in out["policies"].items()]
        lines += [f"judgment {j['name']} ({j['kind']}): {j['judgment']}" for j in out["judgments"]]
        return _finish(a, "Holds", out, "\n".join(lines))
    if kind == "bunch":
        logic = Logic.coerce(a.logic) if a.logic else None
        from rsw.bunches import canonical, from_canonical
        from rsw.parser import render_bunch

        if logic is None:
            b = parse_bunch(text)
            shown = render_bunch(from_canonical(canonical(b)))
        else:
            b = parse_formula_bunch(text, logic)
            shown = render_bunch(from_canonical(canonical(b)), item=lambda f: f"({render(f)})")
        return _finish(a, "Holds", {"kind": "bunch", "canonical": shown}, shown)
    logic = _logic(a)
    if kind == "rule":
        r = make_base(logic, [text])
        (enc,) = r.describe()
        return _finish(a, "Holds", {"kind": "rule", "logic": logic.value, "rule": enc}, enc)
    f = parse_formula(text, logic)
    out = {"kind": "formula", "logic": logic.value, "text": render(f), "unicode": render(f, unicode=True), "atoms": sorted(atoms_of(f))}
    return _finish(a, "Holds", out, f"{out['text']}\n{out['unicode']}")


def cmd_derive(a) -> int:
    logic, base = _base(a)
    r = derive(base, _atomic_ctx(logic, a.ctx), a.goal.strip(), _bounds(a))
    status = {Status.DERIVABLE: "Holds", Status.NOT_DERIVABLE: "Fails", Status.EXHAUSTED: "Unknown"}[r.status]
    out = {"status": r.status.value, "logic": logic.value, "base": base.describe(), "stats": _clean(r.stats)}
    if r.tree is not None:
        out["tree"] = r.tree.to_dict(logic)
    return _finish(a, status, out, r.status.value)


# oracle context bounds that finish in seconds; --context-size overrides
ORACLE_DEFAULT_SIZE = {Logic.IPL: 12, Logic.IMALL: 4, Logic.BI: 3}


def cmd_oracle(a) -> int:
    logic, base = _base(a)
    if a.context_size is None:
        a.context_size = ORACLE_DEFAULT_SIZE[logic]
    try:
        ok = derive_oracle(base, _atomic_ctx(logic, a.ctx), a.goal.strip(), logic, _bounds(a))
    except UniverseTooLarge as exc:
        return _finish(a, "Unknown", {"status": "Unknown", "reason": str(exc)}, f"Unknown ({exc})")
    word = Status.DERIVABLE.value if ok else Status.NOT_DERIVABLE.value
    return _finish(a, "Holds" if ok else "Fails", {"status": word, "logic": logic.value}, word)


def cmd_prove(a) -> int:
    logic = _logic(a)
    ctx = _formula_ctx(logic, a.ctx)
    theory = [parse_formula(t, logic) for t in a.theory]
    if theory and logic is not Logic.IMALL:
        raise UsageError("--theory is only available for IMALL")
    goal = parse_formula(a.goal, logic)
    b = _bounds(a) if (a.depth or a.budget or a.context_size) else None
    r = prove(logic, ctx, goal, b, theory=theory or None)
    status = {ProofStatus.PROVED: "Holds", ProofStatus.REFUTED: "Fails", ProofStatus.UNKNOWN: "Unknown"}[r.status]
    out = {"status": r.status.value, "logic": logic.value, "stats": _clean(r.stats)}
    if theory:
        out["theory"] = [render(t) for t in theory]
    if r.proof is not None:
        out["proof"] = r.proof.to_dict(logic)
    return _finish(a, status, out, r.status.value)


def cmd_support(a) -> int:
    logic, base = _base(a)
    j = make_judgment(logic, base, a.res, a.ctx, a.goal)
    refute = RefuteBounds(max_instances=a.instances) if a.instances else None
    v = check_support(j, a.strategy, _bounds(a), refute, _vocab(a))
    out = v.to_json()
    out["judgment"] = j.render()
    return _finish(a, v.status.value, out, str(v))


def cmd_check(a) -> int:
    m = read_model(a.model)
    _logic(a, m)
    strategy = Strategy.coerce(a.strategy)
    rep = evaluate_model(m, _bounds(a), strategy)
    if a.json:
        print(json.dumps(rep.to_json(), indent=2, sort_keys=True, ensure_ascii=False))
    else:
        print(rep.render_text())
    if rep.mismatches:
        return MISMATCH
    if a.strict and rep.summary["Unknown"]:
        return UNKNOWN
    return OK


def cmd_simulate(a) -> int:
    logic = _logic(a)
    if logic is Logic.BI:
        raise UsageError("simulation bases are built for IPL and IMALL only")
    ctx = _formula_ctx(logic, a.ctx)
    theory = [parse_formula(t, logic) for t in a.theory]
    goal = parse_formula(a.goal, logic)
    base, enc = build_simulation_base(ctx + theory + [goal], logic)
    rec = check_completeness_instance(ctx, goal, logic, _bounds(a), theory=theory)
    status = "Unknown" if rec.agree is None else "Holds" if rec.agree else "Fails"
    out = {"record": rec.to_json(), "encoding": enc.to_json(), "rules": base.describe()}
    lines = [f"{v} := {k}" for k, v in enc.to_json().items() if k != v]
    lines += base.describe()
    lines.append(f"prover {rec.prover}; simulation {rec.simulation}; agree {rec.agree}")
    return _finish(a, status, out, "\n".join(lines))


def _clean(stats: dict) -> dict:
    return {k: v for k, v in sorted(stats.items()) if k != "elapsed" and isinstance(v, (int, float, str, bool))}


COMMANDS = {
    "parse": cmd_parse,
    "derive": cmd_derive,
    "oracle": cmd_oracle,
    "prove": cmd_prove,
    "support": cmd_support,
    "check": cmd_check,
    "simulate": cmd_simulate,
}


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    try:
        a = ap.parse_args(argv)
    except SystemExit as exc:
        return USAGE if exc.code else OK
    try:
        return COMMANDS[a.command](a)
    except ModelError as exc:
        print(f"rsw: {exc}", file=sys.stderr)
    except (ParseError, LogicMismatch) as exc:
        print(f"rsw: parse error: {exc}", file=sys.stderr)
    except (UsageError, ValueError, KeyError) as exc:
        print(f"rsw: {exc}", file=sys.stderr)
    return USAGE


if __name__ == "__main__":
    sys.exit(main())
