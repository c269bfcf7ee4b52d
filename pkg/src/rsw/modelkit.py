"""Model files (``.rsm``): a vocabulary, bases, resources, policies and the
judgments to evaluate against them.

Format, one declaration per line (``#`` starts a comment)::

    logic BI
    atoms p o fob s_acc
    base B {
      forall U . forall x . U(s_acc) |- x => U(p , o) |- x
    }
    base All = B + C                 # union of named bases
    resource R = p , o               # named resource (bunch or multiset)
    policy G = (p * o) -* s_acc      # named formula, upper-case name
    judgment grant : B ; R |- s_acc  expect holds

Judgment bodies:

* ``BASE ; RES |- GOAL``: support with resource RES (IMALL multiset, BI
  bunch of atoms; IPL takes a context of formulas here instead).  With an
  atomic goal and atomic resource this is plain derivability.
* ``BASE ; RES | CTX |- GOAL``: support with a context of formulas.  A BI
  resource is then a contextual bunch with hole ``_`` (default: ``_``).
* ``CTX |- GOAL``: no base, i.e. support in every base (validity).
"""

from __future__ import annotations

import re
import time
from dataclasses import dataclass, field
from typing import Any

from rsw.bases import base_union, make_base
from rsw.bunches import HOLE, MUL_UNIT, Leaf, canon_leaves, canonical, from_canonical, map_leaves
from rsw.derivability import SearchBounds, Status, derive
from rsw.formulas import Atom, Formula, Logic, LogicMismatch, atoms_of, is_atom_name
from rsw.parser import ParseError, parse_bunch, parse_formula, parse_formula_bunch, render
from rsw.support import (
    Judgment,
    RefuteBounds,
    Strategy,
    check_support,
    check_validity,
    render_judgment,
)

EXPECT = {
    "holds": "Holds",
    "fails": "Fails",
    "unknown": "Unknown",
    "derivable": "Holds",
    "notderivable": "Fails",
    "proved": "Holds",
    "refuted": "Fails",
}


class ModelError(ValueError):
    """Load error with a 1-based source position."""

    def __init__(self, message: str, line: int, column: int = 1):
        self.message, self.line, self.column = message, line, column
        super().__init__(f"line {line}, column {column}: {message}")


@dataclass
class ModelJudgment:
    name: str
    kind: str  # derive | support | validity
    logic: Logic = Logic.IPL
    judgment: Judgment | None = None
    context: Any = None  # validity only
    theory: tuple = ()  # validity only, IMALL
    goal: Formula | None = None
    expect: str | None = None
    line: int = 0

    def render(self) -> str:
        if self.kind == "validity":
            ctx = _render_ctx(self.context)
            if self.theory:
                ctx = ("{" + ", ".join(render(t) for t in self.theory) + "} " + ctx).strip()
            return f"{ctx} |= {render(self.goal)}".strip()
        if self.kind == "derive":
            j = self.judgment
            return f"{_render_res(j)} |-[{j.base.name}] {render(j.goal)}"
        return render_judgment(self.judgment)


@dataclass
class Model:
    logic: Logic
    vocabulary: tuple = ()
    bases: dict = field(default_factory=dict)
    resources: dict = field(default_factory=dict)
    policies: dict = field(default_factory=dict)
    judgments: list = field(default_factory=list)
    source: str = ""

    def judgment(self, name: str) -> ModelJudgment:
        for j in self.judgments:
            if j.name == name:
                return j
        raise KeyError(name)


# ---------------------------------------------------------------------------
# loading

_NAME = r"[A-Za-z][A-Za-z0-9_]*"
_DECL = re.compile(r"^(?P<kw>logic|atoms|base|resource|policy|judgment)\b")


class _Loader:
    def __init__(self, text: str):
        self.lines = text.splitlines()
        self.logic: Logic | None = None
        self.atoms: set[str] | None = None
        self.m: Model | None = None
        self.names: dict[str, tuple[str, int]] = {}

    def run(self) -> Model:
        i = 0
        while i < len(self.lines):
            raw = self.lines[i]
            text = _strip_comment(raw)
            i += 1
            if not text.strip():
                continue
            col = len(text) - len(text.lstrip()) + 1
            d = _DECL.match(text.strip())
            if d is None:
                raise ModelError(f"expected a declaration, found {text.strip().split()[0]!r}", i, col)
            kw = d.group("kw")
            rest = text.strip()[len(kw):]
            rcol = col + len(kw)
            if kw != "logic" and self.m is None:
                raise ModelError("the first declaration must be 'logic'", i, col)
            if kw == "logic":
                self.decl_logic(rest, i, rcol)
            elif kw == "atoms":
                self.decl_atoms(rest, i, rcol)
            elif kw == "base":
                i = self.decl_base(rest, i, rcol)
            elif kw == "resource":
                self.decl_resource(rest, i, rcol)
            elif kw == "policy":
                self.decl_policy(rest, i, rcol)
            else:
                self.decl_judgment(rest, i, rcol)
        if self.m is None:
            raise ModelError("empty model: expected 'logic'", 1)
        vocab = set(self.atoms or ())
        for b in self.m.bases.values():
            vocab |= b.atoms()
        self.m.vocabulary = tuple(sorted(vocab))
        return self.m

    # -- helpers

    def claim(self, name: str, what: str, line: int, col: int) -> None:
        if name in self.names:
            kind, at = self.names[name]
            raise ModelError(f"{name!r} is already declared as a {kind} on line {at}", line, col)
        self.names[name] = (what, line)

    def check_atoms(self, atoms, line: int, col: int, text: str = "") -> None:
        if self.atoms is None:
            return
        for a in sorted(atoms):
            if a not in self.atoms:
                c = col + max(0, _find_word(text, a)) if text else col
                raise ModelError(f"unknown atom {a!r}", line, c)

    def parse(self, fn, text: str, line: int, col: int):
        """Run a parser on ``text`` (found at ``col``), mapping its errors."""
        try:
            return fn(text)
        except ParseError as exc:
            c = col + exc.pos if exc.text == text else col
            raise ModelError(str(exc).split(" at column")[0], line, c) from None
        except LogicMismatch as exc:
            raise ModelError(f"logic mismatch: {exc}", line, col) from None
        except KeyError as exc:
            raise ModelError(f"unknown name {exc.args[0]!r}", line, col) from None
        except ValueError as exc:
            raise ModelError(str(exc), line, col) from None

    # -- declarations

    def decl_logic(self, rest: str, line: int, col: int) -> None:
        if self.m is not None:
            raise ModelError("'logic' is declared twice", line, col)
        word = rest.strip()
        try:
            self.logic = Logic.coerce(word)
        except ValueError:
            raise ModelError(f"unknown logic {word!r} (expected IPL, IMALL or BI)", line, col + 1) from None
        self.m = Model(self.logic)

    def decl_atoms(self, rest: str, line: int, col: int) -> None:
        if self.atoms is None:
            self.atoms = set()
        for tok in re.finditer(r"[^\s,]+", rest):
            a = tok.group()
            if not is_atom_name(a) or a[0].isupper():
                raise ModelError(f"{a!r} is not an atom name", line, col + tok.start())
            self.atoms.add(a)

    def decl_base(self, rest: str, line: int, col: int) -> int:
        m = re.match(rf"\s*({_NAME})\s*", rest)
        if m is None:
            raise ModelError("expected a base name", line, col + 1)
        name = m.group(1)
        self.claim(name, "base", line, col + m.start(1))
        tail = rest[m.end():]
        tcol = col + m.end()
        if tail.startswith("="):
            parts = tail[1:]
            base = None
            for tok in re.finditer(r"[^\s+]+", parts):
                ref = tok.group()
                if ref not in self.m.bases:
                    raise ModelError(f"unknown base {ref!r}", line, tcol + 1 + tok.start())
                base = self.m.bases[ref] if base is None else base_union(base, self.m.bases[ref])
            if base is None:
                raise ModelError("expected base names after '='", line, tcol + 1)
            if re.search(r"[^\s+A-Za-z0-9_]", parts):
                raise ModelError("a composite base is a '+'-separated list of base names", line, tcol + 1)
            self.m.bases[name] = base_union(base, base, name)
            return line
        if not tail.startswith("{"):
            raise ModelError("expected '{' or '=' after the base name", line, tcol)
        body = tail[1:]
        rules: list[tuple[str, int, int]] = []
        cur, cur_line, cur_col = body, line, tcol + 1
        while True:
            close = _closing_brace(cur)
            chunk = cur if close < 0 else cur[:close]
            if chunk.strip():
                lead = len(chunk) - len(chunk.lstrip())
                rules.append((chunk.strip(), cur_line, cur_col + lead))
            if close >= 0:
                if cur[close + 1:].strip():
                    raise ModelError("unexpected text after '}'", cur_line, cur_col + close + 1)
                break
            if cur_line >= len(self.lines):
                raise ModelError(f"base {name!r} is not closed with '}}'", line, col)
            cur = _strip_comment(self.lines[cur_line])
            cur_line += 1
            cur_col = 1
        parsed = []
        for text, ln, c in rules:
            r = self.parse(lambda t: make_base(self.logic, [t]), text, ln, c)
            self.check_atoms(r.atoms(), ln, c, text)
            parsed.append(r)
        base = make_base(self.logic, (), name)
        for r in parsed:
            base = base_union(base, r, name)
        self.m.bases[name] = base
        return cur_line

    def split_def(self, rest: str, line: int, col: int, what: str):
        m = re.match(rf"\s*({_NAME})\s*=", rest)
        if m is None:
            raise ModelError(f"expected '{what} NAME = ...'", line, col + 1)
        name = m.group(1)
        return name, col + m.start(1), rest[m.end():], col + m.end()

    def decl_resource(self, rest: str, line: int, col: int) -> None:
        name, ncol, body, bcol = self.split_def(rest, line, col, "resource")
        if not name[0].isupper():
            raise ModelError("resource names start with an upper-case letter", line, ncol)
        self.claim(name, "resource", line, ncol)
        self.m.resources[name] = self.resource(body, line, bcol, hole=False)

    def decl_policy(self, rest: str, line: int, col: int) -> None:
        name, ncol, body, bcol = self.split_def(rest, line, col, "policy")
        if not name[0].isupper():
            raise ModelError("policy names start with an upper-case letter", line, ncol)
        self.claim(name, "policy", line, ncol)
        f = self.formula(body, line, bcol)
        self.m.policies[name] = f

    def formula(self, text: str, line: int, col: int) -> Formula:
        f = self.parse(lambda t: parse_formula(t, self.logic, self.m.policies), text, line, col)
        self.check_atoms(atoms_of(f), line, col, text)
        return f

    def resource(self, text: str, line: int, col: int, hole: bool):
        """A resource term: IMALL multiset or BI bunch of atoms (with names
        of declared resources spliced in)."""
        if self.logic is Logic.IPL:
            raise ModelError("IPL judgments take no resources", line, col)
        body = text.strip()
        if self.logic is Logic.IMALL:
            out: list[str] = []
            for tok in re.finditer(r"[^\s,]+", text):
                w = tok.group()
                if w in self.m.resources:
                    out.extend(self.m.resources[w])
                elif w == "e*":
                    continue
                elif is_atom_name(w) and not w[0].isupper():
                    self.check_atoms([w], line, col + tok.start())
                    out.append(w)
                else:
                    raise ModelError(f"unknown resource {w!r}", line, col + tok.start())
            return tuple(sorted(out))
        if not body:
            return HOLE if hole else MUL_UNIT

        def item(s: str, pos: int):
            if s in self.m.resources:
                return "@" + s
            if not is_atom_name(s) or s[0].isupper():
                raise ParseError(f"unknown resource {s!r}", text, pos)
            self.check_atoms([s], line, col + pos)
            return s

        b = self.parse(lambda t: parse_bunch(t, item=item, hole="_" if hole else None), text, line, col)
        b = map_leaves(b, lambda x: from_canonical(self.m.resources[x[1:]]) if x.startswith("@") else Leaf(x))
        return canonical(b)

    def context(self, text: str, line: int, col: int):
        if not text.strip():
            return None if self.logic is Logic.BI else []
        if self.logic is Logic.BI:
            b = self.parse(lambda t: parse_formula_bunch(t, self.logic, self.m.policies), text, line, col)
            c = canonical(b)
            for f in canon_leaves(c):
                self.check_atoms(atoms_of(f), line, col, text)
            return c
        out, offset = [], 0
        for piece in _top_commas(text):
            at = text.index(piece, offset)
            out.append(self.formula(piece, line, col + at))
            offset = at + len(piece)
        return out

    def decl_judgment(self, rest: str, line: int, col: int) -> None:
        m = re.match(rf"\s*({_NAME})\s*:", rest)
        if m is None:
            raise ModelError("expected 'judgment NAME : ...'", line, col + 1)
        name = m.group(1)
        ncol = col + m.start(1)
        if any(j.name == name for j in self.m.judgments):
            raise ModelError(f"judgment {name!r} is declared twice", line, ncol)
        body, bcol = rest[m.end():], col + m.end()
        expect = None
        e = re.search(r"\bexpect\s+(\S+)\s*$", body)
        if e:
            word = e.group(1).lower()
            if word not in EXPECT:
                raise ModelError(f"unknown expectation {e.group(1)!r}", line, bcol + e.start(1))
            expect = EXPECT[word]
            body = body[: e.start()]
        turn = body.rfind("|-")
        if turn < 0:
            raise ModelError("a judgment needs '|-'", line, bcol)
        left, goal_text = body[:turn], body[turn + 2:]
        goal = self.formula(goal_text, line, bcol + turn + 2)
        mj = ModelJudgment(name, "support", self.logic, goal=goal, expect=expect, line=line)
        semi = left.find(";")
        if semi < 0:
            mj.kind = "validity"
            lc = left.lstrip()
            if lc.startswith("{"):
                at = bcol + len(left) - len(lc)
                close = _closing_brace(lc[1:])
                if self.logic is not Logic.IMALL:
                    raise ModelError("a reusable theory {...} is only available for IMALL", line, at)
                if close < 0:
                    raise ModelError("unclosed '{'", line, at)
                th = self.context(lc[1:close + 1], line, at + 1)
                mj.theory = tuple(th)
                left, bcol = lc[close + 2:], at + close + 2
            mj.context = self.context(left, line, bcol)
            self.m.judgments.append(mj)
            return
        bname = left[:semi].strip()
        if bname not in self.m.bases:
            raise ModelError(f"unknown base {bname!r}", line, bcol + _find_word(left, bname))
        base = self.m.bases[bname]
        after, acol = left[semi + 1:], bcol + semi + 1
        bar = _find_bar(after)
        try:
            if bar < 0:
                if self.logic is Logic.IPL:
                    ctx = self.context(after, line, acol)
                    j = Judgment(self.logic, base, None, ctx, goal)
                    atomic = all(isinstance(f, Atom) for f in ctx)
                else:
                    res = self.resource(after, line, acol, hole=False)
                    j = Judgment(self.logic, base, res, None, goal)
                    atomic = True
            else:
                ctx = self.context(after[bar + 1:], line, acol + bar + 1)
                if self.logic is Logic.IPL:
                    if after[:bar].strip():
                        raise ModelError("IPL judgments take no resources", line, acol)
                    res = None
                else:
                    res = self.resource(after[:bar], line, acol, hole=self.logic is Logic.BI and ctx is not None)
                j = Judgment(self.logic, base, res, ctx, goal)
                atomic = False
        except ModelError:
            raise
        except ValueError as exc:
            raise ModelError(str(exc), line, acol) from None
        mj.judgment = j
        if atomic and isinstance(goal, Atom):
            mj.kind = "derive"
        self.m.judgments.append(mj)


def load_model(source: str) -> Model:
    """Parse and resolve model text; raises ModelError with line/column."""
    m = _Loader(source).run()
    m.source = source
    return m


def load_model_file(path) -> Model:
    with open(path, encoding="utf-8") as fh:
        return load_model(fh.read())


FIXTURES = ("vending", "mfa", "airport")


def fixture_text(name: str) -> str:
    """Source of a bundled fixture model."""
    from importlib import resources

    if name not in FIXTURES:
        raise KeyError(f"no fixture {name!r} (have {', '.join(FIXTURES)})")
    return (resources.files("rsw") / "fixtures" / f"{name}.rsm").read_text(encoding="utf-8")


def _strip_comment(line: str) -> str:
    i = line.find("#")
    return line if i < 0 else line[:i]


def _find_word(text: str, word: str) -> int:
    m = re.search(rf"(?<![A-Za-z0-9_]){re.escape(word)}(?![A-Za-z0-9_])", text)
    return m.start() if m else 0


def _closing_brace(text: str) -> int:
    """Index of the first unmatched '}' (IMALL rules use braces for groups)."""
    depth = 0
    for i, ch in enumerate(text):
        if ch == "{":
            depth += 1
        elif ch == "}":
            if depth == 0:
                return i
            depth -= 1
    return -1


def _find_bar(text: str) -> int:
    for i, ch in enumerate(text):
        if ch == "|" and text[i + 1:i + 2] != "-":
            return i
    return -1


def _top_commas(text: str) -> list[str]:
    out, depth, cur = [], 0, []
    for ch in text:
        depth += (ch == "(") - (ch == ")")
        if ch == "," and depth == 0:
            out.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    out.append("".join(cur))
    return [s.strip() for s in out if s.strip()]


def _render_res(j: Judgment) -> str:
    from rsw.bases import render_canon

    if j.logic is Logic.BI:
        return render_canon(j.resource)
    if j.logic is Logic.IMALL:
        return ", ".join(j.resource) or "e*"
    return ", ".join(sorted(render(f) for f in j.context)) or "∅"


def _render_ctx(ctx) -> str:
    if ctx is None:
        return ""
    if isinstance(ctx, tuple) and ctx and isinstance(ctx[0], str):
        from rsw.bunches import from_canonical
        from rsw.parser import render_bunch

        return render_bunch(from_canonical(ctx), item=lambda f: render(f) if isinstance(f, Atom) else f"({render(f)})")
    return ", ".join(render(f) for f in ctx)


# ---------------------------------------------------------------------------
# evaluation


@dataclass
class ReportEntry:
    name: str
    kind: str
    judgment: str
    status: str  # Holds | Fails | Unknown
    verdict: str  # engine answer, e.g. Derivable
    method: str | None
    expected: str | None
    elapsed: float
    bounds: dict
    detail: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool | None:
        return None if self.expected is None else self.expected == self.status

    def to_json(self, timing: bool = True) -> dict:
        out = {
            "name": self.name,
            "kind": self.kind,
            "judgment": self.judgment,
            "status": self.status,
            "verdict": self.verdict,
            "method": self.method,
            "expected": self.expected,
            "ok": self.ok,
            "bounds": self.bounds,
            "detail": self.detail,
        }
        if timing:
            out["elapsed"] = self.elapsed
        return out


@dataclass
class Report:
    logic: Logic
    entries: list = field(default_factory=list)

    @property
    def summary(self) -> dict:
        out = {"judgments": len(self.entries), "Holds": 0, "Fails": 0, "Unknown": 0, "mismatches": 0, "unchecked": 0}
        for e in self.entries:
            out[e.status] += 1
            if e.ok is False:
                out["mismatches"] += 1
            elif e.ok is None:
                out["unchecked"] += 1
        return out

    @property
    def mismatches(self) -> list:
        return [e for e in self.entries if e.ok is False]

    def to_json(self, timing: bool = True) -> dict:
        return {
            "logic": self.logic.value,
            "judgments": [e.to_json(timing) for e in self.entries],
            "summary": self.summary,
        }

    def render_text(self) -> str:
        width = max((len(e.name) for e in self.entries), default=4)
        lines = []
        for e in self.entries:
            how = f" ({e.method})" if e.method else ""
            if e.ok is None:
                tag = ""
            else:
                tag = "  ok" if e.ok else f"  MISMATCH (expected {e.expected})"
            lines.append(f"{e.name:<{width}}  {e.verdict}{how}{tag}    {e.judgment}")
        s = self.summary
        lines.append(
            f"{s['judgments']} judgments: {s['Holds']} Holds, {s['Fails']} Fails, "
            f"{s['Unknown']} Unknown; {s['mismatches']} mismatches"
        )
        return "\n".join(lines)


_DERIVE_STATUS = {Status.DERIVABLE: "Holds", Status.NOT_DERIVABLE: "Fails", Status.EXHAUSTED: "Unknown"}


def evaluate_judgment(
    mj: ModelJudgment,
    bounds: SearchBounds | None = None,
    strategy: Strategy | str = Strategy.AUTO,
    refute: RefuteBounds | None = None,
    vocabulary=(),
) -> ReportEntry:
    bounds = bounds or SearchBounds()
    start = time.perf_counter()
    if mj.kind == "derive":
        j = mj.judgment
        ctx = j.resource if j.logic is not Logic.IPL else frozenset(f.name for f in j.context)
        r = derive(j.base, ctx, j.goal.name, bounds)
        detail = {"stats": {k: v for k, v in sorted(r.stats.items()) if k != "elapsed"}}
        if r.tree is not None:
            detail["tree_size"] = r.tree.size()
        bj = {"depth": bounds.max_depth, "context_size": bounds.max_context_size, "budget": bounds.node_budget}
        status, verdict, method = _DERIVE_STATUS[r.status], r.status.value, None
    else:
        if mj.kind == "validity":
            v = check_validity(mj.logic, mj.context, mj.goal, bounds, mj.theory)
        else:
            v = check_support(mj.judgment, strategy, bounds, refute, vocabulary)
        status = v.status.value
        verdict = str(v).split(" (")[0]
        method = v.method.value if v.method else None
        bj = v.bounds
        detail = {k: x for k, x in v.to_json().items() if k not in ("status", "method", "bounds", "elapsed")}
    elapsed = round(time.perf_counter() - start, 4)
    return ReportEntry(mj.name, mj.kind, mj.render(), status, verdict, method, mj.expect, elapsed, bj, detail)


def evaluate_model(
    m: Model,
    bounds: SearchBounds | None = None,
    strategy: Strategy | str = Strategy.AUTO,
    refute: RefuteBounds | None = None,
) -> Report:
    """Evaluate every judgment in declaration order."""
    rep = Report(m.logic)
    for mj in m.judgments:
        rep.entries.append(evaluate_judgment(mj, bounds, strategy, refute, m.vocabulary))
    return rep
