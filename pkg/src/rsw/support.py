"""Support judgments ``Γ ⊩_B^S φ`` for IPL, IMALL and BI.

Evaluation unfolds the definitional clauses exactly where they are
definitional (atoms, implications, additive conjunction, atomic contexts) and
stops at the universal clauses, which quantify over every extension of the
base.  Those are handled per strategy:

* prover-backed: if the sequent obtained by reading resources as atoms is
  provable, the judgment holds in every base (soundness).
* refute: bounded enumeration of extensions, resources and atoms, looking
  for an instance whose antecedents hold and whose conclusion fails.  The
  instance becomes a replayable witness.  Enumeration never yields Holds.
* internalize: translate the base rules into formulas, add them to the
  context and ask the prover.  A positive answer is a heuristic Holds.

Atomic contexts are folded away using the atomic-context lemma of the
underlying semantics: in IPL, ``P ⊩_B φ`` iff ``⊩_{B+P} φ`` where ``B+P`` adds
an axiom per atom; in IMALL, ``P ⊩_B^S φ`` iff ``⊩_B^{S,P} φ``; in BI,
``P ⊩_B^{R(·)} φ`` iff ``⊩_B^{R(P)} φ``.

Clauses quantifying over "every atom" are enumerated over the judgment's
vocabulary, which always includes one fresh atom.  The (⊥) and (0) clauses
are decided with that fresh atom: no finite base derives it.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from enum import Enum
from itertools import combinations_with_replacement, product
from typing import Any, Iterable

from rsw.bases import (
    AtomicRuleBI,
    AtomicRuleIMALL,
    AtomicRuleIPL,
    Base,
    EnumerationTooLarge,
    ExtensionBounds,
    enumerate_extensions,
    instantiate_schema,
    multiset,
    render_canon,
    schema_bindings,
)
from rsw.bunches import (
    HOLE,
    MUL_UNIT,
    Bunch,
    Canon,
    ContextualBunch,
    add,
    canon_atoms,
    canon_ge,
    canon_leaves,
    canonical,
    contexts,
    enumerate_canon,
    from_canonical,
    leaf,
    map_canon_leaves,
    mul,
    plug,
)
from rsw.derivability import (
    DNode,
    SearchBounds,
    Status,
    check_derivation,
    derive_bi,
    derive_imll,
    derive_ipl,
)
from rsw.formulas import (
    And,
    Atom,
    Bottom,
    Formula,
    Imp,
    Lolli,
    Logic,
    MTop,
    One,
    Or,
    Plus,
    Star,
    Tensor,
    Top,
    Wand,
    With,
    Zero,
    atoms_of,
    check_formula,
)
from rsw.parser import parse_bunch, parse_formula, parse_formula_bunch, render, render_bunch
from rsw.provers import PNode, ProofStatus, check_proof, prove

TENSOR_READING = "conclusion at the extension X"
ATOM_QUANTIFIER = "every-atom clauses enumerate the vocabulary; (⊥) and (0) use a fresh atom"


class SupportStatus(str, Enum):
    HOLDS = "Holds"
    FAILS = "Fails"
    UNKNOWN = "Unknown"


class Method(str, Enum):
    ATOMIC = "AtomicReduction"
    PROVER = "ProverBacked"
    INTERNALIZED = "Internalized"


class Strategy(str, Enum):
    AUTO = "auto"
    REFUTE = "refute"
    INTERNALIZE = "internalize"
    EXACT = "exact"

    @classmethod
    def coerce(cls, s) -> "Strategy":
        if isinstance(s, cls):
            return s
        try:
            return cls(str(s).lower())
        except ValueError:
            raise ValueError(f"unknown strategy {s!r}; expected auto, refute or internalize") from None


# ---------------------------------------------------------------------------
# judgments


def _has_hole(c: Canon) -> bool:
    if c[0] == "h":
        return True
    return c[0] in "AM" and any(_has_hole(k) for k in c[1])


def _holes(c: Canon) -> int:
    if c[0] == "h":
        return 1
    return sum(_holes(k) for k in c[1]) if c[0] in "AM" else 0


def _atom_canon(x) -> Canon:
    if isinstance(x, ContextualBunch):
        return canonical(x.shape)
    if isinstance(x, Bunch):
        return canonical(x)
    if isinstance(x, str):
        return canonical(parse_bunch(x, hole="_"))
    return x


@dataclass(frozen=True)
class Judgment:
    """``context ⊩_base^resource goal``.

    IPL: no resource, the context is a set of formulas.  IMALL: the resource
    is a multiset of atoms, the context a multiset of formulas.  BI: with an
    empty context the resource is a bunch of atoms S; with a non-empty context
    it is a contextual bunch R(·) (default: the bare hole).
    """

    logic: Logic
    base: Base
    resource: Any = None
    context: Any = None
    goal: Formula = None

    def __post_init__(self) -> None:
        logic = Logic.coerce(self.logic)
        object.__setattr__(self, "logic", logic)
        if self.base.logic is not logic:
            raise ValueError(f"a {logic.value} judgment needs a {logic.value} base")
        if not isinstance(self.goal, Formula):
            raise ValueError("the goal must be a formula")
        check_formula(self.goal, logic)
        if logic is Logic.IPL:
            if self.resource:
                raise ValueError("IPL judgments carry no resource")
            ctx = frozenset(self.context or ())
            for f in ctx:
                check_formula(f, logic)
            object.__setattr__(self, "resource", None)
            object.__setattr__(self, "context", ctx)
        elif logic is Logic.IMALL:
            res = self.resource or ()
            if isinstance(res, str):
                raise ValueError("an IMALL resource is a sequence of atom names")
            object.__setattr__(self, "resource", multiset(res))
            ctx = tuple(sorted(self.context or ()))
            for f in ctx:
                check_formula(f, logic)
            object.__setattr__(self, "context", ctx)
        else:
            self._normalize_bi()

    def _normalize_bi(self) -> None:
        ctx = self.context
        if isinstance(ctx, Bunch):
            ctx = canonical(ctx)
        elif isinstance(ctx, (list, frozenset, set)):
            raise ValueError("a BI context must be a bunch of formulas")
        if ctx == MUL_UNIT:
            ctx = None
        res = self.resource
        if res is None:
            res = MUL_UNIT if ctx is None else HOLE
        res = _atom_canon(res)
        for a in canon_leaves(res):
            if not isinstance(a, str):
                raise ValueError("a BI resource is a bunch of atoms")
        holes = _holes(res)
        if ctx is None:
            if holes == 1:
                res = plug(res, MUL_UNIT)
            elif holes:
                raise ValueError("a resource frame has exactly one hole")
        else:
            if holes != 1:
                raise ValueError("with a non-empty context the BI resource is a contextual bunch R(·)")
            for f in canon_leaves(ctx):
                if not isinstance(f, Formula):
                    raise ValueError("a BI context must be a bunch of formulas")
                check_formula(f, Logic.BI)
        object.__setattr__(self, "resource", res)
        object.__setattr__(self, "context", ctx)

    def atoms(self) -> set[str]:
        out = set(atoms_of(self.goal))
        if self.logic is Logic.BI:
            out |= canon_atoms(self.resource)
            if self.context is not None:
                for f in canon_leaves(self.context):
                    out |= atoms_of(f)
        else:
            out |= set(self.resource or ())
            for f in self.context:
                out |= atoms_of(f)
        return out

    def with_base(self, b: Base) -> "Judgment":
        return replace(self, base=b)

    def render(self) -> str:
        return render_judgment(self)


def render_judgment(j: Judgment) -> str:
    goal = render(j.goal)
    if j.logic is Logic.IPL:
        ctx = ", ".join(sorted(render(f) for f in j.context))
        return f"{ctx} |= {goal}".strip()
    if j.logic is Logic.IMALL:
        ctx = ", ".join(render(f) for f in j.context)
        res = ", ".join(j.resource)
        return f"{ctx} |=[{res}] {goal}".strip()
    res = render_bunch(from_canonical(j.resource))
    if j.context is None:
        return f"|=[{res}] {goal}"
    ctx = render_bunch(from_canonical(j.context), item=lambda f: render(f) if isinstance(f, Atom) else f"({render(f)})")
    return f"{ctx} |=[{res}] {goal}"


def make_judgment(logic, base: Base, resource=None, context=None, goal=None) -> Judgment:
    """Build a judgment, parsing any string components in ``logic``'s syntax.

    BI resources are bunch strings whose hole is written ``_``.
    """
    logic = Logic.coerce(logic)
    if isinstance(goal, str):
        goal = parse_formula(goal, logic)
    if logic is Logic.BI:
        if isinstance(context, str):
            context = None if not context.strip() else parse_formula_bunch(context, logic)
        if isinstance(resource, str):
            resource = None if not resource.strip() else canonical(parse_bunch(resource, hole="_"))
    else:
        if isinstance(context, str):
            context = [parse_formula(t, logic) for t in _split_commas(context)]
        if isinstance(resource, str):
            resource = [t.strip() for t in resource.replace(",", " ").split()]
    return Judgment(logic, base, resource, context, goal)


def _split_commas(text: str) -> list[str]:
    out, depth, cur = [], 0, []
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == "," and depth == 0:
            out.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    out.append("".join(cur))
    return [t for t in (s.strip() for s in out) if t]


def fresh_atom(used: Iterable[str]) -> str:
    used = set(used)
    name = "fresh"
    while name in used:
        name += "_"
    return name


def judgment_vocabulary(j: Judgment, declared: Iterable[str] = ()) -> tuple[str, ...]:
    """Declared atoms, the atoms of base and judgment, and one fresh atom."""
    atoms = set(declared) | j.base.atoms() | j.atoms()
    return tuple(sorted(atoms | {fresh_atom(atoms)}))


# ---------------------------------------------------------------------------
# verdicts, evidence and witnesses


@dataclass(frozen=True)
class Evidence:
    """Replayable justification of a Holds verdict."""

    kind: str  # derivation | proof | unit | conj
    logic: Logic
    base: Base | None = None
    tree: Any = None
    theory: tuple = ()
    parts: tuple = ()
    note: str = ""

    def to_json(self) -> dict:
        out: dict = {"kind": self.kind}
        if self.note:
            out["note"] = self.note
        if self.base is not None and self.kind == "derivation":
            out["base"] = self.base.describe()
        if isinstance(self.tree, (DNode, PNode)):
            out["tree"] = self.tree.to_dict(self.logic)
        if self.theory:
            out["theory"] = [render(f) for f in self.theory]
        if self.parts:
            out["parts"] = [p.to_json() for p in self.parts]
        return out


def replay_evidence(e: Evidence) -> bool:
    if e.kind == "derivation":
        return check_derivation(e.base, e.tree)
    if e.kind == "proof":
        return check_proof(e.logic, e.tree, theory=e.theory)
    if e.kind == "conj":
        return all(replay_evidence(p) for p in e.parts)
    return e.kind == "unit"


@dataclass(frozen=True)
class Claim:
    judgment: Judgment
    expect: SupportStatus
    witness: "Witness | None" = None

    def to_json(self) -> dict:
        out = {"judgment": self.judgment.render(), "expect": self.expect.value}
        if self.judgment.base.rules or self.judgment.base.schemas:
            out["base"] = self.judgment.base.describe()
        if self.witness is not None:
            out["witness"] = self.witness.to_json()
        return out


@dataclass(frozen=True)
class Witness:
    """An instance of a clause whose antecedent claims hold and whose last
    claim fails."""

    clause: str
    extension: Base
    instantiation: tuple = ()
    claims: tuple = ()

    def failing(self) -> Claim:
        return [c for c in self.claims if c.expect is SupportStatus.FAILS][-1]

    def to_json(self) -> dict:
        return {
            "clause": self.clause,
            "extension": self.extension.describe(),
            "instantiation": dict(self.instantiation),
            "claims": [c.to_json() for c in self.claims],
        }


@dataclass
class Verdict:
    status: SupportStatus
    method: Method | None = None
    evidence: Evidence | None = None
    witness: Witness | None = None
    reason: str = ""
    bounds: dict = field(default_factory=dict)
    vocabulary: tuple = ()
    meta: dict = field(default_factory=dict)

    @property
    def holds(self) -> bool:
        return self.status is SupportStatus.HOLDS

    @property
    def fails(self) -> bool:
        return self.status is SupportStatus.FAILS

    @property
    def heuristic(self) -> bool:
        return self.method is Method.INTERNALIZED

    def __str__(self) -> str:
        if self.holds:
            return f"Holds ({self.method.value})"
        if self.fails:
            return "Fails"
        return f"Unknown ({self.reason})" if self.reason else "Unknown"

    def to_json(self) -> dict:
        out: dict = {
            "status": self.status.value,
            "method": self.method.value if self.method else None,
            "bounds": self.bounds,
            "vocabulary": list(self.vocabulary),
        }
        if self.witness is not None:
            out["witness"] = self.witness.to_json()
        if self.evidence is not None:
            out["evidence"] = self.evidence.to_json()
        if self.reason:
            out["reason"] = self.reason
        if self.heuristic:
            out["heuristic"] = True
        out.update(self.meta)
        return out


def _holds(method: Method, evidence: Evidence) -> Verdict:
    return Verdict(SupportStatus.HOLDS, method, evidence)


def _fails(w: Witness) -> Verdict:
    return Verdict(SupportStatus.FAILS, witness=w)


def _unknown(reason: str) -> Verdict:
    return Verdict(SupportStatus.UNKNOWN, reason=reason)


_RANK = {Method.ATOMIC: 0, Method.PROVER: 1, Method.INTERNALIZED: 2}


# ---------------------------------------------------------------------------
# bounds


@dataclass(frozen=True)
class RefuteBounds:
    """Bounds of the counterexample search.

    ``extensions`` defaults per logic: one new rule with up to two premises
    (IPL, IMALL) or one premise (BI), one hypothesis each.
    """

    extensions: ExtensionBounds | None = None
    max_resource: int = 2
    nesting: int = 2
    max_instances: int = 20_000
    inner_context_size: int = 4

    def extension_bounds(self, logic: Logic) -> ExtensionBounds:
        if self.extensions is not None:
            return self.extensions
        if logic is Logic.BI:
            return ExtensionBounds(max_rules=1, max_premises=1, max_hyps=1)
        return ExtensionBounds(max_rules=1, max_premises=2, max_hyps=1)

    def to_json(self, logic: Logic) -> dict:
        e = self.extension_bounds(logic)
        return {
            "extension_rules": e.max_rules,
            "extension_premises": e.max_premises,
            "extension_hyps": e.max_hyps,
            "max_resource": self.max_resource,
            "nesting": self.nesting,
            "max_instances": self.max_instances,
        }


class _BudgetSpent(Exception):
    pass


# ---------------------------------------------------------------------------
# the evaluator


class _Evaluator:
    def __init__(self, bounds: SearchBounds, refute: RefuteBounds, vocab: tuple):
        self.bounds = bounds
        # instances inside a search use a tighter context bound; a pruned
        # negative answer is Exhausted, never a verdict
        self.inner_bounds = replace(bounds, max_context_size=min(bounds.max_context_size, refute.inner_context_size))
        self.refute = refute
        self.vocab = tuple(vocab)
        self.fresh = fresh_atom(vocab)
        self.cache: dict = {}
        self.proofs: dict = {}
        self.extensions: dict = {}
        self.instances = 0
        self.spent = False
        self.cap_hit = ""

    # -- dispatch --------------------------------------------------------

    def ev(self, j: Judgment, mode: Strategy, nest: int = 0) -> Verdict:
        key = (j, mode, nest)
        v = self.cache.get(key)
        if v is None:
            v = self._ev(j, mode, nest)
            self.cache[key] = v
        return v

    def _ev(self, j: Judgment, mode: Strategy, nest: int) -> Verdict:
        step = {Logic.IPL: self._ipl, Logic.IMALL: self._imall, Logic.BI: self._bi}[j.logic]
        v = step(j, mode, nest)
        return v if v is not None else self._universal(j, mode, nest)

    def _via(self, j: Judgment, sub: Judgment, mode: Strategy, nest: int, clause: str) -> Verdict:
        v = self.ev(sub, mode, nest)
        if v.fails:
            return _fails(Witness(clause, j.base, (), (Claim(sub, SupportStatus.FAILS, v.witness),)))
        return v

    def _conj(self, j: Judgment, subs: list, mode: Strategy, nest: int, clause: str) -> Verdict:
        vs = []
        for s in subs:
            v = self.ev(s, mode, nest)
            if v.fails:
                return _fails(Witness(clause, j.base, (), (Claim(s, SupportStatus.FAILS, v.witness),)))
            vs.append(v)
        if all(v.holds for v in vs):
            method = max((v.method for v in vs), key=_RANK.get)
            return _holds(method, Evidence("conj", j.logic, parts=tuple(v.evidence for v in vs)))
        return _unknown(next(v.reason for v in vs if not v.holds))

    def _atomic(self, j: Judgment, r, base: Base) -> Verdict:
        if r.status is Status.DERIVABLE:
            return _holds(Method.ATOMIC, Evidence("derivation", j.logic, base, r.tree))
        if r.status is Status.NOT_DERIVABLE:
            return _fails(Witness("At", base, (), (Claim(j, SupportStatus.FAILS),)))
        return _unknown(f"derivability search exhausted ({r.stats.get('reason', 'bounds')})")

    def _db(self, nest: int) -> SearchBounds:
        return self.bounds if nest == 0 else self.inner_bounds

    def _fresh_for(self, j: Judgment) -> str:
        return fresh_atom(set(self.vocab) | j.base.atoms() | j.atoms())

    # -- IPL ---------------------------------------------------------------

    def _ipl(self, j: Judgment, mode: Strategy, nest: int) -> Verdict | None:
        ctx, goal, b = j.context, j.goal, j.base
        conj = [f for f in ctx if isinstance(f, And)]
        if conj:
            flat = set(ctx) - set(conj)
            for f in conj:
                flat |= {f.left, f.right}
            return self._via(j, Judgment(j.logic, b, None, flat, goal), mode, nest, "∧ in context")
        if any(isinstance(f, Bottom) for f in ctx):
            return _holds(Method.ATOMIC, Evidence("unit", j.logic, note="no finite base supports ⊥"))
        atoms = sorted(f.name for f in ctx if isinstance(f, Atom))
        if atoms:
            b2 = b.with_rules(AtomicRuleIPL((), a) for a in atoms)
            sub = Judgment(j.logic, b2, None, ctx - {Atom(a) for a in atoms}, goal)
            v = self.ev(sub, mode, nest)
            if v.fails:
                claims = tuple(Claim(Judgment(j.logic, b2, None, (), Atom(a)), SupportStatus.HOLDS) for a in atoms)
                claims += (Claim(sub, SupportStatus.FAILS, v.witness),)
                return _fails(Witness("Inf", b2, (("axioms", ", ".join(atoms)),), claims))
            return v
        if isinstance(goal, Imp):
            return self._via(j, Judgment(j.logic, b, None, ctx | {goal.left}, goal.right), mode, nest, "→")
        if isinstance(goal, And):
            subs = [Judgment(j.logic, b, None, ctx, goal.left), Judgment(j.logic, b, None, ctx, goal.right)]
            return self._conj(j, subs, mode, nest, "∧")
        if ctx:
            return None
        if isinstance(goal, Atom):
            return self._atomic(j, derive_ipl(b, (), goal.name, self._db(nest)), b)
        if isinstance(goal, Bottom):
            sub = Judgment(j.logic, b, None, (), Atom(self._fresh_for(j)))
            return self._via(j, sub, mode, nest, "⊥")
        return None

    # -- IMALL -------------------------------------------------------------

    def _imall(self, j: Judgment, mode: Strategy, nest: int) -> Verdict | None:
        S, ctx, goal, b = j.resource, j.context, j.goal, j.base
        atoms = [f.name for f in ctx if isinstance(f, Atom)]
        if atoms:
            rest = [f for f in ctx if not isinstance(f, Atom)]
            return self._via(j, Judgment(j.logic, b, S + tuple(atoms), rest, goal), mode, nest, "Inf (atomic context)")
        if isinstance(goal, Lolli):
            return self._via(j, Judgment(j.logic, b, S, ctx + (goal.left,), goal.right), mode, nest, "⊸")
        if isinstance(goal, With):
            subs = [Judgment(j.logic, b, S, ctx, goal.left), Judgment(j.logic, b, S, ctx, goal.right)]
            return self._conj(j, subs, mode, nest, "&")
        if ctx:
            return None
        if isinstance(goal, Atom):
            return self._atomic(j, derive_imll(b, S, goal.name, self._db(nest)), b)
        if isinstance(goal, Zero):
            sub = Judgment(j.logic, b, S, (), Atom(self._fresh_for(j)))
            return self._via(j, sub, mode, nest, "0")
        if isinstance(goal, One):
            if not S:
                return _holds(Method.ATOMIC, Evidence("unit", j.logic, note="(1) at the empty resource"))
            x = self._fresh_for(j)
            ext = b.with_rules([AtomicRuleIMALL((), x)])
            claims = (
                Claim(Judgment(j.logic, ext, (), (), Atom(x)), SupportStatus.HOLDS),
                Claim(Judgment(j.logic, ext, S, (), Atom(x)), SupportStatus.FAILS),
            )
            return _fails(Witness("1", ext, (("U", ""), ("p", x)), claims))
        return None

    # -- BI ----------------------------------------------------------------

    def _bi(self, j: Judgment, mode: Strategy, nest: int) -> Verdict | None:
        R, ctx, goal, b = j.resource, j.context, j.goal, j.base
        if ctx is not None:
            fs = canon_leaves(ctx)
            if all(isinstance(f, Atom) for f in fs):
                S = plug(R, map_canon_leaves(ctx, lambda f: leaf(f.name)))
                return self._via(j, Judgment(j.logic, b, S, None, goal), mode, nest, "Inf (atomic context)")
            if R == HOLE and isinstance(goal, Wand):
                sub = Judgment(j.logic, b, HOLE, mul(ctx, leaf(goal.left)), goal.right)
                return self._via(j, sub, mode, nest, "−∗")
            if R == HOLE and isinstance(goal, Imp):
                sub = Judgment(j.logic, b, HOLE, add(ctx, leaf(goal.left)), goal.right)
                return self._via(j, sub, mode, nest, "→")
            return None
        if isinstance(goal, Atom):
            return self._atomic(j, derive_bi(b, R, goal.name, self._db(nest)), b)
        if isinstance(goal, Imp):
            sub = Judgment(j.logic, b, add(R, HOLE), leaf(goal.left), goal.right)
            return self._via(j, sub, mode, nest, "→")
        if isinstance(goal, Wand):
            sub = Judgment(j.logic, b, mul(R, HOLE), leaf(goal.left), goal.right)
            return self._via(j, sub, mode, nest, "−∗")
        if isinstance(goal, Top):
            return _holds(Method.ATOMIC, Evidence("unit", j.logic, note="(⊤): e+ weakens to every resource"))
        if isinstance(goal, MTop):
            if canon_ge(R, MUL_UNIT, True):
                return _holds(Method.ATOMIC, Evidence("unit", j.logic, note="(⊤*): the resource extends e*"))
            x = self._fresh_for(j)
            ext = b.with_rules([AtomicRuleBI((), MUL_UNIT, x)])
            claims = (
                Claim(Judgment(j.logic, ext, MUL_UNIT, None, Atom(x)), SupportStatus.HOLDS),
                Claim(Judgment(j.logic, ext, R, None, Atom(x)), SupportStatus.FAILS),
            )
            return _fails(Witness("⊤*", ext, (("U", "_"), ("p", x)), claims))
        if isinstance(goal, Bottom):
            sub = Judgment(j.logic, b, R, None, Atom(self._fresh_for(j)))
            return self._via(j, sub, mode, nest, "⊥")
        return None

    # -- universal clauses -------------------------------------------------

    def _universal(self, j: Judgment, mode: Strategy, nest: int) -> Verdict:
        v = self._prover_backed(j)
        if v is not None:
            return v
        reason = "universal clause; exact evaluation only"
        if mode in (Strategy.REFUTE, Strategy.AUTO) and nest < self.refute.nesting:
            w = self._search(j, nest)
            if w is not None:
                return _fails(w)
            reason = self.cap_hit or ("instance budget spent" if self.spent else "no counterexample within bounds")
        if mode in (Strategy.INTERNALIZE, Strategy.AUTO):
            v = self._internalize(j)
            if v is not None:
                return v
            reason = reason if mode is Strategy.AUTO else "internalized sequent not proved"
        return _unknown(reason)

    def _prove(self, logic: Logic, ctx, goal: Formula, theory=()):
        key = (logic, ctx if logic is Logic.BI else tuple(sorted(ctx)) if logic is Logic.IMALL else frozenset(ctx), goal, tuple(theory))
        r = self.proofs.get(key)
        if r is None:
            if logic is Logic.BI:
                r = prove(logic, ctx, goal, SearchBounds(max_depth=12, node_budget=20_000))
            elif theory:
                r = prove(logic, list(ctx), goal, SearchBounds(max_depth=12, node_budget=20_000), theory=list(theory))
            else:
                r = prove(logic, list(ctx), goal)
            self.proofs[key] = r
        return r

    def _sequent(self, j: Judgment):
        """The context obtained by reading resources as atomic formulas."""
        if j.logic is Logic.IPL:
            return j.context
        if j.logic is Logic.IMALL:
            return tuple(Atom(a) for a in j.resource) + j.context
        outer = map_canon_leaves(j.resource, lambda a: leaf(Atom(a)))
        return outer if j.context is None else plug(outer, j.context)

    def _prover_backed(self, j: Judgment) -> Verdict | None:
        r = self._prove(j.logic, self._sequent(j), j.goal)
        if r.status is ProofStatus.PROVED:
            return _holds(Method.PROVER, Evidence("proof", j.logic, tree=r.proof, note="valid sequent"))
        return None

    def _internalize(self, j: Judgment) -> Verdict | None:
        # BI schema variables range over the judgment's atoms only; the
        # full vocabulary makes the additive context too wide to search
        theory = internalize_base(j.base, sorted(j.atoms()) if j.logic is Logic.BI else self.vocab)
        if not theory:
            return None
        ctx = self._sequent(j)
        if j.logic is Logic.IPL:
            r = self._prove(j.logic, frozenset(ctx) | frozenset(theory), j.goal)
            th = ()
        elif j.logic is Logic.IMALL:
            r = self._prove(j.logic, ctx, j.goal, tuple(sorted(theory)))
            th = tuple(sorted(theory))
        else:
            # the theory is supported at e*, so it sits beside the context
            # multiplicatively as (Θ ; e*), which weakens away to e*
            r = self._prove(j.logic, mul(ctx, add(MUL_UNIT, *(leaf(f) for f in theory))), j.goal)
            th = ()
        if r.status is ProofStatus.PROVED:
            note = "base rules internalized as formulas (heuristic)"
            return _holds(Method.INTERNALIZED, Evidence("proof", j.logic, tree=r.proof, theory=th, note=note))
        return None

    # -- counterexample search ---------------------------------------------

    def _exts(self, b: Base) -> list:
        out = self.extensions.get(b)
        if out is None:
            eb = self.refute.extension_bounds(b.logic)
            try:
                out = list(enumerate_extensions(b, self.vocab, ExtensionBounds(eb.max_rules, eb.max_premises, eb.max_hyps, tuple(self.vocab), eb.cap, eb.max_groups)))
            except EnumerationTooLarge as e:
                self.cap_hit = str(e)
                out = [b]
            self.extensions[b] = out
        return out

    def _search(self, j: Judgment, nest: int) -> Witness | None:
        if self.spent:
            return None
        inner = Strategy.REFUTE if nest + 1 < self.refute.nesting else Strategy.EXACT
        try:
            for clause, ext, inst, ants, cons in self._instances(j):
                self._tick()
                if not all(self.ev(a, Strategy.EXACT, nest + 1).holds for a in ants):
                    continue
                v = self.ev(cons, inner, nest + 1)
                if v.fails:
                    claims = tuple(Claim(a, SupportStatus.HOLDS) for a in ants)
                    claims += (Claim(cons, SupportStatus.FAILS, v.witness),)
                    return Witness(clause, ext, inst, claims)
        except _BudgetSpent:
            return None
        return None

    def _pool(self, a: Judgment) -> bool:
        self._tick()
        return self.ev(a, Strategy.EXACT, 99).holds

    def _tick(self) -> None:
        self.instances += 1
        if self.instances > self.refute.max_instances:
            self.spent = True
            raise _BudgetSpent

    def _instances(self, j: Judgment):
        L, goal = j.logic, j.goal
        V = self.vocab
        if L is Logic.IPL:
            if j.context:
                for X in self._exts(j.base):
                    ants = [Judgment(L, X, None, (), f) for f in sorted(j.context)]
                    yield "Inf", X, (), ants, Judgment(L, X, None, (), goal)
            elif isinstance(goal, Or):
                for X in self._exts(j.base):
                    for p in V:
                        ants = [Judgment(L, X, None, [goal.left], Atom(p)), Judgment(L, X, None, [goal.right], Atom(p))]
                        yield "∨", X, (("p", p),), ants, Judgment(L, X, None, (), Atom(p))
            return
        if L is Logic.IMALL:
            ms = [m for k in range(self.refute.max_resource + 1) for m in combinations_with_replacement(V, k)]
            S = j.resource
            if j.context:
                for X in self._exts(j.base):
                    pools = []
                    for f in j.context:
                        pools.append([u for u in ms if self._pool(Judgment(L, X, u, (), f))])
                    for us in product(*pools):
                        U = multiset(a for u in us for a in u)
                        ants = [Judgment(L, X, u, (), f) for u, f in zip(us, j.context)]
                        inst = (("U", ", ".join(U)),)
                        yield "Inf", X, inst, ants, Judgment(L, X, S + U, (), goal)
            elif isinstance(goal, (Tensor, Plus)):
                clause = "⊗" if isinstance(goal, Tensor) else "⊕"
                for X in self._exts(j.base):
                    for U in ms:
                        for p in V:
                            if isinstance(goal, Tensor):
                                ants = [Judgment(L, X, U, (goal.left, goal.right), Atom(p))]
                            else:
                                ants = [Judgment(L, X, U, (goal.left,), Atom(p)), Judgment(L, X, U, (goal.right,), Atom(p))]
                            inst = (("U", ", ".join(U)), ("p", p))
                            yield clause, X, inst, ants, Judgment(L, X, S + U, (), Atom(p))
            return
        k = self.refute.max_resource
        R = j.resource
        if j.context is not None:
            bunches = enumerate_canon(k, V, units=True)
            fs = sorted(set(canon_leaves(j.context)))
            for X in self._exts(j.base):
                pools = []
                for f in fs:
                    pools.append([q for q in bunches if self._pool(Judgment(L, X, q, None, f))])
                for qs in product(*pools):
                    table = dict(zip(fs, qs))
                    U = map_canon_leaves(j.context, lambda f: table[f])
                    ants = [Judgment(L, X, q, None, f) for f, q in zip(fs, qs)]
                    inst = (("U", render_canon(U)),)
                    yield "Inf", X, inst, ants, Judgment(L, X, plug(R, U), None, goal)
        elif isinstance(goal, (And, Star, Or)):
            clause = {And: "∧", Star: "∗", Or: "∨"}[type(goal)]
            frames = [HOLE] + contexts(k, V, units=True)
            for X in self._exts(j.base):
                for F in frames:
                    for p in V:
                        if isinstance(goal, Or):
                            ants = [Judgment(L, X, F, leaf(goal.left), Atom(p)), Judgment(L, X, F, leaf(goal.right), Atom(p))]
                        else:
                            join = add if isinstance(goal, And) else mul
                            ants = [Judgment(L, X, F, join(leaf(goal.left), leaf(goal.right)), Atom(p))]
                        inst = (("U", render_canon(F) if F != HOLE else "_"), ("p", p))
                        yield clause, X, inst, ants, Judgment(L, X, plug(F, R), None, Atom(p))


# ---------------------------------------------------------------------------
# internalization of bases


def _chain(cls, fs: list[Formula], unit: Formula | None = None) -> Formula:
    if not fs:
        return unit
    out = fs[-1]
    for f in reversed(fs[:-1]):
        out = cls(f, out)
    return out


def _curry(cls, prems: list[Formula], concl: Formula) -> Formula:
    out = concl
    for p in reversed(prems):
        out = cls(p, out)
    return out


def bunch_formula(c: Canon) -> Formula:
    """Read a canonical bunch of atoms as a BI formula: ``;`` ↦ ∧, ``,`` ↦ ∗."""
    tag = c[0]
    if tag == "a":
        return Atom(c[1])
    if tag == "+":
        return Top()
    if tag == "*":
        return MTop()
    kids = [bunch_formula(k) for k in c[1]]
    return _chain(And if tag == "A" else Star, kids)


def rule_formula(r) -> Formula:
    """Internalize one atomic rule as a formula of its logic."""
    if isinstance(r, AtomicRuleIPL):
        prems = []
        for h, c in r.premises:
            prems.append(Imp(_chain(And, [Atom(a) for a in sorted(h)]), Atom(c)) if h else Atom(c))
        return _curry(Imp, prems, Atom(r.conclusion))
    if isinstance(r, AtomicRuleIMALL):
        groups = []
        for g in r.groups:
            ps = []
            for h, c in g:
                ps.append(Lolli(_chain(Tensor, [Atom(a) for a in h]), Atom(c)) if h else Atom(c))
            groups.append(_chain(With, ps))
        return _curry(Lolli, groups, Atom(r.conclusion))
    prems = [Wand(bunch_formula(c), Atom(p)) for c, p in r.premises]
    return _curry(Imp, prems, Wand(bunch_formula(r.context), Atom(r.conclusion)))


def internalize_base(b: Base, vocab: Iterable[str] = ()) -> list[Formula]:
    """Formulas for the rules of ``b``; BI schemas contribute their
    identity-frame instances over ``vocab``."""
    rules = list(b.sorted_rules())
    for s in b.sorted_schemas():
        for binding in schema_bindings(s, set(vocab) | s.atoms()):
            rules.append(instantiate_schema(s, HOLE, binding))
    return sorted({rule_formula(r) for r in rules})


# ---------------------------------------------------------------------------
# public operations


def _meta(j: Judgment) -> dict:
    meta = {"atom_quantifier": ATOM_QUANTIFIER}
    if j.logic is Logic.IMALL:
        meta["tensor_reading"] = TENSOR_READING
    return meta


def _bounds_json(bounds: SearchBounds, refute: RefuteBounds, logic: Logic) -> dict:
    out = {"depth": bounds.max_depth, "context_size": bounds.max_context_size, "budget": bounds.node_budget}
    out.update(refute.to_json(logic))
    return out


def check_support(
    j: Judgment,
    strategy: Strategy | str = Strategy.AUTO,
    bounds: SearchBounds | None = None,
    refute: RefuteBounds | None = None,
    vocabulary: Iterable[str] = (),
) -> Verdict:
    """Evaluate ``j``; Holds is never concluded from bounded enumeration."""
    strategy = Strategy.coerce(strategy)
    bounds = bounds or SearchBounds()
    refute = refute or RefuteBounds()
    vocab = judgment_vocabulary(j, vocabulary)
    start = time.perf_counter()
    ev = _Evaluator(bounds, refute, vocab)
    v = ev.ev(j, strategy, 0)
    out = replace(v, bounds=_bounds_json(bounds, refute, j.logic), vocabulary=vocab, meta=_meta(j))
    out.meta["instances"] = ev.instances
    out.meta["elapsed"] = round(time.perf_counter() - start, 4)
    return out


def replay_witness(j: Judgment, w: Witness, bounds: SearchBounds | None = None) -> bool:
    """Re-evaluate a witness: antecedent claims hold exactly, the failing
    claim fails exactly (or through its own witness)."""
    if not w.extension.issuperset(j.base) or not w.claims:
        return False
    ev = _Evaluator(bounds or SearchBounds(), RefuteBounds(), judgment_vocabulary(j))
    failing = 0
    for c in w.claims:
        if not c.judgment.base.issuperset(j.base):
            return False
        v = ev.ev(c.judgment, Strategy.EXACT, 0)
        if c.expect is SupportStatus.HOLDS:
            if not v.holds or v.method is Method.INTERNALIZED:
                return False
            continue
        failing += 1
        if v.fails:
            continue
        if v.holds or c.witness is None or not replay_witness(c.judgment, c.witness, bounds):
            return False
    return failing > 0


def find_counterexample_extension(
    j: Judgment, bounds: ExtensionBounds | None = None, refute: RefuteBounds | None = None
) -> tuple[Base, dict] | None:
    """A base ``X ⊇ B`` and resource instantiation refuting ``j``, if one is
    found within bounds.  None is not a Holds claim."""
    refute = refute or RefuteBounds()
    if bounds is not None:
        refute = replace(refute, extensions=bounds)
    v = check_support(j, Strategy.REFUTE, refute=refute)
    if not v.fails:
        if v.reason.startswith("extension enumeration"):
            raise EnumerationTooLarge(0, refute.extension_bounds(j.logic).cap)
        return None
    w = v.witness
    while True:
        if w.extension != j.base or w.instantiation:
            return w.extension, dict(w.instantiation)
        nxt = w.failing().witness
        if nxt is None:
            return w.extension, dict(w.instantiation)
        w = nxt


def check_validity(logic, ctx, goal: Formula, bounds: SearchBounds | None = None, theory=()) -> Verdict:
    """``Γ ⊩ φ`` (support in every base) read off the prover, since validity
    coincides with provability: Holds iff Proved, Fails iff Refuted.

    ``theory`` (IMALL) lists reusable hypotheses, such as a policy that a
    base supports and so makes available any number of times.
    """
    logic = Logic.coerce(logic)
    theory = list(theory or ())
    r = prove(logic, ctx, goal, bounds, theory=theory or None)
    vocab = tuple(sorted(_ctx_atoms(logic, ctx) | _ctx_atoms(logic, theory) | atoms_of(goal)))
    b = bounds or SearchBounds()
    bj = {"depth": b.max_depth, "context_size": b.max_context_size, "budget": b.node_budget}
    meta = {"theory": [render(t) for t in theory]} if theory else {}
    if r.status is ProofStatus.PROVED:
        ev = Evidence("proof", logic, tree=r.proof, theory=tuple(theory), note="valid by soundness")
        return Verdict(SupportStatus.HOLDS, Method.PROVER, ev, bounds=bj, vocabulary=vocab, meta=meta)
    if r.status is ProofStatus.UNKNOWN:
        return Verdict(SupportStatus.UNKNOWN, reason="proof search hit its bounds", bounds=bj, vocabulary=vocab, meta=meta)
    v = Verdict(SupportStatus.FAILS, Method.PROVER, reason="refuted; invalid by completeness", bounds=bj, vocabulary=vocab, meta=meta)
    v.meta["refuted"] = True
    if theory:
        return v
    # a concrete countermodel at the empty base, when a small search finds one
    j = _validity_judgment(logic, ctx, goal)
    found = check_support(j, Strategy.REFUTE, b, RefuteBounds(max_instances=5_000))
    if found.fails:
        v.witness = found.witness
    return v


def _validity_judgment(logic: Logic, ctx, goal: Formula) -> Judgment:
    empty = Base(logic)
    if logic is Logic.BI:
        c = None if ctx is None else canonical(ctx) if isinstance(ctx, Bunch) else ctx
        return Judgment(logic, empty, None, c, goal)
    return Judgment(logic, empty, None, list(ctx or ()), goal)


def _ctx_atoms(logic: Logic, ctx) -> set[str]:
    if ctx is None:
        return set()
    if isinstance(ctx, Bunch):
        ctx = canonical(ctx)
    if isinstance(ctx, tuple) and ctx and isinstance(ctx[0], str):
        ctx = canon_leaves(ctx)
    out: set[str] = set()
    for f in ctx:
        out |= atoms_of(f)
    return out


# ---------------------------------------------------------------------------
# simulation bases


@dataclass(frozen=True)
class EncodingMap:
    """Bijection between a subformula-closed formula set and atoms; atoms
    encode themselves, every other formula gets a fresh atom."""

    pairs: tuple  # (formula, atom) sorted by formula

    def __post_init__(self) -> None:
        atoms = [a for _, a in self.pairs]
        if len(set(atoms)) != len(atoms):
            raise ValueError("encoding atoms must be distinct")

    def atom(self, f: Formula) -> str:
        return dict(self.pairs)[f]

    def formula(self, a: str) -> Formula:
        return {x: f for f, x in self.pairs}[a]

    @property
    def vocabulary(self) -> list[str]:
        return sorted(a for _, a in self.pairs)

    def to_json(self) -> dict:
        return {render(f): a for f, a in self.pairs}


def build_simulation_base(fs: Iterable[Formula], logic) -> tuple[Base, EncodingMap]:
    """Atomic intro/elim rules mirroring natural deduction over the encoded
    formulas.  Eliminations into an arbitrary conclusion are instantiated
    for every atom of the encoding vocabulary."""
    logic = Logic.coerce(logic)
    if logic is Logic.BI:
        raise ValueError("simulation bases are only built for IPL and IMALL")
    closed: set[Formula] = set()
    for f in fs:
        check_formula(f, logic)
        closed |= set(_subformulas(f))
    source = set()
    for f in closed:
        source |= atoms_of(f)
    pairs, n = [], 0
    for f in sorted(closed):
        if isinstance(f, Atom):
            pairs.append((f, f.name))
            continue
        n += 1
        name = f"n{n}"
        while name in source:
            n += 1
            name = f"n{n}"
        pairs.append((f, name))
    enc = EncodingMap(tuple(pairs))
    vocab = enc.vocabulary
    rules = []
    for f, c in enc.pairs:
        if isinstance(f, Atom):
            continue
        rules.extend(_ipl_rules(f, c, enc, vocab) if logic is Logic.IPL else _imall_rules(f, c, enc, vocab))
    return Base(logic, frozenset(rules), name="simulation"), enc


def _subformulas(f: Formula):
    yield f
    if hasattr(f, "left"):
        yield from _subformulas(f.left)
        yield from _subformulas(f.right)


def _ipl_rules(f: Formula, c: str, enc: EncodingMap, vocab: list[str]) -> list:
    R = AtomicRuleIPL
    e = frozenset()
    if isinstance(f, Bottom):
        return [R(((frozenset(), c),), x) for x in vocab]
    a, b = enc.atom(f.left), enc.atom(f.right)
    if isinstance(f, And):
        return [R(((e, a), (e, b)), c), R(((e, c),), a), R(((e, c),), b)]
    if isinstance(f, Or):
        out = [R(((e, a),), c), R(((e, b),), c)]
        out += [R(((frozenset({a}), x), (frozenset({b}), x), (e, c)), x) for x in vocab]
        return out
    return [R(((frozenset({a}), b),), c), R(((e, c), (e, a)), b)]


def _imall_rules(f: Formula, c: str, enc: EncodingMap, vocab: list[str]) -> list:
    R = AtomicRuleIMALL
    if isinstance(f, One):
        return [R((), c)] + [R((((( ), c),), (((), x),)), x) for x in vocab]
    if isinstance(f, Zero):
        # the elimination discards whatever else the context holds
        out = [R(((((), c),),), x) for x in vocab]
        out += [R(((((), c),), (((), y),)), c) for y in vocab]
        return out
    a, b = enc.atom(f.left), enc.atom(f.right)
    if isinstance(f, Tensor):
        out = [R(((((), a),), (((), b),)), c)]
        out += [R(((((), c),), ((multiset((a, b)), x),)), x) for x in vocab]
        return out
    if isinstance(f, Lolli):
        return [R(((((a,), b),),), c), R(((((), c),), (((), a),)), b)]
    if isinstance(f, With):
        return [R(((((), a), ((), b)),), c), R(((((), c),),), a), R(((((), c),),), b)]
    out = [R(((((), a),),), c), R(((((), b),),), c)]
    out += [R(((((), c),), (((a,), x), ((b,), x))), x) for x in vocab]
    return out


@dataclass
class CompletenessRecord:
    logic: Logic
    sequent: str
    prover: str
    simulation: str
    agree: bool | None
    rules: int
    context_bound: int | None = None
    by_bound: bool = False

    def to_json(self) -> dict:
        return {
            "logic": self.logic.value,
            "sequent": self.sequent,
            "prover": self.prover,
            "simulation": self.simulation,
            "agree": self.agree,
            "rules": self.rules,
            "context_bound": self.context_bound,
            "by_bound": self.by_bound,
        }


def simulation_context_bound(ctx, goal: Formula) -> int:
    """Context-size bound for IMALL simulation queries: the total size of
    the sequent.  Going upwards through a normal derivation never increases
    the total size of a sequent, so no derivation needs larger contexts."""
    from rsw.formulas import size

    return max(1, sum(size(f) for f in ctx) + size(goal))


def check_completeness_instance(
    ctx, goal: Formula, logic, bounds: SearchBounds | None = None, theory=()
) -> CompletenessRecord:
    """Compare the prover on ``ctx ⊢ goal`` with derivability of the encoded
    sequent in the simulation base.

    ``theory`` (IMALL) lists reusable formulas: the prover gets them as its
    theory zone and the simulation base gets their codes as axioms.
    """
    logic = Logic.coerce(logic)
    ctx, theory = list(ctx or ()), list(theory or ())
    if theory and logic is not Logic.IMALL:
        raise ValueError("a theory is only available for IMALL")
    base, enc = build_simulation_base(ctx + theory + [goal], logic)
    if theory:
        base = base.with_rules(AtomicRuleIMALL((), enc.atom(t)) for t in theory)
    p = prove(logic, ctx, goal, bounds, theory=theory or None)
    atoms = [enc.atom(f) for f in ctx]
    by_bound = False
    if logic is Logic.IPL:
        bound = None
        d = derive_ipl(base, atoms, enc.atom(goal), bounds)
        sim = d.status
    else:
        bound = simulation_context_bound(ctx + theory, goal)
        b = bounds or SearchBounds()
        d = derive_imll(base, atoms, enc.atom(goal), replace(b, max_context_size=max(bound, len(atoms))))
        sim = d.status
        if sim is Status.EXHAUSTED and d.stats.get("reason") == "context bound" and not theory:
            sim, by_bound = Status.NOT_DERIVABLE, True
    if p.status is ProofStatus.UNKNOWN or sim is Status.EXHAUSTED:
        agree = None
    else:
        agree = p.proved == (sim is Status.DERIVABLE)
    seq = ", ".join(render(f) for f in ctx) + " |- " + render(goal)
    return CompletenessRecord(logic, seq.strip(), p.status.value, sim.value, agree, len(base.rules), bound, by_bound)
