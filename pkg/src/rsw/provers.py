"""Sequent-calculus provers used as validity oracles.

IPL: Dyckhoff's contraction-free calculus G4ip; terminating, so Refuted is a
decision.  IMALL: exhaustive backward search; every rule shrinks the sequent,
so Refuted is a decision.  BI: depth-bounded backward search in an LBI-style
calculus with ≡-matching; Refuted only when no branch was cut by the bound.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

from rsw.bunches import (
    ADD_UNIT,
    MUL_UNIT,
    Bunch,
    Canon,
    canon_ge,
    canonical,
    dedupe,
    leaf_occurrences,
    make,
    occurrences,
)
from rsw.derivability import SearchBounds, splits
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
    check_formula,
)
from rsw.parser import render


class ProofStatus(str, Enum):
    PROVED = "Proved"
    REFUTED = "Refuted"
    UNKNOWN = "Unknown"


@dataclass
class PNode:
    rule: str
    ctx: Any
    goal: Formula
    children: list = field(default_factory=list)
    info: dict = field(default_factory=dict)

    def size(self) -> int:
        return 1 + sum(c.size() for c in self.children)

    def to_dict(self, logic: Logic) -> dict:
        return {
            "rule": self.rule,
            "sequent": render_proof_sequent(logic, self.ctx, self.goal),
            "children": [c.to_dict(logic) for c in self.children],
        }


def render_proof_sequent(logic: Logic, ctx, goal: Formula) -> str:
    logic = Logic.coerce(logic)
    if logic is Logic.BI:
        from rsw.bunches import from_canonical

        left = render(from_canonical(ctx))
    else:
        left = ", ".join(render(f) for f in sorted(ctx)) or "·"
    return f"{left} |- {render(goal)}"


@dataclass
class ProofResult:
    status: ProofStatus
    proof: PNode | None = None
    stats: dict = field(default_factory=dict)

    @property
    def proved(self) -> bool:
        return self.status is ProofStatus.PROVED

    def __str__(self) -> str:
        return self.status.value


def prove(
    logic: Logic | str,
    ctx,
    goal: Formula,
    bounds: SearchBounds | None = None,
    depth: int | None = None,
    theory=None,
) -> ProofResult:
    """Decide (IPL, IMALL) or search (BI) for a proof of ``ctx ⊢ goal``.

    ``ctx`` is an iterable of formulas for IPL and IMALL, and a bunch of
    formulas (or None for e*) for BI.  ``theory`` (IMALL only) holds
    reusable hypotheses, like policies supported by a base; with a theory
    IMALL is searched up to ``depth`` and may answer Unknown.
    """
    logic = Logic.coerce(logic)
    check_formula(goal, logic)
    if theory and logic is not Logic.IMALL:
        raise ValueError("a theory zone is only available for IMALL")
    if logic is Logic.IPL:
        fs = frozenset(_formulas(ctx, logic))
        return _IPL().run(fs, goal)
    if logic is Logic.IMALL:
        fs = tuple(sorted(_formulas(ctx, logic)))
        th = tuple(sorted(_formulas(theory, logic)))
        d = depth if depth is not None else (bounds or SearchBounds(max_depth=40)).max_depth
        budget = (bounds or SearchBounds()).node_budget
        return _IMALL(th, d, budget).run(fs, goal)
    if ctx is None:
        c = MUL_UNIT
    elif isinstance(ctx, Bunch):
        c = canonical(ctx)
    elif isinstance(ctx, tuple) and ctx and isinstance(ctx[0], str):
        c = ctx
    else:
        raise ValueError("a BI context must be a bunch of formulas")
    from rsw.bunches import canon_leaves

    for f in canon_leaves(c):
        if not isinstance(f, Formula):
            raise ValueError("a BI context must be a bunch of formulas")
        check_formula(f, logic)
    d = depth if depth is not None else min((bounds or SearchBounds(max_depth=20)).max_depth, 20)
    budget = (bounds or SearchBounds()).node_budget
    return _BI(d, budget).run(c, goal)


def _formulas(ctx, logic) -> list[Formula]:
    if ctx is None:
        return []
    if isinstance(ctx, (Bunch, str)):
        raise ValueError(f"a {logic.value} context is a list of formulas")
    out = list(ctx)
    for f in out:
        if not isinstance(f, Formula):
            raise ValueError(f"a {logic.value} context is a list of formulas")
        check_formula(f, logic)
    return out


# ---------------------------------------------------------------------------
# IPL: G4ip


class _IPL:
    def __init__(self):
        self.memo: dict = {}
        self.nodes = 0

    def run(self, ctx: frozenset, goal: Formula) -> ProofResult:
        proof = self.search(ctx, goal)
        stats = {"nodes": self.nodes}
        if proof is None:
            return ProofResult(ProofStatus.REFUTED, None, stats)
        return ProofResult(ProofStatus.PROVED, proof, stats)

    def search(self, g: frozenset, c: Formula) -> PNode | None:
        key = (g, c)
        if key in self.memo:
            return self.memo[key]
        self.nodes += 1
        res = self._search(g, c)
        self.memo[key] = res
        return res

    def _search(self, g: frozenset, c: Formula) -> PNode | None:
        if isinstance(c, Atom) and c in g:
            return PNode("ax", g, c)
        if Bottom() in g:
            return PNode("botL", g, c)
        # invertible rules
        for f in sorted(g):
            rest = g - {f}
            if isinstance(f, And):
                return self._one("andL", g, c, f, rest | {f.left, f.right}, c)
            if isinstance(f, Or):
                a = self.search(rest | {f.left}, c)
                b = a and self.search(rest | {f.right}, c)
                return b and PNode("orL", g, c, [a, b], {"principal": f})
            if isinstance(f, Imp):
                ant = f.left
                if isinstance(ant, Atom) and ant in g:
                    return self._one("impL_atom", g, c, f, rest | {f.right}, c)
                if isinstance(ant, Bottom):
                    return self._one("impL_bot", g, c, f, rest, c)
                if isinstance(ant, And):
                    return self._one("impL_and", g, c, f, rest | {Imp(ant.left, Imp(ant.right, f.right))}, c)
                if isinstance(ant, Or):
                    return self._one("impL_or", g, c, f, rest | {Imp(ant.left, f.right), Imp(ant.right, f.right)}, c)
        if isinstance(c, And):
            a = self.search(g, c.left)
            b = a and self.search(g, c.right)
            return b and PNode("andR", g, c, [a, b])
        if isinstance(c, Imp):
            return self._one("impR", g, c, None, g | {c.left}, c.right)
        # choices
        if isinstance(c, Or):
            for rule, side in (("orR1", c.left), ("orR2", c.right)):
                p = self.search(g, side)
                if p:
                    return PNode(rule, g, c, [p])
        for f in sorted(g):
            if isinstance(f, Imp) and isinstance(f.left, Imp):
                rest = g - {f}
                cc, dd, bb = f.left.left, f.left.right, f.right
                a = self.search(rest | {Imp(dd, bb)}, Imp(cc, dd))
                if a is None:
                    continue
                b = self.search(rest | {bb}, c)
                if b is not None:
                    return PNode("impL_imp", g, c, [a, b], {"principal": f})
        return None

    def _one(self, rule, g, c, principal, g2, c2) -> PNode | None:
        p = self.search(g2, c2)
        if p is None:
            return None
        return PNode(rule, g, c, [p], {"principal": principal} if principal is not None else {})


# ---------------------------------------------------------------------------
# IMALL


def _ms_remove(m: tuple, f) -> tuple:
    lst = list(m)
    lst.remove(f)
    return tuple(lst)


def _ms_add(m: tuple, *fs) -> tuple:
    return tuple(sorted(m + fs))


class _IMALL:
    """Backward search for  T ; Γ ⊢ C  with T an unrestricted theory.

    With T empty every premise is smaller than its conclusion, so the search
    terminates and failure is a refutation.  Theory formulas are used by a
    focused copy (the left rule applied to a fresh copy); then repeated
    sequents on a branch are pruned, and iterative deepening under one node
    budget guards termination.
    """

    def __init__(self, theory: tuple = (), depth: int = 40, budget: int = 1_000_000):
        self.theory = tuple(dict.fromkeys(theory))
        self.max_depth = depth
        self.limit = depth
        self.budget = budget
        self.memo: dict = {}
        self.failed: set = set()
        self.nodes = 0
        self.cut = False
        self.looped = False

    def run(self, ctx: tuple, goal: Formula) -> ProofResult:
        if not self.theory:
            proof = self.search(ctx, goal, 0, frozenset())
        for limit in range(min(4, self.max_depth), self.max_depth + 1) if self.theory else ():
            self.limit, self.cut, self.looped = limit, False, False
            proof = self.search(ctx, goal, 0, frozenset())
            if proof is not None or not self.cut or self.nodes >= self.budget:
                break
        stats = {"nodes": self.nodes}
        if self.theory:
            stats["theory"] = [render(f) for f in self.theory]
        if proof is not None:
            return ProofResult(ProofStatus.PROVED, proof, stats)
        if self.cut:
            stats["reason"] = "depth bound or node budget reached while copying theory formulas"
            return ProofResult(ProofStatus.UNKNOWN, None, stats)
        return ProofResult(ProofStatus.REFUTED, None, stats)

    def search(self, g: tuple, c: Formula, d: int = 0, path: frozenset = frozenset()) -> PNode | None:
        key = (g, c)
        if key in self.memo:
            return self.memo[key]
        if key in self.failed:
            return None
        if self.theory:
            if key in path:
                self.looped = True
                return None
            if d >= self.limit or self.nodes >= self.budget:
                self.cut = True
                return None
        self.nodes += 1
        saved = (self.cut, self.looped)
        self.cut = self.looped = False
        res = self._search(g, c, d + 1, path | {key} if self.theory else path)
        if res is not None:
            self.memo[key] = res
        elif not (self.cut or self.looped):
            self.failed.add(key)
        self.cut = self.cut or saved[0]
        self.looped = self.looped or saved[1]
        return res

    def _search(self, g: tuple, c: Formula, d: int, path) -> PNode | None:
        if g == (c,) and isinstance(c, Atom):
            return PNode("id", g, c)
        if not g and isinstance(c, One):
            return PNode("oneR", g, c)
        if Zero() in g:
            return PNode("zeroL", g, c, [], {"principal": Zero()})
        if Zero() in self.theory:
            return PNode("zeroL", g, c, [], {"principal": Zero(), "copy": True})
        s = lambda g2, c2: self.search(g2, c2, d, path)
        # invertible
        for f in dict.fromkeys(g):
            rest = _ms_remove(g, f)
            if isinstance(f, One):
                p = s(rest, c)
                return p and PNode("oneL", g, c, [p], {"principal": f})
            if isinstance(f, Tensor):
                p = s(_ms_add(rest, f.left, f.right), c)
                return p and PNode("tensorL", g, c, [p], {"principal": f})
            if isinstance(f, Plus):
                a = s(_ms_add(rest, f.left), c)
                b = a and s(_ms_add(rest, f.right), c)
                return b and PNode("plusL", g, c, [a, b], {"principal": f})
        if isinstance(c, Lolli):
            p = s(_ms_add(g, c.left), c.right)
            return p and PNode("lolliR", g, c, [p])
        if isinstance(c, With):
            a = s(g, c.left)
            b = a and s(g, c.right)
            return b and PNode("withR", g, c, [a, b])
        # choices
        if isinstance(c, Plus):
            for rule, side in (("plusR1", c.left), ("plusR2", c.right)):
                p = s(g, side)
                if p:
                    return PNode(rule, g, c, [p])
        if isinstance(c, Tensor):
            for g1, g2 in splits(g, 2):
                a = s(g1, c.left)
                if a is None:
                    continue
                b = s(g2, c.right)
                if b is not None:
                    return PNode("tensorR", g, c, [a, b], {"split": (g1, g2)})
        principals = [(f, _ms_remove(g, f), False) for f in dict.fromkeys(g)]
        principals += [(f, g, True) for f in self.theory]
        for f, rest, copy in principals:
            info = {"principal": f, "copy": True} if copy else {"principal": f}
            if copy and isinstance(f, (One, Tensor, Plus)):
                kids = [_ms_add(rest, f.left, f.right)] if isinstance(f, Tensor) else [rest]
                if isinstance(f, Plus):
                    a = s(_ms_add(rest, f.left), c)
                    b = a and s(_ms_add(rest, f.right), c)
                    if b:
                        return PNode("plusL", g, c, [a, b], info)
                    continue
                p = s(kids[0], c)
                if p:
                    return PNode("tensorL" if isinstance(f, Tensor) else "oneL", g, c, [p], info)
            if isinstance(f, With):
                for rule, side in (("withL1", f.left), ("withL2", f.right)):
                    p = s(_ms_add(rest, side), c)
                    if p:
                        return PNode(rule, g, c, [p], info)
            if isinstance(f, Lolli):
                for g1, g2 in splits(rest, 2):
                    a = s(g1, f.left)
                    if a is None:
                        continue
                    b = s(_ms_add(g2, f.right), c)
                    if b is not None:
                        return PNode("lolliL", g, c, [a, b], {**info, "split": (g1, g2)})
            if copy and isinstance(f, Atom) and g == () and f == c:
                return PNode("id", g, c, [], info)
        return None


# ---------------------------------------------------------------------------
# BI


def _leaf(f: Formula) -> Canon:
    return ("a", f)


def _normal(c: Canon) -> Canon:
    # X ; X and X prove the same sequents (contraction and weakening)
    return dedupe(c)


class _BI:
    def __init__(self, depth: int, budget: int):
        self.max_depth = depth
        self.limit = depth
        self.budget = budget
        self.nodes = 0
        self.cut = False
        self.looped = False
        self.proved: dict = {}
        self.failed: set = set()

    def run(self, ctx: Canon, goal: Formula) -> ProofResult:
        start = _normal(ctx)
        # iterative deepening: shallow proofs first, one shared node budget
        for limit in range(min(4, self.max_depth), self.max_depth + 1):
            self.limit, self.cut, self.looped = limit, False, False
            proof = self.search(start, goal, 0, frozenset())
            if proof is not None or not self.cut or self.nodes >= self.budget:
                break
        stats = {"nodes": self.nodes, "depth_bound": self.max_depth}
        if proof is not None:
            if start != ctx:
                proof = PNode("struct", ctx, goal, [proof])
            return ProofResult(ProofStatus.PROVED, proof, stats)
        if self.cut:
            stats["reason"] = "depth bound or node budget reached"
            return ProofResult(ProofStatus.UNKNOWN, None, stats)
        return ProofResult(ProofStatus.REFUTED, None, stats)

    def search(self, g: Canon, c: Formula, d: int, path: frozenset) -> PNode | None:
        key = (g, c)
        if key in self.proved:
            return self.proved[key]
        if key in self.failed:
            return None
        if key in path:
            # a repeated sequent: some shorter proof exists if any
            self.looped = True
            return None
        if d >= self.limit or self.nodes >= self.budget:
            self.cut = True
            return None
        self.nodes += 1
        saved = (self.cut, self.looped)
        self.cut = self.looped = False
        res = self._search(g, c, d + 1, path | {key})
        if res is not None:
            self.proved[key] = res
        elif not (self.cut or self.looped):
            # only failures independent of the branch are reusable
            self.failed.add(key)
        self.cut = self.cut or saved[0]
        self.looped = self.looped or saved[1]
        return res

    def sub(self, g2: Canon, c: Formula, d: int, path) -> PNode | None:
        n = _normal(g2)
        p = self.search(n, c, d, path)
        if p is None or n == g2:
            return p
        return PNode("struct", g2, c, [p])

    def _search(self, g: Canon, c: Formula, d: int, path) -> PNode | None:
        if canon_ge(g, _leaf(c), True):
            return PNode("ax", g, c)
        if isinstance(c, Top):
            return PNode("topR", g, c)
        if isinstance(c, MTop) and canon_ge(g, MUL_UNIT, True):
            return PNode("mtopR", g, c)
        leaves = sorted({x for x in _leaf_items(g)})
        if Bottom() in leaves:
            return PNode("botL", g, c, [], {"principal": Bottom()})
        # invertible left rules
        for f in leaves:
            repl = None
            if isinstance(f, And):
                rule, repl = "andL", make("A", [_leaf(f.left), _leaf(f.right)])
            elif isinstance(f, Star):
                rule, repl = "starL", make("M", [_leaf(f.left), _leaf(f.right)])
            elif isinstance(f, Top):
                rule, repl = "topL", ADD_UNIT
            elif isinstance(f, MTop):
                rule, repl = "mtopL", MUL_UNIT
            elif isinstance(f, Or):
                rb = next(iter(leaf_occurrences(g, f)))
                a = self.sub(rb(_leaf(f.left)), c, d, path)
                b = a and self.sub(rb(_leaf(f.right)), c, d, path)
                return b and PNode("orL", g, c, [a, b], {"principal": f})
            if repl is not None:
                rb = next(iter(leaf_occurrences(g, f)))
                p = self.sub(rb(repl), c, d, path)
                return p and PNode(rule, g, c, [p], {"principal": f})
        # invertible right rules
        if isinstance(c, Imp):
            p = self.sub(make("A", [g, _leaf(c.left)]), c.right, d, path)
            return p and PNode("impR", g, c, [p])
        if isinstance(c, Wand):
            p = self.sub(make("M", [g, _leaf(c.left)]), c.right, d, path)
            return p and PNode("wandR", g, c, [p])
        if isinstance(c, And):
            a = self.search(g, c.left, d, path)
            b = a and self.search(g, c.right, d, path)
            return b and PNode("andR", g, c, [a, b])
        # choices
        if isinstance(c, Or):
            for rule, side in (("orR1", c.left), ("orR2", c.right)):
                p = self.search(g, side, d, path)
                if p:
                    return PNode(rule, g, c, [p])
        if isinstance(c, Star):
            for d1, d2 in _star_splits(g):
                a = self.sub(d1, c.left, d, path)
                if a is None:
                    continue
                b = self.sub(d2, c.right, d, path)
                if b is not None:
                    return PNode("starR", g, c, [a, b], {"split": (d1, d2)})
        # goal-directed: implications that end in the goal come first
        for f in sorted(leaves, key=lambda f: (_target(f) != c, f)):
            if isinstance(f, Imp):
                for node, rebuild in _additive_homes(g, f):
                    a = self.sub(node, f.left, d, path)
                    if a is None:
                        continue
                    b = self.sub(rebuild(make("A", [node, _leaf(f.right)])), c, d, path)
                    if b is not None:
                        return PNode("impL", g, c, [a, b], {"principal": f, "home": node})
            if isinstance(f, Wand):
                for home, gamma, rebuild in _wand_homes(g, f):
                    a = self.sub(gamma, f.left, d, path)
                    if a is None:
                        continue
                    b = self.sub(rebuild(make("A", [home, _leaf(f.right)])), c, d, path)
                    if b is not None:
                        return PNode("wandL", g, c, [a, b], {"principal": f, "home": home, "arg": gamma})
        return None


def _leaf_items(c: Canon):
    if c[0] == "a":
        yield c[1]
    elif c[0] in "AM":
        for k in c[1]:
            yield from _leaf_items(k)


def _mul_views(c: Canon) -> list[tuple]:
    """Multisets K with c ⪰ (K joined multiplicatively), keeping structure
    except that additive nodes may be weakened down to one child."""
    tag = c[0]
    if tag == "A":
        out = [(c,)]
        for k in dict.fromkeys(c[1]):
            out.extend(_mul_views(k))
        return out
    if tag == "M":
        out = [()]
        for k in c[1]:
            out = [o + v for o in out for v in _mul_views(k)]
        return out
    if tag == "*":
        return [()]
    return [(c,)]


def _star_splits(g: Canon):
    seen = set()
    for view in _mul_views(g):
        view = tuple(sorted(view))
        if view in seen:
            continue
        seen.add(view)
        for left, right in splits(view, 2):
            yield make("M", list(left)), make("M", list(right))


def _additive_homes(g: Canon, f: Formula):
    """Occurrences N of g with ``f`` as N itself or as an additive child of N.

    Only whole additive nodes are listed: a larger additive home proves more
    and rebuilds to the same context, so sub-collections add nothing.
    """
    lf = _leaf(f)
    for node, rebuild in occurrences(g, groups=""):
        if node == lf or (node[0] == "A" and lf in node[1]):
            yield node, rebuild


def _wand_homes(g: Canon, f: Formula):
    """(home, argument, rebuild): home ⪰ (argument , f), home an occurrence.

    Additive sub-collections are skipped for the same reason as above.
    """
    lf = _leaf(f)
    for node, rebuild in occurrences(g, groups="M"):
        if node[0] == "M":
            kids = list(node[1])
            for i, y in enumerate(kids):
                if i and kids[i - 1] == y:
                    continue
                if canon_ge(y, lf, True):
                    yield node, make("M", kids[:i] + kids[i + 1 :]), rebuild
        if canon_ge(node, lf, True):
            yield node, MUL_UNIT, rebuild


def _target(f: Formula) -> Formula:
    while isinstance(f, (Imp, Wand)):
        f = f.right
    return f


def _group_tag(home: Canon) -> str:
    # a sub-collection occurrence carries its parent's tag
    return home[0] if home[0] in "AM" else ""


# ---------------------------------------------------------------------------
# proof checking


def check_proof(logic: Logic | str, proof: PNode, theory=()) -> bool:
    """True iff every node of ``proof`` is an instance of a rule of the calculus.

    ``theory`` lists the reusable IMALL hypotheses the proof may copy.
    """
    logic = Logic.coerce(logic)
    try:
        return _check_node(logic, proof, frozenset(theory or ()))
    except Exception:
        return False


def _check_node(logic: Logic, n: PNode, theory: frozenset) -> bool:
    if not all(_check_node(logic, k, theory) for k in n.children):
        return False
    if logic is Logic.IMALL:
        return bool(_ok_imall(n, theory))
    return bool({Logic.IPL: _ok_ipl, Logic.BI: _ok_bi}[logic](n))


def _seqs(n: PNode) -> list:
    return [(k.ctx, k.goal) for k in n.children]


def _ok_ipl(n: PNode) -> bool:
    g, c, kids = frozenset(n.ctx), n.goal, _seqs(n)
    f = n.info.get("principal")
    rest = g - {f} if f is not None else g
    if f is not None and f not in g:
        return False
    r = n.rule
    if r == "ax":
        return isinstance(c, Atom) and c in g and not kids
    if r == "botL":
        return Bottom() in g and not kids
    if r == "andL":
        return isinstance(f, And) and kids == [(rest | {f.left, f.right}, c)]
    if r == "orL":
        return isinstance(f, Or) and kids == [(rest | {f.left}, c), (rest | {f.right}, c)]
    if r == "impL_atom":
        return isinstance(f, Imp) and isinstance(f.left, Atom) and f.left in g and kids == [(rest | {f.right}, c)]
    if r == "impL_bot":
        return isinstance(f, Imp) and isinstance(f.left, Bottom) and kids == [(rest, c)]
    if r == "impL_and":
        a = f.left
        return isinstance(f, Imp) and isinstance(a, And) and kids == [(rest | {Imp(a.left, Imp(a.right, f.right))}, c)]
    if r == "impL_or":
        a = f.left
        return isinstance(f, Imp) and isinstance(a, Or) and kids == [
            (rest | {Imp(a.left, f.right), Imp(a.right, f.right)}, c)
        ]
    if r == "impL_imp":
        a = f.left
        return (
            isinstance(f, Imp)
            and isinstance(a, Imp)
            and kids == [(rest | {Imp(a.right, f.right)}, a), (rest | {f.right}, c)]
        )
    if r == "andR":
        return isinstance(c, And) and kids == [(g, c.left), (g, c.right)]
    if r == "impR":
        return isinstance(c, Imp) and kids == [(g | {c.left}, c.right)]
    if r in ("orR1", "orR2"):
        return isinstance(c, Or) and kids == [(g, c.left if r == "orR1" else c.right)]
    return False


def _ok_imall(n: PNode, theory: frozenset = frozenset()) -> bool:
    g, c, kids = tuple(sorted(n.ctx)), n.goal, [(tuple(sorted(k)), f) for k, f in _seqs(n)]
    f = n.info.get("principal")
    copy = bool(n.info.get("copy"))
    if copy:
        if f not in theory:
            return False
        rest = g
    else:
        if f is not None and f not in g:
            return False
        rest = _ms_remove(g, f) if f is not None else g
    r = n.rule
    if r == "id":
        if copy:
            return not g and f == c and isinstance(c, Atom) and not kids
        return g == (c,) and not kids
    if r == "oneR":
        return not g and isinstance(c, One) and not kids
    if r == "zeroL":
        return isinstance(f, Zero) and not kids
    if r == "oneL":
        return isinstance(f, One) and kids == [(rest, c)]
    if r == "tensorL":
        return isinstance(f, Tensor) and kids == [(_ms_add(rest, f.left, f.right), c)]
    if r == "plusL":
        return isinstance(f, Plus) and kids == [(_ms_add(rest, f.left), c), (_ms_add(rest, f.right), c)]
    if r in ("withL1", "withL2"):
        side = f.left if r == "withL1" else f.right
        return isinstance(f, With) and kids == [(_ms_add(rest, side), c)]
    if r == "lolliR":
        return isinstance(c, Lolli) and kids == [(_ms_add(g, c.left), c.right)]
    if r == "withR":
        return isinstance(c, With) and kids == [(g, c.left), (g, c.right)]
    if r in ("plusR1", "plusR2"):
        return isinstance(c, Plus) and kids == [(g, c.left if r == "plusR1" else c.right)]
    if r == "tensorR":
        (a, _), (b, _) = kids
        return isinstance(c, Tensor) and Counter(a) + Counter(b) == Counter(g) and [k[1] for k in kids] == [c.left, c.right]
    if r == "lolliL":
        (a, fa), (b, fb) = kids
        if not isinstance(f, Lolli) or fa != f.left or fb != c:
            return False
        b_rest = list(b)
        b_rest.remove(f.right)
        return Counter(a) + Counter(b_rest) == Counter(rest)
    return False


def _ok_bi(n: PNode) -> bool:
    g, c, kids = n.ctx, n.goal, _seqs(n)
    f = n.info.get("principal")
    r = n.rule
    lf = _leaf(f) if f is not None else None

    def replaced(repl) -> set:
        return {rb(repl) for rb in leaf_occurrences(g, f)}

    if r == "ax":
        return canon_ge(g, _leaf(c), True) and not kids
    if r == "topR":
        return isinstance(c, Top) and not kids
    if r == "mtopR":
        return isinstance(c, MTop) and canon_ge(g, MUL_UNIT, True) and not kids
    if r == "botL":
        return isinstance(f, Bottom) and any(True for _ in leaf_occurrences(g, f)) and not kids
    if r == "struct":
        return len(kids) == 1 and kids[0][1] == c and canon_ge(g, kids[0][0], True)
    if r in ("andL", "starL", "topL", "mtopL"):
        kind = {"andL": And, "starL": Star, "topL": Top, "mtopL": MTop}[r]
        if not isinstance(f, kind) or len(kids) != 1 or kids[0][1] != c:
            return False
        if r == "andL":
            repl = make("A", [_leaf(f.left), _leaf(f.right)])
        elif r == "starL":
            repl = make("M", [_leaf(f.left), _leaf(f.right)])
        else:
            repl = ADD_UNIT if r == "topL" else MUL_UNIT
        return kids[0][0] in replaced(repl)
    if r == "orL":
        if not isinstance(f, Or) or len(kids) != 2:
            return False
        return any(
            kids == [(rb(_leaf(f.left)), c), (rb(_leaf(f.right)), c)] for rb in leaf_occurrences(g, f)
        )
    if r == "impR":
        return isinstance(c, Imp) and kids == [(make("A", [g, _leaf(c.left)]), c.right)]
    if r == "wandR":
        return isinstance(c, Wand) and kids == [(make("M", [g, _leaf(c.left)]), c.right)]
    if r == "andR":
        return isinstance(c, And) and kids == [(g, c.left), (g, c.right)]
    if r in ("orR1", "orR2"):
        return isinstance(c, Or) and kids == [(g, c.left if r == "orR1" else c.right)]
    if r == "starR":
        (d1, a), (d2, b) = kids
        return isinstance(c, Star) and (a, b) == (c.left, c.right) and canon_ge(g, make("M", [d1, d2]), True)
    if r == "impL":
        home = n.info["home"]
        if not isinstance(f, Imp) or not (home == lf or (home[0] == "A" and lf in home[1])):
            return False
        return any(
            node == home and kids == [(home, f.left), (rb(make("A", [home, _leaf(f.right)])), c)]
            for node, rb in occurrences(g, groups=_group_tag(home))
        )
    if r == "wandL":
        home, arg = n.info["home"], n.info["arg"]
        if not isinstance(f, Wand) or not canon_ge(home, make("M", [arg, lf]), True):
            return False
        return any(
            node == home and kids == [(arg, f.left), (rb(make("A", [home, _leaf(f.right)])), c)]
            for node, rb in occurrences(g, groups=_group_tag(home))
        )
    return False
