"""Derivability in a base (⊢_B) for IPL, IMALL and BI, plus a naive oracle.

IPL and IMALL: explore every state (context, goal) reachable backwards from the
query, then take the least fixpoint forwards over that finite set.  IPL
contexts stay inside ctx ∪ rule hypotheses, so the search is complete.  IMALL
contexts can grow through hypotheses; states above ``max_context_size`` are
pruned and a negative answer then reports Exhausted.

BI: forward saturation of minimal atomic sequents; see ``derive_bi``.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from itertools import product
from typing import Any, Iterable

from rsw.bases import (
    AtomicRuleIMALL,
    AtomicRuleIPL,
    Base,
    ground_schema_instance,
    multiset,
    render_canon,
    schema_bindings,
)
from rsw.bunches import (
    HOLE,
    MUL_UNIT,
    Bunch,
    Canon,
    canon_atoms,
    canon_ge,
    canon_size,
    canonical,
    contexts as canon_contexts,
    enumerate_canon,
    leaf_occurrences,
    make,
    mul,
    occurrences,
    plug,
)
from rsw.formulas import Logic


class Status(str, Enum):
    DERIVABLE = "Derivable"
    NOT_DERIVABLE = "NotDerivable"
    EXHAUSTED = "Exhausted"


@dataclass(frozen=True)
class SearchBounds:
    max_depth: int = 24
    max_context_size: int = 12
    node_budget: int = 1_000_000

    def __post_init__(self) -> None:
        if min(self.max_depth, self.max_context_size, self.node_budget) <= 0:
            raise ValueError("search bounds must be positive")


@dataclass
class DNode:
    """Derivation node: clause name, the sequent it proves, children.

    ``ctx`` is a frozenset (IPL), a sorted tuple multiset (IMALL) or a
    canonical bunch (BI).  ``info`` carries the rule or schema instance used.
    """

    rule: str
    ctx: Any
    goal: str
    children: list = field(default_factory=list)
    info: dict = field(default_factory=dict)

    def size(self) -> int:
        return 1 + sum(c.size() for c in self.children)

    def depth(self) -> int:
        return 1 + max((c.depth() for c in self.children), default=0)

    def to_dict(self, logic: Logic) -> dict:
        return {
            "rule": self.rule,
            "sequent": render_sequent(logic, self.ctx, self.goal),
            "info": {k: _jsonable(v) for k, v in self.info.items()},
            "children": [c.to_dict(logic) for c in self.children],
        }


def _jsonable(v):
    if hasattr(v, "encode") and not isinstance(v, str):
        return v.encode()
    if isinstance(v, tuple) and v and isinstance(v[0], str) and v[0] in ("a", "A", "M", "+", "*", "h"):
        return render_canon(v)
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    return v if isinstance(v, (str, int, float, bool, type(None))) else str(v)


def render_sequent(logic: Logic, ctx, goal: str) -> str:
    if logic is Logic.BI:
        return f"{render_canon(ctx)} |- {goal}"
    items = sorted(ctx)
    left = ", ".join(items) if items else ("∅" if logic is Logic.IPL else "e*")
    return f"{left} |- {goal}"


@dataclass
class DerivationResult:
    status: Status
    tree: DNode | None = None
    stats: dict = field(default_factory=dict)

    @property
    def derivable(self) -> bool:
        return self.status is Status.DERIVABLE

    def __str__(self) -> str:
        return self.status.value


def _require(b: Base, logic: Logic) -> None:
    if b.logic is not logic:
        raise ValueError(f"expected a {logic.value} base, got {b.logic.value}")


# ---------------------------------------------------------------------------
# generic "reachable states, then least fixpoint" driver


def _fixpoint(start, expand, budget: int):
    """``expand(state)`` returns a list of alternatives, each a
    (clause, premises: list of states, info).  Returns (derived: dict state ->
    (clause, premises, info), explored count), or (None, count) past the budget."""
    seen = {start: None}
    order = [start]
    alts: dict = {}
    i = 0
    while i < len(order):
        if len(order) > budget:
            return None, len(order)
        st = order[i]
        i += 1
        alts[st] = expand(st)
        for _, prem, _ in alts[st]:
            for p in prem:
                if p not in seen:
                    seen[p] = None
                    order.append(p)
    # least fixpoint, forward
    derived: dict = {}
    users: dict = {}
    for st, options in alts.items():
        for k, (_, prem, _) in enumerate(options):
            for p in set(prem):
                users.setdefault(p, []).append((st, k))
    todo = []
    for st, options in alts.items():
        for k, (clause, prem, info) in enumerate(options):
            if not prem:
                derived[st] = (clause, prem, info)
                todo.append(st)
                break
    while todo:
        p = todo.pop()
        for st, k in users.get(p, ()):
            if st in derived:
                continue
            clause, prem, info = alts[st][k]
            if all(q in derived for q in prem):
                derived[st] = (clause, prem, info)
                todo.append(st)
    return derived, len(order)


def _tree(derived: dict, st, make_node) -> DNode:
    clause, prem, info = derived[st]
    return make_node(clause, st, [_tree(derived, p, make_node) for p in prem], info)


# ---------------------------------------------------------------------------
# IPL


def derive_ipl(b: Base, ctx: Iterable[str], goal: str, bounds: SearchBounds | None = None) -> DerivationResult:
    """ref: P, p ⊢ p;  app1: axiom ⇒ p gives P ⊢ p;  app2: P ∪ Pi ⊢ pi for all i gives P ⊢ p."""
    _require(b, Logic.IPL)
    bounds = bounds or SearchBounds()
    by_concl: dict[str, list[AtomicRuleIPL]] = {}
    for r in b.sorted_rules():
        by_concl.setdefault(r.conclusion, []).append(r)

    def expand(st):
        c, x = st
        out = []
        if x in c:
            out.append(("ref", [], {}))
        for r in by_concl.get(x, ()):
            if not r.premises:
                out.append(("app1", [], {"rule": r}))
            else:
                out.append(("app2", [(c | h, p) for h, p in r.premises], {"rule": r}))
        return out

    start = (frozenset(ctx), goal)
    derived, n = _fixpoint(start, expand, bounds.node_budget)
    if derived is None:
        return DerivationResult(Status.EXHAUSTED, None, {"states": n, "reason": "node budget"})
    if start in derived:
        tree = _tree(derived, start, lambda cl, s, ch, info: DNode(cl, s[0], s[1], ch, info))
        return DerivationResult(Status.DERIVABLE, tree, {"states": n, "depth": tree.depth()})
    return DerivationResult(Status.NOT_DERIVABLE, None, {"states": n})


# ---------------------------------------------------------------------------
# IMALL


def sub_multisets(m: tuple) -> list[tuple]:
    """Distinct sub-multisets of a sorted tuple."""
    counts = sorted(Counter(m).items())
    out = []
    for choice in product(*[range(k + 1) for _, k in counts]):
        out.append(tuple(a for (a, _), n in zip(counts, choice) for _ in range(n)))
    return out


def multiset_minus(m: tuple, s: tuple) -> tuple:
    c = Counter(m)
    c.subtract(s)
    return tuple(sorted(c.elements()))


def splits(m: tuple, k: int):
    """Ordered splits of multiset ``m`` into ``k`` multisets (distinct)."""
    if k == 0:
        if not m:
            yield ()
        return
    if k == 1:
        yield (m,)
        return
    for first in sub_multisets(m):
        for rest in splits(multiset_minus(m, first), k - 1):
            yield (first,) + rest


def derive_imll(b: Base, ctx: Iterable[str], goal: str, bounds: SearchBounds | None = None) -> DerivationResult:
    """ref: {p} ⊢ p;  app1: axiom gives ∅ ⊢ p;  app2: for a split C1..Ck over the
    premise groups, Ci ⊎ Pj ⊢ pj for every premise j of group i gives ⊎Ci ⊢ p."""
    _require(b, Logic.IMALL)
    bounds = bounds or SearchBounds()
    limit = bounds.max_context_size
    by_concl: dict[str, list[AtomicRuleIMALL]] = {}
    for r in b.sorted_rules():
        by_concl.setdefault(r.conclusion, []).append(r)
    pruned = [False]

    def expand(st):
        m, x = st
        out = []
        if m == (x,):
            out.append(("ref", [], {}))
        for r in by_concl.get(x, ()):
            if not r.groups:
                if not m:
                    out.append(("app1", [], {"rule": r}))
                continue
            for split in splits(m, len(r.groups)):
                prem = []
                ok = True
                for share, group in zip(split, r.groups):
                    for h, p in group:
                        ctx2 = multiset(share + h)
                        if len(ctx2) > limit:
                            ok = False
                            break
                        prem.append((ctx2, p))
                    if not ok:
                        break
                if not ok:
                    pruned[0] = True
                    continue
                out.append(("app2", prem, {"rule": r, "split": split}))
        return out

    start = (multiset(ctx), goal)
    if len(start[0]) > limit:
        return DerivationResult(Status.EXHAUSTED, None, {"reason": "context exceeds max_context_size"})
    derived, n = _fixpoint(start, expand, bounds.node_budget)
    if derived is None:
        return DerivationResult(Status.EXHAUSTED, None, {"states": n, "reason": "node budget"})
    if start in derived:
        tree = _tree(derived, start, lambda cl, s, ch, info: DNode(cl, s[0], s[1], ch, info))
        return DerivationResult(Status.DERIVABLE, tree, {"states": n, "depth": tree.depth()})
    if pruned[0]:
        return DerivationResult(Status.EXHAUSTED, None, {"states": n, "reason": "context bound"})
    return DerivationResult(Status.NOT_DERIVABLE, None, {"states": n})


# ---------------------------------------------------------------------------
# BI: saturation of minimal atomic sequents
#
# A fact (F, x) stands for every sequent G ⊢ x with G reachable from F by
# weak/cont/exch (``canon_ge``).  Only ⪯-minimal facts are kept.


FRESH = "fresh"


def bi_vocabulary(b: Base, extra: Iterable[str] = ()) -> list[str]:
    vocab = set(b.atoms()) | set(extra)
    if any(s.atom_vars for s in b.schemas):
        # a single fresh atom stands in for every atom outside the vocabulary:
        # renaming outside atoms to it maps derivations to derivations
        name = FRESH
        while name in vocab:
            name += "_"
        vocab.add(name)
    return sorted(vocab)


@dataclass
class _Candidate:
    premises: list  # [(ctx, goal)]
    ctx: Canon
    goal: str
    clause: str
    info: dict


class _Saturation:
    def __init__(self, b: Base, vocab: list[str], bounds: SearchBounds):
        self.b = b
        self.vocab = vocab
        self.limit = bounds.max_context_size
        self.budget = bounds.node_budget
        self.work = 0
        self.truncated = False
        self.incomplete = False
        self.facts: dict[str, list[tuple[Canon, DNode]]] = {}
        self.pending: list[_Candidate] = []
        self.new: list[tuple[Canon, str]] = []
        self.schemas = []
        for s in b.sorted_schemas():
            for binding in schema_bindings(s, vocab):
                g = ground_schema_instance(s, binding)
                framed = [p for p in g.premises if p.framed]
                if not framed:
                    self.pending.append(
                        _Candidate(
                            [(p.context, p.goal) for p in g.premises],
                            g.conclusion.context,
                            g.conclusion.goal,
                            "schema",
                            {"schema": s, "binding": binding, "frame": HOLE},
                        )
                    )
                    continue
                if g.conclusion.framed and (
                    len(framed) > 1 or any(p.goal != g.conclusion.goal for p in framed)
                ):
                    # frames inside weakened material give unboundedly many
                    # minimal conclusions; negative answers are not decisive
                    self.incomplete = True
                self.schemas.append((s, binding, g, framed))

    # -- facts -------------------------------------------------------------

    def holds(self, ctx: Canon, goal: str):
        for f, node in self.facts.get(goal, ()):
            self.work += 1
            if canon_ge(ctx, f, True):
                return f, node
        return None

    def support(self, ctx: Canon, goal: str) -> DNode | None:
        hit = self.holds(ctx, goal)
        if hit is None:
            return None
        f, node = hit
        if f == ctx:
            return node
        return DNode("struct", ctx, goal, [node])

    def add(self, ctx: Canon, goal: str, node: DNode) -> None:
        if canon_size(ctx) > self.limit:
            self.truncated = True
            return
        if self.holds(ctx, goal) is not None:
            return
        lst = self.facts.setdefault(goal, [])
        lst[:] = [(f, n) for f, n in lst if not canon_ge(f, ctx, True)]
        lst.append((ctx, node))
        self.new.append((ctx, goal))

    # -- inference ---------------------------------------------------------

    def seed(self) -> None:
        for a in self.vocab:
            self.add(("a", a), a, DNode("taut", ("a", a), a))
        for r in self.b.sorted_rules():
            if not r.premises:
                self.add(r.context, r.conclusion, DNode("initial", r.context, r.conclusion, [], {"rule": r}))
            else:
                self.pending.append(_Candidate(list(r.premises), r.context, r.conclusion, "rule", {"rule": r}))

    def fire_pending(self) -> None:
        keep = []
        for cand in self.pending:
            kids = []
            for c, g in cand.premises:
                n = self.support(c, g)
                if n is None:
                    break
                kids.append(n)
            else:
                self.add(cand.ctx, cand.goal, DNode(cand.clause, cand.ctx, cand.goal, kids, cand.info))
                continue
            keep.append(cand)
        self.pending = keep

    def frames(self, fact: Canon, a: Canon, wide: bool):
        """Contexts U with U(a) reachable from ``fact``."""
        out = []
        unit_ok = canon_ge(a, MUL_UNIT, True)
        for d, rebuild in occurrences(fact):
            self.work += 1
            if canon_ge(a, d, True):
                out.append(rebuild(HOLE))
            if unit_ok:
                out.append(rebuild(mul(d, HOLE)))
            if wide:
                out.append(rebuild(make("A", [d, HOLE])))
        return list(dict.fromkeys(out))

    def apply_schemas(self, fresh: list[tuple[Canon, str]]) -> None:
        for s, binding, g, framed in self.schemas:
            first = framed[0]
            wide = (not g.conclusion.framed) or len(framed) > 1 or first.goal != g.conclusion.goal
            for ctx, goal in fresh:
                if goal != first.goal:
                    continue
                for u in self.frames(ctx, first.context, wide):
                    prem = [(plug(u, p.context) if p.framed else p.context, p.goal) for p in g.premises]
                    concl = plug(u, g.conclusion.context) if g.conclusion.framed else g.conclusion.context
                    self.pending.append(
                        _Candidate(prem, concl, g.conclusion.goal, "schema", {"schema": s, "binding": binding, "frame": u})
                    )

    def apply_cuts(self, fresh: list[tuple[Canon, str]]) -> None:
        fresh_set = set(fresh)
        snapshot = [(f, g, n) for g, lst in self.facts.items() for f, n in lst]
        current = {(f, g) for f, g, _ in snapshot}
        nodes = {(f, g): n for f, g, n in snapshot}
        for t, q in fresh:
            if (t, q) not in current:
                continue
            tnode = nodes[(t, q)]
            if t == ("a", q):
                continue  # cutting a tautology changes nothing
            for s_ctx, p, s_node in snapshot:
                self._cut(t, q, tnode, s_ctx, p, s_node)
        for s_ctx, p in fresh:
            if (s_ctx, p) not in current:
                continue
            s_node = nodes[(s_ctx, p)]
            for t, q, tnode in snapshot:
                if (t, q) in fresh_set or t == ("a", q):
                    continue
                self._cut(t, q, tnode, s_ctx, p, s_node)

    def _cut(self, t, q, tnode, s_ctx, p, s_node) -> None:
        for rebuild in leaf_occurrences(s_ctx, q):
            self.work += 1
            new = rebuild(t)
            self.add(new, p, DNode("cut", new, p, [tnode, s_node], {"atom": q}))

    def run(self, target) -> bool:
        self.seed()
        while True:
            if self.work > self.budget:
                return False
            self.fire_pending()
            if target is not None and self.holds(*target) is not None:
                return True
            fresh, self.new = self.new, []
            if not fresh:
                self.fire_pending()
                if not self.new:
                    return True
                continue
            self.apply_schemas(fresh)
            self.apply_cuts(fresh)


def _as_canon(ctx) -> Canon:
    if isinstance(ctx, Bunch):
        return canonical(ctx)
    if isinstance(ctx, str):
        from rsw.parser import parse_bunch

        return canonical(parse_bunch(ctx))
    return ctx


def derive_bi(b: Base, ctx, goal: str, bounds: SearchBounds | None = None) -> DerivationResult:
    """Forward saturation: taut, initial and rule/schema applications, cut as
    composition of facts; weak/cont/exch are built into fact subsumption.

    Facts larger than ``max_context_size`` leaves are dropped; if that
    happened (or the work budget ran out) a negative answer is Exhausted.
    """
    _require(b, Logic.BI)
    bounds = bounds or SearchBounds()
    c = _as_canon(ctx)
    sat = _Saturation(b, bi_vocabulary(b, canon_atoms(c) | {goal}), bounds)
    finished = sat.run((c, goal))
    stats = {
        "facts": sum(len(v) for v in sat.facts.values()),
        "work": sat.work,
        "truncated": sat.truncated,
    }
    node = sat.support(c, goal)
    if node is not None:
        stats["depth"] = node.depth()
        return DerivationResult(Status.DERIVABLE, node, stats)
    if not finished:
        stats["reason"] = "node budget"
        return DerivationResult(Status.EXHAUSTED, None, stats)
    if sat.truncated or sat.incomplete:
        stats["reason"] = "context bound" if sat.truncated else "schema frames not covered"
        return DerivationResult(Status.EXHAUSTED, None, stats)
    return DerivationResult(Status.NOT_DERIVABLE, None, stats)


def bi_facts(b: Base, bounds: SearchBounds | None = None, extra_atoms: Iterable[str] = ()) -> dict:
    """Saturate ``b`` completely and return the minimal facts per goal."""
    _require(b, Logic.BI)
    sat = _Saturation(b, bi_vocabulary(b, extra_atoms), bounds or SearchBounds())
    sat.run(None)
    return {g: sorted(f for f, _ in lst) for g, lst in sat.facts.items()}


def derive(b: Base, ctx, goal: str, bounds: SearchBounds | None = None) -> DerivationResult:
    if b.logic is Logic.IPL:
        return derive_ipl(b, ctx, goal, bounds)
    if b.logic is Logic.IMALL:
        return derive_imll(b, ctx, goal, bounds)
    return derive_bi(b, ctx, goal, bounds)


# ---------------------------------------------------------------------------
# oracle: naive least fixpoint over a finite universe of contexts


class UniverseTooLarge(ValueError):
    pass


# beyond these sizes the naive universes stop fitting in desk-scale memory
ORACLE_LIMITS = {Logic.IPL: 12, Logic.IMALL: 6, Logic.BI: 4}


def derive_oracle(b: Base, ctx, goal: str, logic: Logic | str | None = None, bounds: SearchBounds | None = None) -> bool:
    """Least relation by repeated application of every clause to every
    element of a finite universe, no indexing or pruning.

    IPL: all subsets of the atoms (exact).  IMALL: multisets of at most
    ``max_context_size`` atoms.  BI: canonical bunches of at most
    ``max_context_size`` leaves, units included.  Membership is therefore
    derivability by derivations whose sequents stay inside the universe.
    """
    logic = Logic.coerce(logic or b.logic)
    _require(b, logic)
    bounds = bounds or SearchBounds(max_context_size=3)
    if bounds.max_context_size > ORACLE_LIMITS[logic]:
        raise UniverseTooLarge(
            f"{logic.value} oracle universe limited to contexts of size {ORACLE_LIMITS[logic]}"
        )
    rel = oracle_relation(b, logic, bounds, _query_atoms(logic, ctx, goal))
    if logic is Logic.IPL:
        key = (frozenset(ctx), goal)
    elif logic is Logic.IMALL:
        key = (multiset(ctx), goal)
        if len(key[0]) > bounds.max_context_size:
            raise UniverseTooLarge("context exceeds the oracle universe")
    else:
        key = (_as_canon(ctx), goal)
        if canon_size(key[0]) > bounds.max_context_size:
            raise UniverseTooLarge("context exceeds the oracle universe")
    return key in rel


def _query_atoms(logic: Logic, ctx, goal: str) -> set[str]:
    if logic is Logic.BI:
        return canon_atoms(_as_canon(ctx)) | {goal}
    return set(ctx) | {goal}


_ORACLE_CACHE: dict = {}


def oracle_relation(b: Base, logic: Logic, bounds: SearchBounds, extra_atoms: Iterable[str] = ()) -> frozenset:
    """The whole least relation inside the universe (cached per base)."""
    if logic is Logic.BI:
        vocab = tuple(bi_vocabulary(b, extra_atoms))
    else:
        vocab = tuple(sorted(b.atoms() | set(extra_atoms)))
    # keyed on the effective vocabulary so queries inside it share one relation
    key = (b, logic, bounds.max_context_size, vocab)
    if key in _ORACLE_CACHE:
        return _ORACLE_CACHE[key]
    if logic is Logic.IPL:
        rel = _oracle_ipl(b, list(vocab))
    elif logic is Logic.IMALL:
        rel = _oracle_imall(b, list(vocab), bounds.max_context_size)
    else:
        rel = _oracle_bi(b, list(vocab), bounds.max_context_size, bounds.node_budget)
    if len(_ORACLE_CACHE) > 4096:
        _ORACLE_CACHE.clear()
    _ORACLE_CACHE[key] = rel
    return rel


def _oracle_ipl(b: Base, atoms: list[str]) -> frozenset:
    from itertools import combinations

    universe = [frozenset(c) for k in range(len(atoms) + 1) for c in combinations(atoms, k)]
    rel: set = set()
    changed = True
    while changed:
        changed = False
        for c in universe:
            for x in atoms:
                if (c, x) in rel:
                    continue
                ok = x in c
                for r in b.rules:
                    if ok:
                        break
                    if r.conclusion == x and all((c | h, p) in rel for h, p in r.premises):
                        ok = True
                if ok:
                    rel.add((c, x))
                    changed = True
    return frozenset(rel)


def _oracle_imall(b: Base, atoms: list[str], k: int) -> frozenset:
    from itertools import combinations_with_replacement

    universe = [tuple(c) for n in range(k + 1) for c in combinations_with_replacement(atoms, n)]
    rel: set = set()
    changed = True
    while changed:
        changed = False
        for m in universe:
            for x in atoms:
                if (m, x) in rel:
                    continue
                ok = m == (x,)
                for r in b.rules:
                    if ok:
                        break
                    if r.conclusion != x:
                        continue
                    if not r.groups:
                        ok = not m
                        continue
                    for split in splits(m, len(r.groups)):
                        if all(
                            (multiset(share + h), p) in rel
                            for share, group in zip(split, r.groups)
                            for h, p in group
                        ):
                            ok = True
                            break
                if ok:
                    rel.add((m, x))
                    changed = True
    return frozenset(rel)


def _oracle_bi(b: Base, atoms: list[str], k: int, budget: int) -> frozenset:
    universe = enumerate_canon(k, atoms, units=True)
    if len(universe) * len(atoms) > budget:
        raise UniverseTooLarge(f"BI oracle universe has {len(universe)} contexts")
    by_size: dict[int, list] = {}
    for c in universe:
        by_size.setdefault(canon_size(c), []).append(c)

    rules = list(b.rules)
    if b.schemas:
        frames = [HOLE] + canon_contexts(k, atoms, units=True)
        from rsw.bases import instantiate_schema

        for s in b.sorted_schemas():
            for binding in schema_bindings(s, atoms):
                for u in frames:
                    r = instantiate_schema(s, u, binding)
                    if all(canon_size(c) <= k for c, _ in r.premises) and canon_size(r.context) <= k:
                        rules.append(r)

    rel: set = set()
    for a in atoms:
        rel.add((("a", a), a))
    for r in rules:
        if not r.premises:
            rel.add((r.context, r.conclusion))
    while True:
        new: set = set()
        for r in rules:
            if (r.context, r.conclusion) not in rel and all(p in rel for p in r.premises):
                new.add((r.context, r.conclusion))
        for c, x in rel:
            size = canon_size(c)
            for d, rebuild in occurrences(c):
                # weak: D ↦ D ; Q  and, through D ≡ D , e*, D ↦ D , (e* ; Q)
                for n in range(1, k - size + 1):
                    for q in by_size.get(n, ()):
                        new.add((rebuild(make("A", [d, q])), x))
                        if n + 1 + size <= k:
                            new.add((rebuild(make("M", [d, make("A", [MUL_UNIT, q])])), x))
                # cont: D ; D ↦ D
                if d[0] == "A":
                    counts = Counter(d[1])
                    if all(v % 2 == 0 for v in counts.values()):
                        half = [y for y, v in sorted(counts.items()) for _ in range(v // 2)]
                        new.add((rebuild(make("A", half)), x))
            # cut: T ⊢ q and S(q) ⊢ x give S(T) ⊢ x
            for q in set(canon_atoms(c)):
                for t, y in rel:
                    if y != q:
                        continue
                    for rebuild in leaf_occurrences(c, q):
                        new.add((rebuild(t), x))
        new = {(c, x) for c, x in new if canon_size(c) <= k} - rel
        if not new:
            return frozenset(rel)
        rel |= new


# ---------------------------------------------------------------------------
# replay


def check_derivation(b: Base, node: DNode) -> bool:
    """Pure check that every node of a derivation tree is a clause instance."""
    try:
        return _check(b, node)
    except Exception:
        return False


def _check(b: Base, n: DNode) -> bool:
    logic = b.logic
    kids = n.children
    if not all(_check(b, c) for c in kids):
        return False
    prem = sorted((_key(logic, c.ctx), c.goal) for c in kids)
    r = n.info.get("rule")
    if n.rule == "ref":
        if logic is Logic.IPL:
            return n.goal in n.ctx and not kids
        return logic is Logic.IMALL and tuple(n.ctx) == (n.goal,) and not kids
    if n.rule == "app1":
        ok = r in b.rules and not _rule_premises(r) and r.conclusion == n.goal and not kids
        return ok and (logic is Logic.IPL or tuple(n.ctx) == ())
    if n.rule == "app2":
        if r not in b.rules or r.conclusion != n.goal:
            return False
        if logic is Logic.IPL:
            want = sorted((frozenset(n.ctx) | h, p) for h, p in r.premises)
            return [(frozenset(c.ctx), c.goal) for c in sorted(kids, key=lambda c: (sorted(c.ctx), c.goal))] == [
                (c, p) for c, p in sorted(want, key=lambda t: (sorted(t[0]), t[1]))
            ]
        split = n.info.get("split")
        if split is None or multiset(x for s in split for x in s) != tuple(n.ctx) or len(split) != len(r.groups):
            return False
        want = sorted((multiset(share + h), p) for share, g in zip(split, r.groups) for h, p in g)
        return prem == want
    if logic is not Logic.BI:
        return False
    if n.rule == "taut":
        return n.ctx == ("a", n.goal) and not kids
    if n.rule == "initial":
        return r in b.rules and not r.premises and r.context == n.ctx and r.conclusion == n.goal and not kids
    if n.rule == "rule":
        return r in b.rules and r.context == n.ctx and r.conclusion == n.goal and prem == sorted(r.premises)
    if n.rule == "schema":
        from rsw.bases import instantiate_schema

        s = n.info["schema"]
        if s not in b.schemas:
            return False
        inst = instantiate_schema(s, n.info["frame"], n.info["binding"])
        return inst.context == n.ctx and inst.conclusion == n.goal and prem == sorted(inst.premises)
    if n.rule == "cut":
        if len(kids) != 2:
            return False
        t, s_node = kids
        q = t.goal
        return s_node.goal == n.goal and any(rb(t.ctx) == n.ctx for rb in leaf_occurrences(s_node.ctx, q))
    if n.rule == "struct":
        return len(kids) == 1 and kids[0].goal == n.goal and canon_ge(n.ctx, kids[0].ctx, True)
    return False


def _key(logic: Logic, ctx):
    if logic is Logic.IPL:
        return tuple(sorted(ctx))
    return ctx if logic is Logic.BI else tuple(ctx)


def _rule_premises(r) -> tuple:
    return getattr(r, "premises", None) or getattr(r, "groups", ())
