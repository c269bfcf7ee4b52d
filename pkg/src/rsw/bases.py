"""Atomic rules, BI rule schemas, bases and bounded enumeration of extensions.

Rule surface syntax::

    IPL     [a b > c, d] => p          premises: hypotheses '>' conclusion
    IMALL   {a a > c, d} {e} => p      one brace group per context share
    BI      P |- p, Q |- q => R |- r   atomic sequents over bunches
    schema  forall U . forall x . U((p ; t) , h) |- x => U(p) |- x

BI contexts are stored as canonical bunches, so rules are ≡-invariant.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from itertools import combinations, combinations_with_replacement, product
from math import comb
from typing import Iterable, Iterator, Union

from rsw.bunches import (
    Canon,
    ContextualBunch,
    canon_atoms,
    canonical,
    enumerate_canon,
    from_canonical,
    map_canon_leaves,
    plug,
)
from rsw.formulas import Logic, check_atom_name, is_atom_name
from rsw.parser import ParseError, parse_bunch, render_bunch

Multiset = tuple  # sorted tuple of atom names


def multiset(atoms: Iterable[str]) -> Multiset:
    return tuple(sorted(atoms))


def render_canon(c: Canon) -> str:
    return render_bunch(from_canonical(c))


# ---------------------------------------------------------------------------
# rules


@dataclass(frozen=True, order=True)
class AtomicRuleIPL:
    """Premises are (hypothesis set, conclusion) pairs; none means an axiom."""

    premises: tuple[tuple[frozenset, str], ...]
    conclusion: str

    def __post_init__(self) -> None:
        prem = tuple(sorted({(frozenset(h), c) for h, c in self.premises}, key=_ipl_key))
        object.__setattr__(self, "premises", prem)

    def atoms(self) -> set[str]:
        out = {self.conclusion}
        for h, c in self.premises:
            out |= set(h) | {c}
        return out

    def encode(self) -> str:
        return f"[{', '.join(_ipl_premise(h, c) for h, c in self.premises)}] => {self.conclusion}"


def _ipl_key(prem):
    h, c = prem
    return (len(h), sorted(h), c)


def _ipl_premise(h, c) -> str:
    return f"{' '.join(sorted(h))} > {c}" if h else c


@dataclass(frozen=True, order=True)
class AtomicRuleIMALL:
    """Each premise group draws its own share of the context; premises
    inside a group share it.  No groups means an axiom."""

    groups: tuple[tuple[tuple[Multiset, str], ...], ...]
    conclusion: str

    def __post_init__(self) -> None:
        groups = []
        for g in self.groups:
            prem = tuple(sorted({(multiset(h), c) for h, c in g}))
            if not prem:
                raise ValueError("an IMALL premise group cannot be empty")
            groups.append(prem)
        object.__setattr__(self, "groups", tuple(sorted(groups)))

    def atoms(self) -> set[str]:
        out = {self.conclusion}
        for g in self.groups:
            for h, c in g:
                out |= set(h) | {c}
        return out

    def encode(self) -> str:
        gs = " ".join("{" + ", ".join(_ipl_premise(h, c) for h, c in g) + "}" for g in self.groups)
        return f"{gs} => {self.conclusion}".strip()


@dataclass(frozen=True, order=True)
class AtomicRuleBI:
    """``P1 ▷ p1 ... Pn ▷ pn`` over ``P ▷ p``; contexts are canonical bunches."""

    premises: tuple[tuple[Canon, str], ...]
    context: Canon
    conclusion: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "premises", tuple(sorted(set(self.premises))))

    def atoms(self) -> set[str]:
        out = {self.conclusion} | canon_atoms(self.context)
        for c, p in self.premises:
            out |= canon_atoms(c) | {p}
        return out

    def encode(self) -> str:
        prem = ", ".join(f"{render_canon(c)} |- {p}" for c, p in self.premises)
        return f"{prem} => {render_canon(self.context)} |- {self.conclusion}".lstrip()


@dataclass(frozen=True, order=True)
class Pattern:
    """Schema sequent ``U(ctx) ▷ goal`` when ``framed``, else ``ctx ▷ goal``."""

    framed: bool
    context: Canon
    goal: str


@dataclass(frozen=True, order=True)
class RuleSchemaBI:
    """A BI rule family: one contextual-bunch variable and atom metavariables."""

    hole_var: str
    atom_vars: frozenset
    premises: tuple[Pattern, ...]
    conclusion: Pattern

    def __post_init__(self) -> None:
        object.__setattr__(self, "atom_vars", frozenset(self.atom_vars))
        object.__setattr__(self, "premises", tuple(sorted(set(self.premises))))
        used = set()
        for pat in self.premises + (self.conclusion,):
            used |= canon_atoms(pat.context) | {pat.goal}
        if self.conclusion.framed and not any(p.framed for p in self.premises):
            raise ValueError(f"schema variable {self.hole_var} framing the conclusion must frame a premise")
        unused = self.atom_vars - used
        if unused:
            raise ValueError(f"metavariables {sorted(unused)} never occur in the schema")

    def atoms(self) -> set[str]:
        out = set()
        for pat in self.premises + (self.conclusion,):
            out |= canon_atoms(pat.context) | {pat.goal}
        return out - self.atom_vars

    def encode(self) -> str:
        def pat(p: Pattern) -> str:
            ctx = render_canon(p.context)
            return f"{self.hole_var}({ctx}) |- {p.goal}" if p.framed else f"{ctx} |- {p.goal}"

        head = f"forall {self.hole_var} . " + "".join(f"forall {v} . " for v in sorted(self.atom_vars))
        prem = ", ".join(pat(p) for p in self.premises)
        return f"{head}{prem} => {pat(self.conclusion)}"


Rule = Union[AtomicRuleIPL, AtomicRuleIMALL, AtomicRuleBI]
_RULE_TYPE = {Logic.IPL: AtomicRuleIPL, Logic.IMALL: AtomicRuleIMALL, Logic.BI: AtomicRuleBI}


# ---------------------------------------------------------------------------
# bases


@dataclass(frozen=True)
class Base:
    logic: Logic
    rules: frozenset = frozenset()
    schemas: frozenset = frozenset()
    name: str = ""

    def __post_init__(self) -> None:
        logic = Logic.coerce(self.logic)
        object.__setattr__(self, "logic", logic)
        object.__setattr__(self, "rules", frozenset(self.rules))
        object.__setattr__(self, "schemas", frozenset(self.schemas))
        for r in self.rules:
            if not isinstance(r, _RULE_TYPE[logic]):
                raise ValueError(f"{type(r).__name__} does not belong in a {logic.value} base")
        if self.schemas and logic is not Logic.BI:
            raise ValueError("rule schemas exist only for BI")

    def __eq__(self, other) -> bool:
        if not isinstance(other, Base):
            return NotImplemented
        return (self.logic, self.rules, self.schemas) == (other.logic, other.rules, other.schemas)

    def __hash__(self) -> int:
        return hash((self.logic, self.rules, self.schemas))

    def sorted_rules(self) -> list:
        return sorted(self.rules, key=lambda r: r.encode())

    def sorted_schemas(self) -> list:
        return sorted(self.schemas, key=lambda s: s.encode())

    def atoms(self) -> set[str]:
        out: set[str] = set()
        for r in self.rules:
            out |= r.atoms()
        for s in self.schemas:
            out |= s.atoms()
        return out

    def issuperset(self, other: "Base") -> bool:
        return self.logic == other.logic and self.rules >= other.rules and self.schemas >= other.schemas

    def with_rules(self, rules: Iterable, name: str = "") -> "Base":
        return Base(self.logic, self.rules | frozenset(rules), self.schemas, name or self.name)

    def __len__(self) -> int:
        return len(self.rules) + len(self.schemas)

    def describe(self) -> list[str]:
        return [r.encode() for r in self.sorted_rules()] + [s.encode() for s in self.sorted_schemas()]


def empty_base(logic: Logic | str) -> Base:
    return Base(Logic.coerce(logic))


def base_union(b1: Base, b2: Base, name: str = "") -> Base:
    if b1.logic != b2.logic:
        raise ValueError(f"cannot join a {b1.logic.value} base with a {b2.logic.value} base")
    return Base(b1.logic, b1.rules | b2.rules, b1.schemas | b2.schemas, name)


def make_base(logic: Logic | str, rules: Iterable = (), name: str = "") -> Base:
    """Build a base from rule objects or rule source strings."""
    logic = Logic.coerce(logic)
    ground, schemas = [], []
    for raw in rules:
        r = validate_rule(raw, logic)
        (schemas if isinstance(r, RuleSchemaBI) else ground).append(r)
    return Base(logic, frozenset(ground), frozenset(schemas), name)


# ---------------------------------------------------------------------------
# rule syntax


def validate_rule(raw, logic: Logic | str):
    """Check (or parse, for strings) a rule against ``logic``."""
    logic = Logic.coerce(logic)
    if isinstance(raw, str):
        return parse_rule(raw, logic)
    if isinstance(raw, RuleSchemaBI):
        if logic is not Logic.BI:
            raise ValueError("rule schemas exist only for BI")
        return raw
    if not isinstance(raw, _RULE_TYPE[logic]):
        raise ValueError(f"{type(raw).__name__} is not a {logic.value} rule")
    for a in raw.atoms():
        check_atom_name(a)
    return raw


def _atom(tok: str, text: str, pos: int = 0) -> str:
    tok = tok.strip()
    if not is_atom_name(tok):
        raise ParseError(f"expected an atom, found {tok!r}", text, pos)
    return tok


def _split_arrow(text: str) -> tuple[str, str]:
    parts = text.split("=>")
    if len(parts) != 2:
        raise ParseError("a rule needs exactly one '=>'", text, len(text))
    return parts[0], parts[1]


def _premise(chunk: str, text: str, linear: bool):
    pos = text.find(chunk)
    if ">" in chunk:
        hyp, concl = chunk.split(">", 1)
        hyps = [_atom(h, text, pos) for h in hyp.split()]
        if not hyps:
            raise ParseError("'>' needs hypotheses before it", text, pos)
    else:
        hyps, concl = [], chunk
    if not linear and len(set(hyps)) != len(hyps):
        raise ParseError("IPL hypotheses form a set", text, pos)
    return (multiset(hyps) if linear else frozenset(hyps)), _atom(concl, text, pos)


def parse_rule(text: str, logic: Logic | str):
    logic = Logic.coerce(logic)
    if logic is Logic.IPL:
        return _parse_ipl(text)
    if logic is Logic.IMALL:
        return _parse_imall(text)
    return _parse_bi(text)


def _parse_ipl(text: str) -> AtomicRuleIPL:
    lhs, rhs = _split_arrow(text)
    concl = _atom(rhs, text, text.index("=>") + 2)
    lhs = lhs.strip()
    if "{" in lhs or "|-" in lhs:
        raise ParseError("this is not an IPL rule (use [hyps > concl, ...] => p)", text, 0)
    if lhs.startswith("[") and lhs.endswith("]"):
        lhs = lhs[1:-1]
    elif lhs:
        raise ParseError("IPL premises go in brackets", text, 0)
    prem = [_premise(c, text, False) for c in lhs.split(",") if c.strip()]
    return AtomicRuleIPL(tuple(prem), concl)


def _parse_imall(text: str) -> AtomicRuleIMALL:
    lhs, rhs = _split_arrow(text)
    concl = _atom(rhs, text, text.index("=>") + 2)
    if "[" in lhs or "|-" in lhs:
        raise ParseError("this is not an IMALL rule (use {hyps > p, ...} {...} => p)", text, 0)
    groups = []
    rest = lhs.strip()
    while rest:
        m = re.match(r"\{([^{}]*)\}\s*", rest)
        if not m:
            raise ParseError("IMALL premise groups go in braces", text, text.find(rest))
        chunks = [c for c in m.group(1).split(",") if c.strip()]
        if not chunks:
            raise ParseError("empty premise group", text, text.find(rest))
        groups.append(tuple(_premise(c, text, True) for c in chunks))
        rest = rest[m.end():]
    return AtomicRuleIMALL(tuple(groups), concl)


_FORALL = re.compile(r"\s*forall\s+([A-Za-z][A-Za-z0-9_]*)\s*\.")
_TURNSTILE_GOAL = re.compile(r"\|-\s*([A-Za-z][A-Za-z0-9_]*)\s*(,|$)")


def _parse_bi(text: str):
    pos = 0
    hole_var, atom_vars = None, set()
    while True:
        m = _FORALL.match(text, pos)
        if not m:
            break
        name = m.group(1)
        if name[0].isupper():
            if hole_var is not None:
                raise ParseError("a schema binds one contextual variable", text, m.start(1))
            hole_var = name
        else:
            atom_vars.add(check_atom_name(name))
        pos = m.end()
    body = text[pos:]
    if "[" in body or "{" in body:
        raise ParseError("this is not a BI rule (use P |- p, ... => Q |- q)", text, pos)
    lhs, rhs = _split_arrow(body)
    offset = pos

    def sequents(chunk: str, base: int, single: bool):
        out = []
        i = 0
        while chunk[i:].strip():
            m = _TURNSTILE_GOAL.search(chunk, i)
            if not m:
                raise ParseError("expected 'bunch |- atom'", text, base + i)
            ctx_text = chunk[i:m.start()]
            out.append((ctx_text, base + i, m.group(1)))
            i = m.end()
        if single and len(out) != 1:
            raise ParseError("the conclusion is a single sequent", text, base)
        return out

    prem = sequents(lhs, offset, False)
    concl = sequents(rhs, offset + len(lhs) + 2, True)[0]

    if hole_var is None and atom_vars:
        hole_var = "U"  # atom-only schema: a hole that never frames anything
    if hole_var is None:
        rule = AtomicRuleBI(
            tuple((_ground_ctx(c, text, at), g) for c, at, g in prem),
            _ground_ctx(concl[0], text, concl[1]),
            _atom(concl[2], text),
        )
        return rule

    def pattern(ctx_text: str, at: int, goal: str) -> Pattern:
        s = ctx_text.strip()
        framed = False
        m = re.match(re.escape(hole_var) + r"\s*\(", s)
        if m and s.endswith(")") and _balanced_to_end(s, m.end() - 1):
            framed, s = True, s[m.end():-1]
        ctx = canonical(parse_bunch(s, item=_schema_item(text, at, atom_vars)))
        if hole_var in canon_atoms(ctx):
            raise ParseError(f"{hole_var} may only frame a whole premise or conclusion", text, at)
        goal = _atom(goal, text, at)
        return Pattern(framed, ctx, goal)

    return RuleSchemaBI(
        hole_var,
        frozenset(atom_vars),
        tuple(pattern(*p) for p in prem),
        pattern(*concl),
    )


def _balanced_to_end(s: str, open_idx: int) -> bool:
    depth = 0
    for i in range(open_idx, len(s)):
        if s[i] == "(":
            depth += 1
        elif s[i] == ")":
            depth -= 1
            if depth == 0:
                return i == len(s) - 1
    return False


def _schema_item(text: str, at: int, atom_vars):
    def item(s: str, pos: int):
        if is_atom_name(s) or s in atom_vars:
            return s
        raise ParseError(f"expected an atom, found {s!r}", text, at + pos)

    return item


def _ground_ctx(ctx_text: str, text: str, at: int) -> Canon:
    if not ctx_text.strip():
        raise ParseError("empty bunch (write e* or e+)", text, at)

    def item(s: str, pos: int):
        if is_atom_name(s):
            return s
        raise ParseError(f"expected an atom, found {s!r}", text, at + pos)

    return canonical(parse_bunch(ctx_text, item=item))


# ---------------------------------------------------------------------------
# schemas


def instantiate_schema(s: RuleSchemaBI, hole: ContextualBunch | Canon, binding: dict) -> AtomicRuleBI:
    """Ground instance of ``s`` with the contextual variable set to ``hole``."""
    missing = s.atom_vars - set(binding)
    if missing:
        raise ValueError(f"unbound metavariables {sorted(missing)}")
    for v in binding.values():
        check_atom_name(v)
    frame = canonical(hole.shape) if isinstance(hole, ContextualBunch) else hole
    for a in canon_atoms(frame):
        check_atom_name(a)

    def sub(c: Canon) -> Canon:
        return map_canon_leaves(c, lambda x: ("a", binding.get(x, x) if x in s.atom_vars else x))

    def ground(p: Pattern) -> tuple[Canon, str]:
        ctx = sub(p.context)
        if p.framed:
            ctx = plug(frame, ctx)
        goal = binding[p.goal] if p.goal in s.atom_vars else p.goal
        return ctx, goal

    prem = tuple(ground(p) for p in s.premises)
    ctx, goal = ground(s.conclusion)
    return AtomicRuleBI(prem, ctx, goal)


def schema_bindings(s: RuleSchemaBI, vocab: Iterable[str]) -> Iterator[dict]:
    names = sorted(s.atom_vars)
    for combo in product(sorted(vocab), repeat=len(names)):
        yield dict(zip(names, combo))


def ground_schema_instance(s: RuleSchemaBI, binding: dict) -> RuleSchemaBI:
    """Substitute atom metavariables, keeping the contextual variable."""

    def sub(p: Pattern) -> Pattern:
        ctx = map_canon_leaves(p.context, lambda x: ("a", binding.get(x, x) if x in s.atom_vars else x))
        goal = binding[p.goal] if p.goal in s.atom_vars else p.goal
        return Pattern(p.framed, ctx, goal)

    return RuleSchemaBI(s.hole_var, frozenset(), tuple(sub(p) for p in s.premises), sub(s.conclusion))


# ---------------------------------------------------------------------------
# extension enumeration


class EnumerationTooLarge(ValueError):
    def __init__(self, estimate: int, cap: int):
        self.estimate = estimate
        self.cap = cap
        super().__init__(f"extension enumeration would produce about {estimate} bases (cap {cap})")


@dataclass(frozen=True)
class ExtensionBounds:
    """Bounds for enumerating ``C ⊇ B``.

    ``max_hyps`` bounds hypotheses per premise (IPL set, IMALL multiset); for
    BI it bounds the leaves of every bunch in a rule.
    """

    max_rules: int = 1
    max_premises: int = 1
    max_hyps: int = 1
    atoms: tuple | None = None
    cap: int = 100_000
    max_groups: int | None = None

    def __post_init__(self) -> None:
        if min(self.max_rules, self.max_premises, self.max_hyps) < 0:
            raise ValueError("extension bounds must be non-negative")


def candidate_rules(logic: Logic | str, atoms: Iterable[str], bounds: ExtensionBounds) -> list:
    """Every rule over ``atoms`` within ``bounds``, sorted by encoding."""
    logic = Logic.coerce(logic)
    atoms = sorted(set(atoms))
    out: list = []
    if logic is Logic.IPL:
        prem = [
            (frozenset(h), c)
            for k in range(bounds.max_hyps + 1)
            for h in combinations(atoms, k)
            for c in atoms
        ]
        for n in range(bounds.max_premises + 1):
            for ps in combinations(prem, n):
                out.extend(AtomicRuleIPL(ps, c) for c in atoms)
    elif logic is Logic.IMALL:
        prem = [
            (h, c)
            for k in range(bounds.max_hyps + 1)
            for h in combinations_with_replacement(atoms, k)
            for c in atoms
        ]
        seen = set()
        for n in range(bounds.max_premises + 1):
            for ps in combinations_with_replacement(prem, n):
                for grouping in _groupings(list(ps), bounds.max_groups):
                    for c in atoms:
                        r = AtomicRuleIMALL(grouping, c)
                        if r not in seen:
                            seen.add(r)
                            out.append(r)
    else:
        ctxs = enumerate_canon(max(bounds.max_hyps, 1), atoms, units=True)
        prem = [(c, a) for c in ctxs for a in atoms]
        for n in range(bounds.max_premises + 1):
            for ps in combinations(prem, n):
                out.extend(AtomicRuleBI(ps, c, a) for c in ctxs for a in atoms)
    out = list(dict.fromkeys(out))
    out.sort(key=lambda r: r.encode())
    return out


def _groupings(items: list, max_groups: int | None):
    """Set partitions of ``items`` into premise groups."""
    if not items:
        yield ()
        return
    first, rest = items[0], items[1:]
    for part in _groupings(rest, max_groups):
        for i in range(len(part)):
            yield part[:i] + ((first,) + part[i],) + part[i + 1 :]
        if max_groups is None or len(part) < max_groups:
            yield ((first,),) + part


def enumerate_extensions(b: Base, vocab: Iterable[str] | None, bounds: ExtensionBounds) -> Iterator[Base]:
    """Yield ``b`` first, then ``b`` plus 1..max_rules new candidate rules,
    fewer rules first and lexicographic on rule encodings.

    Raises EnumerationTooLarge (with an estimate) when the count exceeds the cap.
    """
    atoms = bounds.atoms if bounds.atoms is not None else vocab
    atoms = sorted(set(atoms or ()) | (b.atoms() if bounds.atoms is None else set()))
    cands = [r for r in candidate_rules(b.logic, atoms, bounds) if r not in b.rules]
    n = len(cands)
    estimate = sum(comb(n, k) for k in range(bounds.max_rules + 1))
    if estimate > bounds.cap:
        raise EnumerationTooLarge(estimate, bounds.cap)
    yield b
    for k in range(1, bounds.max_rules + 1):
        for combo in combinations(cands, k):
            yield b.with_rules(combo)


def count_extensions(b: Base, vocab: Iterable[str] | None, bounds: ExtensionBounds) -> int:
    atoms = bounds.atoms if bounds.atoms is not None else vocab
    atoms = sorted(set(atoms or ()) | (b.atoms() if bounds.atoms is None else set()))
    n = len([r for r in candidate_rules(b.logic, atoms, bounds) if r not in b.rules])
    return sum(comb(n, k) for k in range(bounds.max_rules + 1))
