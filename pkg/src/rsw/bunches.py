"""Bunches: trees built from additive ``;`` and multiplicative ``,`` joins.

Two representations live here.  ``Bunch`` values (Leaf, AddUnit, MulUnit,
AddJoin, MulJoin, Hole) keep the exact occurrence structure a user wrote.
Canonical forms are nested tuples used by the engines::

    ("a", item)            leaf
    ("+",)                 additive unit
    ("*",)                 multiplicative unit
    ("h",)                 hole of a contextual bunch
    ("A", (c1, c2, ...))   flattened additive node, >= 2 sorted children
    ("M", (c1, c2, ...))   flattened multiplicative node, >= 2 sorted children

Two bunches are coherently equivalent iff their canonical forms are equal.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations, product
from typing import Any, Callable, Iterator, Sequence, Union


class Bunch:
    __slots__ = ()


@dataclass(frozen=True)
class Leaf(Bunch):
    item: Any


@dataclass(frozen=True)
class AddUnit(Bunch):
    pass


@dataclass(frozen=True)
class MulUnit(Bunch):
    pass


@dataclass(frozen=True)
class Hole(Bunch):
    pass


@dataclass(frozen=True)
class AddJoin(Bunch):
    left: Bunch
    right: Bunch


@dataclass(frozen=True)
class MulJoin(Bunch):
    left: Bunch
    right: Bunch


Join = (AddJoin, MulJoin)

Canon = tuple
ADD_UNIT: Canon = ("+",)
MUL_UNIT: Canon = ("*",)
HOLE: Canon = ("h",)


class PathError(ValueError):
    pass


# ---------------------------------------------------------------------------
# structural helpers on Bunch values


def leaves(b: Bunch) -> list[Any]:
    if isinstance(b, Leaf):
        return [b.item]
    if isinstance(b, Join):
        return leaves(b.left) + leaves(b.right)
    return []


def count_holes(b: Bunch) -> int:
    if isinstance(b, Hole):
        return 1
    if isinstance(b, Join):
        return count_holes(b.left) + count_holes(b.right)
    return 0


def map_leaves(b: Bunch, fn: Callable[[Any], Bunch]) -> Bunch:
    if isinstance(b, Leaf):
        return fn(b.item)
    if isinstance(b, Join):
        return type(b)(map_leaves(b.left, fn), map_leaves(b.right, fn))
    return b


def at_path(g: Bunch, path: Sequence[str]) -> Bunch:
    node = g
    for i, step in enumerate(path):
        if not isinstance(node, Join):
            raise PathError(f"path {''.join(path)!r} leaves the bunch at step {i}")
        if step == "L":
            node = node.left
        elif step == "R":
            node = node.right
        else:
            raise PathError(f"bad path step {step!r}")
    return node


def substitute_at(g: Bunch, path: Sequence[str], r: Bunch) -> Bunch:
    """Replace exactly the occurrence addressed by ``path`` (steps 'L'/'R')."""
    if not path:
        return r
    if not isinstance(g, Join):
        raise PathError(f"path {''.join(path)!r} does not resolve")
    step, rest = path[0], path[1:]
    if step == "L":
        return type(g)(substitute_at(g.left, rest, r), g.right)
    if step == "R":
        return type(g)(g.left, substitute_at(g.right, rest, r))
    raise PathError(f"bad path step {step!r}")


def paths(g: Bunch, prefix: tuple = ()) -> Iterator[tuple]:
    """Every valid path into ``g``, root first."""
    yield prefix
    if isinstance(g, Join):
        yield from paths(g.left, prefix + ("L",))
        yield from paths(g.right, prefix + ("R",))


@dataclass(frozen=True)
class ContextualBunch:
    """A bunch with exactly one hole; ``apply`` plugs a bunch into it."""

    shape: Bunch

    def __post_init__(self) -> None:
        n = count_holes(self.shape)
        if n != 1:
            raise ValueError(f"contextual bunch needs exactly one hole, found {n}")

    @classmethod
    def identity(cls) -> "ContextualBunch":
        return cls(Hole())

    def apply(self, b: Bunch) -> Bunch:
        def go(node: Bunch) -> Bunch:
            if isinstance(node, Hole):
                return b
            if isinstance(node, Join):
                return type(node)(go(node.left), go(node.right))
            return node

        return go(self.shape)

    def hole_path(self) -> tuple:
        for p in paths(self.shape):
            if isinstance(at_path(self.shape, p), Hole):
                return p
        raise AssertionError("unreachable")


# ---------------------------------------------------------------------------
# canonical forms


def make(kind: str, children) -> Canon:
    """Build a canonical node of ``kind`` ('A' or 'M'): flatten, drop units, sort."""
    unit = ADD_UNIT if kind == "A" else MUL_UNIT
    flat: list[Canon] = []
    for c in children:
        if c[0] == kind:
            flat.extend(c[1])
        elif c != unit:
            flat.append(c)
    if not flat:
        return unit
    if len(flat) == 1:
        return flat[0]
    flat.sort()
    return (kind, tuple(flat))


def add(*children: Canon) -> Canon:
    return make("A", children)


def mul(*children: Canon) -> Canon:
    return make("M", children)


def leaf(item) -> Canon:
    return ("a", item)


def canonical(b: Bunch) -> Canon:
    if isinstance(b, Leaf):
        return ("a", b.item)
    if isinstance(b, AddUnit):
        return ADD_UNIT
    if isinstance(b, MulUnit):
        return MUL_UNIT
    if isinstance(b, Hole):
        return HOLE
    if isinstance(b, AddJoin):
        return make("A", (canonical(b.left), canonical(b.right)))
    if isinstance(b, MulJoin):
        return make("M", (canonical(b.left), canonical(b.right)))
    raise TypeError(f"not a bunch: {b!r}")


def from_canonical(c: Canon) -> Bunch:
    """Right-nested binary rebuild of a canonical form."""
    tag = c[0]
    if tag == "a":
        return Leaf(c[1])
    if tag == "+":
        return AddUnit()
    if tag == "*":
        return MulUnit()
    if tag == "h":
        return Hole()
    joiner = AddJoin if tag == "A" else MulJoin
    kids = [from_canonical(k) for k in c[1]]
    out = kids[-1]
    for k in reversed(kids[:-1]):
        out = joiner(k, out)
    return out


def normalize(b: Bunch) -> Bunch:
    return from_canonical(canonical(b))


def bunch_equiv(a: Bunch, b: Bunch) -> bool:
    return canonical(a) == canonical(b)


def canon_leaves(c: Canon) -> list:
    tag = c[0]
    if tag == "a":
        return [c[1]]
    if tag in "AM":
        out = []
        for k in c[1]:
            out.extend(canon_leaves(k))
        return out
    return []


def canon_size(c: Canon) -> int:
    """Number of leaves, units and holes in a canonical form."""
    if c[0] in "AM":
        return sum(canon_size(k) for k in c[1])
    return 1


def canon_atoms(c: Canon) -> set:
    return set(canon_leaves(c))


def plug(c: Canon, r: Canon) -> Canon:
    """Replace the hole of a canonical contextual bunch with ``r``."""
    tag = c[0]
    if tag == "h":
        return r
    if tag in "AM":
        return make(tag, [plug(k, r) for k in c[1]])
    return c


def map_canon_leaves(c: Canon, fn: Callable[[Any], Canon]) -> Canon:
    tag = c[0]
    if tag == "a":
        return fn(c[1])
    if tag in "AM":
        return make(tag, [map_canon_leaves(k, fn) for k in c[1]])
    return c


# ---------------------------------------------------------------------------
# occurrences of sub-bunches modulo coherent equivalence


def occurrences(c: Canon, groups: str = "AM") -> Iterator[tuple[Canon, Callable[[Canon], Canon]]]:
    """Yield ``(sub, rebuild)`` for every sub-bunch occurrence of ``c`` up to ≡.

    A sub-bunch is a node, or a sub-collection of at least two children of a
    flattened node whose tag is in ``groups``.  ``rebuild(r)`` is the canonical form of ``c`` with that
    occurrence replaced by ``r``.  Unit occurrences are not listed; callers
    obtain them by wrapping an occurrence ``x`` as ``x ; e+`` or ``x , e*``.
    """
    yield c, _identity
    tag = c[0]
    if tag not in "AM":
        return
    kids = c[1]
    n = len(kids)
    seen: set = set()
    for k in range(2, n if tag in groups else 2):
        for idx in combinations(range(n), k):
            chosen = tuple(kids[i] for i in idx)
            if chosen in seen:
                continue
            seen.add(chosen)
            rest = [kids[i] for i in range(n) if i not in idx]
            yield (tag, chosen), _replace_group(tag, rest)
    done: set = set()
    for i, kid in enumerate(kids):
        if kid in done:
            continue
        done.add(kid)
        others = kids[:i] + kids[i + 1 :]
        for sub, rb in occurrences(kid, groups):
            yield sub, _replace_child(tag, others, rb)


def _identity(r: Canon) -> Canon:
    return r


def _replace_group(tag, rest):
    return lambda r: make(tag, rest + [r])


def _replace_child(tag, others, rb):
    return lambda r: make(tag, list(others) + [rb(r)])


def leaf_occurrences(c: Canon, item) -> Iterator[Callable[[Canon], Canon]]:
    """Rebuild functions for each (distinct up to ≡) leaf occurrence of ``item``."""
    tag = c[0]
    if tag == "a":
        if c[1] == item:
            yield _identity
        return
    if tag not in "AM":
        return
    kids = c[1]
    done: set = set()
    for i, kid in enumerate(kids):
        if kid in done:
            continue
        done.add(kid)
        others = kids[:i] + kids[i + 1 :]
        for rb in leaf_occurrences(kid, item):
            yield _replace_child(tag, others, rb)


def contains_item(c: Canon, item) -> bool:
    tag = c[0]
    if tag == "a":
        return c[1] == item
    if tag in "AM":
        return any(contains_item(k, item) for k in c[1])
    return False


# ---------------------------------------------------------------------------
# weakening / contraction preorder


def canon_ge(g: Canon, f: Canon, contraction: bool = True) -> bool:
    """True iff ``g`` is reachable from ``f`` by additive weakening
    (and, when ``contraction`` is set, additive contraction) modulo ≡.

    With ``contraction=False`` this is bunch-extension ``g ⪰ f``.
    """
    if contraction:
        return _ge(unit_reduce(dedupe(g)), unit_reduce(dedupe(f)), True)
    return _ge(unit_reduce(g), unit_reduce(f), False)


@lru_cache(maxsize=100_000)
def dedupe(c: Canon) -> Canon:
    """Drop repeated children of additive nodes; ``X ; X`` and ``X`` reach
    each other by contraction and weakening."""
    tag = c[0]
    if tag not in "AM":
        return c
    kids = [dedupe(k) for k in c[1]]
    if tag == "A":
        kids = list(dict.fromkeys(kids))
    return make(tag, kids)


@lru_cache(maxsize=100_000)
def unit_reduce(c: Canon) -> Canon:
    """Collapse sub-bunches that weaken to e+ (such as ``e+ , e+``) into e+.

    ``e+`` weakens to every bunch, so such a sub-bunch and e+ reach each
    other and the preorder cannot tell them apart.
    """
    tag = c[0]
    if tag not in "AM":
        return c
    out = make(tag, [unit_reduce(k) for k in c[1]])
    if out[0] == "M" and all(k == ADD_UNIT for k in out[1]):
        return ADD_UNIT
    return out


@lru_cache(maxsize=200_000)
def _ge(g: Canon, f: Canon, contraction: bool) -> bool:
    ftag, gtag = f[0], g[0]
    if ftag == "+":
        return True
    if ftag == "A":
        fk = f[1]
        if contraction:
            return all(_ge(g, x, True) for x in _distinct(fk))
        if gtag == "A":
            return _additive_match(g[1], fk)
        if gtag == "M":
            # f , e*  with the e* weakened into the other slots
            return _group_match(g[1], (f,), False)
        return False
    if ftag == "M" and ADD_UNIT in f[1]:
        # e+ children may vanish (weakened to e*)
        if _ge(g, make("M", [x for x in f[1] if x != ADD_UNIT]), contraction):
            return True
    if gtag == "A":
        return any(_ge(x, f, contraction) for x in _distinct(g[1]))
    # neither side additive
    fm = () if ftag == "*" else (f[1] if ftag == "M" else (f,))
    if gtag != "M":
        # g is a leaf, unit or hole: f's e+ children weaken to g or vanish
        # as e* (e+ ; e* is e*)
        real = [x for x in fm if x != ADD_UNIT]
        if gtag == "*":
            return not real
        return real == [g] or (not real and len(fm) > 0)
    return _group_match(g[1], fm, contraction)


def _distinct(xs):
    out = []
    for x in xs:
        if not out or out[-1] != x:
            out.append(x)
    return out


def _additive_match(gs, fs) -> bool:
    """Without contraction: split ``fs`` into groups, one per distinct slot of
    ``gs``; a slot must dominate the additive join of its group.  Slots left
    empty come from weakening."""
    n = len(gs)
    fs = _grouped(fs)
    groups: list[list] = [[] for _ in range(n)]
    slot = [0] * len(fs)

    def go(i: int) -> bool:
        if i == len(fs):
            return all(not grp or _ge(gs[j], make("A", grp), False) for j, grp in enumerate(groups))
        for j in range(_first_slot(fs, slot, i), n):
            if j and gs[j] == gs[j - 1] and not groups[j - 1]:
                continue  # symmetric choice already tried
            groups[j].append(fs[i])
            slot[i] = j
            ok = go(i + 1)
            groups[j].pop()
            if ok:
                return True
        return False

    return go(0)


def _grouped(xs) -> list:
    """``xs`` with equal items adjacent, in order of first appearance."""
    first: dict = {}
    for x in xs:
        first.setdefault(x, len(first))
    return sorted(xs, key=first.__getitem__)


def _first_slot(items, slot, i) -> int:
    # equal items take slots in nondecreasing order; together with the
    # empty-twin-slot rule this visits one assignment per orbit
    return slot[i - 1] if i and items[i] == items[i - 1] else 0


def _group_match(gs, fs, contraction) -> bool:
    """Distribute the multiplicative children ``fs`` over the slots ``gs``;
    each slot must dominate the product of its group (e* for an empty group).

    An ``e+`` child weakens to anything: it may cover any number of slots
    whose group is otherwise empty, or join one group.
    """
    spare = sum(1 for x in fs if x == ADD_UNIT)
    real = _grouped([x for x in fs if x != ADD_UNIT])
    n = len(gs)
    if n == 0:
        return not real
    groups: list[list] = [[] for _ in range(n)]
    slot = [0] * len(real)

    def finish() -> bool:
        helped = []
        for j in range(n):
            if not groups[j]:
                if spare or _ge(gs[j], MUL_UNIT, contraction):
                    continue
                return False
            if _ge(gs[j], make("M", groups[j]), contraction):
                continue
            if spare and _ge(gs[j], make("M", groups[j] + [ADD_UNIT]), contraction):
                helped.append(j)
                continue
            return False
        return len(helped) <= spare

    def go(i: int) -> bool:
        if i == len(real):
            return finish()
        for j in range(_first_slot(real, slot, i), n):
            if j and gs[j] == gs[j - 1] and not groups[j - 1]:
                continue
            groups[j].append(real[i])
            slot[i] = j
            ok = go(i + 1)
            groups[j].pop()
            if ok:
                return True
        return False

    return go(0)


def bunch_extends(g: Bunch, h: Bunch) -> bool:
    """Bunch-extension ``g ⪰ h``: closure of additive weakening, transitively."""
    return canon_ge(canonical(g), canonical(h), False)


def structurally_follows(g: Bunch, h: Bunch) -> bool:
    """``g`` is obtained from ``h`` by weakening and contraction (mod ≡)."""
    return canon_ge(canonical(g), canonical(h), True)


# ---------------------------------------------------------------------------
# enumeration of canonical bunches (used by oracles and bounded search)


@lru_cache(maxsize=None)
def _exact(n: int, items: tuple, units: bool, kinds: str = "AM") -> tuple:
    """All canonical bunches with exactly ``n`` leaves (units count as leaves)."""
    out: list[Canon] = []
    if n == 1:
        out.extend(("a", x) for x in items)
        if units:
            out.extend([ADD_UNIT, MUL_UNIT])
        return tuple(out)
    for kind in kinds:
        unit = ADD_UNIT if kind == "A" else MUL_UNIT
        for parts in _partitions(n):
            if len(parts) < 2:
                continue
            pools = []
            for p in parts:
                pool = [c for c in _exact(p, items, units, kinds) if c[0] != kind and c != unit]
                pools.append(pool)
            for combo in _nondecreasing(parts, pools):
                out.append((kind, tuple(sorted(combo))))
    return tuple(sorted(set(out)))


def _partitions(n: int, maxpart: int | None = None):
    if maxpart is None:
        maxpart = n
    if n == 0:
        yield ()
        return
    for first in range(min(n, maxpart), 0, -1):
        for rest in _partitions(n - first, first):
            yield (first,) + rest


def _nondecreasing(parts, pools):
    """Multisets of children: one per part, avoiding permutation duplicates."""
    seen = set()
    for combo in product(*pools):
        key = tuple(sorted(combo))
        if key not in seen:
            seen.add(key)
            yield combo


def enumerate_canon(max_leaves: int, items: Sequence, units: bool = False, kinds: str = "AM") -> list[Canon]:
    """Every canonical bunch over ``items`` with 1..max_leaves leaves."""
    items = tuple(sorted(items))
    out: list[Canon] = []
    for n in range(1, max_leaves + 1):
        out.extend(_exact(n, items, units, kinds))
    return out


def contexts(max_leaves: int, items: Sequence, units: bool = False) -> list[Canon]:
    """Canonical contextual bunches: exactly one hole, at most ``max_leaves`` leaves
    counting the hole."""
    marker = "\x00hole"
    items = tuple(sorted(items)) + (marker,)
    out = []
    for c in enumerate_canon(max_leaves, items, units):
        if canon_leaves(c).count(marker) == 1:
            out.append(map_canon_leaves(c, lambda x: HOLE if x == marker else ("a", x)))
    return sorted(set(out))


BunchLike = Union[Bunch, Canon]
