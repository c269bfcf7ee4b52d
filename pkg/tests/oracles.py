"""Brute-force reference implementations used only by the tests.

They work on binary ``Bunch`` trees and explicit rewrite steps, never on the
flattened canonical machinery they check.
"""

from __future__ import annotations

from collections import deque
from functools import lru_cache
from itertools import permutations, product

from rsw.bunches import (
    AddJoin,
    AddUnit,
    Bunch,
    Join,
    Leaf,
    MulJoin,
    MulUnit,
    canonical,
    from_canonical,
    paths,
    at_path,
    substitute_at,
)


def all_trees(n: int, items) -> list[Bunch]:
    """Every binary bunch tree with exactly ``n`` leaf positions."""
    leaves = [Leaf(x) for x in items] + [AddUnit(), MulUnit()]
    return list(_trees(n, tuple(leaves)))


def _trees(n, leaves):
    if n == 1:
        yield from leaves
        return
    for k in range(1, n):
        for left in _trees(k, leaves):
            for right in _trees(n - k, leaves):
                yield AddJoin(left, right)
                yield MulJoin(left, right)


def tree_size(b: Bunch) -> int:
    if isinstance(b, Join):
        return tree_size(b.left) + tree_size(b.right)
    return 1


def equiv_moves(b: Bunch):
    """One-step applications of the commutative-monoid equations at any position."""
    for p in paths(b):
        node = at_path(b, p)
        for repl in _local_moves(node):
            yield substitute_at(b, p, repl)


def _local_moves(x: Bunch):
    for J, unit in ((AddJoin, AddUnit()), (MulJoin, MulUnit())):
        if isinstance(x, J):
            yield J(x.right, x.left)
            if isinstance(x.left, J):
                yield J(x.left.left, J(x.left.right, x.right))
            if isinstance(x.right, J):
                yield J(J(x.left, x.right.left), x.right.right)
            if x.right == unit:
                yield x.left
            if x.left == unit:
                yield x.right
    # unit introduction, kept local so the search stays bounded
    yield AddJoin(x, AddUnit())
    yield MulJoin(x, MulUnit())


def rewriting_closure(b: Bunch, max_size: int) -> set[Bunch]:
    seen = {b}
    todo = deque([b])
    while todo:
        cur = todo.popleft()
        for nxt in equiv_moves(cur):
            if tree_size(nxt) <= max_size and nxt not in seen:
                seen.add(nxt)
                todo.append(nxt)
    return seen


# ---------------------------------------------------------------------------
# weakening (and contraction) reachability on ≡-classes


def representatives(c) -> list[Bunch]:
    """All binary trees (no superfluous units) whose canonical form is ``c``."""
    return list(_reps(c))


@lru_cache(maxsize=None)
def _reps(c) -> tuple:
    tag = c[0]
    if tag not in "AM":
        return (from_canonical(c),)
    J = AddJoin if tag == "A" else MulJoin
    out = set()
    kids = c[1]
    for order in set(permutations(kids)):
        for combo in product(*[_reps(k) for k in order]):
            for t in _bracketings(list(combo), J):
                out.add(t)
    return tuple(out)


def _bracketings(seq, J):
    if len(seq) == 1:
        yield seq[0]
        return
    for k in range(1, len(seq)):
        for left in _bracketings(seq[:k], J):
            for right in _bracketings(seq[k:], J):
                yield J(left, right)


def _canon_size(c) -> int:
    if c[0] in "AM":
        return sum(_canon_size(k) for k in c[1])
    return 1


def weakening_steps(c, pool, contraction: bool):
    for t in _reps(c):
        for p in paths(t):
            sub = at_path(t, p)
            for d in pool:
                yield canonical(substitute_at(t, p, AddJoin(sub, d)))
                yield canonical(substitute_at(t, p, MulJoin(sub, AddJoin(MulUnit(), d))))
            if contraction and isinstance(sub, AddJoin) and canonical(sub.left) == canonical(sub.right):
                yield canonical(substitute_at(t, p, sub.left))


def reachable(h, bound: int, pool_items, contraction: bool = False) -> set:
    """Canonical classes reachable from ``h`` by weakening (+contraction),
    never exceeding ``bound`` leaves."""
    pool = []
    for n in range(1, bound):
        for t in all_trees(n, pool_items):
            pool.append(t)
    pool = list({canonical(t): t for t in pool}.values())
    start = h
    seen = {start}
    todo = deque([start])
    while todo:
        cur = todo.popleft()
        for nxt in weakening_steps(cur, pool, contraction):
            if _canon_size(nxt) <= bound and nxt not in seen:
                seen.add(nxt)
                todo.append(nxt)
    return seen


# --- Kripke countermodels for IPL -----------------------------------------


def kripke_frames(max_worlds: int):
    """Rooted finite posets (root 0, naturally labelled) as up-set bitmasks."""
    out = []
    for n in range(1, max_worlds + 1):
        pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
        for bits in product((0, 1), repeat=len(pairs)):
            le = {(i, i) for i in range(n)} | {p for p, b in zip(pairs, bits) if b}
            if any((i, k) not in le for (i, j) in le for (j2, k) in le if j == j2):
                continue
            if any((0, j) not in le for j in range(n)):
                continue
            ups = [sum(1 << j for j in range(n) if (i, j) in le) for i in range(n)]
            out.append((n, ups))
    return out


def _upsets(n, ups):
    return [m for m in range(1 << n) if all(not (m >> i) & 1 or (ups[i] & ~m) == 0 for i in range(n))]


def kripke_models(max_worlds: int, atoms):
    for n, ups in kripke_frames(max_worlds):
        us = _upsets(n, ups)
        for val in product(us, repeat=len(atoms)):
            yield n, ups, dict(zip(atoms, val))


def kripke_truth(f, n, ups, val, memo) -> int:
    from rsw.formulas import And, Atom, Bottom, Imp, Or

    if f in memo:
        return memo[f]
    if isinstance(f, Atom):
        r = val.get(f.name, 0)
    elif isinstance(f, Bottom):
        r = 0
    elif isinstance(f, And):
        r = kripke_truth(f.left, n, ups, val, memo) & kripke_truth(f.right, n, ups, val, memo)
    elif isinstance(f, Or):
        r = kripke_truth(f.left, n, ups, val, memo) | kripke_truth(f.right, n, ups, val, memo)
    elif isinstance(f, Imp):
        a = kripke_truth(f.left, n, ups, val, memo)
        b = kripke_truth(f.right, n, ups, val, memo)
        r = sum(1 << i for i in range(n) if (ups[i] & a & ~b) == 0)
    else:
        raise TypeError(f)
    memo[f] = r
    return r


def kripke_valid(formulas, max_worlds: int = 4, atoms=("p", "q")) -> dict:
    """Map each formula to True iff it holds at the root of every model."""
    models = list(kripke_models(max_worlds, list(atoms)))
    out = {}
    for f in formulas:
        out[f] = all(kripke_truth(f, n, ups, val, {}) & 1 for n, ups, val in models)
    return out


# --- naive IMALL provability ------------------------------------------------


def _sub_splits(items):
    items = list(items)
    for mask in range(1 << len(items)):
        a = tuple(sorted(x for i, x in enumerate(items) if mask >> i & 1))
        b = tuple(sorted(x for i, x in enumerate(items) if not mask >> i & 1))
        yield a, b


@lru_cache(maxsize=None)
def imall_provable(ctx: tuple, goal) -> bool:
    """Every rule at every step, no invertibility shortcuts; terminates
    because each premise is smaller than its conclusion."""
    from rsw.formulas import Atom, Lolli, One, Plus, Tensor, With, Zero

    ctx = tuple(sorted(ctx))
    if ctx == (goal,) and isinstance(goal, Atom):
        return True
    if not ctx and isinstance(goal, One):
        return True
    if isinstance(goal, Tensor):
        if any(imall_provable(a, goal.left) and imall_provable(b, goal.right) for a, b in _sub_splits(ctx)):
            return True
    if isinstance(goal, Lolli) and imall_provable(ctx + (goal.left,), goal.right):
        return True
    if isinstance(goal, With) and imall_provable(ctx, goal.left) and imall_provable(ctx, goal.right):
        return True
    if isinstance(goal, Plus) and (imall_provable(ctx, goal.left) or imall_provable(ctx, goal.right)):
        return True
    for i, f in enumerate(ctx):
        rest = ctx[:i] + ctx[i + 1 :]
        if isinstance(f, Zero):
            return True
        if isinstance(f, One) and imall_provable(rest, goal):
            return True
        if isinstance(f, Tensor) and imall_provable(rest + (f.left, f.right), goal):
            return True
        if isinstance(f, With) and (imall_provable(rest + (f.left,), goal) or imall_provable(rest + (f.right,), goal)):
            return True
        if isinstance(f, Plus) and imall_provable(rest + (f.left,), goal) and imall_provable(rest + (f.right,), goal):
            return True
        if isinstance(f, Lolli):
            for a, b in _sub_splits(rest):
                if imall_provable(a, f.left) and imall_provable(b + (f.right,), goal):
                    return True
    return False
