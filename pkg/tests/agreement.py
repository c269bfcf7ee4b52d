"""Engine/oracle agreement over small rule universes (shared by the unit and
acceptance suites)."""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations, combinations_with_replacement

from rsw.bases import AtomicRuleBI, ExtensionBounds, candidate_rules, empty_base
from rsw.bunches import enumerate_canon
from rsw.derivability import SearchBounds, Status, check_derivation, derive, derive_oracle


@dataclass
class Agreement:
    bases: int = 0
    queries: int = 0
    exhausted: int = 0
    disagreements: list = field(default_factory=list)
    bad_trees: list = field(default_factory=list)


def universe(logic: str):
    """(candidate rules, query contexts, bounds) for ≤2 rules, ≤2 premises, atoms {p,q}."""
    if logic == "ipl":
        rules = candidate_rules("ipl", ["p", "q"], ExtensionBounds(2, 2, 2))
        ctxs = [frozenset(c) for k in range(3) for c in combinations("pq", k)]
        return rules, ctxs, SearchBounds()
    if logic == "imall":
        rules = candidate_rules("imall", ["p", "q"], ExtensionBounds(2, 2, 1))
        ctxs = [tuple(c) for k in range(4) for c in combinations_with_replacement("pq", k)]
        return rules, ctxs, SearchBounds(max_context_size=3)
    prem_ctx = [("a", "p"), ("a", "q")]
    concl_ctx = [("a", "p"), ("a", "q"), ("M", (("a", "p"), ("a", "q"))), ("A", (("a", "p"), ("a", "q")))]
    prem = [(c, a) for c in prem_ctx for a in "pq"]
    rules = [AtomicRuleBI(ps, c, a) for n in range(3) for ps in combinations(prem, n) for c in concl_ctx for a in "pq"]
    rules = list(dict.fromkeys(rules))
    return rules, enumerate_canon(2, ["p", "q"], units=True), SearchBounds(max_context_size=3)


def all_bases(logic: str, rules):
    b0 = empty_base(logic)
    return [b0.with_rules(c) for k in range(3) for c in combinations(rules, k)]


def run_agreement(logic: str, stride: int = 1) -> Agreement:
    rules, ctxs, bounds = universe(logic)
    out = Agreement()
    for i, b in enumerate(all_bases(logic, rules)):
        if i % stride:
            continue
        out.bases += 1
        for c in ctxs:
            for g in "pq":
                r = derive(b, c, g, bounds)
                o = derive_oracle(b, c, g, bounds=bounds)
                out.queries += 1
                out.exhausted += r.status is Status.EXHAUSTED
                if r.derivable != o:
                    out.disagreements.append((b.describe(), c, g, r.status.value, o))
                if r.derivable and not check_derivation(b, r.tree):
                    out.bad_trees.append((b.describe(), c, g))
    return out
