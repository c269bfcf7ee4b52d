"""Formula ASTs for IPL, IMALL and BI over a shared atom vocabulary."""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from typing import Iterator

ATOM_RE = re.compile(r"[a-z][A-Za-z0-9_]*\Z")

# words that look like atoms but are unit connectives
RESERVED = frozenset({"top", "mtop", "bot"})


class Logic(str, Enum):
    IPL = "IPL"
    IMALL = "IMALL"
    BI = "BI"

    @classmethod
    def coerce(cls, value: "Logic | str") -> "Logic":
        if isinstance(value, Logic):
            return value
        try:
            return cls(value.upper())
        except ValueError:
            raise ValueError(f"unknown logic {value!r} (expected ipl, imall or bi)") from None


def is_atom_name(name: str) -> bool:
    return bool(ATOM_RE.match(name)) and name not in RESERVED


def check_atom_name(name: str) -> str:
    if not is_atom_name(name):
        raise ValueError(f"invalid atom name {name!r}")
    return name


class Formula:
    """Base class; concrete connectives are frozen dataclasses below.

    Ordering is by rendered text so formulas can sit inside canonical bunches.
    """

    __slots__ = ()

    def __lt__(self, other: "Formula") -> bool:
        return self.sort_key() < other.sort_key()

    def sort_key(self) -> str:
        key = self.__dict__.get("_key")
        if key is None:
            from rsw.parser import render

            key = self.__dict__["_key"] = render(self)
        return key

    def __str__(self) -> str:
        from rsw.parser import render

        return render(self)


@dataclass(frozen=True)
class Atom(Formula):
    name: str

    def __post_init__(self) -> None:
        check_atom_name(self.name)


@dataclass(frozen=True)
class Top(Formula):
    pass


@dataclass(frozen=True)
class MTop(Formula):
    pass


@dataclass(frozen=True)
class Bottom(Formula):
    pass


@dataclass(frozen=True)
class One(Formula):
    pass


@dataclass(frozen=True)
class Zero(Formula):
    pass


@dataclass(frozen=True)
class Binary(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class And(Binary):
    pass


@dataclass(frozen=True)
class Or(Binary):
    pass


@dataclass(frozen=True)
class Imp(Binary):
    pass


@dataclass(frozen=True)
class Star(Binary):
    pass


@dataclass(frozen=True)
class Wand(Binary):
    pass


@dataclass(frozen=True)
class Lolli(Binary):
    pass


@dataclass(frozen=True)
class Tensor(Binary):
    pass


@dataclass(frozen=True)
class With(Binary):
    pass


@dataclass(frozen=True)
class Plus(Binary):
    pass


ALLOWED: dict[Logic, frozenset[type]] = {
    Logic.IPL: frozenset({Atom, And, Or, Imp, Bottom}),
    Logic.IMALL: frozenset({Atom, Lolli, Tensor, With, Plus, One, Zero}),
    Logic.BI: frozenset({Atom, And, Or, Imp, Top, Bottom, Star, Wand, MTop}),
}


class LogicMismatch(ValueError):
    pass


def check_formula(f: Formula, logic: Logic) -> Formula:
    """Raise LogicMismatch if ``f`` uses a connective outside ``logic``."""
    allowed = ALLOWED[Logic.coerce(logic)]
    for sub in subformulas(f):
        if type(sub) not in allowed:
            raise LogicMismatch(f"connective {type(sub).__name__} is not part of {logic.value}")
    return f


def subformulas(f: Formula) -> Iterator[Formula]:
    """Pre-order walk, with repetitions."""
    yield f
    if isinstance(f, Binary):
        yield from subformulas(f.left)
        yield from subformulas(f.right)


def subformula_set(formulas) -> list[Formula]:
    """Distinct subformulas of all inputs, smallest first, deterministic."""
    seen: set[Formula] = set()
    for f in formulas:
        seen.update(subformulas(f))
    return sorted(seen, key=lambda g: (size(g), g.sort_key()))


def size(f: Formula) -> int:
    if isinstance(f, Binary):
        return 1 + size(f.left) + size(f.right)
    return 1


def atoms_of(f: Formula) -> set[str]:
    return {g.name for g in subformulas(f) if isinstance(g, Atom)}


def is_atomic(f: Formula) -> bool:
    return isinstance(f, Atom)


_NULLARY = {Top: Top(), MTop: MTop(), Bottom: Bottom(), One: One(), Zero: Zero()}


def enumerate_formulas(logic: Logic | str, atoms, max_size: int, constants: bool = True) -> list[Formula]:
    """All formulas of ``logic`` with size <= max_size over ``atoms``, by size."""
    allowed = ALLOWED[Logic.coerce(logic)]
    base: list[Formula] = [Atom(a) for a in sorted(atoms)]
    if constants:
        base += [v for k, v in _NULLARY.items() if k in allowed]
    binaries = sorted((k for k in allowed if issubclass(k, Binary)), key=lambda k: k.__name__)
    by_size: dict[int, list[Formula]] = {1: base}
    for n in range(2, max_size + 1):
        out = []
        for ls in range(1, n - 1):
            for op in binaries:
                for a in by_size.get(ls, []):
                    for b in by_size.get(n - 1 - ls, []):
                        out.append(op(a, b))
        by_size[n] = out
    return [f for n in range(1, max_size + 1) for f in by_size[n]]
