"""ASCII surface syntax for formulas and bunches (see docs/grammar.ebnf).

Precedence, tightest first:  conjunctions ``*  /\\  &``,  disjunctions ``\\/  +``,
implications ``->  -o  -*``.  Conjunctions and disjunctions associate to the
left, implications to the right.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from rsw.bunches import (
    AddJoin,
    AddUnit,
    Bunch,
    Hole,
    Leaf,
    MulJoin,
    MulUnit,
)
from rsw.formulas import (
    And,
    Atom,
    Binary,
    Bottom,
    Formula,
    Imp,
    Lolli,
    Logic,
    LogicMismatch,
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


class ParseError(ValueError):
    def __init__(self, message: str, text: str = "", pos: int = 0):
        self.pos = pos
        self.text = text
        where = f" at column {pos + 1}" if text else ""
        super().__init__(f"{message}{where}")


_TOKEN = re.compile(
    r"\s*(?:(?P<op>->|-o|-\*|/\\|\\/|\*|&|\+|\(|\))|(?P<unit>top\*|top|mtop|bot|1|0)(?![A-Za-z0-9_*])|(?P<name>[A-Za-z][A-Za-z0-9_]*))"
)

# operator -> connective per logic; None means "not in this logic"
_BINARY = {
    "/\\": {Logic.IPL: And, Logic.BI: And},
    "*": {Logic.IMALL: Tensor, Logic.BI: Star},
    "&": {Logic.IMALL: With},
    "\\/": {Logic.IPL: Or, Logic.BI: Or},
    "+": {Logic.IMALL: Plus},
    "->": {Logic.IPL: Imp, Logic.BI: Imp},
    "-o": {Logic.IMALL: Lolli},
    "-*": {Logic.BI: Wand},
}
_UNITS = {
    "top": {Logic.BI: Top},
    "top*": {Logic.BI: MTop},
    "mtop": {Logic.BI: MTop},
    "bot": {Logic.IPL: Bottom, Logic.BI: Bottom},
    "1": {Logic.IMALL: One},
    "0": {Logic.IMALL: Zero},
}
_LEVEL = {"/\\": 3, "*": 3, "&": 3, "\\/": 2, "+": 2, "->": 1, "-o": 1, "-*": 1}


@dataclass
class _Tok:
    kind: str
    value: str
    pos: int


def _tokenize(text: str) -> list[_Tok]:
    toks: list[_Tok] = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ParseError(f"unexpected character {text[pos:].lstrip()[:1]!r}", text, pos)
        start = m.start(m.lastgroup)
        toks.append(_Tok(m.lastgroup, m.group(m.lastgroup), start))
        pos = m.end()
    return toks


class _FormulaParser:
    def __init__(self, text: str, logic: Logic, names: dict | None):
        self.text = text
        self.logic = logic
        self.toks = _tokenize(text)
        self.i = 0
        self.names = names or {}

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else None

    def error(self, msg: str, tok: _Tok | None = None):
        pos = tok.pos if tok else len(self.text)
        raise ParseError(msg, self.text, pos)

    def parse(self) -> Formula:
        if not self.toks:
            raise ParseError("empty formula")
        f = self.expr(1)
        if self.peek() is not None:
            self.error(f"unexpected {self.peek().value!r}", self.peek())
        return f

    def connective(self, tok: _Tok, table: dict):
        cls = table[tok.value].get(self.logic)
        if cls is None:
            raise LogicMismatch(
                f"connective {tok.value!r} is not part of {self.logic.value} (column {tok.pos + 1})"
            )
        return cls

    def expr(self, level: int) -> Formula:
        if level > 3:
            return self.primary()
        left = self.expr(level + 1)
        while True:
            tok = self.peek()
            if tok is None or tok.kind != "op" or _LEVEL.get(tok.value) != level:
                return left
            self.i += 1
            cls = self.connective(tok, _BINARY)
            if level == 1:
                # right associative
                right = self.expr(1)
                return cls(left, right)
            right = self.expr(level + 1)
            left = cls(left, right)

    def primary(self) -> Formula:
        tok = self.peek()
        if tok is None:
            self.error("unexpected end of formula")
        self.i += 1
        if tok.kind == "op" and tok.value == "(":
            f = self.expr(1)
            close = self.peek()
            if close is None or close.value != ")":
                self.error("expected ')'", close)
            self.i += 1
            return f
        if tok.kind == "unit":
            return self.connective(tok, _UNITS)()
        if tok.kind == "name":
            if tok.value[0].isupper():
                if tok.value in self.names:
                    return self.names[tok.value]
                self.error(f"unknown name {tok.value!r}", tok)
            return Atom(tok.value)
        self.error(f"unexpected {tok.value!r}", tok)


def parse_formula(text: str, logic: Logic | str, names: dict | None = None) -> Formula:
    """Parse ``text`` as a formula of ``logic``.

    ``names`` maps upper-case identifiers to formulas already defined (model
    policies); they are spliced in verbatim.
    """
    logic = Logic.coerce(logic)
    f = _FormulaParser(text, logic, names).parse()
    return check_formula(f, logic)


# ---------------------------------------------------------------------------
# rendering

_SYMBOL = {
    And: "/\\",
    Or: "\\/",
    Imp: "->",
    Star: "*",
    Wand: "-*",
    Lolli: "-o",
    Tensor: "*",
    With: "&",
    Plus: "+",
}
_USYMBOL = {
    And: "∧",
    Or: "∨",
    Imp: "→",
    Star: "∗",
    Wand: "−∗",
    Lolli: "⊸",
    Tensor: "⊗",
    With: "&",
    Plus: "⊕",
}
_UNIT_TEXT = {Top: "top", MTop: "top*", Bottom: "bot", One: "1", Zero: "0"}
_UNIT_UTEXT = {Top: "⊤", MTop: "⊤*", Bottom: "⊥", One: "1", Zero: "0"}


def _level(f: Formula) -> int:
    if isinstance(f, Binary):
        return _LEVEL[_SYMBOL[type(f)]]
    return 4


def render_formula(f: Formula, unicode: bool = False) -> str:
    if isinstance(f, Atom):
        return f.name
    if not isinstance(f, Binary):
        return (_UNIT_UTEXT if unicode else _UNIT_TEXT)[type(f)]
    lv = _level(f)
    left = render_formula(f.left, unicode)
    right = render_formula(f.right, unicode)
    # only a chain of one connective in its associative direction goes bare
    if isinstance(f.left, Binary) and not (lv > 1 and type(f.left) is type(f)):
        left = f"({left})"
    if isinstance(f.right, Binary) and not (lv == 1 and type(f.right) is type(f)):
        right = f"({right})"
    sym = (_USYMBOL if unicode else _SYMBOL)[type(f)]
    return f"{left} {sym} {right}"


def render_bunch(b: Bunch, unicode: bool = False, item=None) -> str:
    item = item or (lambda x: render_formula(x, unicode) if isinstance(x, Formula) else str(x))

    def go(node: Bunch, top: bool) -> str:
        if isinstance(node, Leaf):
            return item(node.item)
        if isinstance(node, AddUnit):
            return "∅+" if unicode else "e+"
        if isinstance(node, MulUnit):
            return "∅×" if unicode else "e*"
        if isinstance(node, Hole):
            return "·" if unicode else "_"
        sep = " ; " if isinstance(node, AddJoin) else " , "
        # mixing the two joins without parentheses is rejected by the parser,
        # so parenthesize every nested join
        left = go(node.left, False)
        right = go(node.right, False)
        body = f"{left}{sep}{right}"
        return body if top else f"({body})"

    return go(b, True)


def render(x, unicode: bool = False) -> str:
    if isinstance(x, Formula):
        return render_formula(x, unicode)
    if isinstance(x, Bunch):
        return render_bunch(x, unicode)
    raise TypeError(f"cannot render {type(x).__name__}")


# ---------------------------------------------------------------------------
# bunches


def _split_top(text: str, start: int, end: int):
    """Split text[start:end] at depth-0 ',' and ';'. Returns (pieces, separators)."""
    pieces, seps = [], []
    depth = 0
    last = start
    for i in range(start, end):
        ch = text[i]
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
            if depth < 0:
                raise ParseError("unbalanced ')'", text, i)
        elif ch in ",;" and depth == 0:
            pieces.append((last, i))
            seps.append((ch, i))
            last = i + 1
    if depth != 0:
        raise ParseError("unbalanced '('", text, end)
    pieces.append((last, end))
    return pieces, seps


def _wrapped(text: str, a: int, b: int) -> bool:
    """True when text[a:b] (stripped) is one parenthesized group."""
    if a >= b or text[a] != "(" or text[b - 1] != ")":
        return False
    depth = 0
    for i in range(a, b):
        if text[i] == "(":
            depth += 1
        elif text[i] == ")":
            depth -= 1
            if depth == 0 and i != b - 1:
                return False
    return True


def _strip(text: str, a: int, b: int):
    while a < b and text[a].isspace():
        a += 1
    while b > a and text[b - 1].isspace():
        b -= 1
    return a, b


def parse_bunch(text: str, item=None, hole: str | None = None) -> Bunch:
    """Parse a bunch.  ``item`` turns an item's text into a leaf payload; by
    default items must be atom names.  If ``hole`` is given, that identifier
    denotes the hole of a contextual bunch.
    """
    if item is None:
        def item(s: str, pos: int):
            from rsw.formulas import is_atom_name

            if not is_atom_name(s):
                raise ParseError(f"expected an atom, found {s!r}", text, pos)
            return s

    def go(a: int, b: int) -> Bunch:
        a, b = _strip(text, a, b)
        if a >= b:
            raise ParseError("empty bunch", text, a)
        pieces, seps = _split_top(text, a, b)
        if len(pieces) == 1:
            chunk = text[a:b]
            if chunk == "e*":
                return MulUnit()
            if chunk == "e+":
                return AddUnit()
            if hole is not None and chunk == hole:
                return Hole()
            if _wrapped(text, a, b):
                return go(a + 1, b - 1)
            return Leaf(item(chunk, a))
        kinds = {s for s, _ in seps}
        if len(kinds) > 1:
            pos = next(p for s, p in seps if s != seps[0][0])
            raise ParseError("mixing ',' and ';' needs parentheses", text, pos)
        joiner = MulJoin if seps[0][0] == "," else AddJoin
        parts = [go(x, y) for x, y in pieces]
        out = parts[0]
        for p in parts[1:]:
            out = joiner(out, p)
        return out

    if not text.strip():
        raise ParseError("empty bunch")
    return go(0, len(text))


def parse_formula_bunch(text: str, logic: Logic | str, names: dict | None = None) -> Bunch:
    """A bunch whose items are formulas of ``logic``."""
    logic = Logic.coerce(logic)

    def item(s: str, pos: int):
        try:
            return parse_formula(s, logic, names)
        except ParseError as exc:
            raise ParseError(str(exc).split(" at column")[0], text, pos + exc.pos) from None

    return parse_bunch(text, item=item)
