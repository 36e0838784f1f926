"""A small line-oriented scenario language.

One statement per line; ``#`` starts a comment.  Statements::

    space P2 = proj 2 [gen h]
    space P = projbundle X E [gen a]
    space W = product_p1 X [gen t]       # also W.fiber0, W.fiberinf
    space B = blowup X Y [gen z]         # also B.exc (immersion), B.E, B.q
    space pt = point
    immersion L = sub_linear P2 1 [gen k]
    bundle E on P2 rank 2 chern 3*h, h^2
    bundle O1 on P2 line h
    bundle T on P2 tangent
    bundle F = dual E | sum E G | twist E O1 | restrict L E
    class a on P2 = ch(E) * td(T)
    eval integral(a) on P2
    expect ch(O1) = 1 + h + 1/2*h^2 on P2
    check hrr 2 1

An immersion name also denotes its source space.  Expressions use
identifiers, rationals a/b, + - * ^ and the functions chern(E, i), c(E),
ch(E), td(E), segre(E), dual(E) (inside the bundle argument), exp(e),
integral(e), push(map, e) and pull(map, e).
"""

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from . import checks as _checks
from .classes import (
    BundleClass,
    chern_to_ch,
    dual,
    line_bundle,
    pullback_bundle,
    segre,
    todd,
    twist_by_line,
    whitney_sum,
)
from .graded_ring import exp as _exp
from .render import render
from .report import CheckReport
from .snc import coordinate_hyperplanes
from .spaces import (
    BlowupData,
    BlowupElement,
    Immersion,
    Space,
    blowup,
    point,
    product_p1,
    projective_bundle,
    projective_space,
    sub_linear_space,
    tangent_bundle,
)


class ScenarioError(Exception):
    kind = "ScenarioError"

    def __init__(self, message: str, line: int = 0, col: int = 0):
        self.message = message
        self.line = line
        self.col = col
        super().__init__(f"{line}:{col}: {self.kind}: {message}")


class ParseError(ScenarioError):
    kind = "ParseError"


class ScenarioNameError(ScenarioError):
    kind = "NameError"


class ScenarioTypeError(ScenarioError):
    kind = "TypeError"


# tokens

_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+(?:/\d+)?)|(?P<ident>[A-Za-z_][A-Za-z0-9_.]*)|(?P<op>[-+*^(),=]))"
)


@dataclass
class Token:
    kind: str  # num, ident, op
    text: str
    line: int
    col: int
    value: Optional[Fraction] = None


def tokenize(text: str, line: int = 1, col0: int = 1) -> List[Token]:
    out = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            start = len(text[pos:]) - len(text[pos:].lstrip())
            col = col0 + pos + start
            ch = text[pos + start]
            hint = " (division is only allowed inside a rational literal a/b)" if ch == "/" else ""
            raise ParseError(f"unexpected character {ch!r}{hint}", line, col)
        kind = m.lastgroup
        start = m.start(kind)
        tok = Token(kind, m.group(kind), line, col0 + start)
        if kind == "num":
            if "/" in tok.text:
                a, b = tok.text.split("/")
                if int(b) == 0:
                    raise ParseError("zero denominator", line, tok.col)
                tok.value = Fraction(int(a), int(b))
            else:
                tok.value = Fraction(int(tok.text))
            nxt = m.end()
            if nxt < len(text) and (text[nxt] == "." or text[nxt].isalpha()):
                raise ParseError(f"malformed number near {text[start:nxt + 1]!r}", line, tok.col)
        out.append(tok)
        pos = m.end()
    return out


# expression syntax tree


@dataclass
class Node:
    line: int
    col: int


@dataclass
class Num(Node):
    value: Fraction


@dataclass
class Name(Node):
    name: str


@dataclass
class Call(Node):
    func: str
    args: list


@dataclass
class BinOp(Node):
    op: str
    left: Node
    right: Node


@dataclass
class Neg(Node):
    arg: Node


@dataclass
class Pow(Node):
    base: Node
    exponent: int


FUNCTIONS = {
    "chern": 2,
    "c": 1,
    "ch": 1,
    "td": 1,
    "segre": 1,
    "dual": 1,
    "exp": 1,
    "integral": 1,
    "push": 2,
    "pull": 2,
}
KEYWORDS = {"on"}


class _Parser:
    def __init__(self, tokens: List[Token], line: int, end_col: int):
        self.toks = tokens
        self.i = 0
        self.line = line
        self.end_col = end_col

    def peek(self) -> Optional[Token]:
        return self.toks[self.i] if self.i < len(self.toks) else None

    def at_end(self) -> bool:
        return self.i >= len(self.toks)

    def next(self, what="token") -> Token:
        t = self.peek()
        if t is None:
            raise ParseError(f"expected {what} at end of line", self.line, self.end_col)
        self.i += 1
        return t

    def expect_op(self, op):
        t = self.next(f"'{op}'")
        if t.kind != "op" or t.text != op:
            raise ParseError(f"expected '{op}', found {t.text!r}", t.line, t.col)
        return t

    def expect_word(self, word):
        t = self.next(f"'{word}'")
        if t.kind != "ident" or t.text != word:
            raise ParseError(f"expected '{word}', found {t.text!r}", t.line, t.col)
        return t

    def ident(self, what="a name") -> Token:
        t = self.next(what)
        if t.kind != "ident":
            raise ParseError(f"expected {what}, found {t.text!r}", t.line, t.col)
        return t

    def integer(self, what="an integer") -> Tuple[int, Token]:
        t = self.next(what)
        sign = 1
        first = t
        if t.kind == "op" and t.text == "-":
            sign = -1
            t = self.next(what)
        if t.kind != "num" or t.value.denominator != 1:
            raise ParseError(f"expected {what}, found {t.text!r}", t.line, t.col)
        return sign * int(t.value), first

    def done(self):
        t = self.peek()
        if t is not None:
            raise ParseError(f"unexpected {t.text!r}", t.line, t.col)

    # expressions

    def expr(self) -> Node:
        node = self.term()
        while True:
            t = self.peek()
            if t and t.kind == "op" and t.text in "+-":
                self.i += 1
                node = BinOp(t.line, t.col, t.text, node, self.term())
            else:
                return node

    def term(self) -> Node:
        node = self.unary()
        while True:
            t = self.peek()
            if t and t.kind == "op" and t.text == "*":
                self.i += 1
                node = BinOp(t.line, t.col, "*", node, self.unary())
            else:
                return node

    def unary(self) -> Node:
        t = self.peek()
        if t and t.kind == "op" and t.text == "-":
            self.i += 1
            return Neg(t.line, t.col, self.unary())
        if t and t.kind == "op" and t.text == "+":
            self.i += 1
            return self.unary()
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        t = self.peek()
        if t and t.kind == "op" and t.text == "^":
            self.i += 1
            e = self.next("an exponent")
            if e.kind != "num" or e.value.denominator != 1:
                raise ParseError("exponent must be a non-negative integer", e.line, e.col)
            return Pow(t.line, t.col, base, int(e.value))
        return base

    def atom(self) -> Node:
        t = self.next("an expression")
        if t.kind == "num":
            return Num(t.line, t.col, t.value)
        if t.kind == "ident":
            nxt = self.peek()
            if nxt and nxt.kind == "op" and nxt.text == "(":
                if t.text not in FUNCTIONS:
                    raise ScenarioNameError(f"unknown function {t.text!r}", t.line, t.col)
                self.i += 1
                args = [self.expr()]
                while True:
                    sep = self.next("')'")
                    if sep.kind == "op" and sep.text == ",":
                        args.append(self.expr())
                    elif sep.kind == "op" and sep.text == ")":
                        break
                    else:
                        raise ParseError(f"expected ',' or ')', found {sep.text!r}", sep.line, sep.col)
                if len(args) != FUNCTIONS[t.text]:
                    raise ParseError(f"{t.text} takes {FUNCTIONS[t.text]} argument(s)", t.line, t.col)
                return Call(t.line, t.col, t.text, args)
            return Name(t.line, t.col, t.text)
        if t.kind == "op" and t.text == "(":
            node = self.expr()
            self.expect_op(")")
            return node
        raise ParseError(f"unexpected {t.text!r}", t.line, t.col)


def parse_expression(text: str, line: int = 1) -> Node:
    toks = tokenize(text, line)
    p = _Parser(toks, line, len(text) + 1)
    node = p.expr()
    p.done()
    return node


# statements


@dataclass
class Statement:
    kind: str  # eval, expect, check
    line: int
    text: str
    data: dict = field(default_factory=dict)


@dataclass
class Scenario:
    """A parsed and validated scenario: declared objects plus actions in order."""

    spaces: Dict[str, Space] = field(default_factory=dict)
    immersions: Dict[str, Immersion] = field(default_factory=dict)
    maps: Dict[str, object] = field(default_factory=dict)
    bundles: Dict[str, BundleClass] = field(default_factory=dict)
    classes: Dict[str, Tuple[Space, object]] = field(default_factory=dict)
    blowups: Dict[str, BlowupData] = field(default_factory=dict)
    statements: List[Statement] = field(default_factory=list)
    names: Dict[str, str] = field(default_factory=dict)

    @property
    def checks(self) -> List[Statement]:
        return [s for s in self.statements if s.kind in ("check", "expect")]

    def space(self, name: str) -> Optional[Space]:
        if name in self.spaces:
            return self.spaces[name]
        if name in self.immersions:
            return self.immersions[name].sub
        return None

    def declare(self, tok: Token, kind: str):
        if tok.text in self.names:
            raise ScenarioNameError(f"{tok.text!r} is already declared", tok.line, tok.col)
        if tok.text in KEYWORDS or tok.text in FUNCTIONS:
            raise ParseError(f"{tok.text!r} is reserved", tok.line, tok.col)
        self.names[tok.text] = kind


def _wrap(exc, tok):
    return ScenarioTypeError(str(exc), tok.line, tok.col)


class _Builder:
    def __init__(self):
        self.sc = Scenario()

    # name lookups

    def space_ref(self, tok: Token) -> Space:
        S = self.sc.space(tok.text)
        if S is None:
            if tok.text in self.sc.names:
                raise ScenarioTypeError(f"{tok.text!r} is a {self.sc.names[tok.text]}, not a space", tok.line, tok.col)
            raise ScenarioNameError(f"undeclared space {tok.text!r}", tok.line, tok.col)
        return S

    def immersion_ref(self, tok: Token) -> Immersion:
        if tok.text in self.sc.immersions:
            return self.sc.immersions[tok.text]
        if tok.text in self.sc.names:
            raise ScenarioTypeError(f"{tok.text!r} is a {self.sc.names[tok.text]}, not an immersion", tok.line, tok.col)
        raise ScenarioNameError(f"undeclared immersion {tok.text!r}", tok.line, tok.col)

    def bundle_ref(self, tok: Token) -> BundleClass:
        if tok.text in self.sc.bundles:
            return self.sc.bundles[tok.text]
        if tok.text in self.sc.names:
            raise ScenarioTypeError(f"{tok.text!r} is a {self.sc.names[tok.text]}, not a bundle", tok.line, tok.col)
        raise ScenarioNameError(f"undeclared bundle {tok.text!r}", tok.line, tok.col)

    def blowup_ref(self, tok: Token) -> BlowupData:
        if tok.text in self.sc.blowups:
            return self.sc.blowups[tok.text]
        if tok.text in self.sc.names:
            raise ScenarioTypeError(f"{tok.text!r} is not a blowup", tok.line, tok.col)
        raise ScenarioNameError(f"undeclared blowup {tok.text!r}", tok.line, tok.col)

    # statements

    def statement(self, toks: List[Token], line: int, text: str):
        p = _Parser(toks, line, len(text) + 1)
        head = p.ident("a statement keyword")
        handler = getattr(self, f"st_{head.text}", None)
        if handler is None:
            raise ParseError(f"unknown statement {head.text!r}", head.line, head.col)
        handler(p, text)

    def _gen_option(self, p: _Parser, default: str) -> str:
        if not p.at_end():
            p.expect_word("gen")
            g = p.ident("a generator name").text
            p.done()
            return g
        return default

    def st_space(self, p: _Parser, text):
        name = p.ident("a space name")
        p.expect_op("=")
        ctor = p.ident("a space constructor")
        sc = self.sc
        try:
            if ctor.text == "point":
                p.done()
                S = point(name.text)
            elif ctor.text == "proj":
                n, ntok = p.integer("a dimension")
                if n < 0:
                    raise ScenarioTypeError("dimension must be non-negative", ntok.line, ntok.col)
                S = projective_space(n, self._gen_option(p, "h"), name=name.text)
            elif ctor.text == "projbundle":
                base = self.space_ref(p.ident("a base space"))
                btok = p.ident("a bundle")
                E = self.bundle_ref(btok)
                if E.space is not base:
                    raise ScenarioTypeError("bundle does not live on the base", btok.line, btok.col)
                S, pi, _ = projective_bundle(base, E, self._gen_option(p, "a"), name=name.text)
                sc.maps[name.text] = pi
            elif ctor.text == "product_p1":
                base = self.space_ref(p.ident("a base space"))
                prod = product_p1(base, self._gen_option(p, "t"), name=name.text)
                S = prod.space
                sc.maps[name.text] = prod.pr1
                for label, imm in (("fiber0", prod.fiber0), ("fiberinf", prod.fiber_inf)):
                    full = f"{name.text}.{label}"
                    sc.names[full] = "immersion"
                    sc.immersions[full] = imm
                    sc.maps[full] = imm
            elif ctor.text == "blowup":
                base = self.space_ref(p.ident("a space"))
                ytok = p.ident("an immersion")
                Y = self.immersion_ref(ytok)
                if Y.ambient is not base:
                    raise ScenarioTypeError(f"{ytok.text} does not lie in the given space", ytok.line, ytok.col)
                bl = blowup(base, Y, self._gen_option(p, "z"), name=name.text)
                S = bl.space
                sc.blowups[name.text] = bl
                sc.maps[name.text] = bl.p
                for label, kind, obj in (("exc", "immersion", bl.exceptional), ("q", "map", bl.q)):
                    full = f"{name.text}.{label}"
                    sc.names[full] = kind
                    if kind == "immersion":
                        sc.immersions[full] = obj
                    sc.maps[full] = obj
                sc.names[f"{name.text}.E"] = "space"
                sc.spaces[f"{name.text}.E"] = bl.exceptional.sub
            else:
                raise ParseError(f"unknown space constructor {ctor.text!r}", ctor.line, ctor.col)
        except ScenarioError:
            raise
        except (ValueError, KeyError) as exc:
            raise _wrap(exc, ctor)
        sc.declare(name, "space")
        sc.spaces[name.text] = S

    def st_immersion(self, p: _Parser, text):
        name = p.ident("an immersion name")
        p.expect_op("=")
        ctor = p.ident("an immersion constructor")
        if ctor.text != "sub_linear":
            raise ParseError(f"unknown immersion constructor {ctor.text!r}", ctor.line, ctor.col)
        P = self.space_ref(p.ident("a projective space"))
        k, ktok = p.integer("a dimension")
        gen = self._gen_option(p, f"h_{name.text}")
        try:
            Y = sub_linear_space(P, k, gen=gen, name=name.text)
        except ValueError as exc:
            raise _wrap(exc, ktok)
        self.sc.declare(name, "immersion")
        self.sc.immersions[name.text] = Y
        self.sc.maps[name.text] = Y

    def st_bundle(self, p: _Parser, text):
        name = p.ident("a bundle name")
        sep = p.next("'on' or '='")
        sc = self.sc
        if sep.kind == "ident" and sep.text == "on":
            S = self.space_ref(p.ident("a space"))
            how = p.ident("rank, line or tangent")
            try:
                if how.text == "rank":
                    r, rtok = p.integer("a rank")
                    chern = []
                    if not p.at_end():
                        p.expect_word("chern")
                        chern.append(p.expr())
                        while not p.at_end():
                            p.expect_op(",")
                            chern.append(p.expr())
                    values = []
                    for i, node in enumerate(chern, start=1):
                        values.append(self.as_element(node, S))
                    E = BundleClass(S, r, tuple(values))
                elif how.text == "line":
                    node = p.expr()
                    p.done()
                    E = line_bundle(S, self.as_element(node, S))
                elif how.text == "tangent":
                    p.done()
                    E = tangent_bundle(S)
                else:
                    raise ParseError(f"expected rank, line or tangent, found {how.text!r}", how.line, how.col)
            except ScenarioError:
                raise
            except ValueError as exc:
                raise _wrap(exc, how)
        elif sep.kind == "op" and sep.text == "=":
            op = p.ident("dual, sum, twist or restrict")
            try:
                if op.text == "dual":
                    E = dual(self.bundle_ref(p.ident("a bundle")))
                elif op.text in ("sum", "twist"):
                    a = self.bundle_ref(p.ident("a bundle"))
                    btok = p.ident("a bundle")
                    b = self.bundle_ref(btok)
                    if a.space is not b.space:
                        raise ScenarioTypeError("bundles live on different spaces", btok.line, btok.col)
                    E = whitney_sum(a, b) if op.text == "sum" else twist_by_line(a, b)
                elif op.text == "restrict":
                    Y = self.immersion_ref(p.ident("an immersion"))
                    btok = p.ident("a bundle")
                    b = self.bundle_ref(btok)
                    if b.space is not Y.ambient:
                        raise ScenarioTypeError("bundle does not live on the ambient space", btok.line, btok.col)
                    E = pullback_bundle(b, Y.restrict, Y.sub)
                else:
                    raise ParseError(f"unknown bundle operation {op.text!r}", op.line, op.col)
                p.done()
            except ScenarioError:
                raise
            except ValueError as exc:
                raise _wrap(exc, op)
        else:
            raise ParseError(f"expected 'on' or '=', found {sep.text!r}", sep.line, sep.col)
        sc.declare(name, "bundle")
        sc.bundles[name.text] = E

    def st_class(self, p: _Parser, text):
        name = p.ident("a class name")
        p.expect_word("on")
        S = self.space_ref(p.ident("a space"))
        p.expect_op("=")
        node = p.expr()
        p.done()
        value = self.as_element(node, S)
        self.sc.declare(name, "class")
        self.sc.classes[name.text] = (S, value)

    def _expr_then_on(self, p: _Parser):
        node = p.expr()
        p.expect_word("on")
        stok = p.ident("a space")
        S = self.space_ref(stok)
        p.done()
        return node, S

    def st_eval(self, p: _Parser, text):
        start = p.peek()
        node, S = self._expr_then_on(p)
        self.evaluate(node, S)  # type check
        self.sc.statements.append(Statement("eval", start.line if start else 0, text.strip(), {"node": node, "space": S}))

    def st_expect(self, p: _Parser, text):
        lhs = p.expr()
        p.expect_op("=")
        rhs, S = self._expr_then_on(p)
        self.evaluate(lhs, S)
        self.evaluate(rhs, S)
        self.sc.statements.append(Statement("expect", lhs.line, text.strip(), {"lhs": lhs, "rhs": rhs, "space": S}))

    def st_check(self, p: _Parser, text):
        kind = p.ident("a check name")
        build = getattr(self, f"ck_{kind.text}", None)
        if build is None:
            raise ParseError(f"unknown check {kind.text!r}", kind.line, kind.col)
        try:
            runner = build(p)
        except ScenarioError:
            raise
        except ValueError as exc:
            raise _wrap(exc, kind)
        p.done()
        self.sc.statements.append(Statement("check", kind.line, text.strip(), {"run": runner, "name": kind.text}))

    # check argument parsers; each returns a zero-argument callable

    def ck_hrr(self, p):
        n, ntok = p.integer("a dimension")
        d, _ = p.integer("a twist")
        if n < 0:
            raise ScenarioTypeError("dimension must be non-negative", ntok.line, ntok.col)
        return lambda: _checks.check_hrr_projective_space(n, d)

    def ck_grr(self, p):
        Y = self.immersion_ref(p.ident("an immersion"))
        F = self._bundle_on(p, Y.sub)
        return lambda: _checks.check_grr_immersion(Y, F)

    def ck_self_intersection(self, p):
        Y = self.immersion_ref(p.ident("an immersion"))
        a = self.as_element(p.expr(), Y.sub)
        return lambda: _checks.check_self_intersection(Y, a)

    def ck_excess(self, p):
        bl = self.blowup_ref(p.ident("a blowup"))
        a = self.as_element(p.expr(), bl.center.sub)
        return lambda: _checks.check_excess_deligne(bl, a)

    def ck_k_theory(self, p):
        tok = p.ident("an immersion or blowup")
        if tok.text in self.sc.blowups:
            target = self.sc.blowups[tok.text]
            sub = target.center.sub
        else:
            target = self.immersion_ref(tok)
            sub = target.sub
        x = self._bundle_on(p, sub) if not p.at_end() else None
        return lambda: _checks.check_k_theory_formulas(target, x)

    def ck_whitney(self, p):
        E = self.bundle_ref(p.ident("a bundle"))
        F = self._bundle_on(p, E.space)
        return lambda: _checks.check_whitney(E, F)

    def ck_deformation(self, p):
        Y = self.immersion_ref(p.ident("an immersion"))
        F = self._bundle_on(p, Y.ambient)
        E = self._bundle_on(p, Y.sub)
        G = self._bundle_on(p, Y.ambient) if not p.at_end() else None
        return lambda: _checks.check_deformation_lemma(Y.ambient, Y, F, E, G)

    def ck_divisor_pullback(self, p):
        bl = self.blowup_ref(p.ident("a blowup"))
        D = self.immersion_ref(p.ident("an immersion"))
        a = self.as_element(p.expr(), D.sub)
        return lambda: _checks.check_divisor_pullback(bl, D, a)

    def ck_snc(self, p):
        n, ntok = p.integer("a dimension")
        ms = []
        while not p.at_end():
            m, mtok = p.integer("a multiplicity")
            if m < 1:
                raise ScenarioTypeError("multiplicities must be positive", mtok.line, mtok.col)
            ms.append(m)
        if not ms:
            raise ParseError("snc needs at least one multiplicity", ntok.line, ntok.col)
        D = coordinate_hyperplanes(n, ms)
        return lambda: _checks.check_snc(D)

    def _bundle_on(self, p, S):
        tok = p.ident("a bundle")
        E = self.bundle_ref(tok)
        if E.space is not S:
            raise ScenarioTypeError(f"{tok.text} lives on {E.space.name}, expected {S.name}", tok.line, tok.col)
        return E

    # expressions

    def as_element(self, node: Node, S: Space):
        v = self.evaluate(node, S)
        if isinstance(v, Fraction):
            return S.scalar(v)
        return v

    def bundle_expr(self, node: Node, S: Space) -> BundleClass:
        if isinstance(node, Name):
            tok = Token("ident", node.name, node.line, node.col)
            E = self.bundle_ref(tok)
        elif isinstance(node, Call) and node.func == "dual":
            E = dual(self.bundle_expr(node.args[0], S))
        else:
            raise ScenarioTypeError("expected a bundle", node.line, node.col)
        if E.space is not S:
            raise ScenarioTypeError(f"bundle lives on {E.space.name}, expected {S.name}", node.line, node.col)
        return E

    def map_ref(self, node: Node):
        if not isinstance(node, Name):
            raise ScenarioTypeError("expected a map name", node.line, node.col)
        m = self.sc.maps.get(node.name)
        if m is None:
            if node.name in self.sc.names:
                raise ScenarioTypeError(f"{node.name!r} is not a map", node.line, node.col)
            raise ScenarioNameError(f"undeclared map {node.name!r}", node.line, node.col)
        return m

    def evaluate(self, node: Node, S: Space):
        """Value of ``node`` as an element of S, or a Fraction for scalars."""
        sc = self.sc
        if isinstance(node, Num):
            return node.value
        if isinstance(node, Name):
            if node.name in S.generator_names:
                return S.gen(node.name)
            if node.name in sc.classes:
                T, value = sc.classes[node.name]
                if T is not S:
                    raise ScenarioTypeError(f"class {node.name!r} lives on {T.name}, not {S.name}", node.line, node.col)
                return value
            if node.name in sc.names:
                raise ScenarioTypeError(f"{node.name!r} is a {sc.names[node.name]}, not a class", node.line, node.col)
            raise ScenarioNameError(f"undeclared name {node.name!r} on {S.name}", node.line, node.col)
        if isinstance(node, Neg):
            return -self.evaluate(node.arg, S)
        if isinstance(node, Pow):
            return self.evaluate(node.base, S) ** node.exponent
        if isinstance(node, BinOp):
            a = self.evaluate(node.left, S)
            b = self.evaluate(node.right, S)
            if node.op == "+":
                return _promote(a, S) + b if isinstance(a, Fraction) and not isinstance(b, Fraction) else a + b
            if node.op == "-":
                return _promote(a, S) - b if isinstance(a, Fraction) and not isinstance(b, Fraction) else a - b
            return b * a if isinstance(a, Fraction) and not isinstance(b, Fraction) else a * b
        if isinstance(node, Call):
            f = node.func
            try:
                if f == "chern":
                    i = node.args[1]
                    if not isinstance(i, Num) or i.value.denominator != 1 or i.value < 0:
                        raise ScenarioTypeError("chern index must be a non-negative integer", i.line, i.col)
                    return self.bundle_expr(node.args[0], S).c(int(i.value))
                if f == "c":
                    return self.bundle_expr(node.args[0], S).total()
                if f == "ch":
                    return chern_to_ch(self.bundle_expr(node.args[0], S)).ch
                if f == "td":
                    return todd(self.bundle_expr(node.args[0], S))
                if f == "segre":
                    return segre(self.bundle_expr(node.args[0], S))
                if f == "dual":
                    raise ScenarioTypeError("dual(E) is a bundle; use it inside ch, td, c, chern or segre", node.line, node.col)
                if f == "exp":
                    return _exp(self.as_element(node.args[0], S))
                if f == "integral":
                    return Fraction(S.integrate(self.as_element(node.args[0], S)))
                if f in ("push", "pull"):
                    m = self.map_ref(node.args[0])
                    src, tgt = (m.sub, m.ambient) if isinstance(m, Immersion) else (m.source, m.target)
                    inner_space, out_space = (src, tgt) if f == "push" else (tgt, src)
                    if out_space is not S:
                        raise ScenarioTypeError(
                            f"{f} along {node.args[0].name} lands on {out_space.name}, expected {S.name}", node.line, node.col
                        )
                    inner = self.as_element(node.args[1], inner_space)
                    return m.push(inner) if f == "push" else m.pull(inner)
            except ScenarioError:
                raise
            except (ValueError, KeyError) as exc:
                raise ScenarioTypeError(str(exc), node.line, node.col)
        raise ScenarioTypeError("cannot evaluate expression", node.line, node.col)


def _promote(q: Fraction, S: Space):
    return S.scalar(q)


def parse(text: str) -> Scenario:
    """Parse and validate a scenario; raises ParseError, ScenarioNameError or ScenarioTypeError."""
    b = _Builder()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        if not line.strip():
            continue
        toks = tokenize(line, lineno)
        b.statement(toks, lineno, line)
    return b.sc


def parse_element(text: str, space: Space, scenario: Optional[Scenario] = None):
    """Parse an expression (e.g. a rendered element) as an element of ``space``."""
    b = _Builder()
    if scenario is not None:
        b.sc = scenario
    return b.as_element(parse_expression(text), space)


@dataclass
class RunEntry:
    kind: str  # eval, expect, check
    label: str
    line: int
    value: object = None
    report: Optional[CheckReport] = None
    status: str = "pass"  # pass, fail, skipped
    message: str = ""


@dataclass
class RunReport:
    entries: List[RunEntry]

    @property
    def failed(self) -> bool:
        return any(e.status == "fail" for e in self.entries)

    @property
    def exit_code(self) -> int:
        return 1 if self.failed else 0


def run(scenario: Scenario) -> RunReport:
    """Execute evaluations and checks in declaration order."""
    b = _Builder()
    b.sc = scenario
    entries = []
    for st in scenario.statements:
        if st.kind == "eval":
            value = b.evaluate(st.data["node"], st.data["space"])
            entries.append(RunEntry("eval", st.text, st.line, value=value))
        elif st.kind == "expect":
            S = st.data["space"]
            lhs = b.as_element(st.data["lhs"], S)
            rhs = b.as_element(st.data["rhs"], S)
            rep = CheckReport.compare("expect", lhs, rhs)
            entries.append(RunEntry("expect", st.text, st.line, report=rep, status=rep.status))
        else:
            try:
                rep = st.data["run"]()
                entries.append(RunEntry("check", st.text, st.line, report=rep, status=rep.status, value=rep.value))
            except (_checks.NoIndependentLHS, _checks.ScenarioUnsupported) as exc:
                entries.append(RunEntry("check", st.text, st.line, status="skipped", message=str(exc)))
    return RunReport(entries)


def render_value(value, scenario: Optional[Scenario] = None, latex: bool = False) -> str:
    """Render a value; blowup classes use the scenario's names for p and j."""
    if isinstance(value, BlowupElement) and scenario is not None:
        for name, bl in scenario.blowups.items():
            if bl.ring is value.ring:
                return value.render(latex, names=(name, f"{name}.exc"))
    return render(value, latex)


def format_entry(e: RunEntry, latex: bool = False, scenario: Optional[Scenario] = None) -> List[str]:
    if e.kind == "eval":
        return [f"{e.label} = {render_value(e.value, scenario, latex)}"]
    if e.status == "skipped":
        return [f"{e.label}: skipped ({e.message})"]
    rep = e.report
    head = f"{e.label}: {rep.status}"
    if rep.value is not None:
        head += f", value {render(rep.value, latex)}"
    if rep.note:
        head += f" [{rep.note}]"
    lines = [head]
    if not rep.passed:
        failing = [p for p in rep.parts if not p.passed] or [rep]
        for part in failing:
            prefix = f"  {part.name}: " if part is not rep else "  "
            lines.append(f"{prefix}discrepancy {render_value(part.discrepancy, scenario, latex)}")
            lines.append(f"    lhs {render_value(part.lhs, scenario, latex)}")
            lines.append(f"    rhs {render_value(part.rhs, scenario, latex)}")
    return lines
