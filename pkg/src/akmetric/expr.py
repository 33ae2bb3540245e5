"""Expression trees over named coordinates.

Grammar (loosest binding first)::

    expr   := term (('+' | '-') term)*
    term   := power (('*' | '/') power)*
    power  := unary ('^' intexp)*
    unary  := '-' unary | atom
    atom   := NUMBER | 'i' | IDENT | FUNC '(' expr ')' | '(' expr ')'
    intexp := ['-'] INT | '(' ['-'] INT ')'

Unary minus binds tighter than ``^`` so ``-x^2`` is ``(-x)^2``.  A minus sign
directly in front of a number literal folds into a negative constant, and
``(a + b*i)`` / ``(a - b*i)`` with literal ``a``, ``b`` folds into a complex
constant.  ``format_expr`` relies on both folds to make
``parse(format_expr(e)) == e`` hold structurally.
"""

from __future__ import annotations

import cmath
import math
import re
from dataclasses import dataclass
from numbers import Number

from .errors import ExprSyntaxError, UnknownIdentifier

FUNCTIONS = ("sqrt", "exp", "log", "sin", "cos", "sinh", "cosh")
PROJECTIONS = ("re", "im")
RESERVED = frozenset(FUNCTIONS + PROJECTIONS + ("i",))
MAX_DEPTH = 400
# parentheses / unary prefixes; each level costs several parser frames
MAX_NEST = 120


class Expr:
    """Base node.  Arithmetic operators build trees; numbers become ``Const``."""

    __slots__ = ()

    def __add__(self, other):
        return Add(self, as_expr(other))

    def __radd__(self, other):
        return Add(as_expr(other), self)

    def __sub__(self, other):
        return Sub(self, as_expr(other))

    def __rsub__(self, other):
        return Sub(as_expr(other), self)

    def __mul__(self, other):
        return Mul(self, as_expr(other))

    def __rmul__(self, other):
        return Mul(as_expr(other), self)

    def __truediv__(self, other):
        return Div(self, as_expr(other))

    def __rtruediv__(self, other):
        return Div(as_expr(other), self)

    def __neg__(self):
        return Neg(self)

    def __pow__(self, k):
        if not isinstance(k, int):
            raise TypeError("only integer powers are expressible")
        return PowInt(self, k)

    # structural equality and hashing without recursion (trees can be deep)
    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, Expr):
            return NotImplemented
        stack = [(self, other)]
        seen = set()
        while stack:
            a, b = stack.pop()
            if a is b or (id(a), id(b)) in seen:
                continue
            seen.add((id(a), id(b)))
            if type(a) is not type(b) or _payload(a) != _payload(b):
                return False
            stack.extend(zip(children(a), children(b)))
        return True

    def __hash__(self):
        memo = {}
        stack = [(self, False)]
        while stack:
            node, ready = stack.pop()
            if id(node) in memo:
                continue
            kids = children(node)
            if ready:
                memo[id(node)] = hash((type(node).__name__, _payload(node),
                                       tuple(memo[id(k)] for k in kids)))
            else:
                stack.append((node, True))
                stack.extend((k, False) for k in kids)
        return memo[id(self)]


@dataclass(frozen=True, slots=True, eq=False)
class Const(Expr):
    value: complex

    def __post_init__(self):
        object.__setattr__(self, "value", complex(self.value))


@dataclass(frozen=True, slots=True, eq=False)
class Var(Expr):
    index: int


@dataclass(frozen=True, slots=True, eq=False)
class Neg(Expr):
    arg: Expr


@dataclass(frozen=True, slots=True, eq=False)
class Add(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True, slots=True, eq=False)
class Sub(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True, slots=True, eq=False)
class Mul(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True, slots=True, eq=False)
class Div(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True, slots=True, eq=False)
class PowInt(Expr):
    base: Expr
    exp: int


@dataclass(frozen=True, slots=True, eq=False)
class Func(Expr):
    name: str
    arg: Expr

    def __post_init__(self):
        if self.name not in FUNCTIONS:
            raise ValueError(f"unknown function {self.name!r}")


@dataclass(frozen=True, slots=True, eq=False)
class Re(Expr):
    arg: Expr


@dataclass(frozen=True, slots=True, eq=False)
class Im(Expr):
    arg: Expr


BINARY = (Add, Sub, Mul, Div)
UNARY = (Neg, Func, Re, Im)


def as_expr(x) -> Expr:
    if isinstance(x, Expr):
        return x
    if isinstance(x, Number):
        return Const(complex(x))
    raise TypeError(f"cannot convert {type(x).__name__} to Expr")


def _payload(e: Expr):
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Var):
        return e.index
    if isinstance(e, PowInt):
        return e.exp
    if isinstance(e, Func):
        return e.name
    return None


def children(e: Expr) -> tuple:
    if isinstance(e, BINARY):
        return (e.left, e.right)
    if isinstance(e, UNARY):
        return (e.arg,)
    if isinstance(e, PowInt):
        return (e.base,)
    return ()


def rebuild(e: Expr, kids) -> Expr:
    if isinstance(e, BINARY):
        return type(e)(kids[0], kids[1])
    if isinstance(e, Func):
        return Func(e.name, kids[0])
    if isinstance(e, UNARY):
        return type(e)(kids[0])
    if isinstance(e, PowInt):
        return PowInt(kids[0], e.exp)
    return e


def transform(e: Expr, leaf, memo=None) -> Expr:
    """Bottom-up rewrite; ``leaf(node, new_children)`` returns the new node.

    Shared subtrees are rewritten once.
    """
    if memo is None:
        memo = {}

    def go(node):
        key = id(node)
        hit = memo.get(key)
        if hit is not None:
            return hit[1]
        kids = tuple(go(c) for c in children(node))
        out = leaf(node, kids)
        memo[key] = (node, out)
        return out

    return go(e)


def walk(e: Expr):
    """Yield every node once (shared subtrees visited once)."""
    seen = set()
    stack = [e]
    while stack:
        node = stack.pop()
        if id(node) in seen:
            continue
        seen.add(id(node))
        yield node
        stack.extend(children(node))


def has_re_im(e: Expr) -> bool:
    return any(isinstance(n, (Re, Im)) for n in walk(e))


def max_var_index(e: Expr) -> int:
    return max((n.index for n in walk(e) if isinstance(n, Var)), default=-1)


def depth(e: Expr) -> int:
    memo = {}

    def go(node):
        d = memo.get(id(node))
        if d is None:
            d = 1 + max((go(c) for c in children(node)), default=0)
            memo[id(node)] = d
        return d

    return go(e)


def substitute(e: Expr, mapping, memo=None) -> Expr:
    """Replace ``Var(k)`` with ``mapping[k]`` (a dict or sequence of Expr)."""

    def leaf(node, kids):
        if isinstance(node, Var):
            return mapping[node.index]
        return rebuild(node, kids) if kids else node

    return transform(e, leaf, memo)


def conj_consts(e: Expr, memo=None) -> Expr:
    """Conjugate every constant.

    For an expression without re/im this is the function
    ``w -> conj(f(conj(w)))``, which agrees with ``conj(f(x))`` on real ``x``.
    """

    def leaf(node, kids):
        if isinstance(node, Const):
            return Const(node.value.conjugate()) if node.value.imag else node
        if isinstance(node, (Re, Im)):
            raise ValueError("conj_consts requires an expression without re/im")
        return rebuild(node, kids) if kids else node

    return transform(e, leaf, memo)


def eliminate_re_im(e: Expr) -> Expr:
    """Rewrite re/im into an analytic expression equal on real coordinates.

    ``re(f) -> (f + f*)/2`` and ``im(f) -> (f - f*)/(2i)`` where ``f*`` has
    conjugated constants; applied inside out.
    """
    conj_memo: dict = {}

    def leaf(node, kids):
        if isinstance(node, Re):
            f = kids[0]
            return Div(Add(f, conj_consts(f, conj_memo)), Const(2))
        if isinstance(node, Im):
            f = kids[0]
            return Div(Sub(f, conj_consts(f, conj_memo)), Const(2j))
        return rebuild(node, kids) if kids else node

    return transform(e, leaf)


_ELEMENTARY = {
    "sqrt": cmath.sqrt,
    "exp": cmath.exp,
    "log": cmath.log,
    "sin": cmath.sin,
    "cos": cmath.cos,
    "sinh": cmath.sinh,
    "cosh": cmath.cosh,
}


def evaluate(e: Expr, point) -> complex:
    """Plain value of ``e`` at ``point`` (no derivatives, principal branches)."""
    memo = {}

    def go(node):
        key = id(node)
        if key in memo:
            return memo[key]
        if isinstance(node, Const):
            v = node.value
        elif isinstance(node, Var):
            v = complex(point[node.index])
        elif isinstance(node, Neg):
            v = -go(node.arg)
        elif isinstance(node, Add):
            v = go(node.left) + go(node.right)
        elif isinstance(node, Sub):
            v = go(node.left) - go(node.right)
        elif isinstance(node, Mul):
            v = go(node.left) * go(node.right)
        elif isinstance(node, Div):
            v = go(node.left) / go(node.right)
        elif isinstance(node, PowInt):
            v = go(node.base) ** node.exp
        elif isinstance(node, Func):
            v = _ELEMENTARY[node.name](go(node.arg))
        elif isinstance(node, Re):
            v = complex(go(node.arg).real)
        elif isinstance(node, Im):
            v = complex(go(node.arg).imag)
        else:
            raise TypeError(node)
        memo[key] = v
        return v

    return go(e)


# ---------------------------------------------------------------- parsing

_TOKEN = re.compile(
    r"\s*(?:"
    r"(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^(),])"
    r")"
)


def _tokenize(text):
    toks = []
    pos = 0
    n = len(text)
    while True:
        while pos < n and text[pos].isspace():
            pos += 1
        if pos >= n:
            break
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos or m.lastgroup is None:
            raise ExprSyntaxError(f"unexpected character {text[pos]!r}", pos, text)
        kind = m.lastgroup
        toks.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    toks.append(("end", "", n))
    return toks


def check_coords(coords):
    coords = list(coords)
    if not coords:
        raise ValueError("coordinate list is empty")
    if len(set(coords)) != len(coords):
        raise ValueError(f"duplicate coordinate names in {coords}")
    for c in coords:
        if not re.fullmatch(r"[A-Za-z_][A-Za-z_0-9]*", c) or c in RESERVED:
            raise ValueError(f"invalid coordinate name {c!r}")
    return coords


class _Parser:
    def __init__(self, text, coords):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0
        self.names = {c: k for k, c in enumerate(coords)}

    def peek(self, k=0):
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def take(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def error(self, msg, tok=None, cls=ExprSyntaxError):
        tok = tok or self.peek()
        return cls(msg, tok[2], self.text)

    def expect(self, value):
        tok = self.peek()
        if tok[1] != value or tok[0] == "num":
            found = tok[1] or "end of input"
            raise self.error(f"expected {value!r}, found {found!r}")
        return self.take()

    @staticmethod
    def _deep(node_depth, tok, text):
        if node_depth > MAX_DEPTH:
            raise ExprSyntaxError("expression nested too deeply", tok[2], text)

    # every parse method returns (node, depth)
    def parse(self):
        node, _ = self.expr(0)
        tok = self.peek()
        if tok[0] != "end":
            raise self.error(f"unexpected {tok[1]!r}")
        return node

    def expr(self, nest):
        left, d = self.term(nest)
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            tok = self.take()
            right, dr = self.term(nest)
            left = Add(left, right) if tok[1] == "+" else Sub(left, right)
            d = 1 + max(d, dr)
            self._deep(d, tok, self.text)
        return left, d

    def term(self, nest):
        left, d = self.power(nest)
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            tok = self.take()
            right, dr = self.power(nest)
            left = Mul(left, right) if tok[1] == "*" else Div(left, right)
            d = 1 + max(d, dr)
            self._deep(d, tok, self.text)
        return left, d

    def power(self, nest):
        base, d = self.unary(nest)
        while self.peek() == ("op", "^", self.peek()[2]):
            tok = self.take()
            base = PowInt(base, self.intexp())
            d += 1
            self._deep(d, tok, self.text)
        return base, d

    def intexp(self):
        paren = self.peek()[1] == "(" and self.peek()[0] == "op"
        if paren:
            self.take()
        sign = 1
        if self.peek() == ("op", "-", self.peek()[2]):
            self.take()
            sign = -1
        tok = self.peek()
        if tok[0] != "num" or not tok[1].isdigit():
            raise self.error("exponent must be an integer literal")
        self.take()
        if paren:
            self.expect(")")
        return sign * int(tok[1])

    def unary(self, nest):
        tok = self.peek()
        if tok[0] == "op" and tok[1] == "-":
            self.take()
            nxt = self.peek()
            if nxt[0] == "num":
                self.take()
                return Const(-float(nxt[1])), 1
            if nest > MAX_NEST:
                raise self.error("expression nested too deeply", tok)
            arg, d = self.unary(nest + 1)
            self._deep(d + 1, tok, self.text)
            return Neg(arg), d + 1
        return self.atom(nest)

    def _complex_literal(self):
        # '(' ['-'] NUM ('+'|'-') NUM '*' 'i' ')'
        k = 1
        sign = 1.0
        if self.peek(k)[1] == "-" and self.peek(k)[0] == "op":
            sign = -1.0
            k += 1
        shape = [self.peek(k + j) for j in range(6)]
        if (
            shape[0][0] == "num"
            and shape[1][0] == "op" and shape[1][1] in "+-"
            and shape[2][0] == "num"
            and shape[3][:2] == ("op", "*")
            and shape[4][:2] == ("ident", "i")
            and shape[5][:2] == ("op", ")")
        ):
            re_part = sign * float(shape[0][1])
            im_part = float(shape[2][1]) * (1.0 if shape[1][1] == "+" else -1.0)
            self.i += k + 6
            return Const(complex(re_part, im_part))
        return None

    def atom(self, nest):
        tok = self.peek()
        kind, val, _ = tok
        if kind == "num":
            self.take()
            return Const(float(val)), 1
        if kind == "ident":
            self.take()
            if val == "i":
                return Const(1j), 1
            if val in self.names:
                return Var(self.names[val]), 1
            if val in FUNCTIONS or val in PROJECTIONS:
                self.expect("(")
                if nest > MAX_NEST:
                    raise self.error("expression nested too deeply", tok)
                arg, d = self.expr(nest + 1)
                self.expect(")")
                self._deep(d + 1, tok, self.text)
                if val == "re":
                    return Re(arg), d + 1
                if val == "im":
                    return Im(arg), d + 1
                return Func(val, arg), d + 1
            raise self.error(f"unknown identifier {val!r}", tok, UnknownIdentifier)
        if kind == "op" and val == "(":
            lit = self._complex_literal()
            if lit is not None:
                return lit, 1
            self.take()
            if nest > MAX_NEST:
                raise self.error("expression nested too deeply", tok)
            node, d = self.expr(nest + 1)
            self.expect(")")
            return node, d
        found = val or "end of input"
        raise self.error(f"unexpected {found!r}")


def parse(text: str, coords) -> Expr:
    """Parse ``text`` into an expression over the named coordinates.

    Raises ExprSyntaxError (with ``offset``) or UnknownIdentifier.
    """
    coords = check_coords(coords)
    return _Parser(text, coords).parse()


# ------------------------------------------------------------- formatting

_ADD, _MUL, _POW, _UNARY, _ATOM = 1, 2, 3, 4, 5


def _fmt_real(x: float) -> str:
    if not math.isfinite(x):
        raise ValueError(f"non-finite constant {x!r}")
    if x.is_integer() and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


def _is_real_const(e):
    return isinstance(e, Const) and e.value.imag == 0.0


def _nonneg_literal(e):
    return _is_real_const(e) and not _fmt_real(e.value.real).startswith("-")


def _looks_complex_literal(e):
    return (
        isinstance(e, (Add, Sub))
        and _is_real_const(e.left)
        and isinstance(e.right, Mul)
        and _nonneg_literal(e.right.left)
        and e.right.right == Const(1j)
    )


def format_expr(e: Expr, coords) -> str:
    """Render ``e`` with minimal parentheses; inverse of :func:`parse`."""
    coords = list(coords)
    memo = {}

    def wrap(node, need):
        s, lvl = go(node)
        return f"({s})" if lvl < need else s

    def go(node):
        hit = memo.get(id(node))
        if hit is not None:
            return hit
        if isinstance(node, Const):
            z = node.value
            if z.imag == 0.0:
                s = _fmt_real(z.real)
                out = (s, _UNARY if s.startswith("-") else _ATOM)
            elif z == 1j:
                out = ("i", _ATOM)
            else:
                sign = "-" if math.copysign(1.0, z.imag) < 0 else "+"
                out = (f"({_fmt_real(z.real)} {sign} {_fmt_real(abs(z.imag))}*i)", _ATOM)
        elif isinstance(node, Var):
            out = (coords[node.index], _ATOM)
        elif isinstance(node, Neg):
            if _nonneg_literal(node.arg):
                out = (f"-({go(node.arg)[0]})", _UNARY)
            else:
                out = ("-" + wrap(node.arg, _UNARY), _UNARY)
        elif isinstance(node, (Add, Sub)):
            op = " + " if isinstance(node, Add) else " - "
            if _looks_complex_literal(node):
                left = f"({go(node.left)[0]})"
            else:
                left = wrap(node.left, _ADD)
            out = (left + op + wrap(node.right, _MUL), _ADD)
        elif isinstance(node, (Mul, Div)):
            op = "*" if isinstance(node, Mul) else "/"
            out = (wrap(node.left, _MUL) + op + wrap(node.right, _POW), _MUL)
        elif isinstance(node, PowInt):
            k = str(node.exp) if node.exp >= 0 else f"({node.exp})"
            out = (wrap(node.base, _POW) + "^" + k, _POW)
        elif isinstance(node, Func):
            out = (f"{node.name}({go(node.arg)[0]})", _ATOM)
        elif isinstance(node, Re):
            out = (f"re({go(node.arg)[0]})", _ATOM)
        elif isinstance(node, Im):
            out = (f"im({go(node.arg)[0]})", _ATOM)
        else:
            raise TypeError(node)
        memo[id(node)] = out
        return out

    return go(e)[0]


# ---------------------------------------------------------- small builders
# Light local folding keeps generated trees readable; no algebraic rewriting.

ZERO = Const(0)
ONE = Const(1)


def is_const(e, value):
    return isinstance(e, Const) and e.value == value


def add(a, b):
    if is_const(a, 0):
        return b
    if is_const(b, 0):
        return a
    return Add(a, b)


def sub(a, b):
    if is_const(b, 0):
        return a
    if is_const(a, 0):
        return Neg(b)
    return Sub(a, b)


def mul(a, b):
    if is_const(a, 0) or is_const(b, 0):
        return ZERO
    if is_const(a, 1):
        return b
    if is_const(b, 1):
        return a
    return Mul(a, b)


def scale(c, e):
    """``c * e`` for a numeric ``c``."""
    return mul(Const(c), e)
