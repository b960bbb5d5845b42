"""Arithmetic expression language for external potentials W(x).

Grammar (EBNF, also in the README):

    expr   = term , { ("+" | "-") , term } ;
    term   = unary , { ("*" | "/") , unary } ;
    unary  = "-" , unary | power ;
    power  = atom , [ "^" , unary ] ;            (* right associative *)
    atom   = NUMBER | "x" | NAME "(" expr ")" | "(" expr ")" ;
    NAME   = "sin" | "cos" | "exp" | "tanh" | "sech" | "abs" ;
    NUMBER = digits ["." digits] [("e"|"E") ["+"|"-"] digits] | "." digits ... ;

"^" binds tighter than unary minus, so -x^2 parses as -(x^2).  The only
variable is x; there is no implicit multiplication.  sech is a builtin that
underflows to 0 for |arg| > 300 instead of overflowing cosh.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EvalError, ExprSyntaxError, UnknownFunction
from .grid import Grid

FUNCTIONS = ("sin", "cos", "exp", "tanh", "sech", "abs")

_SECH_CUTOFF = 300.0


def _np_sech(z):
    z = np.asarray(z, dtype=float)
    out = np.zeros_like(z)
    small = np.abs(z) <= _SECH_CUTOFF
    out[small] = 1.0 / np.cosh(z[small])
    return out


def _math_sech(z: float) -> float:
    return 0.0 if abs(z) > _SECH_CUTOFF else 1.0 / math.cosh(z)

_NUMPY_FUNCS = {
    "sin": np.sin,
    "cos": np.cos,
    "exp": np.exp,
    "tanh": np.tanh,
    "sech": _np_sech,
    "abs": np.abs,
}

_MATH_FUNCS = {
    "sin": math.sin,
    "cos": math.cos,
    "exp": math.exp,
    "tanh": math.tanh,
    "sech": _math_sech,
    "abs": abs,
}


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    pass


@dataclass(frozen=True)
class Neg:
    arg: object


@dataclass(frozen=True)
class Bin:
    op: str
    lhs: object
    rhs: object


@dataclass(frozen=True)
class Call:
    fn: str
    arg: object


class _Tokenizer:
    def __init__(self, src: str):
        self.src = src
        self.pos = 0
        self.tokens = []
        self._scan()
        self.i = 0

    def _scan(self):
        src, n = self.src, len(self.src)
        i = 0
        while i < n:
            c = src[i]
            if c.isspace():
                i += 1
                continue
            if c in "+-*/^()":
                self.tokens.append((c, c, i))
                i += 1
                continue
            if c.isdigit() or (c == "." and i + 1 < n and src[i + 1].isdigit()):
                j = i
                while j < n and src[j].isdigit():
                    j += 1
                if j < n and src[j] == ".":
                    j += 1
                    while j < n and src[j].isdigit():
                        j += 1
                if j < n and src[j] in "eE":
                    k = j + 1
                    if k < n and src[k] in "+-":
                        k += 1
                    if k < n and src[k].isdigit():
                        j = k
                        while j < n and src[j].isdigit():
                            j += 1
                self.tokens.append(("num", src[i:j], i))
                i = j
                continue
            if c.isalpha() or c == "_":
                j = i
                while j < n and (src[j].isalnum() or src[j] == "_"):
                    j += 1
                self.tokens.append(("name", src[i:j], i))
                i = j
                continue
            raise ExprSyntaxError(f"unexpected character {c!r}", i)
        self.tokens.append(("end", "", n))

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        if tok[0] != "end":
            self.i += 1
        return tok


class _Parser:
    def __init__(self, src: str):
        self.toks = _Tokenizer(src)

    def parse(self):
        node = self._expr()
        kind, _, pos = self.toks.peek()
        if kind != "end":
            raise ExprSyntaxError("trailing input", pos, expected=("end of input",))
        return node

    def _expr(self):
        node = self._term()
        while self.toks.peek()[0] in ("+", "-"):
            op = self.toks.advance()[0]
            node = Bin(op, node, self._term())
        return node

    def _term(self):
        node = self._unary()
        while self.toks.peek()[0] in ("*", "/"):
            op = self.toks.advance()[0]
            node = Bin(op, node, self._unary())
        return node

    def _unary(self):
        if self.toks.peek()[0] == "-":
            self.toks.advance()
            return Neg(self._unary())
        return self._power()

    def _power(self):
        base = self._atom()
        if self.toks.peek()[0] == "^":
            self.toks.advance()
            return Bin("^", base, self._unary())
        return base

    def _atom(self):
        kind, text, pos = self.toks.advance()
        if kind == "num":
            return Num(float(text))
        if kind == "name":
            if text == "x":
                return Var()
            if self.toks.peek()[0] == "(":
                if text not in FUNCTIONS:
                    raise UnknownFunction(text, pos)
                self.toks.advance()
                arg = self._expr()
                k2, _, pos2 = self.toks.advance()
                if k2 != ")":
                    raise ExprSyntaxError("expected ')'", pos2, expected=(")",))
                return Call(text, arg)
            raise ExprSyntaxError(
                f"unknown identifier {text!r} (only the variable x is defined)", pos
            )
        if kind == "(":
            node = self._expr()
            k2, _, pos2 = self.toks.advance()
            if k2 != ")":
                raise ExprSyntaxError("expected ')'", pos2, expected=(")",))
            return node
        raise ExprSyntaxError(
            "expected a number, 'x', a function call, or '('",
            pos,
            expected=("number", "x", "name", "("),
        )


def _eval_numpy(node, x):
    if isinstance(node, Num):
        return np.full_like(np.asarray(x, dtype=float), node.value)
    if isinstance(node, Var):
        return np.asarray(x, dtype=float)
    if isinstance(node, Neg):
        return -_eval_numpy(node.arg, x)
    if isinstance(node, Call):
        return _NUMPY_FUNCS[node.fn](_eval_numpy(node.arg, x))
    lhs = _eval_numpy(node.lhs, x)
    rhs = _eval_numpy(node.rhs, x)
    if node.op == "+":
        return lhs + rhs
    if node.op == "-":
        return lhs - rhs
    if node.op == "*":
        return lhs * rhs
    if node.op == "/":
        return np.divide(lhs, rhs)
    return np.power(lhs, rhs)


def eval_reference(node, x: float) -> float:
    """Scalar math-module evaluator, used as the fuzzing reference."""
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        return float(x)
    if isinstance(node, Neg):
        return -eval_reference(node.arg, x)
    if isinstance(node, Call):
        return _MATH_FUNCS[node.fn](eval_reference(node.arg, x))
    lhs = eval_reference(node.lhs, x)
    rhs = eval_reference(node.rhs, x)
    if node.op == "+":
        return lhs + rhs
    if node.op == "-":
        return lhs - rhs
    if node.op == "*":
        return lhs * rhs
    if node.op == "/":
        return lhs / rhs
    return lhs**rhs


_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4}


def _pprint(node, parent_prec=0):
    if isinstance(node, Num):
        v = node.value
        return repr(v)
    if isinstance(node, Var):
        return "x"
    if isinstance(node, Neg):
        inner = _pprint(node.arg, _PREC["neg"])
        s = f"-{inner}"
        return f"({s})" if parent_prec > _PREC["neg"] else s
    if isinstance(node, Call):
        return f"{node.fn}({_pprint(node.arg, 0)})"
    prec = _PREC[node.op]
    if node.op == "^":
        # right associative; the right operand may be a unary chain
        lhs = _pprint(node.lhs, prec + 1)
        rhs = _pprint(node.rhs, prec)
        s = f"{lhs}^{rhs}"
    else:
        lhs = _pprint(node.lhs, prec)
        rhs = _pprint(node.rhs, prec + 1)
        s = f"{lhs} {node.op} {rhs}"
    return f"({s})" if parent_prec > prec else s


@dataclass(frozen=True)
class PotentialExpr:
    """Parsed potential expression W(x)."""

    ast: object
    source: str

    def __call__(self, x):
        """Evaluate W at x (scalar or array); non-finite results raise EvalError."""
        with np.errstate(all="ignore"):
            vals = np.asarray(_eval_numpy(self.ast, np.asarray(x, dtype=float)))
        if not np.all(np.isfinite(vals)):
            bad = int(np.argmin(np.isfinite(vals)))
            raise EvalError(
                f"expression {self.source!r} is non-finite at sample {bad}",
                node_index=bad,
            )
        if np.isscalar(x):
            return float(vals)
        return vals

    def pretty(self) -> str:
        return _pprint(self.ast)


def parse_expression(src: str) -> PotentialExpr:
    """Parse a potential expression; errors carry byte offsets."""
    return PotentialExpr(_Parser(src).parse(), src)


def eval_on_grid(e: PotentialExpr, g: Grid, h: float) -> np.ndarray:
    """Sample V(x) = W(h*x) on the grid nodes.

    A NaN/Inf at any node raises EvalError naming the node index.
    """
    with np.errstate(all="ignore"):
        vals = np.asarray(_eval_numpy(e.ast, h * g.x), dtype=float)
    if not np.all(np.isfinite(vals)):
        bad = int(np.argmin(np.isfinite(vals)))
        raise EvalError(
            f"potential {e.source!r} is non-finite at grid node {bad} "
            f"(x = {g.x[bad]:.6g}, h = {h:g})",
            node_index=bad,
        )
    return vals


def _substitute(node, replacement):
    if isinstance(node, Var):
        return replacement
    if isinstance(node, Neg):
        return Neg(_substitute(node.arg, replacement))
    if isinstance(node, Call):
        return Call(node.fn, _substitute(node.arg, replacement))
    if isinstance(node, Bin):
        return Bin(
            node.op,
            _substitute(node.lhs, replacement),
            _substitute(node.rhs, replacement),
        )
    return node


def rescaled_potential(e: PotentialExpr, alpha: float) -> PotentialExpr:
    """The companion potential of the width rescaling: V(x/alpha)/alpha^2."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    inner = _substitute(e.ast, Bin("/", Var(), Num(alpha)))
    ast = Bin("/", inner, Num(alpha * alpha))
    src = f"({e.source})"
    return PotentialExpr(ast, f"{src} rescaled by alpha={alpha!r}")
