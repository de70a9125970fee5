"""Tiny expression language for forcing terms and initial data.

Grammar (whitespace-insensitive, standard precedence):

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | power
    power  := atom ('^' unary)?          # right-associative, binds above '-'
    atom   := number | 'pi' | variable | function '(' expr ')' | '(' expr ')'

Variables: x, y, r, theta, t.  Functions: sin, cos, exp, tanh, log, abs.
Evaluation is pure IEEE-double arithmetic, vectorized over numpy bindings;
any non-finite result is an error.
"""

import math

import numpy as np

VARIABLES = ("x", "y", "r", "theta", "t")
FUNCTIONS = {
    "sin": np.sin,
    "cos": np.cos,
    "exp": np.exp,
    "tanh": np.tanh,
    "abs": np.abs,
    # log handled specially (domain check)
}


class ForcingSyntaxError(ValueError):
    def __init__(self, message, offset):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class ForcingEvalError(ValueError):
    """Evaluation produced a non-finite value or hit a domain error."""


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def skip_ws(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self):
        self.skip_ws()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def expect(self, ch):
        if self.peek() != ch:
            raise ForcingSyntaxError(f"expected {ch!r}", self.pos)
        self.pos += 1

    def parse(self):
        node = self.expr()
        self.skip_ws()
        if self.pos != len(self.text):
            raise ForcingSyntaxError("unexpected trailing input", self.pos)
        return node

    def expr(self):
        node = self.term()
        while self.peek() in ("+", "-"):
            op = self.peek()
            self.pos += 1
            node = ("bin", op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek() in ("*", "/"):
            op = self.peek()
            self.pos += 1
            node = ("bin", op, node, self.unary())
        return node

    def unary(self):
        if self.peek() == "-":
            self.pos += 1
            return ("neg", self.unary())
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek() == "^":
            self.pos += 1
            return ("bin", "^", base, self.unary())
        return base

    def atom(self):
        ch = self.peek()
        if ch == "(":
            self.pos += 1
            node = self.expr()
            self.expect(")")
            return node
        if ch.isdigit() or ch == ".":
            return self.number()
        if ch.isalpha() or ch == "_":
            return self.identifier()
        raise ForcingSyntaxError("expected a value", self.pos)

    def number(self):
        start = self.pos
        text = self.text
        while self.pos < len(text) and (text[self.pos].isdigit() or text[self.pos] == "."):
            self.pos += 1
        if self.pos < len(text) and text[self.pos] in "eE":
            mark = self.pos
            self.pos += 1
            if self.pos < len(text) and text[self.pos] in "+-":
                self.pos += 1
            if self.pos < len(text) and text[self.pos].isdigit():
                while self.pos < len(text) and text[self.pos].isdigit():
                    self.pos += 1
            else:
                self.pos = mark
        try:
            return ("num", float(text[start : self.pos]))
        except ValueError:
            raise ForcingSyntaxError("malformed number", start) from None

    def identifier(self):
        start = self.pos
        text = self.text
        while self.pos < len(text) and (text[self.pos].isalnum() or text[self.pos] == "_"):
            self.pos += 1
        name = text[start : self.pos]
        if name == "pi":
            return ("num", math.pi)
        if name in VARIABLES:
            return ("var", name)
        if name in FUNCTIONS or name == "log":
            self.expect("(")
            arg = self.expr()
            self.expect(")")
            return ("call", name, arg)
        raise ForcingSyntaxError(f"unknown identifier {name!r}", start)


def parse(text: str):
    """Parse an expression string into an Expression."""
    return Expression(_Parser(text).parse(), text)


def _eval_node(node, env):
    tag = node[0]
    if tag == "num":
        return node[1]
    if tag == "var":
        name = node[1]
        if name not in env:
            raise ForcingEvalError(f"no binding supplied for variable {name!r}")
        return env[name]
    if tag == "neg":
        return -_eval_node(node[1], env)
    if tag == "call":
        arg = _eval_node(node[2], env)
        if node[1] == "log":
            if np.any(np.asarray(arg) <= 0.0):
                raise ForcingEvalError("log of a non-positive value")
            return np.log(arg)
        with np.errstate(over="ignore"):
            return FUNCTIONS[node[1]](arg)
    _, op, left, right = node
    a = _eval_node(left, env)
    b = _eval_node(right, env)
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if op == "/":
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.divide(a, b)
        if not np.all(np.isfinite(out)):
            raise ForcingEvalError("division produced a non-finite value")
        return out
    with np.errstate(over="ignore", invalid="ignore"):
        out = np.power(a, b)
    return out


def _print_node(node):
    tag = node[0]
    if tag == "num":
        return repr(node[1])
    if tag == "var":
        return node[1]
    if tag == "neg":
        return f"(-{_print_node(node[1])})"
    if tag == "call":
        return f"{node[1]}({_print_node(node[2])})"
    _, op, left, right = node
    return f"({_print_node(left)}{op}{_print_node(right)})"


class Expression:
    """Immutable parsed expression; evaluation is pure and reentrant."""

    __slots__ = ("ast", "source")

    def __init__(self, ast, source):
        self.ast = ast
        self.source = source

    def __repr__(self):
        return f"Expression({self.source!r})"

    def __eq__(self, other):
        return isinstance(other, Expression) and self.ast == other.ast

    def __hash__(self):
        return hash(repr(self.ast))

    def to_string(self) -> str:
        """Fully parenthesized rendering; parse(to_string()) round-trips."""
        return _print_node(self.ast)

    def variables(self) -> set[str]:
        out = set()

        def walk(node):
            if node[0] == "var":
                out.add(node[1])
            elif node[0] == "neg":
                walk(node[1])
            elif node[0] == "call":
                walk(node[2])
            elif node[0] == "bin":
                walk(node[2])
                walk(node[3])

        walk(self.ast)
        return out

    def __call__(self, **bindings):
        return evaluate(self, bindings)


def evaluate(expr: Expression, bindings: dict):
    """Evaluate with numpy-broadcastable bindings; non-finite is an error."""
    out = _eval_node(expr.ast, bindings)
    if not np.all(np.isfinite(out)):
        raise ForcingEvalError(
            f"expression {expr.source!r} evaluated to a non-finite value"
        )
    return out


def evaluate_polar(expr: Expression, r, theta, t: float):
    """Evaluate with polar bindings, deriving x = r*cos(theta), y = r*sin(theta)."""
    needed = expr.variables()
    env = {"r": r, "theta": theta, "t": t}
    if "x" in needed:
        env["x"] = r * np.cos(theta)
    if "y" in needed:
        env["y"] = r * np.sin(theta)
    return evaluate(expr, env)
