"""Polynomial expression parser: signed decimals, x, ^, + - * and parentheses.

Expressions are expanded to dense coefficient form in exact rational
arithmetic; conversion to float happens once, at the very end, so nested
products like (x^2+0.01)*((x-3)^2+0.01) come out correctly rounded.
"""

import re
from decimal import Decimal
from fractions import Fraction

from .newton import PolynomialProblem


class PolynomialSyntaxError(ValueError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (offset {position})")
        self.position = position


class DegreeZeroError(ValueError):
    pass


_TOKEN_RE = re.compile(
    r"\s*(?:(?P<number>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<x>x)"
    r"|(?P<op>[-+*^()]))"
)


def _tokenize(text: str):
    tokens = []
    pos = 0
    while pos < len(text):
        if not text[pos:].strip():
            break
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            at = pos + len(text[pos:]) - len(text[pos:].lstrip())
            raise PolynomialSyntaxError(f"unexpected character {text[at]!r}", at)
        if m.group("number") is not None:
            tokens.append(("number", m.group("number"), m.start("number")))
        elif m.group("x") is not None:
            tokens.append(("x", "x", m.start("x")))
        else:
            tokens.append((m.group("op"), m.group("op"), m.start("op")))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


# polynomials are lists of Fractions, ascending degree


def _padd(a, b):
    n = max(len(a), len(b))
    return [
        (a[i] if i < len(a) else 0) + (b[i] if i < len(b) else 0) for i in range(n)
    ]


def _pmul(a, b):
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, ca in enumerate(a):
        if ca:
            for j, cb in enumerate(b):
                out[i + j] += ca * cb
    return out


def _ppow(a, k: int):
    out = [Fraction(1)]
    for _ in range(k):
        out = _pmul(out, a)
    return out


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def fail(self, message: str):
        raise PolynomialSyntaxError(message, self.peek()[2])

    def parse(self):
        poly = self.expr()
        kind, value, pos = self.peek()
        if kind != "end":
            self.fail(f"unexpected {value!r}")
        return poly

    def expr(self):
        poly = self.term()
        while self.peek()[0] in ("+", "-"):
            op = self.advance()[0]
            rhs = self.term()
            if op == "-":
                rhs = [-c for c in rhs]
            poly = _padd(poly, rhs)
        return poly

    def term(self):
        poly = self.unary()
        while self.peek()[0] == "*":
            self.advance()
            poly = _pmul(poly, self.unary())
        return poly

    def unary(self):
        sign = 1
        while self.peek()[0] in ("+", "-"):
            if self.advance()[0] == "-":
                sign = -sign
        poly = self.postfix()
        return [sign * c for c in poly] if sign < 0 else poly

    def postfix(self):
        poly = self.primary()
        if self.peek()[0] == "^":
            self.advance()
            kind, value, pos = self.peek()
            if kind != "number" or not value.isdigit():
                raise PolynomialSyntaxError("expected a non-negative integer exponent", pos)
            self.advance()
            poly = _ppow(poly, int(value))
        return poly

    def primary(self):
        kind, value, pos = self.advance()
        if kind == "number":
            return [Fraction(Decimal(value))]
        if kind == "x":
            return [Fraction(0), Fraction(1)]
        if kind == "(":
            poly = self.expr()
            kind, value, pos = self.peek()
            if kind != ")":
                self.fail("expected ')'")
            self.advance()
            return poly
        raise PolynomialSyntaxError(
            f"expected a number, 'x' or '(', got {value!r}" if value else "unexpected end of input",
            pos,
        )


def parse_polynomial(text: str) -> PolynomialProblem:
    """Parse and exactly expand an expression into a PolynomialProblem."""
    if not text.strip():
        raise PolynomialSyntaxError("empty expression", 0)
    coeffs = _Parser(text).parse()
    while len(coeffs) > 1 and coeffs[-1] == 0:
        coeffs.pop()
    if len(coeffs) < 2:
        raise DegreeZeroError("expression reduces to a constant; need degree >= 1")
    return PolynomialProblem(tuple(float(c) for c in coeffs))


def pretty_polynomial(problem: PolynomialProblem) -> str:
    """Canonical text form; parse_polynomial round-trips it bit-exactly."""
    parts = []
    for power in range(problem.degree, -1, -1):
        c = problem.coefficients[power]
        if c == 0.0:
            continue
        mag = abs(c)
        if power == 0:
            body = repr(mag)
        elif power == 1:
            body = "x" if mag == 1.0 else f"{mag!r}*x"
        else:
            body = f"x^{power}" if mag == 1.0 else f"{mag!r}*x^{power}"
        if not parts:
            parts.append(body if c > 0 else f"-{body}")
        else:
            parts.append(f"+ {body}" if c > 0 else f"- {body}")
    return " ".join(parts)
