"""Symbolic big-integer evaluation of the recursive upper bounds.

Bound builders unroll each proof recursion into an expression tree whose
irreducible leaves are the minimal numbers MT(d,m,r) and R(k,l,r); those
resolve only against a table of exactly verified values, so no uncertified
number is ever produced.  Arithmetic and type counts evaluate exactly;
anything unresolved stays symbolic.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

from .types_pyramids import count_types


class BoundError(ValueError):
    pass


@dataclass(frozen=True)
class Expr:
    pass


@dataclass(frozen=True)
class IntE(Expr):
    value: int

    def __str__(self):
        return str(self.value)


@dataclass(frozen=True)
class Call(Expr):
    """An operator or named leaf applied to subexpressions.

    Computable operators: add, sub, mul, max, pow, binom, types.
    Table-resolved leaves: MT(d,m,r), R(k,l,r).
    """

    name: str
    args: tuple[Expr, ...]

    def __str__(self):
        return f"{self.name}({','.join(str(a) for a in self.args)})"


_OPS = {
    "add": lambda a, b: a + b,
    "sub": lambda a, b: a - b,
    "mul": lambda a, b: a * b,
    "max": lambda a, b: max(a, b),
    "pow": lambda a, b: a ** b,
    "binom": lambda a, b: math.comb(a, b) if 0 <= b <= a else 0,
    "types": lambda k, m, d: count_types(k, m, d),
}
_LEAVES = ("MT", "R")


def as_expr(x) -> Expr:
    if isinstance(x, Expr):
        return x
    if isinstance(x, int):
        return IntE(x)
    raise BoundError(f"cannot coerce {x!r} to an expression")


def _call(name: str, *args) -> Call:
    return Call(name, tuple(as_expr(a) for a in args))


@dataclass
class ExactTable:
    """Verified exact values for the irreducible leaves, keyed by printed
    leaf form, each carrying a certificate reference."""

    entries: dict[str, tuple[int, str]] = field(default_factory=dict)

    def put(self, key: str, value: int, certificate: str = ""):
        self.entries[key] = (value, certificate)

    def get(self, key: str) -> int | None:
        hit = self.entries.get(key)
        return hit[0] if hit else None

    @staticmethod
    def mt_key(d: int, m: int, r: int) -> str:
        return f"MT({d},{m},{r})"

    @staticmethod
    def ramsey_key(k: int, l: int, r: int) -> str:
        return f"R({k},{l},{r})"


def evaluate(expr: Expr, table: ExactTable | None = None):
    """Exact bottom-up evaluation: returns an int when everything
    resolves, otherwise the partially evaluated expression."""
    table = table or ExactTable()

    def walk(e: Expr):
        if isinstance(e, IntE):
            return e.value
        assert isinstance(e, Call)
        args = [walk(a) for a in e.args]
        if all(isinstance(a, int) for a in args):
            if e.name in _OPS:
                return _OPS[e.name](*args)
            if e.name in _LEAVES:
                hit = table.get(f"{e.name}({','.join(str(a) for a in args)})")
                if hit is not None:
                    return hit
        return Call(e.name, tuple(as_expr(a) for a in args))

    return walk(expr)


# ---------------------------------------------------------------------------
# printing and parsing

_TOKEN = re.compile(r"\s*([A-Za-z_][A-Za-z_0-9]*|-?\d+|[(),])")


def print_expr(expr: Expr) -> str:
    return str(expr)


def parse_expr(text: str) -> Expr:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise BoundError(f"cannot tokenize at {text[pos:pos + 10]!r}")
        tokens.append(m.group(1))
        pos = m.end()
    out, rest = _parse(tokens, 0)
    if rest != len(tokens):
        raise BoundError(f"trailing tokens: {tokens[rest:]}")
    return out


def _parse(tokens: list[str], i: int) -> tuple[Expr, int]:
    tok = tokens[i]
    if re.fullmatch(r"-?\d+", tok):
        return IntE(int(tok)), i + 1
    if i + 1 < len(tokens) and tokens[i + 1] == "(":
        args = []
        j = i + 2
        if tokens[j] != ")":
            while True:
                arg, j = _parse(tokens, j)
                args.append(arg)
                if tokens[j] == ",":
                    j += 1
                    continue
                break
        if tokens[j] != ")":
            raise BoundError(f"expected ')' at token {j}")
        return Call(tok, tuple(args)), j + 1
    raise BoundError(f"unexpected token {tok!r}")


# ---------------------------------------------------------------------------
# the bound recursions


def bound_T(d: int, k: int, m, r) -> Expr:
    """Type-homogeneity bound: a union-theorem application at length
    2m - d over the alphabet of type colorings."""
    m = as_expr(m)
    alpha = _call("pow", r, _call("types", k, m, d))
    return _call("MT", m, _call("sub", _call("mul", 2, m), d), alpha)


def bound_G(d: int, k: int, l: int, m, r) -> Expr:
    """Combined-span bound, unrolled to MT and type-count leaves:
    level 1 is the union theorem, each higher level routes through a
    type-homogeneity bound over pyramids of the previous width."""
    if k < 1 or l < k:
        raise BoundError("need 1 <= k <= l")
    if k == 1:
        return _call("MT", d, m, r)
    inner = bound_G(d, k - 1, l - 1, m, r)
    return bound_T(d, k, _call("mul", inner, 2 * l - 1), r)


def _domain_size(ks: tuple[int, ...], N: Expr) -> Expr:
    """Size of the tuples-of-bounded-subsets domain over [N]."""
    factors = []
    for k_i in ks:
        total: Expr = IntE(0)
        for j in range(k_i + 1):
            total = _call("add", total, _call("binom", N, j))
        factors.append(total)
    out: Expr = IntE(1)
    for f in factors:
        out = _call("mul", out, f)
    return out


def bound_S(m: int, ks, ls, r) -> Expr:
    """Size-insensitivity bound by double recursion on the arity and the
    last size cap, with a classical Ramsey application at each step.

    The degenerate cap 0 keeps the feasibility floor l_m so that the bound
    always dominates the least admissible ground size.
    """
    ks = tuple(ks)
    ls = tuple(as_expr(x) for x in ls)
    r = as_expr(r)
    if len(ks) != m or len(ls) != m or m < 1:
        raise BoundError("need one size cap and one target size per coordinate")
    if any(k < 0 for k in ks):
        raise BoundError("size caps must be >= 0")
    kp = ks[-1]
    if m == 1:
        if kp == 0:
            return ls[0]
        inner = bound_S(1, (kp - 1,), ls, r)
        return _call("R", kp, inner, r)
    if kp == 0:
        return _call("max", bound_S(m - 1, ks[:-1], ls[:-1], r), ls[-1])
    n_prime = bound_S(m, ks[:-1] + (kp - 1,), ls, r)
    n_second = bound_S(m - 1, ks[:-1], (n_prime,) * (m - 1), r)
    alpha = _call("pow", r, _domain_size(ks[:-1], n_second))
    return _call("max", n_second, _call("R", kp, n_prime, alpha))


def gamma_count(m: int, d: int) -> int:
    """Strictly increasing (d+1)-tuples with endpoints pinned at 1 and m."""
    if m == 1:
        return 1 if d == 1 else 0
    return math.comb(m - 2, d - 1) if m - 2 >= d - 1 >= 0 else 0


def bound_Sd(ks, ls, m: int, d: int, r) -> Expr:
    """Dimension-d size-insensitivity: the base bound over the product
    alphabet indexed by endpoint-pinned increasing tuples."""
    return bound_S(m, ks, ls, _call("pow", r, gamma_count(m, d)))
