"""Expression evaluation.

Total functions into Value-or-UNDEF. Unbound variables, type mismatches and
division by zero all yield UNDEF rather than raising. `eval_expr` is the
store-only program-expression evaluator; `eval_lexpr` additionally
interprets logical variables and the membership tests.
"""

from __future__ import annotations

from .values import (
    UNDEF,
    Rat,
    VBool,
    vbool,
    is_nat,
    is_rat,
    type_name,
)
from .syntax import Bin, Expr, InType, InVal, Lit, LstE, LVar, Not, PVar


def values_equal(a, b) -> bool:
    # wrappers make == structural across all constructors
    return a == b


def eval_lexpr(e: Expr, theta: dict, store: dict):
    """Evaluate a logical expression under interpretation `theta` and store."""
    if isinstance(e, Lit):
        return e.value
    if isinstance(e, PVar):
        return store.get(e.name, UNDEF)
    if isinstance(e, LVar):
        return theta.get(e.name, UNDEF)
    if isinstance(e, Not):
        v = eval_lexpr(e.arg, theta, store)
        if isinstance(v, VBool):
            return vbool(not v.b)
        return UNDEF
    if isinstance(e, InVal):
        return vbool(eval_lexpr(e.arg, theta, store) is not UNDEF)
    if isinstance(e, InType):
        v = eval_lexpr(e.arg, theta, store)
        return vbool(v is not UNDEF and type_name(v) == e.tau)
    if isinstance(e, LstE):
        items = []
        for i in e.items:
            v = eval_lexpr(i, theta, store)
            if v is UNDEF:
                return UNDEF
            items.append(v)
        return tuple(items)
    if isinstance(e, Bin):
        return _eval_bin(e, theta, store)
    raise TypeError(f"not an expression: {e!r}")


def eval_expr(e: Expr, store: dict):
    """Program-expression evaluation (no interpretation)."""
    return eval_lexpr(e, {}, store)


def _eval_bin(e: Bin, theta, store):
    a = eval_lexpr(e.left, theta, store)
    b = eval_lexpr(e.right, theta, store)
    op = e.op
    if op == "=":
        if a is UNDEF or b is UNDEF:
            return UNDEF
        # cross-type equality is false, not an error
        return vbool(values_equal(a, b))
    if op in ("and", "or"):
        if isinstance(a, VBool) and isinstance(b, VBool):
            return vbool(a.b and b.b) if op == "and" else vbool(a.b or b.b)
        return UNDEF
    # arithmetic and comparisons: naturals with naturals, rationals with
    # rationals; anything else is undefined
    if is_nat(a) and is_nat(b):
        if op == "+":
            return a + b
        if op == "-":
            return a - b if a >= b else UNDEF
        if op == "/":
            if b != 0 and a % b == 0:
                return a // b
            return UNDEF
        if op == "<":
            return vbool(a < b)
        if op == "<=":
            return vbool(a <= b)
    if is_rat(a) and is_rat(b):
        if op == "+":
            return Rat(a.q + b.q)
        if op == "-":
            d = a.q - b.q
            return Rat(d) if d > 0 else UNDEF
        if op == "/":
            return Rat(a.q / b.q)
        if op == "<":
            return vbool(a.q < b.q)
        if op == "<=":
            return vbool(a.q <= b.q)
    return UNDEF
