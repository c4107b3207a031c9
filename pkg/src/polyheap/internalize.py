"""Internalisation of external function specifications.

An external quadruple talks about parameters (via `x = #x` equalities)
and the distinguished ret/err variables. Its internal counterpart
executes the function body: the precondition gains `local = nil`
conjuncts, and the internal postconditions are related to the external
ones by mode-directed implications (forgetting the program variables
through fresh logical variables). Verification consumes these as
assertion-validity obligations.
"""

from __future__ import annotations

from dataclasses import dataclass

from .assertions import (
    Assertion,
    Bool,
    Exists,
    Quadruple,
    ShapeError,
    Star,
    TrueA,
    subst_assertion_pvars,
)
from .syntax import Cmd, Expr, FunctionDef, InVal, LVar, NIL_E, PVar, eq, subst_pvars

@dataclass(frozen=True)
class Obligation:
    """A validity goal: the hypothesis assertion implies the conclusion."""

    name: str
    hypothesis: Assertion
    conclusion: Assertion


@dataclass(frozen=True)
class InternalObligation:
    pre: Assertion  # external pre * locals-initialised-to-nil
    body: Cmd
    ret: Expr
    obligations: tuple  # mode-directed implications, as validity goals


def internalize(
    q: Quadruple,
    f: FunctionDef,
    mode,
    post_ok_internal: Assertion = None,
    post_err_internal: Assertion = None,
) -> InternalObligation:
    """Build the internal proof obligation for an external specification.

    `post_ok_internal` / `post_err_internal` are the candidate internal
    postconditions (they may mention the function's program variables);
    they default to the external postconditions.
    """
    from .engine import Mode

    if q.fid != f.fid:
        raise ShapeError(f"specification for {q.fid!r} applied to {f.fid!r}")
    q.check_external_shape()
    if tuple(q.params) != tuple(f.params):
        raise ShapeError("specification parameters do not match the definition")
    locals_ = f.locals()
    pre = q.pre
    for z in locals_:
        pre = Star(pre, Bool(eq(PVar(z), NIL_E)))
    qok = post_ok_internal if post_ok_internal is not None else q.post_ok
    qerr = post_err_internal if post_err_internal is not None else q.post_err

    pvs = tuple(f.params) + locals_
    fresh = {x: LVar(f"p_{x}") for x in pvs}
    ok_rhs = _forget(qok, fresh, extra=Bool(eq(PVar("ret"), subst_pvars(f.ret, fresh))))
    err_rhs = _forget(qerr, fresh, extra=None)
    ret_defined = Star(Bool(InVal(f.ret)), TrueA())

    forward = (
        Obligation("ok-post", q.post_ok, ok_rhs),
        Obligation("err-post", q.post_err, err_rhs),
    )
    backward = (
        Obligation("ok-post", ok_rhs, q.post_ok),
        Obligation("err-post", err_rhs, q.post_err),
    )
    ret_ob = (Obligation("ret-defined", qok, ret_defined),)
    if mode is Mode.UX:
        obligations = ret_ob + forward
    elif mode is Mode.OX:
        obligations = ret_ob + backward
    else:
        obligations = ret_ob + forward + backward
    return InternalObligation(pre, f.body, f.ret, obligations)


def _forget(assertion: Assertion, fresh: dict, extra: Assertion) -> Assertion:
    """Existentially forget program variables: A becomes
    exists p... A[p/pv] (* extra)."""
    body = subst_assertion_pvars(assertion, {x: v for x, v in fresh.items()})
    if extra is not None:
        body = Star(body, extra)
    out = body
    for x in sorted(fresh, reverse=True):
        if fresh[x].name in _lv(out):
            out = Exists(fresh[x].name, out)
    return out


def _lv(a: Assertion):
    from .assertions import lv_assertion

    return lv_assertion(a)
