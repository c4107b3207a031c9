"""The assertion satisfaction relation, decided by brute force.

`holds` implements the relation between an interpretation, a concrete
state and an assertion. Separating conjunction enumerates the model's
heap splittings; existential quantification enumerates a bounded witness
domain (the bounds' value domain plus values occurring in the state);
user-defined predicates unfold their bodies with a depth budget.

This module is the ground-truth side of every dual-route check in the
toolkit, so it deliberately stays independent of the symbolic engine and
of consume/produce.
"""

from __future__ import annotations

from .assertions import (
    Assertion,
    Bool,
    Emp,
    Exists,
    Implies,
    Or,
    Pred,
    Res,
    Star,
    TrueA,
)
from .evaluation import eval_lexpr
from .memmodel import Bounds
from .values import TRUE, UNDEF, value_key


class DepthExceeded(Exception):
    """Recursive predicate unfolding ran out of depth; treat as unknown."""


def holds(
    theta: dict,
    store: dict,
    mem,
    assertion: Assertion,
    *,
    cmm,
    rm,
    preds=None,
    bounds: Bounds = None,
    depth: int = 4,
) -> bool:
    preds = preds if preds is not None else {}
    bounds = bounds if bounds is not None else Bounds()
    if isinstance(assertion, Bool):
        return mem == cmm.empty and eval_lexpr(assertion.expr, theta, store) is TRUE
    if isinstance(assertion, TrueA):
        return cmm.is_wf(mem)
    if isinstance(assertion, Emp):
        return mem == cmm.empty
    if isinstance(assertion, Implies):
        if not holds(theta, store, mem, assertion.left, cmm=cmm, rm=rm, preds=preds, bounds=bounds, depth=depth):
            return True
        return holds(theta, store, mem, assertion.right, cmm=cmm, rm=rm, preds=preds, bounds=bounds, depth=depth)
    if isinstance(assertion, Or):
        return holds(theta, store, mem, assertion.left, cmm=cmm, rm=rm, preds=preds, bounds=bounds, depth=depth) or holds(
            theta, store, mem, assertion.right, cmm=cmm, rm=rm, preds=preds, bounds=bounds, depth=depth
        )
    if isinstance(assertion, Exists):
        for v in witness_domain(store, mem, cmm, bounds):
            t2 = {**theta, assertion.var: v}
            if holds(t2, store, mem, assertion.body, cmm=cmm, rm=rm, preds=preds, bounds=bounds, depth=depth):
                return True
        return False
    if isinstance(assertion, Star):
        for m1, m2 in cmm.enumerate_splits(mem):
            if holds(theta, store, m1, assertion.left, cmm=cmm, rm=rm, preds=preds, bounds=bounds, depth=depth) and holds(
                theta, store, m2, assertion.right, cmm=cmm, rm=rm, preds=preds, bounds=bounds, depth=depth
            ):
                return True
        return False
    if isinstance(assertion, Res):
        ins = [eval_lexpr(e, theta, store) for e in assertion.ins]
        outs = [eval_lexpr(e, theta, store) for e in assertion.outs]
        if any(v is UNDEF for v in ins + outs):
            return False
        return rm.holds_resource(mem, assertion.name, tuple(ins), tuple(outs))
    if isinstance(assertion, Pred):
        if depth <= 0:
            raise DepthExceeded(assertion.name)
        d = preds[assertion.name]
        body = d.instantiate(assertion.ins, assertion.outs)
        return holds(theta, store, mem, body, cmm=cmm, rm=rm, preds=preds, bounds=bounds, depth=depth - 1)
    raise TypeError(f"not an assertion: {assertion!r}")


def witness_domain(store, mem, cmm, bounds: Bounds) -> list:
    vals = set(bounds.value_domain)
    vals.update(v for v in store.values() if v is not UNDEF)
    vals.update(cmm.mem_values(mem))
    return sorted(vals, key=value_key)


def heap_models(theta, store, assertion, *, cmm, rm, preds=None, bounds=None, depth=4):
    """All generated heaps satisfying the assertion under theta."""
    bounds = bounds if bounds is not None else Bounds()
    out = []
    for mem in cmm.generator(bounds):
        if holds(theta, store, mem, assertion, cmm=cmm, rm=rm, preds=preds, bounds=bounds, depth=depth):
            out.append(mem)
    return out
