"""Deterministic SMT-LIB2 export of path conditions.

Values become an algebraic datatype; expression evaluation is encoded as
an option type (m-undef | m-val v) so evaluation errors are first-class,
matching the evaluator exactly: arithmetic is defined within one numeric
type, natural subtraction and division are partial, rationals stay
strictly positive, comparisons are same-type.

The export is byte-deterministic for identical input: declarations are
sorted and helpers are emitted in a fixed order. The toolkit never runs a
solver in-process; this is an interchange surface.
"""

from __future__ import annotations

from .syntax import Bin, Expr, InType, InVal, Lit, LstE, LVar, Not, PVar
from .values import type_name


class EncodingUnsupported(Exception):
    pass


_PRELUDE = r"""(set-logic ALL)
(declare-datatypes ((Val 0) (ValList 0)) (
  ((v-nil)
   (v-bool (b-payload Bool))
   (v-nat (n-payload Int))
   (v-rat (q-payload Real))
   (v-str (s-payload String))
   (v-list (l-payload ValList)))
  ((vl-nil)
   (vl-cons (vl-head Val) (vl-tail ValList)))))
(declare-datatypes ((MVal 0)) (((m-undef) (m-val (payload Val)))))
(define-fun-rec wf-list ((l ValList)) Bool
  (ite ((_ is vl-nil) l) true (and (wf-val (vl-head l)) (wf-list (vl-tail l)))))
(define-fun-rec wf-val ((v Val)) Bool
  (ite ((_ is v-nat) v) (>= (n-payload v) 0)
  (ite ((_ is v-rat) v) (> (q-payload v) 0.0)
  (ite ((_ is v-list) v) (wf-list (l-payload v)) true))))
(define-fun wf-m ((m MVal)) Bool
  (ite ((_ is m-undef) m) true (wf-val (payload m))))
(define-fun is-true ((m MVal)) Bool
  (and ((_ is m-val) m) ((_ is v-bool) (payload m)) (b-payload (payload m))))
(define-fun both-nat ((a MVal) (b MVal)) Bool
  (and ((_ is m-val) a) ((_ is m-val) b)
       ((_ is v-nat) (payload a)) ((_ is v-nat) (payload b))))
(define-fun both-rat ((a MVal) (b MVal)) Bool
  (and ((_ is m-val) a) ((_ is m-val) b)
       ((_ is v-rat) (payload a)) ((_ is v-rat) (payload b))))
(define-fun both-bool ((a MVal) (b MVal)) Bool
  (and ((_ is m-val) a) ((_ is m-val) b)
       ((_ is v-bool) (payload a)) ((_ is v-bool) (payload b))))
(define-fun m-bool ((b Bool)) MVal (m-val (v-bool b)))
(define-fun m-eq ((a MVal) (b MVal)) MVal
  (ite (or ((_ is m-undef) a) ((_ is m-undef) b)) m-undef
       (m-bool (= (payload a) (payload b)))))
(define-fun m-not ((a MVal)) MVal
  (ite (and ((_ is m-val) a) ((_ is v-bool) (payload a)))
       (m-bool (not (b-payload (payload a)))) m-undef))
(define-fun m-and ((a MVal) (b MVal)) MVal
  (ite (both-bool a b) (m-bool (and (b-payload (payload a)) (b-payload (payload b)))) m-undef))
(define-fun m-or ((a MVal) (b MVal)) MVal
  (ite (both-bool a b) (m-bool (or (b-payload (payload a)) (b-payload (payload b)))) m-undef))
(define-fun m-add ((a MVal) (b MVal)) MVal
  (ite (both-nat a b) (m-val (v-nat (+ (n-payload (payload a)) (n-payload (payload b)))))
  (ite (both-rat a b) (m-val (v-rat (+ (q-payload (payload a)) (q-payload (payload b))))) m-undef)))
(define-fun m-sub ((a MVal) (b MVal)) MVal
  (ite (and (both-nat a b) (>= (n-payload (payload a)) (n-payload (payload b))))
       (m-val (v-nat (- (n-payload (payload a)) (n-payload (payload b)))))
  (ite (and (both-rat a b) (> (q-payload (payload a)) (q-payload (payload b))))
       (m-val (v-rat (- (q-payload (payload a)) (q-payload (payload b))))) m-undef)))
(define-fun m-div ((a MVal) (b MVal)) MVal
  (ite (and (both-nat a b) (not (= (n-payload (payload b)) 0))
            (= (mod (n-payload (payload a)) (n-payload (payload b))) 0))
       (m-val (v-nat (div (n-payload (payload a)) (n-payload (payload b)))))
  (ite (both-rat a b)
       (m-val (v-rat (/ (q-payload (payload a)) (q-payload (payload b))))) m-undef)))
(define-fun m-lt ((a MVal) (b MVal)) MVal
  (ite (both-nat a b) (m-bool (< (n-payload (payload a)) (n-payload (payload b))))
  (ite (both-rat a b) (m-bool (< (q-payload (payload a)) (q-payload (payload b)))) m-undef)))
(define-fun m-le ((a MVal) (b MVal)) MVal
  (ite (both-nat a b) (m-bool (<= (n-payload (payload a)) (n-payload (payload b))))
  (ite (both-rat a b) (m-bool (<= (q-payload (payload a)) (q-payload (payload b)))) m-undef)))
(define-fun m-in-val ((a MVal)) MVal (m-bool ((_ is m-val) a)))
(define-fun m-cons ((a MVal) (b MVal)) MVal
  (ite (or ((_ is m-undef) a) ((_ is m-undef) b) (not ((_ is v-list) (payload b)))) m-undef
       (m-val (v-list (vl-cons (payload a) (l-payload (payload b)))))))
"""

_BIN_FUN = {
    "=": "m-eq",
    "and": "m-and",
    "or": "m-or",
    "+": "m-add",
    "-": "m-sub",
    "/": "m-div",
    "<": "m-lt",
    "<=": "m-le",
}

_TYPE_TESTER = {
    "nil": "v-nil",
    "bool": "v-bool",
    "nat": "v-nat",
    "rat": "v-rat",
    "str": "v-str",
    "list": "v-list",
}


def _encode_value(v) -> str:
    t = type_name(v)
    if t == "nil":
        return "v-nil"
    if t == "bool":
        return f"(v-bool {'true' if v.b else 'false'})"
    if t == "nat":
        return f"(v-nat {v})"
    if t == "rat":
        return f"(v-rat (/ {v.q.numerator}.0 {v.q.denominator}.0))"
    if t == "str":
        return f'(v-str "{v}")'
    items = "vl-nil"
    for e in reversed(v):
        items = f"(vl-cons {_encode_value(e)} {items})"
    return f"(v-list {items})"


def _encode(e: Expr) -> str:
    if isinstance(e, Lit):
        return f"(m-val {_encode_value(e.value)})"
    if isinstance(e, LVar):
        return f"|#{e.name}|"
    if isinstance(e, PVar):
        raise EncodingUnsupported("program variables have no SMT encoding")
    if isinstance(e, Not):
        return f"(m-not {_encode(e.arg)})"
    if isinstance(e, Bin):
        fun = _BIN_FUN.get(e.op)
        if fun is None:
            raise EncodingUnsupported(f"operator {e.op!r}")
        return f"({fun} {_encode(e.left)} {_encode(e.right)})"
    if isinstance(e, InVal):
        return f"(m-in-val {_encode(e.arg)})"
    if isinstance(e, InType):
        tester = _TYPE_TESTER[e.tau]
        a = _encode(e.arg)
        return (
            f"(ite ((_ is m-undef) {a}) (m-bool false) "
            f"(m-bool ((_ is {tester}) (payload {a}))))"
        )
    if isinstance(e, LstE):
        out = "(m-val (v-list vl-nil))"
        for item in reversed(e.items):
            out = f"(m-cons {_encode(item)} {out})"
        return out
    raise EncodingUnsupported(f"node {type(e).__name__}")


def export_smtlib(pc) -> str:
    """A complete SMT-LIB2 script whose check-sat matches the path
    condition's satisfiability over the unbounded value domain."""
    from .syntax import lv_expr

    lvars = set()
    body = []
    for conj in pc:
        lvars |= lv_expr(conj)
        body.append(f"(assert (is-true {_encode(conj)}))")
    lines = [_PRELUDE.rstrip()]
    for x in sorted(lvars):
        lines.append(f"(declare-const |#{x}| MVal)")
        lines.append(f"(assert (wf-m |#{x}|))")
    lines.extend(body)
    lines.append("(check-sat)")
    return "\n".join(lines) + "\n"
