"""Three-valued satisfiability and entailment for path conditions.

The built-in backend is a rewriting core (constant folding, equality
congruence closure, numeric interval closure over literals) on top of
bounded model enumeration:

  * Sat is only ever reported with a witness that replays to true.
  * Unsat is reported when the rewriting core derives a contradiction, or
    when the condition is ground (no logical variables) and false.
  * everything else is Unknown.

Path conditions are tuples of program-variable-free expressions, read
conjunctively.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from random import Random

from .evaluation import eval_lexpr
from .syntax import Bin, Expr, InType, InVal, Lit, LstE, LVar, Not, PVar, lv_expr, pv_expr
from .values import TRUE, UNDEF, is_nat, is_rat, value_key


class PathCondError(ValueError):
    pass


def fold_expr(e: Expr):
    """Bottom-up constant folding. Ground subterms that evaluate to a value
    become literals; everything else is rebuilt."""
    if isinstance(e, Lit):
        return e
    if isinstance(e, (LVar, PVar)):
        return e
    if isinstance(e, Not):
        a = fold_expr(e.arg)
        e2 = Not(a)
    elif isinstance(e, Bin):
        e2 = Bin(e.op, fold_expr(e.left), fold_expr(e.right))
    elif isinstance(e, InVal):
        e2 = InVal(fold_expr(e.arg))
    elif isinstance(e, InType):
        e2 = InType(fold_expr(e.arg), e.tau)
    elif isinstance(e, LstE):
        e2 = LstE(tuple(fold_expr(i) for i in e.items))
    else:
        raise TypeError(f"not an expression: {e!r}")
    if not lv_expr(e2) and not pv_expr(e2):
        v = eval_lexpr(e2, {}, {})
        if v is not UNDEF:
            return Lit(v)
    return e2


def pc_extend(pc: tuple, conjuncts) -> tuple:
    """Append folded conjuncts, dropping trivial truths and duplicates."""
    out = list(pc)
    seen = set(out)
    for c in conjuncts:
        if pv_expr(c):
            raise PathCondError(f"path condition mentions program variables: {c}")
        f = fold_expr(c)
        if f == Lit(TRUE):
            continue
        if f not in seen:
            out.append(f)
            seen.add(f)
    return tuple(out)


def pc_lvars(pc) -> frozenset:
    out = frozenset()
    for c in pc:
        out |= lv_expr(c)
    return out


# ---------------------------------------------------------------------------
# Verdicts
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Sat:
    witness: dict  # interpretation making every conjunct true


class _Unsat:
    def __repr__(self):
        return "Unsat"


class _Unknown:
    def __repr__(self):
        return "Unknown"


UNSAT = _Unsat()
UNKNOWN = _Unknown()


class Entail(Enum):
    YES = "yes"
    NO = "no"
    UNKNOWN = "unknown"


# ---------------------------------------------------------------------------
# Rewriting core
# ---------------------------------------------------------------------------


class _Interval:
    __slots__ = ("lo", "hi", "integral")

    def __init__(self):
        self.lo = None  # (Fraction bound, strict) or None
        self.hi = None
        self.integral = False

    def add_lo(self, bound: Fraction, strict: bool) -> bool:
        cur = self.lo
        if cur is None or bound > cur[0] or (bound == cur[0] and strict and not cur[1]):
            self.lo = (bound, strict)
        return self._consistent()

    def add_hi(self, bound: Fraction, strict: bool) -> bool:
        cur = self.hi
        if cur is None or bound < cur[0] or (bound == cur[0] and strict and not cur[1]):
            self.hi = (bound, strict)
        return self._consistent()

    def _consistent(self) -> bool:
        if self.lo is None or self.hi is None:
            return True
        (lo, ls), (hi, hs) = self.lo, self.hi
        if lo > hi:
            return False
        if lo == hi and (ls or hs):
            return False
        if self.integral:
            import math

            low = lo + 1 if ls and lo.denominator == 1 else Fraction(math.ceil(lo))
            high = hi - 1 if hs and hi.denominator == 1 else Fraction(math.floor(hi))
            if low > high:
                return False
        return True


class RewriteCore:
    """One satisfiability core for a conjunction: congruence closure over
    equalities, complement detection, interval closure for numeric
    comparisons against literals. `contradiction` is sound: when True, the
    conjunction has no model over the unbounded domain."""

    def __init__(self, conjuncts):
        self.parent = {}
        self.contradiction = False
        self.diseq = []
        self.pos = set()  # rewritten non-negated conjuncts
        self.neg = set()  # rewritten e with Not(e) a conjunct
        self.types = {}  # node -> type name it must have
        self.intervals = {}
        self.conjuncts = [fold_expr(c) for c in conjuncts]
        self._close()

    # union-find -------------------------------------------------------------

    def _find(self, e):
        p = self.parent.get(e, e)
        if p == e:
            return e
        root = self._find(p)
        self.parent[e] = root
        return root

    def _union(self, a, b):
        ra, rb = self._find(a), self._find(b)
        if ra == rb:
            return
        # prefer literal representatives
        if isinstance(ra, Lit):
            if isinstance(rb, Lit):
                if value_key(ra.value) != value_key(rb.value):
                    self.contradiction = True
                return
            self.parent[rb] = ra
        else:
            self.parent[ra] = rb

    def _rep(self, e):
        r = self._find(e)
        return r

    def _numeric_type(self, e: Expr):
        if isinstance(e, Lit):
            if is_nat(e.value):
                return "nat"
            if is_rat(e.value):
                return "rat"
            return None
        t = self.types.get(e)
        if t in ("nat", "rat"):
            return t
        iv = self.intervals.get(e)
        if iv is not None:
            return "nat" if iv.integral else "rat"
        return None

    def provably_defined(self, e: Expr) -> bool:
        """The expression evaluates to a value in every model of the
        conjunction."""
        if isinstance(e, Lit):
            return True
        if isinstance(e, (InVal, InType)):
            return True  # membership tests are total
        if InVal(e) in self.pos or e in self.types or e in self.intervals:
            return True
        if isinstance(e, Bin):
            if e.op == "=":
                return self.provably_defined(e.left) and self.provably_defined(e.right)
            if e.op in ("<", "<=", "+"):
                lt, rt = self._numeric_type(e.left), self._numeric_type(e.right)
                return lt is not None and lt == rt
        return False

    def rewrite(self, e: Expr) -> Expr:
        """Substitute known-equal literals into e and refold."""
        r = self._find(e)
        if isinstance(r, Lit):
            return r
        if isinstance(e, Not):
            e2 = Not(self.rewrite(e.arg))
        elif isinstance(e, Bin):
            e2 = Bin(e.op, self.rewrite(e.left), self.rewrite(e.right))
        elif isinstance(e, InVal):
            e2 = InVal(self.rewrite(e.arg))
        elif isinstance(e, InType):
            e2 = InType(self.rewrite(e.arg), e.tau)
        elif isinstance(e, LstE):
            e2 = LstE(tuple(self.rewrite(i) for i in e.items))
        else:
            e2 = e
        e2 = fold_expr(e2)
        if (
            isinstance(e2, Bin)
            and e2.op == "="
            and e2.left == e2.right
            and self.provably_defined(e2.left)
        ):
            return Lit(TRUE)
        if isinstance(e2, InVal) and self.provably_defined(e2.arg):
            return Lit(TRUE)
        r2 = self._find(e2)
        return r2 if isinstance(r2, Lit) else e2

    # closure ----------------------------------------------------------------

    def _close(self):
        for _ in range(3):
            changed = self._pass()
            if self.contradiction or not changed:
                break
        # final contradiction sweeps
        if self.contradiction:
            return
        for a, b in self.diseq:
            ra, rb = self.rewrite(a), self.rewrite(b)
            if ra == rb:
                self.contradiction = True
                return
        for e in self.pos:
            if e in self.neg:
                self.contradiction = True
                return
        for node, tau in self.types.items():
            n = self.rewrite(node)
            if isinstance(n, Lit):
                from .values import type_name

                if type_name(n.value) != tau:
                    self.contradiction = True
                    return
        for e in self.neg:
            # a typed or numerically-bounded node is defined and typed
            if isinstance(e, InVal) and self.provably_defined(e.arg):
                self.contradiction = True
                return
            if isinstance(e, InType):
                if self.types.get(e.arg) == e.tau:
                    self.contradiction = True
                    return
                if e.tau == "nat" and self.intervals.get(e.arg) is not None and self.intervals[e.arg].integral:
                    self.contradiction = True
                    return
        self._integer_exclusion()

    def _integer_exclusion(self):
        """Finite integral interval with every member excluded by a
        disequality against a literal."""
        import math

        excluded = {}
        for a, b in self.diseq:
            ra, rb = self.rewrite(a), self.rewrite(b)
            for node, lit in ((ra, rb), (rb, ra)):
                if isinstance(lit, Lit) and is_nat(lit.value):
                    excluded.setdefault(node, set()).add(lit.value)
        for node, iv in self.intervals.items():
            if not iv.integral or iv.lo is None or iv.hi is None:
                continue
            (lo, ls), (hi, hs) = iv.lo, iv.hi
            low = int(lo) + 1 if ls and lo.denominator == 1 else math.ceil(lo)
            high = int(hi) - 1 if hs and hi.denominator == 1 else math.floor(hi)
            if high - low > 32:
                continue
            bad = excluded.get(self.rewrite(node), set())
            if all(n in bad for n in range(low, high + 1)):
                self.contradiction = True
                return

    def _pass(self) -> bool:
        changed = False
        new_conjuncts = []
        self.pos = set()
        self.neg = set()
        self.intervals = {}
        for c in self.conjuncts:
            c2 = self.rewrite(c)
            if c2 != c:
                changed = True
            if c2 == Lit(TRUE):
                continue
            if isinstance(c2, Lit):
                # a conjunct that is a non-true literal cannot hold
                self.contradiction = True
                return False
            if not lv_expr(c2):
                v = eval_lexpr(c2, {}, {})
                if v is not TRUE:
                    self.contradiction = True
                    return False
                continue
            new_conjuncts.append(c2)
            self._absorb(c2)
            if self.contradiction:
                return False
        self.conjuncts = new_conjuncts
        return changed

    def _absorb(self, c: Expr):
        if isinstance(c, Not):
            inner = c.arg
            self.neg.add(inner)
            if isinstance(inner, Bin):
                if inner.op == "=":
                    self.diseq.append((inner.left, inner.right))
                elif inner.op == "<":
                    # not(a < b) true means both numeric and b <= a
                    self._comparison(inner.right, "<=", inner.left)
                elif inner.op == "<=":
                    self._comparison(inner.right, "<", inner.left)
            return
        self.pos.add(c)
        if isinstance(c, Bin):
            if c.op == "=":
                self._union(c.left, c.right)
            elif c.op in ("<", "<="):
                self._comparison(c.left, c.op, c.right)
            elif c.op == "and":
                self._absorb(c.left)
                self._absorb(c.right)
        elif isinstance(c, InType):
            tau = self.types.setdefault(c.arg, c.tau)
            if tau != c.tau:
                self.contradiction = True

    def _interval(self, node) -> _Interval:
        iv = self.intervals.get(node)
        if iv is None:
            iv = _Interval()
            self.intervals[node] = iv
        return iv

    def _numeric(self, lit):
        if is_nat(lit):
            return Fraction(lit), True
        if is_rat(lit):
            return lit.q, False
        return None, None

    def _put_type(self, node, tau):
        if isinstance(node, Lit):
            from .values import type_name

            if type_name(node.value) != tau:
                self.contradiction = True
            return
        old = self.types.setdefault(node, tau)
        if old != tau:
            self.contradiction = True

    def _comparison(self, left, op, right):
        strict = op == "<"
        if isinstance(right, Lit):
            bound, integral = self._numeric(right.value)
            if bound is None:
                self.contradiction = True  # comparison against non-numeric literal
                return
            # order is only defined within one numeric type
            self._put_type(left, "nat" if integral else "rat")
            iv = self._interval(left)
            iv.integral = iv.integral or integral
            if integral:
                if not iv.add_lo(Fraction(0), False):
                    self.contradiction = True
            if not iv.add_hi(bound, strict):
                self.contradiction = True
        if isinstance(left, Lit):
            bound, integral = self._numeric(left.value)
            if bound is None:
                self.contradiction = True
                return
            self._put_type(right, "nat" if integral else "rat")
            iv = self._interval(right)
            iv.integral = iv.integral or integral
            if integral and not iv.add_lo(Fraction(0), False):
                self.contradiction = True
            if not iv.add_lo(bound, strict):
                self.contradiction = True

    def entails(self, e: Expr) -> bool:
        """True only when the core proves every model of the conjunction
        makes `e` evaluate to true."""
        if self.contradiction:
            return True
        r = self.rewrite(e)
        if r == Lit(TRUE):
            return True
        if r in self.pos:
            return True
        neg_core = RewriteCore(self.conjuncts + [Not(r)])
        undef_core = RewriteCore(self.conjuncts + [Not(InVal(r))])
        return neg_core.contradiction and undef_core.contradiction


# ---------------------------------------------------------------------------
# Public operations
# ---------------------------------------------------------------------------

_ENUM_CAP = 250_000


def _literals_in(e: Expr, out: set):
    if isinstance(e, Lit):
        out.add(e.value)
    elif isinstance(e, Not):
        _literals_in(e.arg, out)
    elif isinstance(e, Bin):
        _literals_in(e.left, out)
        _literals_in(e.right, out)
    elif isinstance(e, (InVal, InType)):
        _literals_in(e.arg, out)
    elif isinstance(e, LstE):
        for i in e.items:
            _literals_in(i, out)


def enumeration_domain(pc, bounds) -> list:
    vals = set(bounds.value_domain)
    for c in pc:
        _literals_in(c, vals)
    return sorted(vals, key=value_key)


_OMIT = object()  # interpretations are partial: a variable may stay unbound


def _assignments(lvars, domain, bounds):
    """Deterministic stream of candidate interpretations."""
    lvars = sorted(lvars)
    if not lvars:
        yield {}
        return
    options = list(domain) + [_OMIT]
    total = len(options) ** len(lvars)
    if total <= _ENUM_CAP:
        for combo in itertools.product(options, repeat=len(lvars)):
            yield {x: v for x, v in zip(lvars, combo) if v is not _OMIT}
        return
    rng = Random(bounds.seed)
    for _ in range(max(bounds.trials, 1)):
        combo = [rng.choice(options) for _ in lvars]
        yield {x: v for x, v in zip(lvars, combo) if v is not _OMIT}


def _holds_all(pc, theta) -> bool:
    return all(eval_lexpr(c, theta, {}) is TRUE for c in pc)


_sat_cache: dict = {}
_dump_state = {"dir": None, "n": 0}


def enable_smtlib_dump(directory: str):
    import os

    os.makedirs(directory, exist_ok=True)
    _dump_state["dir"] = directory
    _dump_state["n"] = 0
    clear_caches()


def disable_smtlib_dump():
    _dump_state["dir"] = None


def _maybe_dump(pc):
    if _dump_state["dir"] is None:
        return
    import os

    from .smtlib import export_smtlib

    path = os.path.join(_dump_state["dir"], f"pc_{_dump_state['n']:05d}.smt2")
    _dump_state["n"] += 1
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(export_smtlib(pc))


def clear_caches():
    _sat_cache.clear()


def check_sat(pc, bounds):
    """Sat(witness) | UNSAT | UNKNOWN for a conjunction of pv-free exprs."""
    pc = tuple(pc)
    key = (pc, bounds.key())
    hit = _sat_cache.get(key)
    if hit is not None:
        return hit
    _maybe_dump(pc)
    verdict = _check_sat(pc, bounds)
    if len(_sat_cache) > 100_000:
        _sat_cache.clear()
    _sat_cache[key] = verdict
    return verdict


def _check_sat(pc, bounds):
    core = RewriteCore(pc)
    if core.contradiction:
        return UNSAT
    lvars = pc_lvars(pc)
    if not lvars:
        # ground: the core already evaluated every conjunct
        return Sat({})
    domain = enumeration_domain(pc, bounds)
    exhaustive = len(domain) ** len(lvars) <= _ENUM_CAP
    for theta in _assignments(lvars, domain, bounds):
        if _holds_all(pc, theta):
            return Sat(dict(sorted(theta.items())))
    del exhaustive  # bounded domains never justify Unsat for lvars
    return UNKNOWN


def entails(pc, e: Expr, bounds) -> Entail:
    """Does every model of pc make `e` true?  Yes is only returned when the
    rewriting core closes the unbounded case; No carries via a bounded
    countermodel; otherwise Unknown."""
    if pv_expr(e):
        raise PathCondError(f"entailment query mentions program variables: {e}")
    pc = tuple(pc)
    e = fold_expr(e)
    if e == Lit(TRUE):
        return Entail.YES
    core = RewriteCore(pc)
    if core.entails(e):
        return Entail.YES
    # countermodel search
    lvars = pc_lvars(pc) | lv_expr(e)
    domain = enumeration_domain(pc + (e,), bounds)
    for theta in _assignments(lvars, domain, bounds):
        if _holds_all(pc, theta) and eval_lexpr(e, theta, {}) is not TRUE:
            return Entail.NO
    return Entail.UNKNOWN
