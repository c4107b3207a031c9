"""The two analyses: function-specification verification (over-approximate)
and bi-abductive true bug-finding (under-approximate).

Verification produces the precondition into a fresh symbolic state,
executes the body, and consumes the postcondition on every path; a path
verifies when all surviving consume aborts are unsatisfiable and every
successful consumption leaves nothing behind (a trailing `True` in the
postcondition absorbs leftovers).

Bug-finding executes from an empty heap; missing-resource faults are
patched by the model's fixes, which accumulate into an anti-heap that
becomes the synthesized precondition. Every emitted report is replayed
against the concrete semantics over bounded models.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .assertions import (
    Assertion,
    Bool,
    Emp,
    FALSE_A,
    Pred as PredAssertion,
    Quadruple,
    SpecContext,
    format_assertion,
    lv_assertion,
    normalize,
    split_external_pre,
    star_all,
    subst_assertion_pvars,
)
from .concrete import ConcreteState, run
from .engine import (
    Branch,
    EngineContext,
    EngineError,
    Mode,
    SymbolicState,
    consume,
    models_of,
    produce,
    sym_exec,
)
from .memmodel import Bounds, MemoryModelBundle
from .oracle import Oracle
from .outcomes import ABORT, ERR, MISS, OK
from .satisfaction import DepthExceeded, heap_models
from .solver import Sat, UNSAT, check_sat
from .syntax import (
    FunctionDef,
    ImplContext,
    InVal,
    LVar,
    Lit,
    NIL_E,
    Not,
    PVar,
    called_fids,
    eq,
    format_expr,
    prog_vars,
)


class UnsupportedCapability(Exception):
    pass


class Verified:
    def __repr__(self):
        return "Verified"


@dataclass
class Failed:
    paths: list  # {reason, outcome, pc} summaries

    def __repr__(self):
        return f"Failed({len(self.paths)} paths)"


class Inconclusive:
    def __init__(self, reason):
        self.reason = reason

    def __repr__(self):
        return f"Inconclusive({self.reason})"


def _reachable(gamma: ImplContext, fid: str) -> frozenset:
    seen = set()
    work = [fid]
    while work:
        f = work.pop()
        if f in seen or f not in gamma:
            continue
        seen.add(f)
        work.extend(called_fids(gamma[f].body))
    return frozenset(seen)


def verify_ox(
    gamma: ImplContext,
    specs: SpecContext,
    fid: str,
    q: Quadruple,
    bundle: MemoryModelBundle,
    preds=None,
    bounds: Bounds = None,
    oracle_fanout: int = 3,
    oracle_depth: int = 3,
):
    """Verify an SL or ESL quadruple against the implementation."""
    preds = preds if preds is not None else {}
    bounds = bounds if bounds is not None else Bounds()
    if not bundle.declared_soundness.ox:
        raise UnsupportedCapability(f"{bundle.name} does not declare verification soundness")
    if q.flavor == "ISL":
        raise ValueError("verification applies to SL/ESL specifications")
    if fid not in gamma:
        raise KeyError(fid)
    f = gamma[fid]
    q.check_external_shape()
    if tuple(q.params) != tuple(f.params):
        return Failed([{"reason": "spec/definition parameter mismatch", "outcome": "-", "pc": []}])
    callees = called_fids(f.body)
    if any(fid in _reachable(gamma, g) for g in callees):
        return Failed([{"reason": "recursive functions are not supported", "outcome": "-", "pc": []}])

    # the spec under verification must not justify its own calls
    specs2 = SpecContext()
    for g, qs in specs.items():
        kept = [s for s in qs if not (g == fid and s == q)]
        if kept:
            specs2[g] = kept

    mode = Mode.EX if q.flavor == "ESL" else Mode.OX
    param_map, spatial_pre = split_external_pre(q.pre, q.params)
    store = {x: LVar(param_map[x]) for x in q.params}
    for z in f.locals():
        store[z] = NIL_E
    seed_pc = [InVal(LVar(param_map[x])) for x in q.params]
    state0 = SymbolicState(store, bundle.smm.empty, (), tuple(seed_pc))

    # search over angelic choice prefixes; most verifications need none
    oracles = [Oracle.constant(0)]
    import itertools as _it

    for depth in range(1, oracle_depth + 1):
        for prefix in _it.product(range(oracle_fanout), repeat=depth):
            oracles.append(Oracle(prefix, 0, 0))
    best = None
    for oracle in oracles:
        verdict = _verify_once(
            gamma, specs2, f, q, bundle, preds, bounds, mode, param_map, spatial_pre, state0, oracle
        )
        if isinstance(verdict, Verified):
            return verdict
        if best is None or isinstance(best, Failed) and isinstance(verdict, Inconclusive):
            best = verdict
    return best if best is not None else Inconclusive("no oracle explored")


def _verify_once(gamma, specs, f, q, bundle, preds, bounds, mode, param_map, spatial_pre, state0, oracle):
    ctx = EngineContext(mode, specs, bundle, preds, bounds)
    ctx.seed_fresh(state0)
    subst = {x: LVar(x) for x in lv_assertion(q.pre)}
    try:
        produced = produce(ctx, spatial_pre, subst, state0)
    except EngineError as exc:
        return Inconclusive(f"precondition not producible: {exc}")
    failing = []
    unknown = []
    for st in produced:
        for br in sym_exec(ctx, oracle, st, f.body):
            _verify_branch(ctx, f, q, subst, br, failing, unknown)
    if failing:
        return Failed(failing)
    if unknown:
        return Inconclusive(f"{len(unknown)} paths undecided by the solver")
    return Verified()


def _verify_branch(ctx, f, q, subst, br: Branch, failing, unknown):
    def classify(state, reason, outcome):
        # a failing path needs a bounded state-level model to count: the
        # path condition alone over-approximates satisfiability (memory
        # and store constrain the same variables)
        verdict = check_sat(state.pc, ctx.bounds)
        if verdict is UNSAT:
            return
        entry = {
            "reason": reason,
            "outcome": outcome.value,
            "pc": [format_expr(c) for c in state.pc],
        }
        if models_of(state, ctx.bundle, ctx.preds, ctx.bounds):
            failing.append(entry)

    if br.outcome is ABORT:
        classify(br.state, f"abort: {_fmt_reason(br.reason)}", ABORT)
        return
    if br.outcome is MISS:
        classify(br.state, f"missing resource: {_fmt_reason(br.reason)}", MISS)
        return
    if br.outcome is OK:
        from .engine import sym_eval
        from .syntax import lv_expr

        ret = sym_eval(f.ret, br.state.store)
        ok_state = br.state.extend_pc([InVal(ret)])
        if check_sat(ok_state.pc, ctx.bounds) is not UNSAT:
            post = subst_assertion_pvars(q.post_ok, {"ret": ret})
            subst2 = {**subst, **{x: LVar(x) for x in lv_expr(ret) if x not in subst}}
            _consume_post(ctx, br.oracle, post, subst2, ok_state, "ok", classify)
        err_state = br.state.extend_pc([Not(InVal(ret))])
        if check_sat(err_state.pc, ctx.bounds) is not UNSAT:
            post = subst_assertion_pvars(q.post_err, {"err": Lit("ExprEval")})
            _consume_post(ctx, br.oracle, post, subst, err_state, "err", classify)
        return
    # ERR branch: the error payload sits in the store
    from .syntax import lv_expr

    payload = br.state.store.get("err", Lit("Unknown"))
    post = subst_assertion_pvars(q.post_err, {"err": payload})
    subst2 = {**subst, **{x: LVar(x) for x in lv_expr(payload) if x not in subst}}
    _consume_post(ctx, br.oracle, post, subst2, br.state, "err", classify)


def _consume_post(ctx, oracle, post, subst, state, outcome_name, classify):
    from .outcomes import Outcome

    outcome = Outcome(outcome_name) if outcome_name in ("ok", "err") else OK
    results = consume(ctx, oracle, post, subst, state)
    for o, _, _, st, reason in results:
        # failure models live in the branch state (full memory) under the
        # consume result's path condition: consumption only removes state,
        # and removed cells carry aliasing information with them
        witness_state = state.with_(pc=st.pc)
        if o is ABORT:
            classify(witness_state, f"postcondition not consumed: {_fmt_reason(reason)}", outcome)
        else:
            if st.mem != ctx.bundle.smm.empty or st.preds:
                classify(witness_state, "state left over after the postcondition", outcome)


def _fmt_reason(reason) -> str:
    parts = []
    for r in reason:
        try:
            parts.append(format_expr(r))
        except TypeError:
            parts.append(repr(r))
    return " ".join(parts) if parts else "-"


# ---------------------------------------------------------------------------
# Bi-abduction
# ---------------------------------------------------------------------------


@dataclass
class BugReport:
    fid: str
    outcome: str  # "ok" | "err" | "miss" | "abort"
    quadruple: Quadruple = None
    anti_heap: Assertion = None
    witness_pc: list = field(default_factory=list)
    replayed: bool = None
    quadruple_verdict: str = None
    unrecoverable: bool = False
    detail: str = ""

    def key(self):
        qk = None
        if self.quadruple is not None:
            qk = (
                format_assertion(normalize(self.quadruple.pre)),
                format_assertion(normalize(self.quadruple.post_ok)),
                format_assertion(normalize(self.quadruple.post_err)),
            )
        return (self.fid, self.outcome, qk)


def biabduct(
    gamma: ImplContext,
    specs: SpecContext,
    target,
    bundle: MemoryModelBundle,
    preds=None,
    bounds: Bounds = None,
    max_fixes: int = 4,
    budget: int = 64,
    validate: bool = True,
) -> list:
    """Run bi-abductive bug-finding on a function id or a command."""
    preds = preds if preds is not None else {}
    bounds = bounds if bounds is not None else Bounds()
    if not bundle.declared_soundness.ux:
        raise UnsupportedCapability(f"{bundle.name} does not declare bug-finding soundness")
    if bundle.smm.fixes is None:
        raise UnsupportedCapability(f"{bundle.name} provides no fixes")
    if isinstance(target, str):
        fid = target
        f = gamma[fid]
        gamma2 = gamma
    else:
        fid = "anon"
        f = FunctionDef(fid, tuple(sorted(prog_vars(target))), target, NIL_E)
        gamma2 = ImplContext({**gamma})
        gamma2[fid] = f

    store = {x: LVar(x) for x in f.params}
    for z in f.locals():
        store[z] = NIL_E
    seed_pc = [InVal(LVar(x)) for x in f.params]
    state0 = SymbolicState(store, bundle.smm.empty, (), tuple(seed_pc))
    ctx = EngineContext(Mode.UX, specs, bundle, preds, bounds, budget=budget, fixing=True, max_fixes=max_fixes)
    ctx.seed_fresh(state0)

    reports = []
    for br in sym_exec(ctx, Oracle.constant(0), state0, f.body):
        reports.extend(_branch_reports(ctx, gamma2, f, state0, br, bounds, validate))
    # de-duplicate by normalised quadruple
    seen = set()
    unique = []
    for r in reports:
        if r.key() not in seen:
            seen.add(r.key())
            unique.append(r)
    return unique


def _branch_reports(ctx, gamma, f, state0, br: Branch, bounds, validate):
    anti = star_all(br.fixes) if br.fixes else Emp()
    if br.outcome in (MISS, ABORT):
        return [
            BugReport(
                fid=f.fid,
                outcome=br.outcome.value,
                anti_heap=anti,
                witness_pc=[format_expr(c) for c in br.state.pc],
                unrecoverable=True,
                detail=_fmt_reason(br.reason),
            )
        ]
    out = []
    if br.outcome is OK:
        from .engine import sym_eval

        ret = sym_eval(f.ret, br.state.store)
        ok_state = br.state.extend_pc([InVal(ret)])
        if isinstance(check_sat(ok_state.pc, ctx.bounds), Sat):
            out.append(
                _make_report(ctx, gamma, f, state0, ok_state, br, OK, Bool(eq(PVar("ret"), ret)), bounds, validate)
            )
        err_state = br.state.extend_pc([Not(InVal(ret))])
        if isinstance(check_sat(err_state.pc, ctx.bounds), Sat):
            err_state = err_state.with_(store={**err_state.store, "err": Lit("ExprEval")})
            out.append(
                _make_report(
                    ctx, gamma, f, state0, err_state, br, ERR,
                    Bool(eq(PVar("err"), Lit("ExprEval"))), bounds, validate,
                )
            )
    else:
        payload = br.state.store.get("err", Lit("Unknown"))
        out.append(
            _make_report(
                ctx, gamma, f, state0, br.state, br, ERR,
                Bool(eq(PVar("err"), payload)), bounds, validate,
            )
        )
    return [r for r in out if r is not None]


def _make_report(ctx, gamma, f, state0, final_state, br: Branch, outcome, binding, bounds, validate):
    anti = star_all(br.fixes) if br.fixes else Emp()
    pc_bools = [Bool(c) for c in final_state.pc]
    pre_parts = [Bool(eq(PVar(x), LVar(x))) for x in f.params] + pc_bools + [anti]
    pre = star_all(pre_parts)
    post_parts = ctx.bundle.smm.mem_to_assertion(final_state.mem)
    post_parts += [PredAssertion(i.name, i.ins, i.outs) for i in final_state.preds]
    post_parts += pc_bools + [binding]
    post = star_all(post_parts)
    if outcome is OK:
        quad = Quadruple("ISL", f.fid, f.params, pre, post, FALSE_A)
    else:
        quad = Quadruple("ISL", f.fid, f.params, pre, FALSE_A, post)
    report = BugReport(
        fid=f.fid,
        outcome=outcome.value,
        quadruple=quad,
        anti_heap=anti,
        witness_pc=[format_expr(c) for c in final_state.pc],
    )
    report.replayed = _replay(ctx, gamma, f, state0, final_state, outcome, anti, bounds)
    if validate:
        from .quadcheck import check_quadruple_bounded

        try:
            verdict = check_quadruple_bounded(gamma, quad, bounds, ctx.bundle, ctx.preds)
            report.quadruple_verdict = type(verdict).__name__
        except Exception as exc:  # noqa: BLE001 - verdicts become diagnostics
            report.quadruple_verdict = f"error: {exc}"
    return report


def _replay(ctx, gamma, f, state0, final_state, outcome, anti, bounds) -> bool:
    """Soundness replay: every bounded model of the final state is
    concretely reachable from an initial model extended with anti-heap
    resources."""
    from .engine import models_under
    from .assertions import star_conjuncts
    from .values import is_nat, value_key

    bundle = ctx.bundle
    initial = state0.with_(pc=final_state.pc)
    models = models_of(final_state, bundle, ctx.preds, bounds)
    for theta, target in models:
        starts = models_under(theta, initial, bundle, ctx.preds, bounds)
        matched = False
        # the fix heap may involve values that only occur in this model
        vals = set(bounds.value_domain) | set(theta.values()) | bundle.cmm.mem_values(target.mem)
        addr_cap = max(
            [bounds.max_addresses] + [v + 1 for v in vals if is_nat(v) and v < 8]
        )
        fix_bounds = Bounds(
            value_domain=tuple(sorted(vals, key=value_key)),
            max_cells=max(bounds.max_cells, len(star_conjuncts(anti))),
            max_addresses=addr_cap,
            trials=bounds.trials,
            seed=bounds.seed,
        )
        for start in starts:
            try:
                fix_heaps = heap_models(
                    theta, start.store, anti,
                    cmm=bundle.cmm, rm=bundle.rm, preds=ctx.preds, bounds=fix_bounds,
                )
            except DepthExceeded:
                continue
            for fix_mem in fix_heaps:
                whole = bundle.cmm.compose(start.mem, fix_mem)
                if whole is None:
                    continue
                results = run(
                    gamma, ConcreteState(start.store, whole), f.body, bundle.cmm,
                    budget=ctx.budget, max_addresses=bounds.max_addresses,
                )
                for o, st in results:
                    if o is not outcome:
                        continue
                    if _state_matches(st, target, outcome):
                        matched = True
                        break
                if matched:
                    break
            if matched:
                break
        if not matched:
            return False
    return True


def _state_matches(got: ConcreteState, want: ConcreteState, outcome) -> bool:
    if got.mem != want.mem:
        return False
    for x, v in want.store.items():
        if got.store.get(x) != v:
            return False
    return True
