"""Differential soundness harnesses.

Random command programs run both concretely and symbolically from related
states; over-approximate soundness demands every concrete run has a
matching symbolic path, under-approximate soundness demands every model
of a symbolic result is concretely reachable. The command-level frame
property is checked the same way, directly against the interpreter.

Programs are generated over the core constructs plus memory actions; the
side conditions are applied literally: abort-free (over-approximate
direction) and, for missing-resource outcomes, an empty predicate
multiset.
"""

from __future__ import annotations

import itertools
from random import Random

from .concrete import ConcreteState, run
from .engine import (
    EngineContext,
    Mode,
    SymbolicState,
    models_of,
    models_under,
    sym_exec,
)
from .evaluation import eval_lexpr
from .memmodel import Bounds, MemoryModelBundle
from .oracle import Oracle
from .outcomes import ABORT, MISS
from .solver import Sat, check_sat
from .syntax import (
    Action,
    Assign,
    Bin,
    Cmd,
    IfElse,
    InVal,
    LVar,
    Lit,
    PVar,
    Seq,
    Skip,
)
from .values import TRUE, UNDEF, value_key

_PVARS = ("x", "y", "z")


def random_expr(rng: Random, bounds: Bounds, depth: int = 2):
    roll = rng.random()
    if depth == 0 or roll < 0.45:
        return Lit(rng.choice(bounds.sorted_domain()))
    if roll < 0.75:
        return PVar(rng.choice(_PVARS))
    op = rng.choice(("+", "-", "=", "<", "<="))
    return Bin(op, random_expr(rng, bounds, depth - 1), random_expr(rng, bounds, depth - 1))


def random_command(rng: Random, bundle: MemoryModelBundle, bounds: Bounds, size: int = 3) -> Cmd:
    cmds = [_random_basic(rng, bundle, bounds) for _ in range(max(1, size))]
    out = cmds[-1]
    for c in reversed(cmds[:-1]):
        out = Seq(c, out)
    return out


def _random_basic(rng: Random, bundle, bounds) -> Cmd:
    roll = rng.random()
    if roll < 0.15:
        return Skip()
    if roll < 0.4:
        return Assign(rng.choice(_PVARS), random_expr(rng, bounds))
    if roll < 0.55:
        return IfElse(
            random_expr(rng, bounds, 1),
            _random_basic(rng, bundle, bounds),
            _random_basic(rng, bundle, bounds),
        )
    cases = list(bundle.cmm.action_cases(bounds))
    name, args = rng.choice(cases)
    arity = {a: 0 for a in bundle.cmm.actions}
    outs = {"lookup": 1, "new": 1, "mutate": 0, "free": 0, "newObj": 1, "deleteField": 0}
    n_out = outs.get(name, 0)
    targets = tuple(rng.sample(_PVARS, n_out))
    arg_exprs = tuple(
        PVar(rng.choice(_PVARS)) if rng.random() < 0.3 else Lit(v) for v in args
    )
    return Action(targets, name, arg_exprs)


def random_state_pair(rng: Random, bundle, bounds: Bounds, mems: list):
    """A concrete state, a symbolic state it satisfies, and the tying
    interpretation."""
    store = {x: rng.choice(bounds.sorted_domain()) for x in _PVARS}
    mem = rng.choice(mems)
    names = iter(f"s{i}" for i in itertools.count())
    sym_store = {}
    theta = {}
    for x, v in store.items():
        if rng.random() < 0.5:
            sym_store[x] = Lit(v)
        else:
            name = next(names)
            theta[name] = v
            sym_store[x] = LVar(name)
    ground = rng.random() < 0.5
    smem, theta2 = bundle.smm.lift(mem, lambda: next(names), ground)
    theta.update(theta2)
    pc = tuple(InVal(LVar(n)) for n in sorted(theta))
    sym = SymbolicState(sym_store, smem, (), pc)
    return ConcreteState(store, mem), sym, theta


def _match_domain(bounds, bundle, state: ConcreteState):
    vals = set(bounds.value_domain) | bundle.cmm.mem_values(state.mem)
    vals.update(v for v in state.store.values() if v is not UNDEF)
    return sorted(vals, key=value_key)


def _extensions(theta, new_lvars, domain):
    new_lvars = sorted(new_lvars)
    if not new_lvars:
        yield dict(theta)
        return
    for combo in itertools.product(domain, repeat=len(new_lvars)):
        yield {**theta, **dict(zip(new_lvars, combo))}


def _branch_matches(bundle, preds, bounds, branch, theta, known, final: ConcreteState) -> bool:
    state = branch.state
    new = state.lvars(bundle.smm) - known
    domain = _match_domain(bounds, bundle, final)
    for th in _extensions(theta, new, domain):
        if not all(eval_lexpr(c, th, {}) is TRUE for c in state.pc):
            continue
        for model in models_under(th, state, bundle, preds, bounds):
            if model.mem == final.mem and all(
                model.store.get(x) == v for x, v in final.store.items()
            ):
                return True
    return False


def check_engine_ox(bundle, bounds: Bounds, trials: int, seed: int, preds=None, specs=None):
    """Bounded over-approximate engine soundness over random programs.
    Returns a list of failure descriptions (empty = no counterexample)."""
    preds = preds or {}
    specs = specs or {}
    rng = Random(seed)
    mems = list(bundle.cmm.generator(bounds))
    failures = []
    for trial in range(trials):
        cmd = random_command(rng, bundle, bounds, size=rng.randint(1, 3))
        concrete, sym, theta = random_state_pair(rng, bundle, bounds, mems)
        ctx = EngineContext(Mode.OX, specs, bundle, preds, bounds)
        ctx.seed_fresh(sym)
        branches = sym_exec(ctx, Oracle.constant(0), sym, cmd)
        # side conditions: no satisfiable abort; missing-resource outcomes
        # only with an empty predicate multiset (always true here)
        if any(
            br.outcome is ABORT and isinstance(check_sat(br.state.pc, bounds), Sat)
            for br in branches
        ):
            continue
        known = sym.lvars(bundle.smm) | set(theta)
        for o, final in run(
            {}, concrete, cmd, bundle.cmm, budget=8, max_addresses=bounds.max_addresses
        ):
            if not any(
                br.outcome is o
                and _branch_matches(bundle, preds, bounds, br, theta, known, final)
                for br in branches
            ):
                failures.append(
                    {
                        "trial": trial,
                        "cmd": cmd,
                        "state": concrete,
                        "outcome": o.value,
                        "final": final,
                    }
                )
                break
    return failures


def check_engine_ux(bundle, bounds: Bounds, trials: int, seed: int, preds=None, specs=None):
    """Bounded under-approximate engine soundness over random programs."""
    preds = preds or {}
    specs = specs or {}
    rng = Random(seed)
    mems = list(bundle.cmm.generator(bounds))
    failures = []
    for trial in range(trials):
        cmd = random_command(rng, bundle, bounds, size=rng.randint(1, 3))
        concrete, sym, theta = random_state_pair(rng, bundle, bounds, mems)
        ctx = EngineContext(Mode.UX, specs, bundle, preds, bounds)
        ctx.seed_fresh(sym)
        branches = sym_exec(ctx, Oracle.constant(0), sym, cmd)
        for br in branches:
            if br.outcome is ABORT:
                continue
            for th, final in models_of(
                br.state, bundle, preds, bounds, extra_lvars=sorted(sym.lvars(bundle.smm))
            ):
                reachable = False
                for start in models_under(th, sym, bundle, preds, bounds):
                    results = run(
                        {}, start, cmd, bundle.cmm, budget=8,
                        max_addresses=bounds.max_addresses,
                    )
                    if any(
                        o is br.outcome
                        and st.mem == final.mem
                        and all(st.store.get(x) == v for x, v in final.store.items())
                        for o, st in results
                    ):
                        reachable = True
                        break
                if not reachable:
                    failures.append(
                        {
                            "trial": trial,
                            "cmd": cmd,
                            "outcome": br.outcome.value,
                            "final": final,
                            "theta": th,
                        }
                    )
                    break
    return failures


def check_cmd_frame(bundle, bounds: Bounds, trials: int, seed: int, mode: str):
    """Command-level frame property, checked directly on the interpreter."""
    rng = Random(seed)
    mems = list(bundle.cmm.generator(bounds))
    cmm = bundle.cmm
    failures = []
    for trial in range(trials):
        cmd = random_command(rng, bundle, bounds, size=rng.randint(1, 3))
        store = {x: rng.choice(bounds.sorted_domain()) for x in _PVARS}
        mu = rng.choice(mems)
        frame = rng.choice(mems)
        composed = cmm.compose(mu, frame)
        wide = bounds.max_addresses + cmm.addr_span(frame)
        if mode == "ox":
            if composed is None:
                continue
            full = run({}, ConcreteState(store, composed), cmd, cmm, 8, bounds.max_addresses)
            inner = run({}, ConcreteState(store, mu), cmd, cmm, 8, wide)
            for o, st in full:
                ok = any(
                    o2 is MISS
                    or (o2 is o and st2.store == st.store and cmm.compose(st2.mem, frame) == st.mem)
                    for o2, st2 in inner
                )
                if not ok:
                    failures.append({"trial": trial, "cmd": cmd, "mem": mu, "frame": frame})
                    break
        else:
            inner = run({}, ConcreteState(store, mu), cmd, cmm, 8, bounds.max_addresses)
            full = (
                run({}, ConcreteState(store, composed), cmd, cmm, 8, wide)
                if composed is not None
                else []
            )
            for o, st in inner:
                if o is MISS:
                    continue
                lifted = cmm.compose(st.mem, frame)
                if lifted is None:
                    continue
                if not any(
                    o2 is o and st2.store == st.store and st2.mem == lifted for o2, st2 in full
                ):
                    failures.append({"trial": trial, "cmd": cmd, "mem": mu, "frame": frame})
                    break
    return failures
