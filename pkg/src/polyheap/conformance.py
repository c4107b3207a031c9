"""Conformance harness: bounded testing of a memory model's obligations.

Four checks, each refutation-oriented (Pass means "no counterexample
within bounds", never a proof):

  check_pcm_laws         composition forms a partial commutative monoid
  check_frame            concrete actions satisfy the OX/UX frame property
  check_action_soundness symbolic actions simulate / are realised by the
                         concrete ones
  check_cp_soundness     consume/produce agree with the resource
                         satisfaction relation

Allocation enumerates only the `max_addresses` least fresh addresses, so
existential sides of the checks search a window widened by the frame's
cell count: removing cells from a memory can only lower a fresh address's
rank, hence the widened window covers every choice the bounded universal
side can make.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from random import Random

from .evaluation import eval_lexpr
from .memmodel import Bounds, MemoryModelBundle
from .oracle import Oracle
from .outcomes import ABORT, MISS, OK
from .syntax import LVar, Lit, lv_expr
from .values import TRUE, UNDEF, value_key


@dataclass
class CheckResult:
    check: str
    mode: str  # "ox" | "ux" | "-"
    verdict: str  # "pass" | "fail"
    trials: int
    witness: dict = None

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"


def _fmt_mem(mem):
    return repr(mem)


def _sample(items: list, cap: int, seed: int) -> list:
    if len(items) <= cap:
        return items
    rng = Random(seed)
    return [items[i] for i in sorted(rng.sample(range(len(items)), cap))]


def _mems(cmm, bounds: Bounds, cap: int = 4096) -> list:
    out = []
    for m in cmm.generator(bounds):
        out.append(m)
        if len(out) >= cap:
            break
    return out


# ---------------------------------------------------------------------------
# PCM laws
# ---------------------------------------------------------------------------


def check_pcm_laws(cmm, bounds: Bounds, assoc_cap: int = 12_000_000) -> CheckResult:
    mems = _mems(cmm, bounds)
    trials = 0
    if not cmm.is_wf(cmm.empty):
        return CheckResult("pcm", "-", "fail", 0, {"law": "wf-empty"})

    def unit_fails(a):
        return cmm.compose(a, cmm.empty) != a or cmm.compose(cmm.empty, a) != a

    for a in mems:
        trials += 1
        if unit_fails(a):
            (a2,) = _shrink(lambda xs: unit_fails(xs[0]), (a,), cmm, bounds)
            return CheckResult("pcm", "-", "fail", trials, {"law": "unit", "mem": _fmt_mem(a2)})

    def commut_fails(pair):
        a, b = pair
        return cmm.compose(a, b) != cmm.compose(b, a)

    pairs = _sample(list(itertools.product(range(len(mems)), repeat=2)), 250_000, bounds.seed)
    for i, j in pairs:
        trials += 1
        if commut_fails((mems[i], mems[j])):
            w = _shrink(lambda xs: commut_fails(xs), (mems[i], mems[j]), cmm, bounds)
            return CheckResult(
                "pcm", "-", "fail", trials,
                {"law": "commutativity", "mems": [_fmt_mem(m) for m in w]},
            )
        comp = cmm.compose(mems[i], mems[j])
        if comp is not None and not cmm.is_wf(comp):
            return CheckResult(
                "pcm", "-", "fail", trials,
                {"law": "wf-compose", "mems": [_fmt_mem(mems[i]), _fmt_mem(mems[j])]},
            )

    def assoc_fails(triple):
        a, b, c = triple
        ab = cmm.compose(a, b)
        bc = cmm.compose(b, c)
        lhs = cmm.compose(ab, c) if ab is not None else None
        rhs = cmm.compose(a, bc) if bc is not None else None
        return lhs != rhs

    n = len(mems)
    if n**3 <= assoc_cap:
        pair_table = [[cmm.compose(a, b) for b in mems] for a in mems]
        for i in range(n):
            row_i = pair_table[i]
            for j in range(n):
                ab = row_i[j]
                row_j = pair_table[j]
                for k in range(n):
                    trials += 1
                    bc = row_j[k]
                    lhs = cmm.compose(ab, mems[k]) if ab is not None else None
                    rhs = cmm.compose(mems[i], bc) if bc is not None else None
                    if lhs != rhs:
                        w = _shrink(assoc_fails, (mems[i], mems[j], mems[k]), cmm, bounds)
                        return CheckResult(
                            "pcm", "-", "fail", trials,
                            {"law": "associativity", "mems": [_fmt_mem(m) for m in w]},
                        )
    else:
        rng = Random(bounds.seed)
        for _ in range(bounds.trials):
            trials += 1
            triple = (rng.choice(mems), rng.choice(mems), rng.choice(mems))
            if assoc_fails(triple):
                w = _shrink(assoc_fails, triple, cmm, bounds)
                return CheckResult(
                    "pcm", "-", "fail", trials,
                    {"law": "associativity", "mems": [_fmt_mem(m) for m in w]},
                )
    return CheckResult("pcm", "-", "pass", trials)


def _shrink(fails, mems_tuple: tuple, cmm, bounds: Bounds) -> tuple:
    """Greedy witness minimisation: drop heap cells, then minimise values."""
    current = tuple(mems_tuple)
    changed = True
    while changed:
        changed = False
        for idx, m in enumerate(current):
            if not isinstance(m, dict):
                continue
            for key in sorted(m, key=lambda k: str(k)):
                smaller = {k: v for k, v in m.items() if k != key}
                cand = current[:idx] + (smaller,) + current[idx + 1 :]
                if fails(cand):
                    current = cand
                    changed = True
                    break
            if changed:
                break
    smallest = bounds.sorted_domain()[0]
    for idx, m in enumerate(current):
        if not isinstance(m, dict):
            continue
        for key in sorted(m, key=lambda k: str(k)):
            if m[key] == smallest:
                continue
            cand_m = {**m, key: smallest}
            cand = current[:idx] + (cand_m,) + current[idx + 1 :]
            if fails(cand):
                current = cand
    return current


# ---------------------------------------------------------------------------
# Frame properties
# ---------------------------------------------------------------------------


def check_frame(cmm, mode: str, bounds: Bounds, cap: int = 200_000) -> CheckResult:
    assert mode in ("ox", "ux")
    mems = _mems(cmm, bounds)
    cases = list(cmm.action_cases(bounds))
    combos = [
        (i, j, c)
        for i in range(len(mems))
        for j in range(len(mems))
        for c in range(len(cases))
    ]
    combos = _sample(combos, cap, bounds.seed)
    trials = 0
    for i, j, c in combos:
        mu, frame = mems[i], mems[j]
        composed = cmm.compose(mu, frame)
        name, args = cases[c]
        trials += 1
        wide = bounds.max_addresses + cmm.addr_span(frame)
        if mode == "ox":
            # the property universally quantifies executions of mu . frame,
            # so undefined compositions are vacuous
            if composed is None:
                continue
            full = cmm.exec_action(composed, name, args, bounds.max_addresses)
            inner = cmm.exec_action(mu, name, args, wide)
            for o, mem2, outs in full:
                if not _ox_frame_holds(cmm, inner, frame, o, mem2, outs):
                    return CheckResult(
                        "frame", mode, "fail", trials,
                        _frame_witness(mu, frame, name, args, o, outs),
                    )
        else:
            # the conclusion executes mu . frame: when the composition is
            # undefined while a non-miss result recomposes with the frame,
            # the property fails (the freed-marker counterexample)
            inner = cmm.exec_action(mu, name, args, bounds.max_addresses)
            full = (
                [(x, y, tuple(z)) for x, y, z in cmm.exec_action(composed, name, args, wide)]
                if composed is not None
                else []
            )
            for o, mem2, outs in inner:
                if o is MISS:
                    continue
                lifted = cmm.compose(mem2, frame)
                if lifted is None:
                    continue
                if (o, lifted, tuple(outs)) not in full:
                    return CheckResult(
                        "frame", mode, "fail", trials,
                        _frame_witness(mu, frame, name, args, o, outs),
                    )
    return CheckResult("frame", mode, "pass", trials)


def _ox_frame_holds(cmm, inner_results, frame, o, mem2, outs):
    for o2, mem3, outs2 in inner_results:
        if o2 is MISS:
            return True
        if o2 is o and tuple(outs2) == tuple(outs) and cmm.compose(mem3, frame) == mem2:
            return True
    return False


def _frame_witness(mu, frame, name, args, o, outs):
    return {
        "mem": _fmt_mem(mu),
        "frame": _fmt_mem(frame),
        "action": name,
        "args": [repr(a) for a in args],
        "outcome": o.value,
        "returns": [repr(v) for v in outs],
    }


# ---------------------------------------------------------------------------
# Symbolic action soundness
# ---------------------------------------------------------------------------


class _Namer:
    def __init__(self, prefix="h"):
        self.prefix = prefix
        self.n = 0

    def __call__(self):
        name = f"{self.prefix}{self.n}"
        self.n += 1
        return name


def _lift_styles(smm, mem):
    """(smem, theta) pairs relating the concrete memory to symbolic ones."""
    out = [smm.lift(mem, _Namer("g"), True)]
    out.append(smm.lift(mem, _Namer("h"), False))
    return out


def _arg_styles(case_args):
    """Ground and variable-shaped symbolic argument vectors."""
    ground = tuple(Lit(v) for v in case_args)
    lvars = tuple(LVar(f"a{i}") for i in range(len(case_args)))
    theta_l = {f"a{i}": v for i, v in enumerate(case_args)}
    return [(ground, {}), (lvars, theta_l)]


def _extensions(theta, new_lvars, domain):
    new_lvars = sorted(new_lvars)
    if not new_lvars:
        yield dict(theta)
        return
    for combo in itertools.product(domain, repeat=len(new_lvars)):
        yield {**theta, **dict(zip(new_lvars, combo))}


def _eval_vec(exprs, theta):
    vals = []
    for e in exprs:
        v = eval_lexpr(e, theta, {})
        if v is UNDEF:
            return None
        vals.append(v)
    return tuple(vals)


def _pc_true(pc, theta) -> bool:
    return all(eval_lexpr(c, theta, {}) is TRUE for c in pc)


def check_action_soundness(bundle: MemoryModelBundle, mode: str, bounds: Bounds, cap: int = 4000) -> CheckResult:
    assert mode in ("ox", "ux")
    cmm, smm = bundle.cmm, bundle.smm
    mems = _mems(cmm, bounds, cap=256)
    cases = list(cmm.action_cases(bounds))
    combos = _sample(
        [(i, c, s) for i in range(len(mems)) for c in range(len(cases)) for s in range(2)],
        cap,
        bounds.seed,
    )
    trials = 0
    for i, c, s in combos:
        mem = mems[i]
        name, args = cases[c]
        for smem, theta0 in _lift_styles(smm, mem):
            sym_args, theta_a = _arg_styles(args)[s]
            theta = {**theta0, **theta_a}
            trials += 1
            witness = _action_case(
                bundle, mode, bounds, mem, smem, theta, name, args, sym_args
            )
            if witness is not None:
                witness.update({"action": name, "args": [repr(a) for a in args], "mem": _fmt_mem(mem)})
                return CheckResult("action", mode, "fail", trials, witness)
    return CheckResult("action", mode, "pass", trials)


def _action_case(bundle, mode, bounds, mem, smem, theta, name, args, sym_args):
    cmm, smm = bundle.cmm, bundle.smm
    branches = smm.exec_action(smem, name, sym_args, _Namer("f"))
    known = smm.lvars(smem) | set(theta)
    domain = sorted(set(bounds.value_domain) | cmm.mem_values(mem) | set(args), key=value_key)
    wide = bounds.max_addresses + bounds.max_cells

    # side condition: miss/abort branches leave the memory unchanged
    for o, smem2, pc, outs in branches:
        if o in (MISS, ABORT) and smem2 != smem:
            return {"kind": "miss-changes-memory", "outcome": o.value}

    if mode == "ox":
        # vacuous when some abort branch is plausible under an extension
        for o, smem2, pc, outs in branches:
            if o is ABORT:
                for th in _extensions(theta, _branch_lvars(smm, smem2, pc, outs) - known, domain):
                    if _pc_true(pc, th) and _eval_vec(outs, th) is not None:
                        return None
        concrete = cmm.exec_action(mem, name, args, bounds.max_addresses)
        for o, mem2, outs_c in concrete:
            extra = sorted(set(mem2.keys()) - set(mem.keys())) if isinstance(mem2, dict) else []
            search_domain = sorted(
                set(domain) | cmm.mem_values(mem2) | set(outs_c) | set(extra), key=value_key
            )
            if not _ox_matched(smm, branches, theta, known, search_domain, o, mem2, outs_c):
                return {
                    "kind": "unmatched-concrete-step",
                    "outcome": o.value,
                    "returns": [repr(v) for v in outs_c],
                    "result-mem": _fmt_mem(mem2),
                }
        return None

    # UX: satisfiable symbolic steps must be concretely realisable
    for o, smem2, pc, outs in branches:
        if o is ABORT:
            continue
        new = _branch_lvars(smm, smem2, pc, outs) - known
        for th in _extensions(theta, new, domain):
            if not _pc_true(pc, th):
                continue
            mem2 = smm.concretize(th, smem2)
            if mem2 is None:
                continue
            outs_v = _eval_vec(outs, th)
            args_v = _eval_vec(sym_args, th)
            if outs_v is None or args_v is None or tuple(args_v) != tuple(args):
                continue
            mem0 = smm.concretize(th, smem)
            if mem0 is None:
                return {"kind": "no-initial-model", "outcome": o.value}
            results = cmm.exec_action(mem0, name, args_v, wide)
            if (o, mem2, outs_v) not in [(x, y, tuple(z)) for x, y, z in results]:
                return {
                    "kind": "unrealisable-symbolic-step",
                    "outcome": o.value,
                    "returns": [repr(v) for v in outs_v],
                    "result-mem": _fmt_mem(mem2),
                }
    return None


def _branch_lvars(smm, smem2, pc, outs):
    out = smm.lvars(smem2)
    for c in pc:
        out |= lv_expr(c)
    for e in outs:
        out |= lv_expr(e)
    return out


def _ox_matched(smm, branches, theta, known, domain, o, mem2, outs_c):
    for o2, smem2, pc, outs in branches:
        if o2 is not o or len(outs) != len(outs_c):
            continue
        new = _branch_lvars(smm, smem2, pc, outs) - known
        for th in _extensions(theta, new, domain):
            if not _pc_true(pc, th):
                continue
            if _eval_vec(outs, th) != tuple(outs_c):
                continue
            if smm.sat_mem(th, mem2, smem2):
                return True
    return False


# ---------------------------------------------------------------------------
# Consume / produce soundness
# ---------------------------------------------------------------------------


def _resource_cases(rm, bounds: Bounds):
    """(name, ins values, outs values) triples worth testing."""
    custom = getattr(rm, "resource_cases", None)
    if custom is not None:
        yield from custom(bounds)
        return
    slice_ = bounds.sorted_domain()[:4]
    for name, (n_in, n_out) in sorted(rm.arities.items()):
        ins_opts = list(itertools.product(slice_, repeat=n_in))[:16]
        outs_opts = list(itertools.product(slice_, repeat=n_out))[:8]
        for ins in ins_opts:
            for outs in outs_opts:
                yield name, ins, outs


def _resource_heaps(rm, cmm, bounds, name, ins, outs) -> list:
    return [m for m in _mems(cmm, bounds, cap=512) if rm.holds_resource(m, name, ins, outs)]


def _consume_branches(smm, mode, name, ins, smem, fanout: int):
    """Union of consume results over oracle first-choices."""
    seen = []
    for seed in range(max(fanout, 1)):
        for branch in smm.consume_res(mode, Oracle.constant(seed), name, ins, smem):
            if branch not in seen:
                seen.append(branch)
    return seen


def check_cp_soundness(bundle: MemoryModelBundle, mode: str, bounds: Bounds, cap: int = 2500) -> CheckResult:
    assert mode in ("ox", "ux")
    from .engine import Mode

    emode = Mode.OX if mode == "ox" else Mode.UX
    cmm, rm, smm = bundle.cmm, bundle.rm, bundle.smm
    mems = _mems(cmm, bounds, cap=128)
    cases = list(_resource_cases(rm, bounds))
    combos = _sample(
        [(i, c) for i in range(len(mems)) for c in range(len(cases))], cap, bounds.seed
    )
    trials = 0
    for i, c in combos:
        mem = mems[i]
        name, ins_v, outs_v = cases[c]
        for smem, theta0 in _lift_styles(smm, mem):
            trials += 1
            w = _cp_consume_case(bundle, emode, mode, bounds, mem, smem, theta0, name, ins_v)
            if w is None:
                w = _cp_produce_case(bundle, mode, bounds, mem, smem, theta0, name, ins_v, outs_v)
            if w is not None:
                w.update({"resource": name, "ins": [repr(v) for v in ins_v], "mem": _fmt_mem(mem)})
                return CheckResult("cp", mode, "fail", trials, w)
    return CheckResult("cp", mode, "pass", trials)


def _cp_consume_case(bundle, emode, mode, bounds, mem, smem, theta, name, ins_v):
    cmm, rm, smm = bundle.cmm, bundle.rm, bundle.smm
    ins = tuple(Lit(v) for v in ins_v)
    fanout = (len(mem) if isinstance(mem, dict) else 4) + 1
    branches = _consume_branches(smm, emode, name, ins, smem, fanout)
    known = smm.lvars(smem) | set(theta)
    domain = sorted(set(bounds.value_domain) | cmm.mem_values(mem) | set(ins_v), key=value_key)

    if mode == "ux":
        for o, _, outs, (smem_f, checks, pc) in branches:
            if o is not OK:
                continue
            new = _branch_lvars(smm, smem_f, tuple(checks) + tuple(pc), outs) - known
            for th in _extensions(theta, new, domain):
                outs_th = _eval_vec(outs, th)
                if outs_th is None or not _pc_true(pc, th):
                    continue
                mem_f = smm.concretize(th, smem_f)
                if mem_f is None:
                    continue
                for mem_r in _resource_heaps(rm, cmm, bounds, name, ins_v, outs_th):
                    whole = cmm.compose(mem_r, mem_f)
                    if whole is None:
                        continue
                    if not _pc_true(checks, th) or not smm.sat_mem(th, whole, smem):
                        return {
                            "kind": "consume-ux",
                            "outs": [repr(v) for v in outs_th],
                            "frame": _fmt_mem(mem_f),
                            "res-heap": _fmt_mem(mem_r),
                        }
        return None

    # OX: some consume branch must cover the model
    if not smm.sat_mem(theta, mem, smem):
        return None
    plausible_abort = False
    for o, _, outs, (smem_f, checks, pc) in branches:
        if o is ABORT and _pc_true(checks, theta):
            new = _branch_lvars(smm, smem_f, tuple(pc), outs) - known
            for th in _extensions(theta, new, domain):
                if _pc_true(pc, th) and smm.concretize(th, smem_f) is not None:
                    plausible_abort = True
                    break
        if plausible_abort:
            break
    if plausible_abort:
        return None
    covered = False
    for o, _, outs, (smem_f, checks, pc) in branches:
        if o is not OK:
            continue
        if not _pc_true(checks, theta):
            covered = True  # implication vacuous for this branch
            break
        outs_th = _eval_vec(outs, theta)
        if outs_th is None or not _pc_true(pc, theta):
            continue
        mem_f = smm.concretize(theta, smem_f)
        if mem_f is None:
            continue
        for mem_r, mem_f2 in cmm.enumerate_splits(mem):
            if mem_f2 == mem_f and rm.holds_resource(mem_r, name, ins_v, outs_th):
                covered = True
                break
        if covered:
            break
    if not covered and any(o is OK or o is ABORT for o, *_ in branches):
        # only a failure when the resource is actually present in mem
        for mem_r, mem_f in cmm.enumerate_splits(mem):
            outs_any = _outs_present(rm, name, ins_v, mem_r, bounds)
            if outs_any is not None:
                return {"kind": "consume-ox-uncovered", "outs": [repr(v) for v in outs_any]}
    return None


def _outs_present(rm, name, ins_v, mem_r, bounds):
    from .memmodel import FREED
    from .values import is_value

    n_out = rm.arities[name][1]
    vals = set(bounds.sorted_domain())
    if isinstance(mem_r, dict):
        vals.update(v for v in mem_r.values() if v is not FREED and is_value(v))
    for outs in itertools.product(sorted(vals, key=value_key), repeat=n_out):
        if rm.holds_resource(mem_r, name, ins_v, outs):
            return outs
    return None


def _cp_produce_case(bundle, mode, bounds, mem_f, smem_f, theta, name, ins_v, outs_v):
    cmm, rm, smm = bundle.cmm, bundle.rm, bundle.smm
    ins = tuple(Lit(v) for v in ins_v)
    outs = tuple(Lit(v) for v in outs_v)
    results = smm.produce_res(name, ins, outs, smem_f)
    if mode == "ox":
        if not smm.sat_mem(theta, mem_f, smem_f):
            return None
        for mem_r in _resource_heaps(rm, cmm, bounds, name, ins_v, outs_v):
            whole = cmm.compose(mem_r, mem_f)
            if whole is None:
                continue
            hit = False
            for smem2, pc in results:
                if _pc_true(pc, theta) and smm.sat_mem(theta, whole, smem2):
                    hit = True
                    break
            if not hit:
                return {"kind": "produce-ox-uncovered", "res-heap": _fmt_mem(mem_r), "outs": [repr(v) for v in outs_v]}
        return None
    # UX: every produced state's models split into resource + frame models
    for smem2, pc in results:
        if not _pc_true(pc, theta):
            continue
        whole = smm.concretize(theta, smem2)
        if whole is None:
            continue
        found = False
        for mem_r, mem_f2 in cmm.enumerate_splits(whole):
            if rm.holds_resource(mem_r, name, ins_v, outs_v) and smm.sat_mem(theta, mem_f2, smem_f):
                found = True
                break
        if not found:
            return {"kind": "produce-ux-unsplit", "result-mem": _fmt_mem(whole), "outs": [repr(v) for v in outs_v]}
    return None


# ---------------------------------------------------------------------------
# Full-suite driver
# ---------------------------------------------------------------------------

ALL_CHECKS = ("pcm", "frame", "action", "cp")


def run_conformance(bundle: MemoryModelBundle, bounds: Bounds, checks=ALL_CHECKS, modes=("ox", "ux")) -> list:
    results = []
    for check in checks:
        if check == "pcm":
            r = check_pcm_laws(bundle.cmm, bounds)
            for mode in modes:
                results.append(CheckResult("pcm", mode, r.verdict, r.trials, r.witness))
            continue
        for mode in modes:
            if check == "frame":
                results.append(check_frame(bundle.cmm, mode, bounds))
            elif check == "action":
                results.append(check_action_soundness(bundle, mode, bounds))
            elif check == "cp":
                results.append(check_cp_soundness(bundle, mode, bounds))
    return results
