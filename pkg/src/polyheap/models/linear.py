"""Linear heap models: finite maps from addresses to values.

Four variants of the same carrier, differing in negative-information
tracking and in how multiple matches branch:

  exact   - freed markers kept, consume branches over every match
  unique  - freed markers kept, consume applicable only when the match is
            entailed by the consuming state
  cut     - an oracle picks a single match; sound for bug-finding only
  noneg   - no freed markers (free deletes the cell); sound for
            verification only, and free to drop information
"""

from __future__ import annotations

import itertools

from ..assertions import Res
from ..memmodel import (
    Bounds,
    ConcreteMemoryModel,
    FREED,
    MemoryModelBundle,
    ResourceModel,
    Soundness,
    SymbolicMemoryModel,
    UnknownActionError,
)
from ..outcomes import ABORT, ERR, MISS, OK
from ..syntax import InType, InVal, LVar, Lit, NIL_E, Not, eq, format_expr, lv_expr, not_in
from ..values import NIL, UNDEF, is_nat, is_value
from ..evaluation import eval_lexpr


_MISSING = Lit("MissingCell")
_UAF = Lit("UseAfterFree")
_TYPE = Lit("Type")


def _skey(e):
    return format_expr(e)


def fresh_addresses(mem: dict, count: int):
    out = []
    n = 0
    while len(out) < count:
        if n not in mem:
            out.append(n)
        n += 1
    return out


class LinearConcrete(ConcreteMemoryModel):
    actions = ("lookup", "mutate", "new", "free")

    def __init__(self, track_freed: bool = True):
        self.track_freed = track_freed

    @property
    def empty(self):
        return {}

    def is_wf(self, mem) -> bool:
        if not isinstance(mem, dict):
            return False
        for k, v in mem.items():
            if not is_nat(k):
                return False
            if v is FREED:
                if not self.track_freed:
                    return False
            elif not is_value(v):
                return False
        return True

    def compose(self, a, b):
        if a.keys() & b.keys():
            return None
        return {**a, **b}

    def exec_action(self, mem, name, args, max_addresses):
        if name == "lookup":
            (addr,) = args
            return self._match(mem, addr, lambda v: [(OK, mem, (v,))])
        if name == "mutate":
            addr, val = args
            return self._match(mem, addr, lambda v: [(OK, {**mem, addr: val}, ())])
        if name == "new":
            if args:
                raise ValueError("new takes no arguments")
            return [
                (OK, {**mem, n: NIL}, (n,))
                for n in fresh_addresses(mem, max_addresses)
            ]
        if name == "free":
            (addr,) = args

            def freed(v):
                if self.track_freed:
                    return [(OK, {**mem, addr: FREED}, ())]
                out = dict(mem)
                del out[addr]
                return [(OK, out, ())]

            return self._match(mem, addr, freed)
        raise UnknownActionError(name)

    def _match(self, mem, addr, on_value):
        if not is_nat(addr):
            return [(ERR, mem, ("Type",))]
        if addr not in mem:
            return [(MISS, mem, ("MissingCell", addr))]
        v = mem[addr]
        if v is FREED:
            return [(ERR, mem, ("UseAfterFree", addr))]
        return on_value(v)

    def enumerate_splits(self, mem):
        keys = sorted(mem)
        for r in range(len(keys) + 1):
            for left in itertools.combinations(keys, r):
                l = set(left)
                yield (
                    {k: mem[k] for k in keys if k in l},
                    {k: mem[k] for k in keys if k not in l},
                )

    def generator(self, bounds: Bounds):
        states = list(bounds.sorted_domain())
        if self.track_freed:
            states.append(FREED)
        addrs = range(bounds.max_addresses)
        for size in range(min(bounds.max_cells, bounds.max_addresses) + 1):
            for keys in itertools.combinations(addrs, size):
                for vals in itertools.product(states, repeat=size):
                    yield dict(zip(keys, vals))

    def action_cases(self, bounds: Bounds):
        addrs = list(range(bounds.max_addresses + 1))
        vals = bounds.sorted_domain()[:3]
        junk = next((v for v in bounds.sorted_domain() if not is_nat(v)), "x")
        cases = [("new", ())]
        for a in addrs:
            cases.append(("lookup", (a,)))
            cases.append(("free", (a,)))
            for v in vals:
                cases.append(("mutate", (a, v)))
        cases.append(("lookup", (junk,)))
        cases.append(("mutate", (junk, 0)))
        cases.append(("free", (junk,)))
        return cases

    def mem_values(self, mem):
        out = set()
        for k, v in mem.items():
            out.add(k)
            if v is not FREED:
                out.add(v)
        return out


class LinearResources(ResourceModel):
    def __init__(self, track_freed: bool = True):
        self.track_freed = track_freed
        self.arities = {"cell": (1, 1)}
        if track_freed:
            self.arities["freed"] = (1, 0)

    def holds_resource(self, mem, name, ins, outs) -> bool:
        if name == "cell":
            (addr,), (val,) = ins, outs
            return is_nat(addr) and mem == {addr: val}
        if name == "freed" and self.track_freed:
            (addr,) = ins
            return is_nat(addr) and mem == {addr: FREED}
        return False


class LinearSymbolic(SymbolicMemoryModel):
    def __init__(self, variant: str = "exact"):
        assert variant in ("exact", "unique", "cut", "noneg")
        self.variant = variant
        self.track_freed = variant != "noneg"
        # noneg mirrors the traditional verification-only model: it drops
        # the evaluation information of overwritten cells
        self.keep_info = variant != "noneg"

    @property
    def empty(self):
        return {}

    def lvars(self, smem) -> frozenset:
        out = frozenset()
        for k, v in smem.items():
            out |= lv_expr(k)
            if v is not FREED:
                out |= lv_expr(v)
        return out

    def concretize(self, theta, smem):
        out = {}
        for k, v in smem.items():
            addr = eval_lexpr(k, theta, {})
            if not is_nat(addr) or addr in out:
                return None
            if v is FREED:
                out[addr] = FREED
            else:
                val = eval_lexpr(v, theta, {})
                if val is UNDEF:
                    return None
                out[addr] = val
        return out

    def _entries(self, smem):
        return sorted(smem.items(), key=lambda kv: _skey(kv[0]))

    def exec_action(self, smem, name, args, fresh):
        if name == "lookup":
            (e,) = args
            return self._matching(
                smem, e, lambda k, v: (OK, smem, (eq(e, k),), (v,))
            )
        if name == "mutate":
            e, val = args

            def hit(k, v):
                pc = [eq(e, k)]
                if self.keep_info:
                    pc.append(InVal(v))
                return (OK, {**smem, k: val}, tuple(pc), ())

            return self._matching(smem, e, hit)
        if name == "new":
            if args:
                raise ValueError("new takes no arguments")
            x = LVar(fresh())
            return [(OK, {**smem, x: NIL_E}, (InVal(x),), (x,))]
        if name == "free":
            (e,) = args

            def hit(k, v):
                pc = [eq(e, k)]
                if self.keep_info:
                    pc.append(InVal(v))
                if self.track_freed:
                    mem = {**smem, k: FREED}
                else:
                    mem = {k2: v2 for k2, v2 in smem.items() if k2 != k}
                return (OK, mem, tuple(pc), ())

            return self._matching(smem, e, hit)
        raise UnknownActionError(name)

    def _matching(self, smem, e, on_value):
        hits, uafs = [], []
        for k, v in self._entries(smem):
            if v is FREED:
                uafs.append((ERR, smem, (eq(e, k),), (_UAF, e)))
            else:
                hits.append(on_value(k, v))
        if self.variant == "cut":
            hits = hits[:1]
            uafs = uafs[:1]
        branches = hits + uafs
        branches.append(
            (
                MISS,
                smem,
                tuple([InType(e, "nat")] + not_in(e, sorted(smem, key=_skey))),
                (_MISSING, e),
            )
        )
        branches.append((ERR, smem, (Not(InType(e, "nat")),), (_TYPE,)))
        return branches

    # consume / produce -------------------------------------------------------

    def consume_res(self, mode, oracle, name, ins, smem):
        if name not in ("cell", "freed") or (name == "freed" and not self.track_freed):
            return [(ABORT, oracle, (), (smem, (), ()))]
        want_freed = name == "freed"
        if len(ins) != 1:
            return [(ABORT, oracle, (), (smem, (), ()))]
        (e,) = ins
        matches = [
            (k, v) for k, v in self._entries(smem) if (v is FREED) == want_freed
        ]
        wrong = [(k, v) for k, v in self._entries(smem) if (v is FREED) != want_freed]
        out = []
        if self.variant == "cut":
            if matches:
                (k, v), oracle2 = oracle.pick(matches)
                frame = {k2: v2 for k2, v2 in smem.items() if k2 != k}
                outs = () if want_freed else (v,)
                out.append((OK, oracle2, outs, (frame, (), (eq(e, k),))))
        else:
            check = self.variant == "unique"
            for k, v in matches:
                frame = {k2: v2 for k2, v2 in smem.items() if k2 != k}
                outs = () if want_freed else (v,)
                cond = (eq(e, k),)
                out.append((OK, oracle, outs, (frame, cond if check else (), cond)))
        for k, v in wrong:
            out.append((ABORT, oracle, (), (smem, (), (eq(e, k),))))
        out.append(
            (
                ABORT,
                oracle,
                (_MISSING, e),
                (smem, (), tuple(not_in(e, sorted(smem, key=_skey)))),
            )
        )
        return out

    def produce_res(self, name, ins, outs, smem):
        if name == "cell" and len(ins) == 1 and len(outs) == 1:
            (e,) = ins
            if e in smem:
                return []
            return [({**smem, e: outs[0]}, ())]
        if name == "freed" and self.track_freed and len(ins) == 1 and not outs:
            (e,) = ins
            if e in smem:
                return []
            return [({**smem, e: FREED}, ())]
        return []

    def mem_to_assertion(self, smem) -> list:
        parts = []
        for k, v in self._entries(smem):
            if v is FREED:
                parts.append(Res("freed", (k,), ()))
            else:
                parts.append(Res("cell", (k,), (v,)))
        return parts

    def lift(self, mem, fresh, ground: bool):
        smem, theta = {}, {}
        for a in sorted(mem):
            v = mem[a]
            if ground:
                key = Lit(a)
                payload = FREED if v is FREED else Lit(v)
            else:
                ka = fresh()
                theta[ka] = a
                key = LVar(ka)
                if v is FREED:
                    payload = FREED
                else:
                    kv = fresh()
                    theta[kv] = v
                    payload = LVar(kv)
            smem[key] = payload
        return smem, theta

    def fixes(self, payload, state, fresh):
        if len(payload) == 2 and payload[0] == _MISSING:
            return [Res("cell", (payload[1],), (LVar(fresh()),))]
        return []


def instantiate_linear(variant: str = "exact") -> MemoryModelBundle:
    names = {
        "exact": "linear",
        "unique": "linear-unique",
        "cut": "linear-cut",
        "noneg": "linear-ox",
    }
    if variant not in names:
        raise ValueError(f"unknown linear variant {variant!r}")
    track = variant != "noneg"
    sound = {
        "exact": Soundness(ox=True, ux=True),
        "unique": Soundness(ox=True, ux=True),
        "cut": Soundness(ox=False, ux=True),
        "noneg": Soundness(ox=True, ux=False),
    }[variant]
    smm = LinearSymbolic(variant)
    if variant == "noneg":
        smm.fixes = None
    return MemoryModelBundle(
        name=names[variant],
        cmm=LinearConcrete(track),
        rm=LinearResources(track),
        smm=smm,
        declared_soundness=sound,
    )
