"""Object heap for dynamic languages: objects map string fields to values.

Reading a field that was never set (or was deleted) yields nil, mirroring
how dynamic languages evaluate absent properties. To keep the frame
properties, unset/deleted fields are marked rather than removed, and an
optional domain set records which fields may be set at all: absence from
the domain set is positive knowledge that a field is unset.

Resources: field(o, f; v), unset(o, f;), domain(o, fields-list;).
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
from ..syntax import Bin, InType, InVal, LVar, Lit, LstE, NIL_E, Not, eq, format_expr, lv_expr, not_in
from ..values import NIL, UNDEF, is_nat, is_string, is_value
from ..evaluation import eval_lexpr
from .linear import fresh_addresses


def _skey(e):
    return format_expr(e)


def _fields_ok(fields: dict, dom) -> bool:
    if dom is None:
        return True
    return set(fields) <= dom


def _entry_nonempty(fields, dom) -> bool:
    return bool(fields) or dom is not None


class ObjectConcrete(ConcreteMemoryModel):
    actions = ("newObj", "lookup", "mutate", "deleteField")

    @property
    def empty(self):
        return {}

    def is_wf(self, mem) -> bool:
        if not isinstance(mem, dict):
            return False
        for o, entry in mem.items():
            if not is_nat(o) or not isinstance(entry, tuple):
                return False
            fields, dom = entry
            for f, v in fields.items():
                if not is_string(f):
                    return False
                if v is not FREED and not is_value(v):
                    return False
            if dom is not None and not (
                isinstance(dom, frozenset) and all(is_string(f) for f in dom)
            ):
                return False
            if not (_fields_ok(fields, dom) and _entry_nonempty(fields, dom)):
                return False
        return True

    def compose(self, a, b):
        out = dict(a)
        for o, entry in b.items():
            if o not in out:
                out[o] = entry
                continue
            (f1, d1), (f2, d2) = out[o], entry
            if f1.keys() & f2.keys():
                return None
            if d1 is not None and d2 is not None:
                return None
            dom = d1 if d1 is not None else d2
            if not (_fields_ok(f1, d2) and _fields_ok(f2, d1)):
                return None
            out[o] = ({**f1, **f2}, dom)
        return out

    def exec_action(self, mem, name, args, max_addresses):
        if name == "newObj":
            if args:
                raise ValueError("newObj takes no arguments")
            return [
                (OK, {**mem, o: ({}, frozenset())}, (o,))
                for o in fresh_addresses(mem, max_addresses)
            ]
        if name == "lookup":
            o, f = args
            return self._with_field(mem, o, f, self._read)
        if name == "mutate":
            o, f, v = args
            return self._with_field(mem, o, f, lambda *a: self._write(v, *a))
        if name == "deleteField":
            o, f = args
            return self._with_field(mem, o, f, self._delete)
        raise UnknownActionError(name)

    def _with_field(self, mem, o, f, k):
        if not is_nat(o):
            return [(ERR, mem, ("Type",))]
        if not is_string(f):
            return [(ERR, mem, ("Type",))]
        if o not in mem:
            return [(MISS, mem, ("MissingObject", o))]
        fields, dom = mem[o]
        return k(mem, o, f, fields, dom)

    def _read(self, mem, o, f, fields, dom):
        if f in fields:
            v = fields[f]
            return [(OK, mem, (NIL if v is FREED else v,))]
        if dom is not None and f not in dom:
            return [(OK, mem, (NIL,))]
        return [(MISS, mem, ("MissingField", o, f))]

    def _write(self, v, mem, o, f, fields, dom):
        if f in fields:
            return [(OK, {**mem, o: ({**fields, f: v}, dom)}, ())]
        if dom is not None and f not in dom:
            return [(OK, {**mem, o: ({**fields, f: v}, dom | {f})}, ())]
        return [(MISS, mem, ("MissingField", o, f))]

    def _delete(self, mem, o, f, fields, dom):
        if f in fields:
            return [(OK, {**mem, o: ({**fields, f: FREED}, dom)}, ())]
        if dom is not None and f not in dom:
            return [(OK, {**mem, o: ({**fields, f: FREED}, dom | {f})}, ())]
        return [(MISS, mem, ("MissingField", o, f))]

    def enumerate_splits(self, mem):
        ids = sorted(mem)
        per_obj = []
        for o in ids:
            fields, dom = mem[o]
            names = sorted(fields)
            opts = []
            for r in range(len(names) + 1):
                for left in itertools.combinations(names, r):
                    lset = set(left)
                    f1 = {f: fields[f] for f in names if f in lset}
                    f2 = {f: fields[f] for f in names if f not in lset}
                    dom_opts = ((dom, None), (None, dom)) if dom is not None else ((None, None),)
                    for d1, d2 in dom_opts:
                        lhs = (f1, d1) if _entry_nonempty(f1, d1) else None
                        rhs = (f2, d2) if _entry_nonempty(f2, d2) else None
                        if (f1 or d1 is not None) or lhs is None:
                            opts.append((lhs, rhs))
            per_obj.append((o, opts))
        for combo in itertools.product(*(opts for _, opts in per_obj)):
            left, right = {}, {}
            ok = True
            for (o, _), (lhs, rhs) in zip(per_obj, combo):
                fields, _ = mem[o]
                l_n = len(lhs[0]) if lhs else 0
                r_n = len(rhs[0]) if rhs else 0
                if l_n + r_n != len(fields):
                    ok = False
                    break
                if lhs is not None:
                    left[o] = lhs
                if rhs is not None:
                    right[o] = rhs
            if ok:
                yield left, right

    def generator(self, bounds: Bounds):
        vals = bounds.sorted_domain()[:2]
        names = ("f", "g")
        field_maps = [{}]
        for f in names:
            field_maps.extend({f: v} for v in list(vals) + [FREED])
        for v1 in list(vals) + [FREED]:
            field_maps.append({"f": v1, "g": vals[0]})
        entries = []
        for fields in field_maps:
            for dom in (None, frozenset(), frozenset({"f"}), frozenset(names)):
                if _fields_ok(fields, dom) and _entry_nonempty(fields, dom):
                    entries.append((fields, dom))
        ids = range(min(bounds.max_addresses, 2))
        for size in range(min(bounds.max_cells, len(ids)) + 1):
            for keys in itertools.combinations(ids, size):
                for es in itertools.product(entries, repeat=size):
                    if sum(max(len(e[0]), 1) for e in es) <= bounds.max_cells:
                        yield dict(zip(keys, es))

    def action_cases(self, bounds: Bounds):
        vals = bounds.sorted_domain()[:2]
        cases = [("newObj", ())]
        for o in range(min(bounds.max_addresses, 2) + 1):
            for f in ("f", "g", "h"):
                cases.append(("lookup", (o, f)))
                cases.append(("deleteField", (o, f)))
                for v in vals:
                    cases.append(("mutate", (o, f, v)))
        cases.append(("lookup", ("x", "f")))
        cases.append(("lookup", (0, 1)))
        return cases

    def mem_values(self, mem):
        out = set()
        for o, (fields, dom) in mem.items():
            out.add(o)
            for f, v in fields.items():
                out.add(f)
                if v is not FREED:
                    out.add(v)
            if dom:
                out.update(dom)
        return out


class ObjectResources(ResourceModel):
    arities = {"field": (2, 1), "unset": (2, 0), "domain": (2, 0)}

    def holds_resource(self, mem, name, ins, outs) -> bool:
        if name == "field":
            (o, f), (v,) = ins, outs
            return is_nat(o) and is_string(f) and mem == {o: ({f: v}, None)}
        if name == "unset":
            (o, f) = ins
            return is_nat(o) and is_string(f) and mem == {o: ({f: FREED}, None)}
        if name == "domain":
            (o, d) = ins
            if not (is_nat(o) and isinstance(d, tuple) and all(is_string(f) for f in d)):
                return False
            if len(set(d)) != len(d) or tuple(sorted(d)) != d:
                return False
            return mem == {o: ({}, frozenset(d))}
        return False

    def resource_cases(self, bounds: Bounds):
        vals = bounds.sorted_domain()[:2]
        for o in (0, 1):
            for f in ("f", "g"):
                for v in vals:
                    yield "field", (o, f), (v,)
                yield "unset", (o, f), ()
            for d in ((), ("f",), ("f", "g")):
                yield "domain", (o, d), ()


class ObjectSymbolic(SymbolicMemoryModel):
    @property
    def empty(self):
        return {}

    def lvars(self, smem) -> frozenset:
        out = frozenset()
        for k, (fields, dom) in smem.items():
            out |= lv_expr(k)
            for f, v in fields.items():
                out |= lv_expr(f)
                if v is not FREED:
                    out |= lv_expr(v)
            if dom is not None:
                for e in dom:
                    out |= lv_expr(e)
        return out

    def concretize(self, theta, smem):
        # strictly disjoint denotation, mirroring the linear model
        acc = {}
        for k, (fields, dom) in sorted(smem.items(), key=lambda kv: _skey(kv[0])):
            o = eval_lexpr(k, theta, {})
            if not is_nat(o) or o in acc:
                return None
            fs = {}
            for fe, ve in fields.items():
                f = eval_lexpr(fe, theta, {})
                if not is_string(f) or f in fs:
                    return None
                if ve is FREED:
                    fs[f] = FREED
                else:
                    v = eval_lexpr(ve, theta, {})
                    if v is UNDEF:
                        return None
                    fs[f] = v
            d = None
            if dom is not None:
                d = set()
                for e in dom:
                    f = eval_lexpr(e, theta, {})
                    if not is_string(f):
                        return None
                    d.add(f)
                d = frozenset(d)
            if not (_fields_ok(fs, d) and _entry_nonempty(fs, d)):
                return None
            acc[o] = (fs, d)
        return acc

    def _entries(self, smem):
        return sorted(smem.items(), key=lambda kv: _skey(kv[0]))

    def exec_action(self, smem, name, args, fresh):
        if name == "newObj":
            x = LVar(fresh())
            return [(OK, {**smem, x: ({}, frozenset())}, (InVal(x),), (x,))]
        if name == "lookup":
            eo, ef = args
            return self._field_action(smem, eo, ef, self._sym_read)
        if name == "mutate":
            eo, ef, ev = args
            return self._field_action(smem, eo, ef, lambda *a: self._sym_write(ev, *a))
        if name == "deleteField":
            eo, ef = args
            return self._field_action(smem, eo, ef, self._sym_delete)
        raise UnknownActionError(name)

    def _field_action(self, smem, eo, ef, hit):
        out = []
        for k, (fields, dom) in self._entries(smem):
            names = sorted(fields, key=_skey)
            for fe in names:
                out.extend(hit(smem, k, (eq(eo, k), eq(ef, fe)), fe, fields, dom, ef))
            # provably-unset: outside the domain set
            base = [eq(eo, k), InType(ef, "str")] + not_in(ef, names)
            if dom is not None:
                unknown = sorted(set(dom) - set(names), key=_skey)
                pc_unset = base + not_in(ef, sorted(dom, key=_skey))
                out.extend(hit(smem, k, tuple(pc_unset), None, fields, dom, ef))
                if unknown:
                    one_of = None
                    for e in unknown:
                        t = eq(ef, e)
                        one_of = t if one_of is None else Bin("or", one_of, t)
                    out.append(
                        (MISS, smem, tuple(base + [one_of]), (Lit("MissingField"), eo, ef))
                    )
            else:
                out.append((MISS, smem, tuple(base), (Lit("MissingField"), eo, ef)))
        out.append(
            (
                MISS,
                smem,
                tuple(
                    [InType(eo, "nat"), InType(ef, "str")]
                    + not_in(eo, sorted(smem, key=_skey))
                ),
                (Lit("MissingObject"), eo),
            )
        )
        out.append((ERR, smem, (Not(InType(eo, "nat")),), (Lit("Type"),)))
        out.append((ERR, smem, (InType(eo, "nat"), Not(InType(ef, "str"))), (Lit("Type"),)))
        return out

    def _sym_read(self, smem, k, pc, fe, fields, dom, ef):
        if fe is None:
            return [(OK, smem, pc, (NIL_E,))]
        v = fields[fe]
        if v is FREED:
            return [(OK, smem, pc, (NIL_E,))]
        return [(OK, smem, pc, (v,))]

    def _sym_write(self, ev, smem, k, pc, fe, fields, dom, ef):
        if fe is None:
            # provably unset: set the queried field, extending the domain
            smem2 = {**smem, k: ({**fields, ef: ev}, dom | {ef})}
            return [(OK, smem2, pc, ())]
        old = fields[fe]
        guards = (InVal(old),) if old is not FREED else ()
        smem2 = {**smem, k: ({**fields, fe: ev}, dom)}
        return [(OK, smem2, pc + guards, ())]

    def _sym_delete(self, smem, k, pc, fe, fields, dom, ef):
        if fe is None:
            smem2 = {**smem, k: ({**fields, ef: FREED}, dom | {ef})}
            return [(OK, smem2, pc, ())]
        smem2 = {**smem, k: ({**fields, fe: FREED}, dom)}
        return [(OK, smem2, pc, ())]

    # consume / produce --------------------------------------------------------

    def consume_res(self, mode, oracle, name, ins, smem):
        if name == "field" and len(ins) == 2:
            return self._consume_field(oracle, ins, smem, want_unset=False)
        if name == "unset" and len(ins) == 2:
            return self._consume_field(oracle, ins, smem, want_unset=True)
        if name == "domain" and len(ins) == 2:
            return self._consume_domain(oracle, ins, smem)
        return [(ABORT, oracle, (), (smem, (), ()))]

    def _consume_field(self, oracle, ins, smem, want_unset):
        eo, ef = ins
        out = []
        for k, (fields, dom) in self._entries(smem):
            names = sorted(fields, key=_skey)
            for fe in names:
                v = fields[fe]
                if (v is FREED) != want_unset:
                    out.append((ABORT, oracle, (), (smem, (), (eq(eo, k), eq(ef, fe)))))
                    continue
                singleton = len(fields) == 1 and dom is None
                if singleton:
                    frame = {k2: e2 for k2, e2 in smem.items() if k2 != k}
                    pc = [eq(eo, k), eq(ef, fe)] + not_in(k, sorted(frame, key=_skey))
                else:
                    f2 = {g: w for g, w in fields.items() if g != fe}
                    frame = {**smem, k: (f2, dom)}
                    pc = [eq(eo, k), eq(ef, fe)]
                outs = () if want_unset else (v,)
                out.append((OK, oracle, outs, (frame, (), tuple(pc))))
            out.append(
                (
                    ABORT,
                    oracle,
                    (Lit("MissingField"), eo, ef),
                    (smem, (), tuple([eq(eo, k)] + not_in(ef, names))),
                )
            )
        out.append(
            (
                ABORT,
                oracle,
                (Lit("MissingObject"), eo),
                (smem, (), tuple(not_in(eo, sorted(smem, key=_skey)))),
            )
        )
        return out

    def _consume_domain(self, oracle, ins, smem):
        eo, elist = ins
        want = _ground_string_set(elist)
        out = []
        for k, (fields, dom) in self._entries(smem):
            if dom is None:
                continue
            have = _ground_string_set_exprs(dom)
            if want is None or have is None or want != have:
                out.append((ABORT, oracle, (), (smem, (), (eq(eo, k),))))
                continue
            if fields:
                frame = {**smem, k: (fields, None)}
                pc = [eq(eo, k)]
            else:
                frame = {k2: e2 for k2, e2 in smem.items() if k2 != k}
                # a bare domain entry composes with field-only frames
                pc = [eq(eo, k)] + not_in(k, sorted(frame, key=_skey))
            out.append((OK, oracle, (), (frame, (), tuple(pc))))
        out.append(
            (
                ABORT,
                oracle,
                (Lit("MissingDomain"), eo),
                (smem, (), tuple(not_in(eo, sorted(smem, key=_skey)))),
            )
        )
        return out

    def produce_res(self, name, ins, outs, smem):
        if name == "field" and len(ins) == 2 and len(outs) == 1:
            return self._produce_field(ins, outs[0], smem)
        if name == "unset" and len(ins) == 2 and not outs:
            return self._produce_field(ins, FREED, smem)
        if name == "domain" and len(ins) == 2 and not outs:
            eo, elist = ins
            items = _list_items(elist)
            if items is None:
                return []
            results = []
            if eo not in smem:
                results.append(({**smem, eo: ({}, frozenset(items))}, ()))
            for k, (fields, dom) in self._entries(smem):
                if dom is not None:
                    continue
                # satisfaction rejects models whose fields escape the domain
                results.append(({**smem, k: (fields, frozenset(items))}, (eq(eo, k),)))
            return results
        return []

    def _produce_field(self, ins, payload, smem):
        eo, ef = ins
        results = []
        if eo not in smem:
            results.append(({**smem, eo: ({ef: payload}, None)}, ()))
        for k, (fields, dom) in self._entries(smem):
            if ef in fields:
                continue
            if dom is not None:
                # produced fields must be covered by the domain knowledge
                covered = [e for e in sorted(dom, key=_skey)]
                if not covered:
                    continue
                one_of = None
                for e in covered:
                    t = eq(ef, e)
                    one_of = t if one_of is None else Bin("or", one_of, t)
                pc = (eq(eo, k), one_of)
            else:
                pc = (eq(eo, k),)
            results.append(({**smem, k: ({**fields, ef: payload}, dom)}, pc))
        return results

    def mem_to_assertion(self, smem) -> list:
        parts = []
        for k, (fields, dom) in self._entries(smem):
            for fe in sorted(fields, key=_skey):
                v = fields[fe]
                if v is FREED:
                    parts.append(Res("unset", (k, fe), ()))
                else:
                    parts.append(Res("field", (k, fe), (v,)))
            if dom is not None:
                items = tuple(sorted(dom, key=_skey))
                parts.append(Res("domain", (k, LstE(items)), ()))
        return parts

    def lift(self, mem, fresh, ground: bool):
        smem, theta = {}, {}
        for o in sorted(mem):
            fields, dom = mem[o]
            if ground:
                key = Lit(o)
            else:
                ko = fresh()
                theta[ko] = o
                key = LVar(ko)
            fs = {}
            for f in sorted(fields):
                v = fields[f]
                if ground or v is FREED:
                    fs[Lit(f)] = FREED if v is FREED else Lit(v)
                else:
                    kv = fresh()
                    theta[kv] = v
                    fs[Lit(f)] = LVar(kv)
            d = None
            if dom is not None:
                d = frozenset(Lit(f) for f in sorted(dom))
            smem[key] = (fs, d)
        return smem, theta

    def fixes(self, payload, state, fresh):
        tag = payload[0] if payload else None
        if tag == Lit("MissingObject") and len(payload) == 2:
            return [Res("field", (payload[1], LVar(fresh())), (LVar(fresh()),))]
        if tag == Lit("MissingField") and len(payload) == 3:
            return [Res("field", (payload[1], payload[2]), (LVar(fresh()),))]
        return []


def _ground_string_set(elist):
    items = _list_items(elist)
    if items is None:
        return None
    out = set()
    for e in items:
        if not (isinstance(e, Lit) and is_string(e.value)):
            return None
        out.add(e.value)
    return out


def _ground_string_set_exprs(dom):
    out = set()
    for e in dom:
        if not (isinstance(e, Lit) and is_string(e.value)):
            return None
        out.add(e.value)
    return out


def _list_items(elist):
    if isinstance(elist, LstE):
        return elist.items
    if isinstance(elist, Lit) and isinstance(elist.value, tuple):
        return tuple(Lit(v) for v in elist.value)
    return None


def instantiate_objects() -> MemoryModelBundle:
    return MemoryModelBundle(
        name="objects",
        cmm=ObjectConcrete(),
        rm=ObjectResources(),
        smm=ObjectSymbolic(),
        declared_soundness=Soundness(ox=True, ux=True),
    )
