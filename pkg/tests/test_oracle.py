from hypothesis import given, strategies as st

from polyheap.oracle import Oracle


@given(st.lists(st.integers(0, 9), max_size=6), st.integers(0, 4), st.integers(0, 4))
def test_shift_law(prefix, k, n):
    o = Oracle(tuple(prefix), default=7)
    assert o.shift(k).query(n) == o.query(n + k)


def test_pick_is_deterministic_and_shifts():
    o = Oracle.of(2, 0)
    chosen, o2 = o.pick(["a", "b", "c"])
    assert chosen == "c"
    assert o2.offset == 1
    chosen2, o3 = o2.pick(["a", "b", "c"])
    assert chosen2 == "a"
    assert o3.offset == 2


def test_constant_oracle_picks_first():
    o = Oracle.constant(0)
    assert o.pick([10, 20])[0] == 10


def test_trace_collector_records_rules():
    from polyheap.assertions import PredTable, SpecContext
    from polyheap.engine import EngineContext, Mode, initial_state, sym_exec
    from polyheap.memmodel import Bounds
    from polyheap.models import get_model
    from polyheap.syntax import Assign, Lit, Seq, Skip
    import json

    ctx = EngineContext(Mode.OX, SpecContext(), get_model("linear"), PredTable(), Bounds(), trace=[])
    st0 = initial_state(ctx.bundle.smm, {"x": Lit(0)})
    sym_exec(ctx, Oracle.constant(0), st0, Seq(Skip(), Assign("x", Lit(1))))
    rules = [t["rule"] for t in ctx.trace]
    assert "skip" in rules and "assign" in rules
    for record in ctx.trace:
        assert set(record) == {"rule", "outcome", "pc_delta", "oracle_index"}
        json.dumps(record)  # JSON-lines ready
