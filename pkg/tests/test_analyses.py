import os

import pytest

from polyheap.analyses import (
    Failed,
    UnsupportedCapability,
    Verified,
    biabduct,
    verify_ox,
)
from polyheap.assertions import Emp, format_assertion, normalize
from polyheap.memmodel import Bounds
from polyheap.models import get_model
from polyheap.parser import parse_program
from polyheap.quadcheck import Valid, check_quadruple_bounded
from polyheap.syntax import Action, Lit, Seq, Skip
from polyheap.values import NIL

from conftest import programs_dir

B = Bounds(value_domain=(NIL, 0, 1, 2), max_cells=2, max_addresses=3, trials=200, seed=0)


def load(name):
    return parse_program(open(os.path.join(programs_dir(), name), encoding="utf-8").read())


def test_trivial_spec_verifies():
    prog = parse_program(
        "func f(x) { skip; return x }\nspec SL f(x) { requires: x = #x * emp; ensures_ok: ret = #x * emp; }"
    )
    r = verify_ox(prog.functions, prog.specs, "f", prog.specs["f"][0], get_model("linear"), prog.preds, B)
    assert isinstance(r, Verified)


def test_lookup_spec_verifies_and_cross_checks():
    prog = parse_program(
        """
        func k(x) { y := lookup(x); return y }
        spec SL k(x) { requires: x = #x * cell(#x; #v); ensures_ok: cell(#x; #v) * ret = #v; }
        """
    )
    b = get_model("linear")
    q = prog.specs["k"][0]
    assert isinstance(verify_ox(prog.functions, prog.specs, "k", q, b, prog.preds, B), Verified)
    assert isinstance(check_quadruple_bounded(prog.functions, q, B, b, prog.preds), Valid)


def test_wrong_post_fails_with_paths():
    prog = parse_program(
        """
        func k(x) { y := lookup(x); return y }
        spec SL k(x) { requires: x = #x * cell(#x; #v); ensures_ok: cell(#x; 0) * ret = #v; }
        """
    )
    r = verify_ox(prog.functions, prog.specs, "k", prog.specs["k"][0], get_model("linear"), prog.preds, B)
    assert isinstance(r, Failed)
    assert r.paths and all("pc" in p and "reason" in p for p in r.paths)


def test_recursive_function_rejected():
    prog = parse_program(
        """
        func f(x) { y := f(x); return y }
        spec SL f(x) { requires: x = #x * emp; ensures_ok: True; }
        """
    )
    r = verify_ox(prog.functions, prog.specs, "f", prog.specs["f"][0], get_model("linear"), prog.preds, B)
    assert isinstance(r, Failed)
    assert "recursive" in r.paths[0]["reason"]


def test_verification_needs_declared_soundness():
    prog = parse_program(
        "func f(x) { skip; return x }\nspec SL f(x) { requires: x = #x * emp; ensures_ok: ret = #x * emp; }"
    )
    with pytest.raises(UnsupportedCapability):
        verify_ox(prog.functions, prog.specs, "f", prog.specs["f"][0], get_model("linear-cut"), prog.preds, B)


def test_call_through_spec_verifies():
    prog = parse_program(
        """
        func inner(x) { y := lookup(x); return y }
        func outer(x) { r := inner(x); return r }
        spec SL inner(x) { requires: x = #x * cell(#x; #v); ensures_ok: cell(#x; #v) * ret = #v; }
        spec SL outer(x) { requires: x = #x * cell(#x; #v); ensures_ok: cell(#x; #v) * ret = #v; }
        """
    )
    b = get_model("linear")
    for fid in ("inner", "outer"):
        r = verify_ox(prog.functions, prog.specs, fid, prog.specs[fid][0], b, prog.preds, B)
        assert isinstance(r, Verified), fid


# -- bi-abduction -------------------------------------------------------------


def test_biabduct_missing_cell():
    reports = biabduct({}, {}, Action(("x",), "lookup", (Lit(1),)), get_model("linear"), None, B)
    assert len(reports) == 1
    r = reports[0]
    assert r.outcome == "ok"
    assert format_assertion(r.anti_heap).startswith("cell(1;")
    assert r.replayed is True
    assert r.quadruple_verdict == "Valid"


def test_biabduct_use_after_free():
    cmd = Seq(Action((), "free", (Lit(1),)), Action(("y",), "lookup", (Lit(1),)))
    reports = biabduct({}, {}, cmd, get_model("linear"), None, B)
    errs = [r for r in reports if r.outcome == "err"]
    assert len(errs) == 1
    assert "UseAfterFree" in " ".join(errs[0].witness_pc) or errs[0].quadruple is not None
    assert errs[0].replayed is True
    assert errs[0].quadruple_verdict == "Valid"
    assert format_assertion(errs[0].quadruple.post_err).count("UseAfterFree") == 1


def test_biabduct_skip_has_empty_anti_heap():
    reports = biabduct({}, {}, Skip(), get_model("linear"), None, B)
    assert len(reports) == 1
    assert reports[0].anti_heap == Emp()
    assert reports[0].outcome == "ok"


def test_biabduct_requires_capability():
    with pytest.raises(UnsupportedCapability):
        biabduct({}, {}, Skip(), get_model("chunks"), None, B)
    with pytest.raises(UnsupportedCapability):
        biabduct({}, {}, Skip(), get_model("linear-ox"), None, B)


def test_biabduct_anti_heap_monotone_along_paths():
    cmd = Seq(Action(("x",), "lookup", (Lit(1),)), Action(("z",), "lookup", (Lit(2),)))
    reports = biabduct({}, {}, cmd, get_model("linear"), None, B, validate=False)
    from polyheap.assertions import star_conjuncts

    ok = [r for r in reports if r.outcome == "ok"]
    assert ok and all(len(star_conjuncts(r.anti_heap)) == 2 for r in ok)


def test_biabduct_fixture_file():
    prog = load("bugs.ph")
    b = get_model("linear")
    reports = biabduct(prog.functions, prog.specs, "use_after_free", b, prog.preds, B)
    assert any(r.outcome == "err" and r.replayed for r in reports)
    reports2 = biabduct(prog.functions, prog.specs, "read_missing", b, prog.preds, B)
    assert all(r.replayed for r in reports2 if r.quadruple is not None)


def test_esl_spec_verifies_in_exact_mode():
    prog = parse_program(
        """
        func k(x) { y := lookup(x); return y }
        spec ESL k(x) { requires: x = #x * cell(#x; #v); ensures_ok: cell(#x; #v) * ret = #v; }
        """
    )
    b = get_model("linear")
    q = prog.specs["k"][0]
    assert isinstance(verify_ox(prog.functions, prog.specs, "k", q, b, prog.preds, B), Verified)
    assert isinstance(check_quadruple_bounded(prog.functions, q, B, b, prog.preds), Valid)


def test_ux_funcall_uses_isl_spec():
    from polyheap.engine import EngineContext, Mode, SymbolicState, sym_exec
    from polyheap.oracle import Oracle
    from polyheap.outcomes import OK
    from polyheap.syntax import FunCall, InVal, LVar, Lit, PVar

    prog = parse_program(
        """
        func alloc_one() { a := new(); mutate(a, 1); return a }
        spec ISL alloc_one() { requires: emp; ensures_ok: exists #a. (ret = #a) * cell(#a; 1); }
        """
    )
    b = get_model("linear")
    ctx = EngineContext(Mode.UX, prog.specs, b, prog.preds, B)
    st = SymbolicState({"y": Lit(0)}, {}, (), ())
    branches = sym_exec(ctx, Oracle.constant(0), st, FunCall("y", "alloc_one", ()))
    ok = [br for br in branches if br.outcome is OK]
    assert ok, branches
    assert all(len(br.state.mem) == 1 for br in ok)


def test_biabduct_on_frac_model():
    """Fixes carry a fresh permission; a full-permission branch lets the
    retried write go through."""
    from polyheap.values import Rat

    bounds = Bounds(value_domain=(NIL, 0, Rat(1)), max_cells=2, max_addresses=2, seed=0)
    reports = biabduct(
        {}, {}, Action((), "mutate", (Lit(1), Lit(0))), get_model("frac"), None, bounds,
        validate=False,
    )
    ok = [r for r in reports if r.outcome == "ok" and not r.unrecoverable]
    assert ok
    assert all(r.replayed for r in ok)
    assert any("cell(1" in format_assertion(r.anti_heap) for r in ok)


def test_biabduct_on_block_offset_model():
    bounds = Bounds(value_domain=(NIL, 0, 1), max_cells=2, max_addresses=2, seed=0)
    reports = biabduct(
        {}, {}, Action(("x",), "lookup", (Lit(0), Lit(1))), get_model("block-offset"), None, bounds,
        validate=False,
    )
    ok = [r for r in reports if r.outcome == "ok" and not r.unrecoverable]
    assert ok and all(r.replayed for r in ok)
    assert any("cell(0" in format_assertion(r.anti_heap) for r in ok)
