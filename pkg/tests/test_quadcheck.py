import pytest

from polyheap.memmodel import Bounds
from polyheap.models import get_model
from polyheap.parser import parse_program
from polyheap.quadcheck import CounterExample, Inconclusive, Valid, check_quadruple_bounded
from polyheap.values import NIL

B = Bounds(value_domain=(NIL, 0, 1, 2), max_cells=2, max_addresses=3, trials=200, seed=0)


@pytest.fixture
def lin():
    return get_model("linear")


def check(src, lin, bounds=B):
    prog = parse_program(src)
    fid = next(iter(prog.specs))
    return check_quadruple_bounded(prog.functions, prog.specs[fid][0], bounds, lin, prog.preds)


def test_sl_skip_valid(lin):
    r = check(
        "func f() { skip; return 0 }\nspec SL f() { requires: emp; ensures_ok: ret = 0 * emp; }",
        lin,
    )
    assert isinstance(r, Valid)


def test_sl_lookup_from_emp_misses(lin):
    r = check(
        """
        func g() { x := lookup(1); return 0 }
        spec SL g() { requires: emp; ensures_ok: True; ensures_err: True; }
        """,
        lin,
    )
    assert isinstance(r, CounterExample) and r.kind == "miss"


def test_isl_free_valid_within_bounds(lin):
    r = check(
        """
        func h() { free(1); return nil }
        spec ISL h() { requires: cell(1; #v); ensures_ok: ret = nil * freed(1;); }
        """,
        lin,
    )
    assert isinstance(r, Valid)


def test_isl_unreachable_post_detected(lin):
    r = check(
        """
        func h() { skip; return nil }
        spec ISL h() { requires: emp; ensures_ok: ret = 0 * emp; }
        """,
        lin,
    )
    assert isinstance(r, CounterExample) and r.kind == "unreachable-post"


def test_esl_checks_both_directions(lin):
    r = check(
        """
        func k(x) { y := lookup(x); return y }
        spec ESL k(x) { requires: x = #x * cell(#x; #v); ensures_ok: cell(#x; #v) * ret = #v; }
        """,
        lin,
    )
    assert isinstance(r, Valid)


def test_wrong_post_refuted(lin):
    r = check(
        """
        func k(x) { y := lookup(x); return y }
        spec SL k(x) { requires: x = #x * cell(#x; #v); ensures_ok: cell(#x; 0) * ret = #v; }
        """,
        lin,
    )
    assert isinstance(r, CounterExample) and r.kind == "post-violated"


def test_depth_exhaustion_is_inconclusive(lin):
    r = check(
        """
        pred loop(;) { loop(;) }
        func f() { skip; return 0 }
        spec SL f() { requires: loop(;); ensures_ok: True; }
        """,
        lin,
    )
    assert isinstance(r, Inconclusive)
