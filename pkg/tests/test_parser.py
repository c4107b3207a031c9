import glob
import os

import pytest

from polyheap.assertions import Emp, Exists, Pred, Res, Star, split_external_pre
from polyheap.parser import ParseError, format_program, parse_program
from polyheap.syntax import Action, FunCall, Lit, Seq, prog_vars
from polyheap.values import Rat

from conftest import programs_dir


def test_smallest_function():
    prog = parse_program("func f(x) { skip; return x }")
    assert list(prog.functions) == ["f"]
    assert prog.functions["f"].params == ("x",)


def test_duplicate_param_is_a_parse_error():
    with pytest.raises(ParseError):
        parse_program("func f(x,x) { skip; return 0 }")


def test_full_corpus_round_trip():
    files = sorted(glob.glob(os.path.join(programs_dir(), "*.ph")))
    assert files, "no sample programs found"
    for path in files:
        text = open(path, encoding="utf-8").read()
        printed = format_program(parse_program(text))
        again = format_program(parse_program(printed))
        assert printed == again, f"round-trip failed for {path}"


def test_fixture_shape():
    prog = parse_program(open(os.path.join(programs_dir(), "swap.ph"), encoding="utf-8").read())
    assert len(prog.functions) == 3
    assert len(prog.preds) == 1
    assert sum(len(v) for v in prog.specs.values()) == 2


def test_call_resolution_functions_vs_actions():
    prog = parse_program(
        """
        func g(a) { skip; return a }
        func f(x) { y := g(x); z := lookup(x); return z }
        """
    )
    body = prog.functions["f"].body
    first, second = body.first, body.second
    assert isinstance(first, FunCall) and first.fid == "g"
    assert isinstance(second, Action) and second.name == "lookup"


def test_prog_vars():
    prog = parse_program("func f(x) { y := f2(x); z := lookup(y); return z }\nfunc f2(a) { skip; return a }")
    assert prog_vars(prog.functions["f"].body) == {"x", "y", "z"}


def test_rational_literals():
    prog = parse_program('func f() { x := 1/2q; y := 3q; return x }')
    body = prog.functions["f"].body
    assert body.first.expr == Lit(Rat(1, 2))
    assert body.second.expr == Lit(Rat(3))


def test_exists_scopes_over_the_whole_star():
    prog = parse_program(
        """
        func f() { skip; return 0 }
        spec SL f() { requires: emp; ensures_ok: exists #a. (ret = #a) * cell(#a; 1); }
        """
    )
    post = prog.specs["f"][0].post_ok
    assert isinstance(post, Exists)
    assert isinstance(post.body, Star)


def test_pred_vs_resource_atoms():
    prog = parse_program(
        """
        pred p(+#i; #o) { cell(#i; #o) }
        spec SL f(x) { requires: x = #x * p(#x; #o) * freed(#y;); ensures_ok: True; }
        func f(x) { skip; return 0 }
        """
    )
    pre = prog.specs["f"][0].pre
    mapping, spatial = split_external_pre(pre, ("x",))
    assert mapping == {"x": "x"}
    parts = []
    from polyheap.assertions import star_conjuncts

    for part in star_conjuncts(spatial):
        parts.append(type(part).__name__)
    assert parts == ["Pred", "Res"]


def test_parse_error_has_position():
    with pytest.raises(ParseError) as exc:
        parse_program("func f() { skip return 0 }")
    assert exc.value.line == 1
    assert exc.value.col > 0
    assert exc.value.expected


def test_missing_param_equality_rejected():
    with pytest.raises(ParseError):
        parse_program(
            "func f(x) { skip; return 0 }\nspec SL f(x) { requires: emp; ensures_ok: True; }"
        )


def test_reserved_variables_rejected_in_programs():
    with pytest.raises(ParseError):
        parse_program("func f(err) { skip; return err }")
    with pytest.raises(ParseError):
        parse_program("func f(x) { ret := x; return ret }")
    # but ret/err are fine inside specification postconditions
    parse_program(
        "func f(x) { skip; return x }\n"
        "spec SL f(x) { requires: x = #x * emp; ensures_ok: ret = #x * emp; ensures_err: err = \"E\" * True; }"
    )
