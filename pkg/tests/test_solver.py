from random import Random

from hypothesis import given, settings, strategies as st

from polyheap.evaluation import eval_lexpr
from polyheap.memmodel import Bounds
from polyheap.smtlib import export_smtlib
from polyheap.solver import (
    Entail,
    Sat,
    UNKNOWN,
    UNSAT,
    check_sat,
    entails,
    pc_extend,
)
from polyheap.syntax import Bin, InType, InVal, Lit, LVar, Not, eq
from polyheap.values import NIL, TRUE

B = Bounds(value_domain=(NIL, TRUE, 0, 1, 2, 3), max_cells=2, max_addresses=3, trials=100, seed=0)
x, y = LVar("x"), LVar("y")


def test_trivial_sat():
    assert check_sat((Lit(TRUE),), B) == Sat({})


def test_negative_nat_unsat():
    assert check_sat((InType(x, "nat"), Bin("<", x, Lit(0))), B) is UNSAT


def test_pinned_witness():
    v = check_sat((Bin("<=", Lit(1), x), Bin("<=", x, Lit(2)), eq(x, Lit(1))), B)
    assert isinstance(v, Sat) and v.witness == {"x": 1}


def test_entails_examples():
    assert entails((eq(x, Lit(1)),), eq(x, Lit(1)), B) is Entail.YES
    assert entails((Bin("<=", Lit(1), x), Bin("<=", x, Lit(2))), eq(x, Lit(1)), B) is Entail.NO
    assert entails((eq(x, y), eq(y, Lit(3))), eq(x, Lit(3)), B) is Entail.YES


def test_interval_exclusion():
    pc = (Bin("<=", Lit(1), x), Bin("<=", x, Lit(2)), Not(eq(x, Lit(1))), Not(eq(x, Lit(2))))
    assert check_sat(pc, B) is UNSAT


def test_complement_detection():
    assert check_sat((InVal(x), Not(InVal(x))), B) is UNSAT


def test_reflexivity_under_definedness():
    assert entails((InVal(x),), eq(x, x), B) is Entail.YES


def test_ground_false_is_unsat():
    assert check_sat((eq(Lit(1), Lit(2)),), B) is UNSAT


def test_pc_extend_folds_and_dedups():
    pc = pc_extend((), [eq(Lit(1), Lit(1)), InVal(x), InVal(x)])
    assert pc == (InVal(x),)


def test_sat_witness_always_replays():
    rng = Random(1)
    ops = ["=", "<", "<=", "+", "and"]
    lits = [Lit(NIL), Lit(0), Lit(1), Lit(2), Lit(TRUE)]
    atoms = [x, y] + lits
    for _ in range(500):
        conjuncts = []
        for _ in range(rng.randint(1, 3)):
            a, b = rng.choice(atoms), rng.choice(atoms)
            c = Bin(rng.choice(ops), a, b)
            if rng.random() < 0.3:
                c = Not(c)
            if rng.random() < 0.2:
                c = InVal(c)
            conjuncts.append(c)
        verdict = check_sat(tuple(conjuncts), B)
        if isinstance(verdict, Sat):
            assert all(eval_lexpr(c, verdict.witness, {}) is TRUE for c in conjuncts)
            # agreement between entailment and satisfaction witnesses
            goal = conjuncts[0]
            if entails(tuple(conjuncts), goal, B) is Entail.YES:
                assert eval_lexpr(goal, verdict.witness, {}) is TRUE
        elif verdict is UNSAT:
            # exhaustive bounded enumeration must agree
            from polyheap.solver import _assignments, enumeration_domain

            domain = enumeration_domain(tuple(conjuncts), B)
            for theta in _assignments({"x", "y"}, domain, B):
                assert not all(eval_lexpr(c, theta, {}) is TRUE for c in conjuncts)


@given(st.integers(0, 3), st.integers(0, 3))
@settings(max_examples=30, deadline=None)
def test_monotonic_unsat(a, b):
    base = (eq(x, Lit(a)), eq(x, Lit(b)))
    if check_sat(base, B) is UNSAT:
        assert check_sat(base + (InVal(y),), B) is UNSAT


def test_smtlib_deterministic():
    pc = (eq(x, Lit(1)), Bin("<", y, Lit(Rat := __import__("polyheap.values", fromlist=["Rat"]).Rat(1, 2))))
    s1 = export_smtlib(pc)
    s2 = export_smtlib(pc)
    assert s1 == s2
    assert s1.endswith("(check-sat)\n")
    assert "|#x|" in s1 and "|#y|" in s1


def test_smtlib_covers_every_construct():
    from polyheap.syntax import InType as IT, LstE

    pc = (
        InVal(x),
        IT(x, "list"),
        Not(eq(LstE((x, Lit("s"))), Lit((0, NIL)))),
        eq(Bin("/", Lit(4), Lit(2)), Bin("-", y, Lit(1))),
    )
    text = export_smtlib(pc)
    assert "declare-datatypes" in text
