"""polyheap: memory-model-parametric compositional symbolic execution.

Plug in a memory model (concrete actions, resources, symbolic actions,
consume/produce) and get a concrete interpreter, a symbolic engine,
function-specification verification, bi-abductive bug-finding, and a
conformance harness that tests the model against the soundness
obligations it declares.
"""

__version__ = "0.1.0"

from .values import NIL, TRUE, FALSE, UNDEF, Rat, vbool  # noqa: F401
from .syntax import (  # noqa: F401
    Action,
    Assign,
    Bin,
    Cmd,
    Expr,
    Fold,
    FunCall,
    FunctionDef,
    IfElse,
    ImplContext,
    InType,
    InVal,
    Lit,
    LstE,
    LVar,
    Not,
    PVar,
    Seq,
    Skip,
    Unfold,
    prog_vars,
)
from .evaluation import eval_expr, eval_lexpr  # noqa: F401
from .parser import ParseError, parse_program, format_program  # noqa: F401
