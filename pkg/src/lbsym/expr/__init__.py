"""Symbolic expression core: atoms, parsing, printing, normal form, numerics."""

from .atoms import (
    DEFAULT_CONTEXT,
    DEFAULT_FRAME,
    Anti,
    Context,
    ContextError,
    Frame,
    Jet,
    OpaqueFunction,
    RFun,
    integral,
    opaque,
)
from .normal import is_zero_symbolic, normalize
from .parser import ParseError, parse
from .printer import to_text
from .calculus import (
    OPAQUE_LIBRARY,
    bound_dummies,
    diff,
    instantiate,
    instantiate_all,
    library_assignments,
    opaque_calls,
    substitute,
)
from .numeric import (
    Bindings,
    DomainError,
    EvalError,
    Program,
    QuadratureError,
    UnboundAtomError,
    compile_exprs,
    eval_num,
)
