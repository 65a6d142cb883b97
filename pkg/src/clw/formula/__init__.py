from .ast import (  # noqa: F401
    App, AbsDiff, And, Apply, Const, Dist, DotMinus, Eq, Exists, Forall, FormulaError,
    Implies, Inf, Max, Min, Neg, Not, Or, Pred, Rel, Scale, Sup, TruncAdd, Val, Var,
    check_formula, free_vars, inf, show, show_classical, substitute, sup, to_json,
)
from .parser import (  # noqa: F401
    ParseError, parse_classical, parse_formula, parse_formula_file, parse_term,
)
from .rewrite import (  # noqa: F401
    abstract_constants, classical_to_continuous, substitute_predicate, value_set,
)
