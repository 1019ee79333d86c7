from .buchi import Buchi, ltl_to_buchi
from .checker import Lasso, Verdict, check, check_ctl, check_ltl, counterexample_text
from .formula import CTL, LTL, Formula, Node, compile_property, parse_formula, render
from .promela import critical_variables, emit_promela

__all__ = [
    "Buchi", "CTL", "Formula", "LTL", "Lasso", "Node", "Verdict", "check", "check_ctl", "check_ltl",
    "compile_property", "counterexample_text", "critical_variables", "emit_promela", "ltl_to_buchi",
    "parse_formula", "render",
]
