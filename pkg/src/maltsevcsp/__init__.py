"""Binary constraint satisfaction over finite idempotent algebras whose
quotient by a witness congruence is a 2-semilattice."""
from .algebra import App, FiniteAlgebra, Var, binary
from .bulatov import bulatov_solution, decompose, scc_restrict, verify_walk_to_bulatov
from .instance import (
    Instance,
    RawInstance,
    brute_force_solve,
    is_solution,
    restrict,
    two_three_consistency,
    validate_standard,
)
from .maltsev import build_counterexample, build_quotient_instance, hypothesis_check, main_solve

__version__ = "0.1.0"
