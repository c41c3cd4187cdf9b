"""Constructive Ekeland variational principle with numeric certificates."""
from .certificate import Certificate, CertItem, certify
from .functional import Functional, evaluate
from .oracle import ekeland_set, exact_inf, verify_against_oracle
from .solver import Exhaustive, IterationTrace, LocalBall, SolverConfig, run, run_rescaled, run_second_order
from .space import FiniteSpace, NormedSpace

__all__ = [
    "Certificate", "CertItem", "certify", "Functional", "evaluate", "ekeland_set",
    "exact_inf", "verify_against_oracle", "Exhaustive", "IterationTrace", "LocalBall",
    "SolverConfig", "run", "run_rescaled", "run_second_order", "FiniteSpace", "NormedSpace",
]
