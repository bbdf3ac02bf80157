"""Discrete multi-marginal optimal transport with optimality certificates."""

__version__ = "0.1.0"

from .core import (  # noqa: E402
    AMBIENT, FLOAT, NOT_MONOTONE, OPTIMAL, PROJECTIONS, RATIONAL, Certificate, CostSpec,
    Instance, Marginal, RearrangementWitness, Space, SplittingTuple, SupportSet,
    TransportPlan, cost_eval, make_instance, marginals_of, plan_cost, support_of,
    validate_instance,
)
from .certify import audit_certificate, certify_plan  # noqa: E402
from .monotone import (  # noqa: E402
    check_monotone_bruteforce, check_monotone_exact, extract_witness,
    improving_pair_from_certificate,
)
from .solver import SolveResult, duality_gap, solve_dual, solve_primal  # noqa: E402
from .splitting import (  # noqa: E402
    extend_by_infconvolution, normalize_at_base, splitting_for_finite, verify_tuple,
)
from .suite import gen_instance, run_suite  # noqa: E402

__all__ = [
    "AMBIENT",
    "audit_certificate",
    "Certificate",
    "certify_plan",
    "check_monotone_bruteforce",
    "check_monotone_exact",
    "cost_eval",
    "CostSpec",
    "duality_gap",
    "extend_by_infconvolution",
    "extract_witness",
    "FLOAT",
    "gen_instance",
    "improving_pair_from_certificate",
    "Instance",
    "make_instance",
    "Marginal",
    "marginals_of",
    "normalize_at_base",
    "NOT_MONOTONE",
    "OPTIMAL",
    "plan_cost",
    "PROJECTIONS",
    "RATIONAL",
    "RearrangementWitness",
    "run_suite",
    "solve_dual",
    "solve_primal",
    "SolveResult",
    "Space",
    "splitting_for_finite",
    "SplittingTuple",
    "support_of",
    "SupportSet",
    "TransportPlan",
    "validate_instance",
    "verify_tuple",
]
