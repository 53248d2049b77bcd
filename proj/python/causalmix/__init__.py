"""Discrete causal Bayesian networks, mixtures of perfect interventions, and
recovery of the generating intervention targets and weights.

The heavy lifting lives in the C++ extension module; this package re-exports
its surface.
"""

from ._core import (
    CausalError,
    Network,
    TupleSet,
    __version__,
    ancestral_sample,
    check_exclusion,
    disentangle_finite,
    disentangle_oracle,
    empirical_marginal,
    marginalize_tuples,
    metrics,
    mixture_prob,
    mixture_sample,
    mle_cpds,
    random_instance,
    solve_exact,
    solve_scored,
)

__all__ = [
    "CausalError",
    "Network",
    "TupleSet",
    "__version__",
    "ancestral_sample",
    "check_exclusion",
    "disentangle_finite",
    "disentangle_oracle",
    "empirical_marginal",
    "marginalize_tuples",
    "metrics",
    "mixture_prob",
    "mixture_sample",
    "mle_cpds",
    "random_instance",
    "solve_exact",
    "solve_scored",
]
