"""Exact ground truth over explicit MDPs: chain constructions, stationary
solves, and action values computed two independent ways."""

from .chains import (
    AugmentedChain,
    ChainProperties,
    MarkovChain,
    SnakeChain,
    build_augmented_chain,
    build_base_chain,
    build_snake_chain,
    check_properties,
)
from .export import write_marginals_csv, write_q_csv
from .qtables import episode_return_distribution, q_via_dp, q_via_stationary
from .random_mdps import random_certified_case, random_mdp, random_policy
from .stationary import (
    ReturnConditionals,
    StationaryResult,
    block_marginal,
    return_conditionals,
    snake_product_form,
    solve_snake_stationary,
    solve_stationary,
)

__all__ = [
    "MarkovChain", "AugmentedChain", "SnakeChain", "ChainProperties",
    "build_base_chain", "build_augmented_chain", "build_snake_chain",
    "check_properties", "solve_stationary", "solve_snake_stationary",
    "snake_product_form", "block_marginal", "StationaryResult",
    "ReturnConditionals", "return_conditionals", "q_via_stationary", "q_via_dp",
    "episode_return_distribution", "random_mdp", "random_policy",
    "random_certified_case", "write_q_csv", "write_marginals_csv",
]
