"""Stationary distributions and the return-conditional marginals.

For windows drawn from the snake chain's stationary law, the sum of the
rewards in blocks 1..m together with the block-0 state and block-1 action
defines a joint law whose conditionals are exactly what the online
estimator is trying to learn; extracting them here gives the ground
truth the rest of the package is checked against.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ..errors import NumericError
from .chains import ChainProperties, MarkovChain, SnakeChain, check_properties

DIRECT_SOLVE_LIMIT = 10_000
RESIDUAL_TOL = 1e-12


@dataclass
class StationaryResult:
    chain: MarkovChain
    dist: np.ndarray
    residual: float
    properties: ChainProperties
    #: True when the chain failed the irreducible+aperiodic gate and the
    #: solve proceeded anyway.
    warned: bool = False


def _residual(matrix: sp.csr_matrix, dist: np.ndarray) -> float:
    return float(np.abs(dist @ matrix - dist).sum())


def _direct_solve(matrix: sp.csr_matrix, n: int) -> np.ndarray:
    # Solve nu (P - I) = 0 with the normalization sum(nu) = 1 replacing
    # one redundant equation.
    a = (matrix.T - sp.identity(n, format="csr")).tolil()
    a[n - 1, :] = 1.0
    b = np.zeros(n)
    b[n - 1] = 1.0
    if n <= 600:
        x = np.linalg.solve(a.toarray(), b)
    else:
        x = spla.spsolve(a.tocsr(), b)
    return x


def solve_stationary(chain: MarkovChain, init: np.ndarray | None = None,
                     max_iterations: int = 100_000) -> StationaryResult:
    """Stationary distribution with L1 residual at most 1e-12.

    Chains up to 10,000 states go through a direct linear solve; larger
    ones use power iteration, optionally warm-started by `init` (for
    snake chains the product-form guess makes this converge at once).
    Chains that are not irreducible+aperiodic are still solved, with the
    `warned` flag raised, since unique stationarity only needs
    irreducibility on a finite chain.
    """
    props = check_properties(chain)
    warned = not (props.irreducible and props.aperiodic)
    n = chain.n
    matrix = chain.matrix
    if n <= DIRECT_SOLVE_LIMIT:
        dist = _direct_solve(matrix, n)
        dist = np.maximum(dist, 0.0)
        dist /= dist.sum()
        res = _residual(matrix, dist)
        if res <= RESIDUAL_TOL:
            return StationaryResult(chain, dist, res, props, warned)
        # Fall through to iteration from the direct solution.
        init = dist
    dist = np.full(n, 1.0 / n) if init is None else np.asarray(init, dtype=float)
    res = _residual(matrix, dist)
    for _ in range(max_iterations):
        if res <= RESIDUAL_TOL:
            return StationaryResult(chain, dist, res, props, warned)
        dist = dist @ matrix
        total = dist.sum()
        if total <= 0:
            raise NumericError("stationary iteration collapsed to zero mass")
        dist /= total
        res = _residual(matrix, dist)
    if res <= RESIDUAL_TOL:
        return StationaryResult(chain, dist, res, props, warned)
    raise NumericError(
        f"stationary solve did not reach residual {RESIDUAL_TOL}", residual=res)


def snake_product_form(snake: SnakeChain, base_dist: np.ndarray) -> np.ndarray:
    """Stationary law of the window chain: start-block stationary mass
    times the path's transition probabilities."""
    base = snake.base.matrix
    out = np.empty(snake.n)
    for i, w in enumerate(snake.labels):
        p = base_dist[w[0]]
        for a, b in zip(w[:-1], w[1:]):
            p *= base[a, b]
        out[i] = p
    return out


def solve_snake_stationary(snake: SnakeChain) -> StationaryResult:
    """Solve the window chain, warm-starting from the product form of the
    base chain's stationary distribution."""
    base_res = solve_stationary(snake.base)
    init = snake_product_form(snake, base_res.dist)
    total = init.sum()
    if total > 0:
        init = init / total
    props = check_properties(snake)
    warned = not (props.irreducible and props.aperiodic)
    res = _residual(snake.matrix, init)
    if res <= RESIDUAL_TOL:
        return StationaryResult(snake, init, res, props, warned)
    return solve_stationary(snake, init=init)


def block_marginal(snake: SnakeChain, dist: np.ndarray, block: int) -> np.ndarray:
    """Marginal of a window distribution onto one block, over the base
    chain's states."""
    out = np.zeros(snake.base.n)
    for w, p in zip(snake.labels, dist):
        out[w[block]] += p
    return out


@dataclass
class ReturnConditionals:
    """Marginals of the stationary window law needed for exact values.

    Indexing: [return value, state, action]; `defined` marks (state,
    action) pairs with positive stationary probability, the only ones the
    conditionals are meaningful for.
    """

    z_values: tuple
    joint: np.ndarray              # P(window return, block-0 state, block-1 action)
    state_given_za: np.ndarray     # P(s | z, a)
    z_given_a: np.ndarray          # P(z | a)
    z_given_sa: np.ndarray         # P(z | s, a)
    defined: np.ndarray            # bool (n_states, n_actions)
    z_index: dict = field(default_factory=dict)


def return_conditionals(snake: SnakeChain, dist: np.ndarray) -> ReturnConditionals:
    """Accumulate the joint law of (sum of rewards in blocks 1..m,
    block-0 state, block-1 action) from the window distribution."""
    base = snake.base
    mdp = getattr(base, "mdp", None)
    if mdp is None:
        raise TypeError("return conditionals need a snake over an augmented chain")
    rewards = mdp.reward_values
    n_states, n_actions = mdp.n_states, mdp.n_actions

    per_window_z = np.empty(snake.n)
    s0 = np.empty(snake.n, dtype=np.int64)
    a1 = np.empty(snake.n, dtype=np.int64)
    for i, w in enumerate(snake.labels):
        z = 0.0
        for block in w[1:]:
            z += rewards[base.labels[block][2]]
        per_window_z[i] = z
        s0[i] = base.labels[w[0]][1]
        a1[i] = base.labels[w[1]][0]

    z_values = tuple(sorted(set(per_window_z.tolist())))
    z_index = {z: k for k, z in enumerate(z_values)}
    joint = np.zeros((len(z_values), n_states, n_actions))
    zk = np.array([z_index[z] for z in per_window_z.tolist()], dtype=np.int64)
    np.add.at(joint, (zk, s0, a1), dist)

    mass_za = joint.sum(axis=1, keepdims=True)
    state_given_za = np.divide(joint, mass_za, out=np.zeros_like(joint),
                               where=mass_za > 0)
    mass_a = joint.sum(axis=(0, 1))
    z_given_a = np.divide(mass_za[:, 0, :], mass_a[None, :],
                          out=np.zeros_like(mass_za[:, 0, :]), where=mass_a > 0)
    mass_sa = joint.sum(axis=0, keepdims=True)
    z_given_sa = np.divide(joint, mass_sa, out=np.zeros_like(joint),
                           where=mass_sa > 0)
    defined = mass_sa[0] > 0
    return ReturnConditionals(z_values, joint, state_given_za, z_given_a,
                              z_given_sa, defined, z_index)
