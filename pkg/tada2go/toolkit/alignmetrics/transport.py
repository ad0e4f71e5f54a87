"""
Optimal transport between empirical distributions with uniform weights and squared-Euclidean cost.

The entropic solver runs log-domain Sinkhorn iterations with epsilon scaling, the exact oracle
solves the assignment problem (N = M) or the transport linear program.
"""
from typing import NamedTuple, Optional, Union

import numpy as np
from scipy import optimize
from scipy.spatial.distance import cdist
from scipy.special import logsumexp

from tada2go.toolkit.exceptions.exceptions import (ConfigurationException,
                                                   DimensionMismatchException,
                                                   InstanceTooLargeException,
                                                   InsufficientSamplesException)
from tada2go.toolkit.logs.config_logging import logger
from tada2go.toolkit.utils.constants import DEFAULT_EPSILON_SCALE

EXACT_OT_MAX_ENTRIES = 4096
# Iterations per intermediate epsilon of the annealing schedule
ANNEALING_STAGE_ITERATIONS = 50
ANNEALING_FACTOR = 0.5


class EntropicTransport(NamedTuple):
    value: float
    converged: bool
    iterations: int


class SinkhornResult(NamedTuple):
    """
    Named tuple for a debiased Sinkhorn divergence.

    Attributes:
        value (float): OT_eps(X, Y) - OT_eps(X, X) / 2 - OT_eps(Y, Y) / 2, clamped at 0.
        raw (float): The unclamped value.
        epsilon (float): Entropic regularization used for all three problems.
        converged (bool): True when all three problems converged within max_iter.
        iterations (int): Total iterations over the three problems.
    """
    value: float
    raw: float
    epsilon: float
    converged: bool
    iterations: int


def _checked_pair(x, y):
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    y = np.atleast_2d(np.asarray(y, dtype=np.float64))
    if x.shape[0] < 1 or y.shape[0] < 1:
        raise InsufficientSamplesException("Transport needs at least one sample per set.")
    if x.shape[1] != y.shape[1]:
        raise DimensionMismatchException(f"Sample dimensions differ: {x.shape[1]} vs {y.shape[1]}.")
    return x, y


def squared_euclidean_cost(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return cdist(x, y, 'sqeuclidean')


def median_cost(x, y) -> float:
    """Median squared-Euclidean cost between two samples."""
    x, y = _checked_pair(x, y)
    return float(np.median(squared_euclidean_cost(x, y)))


def entropic_ot(cost: np.ndarray, epsilon: float, max_iter: int = 1000, tol: float = 1e-9) -> EntropicTransport:
    """
    Entropic optimal transport between uniform marginals, in dual form.

    Args:
        cost (np.ndarray): N x M ground cost.
        epsilon (float): Target regularization, > 0.
        max_iter (int, optional): Iteration cap at the target epsilon.
        tol (float, optional): Stop when the dual potentials move less than tol x mean cost.

    Returns:
        EntropicTransport: Dual objective <a, f> + <b, g> - eps (mass - 1), convergence flag, iterations.
    """
    n, m = cost.shape
    log_a = np.full(n, -np.log(n))
    log_b = np.full(m, -np.log(m))
    f = np.zeros(n)
    g = np.zeros(m)
    scale = max(float(cost.mean()), np.finfo(float).tiny)

    schedule = []
    current = max(float(cost.max()), epsilon)
    while current > epsilon:
        schedule.append(current)
        current *= ANNEALING_FACTOR
    schedule.append(epsilon)

    iterations = 0
    converged = False
    for stage, eps in enumerate(schedule):
        final = stage == len(schedule) - 1
        limit = max_iter if final else ANNEALING_STAGE_ITERATIONS
        for _ in range(limit):
            f_new = -eps * logsumexp((g[None, :] - cost) / eps + log_b[None, :], axis=1)
            g_new = -eps * logsumexp((f_new[:, None] - cost) / eps + log_a[:, None], axis=0)
            shift = max(np.max(np.abs(f_new - f)), np.max(np.abs(g_new - g)))
            f, g = f_new, g_new
            iterations += 1
            if shift < tol * scale:
                converged = final
                break

    mass = np.exp(logsumexp((f[:, None] + g[None, :] - cost) / epsilon + log_a[:, None] + log_b[None, :]))
    value = float(np.exp(log_a) @ f + np.exp(log_b) @ g - epsilon * (mass - 1.0))
    return EntropicTransport(value, converged, iterations)


def sinkhorn_divergence(x, y, epsilon: Optional[Union[float, str]] = 'auto', max_iter: int = 1000,
                        tol: float = 1e-9, epsilon_scale: float = DEFAULT_EPSILON_SCALE) -> SinkhornResult:
    """
    Debiased entropic Wasserstein divergence between two samples.

    Args:
        x (array-like): N x D samples.
        y (array-like): M x D samples.
        epsilon (float or 'auto', optional): Regularization; 'auto' uses epsilon_scale x median cost.
        max_iter (int, optional): Iteration cap per transport problem at the target epsilon.
        tol (float, optional): Relative tolerance on dual potential updates.
        epsilon_scale (float, optional): Multiplier of the median cost for 'auto'.

    Returns:
        SinkhornResult: Value, raw value, epsilon and convergence report.

    Raises:
        InsufficientSamplesException: If a set is empty.
        DimensionMismatchException: If the dimensions differ.
    """
    x, y = _checked_pair(x, y)
    cost_xy = squared_euclidean_cost(x, y)
    if epsilon is None or epsilon == 'auto':
        median = float(np.median(cost_xy))
        epsilon = epsilon_scale * median if median > 0 else epsilon_scale
    epsilon = float(epsilon)
    if epsilon <= 0:
        raise ConfigurationException(f"Entropic regularization must be positive, got {epsilon}.")

    cross = entropic_ot(cost_xy, epsilon, max_iter, tol)
    self_x = entropic_ot(squared_euclidean_cost(x, x), epsilon, max_iter, tol)
    self_y = entropic_ot(squared_euclidean_cost(y, y), epsilon, max_iter, tol)
    raw = cross.value - 0.5 * self_x.value - 0.5 * self_y.value
    converged = cross.converged and self_x.converged and self_y.converged
    if not converged:
        logger.warning(f"Sinkhorn did not converge within {max_iter} iterations (epsilon={epsilon:.3g}).")
    return SinkhornResult(max(raw, 0.0), raw, epsilon, converged,
                          cross.iterations + self_x.iterations + self_y.iterations)


def exact_ot_small(x, y) -> float:
    """
    Exact optimal transport cost between two small uniform samples.

    Uses the Hungarian method when N = M and the transport linear program otherwise.

    Raises:
        InstanceTooLargeException: If N x M exceeds 4096.
    """
    x, y = _checked_pair(x, y)
    n, m = x.shape[0], y.shape[0]
    if n * m > EXACT_OT_MAX_ENTRIES:
        raise InstanceTooLargeException(f"Exact transport limited to N x M <= {EXACT_OT_MAX_ENTRIES}, got {n} x {m}.")
    cost = squared_euclidean_cost(x, y)
    if n == m:
        rows, cols = optimize.linear_sum_assignment(cost)
        return float(cost[rows, cols].sum() / n)

    row_sums = np.kron(np.eye(n), np.ones((1, m)))
    col_sums = np.kron(np.ones((1, n)), np.eye(m))
    result = optimize.linprog(cost.reshape(-1), A_eq=np.vstack([row_sums, col_sums]),
                              b_eq=np.concatenate([np.full(n, 1.0 / n), np.full(m, 1.0 / m)]),
                              bounds=(0, None), method='highs')
    if not result.success:
        msg = f"Transport linear program failed: {result.message}"
        logger.error(msg)
        raise InstanceTooLargeException(msg)
    return float(result.fun)
