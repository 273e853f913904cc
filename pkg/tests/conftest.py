"""Shared fixtures: the desk-scale benchmark problem in several flavors."""

import numpy as np
import pytest

from dipgm import (AgentProblem, LossKind, RegKind, Regularizer, SmoothLoss,
                   generate_random_connected_graph, lipschitz_bound,
                   metropolis_hastings_weights, partition, reference_solution,
                   stepsizes_from_bounds, synthetic_dataset)

N_AGENTS = 10
N_FEATURES = 20
SAMPLES_PER_AGENT = 30


@pytest.fixture(scope="session")
def mixing_setup():
    graph = generate_random_connected_graph(N_AGENTS, 0.5, 0)
    return graph, metropolis_hastings_weights(graph)


@pytest.fixture(scope="session")
def shards_and_loss():
    dataset = synthetic_dataset(LossKind.LINEAR,
                                N_AGENTS * SAMPLES_PER_AGENT, N_FEATURES,
                                noise_std=0.1, seed=0)
    shards = partition(dataset, N_AGENTS, 0)
    loss = SmoothLoss(LossKind.LINEAR, l2_weight=1.0)
    L = np.array([lipschitz_bound(loss, s) for s in shards])
    return shards, loss, L


def _problems(shards, loss, L, reg):
    return [AgentProblem(loss=loss, shard=s, reg=reg, L=L[i])
            for i, s in enumerate(shards)]


@pytest.fixture(scope="session")
def lasso_problem(shards_and_loss):
    """l1-regularized linear regression split over ten agents."""
    shards, loss, L = shards_and_loss
    reg = Regularizer(RegKind.L1, 0.01)
    problems = _problems(shards, loss, L, reg)
    return problems, L, stepsizes_from_bounds(L)


@pytest.fixture(scope="session")
def genlasso_problem(shards_and_loss):
    """Generalized lasso with a random 10 x 20 analysis matrix."""
    shards, loss, L = shards_and_loss
    D = np.random.default_rng(7).standard_normal((10, N_FEATURES))
    reg = Regularizer(RegKind.GENERALIZED_LASSO, 0.01, D=D)
    problems = _problems(shards, loss, L, reg)
    return problems, L, stepsizes_from_bounds(L)


@pytest.fixture(scope="session")
def lasso_reference(lasso_problem):
    problems, _, _ = lasso_problem
    return reference_solution(problems, tol=1e-10)


@pytest.fixture(scope="session")
def genlasso_reference(genlasso_problem):
    problems, _, _ = genlasso_problem
    return reference_solution(problems, tol=1e-10)
