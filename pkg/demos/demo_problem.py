"""Shared construction of the small lasso benchmark used by the demos."""

import numpy as np

from dipgm import (AgentProblem, LossKind, RegKind, Regularizer, SmoothLoss,
                   generate_random_connected_graph, lipschitz_bound,
                   metropolis_hastings_weights, partition,
                   reference_solution, stepsizes_from_bounds,
                   synthetic_dataset)


def lasso_setup(n_agents=10, n_features=20, samples_per_agent=30):
    dataset = synthetic_dataset(LossKind.LINEAR,
                                n_agents * samples_per_agent, n_features,
                                noise_std=0.1, seed=0)
    shards = partition(dataset, n_agents, seed=0)
    loss = SmoothLoss(LossKind.LINEAR, l2_weight=1.0)
    reg = Regularizer(RegKind.L1, 0.01)
    problems = [AgentProblem(loss=loss, shard=s, reg=reg,
                             L=lipschitz_bound(loss, s)) for s in shards]
    L = np.array([p.L for p in problems])
    mixing = metropolis_hastings_weights(
        generate_random_connected_graph(n_agents, 0.5, seed=0))
    sizes = stepsizes_from_bounds(L)
    ref = reference_solution(problems, tol=1e-10)
    return problems, L, mixing, sizes, ref
