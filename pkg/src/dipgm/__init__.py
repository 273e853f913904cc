"""Decentralized inexact proximal-gradient toolkit.

A numpy/scipy library for simulating decentralized convex composite
optimization over undirected networks: a corrected primal-dual proximal
gradient method with network-independent stepsizes and certified inexact
proximal steps, two baselines (PG-EXTRA and NIDS), an inner primal-dual
solver for generalized-lasso proximal mappings, and diagnostics that
verify the method's descent and rate properties numerically.
"""

from .topology import (Graph, MixingMatrix, TopologyError,
                       generate_random_connected_graph,
                       metropolis_hastings_weights, mixing_ok,
                       spectral_quantities, validate_mixing)
from .model import (AgentShard, DataError, Dataset, LossKind, SmoothLoss,
                    lipschitz_bound, local_value_grad, parse_libsvm,
                    partition, synthetic_dataset)
from .prox import (ProxError, ProxResult, RegKind, Regularizer, prox_l1,
                   prox_l2norm)
from .inner import (InnerError, ScheduleKind, ToleranceSchedule,
                    cv_prox_solve, default_stepsizes, tolerance)
from .solvers import (Algorithm, AgentProblem, SolverError, StepSizes,
                      StopRule, Trace, relative_error, run,
                      stepsizes_from_bounds, validate_stepsizes)
from .diagnostics import (CheckReport, DiagnosticsError, MetricMatrices,
                          RateFit, build_metric_matrices, consensus_error,
                          ergodic_averages, fejer_check_trace, h_norm_sq,
                          kkt_residual, monotone_residual_check_trace,
                          rate_fit)
from .bench import (BenchError, ExperimentConfig, ReferenceSolution,
                    compare_tables, config_from_file, config_from_text,
                    reference_solution, run_experiment)

__version__ = "0.1.0"
