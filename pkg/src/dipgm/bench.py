"""Experiment orchestration: declarative configs, centralized reference
solutions, trace persistence as CSV, and cross-run comparison tables.

Config grammar (flat, declarative):
    one ``key = value`` pair per line; keys are dotted section paths
    (``run.max_iters``); ``#`` starts a comment; blank lines are ignored;
    duplicate keys and unknown keys are errors. Values are parsed by the
    declared type of the key: int, float, bool (``true``/``false``),
    string, or a comma-separated list.
"""

from __future__ import annotations

import csv
import io
import os
import time
from dataclasses import dataclass, field, fields

import numpy as np

from .diagnostics import build_metric_matrices, kkt_residual_series
from .inner import ScheduleKind, ToleranceSchedule, cv_prox_solve, default_stepsizes
from .model import (LossKind, SmoothLoss, lipschitz_bound, partition,
                    synthetic_dataset)
from .prox import RegKind, Regularizer, prox_l1, prox_l2norm
from .solvers import (Algorithm, AgentProblem, StopRule, StepSizes,
                      stepsizes_from_bounds, run)
from .topology import (Graph, generate_random_connected_graph,
                       metropolis_hastings_weights, validate_mixing)

ENV_OUTPUT_ROOT = "DIPGM_OUTPUT_ROOT"

TRACE_COLUMNS = ["k", "relative_error", "consensus_error", "kkt_residual",
                 "d_norm_total", "inner_iterations", "wall_time"]
SUMMARY_COLUMNS = ["experiment", "algorithm", "schedule", "outer_iterations",
                   "total_inner_iterations", "final_relative_error",
                   "reached_target", "diverged", "wall_time"]
TIMING_COLUMNS = frozenset({"wall_time"})


class BenchError(RuntimeError):
    pass


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


# ---------------------------------------------------------------------------
# configuration


def parse_config(text: str) -> dict:
    """Parse the flat key-value grammar into a string-to-string mapping."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise BenchError(f"config line {lineno}: expected 'key = value'")
        key, value = line.split("=", 1)
        key, value = key.strip(), value.strip()
        if not key:
            raise BenchError(f"config line {lineno}: empty key")
        if key in out:
            raise BenchError(f"config line {lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def _as_bool(key: str, value: str) -> bool:
    if value.lower() in ("true", "yes", "1"):
        return True
    if value.lower() in ("false", "no", "0"):
        return False
    raise BenchError(f"{key}: expected a boolean, got {value!r}")


@dataclass
class ExperimentConfig:
    """Typed view of a config file; every field has a documented key."""

    experiment_id: str = "experiment"
    output_dir: str = "results"
    seed: int = 0

    n_agents: int = 10
    connectivity_ratio: float = 0.5
    graph_seed: int = 0
    edge_list_path: str | None = None

    loss_kind: LossKind = LossKind.LINEAR
    n_features: int = 20
    samples_per_agent: int = 30
    noise_std: float = 0.1
    data_seed: int = 0

    reg_kind: RegKind = RegKind.L1
    nu1: float = 0.01
    nu2: float = 1.0
    d_rows: int = 10
    d_seed: int = 0
    d_csv_path: str | None = None

    tau_frac: float = 1.99
    tau_beta: float = 0.5
    shared_tau: bool = False
    unscaled_gram_L: bool = False
    divergence_demo: bool = False

    algorithms: list = field(default_factory=lambda: [Algorithm.DIPGM])
    schedules: list = field(default_factory=lambda: ["constant"])
    eps0: float = 1e-10
    max_iters: int = 5000
    rel_err_target: float | None = 1e-5
    diagnostics: bool = False

    inner_t1: float | None = None
    inner_t2: float | None = None
    inner_max_iters: int = 100_000
    inner_warm_start: bool = False

    reference_tol: float = 1e-10


_CONFIG_KEYS = {
    "experiment.id": ("experiment_id", str),
    "experiment.output_dir": ("output_dir", str),
    "experiment.seed": ("seed", int),
    "graph.n_agents": ("n_agents", int),
    "graph.connectivity_ratio": ("connectivity_ratio", float),
    "graph.seed": ("graph_seed", int),
    "graph.edge_list": ("edge_list_path", str),
    "data.kind": ("loss_kind", LossKind),
    "data.n_features": ("n_features", int),
    "data.samples_per_agent": ("samples_per_agent", int),
    "data.noise_std": ("noise_std", float),
    "data.seed": ("data_seed", int),
    "reg.kind": ("reg_kind", RegKind),
    "reg.nu1": ("nu1", float),
    "reg.nu2": ("nu2", float),
    "reg.d_rows": ("d_rows", int),
    "reg.d_seed": ("d_seed", int),
    "reg.d_csv": ("d_csv_path", str),
    "steps.tau_frac": ("tau_frac", float),
    "steps.tau_beta": ("tau_beta", float),
    "steps.shared_tau": ("shared_tau", bool),
    "steps.unscaled_gram_L": ("unscaled_gram_L", bool),
    "steps.divergence_demo": ("divergence_demo", bool),
    "run.algorithms": ("algorithms", "algorithms"),
    "run.schedules": ("schedules", "schedules"),
    "run.eps0": ("eps0", float),
    "run.max_iters": ("max_iters", int),
    "run.rel_err_target": ("rel_err_target", float),
    "run.diagnostics": ("diagnostics", bool),
    "inner.t1": ("inner_t1", float),
    "inner.t2": ("inner_t2", float),
    "inner.max_iters": ("inner_max_iters", int),
    "inner.warm_start": ("inner_warm_start", bool),
    "reference.tol": ("reference_tol", float),
}

SCHEDULE_NAMES = frozenset(
    [k.value for k in ScheduleKind] + ["exact"])


def config_from_mapping(raw: dict) -> ExperimentConfig:
    cfg = ExperimentConfig()
    for key, value in raw.items():
        if key not in _CONFIG_KEYS:
            raise BenchError(f"unknown config key {key!r}")
        attr, kind = _CONFIG_KEYS[key]
        if kind is bool:
            parsed = _as_bool(key, value)
        elif kind == "algorithms":
            try:
                parsed = [Algorithm(tok.strip()) for tok in value.split(",") if tok.strip()]
            except ValueError as exc:
                raise BenchError(f"{key}: {exc}") from exc
        elif kind == "schedules":
            parsed = [tok.strip() for tok in value.split(",") if tok.strip()]
            for tok in parsed:
                if tok not in SCHEDULE_NAMES:
                    raise BenchError(f"{key}: unknown schedule {tok!r}")
        else:
            try:
                parsed = kind(value)
            except ValueError as exc:
                raise BenchError(f"{key}: cannot parse {value!r}") from exc
        setattr(cfg, attr, parsed)
    if not cfg.algorithms or not cfg.schedules:
        raise BenchError("need at least one algorithm and one schedule")
    if cfg.edge_list_path and not os.path.exists(cfg.edge_list_path):
        raise BenchError(f"edge list file not found: {cfg.edge_list_path}")
    if cfg.d_csv_path and not os.path.exists(cfg.d_csv_path):
        raise BenchError(f"D matrix file not found: {cfg.d_csv_path}")
    return cfg


def config_from_text(text: str) -> ExperimentConfig:
    return config_from_mapping(parse_config(text))


def config_from_file(path: str) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return config_from_text(fh.read())


def config_to_text(cfg: ExperimentConfig) -> str:
    """Serialize back to the flat grammar (round-trips through parsing)."""
    by_attr = {attr: key for key, (attr, _) in _CONFIG_KEYS.items()}
    lines = []
    for f in fields(cfg):
        value = getattr(cfg, f.name)
        if value is None:
            continue
        key = by_attr[f.name]
        if f.name == "algorithms":
            text = ",".join(a.value for a in value)
        elif f.name == "schedules":
            text = ",".join(value)
        elif isinstance(value, bool):
            text = "true" if value else "false"
        elif isinstance(value, (LossKind, RegKind)):
            text = value.value
        else:
            text = _fmt(value)
        lines.append(f"{key} = {text}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# problem assembly


@dataclass
class ProblemBundle:
    graph: Graph
    mixing: object
    problems: list
    L: np.ndarray
    sizes: StepSizes
    reg: Regularizer


def build_problem(cfg: ExperimentConfig) -> ProblemBundle:
    """Materialize the graph, data shards, regularizer, and stepsizes."""
    if cfg.edge_list_path:
        with open(cfg.edge_list_path, "r", encoding="utf-8") as fh:
            graph = Graph.from_edge_list(fh.read())
        if graph.n_agents != cfg.n_agents:
            raise BenchError(
                f"edge list has {graph.n_agents} agents, config says {cfg.n_agents}")
    else:
        graph = generate_random_connected_graph(
            cfg.n_agents, cfg.connectivity_ratio, cfg.graph_seed)
    mixing = metropolis_hastings_weights(graph)

    dataset = synthetic_dataset(
        cfg.loss_kind, cfg.n_agents * cfg.samples_per_agent, cfg.n_features,
        noise_std=cfg.noise_std, seed=cfg.data_seed)
    shards = partition(dataset, cfg.n_agents, cfg.data_seed)

    if cfg.reg_kind == RegKind.GENERALIZED_LASSO:
        if cfg.d_csv_path:
            D = np.loadtxt(cfg.d_csv_path, delimiter=",", ndmin=2)
        else:
            D = np.random.default_rng(cfg.d_seed).standard_normal(
                (cfg.d_rows, cfg.n_features))
        reg = Regularizer(cfg.reg_kind, cfg.nu1, D=D)
    else:
        reg = Regularizer(cfg.reg_kind, cfg.nu1)

    loss = SmoothLoss(cfg.loss_kind, l2_weight=cfg.nu2)
    L = np.array([lipschitz_bound(loss, s, cfg.unscaled_gram_L)
                  for s in shards])
    problems = [AgentProblem(loss=loss, shard=s, reg=reg, L=L[i])
                for i, s in enumerate(shards)]
    sizes = stepsizes_from_bounds(L, cfg.tau_frac, cfg.tau_beta,
                                  shared_tau=cfg.shared_tau)
    return ProblemBundle(graph=graph, mixing=mixing, problems=problems,
                         L=L, sizes=sizes, reg=reg)


def validate_config(cfg: ExperimentConfig) -> list:
    """Dry-run assembly plus every mixing and stepsize check; returns
    human-readable problem descriptions (empty = valid)."""
    issues = []
    try:
        bundle = build_problem(cfg)
    except Exception as exc:  # surface assembly failures as findings
        return [f"assembly failed: {exc}"]
    checks = validate_mixing(bundle.mixing.W, bundle.graph)
    for c in checks:
        if not c.passed:
            issues.append(f"mixing check {c.name} failed (violation {c.violation:g})")
    if not cfg.divergence_demo:
        from .solvers import validate_stepsizes
        for alg in cfg.algorithms:
            for v in validate_stepsizes(alg, bundle.L, bundle.sizes, bundle.mixing):
                issues.append(f"{alg.value}: {v.detail}")
    return issues


# ---------------------------------------------------------------------------
# centralized reference


@dataclass
class ReferenceSolution:
    x_star: np.ndarray
    objective: float
    achieved_kkt: float
    solver: str
    iterations: int


def _total_grad(problems, x):
    return sum(p.grad(x) for p in problems)


def _total_value(problems, x):
    smooth = sum(p.value(x) for p in problems)
    return smooth + sum(p.reg.value(x) for p in problems)


def _total_reg(problems):
    """Collapse per-agent regularizers into one (they must share structure)."""
    kinds = {p.reg.kind for p in problems}
    if len(kinds) > 1:
        raise BenchError("agents disagree on regularizer kind")
    kind = kinds.pop()
    weight = float(sum(p.reg.nu1 for p in problems))
    D = None
    if kind == RegKind.GENERALIZED_LASSO:
        D = problems[0].reg.D
        for p in problems[1:]:
            if not np.array_equal(p.reg.D, D):
                raise BenchError("agents disagree on the D matrix")
    return kind, weight, D


def _total_prox(kind, weight, D, s, t, tol=1e-13):
    theta = t * weight
    if kind == RegKind.L1:
        return prox_l1(s, theta)
    if kind == RegKind.L2NORM:
        return prox_l2norm(s, theta)
    return cv_prox_solve(D, s, theta, tol=tol).point


def _prox_grad_residual(problems, kind, weight, D, x, t):
    """Norm of the proximal-gradient mapping at x: the KKT measure."""
    step = _total_prox(kind, weight, D, x - t * _total_grad(problems, x), t)
    return float(np.linalg.norm(x - step)) / t


def _dual_certificate_residual(problems, weight, D, x, w,
                               kink_tol: float = 1e-10):
    """||grad F(x) + D^T xi|| for an admissible xi in weight*sub||.||_1(Dx).

    xi is the sign selection off kinks and the clipped dual iterate at
    kinks; a valid upper bound on the true KKT residual, and far cheaper
    than a proximal-gradient mapping when the prox has no closed form.
    """
    z = D @ x
    xi = np.where(np.abs(z) > kink_tol, weight * np.sign(z),
                  np.clip(w, -weight, weight))
    return float(np.linalg.norm(_total_grad(problems, x) + D.T @ xi))


def _fista(problems, kind, weight, D, tol, max_iters):
    L_tot = float(sum(p.L for p in problems))
    t = 1.0 / L_tot
    n = problems[0].shard.A.shape[1]
    x = np.zeros(n)
    y = x.copy()
    theta_m = 1.0
    check_every = 10
    for it in range(1, max_iters + 1):
        x_new = _total_prox(kind, weight, D, y - t * _total_grad(problems, y), t)
        theta_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * theta_m ** 2))
        momentum = (theta_m - 1.0) / theta_new
        # restart the momentum when it points uphill
        if float(np.dot(y - x_new, x_new - x)) > 0:
            theta_new, momentum = 1.0, 0.0
        y = x_new + momentum * (x_new - x)
        x, theta_m = x_new, theta_new
        if it % check_every == 0 or it == max_iters:
            res = _prox_grad_residual(problems, kind, weight, D, x, t)
            if res <= tol:
                return x, res, it
    raise BenchError(
        f"accelerated proximal gradient hit {max_iters} iterations "
        f"(residual {_prox_grad_residual(problems, kind, weight, D, x, t):.3g})")


def _centralized_cv(problems, kind, weight, D, tol, max_iters):
    """Full-problem primal-dual splitting; handles every regularizer kind
    by dualizing g (with K = D for the generalized lasso, K = I otherwise)."""
    L_tot = float(sum(p.L for p in problems))
    n = problems[0].shard.A.shape[1]
    if kind == RegKind.GENERALIZED_LASSO:
        K = D
        def prox_simple(v, th):
            return prox_l1(v, th)
    else:
        K = np.eye(n)
        prox_simple = prox_l1 if kind == RegKind.L1 else prox_l2norm
    k_norm_sq = float(np.linalg.norm(K, 2)) ** 2
    t2 = 1.0
    t1 = 0.9 / (L_tot / 2.0 + t2 * k_norm_sq)
    x = np.zeros(n)
    w = np.zeros(K.shape[0])
    check_every = 10
    res = float("inf")
    for it in range(1, max_iters + 1):
        x_new = x - t1 * (_total_grad(problems, x) + K.T @ w)
        v = w + t2 * (K @ (2.0 * x_new - x))
        w = v - t2 * prox_simple(v / t2, weight / t2)
        x = x_new
        if it % check_every == 0 or it == max_iters:
            if kind == RegKind.GENERALIZED_LASSO:
                res = _dual_certificate_residual(problems, weight, K, x, w)
            else:
                # closed-form prox: the proximal-gradient mapping is cheap
                res = _prox_grad_residual(problems, kind, weight, D, x,
                                          1.0 / L_tot)
            if res <= tol:
                return x, res, it
    raise BenchError(
        f"centralized primal-dual solver hit {max_iters} iterations "
        f"(residual {res:.3g})")


def reference_solution(problems: list, tol: float = 1e-10,
                       method: str = "auto",
                       max_iters: int = 2_000_000) -> ReferenceSolution:
    """High-accuracy minimizer of the aggregate problem sum_i f_i + g_i.

    ``auto`` uses accelerated proximal gradient when the aggregate
    regularizer has a closed-form prox and the primal-dual splitting
    otherwise; both are deterministic and stop at KKT residual <= tol.
    """
    if tol <= 0:
        raise BenchError("tol must be positive")
    kind, weight, D = _total_reg(problems)
    if method == "auto":
        method = "cv" if kind == RegKind.GENERALIZED_LASSO else "fista"
    if method == "fista":
        x, res, iters = _fista(problems, kind, weight, D, tol, max_iters)
        name = "accelerated_proximal_gradient"
    elif method == "cv":
        x, res, iters = _centralized_cv(problems, kind, weight, D, tol, max_iters)
        name = "centralized_primal_dual"
    else:
        raise BenchError(f"unknown reference method {method!r}")
    return ReferenceSolution(x_star=x, objective=_total_value(problems, x),
                             achieved_kkt=res, solver=name, iterations=iters)


# ---------------------------------------------------------------------------
# experiment runner


def _make_schedule(name: str, eps0: float) -> ToleranceSchedule | None:
    if name == "exact":
        return None
    return ToleranceSchedule(ScheduleKind(name), eps0)


def trace_to_csv(trace, header_meta: dict) -> str:
    """Fixed-column CSV with '#' metadata lines (seeds, config echo)."""
    buf = io.StringIO()
    for key in sorted(header_meta):
        buf.write(f"# {key} = {_fmt(header_meta[key])}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TRACE_COLUMNS)
    for rec in trace.records:
        d_total = float(np.sqrt(np.sum(np.square(rec.d_norms))))
        writer.writerow([
            str(rec.k), _fmt(rec.relative_error), _fmt(rec.consensus_error),
            _fmt(rec.kkt_residual), _fmt(d_total),
            str(rec.inner_iterations), _fmt(rec.wall_time)])
    return buf.getvalue()


def strip_timing_columns(csv_text: str) -> str:
    """Drop wall-time columns and lines; the determinism-comparison view."""
    out_lines = []
    timing_idx = None
    for line in csv_text.splitlines():
        if line.startswith("#"):
            out_lines.append(line)
            continue
        cells = line.split(",")
        if timing_idx is None:
            timing_idx = [i for i, c in enumerate(cells) if c in TIMING_COLUMNS]
        kept = [c for i, c in enumerate(cells) if i not in timing_idx]
        out_lines.append(",".join(kept))
    return "\n".join(out_lines) + "\n"


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    reference: ReferenceSolution
    traces: dict            # (algorithm value, schedule name) -> Trace
    summary_rows: list      # dicts with SUMMARY_COLUMNS keys
    trace_paths: dict
    summary_path: str | None


def _summary_row(cfg, alg, schedule_name, trace, wall) -> dict:
    final_rel = trace.records[-1].relative_error if trace.records else float("nan")
    return {
        "experiment": cfg.experiment_id,
        "algorithm": alg.value,
        "schedule": schedule_name,
        "outer_iterations": trace.outer_iterations,
        "total_inner_iterations": trace.total_inner_iterations,
        "final_relative_error": final_rel,
        "reached_target": trace.reached_target,
        "diverged": trace.diverged,
        "wall_time": wall,
    }


def summary_to_csv(rows: list, header_meta: dict) -> str:
    buf = io.StringIO()
    for key in sorted(header_meta):
        buf.write(f"# {key} = {_fmt(header_meta[key])}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SUMMARY_COLUMNS)
    for row in rows:
        writer.writerow([_fmt(row[c]) for c in SUMMARY_COLUMNS])
    return buf.getvalue()


def output_root(cfg: ExperimentConfig) -> str:
    return os.environ.get(ENV_OUTPUT_ROOT, cfg.output_dir)


def run_experiment(cfg: ExperimentConfig, write_files: bool = True) -> ExperimentResult:
    """Run every (algorithm x schedule) cell and persist traces + summary.

    Deterministic for a fixed config: everything except the wall-time
    columns is reproduced byte for byte on re-runs.
    """
    issues = validate_config(cfg)
    if issues and not cfg.divergence_demo:
        raise BenchError("invalid config: " + "; ".join(issues))
    bundle = build_problem(cfg)
    ref = reference_solution(bundle.problems, tol=cfg.reference_tol)
    meta = {
        "experiment": cfg.experiment_id,
        "seed.graph": cfg.graph_seed,
        "seed.data": cfg.data_seed,
        "seed.d_matrix": cfg.d_seed,
        "seed.experiment": cfg.seed,
        "reference.solver": ref.solver,
        "reference.kkt": ref.achieved_kkt,
    }
    inner_opts = {
        "t1": cfg.inner_t1, "t2": cfg.inner_t2,
        "max_iters": cfg.inner_max_iters,
        "warm_start_dual": cfg.inner_warm_start,
    }
    mm = None
    if cfg.diagnostics:
        mm = build_metric_matrices(bundle.sizes.tau, bundle.sizes.beta,
                                   bundle.mixing.V, bundle.L)

    out_dir = output_root(cfg)
    if write_files:
        os.makedirs(out_dir, exist_ok=True)

    traces, trace_paths, rows = {}, {}, []
    for alg in cfg.algorithms:
        for sched_name in cfg.schedules:
            schedule = _make_schedule(sched_name, cfg.eps0)
            stop = StopRule(max_iters=cfg.max_iters,
                            rel_err_target=cfg.rel_err_target,
                            reference=ref.x_star)
            t_start = time.perf_counter()
            try:
                trace = run(alg, bundle.problems, bundle.mixing, bundle.sizes,
                            schedule, stop,
                            diagnostic=cfg.diagnostics,
                            keep_arrays=cfg.diagnostics,
                            inner_opts=inner_opts,
                            allow_invalid_stepsizes=cfg.divergence_demo)
            except Exception as exc:
                raise BenchError(
                    f"cell {alg.value}/{sched_name} failed: {exc}") from exc
            wall = time.perf_counter() - t_start
            if cfg.diagnostics and trace.arrays and trace.arrays.Alpha:
                kkt = kkt_residual_series(mm, trace)
                for rec, val in zip(trace.records[1:], kkt):
                    rec.kkt_residual = float(val)
            cell = (alg.value, sched_name)
            traces[cell] = trace
            rows.append(_summary_row(cfg, alg, sched_name, trace, wall))
            if write_files:
                cell_meta = dict(meta, algorithm=alg.value, schedule=sched_name)
                path = os.path.join(out_dir, f"trace_{alg.value}_{sched_name}.csv")
                with open(path, "w", encoding="utf-8") as fh:
                    fh.write(trace_to_csv(trace, cell_meta))
                trace_paths[cell] = path

    summary_path = None
    if write_files:
        summary_path = os.path.join(out_dir, "summary.csv")
        with open(summary_path, "w", encoding="utf-8") as fh:
            fh.write(summary_to_csv(rows, meta))
    return ExperimentResult(config=cfg, reference=ref, traces=traces,
                            summary_rows=rows, trace_paths=trace_paths,
                            summary_path=summary_path)


# ---------------------------------------------------------------------------
# comparisons


def load_summary_csv(path: str) -> list:
    """Read a summary CSV back into row dicts (metadata lines skipped)."""
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    reader = csv.DictReader(lines)
    for raw in reader:
        row = dict(raw)
        for key in ("outer_iterations", "total_inner_iterations"):
            row[key] = int(row[key])
        for key in ("final_relative_error", "wall_time"):
            row[key] = float(row[key])
        for key in ("reached_target", "diverged"):
            row[key] = row[key] == "True"
        rows.append(row)
    return rows


def compare_tables(summaries: list) -> tuple:
    """Merge summary row lists into one comparison (text table, CSV).

    All summaries must describe the same experiment id; the row with the
    fewest total inner iterations is starred (ties star every minimum).
    """
    if len(summaries) < 2:
        raise BenchError("need at least two summaries to compare")
    rows = [row for s in summaries for row in s]
    if not rows:
        raise BenchError("empty summaries")
    ids = {row["experiment"] for row in rows}
    if len(ids) > 1:
        raise BenchError(f"summaries describe different experiments: {sorted(ids)}")
    best = min(row["total_inner_iterations"] for row in rows)
    header = ["algorithm", "schedule", "inner_iter", "outer_iter",
              "final_rel_err", "best"]
    table = []
    for row in rows:
        table.append([
            row["algorithm"], row["schedule"],
            str(row["total_inner_iterations"]), str(row["outer_iterations"]),
            f"{row['final_relative_error']:.3e}",
            "*" if row["total_inner_iterations"] == best else ""])
    widths = [max(len(h), *(len(r[i]) for r in table))
              for i, h in enumerate(header)]
    def fmt_line(cells):
        return "  ".join(c.ljust(w) for c, w in zip(cells, widths)).rstrip()
    text = "\n".join([fmt_line(header)] + [fmt_line(r) for r in table]) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for r in table:
        writer.writerow(r)
    return text, buf.getvalue()
