"""Mini-batch SGD runner and sweep machinery.

Determinism contract: every run draws all of its randomness from a named
counter-based generator (numpy's Philox, keyed by the run's seed).  The
starting point is drawn first -- uniformly on a sphere of ``init_radius``
around the optimum, unless a fixed ``w0`` is supplied -- then exactly one
batch/noise draw is consumed per update.  Identical inputs therefore give
bitwise-identical records within one installation, and distinct ``(M, seed)``
runs share no state, so they may execute concurrently with results identical
to a sequential loop.

Stopping rule: the loss residual is checked after every update (and once
before the first), and the run stops at the first crossing of ``epsilon``.
There is no patience or smoothing.  Exhausting ``max_updates`` is reported
as a value (``converged=False``), not an exception, so sweeps can proceed;
only a non-finite loss raises.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

from .bounds import BoundParams, bound_params_from_primitives
from .errors import DivergenceError, InputError, PartialResultError, SweepError
from .problems import LOGISTIC, NOISY_QUADRATIC, QUADRATIC, Problem

DEFAULT_MAX_UPDATES = 1_000_000


def make_rng(seed: int) -> np.random.Generator:
    """Counter-based generator for one run (Philox 4x64-10, keyed by seed)."""
    if seed < 0 or seed >= 2**64:
        raise InputError("seed must fit in an unsigned 64-bit integer")
    return np.random.Generator(np.random.Philox(seed))


@dataclass
class SgdConfig:
    """Per-run knobs.  ``w0`` switches off the random-sphere start."""

    eta: float
    epsilon: float
    max_updates: int = DEFAULT_MAX_UPDATES
    minibatch: int = 1
    seed: int = 0
    init_radius: float = 1.0
    w0: np.ndarray | None = None


@dataclass
class RunRecord:
    """Outcome of one run.

    ``n_update`` counts updates actually performed: the first-crossing index
    when ``converged`` is true, ``max_updates`` otherwise.  ``residuals`` is
    the tracked trajectory (index k = residual after k updates) when
    requested and is excluded from equality comparisons.
    """

    minibatch: int
    seed: int
    epsilon: float
    n_update: int
    converged: bool
    final_residual: float
    residuals: np.ndarray | None = field(default=None, compare=False, repr=False)


@dataclass
class MeasuredPoint:
    """Seed-aggregated update count at one mini-batch size."""

    minibatch: int
    mean: float
    std: float
    records: list[RunRecord] = field(repr=False)


def _validate_config(problem: Problem, config: SgdConfig) -> None:
    if not config.eta > 0:
        raise InputError("eta must be positive")
    if not config.epsilon > 0:
        raise InputError("epsilon must be positive")
    if config.max_updates < 1:
        raise InputError("max_updates must be a positive integer")
    if config.minibatch < 1:
        raise InputError("minibatch must be a positive integer")
    if problem.dataset_size is not None and config.minibatch > problem.dataset_size:
        raise InputError(
            f"minibatch {config.minibatch} exceeds dataset size {problem.dataset_size}"
        )
    if config.w0 is None and not config.init_radius > 0:
        raise InputError("init_radius must be positive")


def _initial_point(problem: Problem, config: SgdConfig, rng: np.random.Generator):
    if config.w0 is not None:
        w0 = np.asarray(config.w0, dtype=float)
        if w0.shape != (problem.dimension,):
            raise InputError("w0 must be a vector of length `dimension`")
        return w0.copy()
    direction = rng.standard_normal(problem.dimension)
    norm = np.linalg.norm(direction)
    if norm == 0.0:  # measure-zero; keep the draw count fixed anyway
        direction[0] = 1.0
        norm = 1.0
    return problem.optimum + direction * (config.init_radius / norm)


def sgd_run(problem: Problem, config: SgdConfig, track_residuals: bool = False) -> RunRecord:
    """Run mini-batch SGD until the residual first crosses ``epsilon``.

    Returns a :class:`RunRecord`; a run that exhausts ``max_updates`` is a
    normal return with ``converged=False``.  A non-finite loss raises
    :class:`DivergenceError` carrying the offending update index.
    """
    _validate_config(problem, config)
    rng = make_rng(config.seed)
    w = _initial_point(problem, config, rng)
    res = problem.residual(w)
    if not np.isfinite(res):
        raise DivergenceError(0)
    trajectory = [res] if track_residuals else None
    if res <= config.epsilon:
        return RunRecord(
            config.minibatch, config.seed, config.epsilon, 0, True, res,
            np.asarray(trajectory) if track_residuals else None,
        )
    with np.errstate(over="ignore", invalid="ignore"):  # inf/nan handled below
        for k in range(1, config.max_updates + 1):
            grad = problem.stochastic_gradient(w, config.minibatch, rng)
            w = w - config.eta * grad
            res = problem.residual(w)
            if not np.isfinite(res):
                raise DivergenceError(k)
            if track_residuals:
                trajectory.append(res)
            if res <= config.epsilon:
                return RunRecord(
                    config.minibatch, config.seed, config.epsilon, k, True, res,
                    np.asarray(trajectory) if track_residuals else None,
                )
    return RunRecord(
        config.minibatch, config.seed, config.epsilon, config.max_updates, False, res,
        np.asarray(trajectory) if track_residuals else None,
    )


def scan_first_crossings(problem: Problem, config: SgdConfig, epsilons) -> list[RunRecord]:
    """One trajectory, first-crossing records for several thresholds.

    The trajectory of iterates does not depend on ``epsilon`` (the threshold
    only decides where to stop), so a single pass reproduces exactly what
    separate :func:`sgd_run` calls at each threshold would record.  Records
    come back in the input order of ``epsilons``.
    """
    eps_list = [float(e) for e in epsilons]
    if not eps_list:
        raise InputError("epsilons must be non-empty")
    if any(not e > 0 for e in eps_list):
        raise InputError("every epsilon must be positive")
    if len(set(eps_list)) != len(eps_list):
        raise InputError("epsilons must be distinct")
    probe = dataclasses.replace(config, epsilon=min(eps_list))
    _validate_config(problem, probe)

    pending = sorted(eps_list, reverse=True)  # loosest first
    crossed: dict[float, tuple[int, float]] = {}
    rng = make_rng(config.seed)
    w = _initial_point(problem, probe, rng)
    res = problem.residual(w)
    if not np.isfinite(res):
        raise DivergenceError(0)
    while pending and res <= pending[0]:
        crossed[pending.pop(0)] = (0, res)
    steps = 0
    with np.errstate(over="ignore", invalid="ignore"):  # inf/nan handled below
        while pending and steps < config.max_updates:
            grad = problem.stochastic_gradient(w, config.minibatch, rng)
            w = w - config.eta * grad
            steps += 1
            res = problem.residual(w)
            if not np.isfinite(res):
                raise DivergenceError(steps)
            while pending and res <= pending[0]:
                crossed[pending.pop(0)] = (steps, res)

    records = []
    for eps in eps_list:
        if eps in crossed:
            k, final = crossed[eps]
            records.append(RunRecord(config.minibatch, config.seed, eps, k, True, final))
        else:
            records.append(
                RunRecord(config.minibatch, config.seed, eps, config.max_updates, False, res)
            )
    return records


def measure_n_update(
    problem: Problem, config: SgdConfig, minibatch: int, seeds
) -> MeasuredPoint:
    """Mean and sample std of the update count over seeds at one batch size.

    Raises :class:`PartialResultError` carrying the converged subset if any
    seed fails to converge; the caller decides whether to proceed with it.
    """
    seed_list = list(seeds)
    if not seed_list:
        raise InputError("seeds must be non-empty")
    records, failed = [], []
    for seed in seed_list:
        record = sgd_run(problem, dataclasses.replace(config, minibatch=minibatch, seed=seed))
        (records if record.converged else failed).append(record)
    if failed:
        raise PartialResultError(
            f"{len(failed)} of {len(seed_list)} seeds did not converge at M={minibatch}",
            converged=records,
            failed=failed,
        )
    counts = np.array([r.n_update for r in records], dtype=float)
    std = 0.0 if len(counts) == 1 else float(np.std(counts, ddof=1))
    return MeasuredPoint(minibatch, float(np.mean(counts)), std, records)


def _validate_m_list(m_list) -> list[int]:
    ms = [int(m) for m in m_list]
    if not ms:
        raise InputError("mini-batch list must be non-empty")
    if any(m < 1 for m in ms):
        raise InputError("mini-batch sizes must be positive integers")
    if any(b <= a for a, b in zip(ms, ms[1:])):
        raise InputError("mini-batch list must be strictly increasing")
    return ms


def sweep(problem: Problem, config: SgdConfig, m_list, seeds) -> list[MeasuredPoint]:
    """Measure the update count across a strictly increasing batch-size grid."""
    ms = _validate_m_list(m_list)
    points: list[MeasuredPoint] = []
    for m in ms:
        try:
            points.append(measure_n_update(problem, config, m, seeds))
        except PartialResultError as exc:
            raise SweepError(m, exc, points) from exc
    return points


def sweep_epsilon_grid(
    problem: Problem, config: SgdConfig, m_list, seeds, epsilons
) -> dict[float, list[MeasuredPoint]]:
    """Sweep once, aggregate first crossings for every threshold.

    Equivalent to one :func:`sweep` per epsilon but pays for each trajectory
    only once (each run is walked until its tightest threshold crosses).
    """
    ms = _validate_m_list(m_list)
    seed_list = list(seeds)
    if not seed_list:
        raise InputError("seeds must be non-empty")
    eps_list = [float(e) for e in epsilons]
    result: dict[float, list[MeasuredPoint]] = {e: [] for e in eps_list}
    for m in ms:
        per_eps: dict[float, list[RunRecord]] = {e: [] for e in eps_list}
        for seed in seed_list:
            run_cfg = dataclasses.replace(config, minibatch=m, seed=seed)
            for record in scan_first_crossings(problem, run_cfg, eps_list):
                per_eps[record.epsilon].append(record)
        for eps in eps_list:
            records = per_eps[eps]
            failed = [r for r in records if not r.converged]
            if failed:
                cause = PartialResultError(
                    f"{len(failed)} of {len(records)} seeds did not converge "
                    f"at M={m}, epsilon={eps}",
                    converged=[r for r in records if r.converged],
                    failed=failed,
                )
                raise SweepError(m, cause, result[eps]) from cause
            counts = np.array([r.n_update for r in records], dtype=float)
            std = 0.0 if len(counts) == 1 else float(np.std(counts, ddof=1))
            result[eps].append(MeasuredPoint(m, float(np.mean(counts)), std, records))
    return result


def bound_params_for(problem: Problem, config: SgdConfig) -> BoundParams:
    """Bound parameters matched to a quadratic-kind problem and SGD config.

    Maps the per-sample, per-coordinate ``noise_scale`` to the per-update
    noise magnitude ``noise_scale * sqrt(dimension / minibatch)`` expected
    by the bound, and records ``theta`` so the floor extrapolates in M.
    """
    if problem.kind not in (QUADRATIC, NOISY_QUADRATIC):
        raise InputError("bound parameters are defined for the quadratic kinds only")
    _validate_config(problem, config)
    if config.w0 is not None:
        dist0 = float(np.linalg.norm(np.asarray(config.w0, float) - problem.optimum))
        if dist0 == 0.0:
            raise InputError("w0 coincides with the optimum; dist0 must be positive")
    else:
        dist0 = config.init_radius
    delta0 = 0.5 * problem.curvature * dist0 * dist0
    update_noise = problem.noise_scale * float(
        np.sqrt(problem.dimension / config.minibatch)
    )
    return bound_params_from_primitives(
        config.eta, problem.curvature, update_noise, delta0, dist0,
        minibatch=config.minibatch,
    )


RUNS_HEADER = ["M", "seed", "epsilon", "n_update", "converged", "final_residual"]


def write_runs_csv(path, records) -> None:
    from . import fileio

    fileio.write_csv(
        path,
        RUNS_HEADER,
        (
            (r.minibatch, r.seed, r.epsilon, r.n_update, r.converged, r.final_residual)
            for r in records
        ),
    )


def read_runs_csv(path) -> list[RunRecord]:
    from . import fileio

    records = []
    for lineno, cells in fileio.read_csv(path, RUNS_HEADER):
        records.append(
            RunRecord(
                minibatch=fileio.parse_int(path, lineno, "M", cells[0]),
                seed=fileio.parse_int(path, lineno, "seed", cells[1]),
                epsilon=fileio.parse_float(path, lineno, "epsilon", cells[2]),
                n_update=fileio.parse_int(path, lineno, "n_update", cells[3]),
                converged=fileio.parse_bool(path, lineno, "converged", cells[4]),
                final_residual=fileio.parse_float(path, lineno, "final_residual", cells[5]),
            )
        )
    return records
