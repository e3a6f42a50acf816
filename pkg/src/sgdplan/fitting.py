"""Fitting the inverse relationship between update count and batch size.

The model is ``n(M) = n_inf + alpha / M``: an asymptotic floor plus a noise
term inversely proportional to the mini-batch size.  Fitting is ordinary
least squares against the ``1/M`` regressor, where the model is linear in
both parameters; an optional per-point weight (such as inverse seed
variance) is accepted.  A negative slope estimate is clamped to zero and
flagged -- the refit is then the (weighted) mean -- while a negative
intercept is reported as-is with a flag, since it is a meaningful fit
outcome for some optimizers.

A second stage fits how the recovered parameters move with the target
threshold: log-log regression of ``n_inf`` and ``alpha`` against epsilon,
whose slope is near -1 when the relationship is an inverse law.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import fileio
from .errors import InputError

FLAG_ALPHA_CLAMPED = "alpha-clamped"
FLAG_NEGATIVE_N_INF = "negative-n-inf"


@dataclass
class LawParams:
    """Fitted inverse-law parameters at one loss threshold."""

    n_inf: float
    alpha: float
    r_squared: float
    epsilon: float
    flags: list[str] = field(default_factory=list)

    def predict(self, minibatch) -> float:
        return self.n_inf + self.alpha / np.asarray(minibatch, dtype=float)


@dataclass
class EpsilonLaw:
    """Log-log dependence of the fitted parameters on the loss threshold.

    ``c_*`` are the intercept exponentials, so the fitted curves read
    ``n_inf(eps) = c_ninf * eps**slope_ninf`` and likewise for alpha.
    """

    c_ninf: float
    c_alpha: float
    slope_ninf: float
    slope_alpha: float
    epsilon_grid: list[float]
    warnings: list[str] = field(default_factory=list)


def _weighted_ols(x: np.ndarray, y: np.ndarray, weights: np.ndarray):
    """Return (intercept, slope) minimizing the weighted squared error."""
    wsum = weights.sum()
    xm = float((weights * x).sum() / wsum)
    ym = float((weights * y).sum() / wsum)
    sxx = float((weights * (x - xm) ** 2).sum())
    if sxx == 0.0:
        raise InputError("rank-deficient fit: all mini-batch sizes are identical")
    slope = float((weights * (x - xm) * (y - ym)).sum() / sxx)
    return ym - slope * xm, slope


def _r_squared(y: np.ndarray, fitted: np.ndarray, weights: np.ndarray) -> float:
    wsum = weights.sum()
    ym = float((weights * y).sum() / wsum)
    ss_tot = float((weights * (y - ym) ** 2).sum())
    ss_res = float((weights * (y - fitted) ** 2).sum())
    if ss_tot == 0.0:
        return 1.0
    return 1.0 - ss_res / ss_tot


def fit_inverse_law(points, epsilon: float, weights=None) -> LawParams:
    """Least-squares fit of ``n = n_inf + alpha / M`` to (M, n) points."""
    pts = [(int(m), float(n)) for m, n in points]
    if len(pts) < 2:
        raise InputError("need at least 2 points to fit the inverse law")
    if any(m < 1 for m, _ in pts):
        raise InputError("mini-batch sizes must be positive integers")
    if not epsilon > 0:
        raise InputError("epsilon must be positive")
    if weights is None:
        w = np.ones(len(pts))
    else:
        w = np.asarray(list(weights), dtype=float)
        if w.shape != (len(pts),):
            raise InputError("weights must match the number of points")
        if any(not wi > 0 for wi in w):
            raise InputError("weights must be positive")
    x = np.array([1.0 / m for m, _ in pts])
    y = np.array([n for _, n in pts])

    intercept, slope = _weighted_ols(x, y, w)
    flags = []
    if slope < 0.0:
        # refit with the slope pinned at zero: the weighted mean
        slope = 0.0
        intercept = float((w * y).sum() / w.sum())
        flags.append(FLAG_ALPHA_CLAMPED)
    if intercept < 0.0:
        flags.append(FLAG_NEGATIVE_N_INF)
    fitted = intercept + slope * x
    return LawParams(
        n_inf=intercept,
        alpha=slope,
        r_squared=_r_squared(y, fitted, w),
        epsilon=float(epsilon),
        flags=flags,
    )


def two_point_estimate(
    m1: int, n1: float, m2: int, n2: float, epsilon: float = math.nan
) -> LawParams:
    """Exact two-point solution of the inverse law.

    Solves ``alpha = (n1 - n2) / (1/m1 - 1/m2)`` and ``n_inf = n1 - alpha/m1``.
    Agrees exactly with :func:`fit_inverse_law` on the same two points,
    including the clamping rule for a negative slope.
    """
    if m1 < 1 or m2 < 1:
        raise InputError("mini-batch sizes must be positive integers")
    if m1 == m2:
        raise InputError("the two mini-batch sizes must differ")
    alpha = (float(n1) - float(n2)) / (1.0 / m1 - 1.0 / m2)
    flags = []
    if alpha < 0.0:
        alpha = 0.0
        n_inf = (float(n1) + float(n2)) / 2.0
        flags.append(FLAG_ALPHA_CLAMPED)
        r_squared = 0.0 if n1 != n2 else 1.0
    else:
        n_inf = float(n1) - alpha / m1
        r_squared = 1.0  # exact interpolation
    if n_inf < 0.0:
        flags.append(FLAG_NEGATIVE_N_INF)
    return LawParams(n_inf, alpha, r_squared, float(epsilon), flags)


def fit_epsilon_dependence(fits, r_squared_floor: float = 0.8) -> EpsilonLaw:
    """Log-log regression of fitted parameters against the loss threshold.

    Fits with a non-positive parameter or with ``r_squared`` below the floor
    are excluded and listed in the returned ``warnings``; at least three
    usable grid points are required.
    """
    usable: list[LawParams] = []
    warnings: list[str] = []
    for law in fits:
        if not law.epsilon > 0 or math.isnan(law.epsilon):
            raise InputError("every fit must carry a positive epsilon")
        if law.n_inf <= 0.0 or law.alpha <= 0.0:
            warnings.append(
                f"epsilon={law.epsilon:g}: excluded (non-positive parameter: "
                f"n_inf={law.n_inf:g}, alpha={law.alpha:g})"
            )
        elif law.r_squared < r_squared_floor:
            warnings.append(
                f"epsilon={law.epsilon:g}: excluded "
                f"(r_squared {law.r_squared:.3f} < {r_squared_floor:g})"
            )
        else:
            usable.append(law)
    grid = sorted((law.epsilon for law in usable), reverse=True)
    if len(set(grid)) != len(grid):
        raise InputError("epsilon grid must contain distinct values")
    if len(usable) < 3:
        raise InputError(
            f"need at least 3 usable epsilon grid points, have {len(usable)} "
            f"({len(warnings)} excluded)"
        )
    usable.sort(key=lambda law: -law.epsilon)
    log_eps = np.log([law.epsilon for law in usable])
    ones = np.ones(len(usable))
    icpt_n, slope_n = _weighted_ols(log_eps, np.log([law.n_inf for law in usable]), ones)
    icpt_a, slope_a = _weighted_ols(log_eps, np.log([law.alpha for law in usable]), ones)
    return EpsilonLaw(
        c_ninf=math.exp(icpt_n),
        c_alpha=math.exp(icpt_a),
        slope_ninf=slope_n,
        slope_alpha=slope_a,
        epsilon_grid=[law.epsilon for law in usable],
        warnings=warnings,
    )


def aggregate_runs(records):
    """Group converged run records into per-threshold (M, mean, std, count) rows.

    Returns ``{epsilon: [(M, mean n_update, std, count), ...]}`` with rows in
    increasing M order.  Non-converged records are skipped: they carry no
    first-crossing count.
    """
    buckets: dict[float, dict[int, list[int]]] = {}
    for record in records:
        if not record.converged:
            continue
        buckets.setdefault(record.epsilon, {}).setdefault(record.minibatch, []).append(
            record.n_update
        )
    out = {}
    for eps, per_m in sorted(buckets.items()):
        rows = []
        for m in sorted(per_m):
            counts = np.asarray(per_m[m], dtype=float)
            std = 0.0 if len(counts) == 1 else float(np.std(counts, ddof=1))
            rows.append((m, float(np.mean(counts)), std, len(counts)))
        out[eps] = rows
    return out


def law_to_dict(law: LawParams) -> dict:
    return {
        "n_inf": law.n_inf,
        "alpha": law.alpha,
        "r_squared": law.r_squared,
        "epsilon": law.epsilon,
        "flags": list(law.flags),
    }


def write_law_json(path, law: LawParams) -> None:
    fileio.write_json(path, law_to_dict(law))


def read_law_json(path) -> LawParams:
    payload = fileio.read_json(path)
    try:
        return LawParams(
            n_inf=float(payload["n_inf"]),
            alpha=float(payload["alpha"]),
            r_squared=float(payload["r_squared"]),
            epsilon=float(payload["epsilon"]),
            flags=[str(f) for f in payload.get("flags", [])],
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{path}: malformed law file ({exc})") from exc
