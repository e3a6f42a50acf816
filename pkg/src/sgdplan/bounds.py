"""Convergence bounds for noisy gradient descent on smooth convex objectives.

The model analyzed here is the update ``w <- w - eta * (grad f(w) + xi)``
with ``E[xi] = 0`` and ``E[|xi|^2] <= phi^2``.  Everything is expressed
through three reduced parameters::

    lam    = eta * (1 - eta * L / 2) / dist0**2     (contraction rate)
    sigma  = sqrt(eta**2 * L * phi**2 / (2 * lam))  (noise floor)
    delta0 = f(w0) - f(w*)                          (initial residual)

The residual after ``k`` updates obeys

    delta_k <= 1 / ((1 + 2*lam*sigma)**k * (1/(delta0 - sigma) + 1/(2*sigma))
                    - 1/(2*sigma)) + sigma

which decreases monotonically to ``sigma`` and, as ``sigma -> 0``, collapses
to the noise-free limit ``1 / (1/delta0 + lam*k)``.  Inverting the bound for
a target residual ``epsilon > sigma`` gives a lower bound on the number of
updates, either exactly or via a small-``sigma`` expansion whose value is
affine in ``1/minibatch`` once ``sigma**2`` is tied to the batch size through
``sigma**2 = theta / minibatch``.

Cancellation-prone expressions are evaluated in rearranged forms
(``expm1``/``log1p``), so the ``k = 0`` identity and the small-``sigma``
limit hold to full floating-point accuracy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import fileio
from .errors import InputError

_EXP_OVERFLOW = 700.0  # beyond this, exp() overflows and the floor is reached


@dataclass
class BoundParams:
    """Reduced parameters (lam, sigma, delta0, theta) of the bound.

    ``theta`` is the batch-size coupling constant: ``sigma**2 = theta / M``
    for the batch size ``M`` the noise was measured at.
    """

    lam: float
    sigma: float
    delta0: float
    theta: float = 0.0

    def __post_init__(self):
        if not self.lam > 0:
            raise InputError("lam must be positive")
        if self.sigma < 0:
            raise InputError("sigma must be nonnegative")
        if not self.delta0 > 0:
            raise InputError("delta0 must be positive")
        if self.delta0 < self.sigma:
            raise InputError(
                f"delta0 ({self.delta0}) must be >= sigma ({self.sigma}): "
                "the start cannot sit below the noise floor"
            )
        if self.lam * (self.delta0 + self.sigma) > 1.0 + 1e-12:
            raise InputError(
                "lam * (delta0 + sigma) must not exceed 1 "
                f"(got {self.lam * (self.delta0 + self.sigma)})"
            )
        if self.theta < 0:
            raise InputError("theta must be nonnegative")


def bound_params_from_primitives(
    eta: float,
    lipschitz: float,
    noise_std: float,
    delta0: float,
    dist0: float,
    minibatch: int = 1,
) -> BoundParams:
    """Build :class:`BoundParams` from step size, smoothness, and noise level.

    ``noise_std`` is the standard deviation of the per-update gradient noise
    (``sqrt(E[|xi|^2])``).  If it was measured at batch size ``minibatch``,
    pass that size so ``theta`` extrapolates the floor to other batches via
    ``sigma**2 = theta / M``.
    """
    if not eta > 0:
        raise InputError("eta must be positive")
    if not lipschitz > 0:
        raise InputError("lipschitz must be positive")
    if noise_std < 0:
        raise InputError("noise_std must be nonnegative")
    if not dist0 > 0:
        raise InputError("dist0 must be positive")
    if minibatch < 1:
        raise InputError("minibatch must be a positive integer")
    if eta * lipschitz / 2.0 >= 1.0:
        raise InputError(
            f"step size too large: eta * lipschitz / 2 = {eta * lipschitz / 2.0} >= 1"
        )
    lam = eta * (1.0 - eta * lipschitz / 2.0) / (dist0 * dist0)
    sigma_sq = eta * eta * lipschitz * noise_std * noise_std / (2.0 * lam)
    sigma = math.sqrt(sigma_sq)
    return BoundParams(lam=lam, sigma=sigma, delta0=delta0, theta=sigma_sq * minibatch)


def residual_bound(k: int, bp: BoundParams) -> float:
    """Upper bound on the residual after ``k`` noisy updates.

    Requires a strictly positive noise floor; with ``sigma = 0`` the bound
    degenerates and callers must use :func:`gd_limit` instead.
    """
    if k < 0:
        raise InputError("k must be a nonnegative integer")
    if bp.sigma == 0.0:
        raise InputError("sigma is zero: the noise-free form is gd_limit(k, lam, delta0)")
    if bp.delta0 == bp.sigma:
        raise InputError("delta0 equals sigma: bound denominator degenerates")
    if k == 0:
        return bp.delta0  # telescoped base case: the bound is tight here
    exponent = k * math.log1p(2.0 * bp.lam * bp.sigma)
    if exponent > _EXP_OVERFLOW:
        return bp.sigma
    growth = math.expm1(exponent)  # (1 + 2*lam*sigma)**k - 1, accurately
    denom = (growth + 1.0) / (bp.delta0 - bp.sigma) + growth / (2.0 * bp.sigma)
    return 1.0 / denom + bp.sigma


def gd_limit(k: int, lam: float, delta0: float) -> float:
    """Noise-free residual bound ``1 / (1/delta0 + lam*k)``."""
    if k < 0:
        raise InputError("k must be a nonnegative integer")
    if not lam > 0:
        raise InputError("lam must be positive")
    if not delta0 > 0:
        raise InputError("delta0 must be positive")
    return delta0 / (1.0 + lam * k * delta0)


def n_update_lower_bound_exact(epsilon: float, bp: BoundParams) -> float:
    """Exact inversion of :func:`residual_bound` for a target residual.

    The result is the smallest update count the bound allows for reaching
    ``epsilon``; it may be negative when the start is already closer than
    the target.
    """
    if not epsilon > 0:
        raise InputError("epsilon must be positive")
    if bp.sigma == 0.0:
        raise InputError(
            "sigma is zero: invert gd_limit instead, or use the Taylor form with theta = 0"
        )
    if epsilon <= bp.sigma:
        raise InputError(
            f"target epsilon ({epsilon}) is at or below the noise floor ({bp.sigma}): unreachable"
        )
    if bp.delta0 == bp.sigma:
        raise InputError("delta0 equals sigma: bound denominator degenerates")
    numer = math.log1p(2.0 * bp.sigma / (epsilon - bp.sigma)) + math.log1p(
        -2.0 * bp.sigma / (bp.delta0 + bp.sigma)
    )
    return numer / math.log1p(2.0 * bp.lam * bp.sigma)


@dataclass
class TaylorBound:
    """Small-noise expansion of the update-count bound, affine in 1/M."""

    value: float
    n_inf: float
    alpha: float


def n_update_lower_bound_taylor(
    epsilon: float,
    lam: float,
    delta0: float,
    theta: float,
    minibatch: int,
) -> TaylorBound:
    """Small-``sigma`` expansion of the exact bound with ``sigma**2 = theta/M``.

    Returns the bound value together with its decomposition
    ``value = n_inf + alpha / minibatch``: a floor independent of the batch
    size plus a noise term inversely proportional to it.
    """
    if not epsilon > 0:
        raise InputError("epsilon must be positive")
    if not lam > 0:
        raise InputError("lam must be positive")
    if not delta0 > 0:
        raise InputError("delta0 must be positive")
    if epsilon >= delta0:
        raise InputError("epsilon must be below delta0 for the expansion to apply")
    if theta < 0:
        raise InputError("theta must be nonnegative")
    if minibatch < 1:
        raise InputError("minibatch must be a positive integer")
    n_inf = (1.0 / lam) * (1.0 / epsilon - 1.0 / delta0)
    bracket = 1.0 / epsilon**2 + 1.0 / delta0**2 + 1.0 / (epsilon * delta0)
    alpha = n_inf * theta * bracket / 3.0
    return TaylorBound(value=n_inf + alpha / minibatch, n_inf=n_inf, alpha=alpha)


@dataclass
class DominanceReport:
    """Result of comparing the noisy bound against the noise-free limit."""

    ok: bool
    n_violations: int
    min_gap: float
    min_gap_k: int
    gaps: np.ndarray = field(repr=False, compare=False, default=None)


def check_dominance(lam: float, sigma: float, delta0: float, k_max: int) -> DominanceReport:
    """Verify ``residual_bound(k) >= gd_limit(k)`` for ``k = 0..k_max``.

    Violations beyond a relative tolerance of ``1e-12 * delta0`` are counted
    and reported, never raised.
    """
    if k_max < 0:
        raise InputError("k_max must be a nonnegative integer")
    if not sigma > 0:
        raise InputError("sigma must be positive (use gd_limit directly otherwise)")
    bp = BoundParams(lam=lam, sigma=sigma, delta0=delta0)
    gaps = np.empty(k_max + 1)
    for k in range(k_max + 1):
        gaps[k] = residual_bound(k, bp) - gd_limit(k, lam, delta0)
    tol = 1e-12 * delta0
    violations = int(np.sum(gaps < -tol))
    idx = int(np.argmin(gaps))
    return DominanceReport(
        ok=violations == 0,
        n_violations=violations,
        min_gap=float(gaps[idx]),
        min_gap_k=idx,
        gaps=gaps,
    )


def write_bound_csv(path, ks, bound_values, limit_values) -> None:
    fileio.write_csv(
        path,
        ["k", "residual_bound", "gd_limit"],
        zip(ks, bound_values, limit_values),
    )


def write_nbound_csv(path, minibatches, exact_values, taylor_values) -> None:
    fileio.write_csv(
        path,
        ["M", "n_lower_exact", "n_lower_taylor"],
        zip(minibatches, exact_values, taylor_values),
    )
