"""Synthetic convex problems with known minimizers.

Three kinds are provided:

* ``quadratic`` -- a deterministic quadratic bowl; the stochastic gradient
  equals the exact gradient regardless of batch size.
* ``noisy-quadratic`` -- the same bowl plus Gaussian gradient noise whose
  per-coordinate variance is ``noise_scale**2 / minibatch``, i.e. the
  batch-averaging 1/M variance law holds exactly by construction.
* ``logistic`` -- ridge-regularized logistic regression on a seeded synthetic
  dataset.  The minimizer is computed once at construction by Newton's
  method, so the residual ``loss(w) - loss(optimum)`` is known here too;
  batches are drawn without replacement from the finite dataset.

``curvature`` is a Lipschitz constant for the full gradient: exact for the
quadratic kinds, the standard spectral upper bound for logistic.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InputError

QUADRATIC = "quadratic"
NOISY_QUADRATIC = "noisy-quadratic"
LOGISTIC = "logistic"

KINDS = (QUADRATIC, NOISY_QUADRATIC, LOGISTIC)


def _sigmoid(z):
    # tanh form is stable for large |z|
    return 0.5 * (1.0 + np.tanh(0.5 * z))


@dataclass
class Problem:
    kind: str
    dimension: int
    optimum: np.ndarray
    curvature: float
    noise_scale: float
    dataset_size: int | None = None
    loss_at_optimum: float = 0.0
    features: np.ndarray | None = field(default=None, repr=False)
    labels: np.ndarray | None = field(default=None, repr=False)
    regularization: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InputError(f"unknown problem kind {self.kind!r}")
        if self.dimension < 1:
            raise InputError("dimension must be a positive integer")
        self.optimum = np.asarray(self.optimum, dtype=float)
        if self.optimum.shape != (self.dimension,):
            raise InputError("optimum must be a vector of length `dimension`")
        if not self.curvature > 0:
            raise InputError("curvature must be positive")
        if self.noise_scale < 0:
            raise InputError("noise_scale must be nonnegative")
        if self.dataset_size is not None and self.dataset_size < 1:
            raise InputError("dataset_size must be a positive integer")

    # -- objective -----------------------------------------------------

    def loss(self, w) -> float:
        w = np.asarray(w, dtype=float)
        if self.kind == LOGISTIC:
            z = self.labels * (self.features @ w)
            data = float(np.mean(np.logaddexp(0.0, -z)))
            return data + 0.5 * self.regularization * float(w @ w)
        diff = w - self.optimum
        return 0.5 * self.curvature * float(diff @ diff)

    def gradient(self, w) -> np.ndarray:
        w = np.asarray(w, dtype=float)
        if self.kind == LOGISTIC:
            return self._logistic_gradient(w, self.features, self.labels)
        return self.curvature * (w - self.optimum)

    def residual(self, w) -> float:
        return self.loss(w) - self.loss_at_optimum

    def stochastic_gradient(self, w, minibatch: int, rng: np.random.Generator) -> np.ndarray:
        """Mini-batch gradient estimate; unbiased for the full gradient."""
        if minibatch < 1:
            raise InputError("minibatch must be a positive integer")
        w = np.asarray(w, dtype=float)
        if self.kind == LOGISTIC:
            if minibatch > self.dataset_size:
                raise InputError(
                    f"minibatch {minibatch} exceeds dataset size {self.dataset_size}"
                )
            idx = rng.choice(self.dataset_size, size=minibatch, replace=False)
            return self._logistic_gradient(w, self.features[idx], self.labels[idx])
        grad = self.curvature * (w - self.optimum)
        if self.noise_scale > 0.0:
            noise = rng.standard_normal(self.dimension)
            grad = grad + noise * (self.noise_scale / np.sqrt(minibatch))
        return grad

    def _logistic_gradient(self, w, x, y):
        z = y * (x @ w)
        coeff = -y * _sigmoid(-z)
        return (x.T @ coeff) / len(y) + self.regularization * w


def quadratic(dimension: int = 1, curvature: float = 1.0, optimum=None) -> Problem:
    """Deterministic quadratic bowl with minimum value 0."""
    if optimum is None:
        optimum = np.zeros(dimension)
    return Problem(QUADRATIC, dimension, optimum, curvature, 0.0)


def noisy_quadratic(
    dimension: int = 1,
    curvature: float = 1.0,
    noise_scale: float = 0.1,
    optimum=None,
) -> Problem:
    """Quadratic bowl with additive Gaussian gradient noise.

    The noise added to the batch gradient has per-coordinate standard
    deviation ``noise_scale / sqrt(minibatch)``, mirroring the CLT behaviour
    of averaging ``minibatch`` independent per-sample gradients.
    """
    if optimum is None:
        optimum = np.zeros(dimension)
    return Problem(NOISY_QUADRATIC, dimension, optimum, curvature, noise_scale)


def logistic(
    dimension: int = 5,
    dataset_size: int = 500,
    seed: int = 0,
    regularization: float = 1e-2,
) -> Problem:
    """Ridge-regularized logistic regression on seeded synthetic data.

    The regularizer makes the objective strongly convex, so the minimizer is
    unique; it is found by Newton iteration at construction and
    stored on the problem together with its loss value.
    """
    if dimension < 1 or dataset_size < 1:
        raise InputError("dimension and dataset_size must be positive integers")
    if not regularization > 0:
        raise InputError("regularization must be positive")
    rng = np.random.Generator(np.random.Philox(seed))
    x = rng.standard_normal((dataset_size, dimension))
    w_true = rng.standard_normal(dimension)
    y = np.where(rng.random(dataset_size) < _sigmoid(x @ w_true), 1.0, -1.0)

    reg = float(regularization)
    w = np.zeros(dimension)
    for _ in range(100):
        z = y * (x @ w)
        s = _sigmoid(-z)
        grad = (x.T @ (-y * s)) / dataset_size + reg * w
        if np.linalg.norm(grad) <= 1e-13:
            break
        curv = s * (1.0 - s)
        hess = (x.T * curv) @ x / dataset_size + reg * np.eye(dimension)
        w = w - np.linalg.solve(hess, grad)

    lipschitz = float(np.linalg.eigvalsh(x.T @ x)[-1]) / (4.0 * dataset_size) + reg
    problem = Problem(
        LOGISTIC,
        dimension,
        w,
        lipschitz,
        0.0,
        dataset_size=dataset_size,
        features=x,
        labels=y,
        regularization=reg,
    )
    problem.loss_at_optimum = problem.loss(w)
    return problem
