"""Hardware model for the wall-clock cost of one SGD update.

Compute cost is flat below a throughput knee and linear above it:
``gamma * max(M, m_t)``.  Communication cost depends only on the learner
count: zero for a single learner, a constant for allreduce-style exchange,
or linear in the learner count for a central parameter server.  The total
per-update time with the batch split across ``p`` learners is::

    t_update(M, p) = gamma * max(M / p, m_t) + comm_time(p)

where ``M / p`` is the per-learner share (fractional shares allowed).

``fit_hardware`` recovers the knee by exhaustive search over observed batch
sizes (two-segment least squares), then classifies the communication term as
constant or linear from multi-learner residuals.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import fileio
from .errors import InputError

FLAG_KNEE_UNRESOLVED = "knee-unresolved"
FLAG_COMM_CLAMPED = "comm-clamped"


class CommKind(str, Enum):
    NONE = "none"
    ALLREDUCE = "allreduce-constant"
    PARAMETER_SERVER = "parameter-server-linear"


@dataclass
class HardwareParams:
    """Per-update cost model: compute slope, knee, and communication term."""

    gamma: float
    m_t: int
    delta: float = 0.0
    comm_kind: CommKind = CommKind.NONE
    flags: list[str] = field(default_factory=list)

    def __post_init__(self):
        if not self.gamma > 0:
            raise InputError("gamma must be positive")
        if self.m_t < 1:
            raise InputError("m_t must be a positive integer")
        self.m_t = int(self.m_t)
        if self.delta < 0:
            raise InputError("delta must be nonnegative")
        self.comm_kind = CommKind(self.comm_kind)
        if self.comm_kind is CommKind.NONE:
            self.delta = 0.0  # no communication model: delta is meaningless


@dataclass
class CvConfig:
    """Cross-validation rider: an extra forward pass every ``updates_per_cv``
    training updates, evaluated at its own batch size and slope."""

    updates_per_cv: int
    m_cv: int
    gamma_cv: float

    def __post_init__(self):
        if self.updates_per_cv < 1 or self.m_cv < 1:
            raise InputError("updates_per_cv and m_cv must be positive integers")
        if not self.gamma_cv >= 0:
            raise InputError("gamma_cv must be nonnegative (0 disables the rider)")


def _check_m(m) -> float:
    m = float(m)
    if not m >= 1:
        raise InputError("batch size must be at least 1")
    return m


def gamma_time(m, hw: HardwareParams) -> float:
    """Compute time for one update at batch size ``m`` on one learner."""
    return hw.gamma * max(_check_m(m), hw.m_t)


def comm_time(p: int, hw: HardwareParams) -> float:
    """Communication time per update for ``p`` learners."""
    p = int(p)
    if p < 1:
        raise InputError("p must be a positive integer")
    if p == 1:
        return 0.0
    if hw.comm_kind is CommKind.NONE:
        raise InputError(
            "multiple learners require a communication model (comm_kind is 'none')"
        )
    if hw.comm_kind is CommKind.ALLREDUCE:
        return hw.delta
    return hw.delta * p


def t_update(m, p: int, hw: HardwareParams) -> float:
    """Wall-clock time of one update: compute on the per-learner share plus
    communication."""
    m = _check_m(m)
    p = int(p)
    if p < 1:
        raise InputError("p must be a positive integer")
    return hw.gamma * max(m / p, hw.m_t) + comm_time(p, hw)


def cv_gamma_time(m, hw: HardwareParams, cv: CvConfig) -> float:
    """Compute time for a block of training updates plus one evaluation pass."""
    m = _check_m(m)
    return hw.gamma * cv.updates_per_cv * max(m, hw.m_t) + cv.gamma_cv * max(
        cv.m_cv, hw.m_t
    )


def _origin_slope(x: np.ndarray, t: np.ndarray) -> float:
    return float((t * x).sum() / (x * x).sum())


def fit_hardware(timings) -> HardwareParams:
    """Recover (gamma, m_t, delta, comm_kind) from per-update timing rows.

    ``timings`` holds (M, p, seconds) rows; repeats of the same (M, p) cell
    are reduced to their median first.  Single-learner rows determine the
    compute model by exhaustive knee search over observed batch sizes;
    multi-learner residuals then pick the better of a constant or linear
    communication term.  A knee landing on the boundary of the observed grid
    is flagged ``knee-unresolved``.
    """
    cells: dict[tuple[int, int], list[float]] = {}
    for row in timings:
        try:
            m, p, t = row
        except (TypeError, ValueError):
            raise InputError(f"timing row must be (M, p, seconds), got {row!r}") from None
        m, p, t = int(m), int(p), float(t)
        if m < 1 or p < 1:
            raise InputError("M and p must be positive integers")
        if not t > 0:
            raise InputError(f"update time must be positive, got {t} at M={m}, p={p}")
        cells.setdefault((m, p), []).append(t)
    medians = {key: float(np.median(vals)) for key, vals in cells.items()}

    single = sorted((m, t) for (m, p), t in medians.items() if p == 1)
    if len(single) < 3:
        raise InputError(
            "need single-learner timings at 3 or more distinct batch sizes "
            f"to locate the knee, have {len(single)}"
        )
    ms = np.array([m for m, _ in single], dtype=float)
    ts = np.array([t for _, t in single])
    best = None
    for knee in [int(m) for m, _ in single]:
        x = np.maximum(ms, knee)
        slope = _origin_slope(x, ts)
        sse = float(((ts - slope * x) ** 2).sum())
        if best is None or sse < best[0] - 1e-18 * best[0]:
            best = (sse, knee, slope)
    _, m_t, gamma = best
    flags = []
    if m_t == int(ms[0]) or m_t == int(ms[-1]):
        flags.append(FLAG_KNEE_UNRESOLVED)

    multi = sorted((m, p, t) for (m, p), t in medians.items() if p > 1)
    if not multi:
        return HardwareParams(gamma, m_t, 0.0, CommKind.NONE, flags)
    ps = np.array([p for _, p, _ in multi], dtype=float)
    if len(set(int(p) for p in ps)) < 2:
        raise InputError(
            "need multi-learner timings at 2 or more distinct learner counts "
            "to classify the communication model"
        )
    resid = np.array(
        [t - gamma * max(m / p, m_t) for m, p, t in multi]
    )
    delta_const = float(np.mean(resid))
    sse_const = float(((resid - delta_const) ** 2).sum())
    delta_lin = _origin_slope(ps, resid)
    sse_lin = float(((resid - delta_lin * ps) ** 2).sum())
    if sse_const <= sse_lin:
        kind, delta = CommKind.ALLREDUCE, delta_const
    else:
        kind, delta = CommKind.PARAMETER_SERVER, delta_lin
    if delta < 0.0:
        delta = 0.0
        flags.append(FLAG_COMM_CLAMPED)
    return HardwareParams(gamma, m_t, delta, kind, flags)


TIMINGS_HEADER = ["M", "P", "t_update_seconds"]


def write_timings_csv(path, rows) -> None:
    fileio.write_csv(path, TIMINGS_HEADER, rows)


def read_timings_csv(path) -> list[tuple[int, int, float]]:
    rows = []
    for lineno, cells in fileio.read_csv(path, TIMINGS_HEADER):
        rows.append(
            (
                fileio.parse_int(path, lineno, "M", cells[0]),
                fileio.parse_int(path, lineno, "P", cells[1]),
                fileio.parse_float(path, lineno, "t_update_seconds", cells[2]),
            )
        )
    return rows


def hw_to_dict(hw: HardwareParams) -> dict:
    return {
        "gamma": hw.gamma,
        "m_t": hw.m_t,
        "delta": hw.delta,
        "comm_kind": hw.comm_kind.value,
        "flags": list(hw.flags),
    }


def write_hw_json(path, hw: HardwareParams) -> None:
    fileio.write_json(path, hw_to_dict(hw))


def read_hw_json(path) -> HardwareParams:
    payload = fileio.read_json(path)
    try:
        return HardwareParams(
            gamma=float(payload["gamma"]),
            m_t=int(payload["m_t"]),
            delta=float(payload["delta"]),
            comm_kind=CommKind(payload["comm_kind"]),
            flags=[str(f) for f in payload.get("flags", [])],
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{path}: malformed hardware file ({exc})") from exc
