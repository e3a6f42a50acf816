"""Training-time prediction and mini-batch/learner-count planning.

Combining the fitted inverse law with the hardware model gives the predicted
time to converge with batch size ``M`` split across ``p`` learners::

    t_conv(M, p) = (n_inf + alpha / M) * (gamma * max(M / p, m_t) + comm(p))

For a fixed ``p`` with constant communication cost ``d = comm(p)``, the
minimizer over ``M`` has a closed form: the unconstrained optimum
``sqrt(alpha * d * p / (n_inf * gamma))`` when it clears the per-learner
knee, otherwise the knee itself, ``m_t * p``.  The two regimes meet at the
learner-count crossover ``p_star = alpha * delta / (gamma * m_t**2 * n_inf)``
and the optimal time is piecewise::

    p <  p_star:  (sqrt(d * n_inf) + sqrt(alpha * gamma / p))**2
    p >= p_star:  (n_inf + alpha / (m_t * p)) * (d + gamma * m_t)

With a single learner the communication term is zero, which lands the
expressions on the weak branch with ``m_opt = m_t``.  When the communication
cost itself grows with ``p`` (parameter-server), the closed form above is
not taken on faith: the optimum is found by golden-section search on the
unimodal objective, and plans coming out of that path say so.

Also here: strong/weak/optimal scaling curves, a budgeted search over
hardware design options, and a classical inverted iteration bound kept only
for curve-shape comparisons.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

from . import fileio
from .errors import InputError, ModelValidityError
from .fitting import LawParams
from .hardware import CommKind, HardwareParams, comm_time, t_update


class Regime(str, Enum):
    SQRT = "sqrt-branch"
    WEAK = "weak-branch"


@dataclass
class Plan:
    """One planned operating point: learner count, batch size, time, regime."""

    p: int
    m_opt: float
    t_conv: float
    regime: Regime
    notes: list[str] = field(default_factory=list)


@dataclass
class ScalingConfig:
    """Batch policies for the scaling comparison: a fixed total batch for
    strong scaling and a fixed per-learner batch for weak scaling."""

    m_strong: int
    m_per_learner: int

    def __post_init__(self):
        if self.m_strong < 1 or self.m_per_learner < 1:
            raise InputError("m_strong and m_per_learner must be positive integers")


@dataclass
class ScalingRow:
    p: int
    t_strong: float
    t_weak: float
    t_optimal: float


@dataclass
class BottouParams:
    """Constants (a, b, e1) of the classical inverted iteration bound."""

    a: float
    b: float
    e1: float

    def __post_init__(self):
        if self.a < 0 or self.b < 0:
            raise InputError("a and b must be nonnegative")
        if not self.e1 > 0:
            raise InputError("e1 must be positive")


@dataclass
class DesignOption:
    """A purchasable hardware configuration: compute slope and communication
    constant with their prices, and the learner count it provisions."""

    gamma: float
    cost_compute: float
    delta: float
    cost_bandwidth: float
    p: int

    def __post_init__(self):
        if not self.gamma > 0 or not self.delta > 0:
            raise InputError("gamma and delta must be positive")
        if self.cost_compute < 0 or self.cost_bandwidth < 0:
            raise InputError("costs must be nonnegative")
        if self.p < 1:
            raise InputError("p must be a positive integer")

    @property
    def cost(self) -> float:
        return self.cost_compute + self.cost_bandwidth


@dataclass
class MarginalRatio:
    """Time-per-cost slope from the winner toward one neighboring option."""

    option: DesignOption
    d_t: float
    d_cost: float
    ratio: float | None


@dataclass
class DesignResult:
    winner: DesignOption
    t_conv: float
    plan: Plan
    ranking: list[tuple[DesignOption, float]]
    ratios: list[MarginalRatio]


def _check_law(law: LawParams) -> None:
    if law.alpha < 0:
        raise InputError("law.alpha must be nonnegative")


def _require_positive_floor(law: LawParams, what: str) -> None:
    if law.n_inf <= 0:
        raise ModelValidityError(
            f"{what} is undefined for n_inf <= 0 (got {law.n_inf}); "
            "revisit the fit and its flags before planning"
        )


def t_conv(m, p: int, law: LawParams, hw: HardwareParams) -> float:
    """Predicted time to converge at batch size ``m`` on ``p`` learners.

    ``m`` may be fractional: the planner explores a continuous relaxation.
    """
    _check_law(law)
    m = float(m)
    if not m >= 1:
        raise InputError("m must be at least 1")
    updates = law.n_inf + law.alpha / m
    if updates <= 0:
        raise ModelValidityError(
            f"predicted update count {updates} <= 0 at M={m}; "
            "the fitted law is outside its valid domain here"
        )
    return updates * t_update(m, p, hw)


def _golden_section(fn, lo: float, hi: float, rel_tol: float = 1e-12) -> float:
    """Minimize a unimodal function on [lo, hi]; returns the midpoint of the
    final bracket."""
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc, fd = fn(c), fn(d)
    while (b - a) > rel_tol * max(1.0, abs(a), abs(b)):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = fn(d)
    return (a + b) / 2.0


def _bracket_above(fn, start: float) -> float:
    """Double an upper bound until the objective is rising past the minimum."""
    hi = max(2.0, 2.0 * start)
    for _ in range(200):
        if fn(hi) > fn(hi / 2.0):
            return hi
        hi *= 2.0
    raise ModelValidityError("no finite minimizer found while expanding the bracket")


def m_opt(p: int, law: LawParams, hw: HardwareParams) -> float:
    """Batch size minimizing ``t_conv`` at a fixed learner count.

    Closed form for constant-communication kinds; golden-section search on
    the unimodal objective for the parameter-server (p-linear) kind.
    """
    _check_law(law)
    _require_positive_floor(law, "the optimal batch size")
    p = int(p)
    if p < 1:
        raise InputError("p must be a positive integer")
    if p == 1:
        return float(hw.m_t)
    d = comm_time(p, hw)
    if hw.comm_kind is CommKind.PARAMETER_SERVER:
        hi = _bracket_above(lambda m: t_conv(m, p, law, hw), float(hw.m_t * p))
        return _golden_section(lambda m: t_conv(m, p, law, hw), 1.0, hi)
    return max(math.sqrt(law.alpha * d * p / (law.n_inf * hw.gamma)), float(hw.m_t * p))


def p_star(law: LawParams, hw: HardwareParams) -> float:
    """Learner-count crossover between the sqrt and weak regimes (constant
    communication cost)."""
    _check_law(law)
    _require_positive_floor(law, "the regime crossover")
    return law.alpha * hw.delta / (hw.gamma * hw.m_t**2 * law.n_inf)


def sqrt_branch_time(p, law: LawParams, hw: HardwareParams, d: float | None = None) -> float:
    """Closed-form optimal time when the unconstrained optimum is active."""
    if d is None:
        d = hw.delta
    return (math.sqrt(d * law.n_inf) + math.sqrt(law.alpha * hw.gamma / p)) ** 2


def weak_branch_time(p, law: LawParams, hw: HardwareParams, d: float | None = None) -> float:
    """Closed-form optimal time when the per-learner knee binds."""
    if d is None:
        d = hw.delta
    return (law.n_inf + law.alpha / (hw.m_t * p)) * (d + hw.gamma * hw.m_t)


def t_conv_optimal(p: int, law: LawParams, hw: HardwareParams) -> Plan:
    """Best achievable time at a fixed learner count, with its regime."""
    _check_law(law)
    _require_positive_floor(law, "the optimal time")
    p = int(p)
    if p < 1:
        raise InputError("p must be a positive integer")
    m = m_opt(p, law, hw)
    if hw.comm_kind is CommKind.PARAMETER_SERVER and p > 1:
        regime = Regime.WEAK if m <= hw.m_t * p * (1.0 + 1e-9) else Regime.SQRT
        return Plan(
            p,
            m,
            t_conv(m, p, law, hw),
            regime,
            notes=["optimum found numerically: communication cost grows with p"],
        )
    d = comm_time(p, hw)
    crossover = law.alpha * d / (hw.gamma * hw.m_t**2 * law.n_inf)
    if p < crossover:
        return Plan(p, m, sqrt_branch_time(p, law, hw, d), Regime.SQRT)
    return Plan(p, m, weak_branch_time(p, law, hw, d), Regime.WEAK)


def scaling_curves(
    p_list, law: LawParams, hw: HardwareParams, cfg: ScalingConfig
) -> list[ScalingRow]:
    """Strong, weak, and optimal scaling at each learner count.

    Strong scaling keeps the total batch at ``cfg.m_strong``; weak scaling
    grows it as ``cfg.m_per_learner * p``; optimal picks the best batch per
    ``p``, so it can never lose to the other two.
    """
    ps = [int(p) for p in p_list]
    if not ps:
        raise InputError("p list must be non-empty")
    if any(p < 1 for p in ps):
        raise InputError("learner counts must be positive integers")
    if any(b <= a for a, b in zip(ps, ps[1:])):
        raise InputError("p list must be strictly increasing")
    rows = []
    for p in ps:
        rows.append(
            ScalingRow(
                p=p,
                t_strong=t_conv(cfg.m_strong, p, law, hw),
                t_weak=t_conv(cfg.m_per_learner * p, p, law, hw),
                t_optimal=t_conv_optimal(p, law, hw).t_conv,
            )
        )
    return rows


def design_balance(
    options,
    budget: float,
    law: LawParams,
    m_t: int,
    comm_kind: CommKind = CommKind.ALLREDUCE,
) -> DesignResult:
    """Pick the affordable hardware option with the lowest optimal time.

    Every option prices a compute slope and a communication constant; an
    option is feasible when the summed cost fits the budget.  The result
    ranks all feasible options and reports, for the winner, the discrete
    time-per-cost slopes toward each option differing from it in exactly one
    component -- the balance diagnostics for spend-shifting decisions.
    """
    opts = list(options)
    if not opts:
        raise InputError("options must be non-empty")
    feasible = [o for o in opts if o.cost <= budget]
    if not feasible:
        raise InputError(
            f"no option fits the budget {budget:g} "
            f"(cheapest costs {min(o.cost for o in opts):g})"
        )
    evaluated = []
    for option in feasible:
        hw = HardwareParams(option.gamma, m_t, option.delta, comm_kind)
        evaluated.append((option, t_conv_optimal(option.p, law, hw)))
    evaluated.sort(key=lambda pair: pair[1].t_conv)
    winner, winner_plan = evaluated[0]

    ratios = []
    for option in opts:
        if option is winner:
            continue
        differs = sum(
            1
            for a, b in (
                (option.gamma, winner.gamma),
                (option.delta, winner.delta),
                (option.p, winner.p),
            )
            if a != b
        )
        if differs != 1:
            continue
        hw = HardwareParams(option.gamma, m_t, option.delta, comm_kind)
        d_t = t_conv_optimal(option.p, law, hw).t_conv - winner_plan.t_conv
        d_cost = option.cost - winner.cost
        ratios.append(
            MarginalRatio(option, d_t, d_cost, None if d_cost == 0 else d_t / d_cost)
        )
    return DesignResult(
        winner=winner,
        t_conv=winner_plan.t_conv,
        plan=winner_plan,
        ranking=[(o, plan.t_conv) for o, plan in evaluated],
        ratios=ratios,
    )


def bottou_iteration_bound(bp: BottouParams, epsilon: float, m: int) -> float:
    """Classical inverted bound on iterations to reach ``epsilon`` at batch
    size ``m``.  Kept for curve-shape comparison only; no tightness claimed,
    and the value can be negative or otherwise vacuous."""
    m = int(m)
    if not epsilon > 0:
        raise InputError("epsilon must be positive")
    if m <= bp.b:
        raise InputError(f"m must exceed b ({bp.b:g}), got {m}")
    num = epsilon * m - bp.a
    den = bp.e1 * m - bp.a
    if num <= 0:
        raise InputError(
            f"epsilon * m must exceed a ({bp.a:g}); the bound's logarithm is undefined"
        )
    if den <= 0:
        raise InputError(
            f"e1 * m must exceed a ({bp.a:g}); the bound's logarithm is undefined"
        )
    return 1.0 + (m / (m - bp.b)) * math.log(num / den)


PLAN_HEADER = ["P", "m_opt", "t_conv_seconds", "regime"]
SCALING_HEADER = ["P", "t_strong", "t_weak", "t_optimal"]


def write_plan_csv(path, plans) -> None:
    fileio.write_csv(
        path,
        PLAN_HEADER,
        ((plan.p, plan.m_opt, plan.t_conv, plan.regime.value) for plan in plans),
    )


def write_scaling_csv(path, rows) -> None:
    fileio.write_csv(
        path,
        SCALING_HEADER,
        ((r.p, r.t_strong, r.t_weak, r.t_optimal) for r in rows),
    )
