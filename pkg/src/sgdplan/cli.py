"""Command-line pipeline: simulate, fit, plan, scale, bound, design.

Outputs are delimited text (CSV/JSON) written atomically into ``--out``;
``--plot`` additionally renders the matching figures next to them.  Runs
are deterministic: the same flags produce byte-identical outputs.  Exit
codes: 0 on success, 1 on an input error (bad flags, malformed files,
unsatisfiable configuration), 2 when fitted parameters are outside the
domain where the planning formulas apply.

Model parameters given as flags override the same fields loaded from
``--law``/``--hw`` files.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass, field

from . import bounds, figures, fileio, fitting, hardware, planner, simulate
from .errors import InputError, ModelValidityError, SgdPlanError
from .fitting import LawParams
from .hardware import CommKind, HardwareParams
from .problems import LOGISTIC, NOISY_QUADRATIC, QUADRATIC, logistic, noisy_quadratic, quadratic

DEFAULT_SEED = 12345
_DATASET_SEED_OFFSET = 7919  # keeps the dataset stream apart from run streams


@dataclass
class CliConfig:
    """Cross-cutting invocation state shared by every command."""

    command: str
    input_paths: list[str] = field(default_factory=list)
    output_dir: str = "."
    seed: int = DEFAULT_SEED
    overrides: dict[str, object] = field(default_factory=dict)


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse default exits with code 2
        raise InputError(message)


def _int_list(text: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise InputError(f"expected a comma-separated integer list, got {text!r}") from None


def _float_list(text: str) -> list[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise InputError(f"expected a comma-separated number list, got {text!r}") from None


def build_parser() -> _Parser:
    parser = _Parser(prog="sgdplan", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", default=".", help="output directory (default: .)")
        p.add_argument("--plot", action="store_true", help="also render figures")

    p = sub.add_parser("simulate", help="run SGD sweeps and write runs.csv")
    common(p)
    p.add_argument("--problem", choices=[QUADRATIC, NOISY_QUADRATIC, LOGISTIC],
                   default=NOISY_QUADRATIC)
    p.add_argument("--M", default="1,2,4,8,16,32,64,128,256",
                   help="comma-separated mini-batch sizes")
    p.add_argument("--eps", default="0.01", help="loss threshold(s), comma-separated")
    p.add_argument("--seeds", type=int, default=10, help="number of seeds per point")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED,
                   help=f"base seed (default {DEFAULT_SEED}); run i uses seed+i")
    p.add_argument("--eta", type=float, default=0.1, help="SGD step size")
    p.add_argument("--phi", type=float, default=None,
                   help="per-sample gradient noise std (noisy-quadratic only)")
    p.add_argument("--dim", type=int, default=10, help="problem dimension")
    p.add_argument("--lipschitz", type=float, default=1.0,
                   help="gradient Lipschitz constant of the quadratic kinds")
    p.add_argument("--radius", type=float, default=1.0,
                   help="radius of the starting-point sphere around the optimum")
    p.add_argument("--max-updates", type=int, default=simulate.DEFAULT_MAX_UPDATES)
    p.add_argument("--dataset-size", type=int, default=1000, help="logistic only")

    p = sub.add_parser("fit", help="fit runs.csv to the inverse law, or timings.csv "
                                   "to the hardware model")
    common(p)
    p.add_argument("path", help="runs.csv or timings.csv (detected by header)")

    for name, extra in (("plan", "optimal batch size per learner count"),
                        ("scale", "strong/weak/optimal scaling curves")):
        p = sub.add_parser(name, help=extra)
        common(p)
        p.add_argument("--law", help="law.json from `fit`")
        p.add_argument("--hw", help="hw.json from `fit`")
        p.add_argument("--n-inf", type=float, help="override: asymptotic update count")
        p.add_argument("--alpha", type=float, help="override: noise sensitivity")
        p.add_argument("--gamma", type=float, help="override: compute seconds per sample")
        p.add_argument("--m-t", type=int, help="override: throughput knee")
        p.add_argument("--delta", type=float, help="override: communication constant")
        p.add_argument("--comm", choices=[k.value for k in CommKind],
                       help="override: communication kind")
        p.add_argument("--P", default="1,2,4,8,16,32,64",
                       help="comma-separated learner counts")
        if name == "scale":
            p.add_argument("--m-strong", type=int, default=None,
                           help="total batch for strong scaling (default: 8 * m_t)")
            p.add_argument("--m-per-learner", type=int, default=None,
                           help="per-learner batch for weak scaling (default: m_t)")

    p = sub.add_parser("bound", help="convergence-bound curves and update-count "
                                     "lower bounds")
    common(p)
    p.add_argument("--lam", type=float, help="contraction rate (direct parameter path)")
    p.add_argument("--sigma", type=float, help="noise floor (direct parameter path)")
    p.add_argument("--delta0", type=float, required=True, help="initial loss residual")
    p.add_argument("--theta", type=float, default=None,
                   help="noise coupling sigma**2 * M (default: sigma**2)")
    p.add_argument("--eta", type=float, help="step size (primitive path)")
    p.add_argument("--lipschitz", type=float, default=1.0, help="primitive path")
    p.add_argument("--phi", type=float, help="per-update noise std (primitive path)")
    p.add_argument("--dist0", type=float, help="start-to-optimum distance (primitive path)")
    p.add_argument("--k-max", type=int, default=1000, help="updates axis length")
    p.add_argument("--eps", type=float, default=0.01,
                   help="target residual for the update-count bounds")
    p.add_argument("--M", default="1,2,4,8,16,32,64,128,256,512,1024",
                   help="batch sizes for the update-count bound table")
    p.add_argument("--bottou", default=None, metavar="A,B,E1",
                   help="also tabulate the classical inverted bound")

    p = sub.add_parser("design", help="budgeted hardware design search")
    common(p)
    p.add_argument("catalog", help="JSON list of options: gamma, cost_compute, "
                                   "delta, cost_bandwidth, p")
    p.add_argument("--budget", type=float, required=True)
    p.add_argument("--law", help="law.json from `fit`")
    p.add_argument("--n-inf", type=float, help="override: asymptotic update count")
    p.add_argument("--alpha", type=float, help="override: noise sensitivity")
    p.add_argument("--m-t", type=int, required=True, help="throughput knee to assume")
    p.add_argument("--comm", choices=[k.value for k in CommKind],
                   default=CommKind.ALLREDUCE.value)
    return parser


# -- shared loading helpers -------------------------------------------------


def _load_law(args) -> LawParams:
    law = fitting.read_law_json(args.law) if args.law else None
    n_inf = args.n_inf if args.n_inf is not None else (law.n_inf if law else None)
    alpha = args.alpha if args.alpha is not None else (law.alpha if law else None)
    if n_inf is None or alpha is None:
        raise InputError("need --law, or both --n-inf and --alpha")
    return LawParams(
        n_inf=float(n_inf),
        alpha=float(alpha),
        r_squared=law.r_squared if law else 1.0,
        epsilon=law.epsilon if law else float("nan"),
        flags=list(law.flags) if law else [],
    )


def _load_hw(args) -> HardwareParams:
    hw = hardware.read_hw_json(args.hw) if args.hw else None
    gamma = args.gamma if args.gamma is not None else (hw.gamma if hw else None)
    m_t = args.m_t if args.m_t is not None else (hw.m_t if hw else None)
    if gamma is None or m_t is None:
        raise InputError("need --hw, or both --gamma and --m-t")
    delta = args.delta if args.delta is not None else (hw.delta if hw else 0.0)
    comm = args.comm if args.comm is not None else (hw.comm_kind.value if hw else
                                                   CommKind.NONE.value)
    return HardwareParams(float(gamma), int(m_t), float(delta), CommKind(comm),
                          flags=list(hw.flags) if hw else [])


def _outpath(cfg: CliConfig, name: str) -> str:
    os.makedirs(cfg.output_dir, exist_ok=True)
    return os.path.join(cfg.output_dir, name)


# -- commands ---------------------------------------------------------------


def _cmd_simulate(args, cfg: CliConfig) -> int:
    eps_list = _float_list(args.eps)
    m_list = _int_list(args.M)
    if args.seeds < 1:
        raise InputError("--seeds must be a positive integer")
    phi = args.phi
    if args.problem == QUADRATIC:
        if phi not in (None, 0.0):
            raise InputError("the quadratic kind is noise-free; use noisy-quadratic")
        problem = quadratic(args.dim, args.lipschitz)
    elif args.problem == NOISY_QUADRATIC:
        problem = noisy_quadratic(args.dim, args.lipschitz,
                                  0.1 if phi is None else phi)
    else:
        if phi not in (None, 0.0):
            raise InputError("the logistic kind draws its noise from subsampling; "
                             "--phi does not apply")
        problem = logistic(args.dim, args.dataset_size,
                           seed=cfg.seed + _DATASET_SEED_OFFSET)
    config = simulate.SgdConfig(
        eta=args.eta,
        epsilon=min(eps_list),
        max_updates=args.max_updates,
        init_radius=args.radius,
    )
    seeds = [cfg.seed + i for i in range(args.seeds)]
    table = simulate.sweep_epsilon_grid(problem, config, m_list, seeds, eps_list)
    records = [r for eps in eps_list for point in table[eps] for r in point.records]
    runs_path = _outpath(cfg, "runs.csv")
    simulate.write_runs_csv(runs_path, records)
    written = [runs_path]
    if args.plot:
        fig_path = _outpath(cfg, "sweep.png")
        figures.plot_sweep(table[min(eps_list)], fig_path)
        written.append(fig_path)
    print(f"wrote {', '.join(written)} ({len(records)} rows)")
    return 0


def _detect_table(path: str) -> str:
    try:
        with open(path, "r") as fh:
            header = fh.readline().strip()
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror or exc}") from exc
    if header == ",".join(simulate.RUNS_HEADER):
        return "runs"
    if header == ",".join(hardware.TIMINGS_HEADER):
        return "timings"
    raise InputError(f"{path}:1: unrecognized header {header!r}")


def _cmd_fit(args, cfg: CliConfig) -> int:
    kind = _detect_table(args.path)
    if kind == "timings":
        rows = hardware.read_timings_csv(args.path)
        hw = hardware.fit_hardware(rows)
        hw_path = _outpath(cfg, "hw.json")
        hardware.write_hw_json(hw_path, hw)
        written = [hw_path]
        if args.plot:
            fig_path = _outpath(cfg, "hw_fit.png")
            figures.plot_hardware_fit(rows, hw, fig_path)
            written.append(fig_path)
        note = f"; flags: {','.join(hw.flags)}" if hw.flags else ""
        print(f"wrote {', '.join(written)}{note}")
        return 0

    records = simulate.read_runs_csv(args.path)
    grouped = fitting.aggregate_runs(records)
    if not grouped:
        raise InputError(f"{args.path}: no converged rows to fit")
    laws = {}
    for eps, rows in grouped.items():
        laws[eps] = fitting.fit_inverse_law([(m, mean) for m, mean, _, _ in rows], eps)
    tight = min(laws)
    law_path = _outpath(cfg, "law.json")
    fitting.write_law_json(law_path, laws[tight])
    written = [law_path]
    notes = []
    if laws[tight].flags:
        notes.append(f"flags: {','.join(laws[tight].flags)}")
    if len(laws) > 1:
        laws_path = _outpath(cfg, "laws.csv")
        fileio.write_csv(
            laws_path,
            ["epsilon", "n_inf", "alpha", "r_squared"],
            ((eps, law.n_inf, law.alpha, law.r_squared)
             for eps, law in sorted(laws.items(), reverse=True)),
        )
        written.append(laws_path)
        try:
            eps_law = fitting.fit_epsilon_dependence(list(laws.values()))
        except InputError as exc:
            notes.append(f"threshold study skipped ({exc})")
            eps_law = None
        if eps_law is not None:
            study_path = _outpath(cfg, "epsilon_law.json")
            fileio.write_json(study_path, {
                "c_ninf": eps_law.c_ninf,
                "c_alpha": eps_law.c_alpha,
                "slope_ninf": eps_law.slope_ninf,
                "slope_alpha": eps_law.slope_alpha,
                "epsilon_grid": eps_law.epsilon_grid,
                "warnings": eps_law.warnings,
            })
            written.append(study_path)
            if args.plot:
                fig_path = _outpath(cfg, "epsilon_dependence.png")
                usable = [law for law in laws.values()
                          if law.epsilon in eps_law.epsilon_grid]
                figures.plot_epsilon_dependence(usable, eps_law, fig_path)
                written.append(fig_path)
    if args.plot:
        fig_path = _outpath(cfg, "law_fit.png")
        figures.plot_law_fit(grouped[tight], laws[tight], fig_path)
        written.append(fig_path)
    note = f" ({'; '.join(notes)})" if notes else ""
    print(f"wrote {', '.join(written)}{note}")
    return 0


def _cmd_plan(args, cfg: CliConfig) -> int:
    law = _load_law(args)
    hw = _load_hw(args)
    p_list = _int_list(args.P)
    plans = [planner.t_conv_optimal(p, law, hw) for p in p_list]
    plan_path = _outpath(cfg, "plan.csv")
    planner.write_plan_csv(plan_path, plans)
    written = [plan_path]
    if args.plot:
        fig_path = _outpath(cfg, "plan.png")
        figures.plot_plans(law, hw, plans, fig_path)
        written.append(fig_path)
    notes = sorted({note for plan in plans for note in plan.notes})
    note = f" ({'; '.join(notes)})" if notes else ""
    print(f"wrote {', '.join(written)} ({len(plans)} rows){note}")
    return 0


def _cmd_scale(args, cfg: CliConfig) -> int:
    law = _load_law(args)
    hw = _load_hw(args)
    p_list = _int_list(args.P)
    m_strong = args.m_strong if args.m_strong is not None else 8 * hw.m_t
    m_per = args.m_per_learner if args.m_per_learner is not None else hw.m_t
    rows = planner.scaling_curves(p_list, law, hw,
                                  planner.ScalingConfig(m_strong, m_per))
    scaling_path = _outpath(cfg, "scaling.csv")
    planner.write_scaling_csv(scaling_path, rows)
    written = [scaling_path]
    if args.plot:
        fig_path = _outpath(cfg, "scaling.png")
        figures.plot_scaling(rows, fig_path)
        written.append(fig_path)
    print(f"wrote {', '.join(written)} ({len(rows)} rows)")
    return 0


def _cmd_bound(args, cfg: CliConfig) -> int:
    if args.lam is not None:
        if args.sigma is None:
            raise InputError("--lam requires --sigma (use 0 explicitly for noise-free)")
        theta = args.theta if args.theta is not None else args.sigma**2
        bp = bounds.BoundParams(args.lam, args.sigma, args.delta0, theta)
    else:
        if args.eta is None or args.phi is None or args.dist0 is None:
            raise InputError("need either --lam/--sigma or --eta/--phi/--dist0")
        bp = bounds.bound_params_from_primitives(
            args.eta, args.lipschitz, args.phi, args.delta0, args.dist0)
        if args.theta is not None:
            bp = bounds.BoundParams(bp.lam, bp.sigma, bp.delta0, args.theta)
    if args.k_max < 0:
        raise InputError("--k-max must be nonnegative")
    ks = list(range(args.k_max + 1))
    limit = [bounds.gd_limit(k, bp.lam, bp.delta0) for k in ks]
    curve = [bounds.residual_bound(k, bp) for k in ks]
    bound_path = _outpath(cfg, "bound.csv")
    bounds.write_bound_csv(bound_path, ks, curve, limit)
    written = [bound_path]
    notes = []

    m_list = _int_list(args.M)
    usable_m, exact_vals, taylor_vals = [], [], []
    if bp.theta > 0:
        for m in m_list:
            sigma_m = (bp.theta / m) ** 0.5
            if sigma_m >= args.eps or sigma_m >= bp.delta0:
                continue
            bp_m = bounds.BoundParams(bp.lam, sigma_m, bp.delta0, bp.theta)
            usable_m.append(m)
            exact_vals.append(bounds.n_update_lower_bound_exact(args.eps, bp_m))
            taylor_vals.append(
                bounds.n_update_lower_bound_taylor(args.eps, bp.lam, bp.delta0,
                                                   bp.theta, m).value)
        dropped = len(m_list) - len(usable_m)
        if dropped:
            notes.append(f"{dropped} batch sizes dropped: noise floor at or above the target")
    else:
        notes.append("update-count table skipped (theta is zero)")
    bottou_vals = None
    if usable_m:
        nbound_path = _outpath(cfg, "nbound.csv")
        bounds.write_nbound_csv(nbound_path, usable_m, exact_vals, taylor_vals)
        written.append(nbound_path)
        if args.bottou:
            parts = _float_list(args.bottou)
            if len(parts) != 3:
                raise InputError("--bottou expects three numbers: A,B,E1")
            bott = planner.BottouParams(*parts)
            bottou_vals = [planner.bottou_iteration_bound(bott, args.eps, m)
                           for m in usable_m]
            bottou_path = _outpath(cfg, "bottou.csv")
            fileio.write_csv(bottou_path, ["M", "n_bottou"],
                             zip(usable_m, bottou_vals))
            written.append(bottou_path)
    if args.plot:
        fig_path = _outpath(cfg, "bound.png")
        figures.plot_bound(ks, curve, limit, fig_path)
        written.append(fig_path)
        if usable_m:
            fig_path = _outpath(cfg, "nbound.png")
            figures.plot_n_bounds(usable_m, exact_vals, taylor_vals, fig_path,
                                  bottou_values=bottou_vals)
            written.append(fig_path)
    note = f" ({'; '.join(notes)})" if notes else ""
    print(f"wrote {', '.join(written)}{note}")
    return 0


def _cmd_design(args, cfg: CliConfig) -> int:
    law = _load_law(args)
    payload = fileio.read_json(args.catalog)
    if not isinstance(payload, list):
        raise InputError(f"{args.catalog}: expected a JSON list of options")
    options = []
    for i, entry in enumerate(payload):
        try:
            options.append(planner.DesignOption(
                gamma=float(entry["gamma"]),
                cost_compute=float(entry["cost_compute"]),
                delta=float(entry["delta"]),
                cost_bandwidth=float(entry["cost_bandwidth"]),
                p=int(entry["p"]),
            ))
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"{args.catalog}: option {i}: {exc}") from exc
    result = planner.design_balance(options, args.budget, law, args.m_t,
                                    CommKind(args.comm))

    def opt_dict(o: planner.DesignOption) -> dict:
        return {"gamma": o.gamma, "cost_compute": o.cost_compute,
                "delta": o.delta, "cost_bandwidth": o.cost_bandwidth,
                "p": o.p, "cost": o.cost}

    out_path = _outpath(cfg, "design_result.json")
    fileio.write_json(out_path, {
        "winner": opt_dict(result.winner),
        "t_conv_seconds": result.t_conv,
        "m_opt": result.plan.m_opt,
        "regime": result.plan.regime.value,
        "ranking": [{"option": opt_dict(o), "t_conv_seconds": t}
                    for o, t in result.ranking],
        "marginal_ratios": [
            {"option": opt_dict(r.option), "d_t": r.d_t, "d_cost": r.d_cost,
             "ratio": r.ratio}
            for r in result.ratios
        ],
    })
    print(f"wrote {out_path} (winner: gamma={result.winner.gamma:g}, "
          f"delta={result.winner.delta:g}, p={result.winner.p}, "
          f"t_conv={result.t_conv:.6g}s)")
    return 0


_COMMANDS = {
    "simulate": _cmd_simulate,
    "fit": _cmd_fit,
    "plan": _cmd_plan,
    "scale": _cmd_scale,
    "bound": _cmd_bound,
    "design": _cmd_design,
}


def run_cli(argv=None) -> int:
    """Parse arguments, run one command, return the exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = CliConfig(
            command=args.command,
            input_paths=[getattr(args, "path", None) or getattr(args, "catalog", None)]
            if hasattr(args, "path") or hasattr(args, "catalog") else [],
            output_dir=args.out,
            seed=getattr(args, "seed", DEFAULT_SEED),
        )
        return _COMMANDS[args.command](args, cfg)
    except ModelValidityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SgdPlanError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    raise SystemExit(run_cli())
