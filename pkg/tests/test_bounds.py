import math

import numpy as np
import pytest

from sgdplan import (
    BoundParams,
    InputError,
    bound_params_from_primitives,
    check_dominance,
    gd_limit,
    n_update_lower_bound_exact,
    n_update_lower_bound_taylor,
    residual_bound,
)
from sgdplan.bounds import write_bound_csv, write_nbound_csv

# Frozen against 30-digit decimal arithmetic (mpmath) of the same formulas.
RESIDUAL_K10 = 0.508261523954612251
EXACT_N = 90.4253193105206843
TAYLOR_N = 90.333  # 90 * (1 + (1e-4 / 3) * 111), exactly representable intent
REL_GAP = 0.00102095
REL_GAP_HALF_SIGMA = 0.000501


def bp(lam=0.1, sigma=0.1, delta0=1.0, theta=None):
    return BoundParams(lam, sigma, delta0, sigma**2 if theta is None else theta)


def test_primitive_construction():
    params = bound_params_from_primitives(
        eta=0.5, lipschitz=1.0, noise_std=0.0, delta0=0.5, dist0=1.0
    )
    assert params.lam == pytest.approx(0.375)
    assert params.sigma == 0.0
    params = bound_params_from_primitives(
        eta=0.1, lipschitz=1.0, noise_std=0.3, delta0=0.5, dist0=1.0, minibatch=4
    )
    assert params.sigma**2 == pytest.approx(0.01 * 1.0 * 0.09 / (2 * 0.095))
    assert params.theta == pytest.approx(params.sigma**2 * 4)


def test_primitive_construction_step_size_error():
    with pytest.raises(InputError, match="step"):
        bound_params_from_primitives(2.0, 1.0, 0.1, 0.5, 1.0)
    with pytest.raises(InputError):
        bound_params_from_primitives(-0.1, 1.0, 0.1, 0.5, 1.0)


def test_parameter_invariants():
    with pytest.raises(InputError):
        BoundParams(0.0, 0.1, 1.0, 0.0)
    with pytest.raises(InputError):
        BoundParams(0.1, -0.1, 1.0, 0.0)
    with pytest.raises(InputError):
        BoundParams(0.1, 0.5, 0.3, 0.0)  # noise floor above the start
    with pytest.raises(InputError):
        BoundParams(2.0, 0.1, 1.0, 0.0)  # lam * (delta0 + sigma) > 1
    with pytest.raises(InputError):
        BoundParams(0.1, 0.1, 1.0, -1.0)


def test_residual_bound_worked_value():
    assert residual_bound(10, bp()) == pytest.approx(RESIDUAL_K10, rel=1e-12)
    # and the plain-arithmetic rendering of the same formula
    plain = 1.0 / (1.02**10 * (1 / 0.9 + 5.0) - 5.0) + 0.1
    assert residual_bound(10, bp()) == pytest.approx(plain, rel=1e-12)


def test_residual_bound_boundary_behaviour():
    assert residual_bound(0, bp()) == 1.0  # exact, not approximate
    assert residual_bound(10**9, bp()) == pytest.approx(0.1, rel=1e-6)
    huge = residual_bound(10**7, bp(lam=0.5, sigma=0.9, delta0=1.0))
    assert huge == pytest.approx(0.9)


def test_residual_bound_monotone_and_floored():
    rng = np.random.default_rng(2468)
    for trial in range(50):
        delta0 = 10 ** rng.uniform(-2, 2)
        sigma = delta0 * rng.uniform(0.01, 0.99)
        lam = rng.uniform(0.01, 0.99) / (delta0 + sigma)
        params = BoundParams(lam, sigma, delta0, 0.0)
        ks = [0, 1, 2, 5, 17, 100, 1000]
        values = [residual_bound(k, params) for k in ks]
        assert all(a >= b - 1e-15 for a, b in zip(values, values[1:])), (
            f"seed 2468 trial {trial}"
        )
        assert all(v >= sigma for v in values)


def test_residual_bound_rejects_degenerate_noise():
    with pytest.raises(InputError, match="gd_limit"):
        residual_bound(5, BoundParams(0.1, 0.0, 1.0, 0.0))
    with pytest.raises(InputError, match="k"):
        residual_bound(-1, bp())


def test_noise_free_limit_values():
    assert gd_limit(10, 0.1, 1.0) == 0.5
    assert gd_limit(0, 0.1, 1.0) == 1.0
    with pytest.raises(InputError):
        gd_limit(5, 0.0, 1.0)
    with pytest.raises(InputError):
        gd_limit(-1, 0.1, 1.0)


def test_vanishing_noise_recovers_noise_free_limit():
    params = BoundParams(0.1, 1e-8, 1.0, 0.0)
    for k in (1, 10, 100, 1000):
        assert residual_bound(k, params) == pytest.approx(
            gd_limit(k, 0.1, 1.0), rel=1e-6
        )


def test_exact_update_count_worked_value():
    value = n_update_lower_bound_exact(0.1, bp(sigma=0.01))
    assert value == pytest.approx(EXACT_N, rel=1e-12)


def test_exact_update_count_edges():
    with pytest.raises(InputError, match="noise floor"):
        n_update_lower_bound_exact(0.005, bp(sigma=0.01))
    # the bound diverges (logarithmically) as the target closes on the floor
    gaps = [1e-3, 1e-6, 1e-9, 1e-15]
    values = [n_update_lower_bound_exact(0.01 + g, bp(sigma=0.01)) for g in gaps]
    assert all(a < b for a, b in zip(values, values[1:]))
    assert values[-1] > 1e4
    nearly_done = n_update_lower_bound_exact(0.999999, bp(sigma=0.01))
    assert 0 < nearly_done < 1e-3


def test_taylor_update_count_worked_value():
    out = n_update_lower_bound_taylor(0.1, lam=0.1, delta0=1.0, theta=1e-4, minibatch=1)
    assert out.value == pytest.approx(90 * (1 + (1e-4 / 3) * 111), rel=1e-12)
    assert out.value == pytest.approx(TAYLOR_N, abs=5e-4)
    assert out.n_inf == pytest.approx(90.0, rel=1e-12)
    assert out.value == pytest.approx(out.n_inf + out.alpha, rel=1e-12)  # M=1
    # agreement with the exact form at small noise
    assert out.value == pytest.approx(EXACT_N, rel=2e-3)


def test_taylor_noise_free_reduces_to_floor():
    out = n_update_lower_bound_taylor(0.1, 0.1, 1.0, theta=0.0, minibatch=7)
    assert out.value == pytest.approx((1 / 0.1) * (1 / 0.1 - 1.0), rel=1e-12)
    assert out.alpha == 0.0


def test_taylor_is_affine_in_inverse_batch():
    out = [
        n_update_lower_bound_taylor(0.05, 0.2, 2.0, theta=0.3, minibatch=m)
        for m in (2, 3, 12)
    ]
    # three-point interpolation: value(M) = n_inf + alpha / M reproduces all
    m1, m2, m3 = 2, 3, 12
    v1, v2, v3 = (o.value for o in out)
    alpha = (v1 - v2) / (1 / m1 - 1 / m2)
    n_inf = v1 - alpha / m1
    assert n_inf + alpha / m3 == pytest.approx(v3, rel=1e-12)
    assert out[0].alpha == pytest.approx(alpha, rel=1e-12)
    assert out[0].n_inf == pytest.approx(n_inf, rel=1e-12)


def test_taylor_rejects_reached_target():
    with pytest.raises(InputError):
        n_update_lower_bound_taylor(1.0, 0.1, 1.0, 0.0, 1)
    with pytest.raises(InputError):
        n_update_lower_bound_taylor(2.0, 0.1, 1.0, 0.0, 1)


def test_exact_and_taylor_gap_shrinks_linearly_in_noise():
    # First-order check pinned by high-precision evaluation: the gap is
    # dominated by a term linear in the noise floor, so halving sigma roughly
    # halves the relative gap (ratio ~2, not better).
    def rel_gap(sigma):
        exact = n_update_lower_bound_exact(0.1, bp(sigma=sigma, theta=sigma**2))
        taylor = n_update_lower_bound_taylor(
            0.1, 0.1, 1.0, theta=sigma**2, minibatch=1
        ).value
        return abs(exact - taylor) / exact

    gap = rel_gap(0.01)
    half = rel_gap(0.005)
    assert gap == pytest.approx(REL_GAP, rel=1e-3)
    assert half == pytest.approx(REL_GAP_HALF_SIGMA, rel=1e-3)
    assert gap / half == pytest.approx(2.04, abs=0.05)


def test_dominance_report_worked_case():
    report = check_dominance(0.1, 0.1, 1.0, k_max=100)
    assert report.ok
    assert report.n_violations == 0
    assert report.gaps[0] == pytest.approx(0.0, abs=1e-15)
    assert report.gaps[10] == pytest.approx(RESIDUAL_K10 - 0.5, rel=1e-9)
    assert report.min_gap_k == 0


def test_dominance_random_draws():
    rng = np.random.default_rng(1357)
    for trial in range(200):
        delta0 = 10 ** rng.uniform(-2, 2)
        sigma = delta0 * rng.uniform(0.001, 0.999)
        lam = rng.uniform(0.01, 0.99) / (delta0 + sigma)
        report = check_dominance(lam, sigma, delta0, k_max=200)
        assert report.ok, f"seed 1357 trial {trial}: min gap {report.min_gap}"
        assert report.min_gap >= -1e-12 * delta0


def test_csv_writers(tmp_path):
    ks = [0, 1, 2]
    params = bp()
    curve = [residual_bound(k, params) for k in ks]
    limit = [gd_limit(k, 0.1, 1.0) for k in ks]
    path = tmp_path / "bound.csv"
    write_bound_csv(path, ks, curve, limit)
    lines = path.read_text().splitlines()
    assert lines[0] == "k,residual_bound,gd_limit"
    assert lines[1] == "0,1.0,1.0"
    npath = tmp_path / "nbound.csv"
    write_nbound_csv(npath, [1, 2], [90.42, 60.0], [90.33, 59.9])
    assert npath.read_text().splitlines()[0] == "M,n_lower_exact,n_lower_taylor"
