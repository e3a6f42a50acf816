import numpy as np
import pytest

from sgdplan import (
    CommKind,
    CvConfig,
    HardwareParams,
    InputError,
    comm_time,
    cv_gamma_time,
    fit_hardware,
    gamma_time,
    t_update,
)
from sgdplan.hardware import (
    FLAG_COMM_CLAMPED,
    FLAG_KNEE_UNRESOLVED,
    read_hw_json,
    read_timings_csv,
    write_hw_json,
    write_timings_csv,
)

ALLREDUCE = HardwareParams(1e-4, 32, 0.01, CommKind.ALLREDUCE)
PS = HardwareParams(1e-4, 32, 0.01, CommKind.PARAMETER_SERVER)
SINGLE = HardwareParams(1e-4, 32)


def test_compute_time_plateau_and_linear_regime():
    assert gamma_time(16, SINGLE) == pytest.approx(3.2e-3)
    assert gamma_time(64, SINGLE) == pytest.approx(6.4e-3)
    assert gamma_time(32, SINGLE) == pytest.approx(32 * 1e-4)


def test_communication_time_by_kind():
    assert comm_time(8, ALLREDUCE) == pytest.approx(0.01)
    assert comm_time(8, PS) == pytest.approx(0.08)
    for hw in (ALLREDUCE, PS, SINGLE):
        assert comm_time(1, hw) == 0.0
    with pytest.raises(InputError):
        comm_time(2, SINGLE)


def test_update_time_splits_batch_across_learners():
    assert t_update(200, 4, ALLREDUCE) == pytest.approx(0.015)
    assert t_update(64, 4, ALLREDUCE) == pytest.approx(0.0132)
    assert t_update(32, 1, SINGLE) == pytest.approx(3.2e-3)


def test_update_time_monotonicity_and_knee_continuity():
    for m_lo, m_hi in [(1, 2), (16, 32), (31, 33), (100, 400)]:
        assert t_update(m_lo, 2, ALLREDUCE) <= t_update(m_hi, 2, ALLREDUCE)
    for p_lo, p_hi in [(2, 4), (4, 16)]:
        assert t_update(512, p_hi, ALLREDUCE) <= t_update(512, p_lo, ALLREDUCE)
    knee_m = 32 * 4
    below = t_update(knee_m - 1e-9, 4, ALLREDUCE)
    above = t_update(knee_m + 1e-9, 4, ALLREDUCE)
    assert above - below < 1e-10


def test_cv_extended_compute_time():
    cv = CvConfig(updates_per_cv=100, m_cv=128, gamma_cv=1e-4)
    assert cv_gamma_time(64, SINGLE, cv) == pytest.approx(0.6528)
    both_flat = cv_gamma_time(16, SINGLE, CvConfig(1, 8, 2e-4))
    assert both_flat == pytest.approx(1e-4 * 32 + 2e-4 * 32)
    disabled = cv_gamma_time(64, SINGLE, CvConfig(3, 128, 0.0))
    assert disabled == pytest.approx(3 * gamma_time(64, SINGLE))


def test_hardware_params_validation():
    with pytest.raises(InputError):
        HardwareParams(0.0, 32)
    with pytest.raises(InputError):
        HardwareParams(1e-4, 0)
    with pytest.raises(InputError):
        HardwareParams(1e-4, 32, -0.1, CommKind.ALLREDUCE)
    none_kind = HardwareParams(1e-4, 32, 0.5, CommKind.NONE)
    assert none_kind.delta == 0.0  # single learner: no communication term
    with pytest.raises(InputError):
        CvConfig(0, 1, 1e-4)


def exact_timings(gamma, m_t, ms, delta=None, kind=CommKind.ALLREDUCE, ps=()):
    hw = HardwareParams(gamma, m_t, delta or 0.0,
                        kind if delta is not None else CommKind.NONE)
    rows = [(m, 1, gamma * max(m, m_t)) for m in ms]
    for p in ps:
        for m in ms:
            rows.append((m, p, t_update(m, p, hw)))
    return rows


def test_fit_recovers_exact_single_learner_model():
    rows = exact_timings(1e-4, 32, [4, 8, 16, 32, 64, 128, 256])
    hw = fit_hardware(rows)
    assert hw.gamma == pytest.approx(1e-4, rel=1e-9)
    assert hw.m_t == 32
    assert hw.comm_kind is CommKind.NONE
    assert hw.flags == []


def test_fit_recovers_noisy_model_within_tolerance():
    rng = np.random.default_rng(99)
    rows = [
        (m, 1, 1e-4 * max(m, 32) * (1.0 + rng.normal(0.0, 0.02)))
        for m in [4, 8, 16, 32, 64, 128, 256]
        for _ in range(5)
    ]
    hw = fit_hardware(rows)
    assert hw.gamma == pytest.approx(1e-4, rel=0.05)
    assert hw.m_t in (16, 32, 64)  # within one grid step of the true knee


def test_fit_flags_unresolved_knee_on_purely_linear_data():
    rows = [(m, 1, 2e-4 * m) for m in [8, 16, 32, 64, 128]]
    hw = fit_hardware(rows)
    assert hw.m_t == 8
    assert FLAG_KNEE_UNRESOLVED in hw.flags
    assert hw.gamma == pytest.approx(2e-4, rel=1e-9)


def test_fit_classifies_constant_communication():
    rows = exact_timings(1e-4, 32, [8, 16, 32, 64, 128], delta=0.02,
                         kind=CommKind.ALLREDUCE, ps=[2, 4, 8])
    hw = fit_hardware(rows)
    assert hw.comm_kind is CommKind.ALLREDUCE
    assert hw.delta == pytest.approx(0.02, rel=1e-9)


def test_fit_classifies_linear_communication():
    rows = exact_timings(1e-4, 32, [8, 16, 32, 64, 128], delta=0.004,
                         kind=CommKind.PARAMETER_SERVER, ps=[2, 4, 8, 16])
    hw = fit_hardware(rows)
    assert hw.comm_kind is CommKind.PARAMETER_SERVER
    assert hw.delta == pytest.approx(0.004, rel=1e-9)


def test_fit_clamps_negative_communication_residuals():
    rows = [(m, 1, 1e-4 * max(m, 32)) for m in [8, 16, 32, 64, 128]]
    # multi-learner rows faster than the compute model alone allows
    rows += [(64, p, 1e-4 * 32 - 1e-4) for p in (2, 4)]
    hw = fit_hardware(rows)
    assert hw.delta == 0.0
    assert FLAG_COMM_CLAMPED in hw.flags


def test_fit_uses_median_over_repeats():
    rows = []
    for m in [8, 16, 32, 64, 128]:
        good = 1e-4 * max(m, 32)
        rows += [(m, 1, good), (m, 1, good), (m, 1, good * 50)]  # one outlier
    hw = fit_hardware(rows)
    assert hw.gamma == pytest.approx(1e-4, rel=1e-9)
    assert hw.m_t == 32


def test_fit_is_idempotent_on_its_own_predictions():
    rng = np.random.default_rng(17)
    rows = [
        (m, 1, 1.3e-4 * max(m, 64) * (1 + rng.normal(0, 0.03)))
        for m in [8, 16, 32, 64, 128, 256, 512]
    ]
    first = fit_hardware(rows)
    replay = [(m, 1, t_update(m, 1, first)) for m, _, _ in rows]
    second = fit_hardware(replay)
    assert second.gamma == pytest.approx(first.gamma, rel=1e-9)
    assert second.m_t == first.m_t


def test_fit_requires_enough_distinct_batches():
    with pytest.raises(InputError, match="distinct"):
        fit_hardware([(8, 1, 1e-3), (16, 1, 2e-3)])
    with pytest.raises(InputError):
        fit_hardware([(8, 2, 1e-3), (16, 2, 2e-3), (32, 2, 4e-3)])  # no P=1 rows


def test_fit_requires_two_learner_counts_for_communication():
    rows = exact_timings(1e-4, 32, [8, 16, 32, 64], delta=0.01,
                         kind=CommKind.ALLREDUCE, ps=[4])
    with pytest.raises(InputError, match="learner counts"):
        fit_hardware(rows)


def test_timings_and_hw_round_trips(tmp_path):
    rows = [(8, 1, 0.0032), (64, 1, 0.0064), (64, 4, 0.0132)]
    path = tmp_path / "timings.csv"
    write_timings_csv(path, rows)
    assert read_timings_csv(path) == rows
    hw_path = tmp_path / "hw.json"
    write_hw_json(hw_path, ALLREDUCE)
    first = hw_path.read_bytes()
    write_hw_json(hw_path, ALLREDUCE)
    assert hw_path.read_bytes() == first
    assert read_hw_json(hw_path) == ALLREDUCE
