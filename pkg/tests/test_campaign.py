import numpy as np
import pytest

from dcflex.campaign import (
    CampaignResult,
    derive_seed,
    horizon_count,
    run_costmin_campaign,
    run_flexmax_campaign,
    sample_activations,
    service_grid,
)
from dcflex.model import DataCenterSpec, JobTable, ServiceSpec, TimeGrid
from dcflex.preprocess import baseline_profile
from dcflex.problem import DqParams, build_flexmax
from dcflex.solve import solve

from conftest import ECON, TINY_GRID, tiny_a_jobs, tiny_a_spec, tiny_b_jobs, tiny_b_spec


def test_sample_activations_disjoint():
    grid = TimeGrid(15, 960)
    plan = sample_activations(grid, 80, 1, rng_seed=7)
    assert plan.count == 80
    starts = sorted(a for a, _ in plan.windows)
    assert len(set(starts)) == 80
    covered = np.zeros(961, dtype=int)
    for a, b in plan.windows:
        covered[a:b + 1] += 1
    assert covered.max() == 1


def test_sample_activations_edge_cases():
    grid = TimeGrid(15, 12)
    assert sample_activations(grid, 0, 3, 1).windows == ()
    tiling = sample_activations(grid, 4, 3, rng_seed=123)
    assert tiling.windows == ((1, 3), (4, 6), (7, 9), (10, 12))
    with pytest.raises(ValueError, match="do not fit"):
        sample_activations(grid, 5, 3, 1)


def test_sample_activations_deterministic():
    grid = TimeGrid(15, 100)
    a = sample_activations(grid, 5, 3, rng_seed=derive_seed(9, "act", 1))
    b = sample_activations(grid, 5, 3, rng_seed=derive_seed(9, "act", 1))
    c = sample_activations(grid, 5, 3, rng_seed=derive_seed(10, "act", 1))
    assert a.windows == b.windows
    assert a.windows != c.windows


def test_service_grid():
    grid = TimeGrid(15, 960)
    services = service_grid([0.25, 2.0], [365, 2920], grid)
    assert len(services) == 4
    assert {(s.duration_steps, s.window_count) for s in services} == \
        {(1, 10), (1, 80), (8, 10), (8, 80)}


def _find_seed_with_window_at_step_one(duration_hours, frequency, delay):
    svc = ServiceSpec.from_requirements(duration_hours, frequency, TINY_GRID)
    for seed in range(200):
        plan = sample_activations(
            TINY_GRID, svc.window_count, svc.duration_steps,
            derive_seed(seed, "act", 1, duration_hours, frequency, delay))
        if plan.windows == ((1, 1),):
            return seed
    raise AssertionError("no seed with a window at step 1 in range")


def test_flexmax_campaign_tiny_a_single_horizon():
    jobs = tiny_a_jobs()
    spec = tiny_a_spec()
    seed = _find_seed_with_window_at_step_one(0.25, 2920.0, 1.0)
    services = service_grid([0.25], [2920.0], TINY_GRID)
    result = run_flexmax_campaign(jobs, spec, TINY_GRID, services, [1.0],
                                  master_seed=seed)
    cell = result.cell(0.25, 2920.0, 1.0)
    assert cell.windows_evaluated == 1
    assert cell.mean_flex_kw == pytest.approx(2.0, abs=1e-6)
    assert cell.norm_flex == pytest.approx(1.0, abs=1e-6)

    # a single-horizon campaign equals one direct solve on the same plan
    base = baseline_profile(jobs, spec, TINY_GRID)
    plan = sample_activations(TINY_GRID, 1, 1,
                              derive_seed(seed, "act", 1, 0.25, 2920.0, 1.0))
    direct = solve(build_flexmax(jobs, spec.with_max_delay(1.0), base, plan))
    assert cell.mean_flex_kw == direct.mean_flex_kw


def test_flexmax_campaign_no_delay_full_utilization():
    # constantly full data center with no allowed delay has nothing to shift
    grid = TimeGrid(15, 8)
    jobs = JobTable(["a"], [1], [16], [2.0])
    spec = DataCenterSpec(total_resources=2.0, max_delay_frac=0.0,
                          preempt_overhead_min=0.5, device_class="cpu_general")
    services = service_grid([0.25, 0.5], [2920.0], grid)
    result = run_flexmax_campaign(jobs, spec, grid, services, [0.0], master_seed=3)
    assert horizon_count(jobs, grid) == 2
    for cell in result.cells.values():
        assert cell.windows_evaluated == 2
        assert cell.mean_flex_kw == pytest.approx(0.0, abs=1e-9)


def test_two_horizon_average():
    grid = TimeGrid(15, 8)
    # first horizon busy (flexible), second empty
    jobs = JobTable(["a", "b"], [1, 1], [2, 2], [1.0, 1.0])
    spec = tiny_a_spec()
    # pad the table to cover two horizons with a tiny background job
    jobs = JobTable(["a", "b", "pad"], [1, 1, 9], [2, 2, 8], [1.0, 1.0, 0.01])
    services = service_grid([0.25], [2920.0], grid)
    result = run_flexmax_campaign(jobs, spec, grid, services, [1.0], master_seed=0)
    cell = result.cell(0.25, 2920.0, 1.0)
    assert cell.windows_evaluated == 2
    assert len(cell.statuses) == 2


def test_costmin_campaign_tiny_a():
    jobs = tiny_a_jobs()
    spec = tiny_a_spec()
    seed = _find_seed_with_window_at_step_one(0.25, 2920.0, 1.0)
    services = service_grid([0.25], [2920.0], TINY_GRID)
    result = run_costmin_campaign(jobs, spec, ECON, TINY_GRID, services, [1.0],
                                  [0.0, 1.0], master_seed=seed)
    full = result.cell(0.25, 2920.0, 1.0, 1.0)
    assert full.mean_flex_kw == pytest.approx(2.0, abs=1e-6)
    assert full.acof == pytest.approx(0.5, abs=1e-6)  # 0.25 USD over 0.5 kWh
    assert full.aecof == 0.0
    assert full.acof == full.apcof + full.aecof
    zero = result.cell(0.25, 2920.0, 1.0, 0.0)
    assert zero.degenerate
    assert zero.acof == 0.0


def test_costmin_campaign_tiny_b_dynamic_quota():
    """Dynamic-quota fixture at its oracle-verified values.

    The delivered maximum is 0.5 kW; recovery runs entirely on quota in the
    second step, so the only cost is the extra energy at the energy price
    (0.05 USD/kWh). See test_problem.test_tiny_b_true_optimum_oracle.
    """
    jobs = tiny_b_jobs()
    spec = tiny_b_spec()
    seed = _find_seed_with_window_at_step_one(0.25, 2920.0, 0.0)
    services = service_grid([0.25], [2920.0], TINY_GRID)
    result = run_costmin_campaign(jobs, spec, ECON, TINY_GRID, services, [0.0],
                                  [1.0], dq=DqParams(True, 0.5), master_seed=seed)
    cell = result.cell(0.25, 2920.0, 0.0, 1.0)
    assert cell.mean_flex_kw == pytest.approx(0.5, abs=1e-6)
    assert cell.apcof == pytest.approx(0.0, abs=1e-7)
    assert cell.aecof == pytest.approx(0.05, abs=1e-7)
    assert cell.acof == cell.apcof + cell.aecof


def test_campaign_json_and_csv_round_trip(tmp_path):
    jobs = tiny_a_jobs()
    spec = tiny_a_spec()
    services = service_grid([0.25], [2920.0], TINY_GRID)
    result = run_flexmax_campaign(jobs, spec, TINY_GRID, services, [1.0], master_seed=1)
    path = tmp_path / "grid.json"
    result.write_json(path)
    again = CampaignResult.read_json(path)
    assert again.kind == result.kind
    assert again.to_json() == result.to_json()

    csv_path = tmp_path / "grid.csv"
    result.write_csv(csv_path)
    text = csv_path.read_text()
    assert text.splitlines()[0] == \
        "duration_hours,annual_frequency,max_delay,flex_fraction,metric,value"
    assert "mean_flex_kw" in text


def test_campaign_worker_count_invariance():
    grid = TimeGrid(15, 8)
    jobs = JobTable(["a", "b", "pad"], [1, 1, 9], [2, 2, 8], [1.0, 1.0, 0.01])
    spec = tiny_a_spec()
    services = service_grid([0.25], [2920.0], grid)
    one = run_flexmax_campaign(jobs, spec, grid, services, [1.0, 0.5],
                               master_seed=5, n_workers=1)
    two = run_flexmax_campaign(jobs, spec, grid, services, [1.0, 0.5],
                               master_seed=5, n_workers=2)
    assert one.to_json() == two.to_json()
