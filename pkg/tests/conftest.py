import re

import numpy as np
import pytest

from dcflex.model import (
    ActivationPlan,
    DataCenterSpec,
    EconParams,
    JobTable,
    TimeGrid,
)
from dcflex.preprocess import baseline_profile

# --- shared desk-scale fixtures -------------------------------------------

TINY_GRID = TimeGrid(step_minutes=15.0, steps=4)


def tiny_a_jobs() -> JobTable:
    """Two identical jobs: submit step 1, two compute steps, one resource."""
    return JobTable(["a", "b"], [1, 1], [2, 2], [1.0, 1.0])


def tiny_a_spec(max_delay_frac: float = 1.0) -> DataCenterSpec:
    return DataCenterSpec(
        total_resources=2.0,
        unit_power_kw=1.0,
        fixed_power_kw=0.0,
        preempt_overhead_min=0.5,
        preempt_budget_frac=0.01,
        max_delay_frac=max_delay_frac,
        device_class="cpu_general",
    )


def tiny_b_jobs() -> JobTable:
    """One job: submit step 1, two compute steps, one resource."""
    return JobTable(["a"], [1], [2], [1.0])


def tiny_b_spec() -> DataCenterSpec:
    return DataCenterSpec(
        total_resources=2.0,
        unit_power_kw=1.0,
        fixed_power_kw=0.0,
        preempt_overhead_min=0.5,
        preempt_budget_frac=0.01,
        max_delay_frac=0.0,
        device_class="cpu_general",
    )


@pytest.fixture
def tiny_a():
    jobs = tiny_a_jobs()
    spec = tiny_a_spec()
    base = baseline_profile(jobs, spec, TINY_GRID)
    plan = ActivationPlan(windows=((1, 1),), grid=TINY_GRID)
    return jobs, spec, base, plan


@pytest.fixture
def tiny_b():
    jobs = tiny_b_jobs()
    spec = tiny_b_spec()
    base = baseline_profile(jobs, spec, TINY_GRID)
    plan = ActivationPlan(windows=((1, 1),), grid=TINY_GRID)
    return jobs, spec, base, plan


ECON = EconParams(price_reduction_coeff=0.5, hourly_unit_price=1.0, energy_price=0.05)


def random_instance(rng: np.random.Generator, max_jobs: int = 5, max_steps: int = 8,
                    max_delay_frac: float = 0.5):
    """A small random zero-queue instance with a consistent capacity."""
    steps = int(rng.integers(4, max_steps + 1))
    grid = TimeGrid(step_minutes=15.0, steps=steps)
    n = int(rng.integers(1, max_jobs + 1))
    submit, dur, res = [], [], []
    for _ in range(n):
        t0 = int(rng.integers(1, steps))
        d = int(rng.integers(1, min(3, steps - t0 + 1) + 1))
        submit.append(t0)
        dur.append(d)
        res.append(float(rng.choice([0.5, 1.0, 2.0])))
    jobs = JobTable([f"j{i}" for i in range(n)], submit, dur, res)
    usage = np.zeros(steps + 1)
    np.add.at(usage, jobs.submit_step - 1, jobs.resources)
    np.add.at(usage, jobs.complete_step, -jobs.resources)
    peak = float(np.cumsum(usage[:-1]).max())
    spec = DataCenterSpec(
        total_resources=max(peak, 0.5),
        unit_power_kw=1.0,
        fixed_power_kw=0.0,
        preempt_overhead_min=0.5,
        preempt_budget_frac=0.01,
        max_delay_frac=max_delay_frac,
        device_class="cpu_general",
    )
    base = baseline_profile(jobs, spec, grid)
    return grid, jobs, spec, base


def random_plan(rng: np.random.Generator, grid: TimeGrid, max_windows: int = 2,
                max_duration: int = 2) -> ActivationPlan:
    from dcflex.campaign import sample_activations
    duration = int(rng.integers(1, max_duration + 1))
    count_cap = grid.steps // duration
    count = int(rng.integers(1, min(max_windows, count_cap) + 1))
    return sample_activations(grid, count, duration, int(rng.integers(0, 2 ** 31)))


# --- acceptance criterion reporting ----------------------------------------

_ACCEPTANCE = {}
_PATTERN = re.compile(r"test_acceptance\.py::test_criterion_(\d+)")


def pytest_runtest_logreport(report):
    match = _PATTERN.search(report.nodeid)
    if not match:
        return
    num = int(match.group(1))
    if report.when == "call":
        _ACCEPTANCE[num] = report.outcome
    elif report.when == "setup" and report.outcome == "skipped":
        _ACCEPTANCE[num] = "skipped"


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_ACCEPTANCE):
        terminalreporter.write_line(f"criterion {num:02d}: {_ACCEPTANCE[num].upper()}")
