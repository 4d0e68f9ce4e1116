# When does providing flexibility beat its cost?
#
# Builds a small cost grid on the two-job micro fixture, then compares its
# USD/kWh cells against price percentiles from two synthetic market series:
# a flat scarcity product (3.8 USD/kWh whenever called) and a spiky balancing
# market whose high percentiles dwarf its median. A cell is profitable from
# the first percentile whose price covers the cell's average cost.

import numpy as np

from dcflex import (
    DataCenterSpec,
    EconParams,
    JobTable,
    TimeGrid,
    format_profitability_text,
    price_percentile_table,
    profitability_report,
    run_costmin_campaign,
    service_grid,
)
from dcflex.ingest import PriceSeries
from datetime import datetime, timedelta

grid = TimeGrid(step_minutes=15, steps=4)
jobs = JobTable(["a", "b"], [1, 1], [2, 2], [1, 1])
spec = DataCenterSpec(total_resources=2, preempt_overhead_min=0.5,
                      max_delay_frac=1.0, device_class="cpu_general")
econ = EconParams(0.5, 1.0, 0.05)
services = service_grid([0.25], [2920], grid)
cost_grid = run_costmin_campaign(jobs, spec, econ, grid, services,
                                 delays=[1.0], flex_fractions=[1.0], master_seed=2)

start = datetime(2024, 1, 1)
flat = PriceSeries(
    market="scarcity_product",
    timestamps=[start + timedelta(hours=h) for h in range(100)],
    prices=[3.8] * 100,
)
rng = np.random.default_rng(0)
spiky_prices = np.concatenate([rng.uniform(0.01, 0.08, 990),
                               rng.uniform(1.0, 9.0, 10)])
spiky = PriceSeries(
    market="balancing_market",
    timestamps=[start + timedelta(hours=h) for h in range(1000)],
    prices=list(spiky_prices),
)

prices = price_percentile_table([flat, spiky],
                                percentiles=(50, 90, 99, 99.9, 100))
report = profitability_report(cost_grid, prices)
print(format_profitability_text(report))
