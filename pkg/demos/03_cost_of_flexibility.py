# Average cost of flexibility, solved nominally and rescaled to hardware.
#
# Runs the cost-minimization campaign on a 10-day synthetic trace for one
# congestion-management style service (2 h, 365/yr) at 50% and 100% of the
# achievable flexibility, then rescales the nominal USD/kWh results to a
# GPU fleet using a cost scaling factor instead of re-optimizing.

from dcflex import (
    DataCenterSpec,
    EconParams,
    TimeGrid,
    discretize,
    generate_synthetic_trace,
    run_costmin_campaign,
    scale_acof,
    service_grid,
    zero_queue,
)

grid = TimeGrid(step_minutes=15, steps=960)
spec = DataCenterSpec(total_resources=100, unit_power_kw=1.0,
                      preempt_overhead_min=0.5, device_class="cpu_general")
nominal = EconParams(price_reduction_coeff=0.5, hourly_unit_price=1.0,
                     energy_price=0.05)

trace = generate_synthetic_trace("general_like", days=10, seed=2, grid=grid, spec=spec)
table = discretize(zero_queue(trace), grid)

services = service_grid([2.0], [365], grid)
result = run_costmin_campaign(
    table, spec, nominal, grid, services,
    delays=[0.2],
    flex_fractions=[0.5, 1.0],
    master_seed=3,
)

print("nominal results (unit power 1 kW, 1 USD per resource-hour):")
for frac in (0.5, 1.0):
    cell = result.cell(2.0, 365.0, 0.2, frac)
    print(f"  {int(frac * 100):>3}% of max: {cell.mean_flex_kw:7.2f} kW "
          f"at {cell.acof:.3f} USD/kWh")

# rescale to an accelerator fleet: 1.2 USD/h devices drawing 0.7 kW, with a
# market-implied price reduction coefficient of 0.8
cell = result.cell(2.0, 365.0, 0.2, 1.0)
scaled = scale_acof(cell.acof, price_reduction_coeff=0.8, hourly_unit_price=1.2,
                    unit_power_kw=0.7, nominal_econ=nominal,
                    nominal_unit_power_kw=1.0)
print(f"\nrescaled ACoF for 0.7 kW, 1.2 USD/h devices (A=0.8): {scaled:.3f} USD/kWh")
print("(closed-form rescaling, no re-optimization)")
