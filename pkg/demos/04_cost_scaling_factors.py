# Cost scaling factors from a cloud rental pricing table.
#
# Every pair of same-provider options where one is strictly faster and the
# slower one is cheaper reveals how the market prices computing delay: the
# price gap over the implied delay gives a price reduction coefficient, and
# with the option's price and power a cost scaling factor. Percentiles of
# those samples transfer nominal USD/kWh results to real device economics.

from pathlib import Path

from dcflex import (
    EconParams,
    estimate_csf_samples,
    parse_cloud_pricing,
    percentile,
)

pricing = Path(__file__).parent / "data" / "pricing_options.csv"
options = parse_cloud_pricing(pricing)
print(f"{len(options)} rental options parsed ({options.dropped} rows dropped)")

nominal = EconParams(price_reduction_coeff=0.5, hourly_unit_price=1.0,
                     energy_price=0.05)
samples = estimate_csf_samples(options, nominal, nominal_unit_power_kw=1.0)
print(f"{len(samples)} comparable (fast, slow) pairs survive the filters:")
for s in samples:
    print(f"  {s.provider}: {s.fast_option.model} vs {s.slow_option.model} "
          f"-> A={s.price_reduction_coeff:.3f}, csf={s.csf:.2f}")

csf_values = [s.csf for s in samples]
for p in (25, 50, 75):
    print(f"  P{p} cost scaling factor: {percentile(csf_values, p):.2f}")

nominal_acof = 0.58  # a typical nominal USD/kWh result from demo 03
p50 = percentile(csf_values, 50)
print(f"\nnominal ACoF {nominal_acof} USD/kWh scaled by the median factor: "
      f"{nominal_acof * p50:.2f} USD/kWh")
