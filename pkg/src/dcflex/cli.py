"""Command-line entry point.

Subcommands: ingest, preprocess, flexmax, costmin, csf, scale, profit,
report, synth. Every run reads defaults, an optional --config INI file,
DCFLEX_* environment overrides and flags, and echoes the resolved
configuration into its output artifact (JSON outputs embed it; CSV/SVG
outputs get a sibling ``<out>.run.json``).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from . import config as cfg
from .campaign import (
    CampaignResult,
    run_costmin_campaign,
    run_flexmax_campaign,
    service_grid,
)
from .ingest import (
    IngestError,
    parse_cloud_pricing,
    parse_job_trace,
    parse_price_series,
    select_window,
    write_job_trace,
)
from .market import (
    format_profitability_text,
    price_percentile_table,
    profitability_report,
    write_profitability_json,
)
from .model import EconParams, TimeGrid
from .preprocess import discretize, write_job_table, zero_queue
from .report import heatmap_export
from .scaling import (
    estimate_csf_samples,
    percentile,
    scale_acof,
    scale_flex_kw,
    scale_flex_norm,
    write_csf_samples,
)
from .synth import generate_synthetic_trace


def _echo_config(config: dict, out_path) -> None:
    run_path = Path(str(out_path) + ".run.json")
    run_path.write_text(json.dumps({"resolved_config": config}, indent=2, sort_keys=True) + "\n")


def _prepare_jobs(args, config):
    grid = cfg.grid_from_config(config)
    raw = parse_job_trace(args.trace)
    if getattr(args, "days", None):
        raw = select_window(
            raw, args.days, grid,
            allowed_days=[int(d) for d in cfg.parse_float_list(config["ingest"]["allowed_days"])],
            trim_frac=config["ingest"]["trim_frac"],
        )
    if raw.span is not None:
        lo, hi = raw.span
        start = raw.start.clip(lo, hi)
        end = raw.end.clip(lo, hi)
        raw = type(raw)(ids=raw.ids, submit=start, start=start, end=end,
                        resources=raw.resources, dropped=raw.dropped, span=raw.span)
        origin = lo
    else:
        origin = math.floor(float(raw.start.min()) / grid.step_seconds) * grid.step_seconds
    grid = TimeGrid(grid.step_minutes, grid.steps, origin)
    table = discretize(zero_queue(raw), grid)
    return table, grid


def _campaign_args(args, config):
    durations = cfg.parse_float_list(args.durations or config["campaign"]["durations_hours"])
    freqs = cfg.parse_float_list(args.freqs or config["campaign"]["frequencies"])
    delays = cfg.parse_float_list(args.delays or config["campaign"]["delays"])
    return durations, freqs, delays


def _cmd_synth(args, config):
    table = generate_synthetic_trace(
        args.profile, args.days, args.seed,
        grid=cfg.grid_from_config(config),
        spec=cfg.spec_from_config(config),
    )
    write_job_trace(table, args.out)
    _echo_config(config, args.out)
    print(f"wrote {len(table)} jobs to {args.out}")
    return 0


def _cmd_ingest(args, config):
    if args.trace:
        table = parse_job_trace(args.trace)
        write_job_trace(table, args.out)
        print(f"{len(table)} rows kept, {table.dropped} dropped -> {args.out}")
    elif args.pricing:
        options = parse_cloud_pricing(args.pricing)
        with Path(args.out).open("w") as handle:
            handle.write("provider,device_type,model,unit_count,unit_price,"
                         "unit_power_w,speed,estimated\n")
            for o in options.options:
                handle.write(f"{o.provider},{o.device_type},{o.model},{o.unit_count!r},"
                             f"{o.unit_price!r},{o.unit_power_w!r},{o.speed!r},"
                             f"{int(o.estimated_flag)}\n")
        print(f"{len(options)} options kept, {options.dropped} dropped -> {args.out}")
    elif args.prices:
        series = parse_price_series(
            args.prices, market=args.market,
            conversion_rate=config["ingest"]["currency_rate"],
            currency=config["ingest"]["currency"],
        )
        with Path(args.out).open("w") as handle:
            handle.write("timestamp_iso8601,price\n")
            for stamp, price in zip(series.timestamps, series.prices):
                handle.write(f"{stamp.isoformat()},{float(price)!r}\n")
        print(f"{len(series)} samples -> {args.out}")
    else:
        print("error: one of --trace/--pricing/--prices is required", file=sys.stderr)
        return 2
    _echo_config(config, args.out)
    return 0


def _cmd_preprocess(args, config):
    table, grid = _prepare_jobs(args, config)
    write_job_table(table, args.out)
    _echo_config(config, args.out)
    print(f"{len(table)} discretized jobs -> {args.out}")
    return 0


def _finish_grid(result: CampaignResult, config: dict, out) -> None:
    result.config["toolkit"] = config
    result.write_json(out)


def _cmd_flexmax(args, config):
    table, grid = _prepare_jobs(args, config)
    durations, freqs, delays = _campaign_args(args, config)
    result = run_flexmax_campaign(
        table, cfg.spec_from_config(config), grid,
        service_grid(durations, freqs, grid), delays,
        dq=cfg.dq_from_config(config),
        master_seed=args.seed if args.seed is not None else config["campaign"]["master_seed"],
        backend=cfg.backend_from_config(config),
        clusters_per_day=config["campaign"]["clusters_per_day"],
        aggregate=config["campaign"]["aggregate"],
        n_workers=cfg.resolve_workers(args.workers if args.workers is not None
                                      else config["campaign"]["workers"]),
    )
    _finish_grid(result, config, args.out)
    print(f"flexmax grid with {len(result.cells)} cells -> {args.out}")
    return 0


def _cmd_costmin(args, config):
    table, grid = _prepare_jobs(args, config)
    durations, freqs, delays = _campaign_args(args, config)
    fractions = cfg.parse_float_list(args.fractions or config["campaign"]["fractions"])
    result = run_costmin_campaign(
        table, cfg.spec_from_config(config), cfg.econ_from_config(config), grid,
        service_grid(durations, freqs, grid), delays, fractions,
        dq=cfg.dq_from_config(config),
        master_seed=args.seed if args.seed is not None else config["campaign"]["master_seed"],
        backend=cfg.backend_from_config(config),
        clusters_per_day=config["campaign"]["clusters_per_day"],
        aggregate=config["campaign"]["aggregate"],
        n_workers=cfg.resolve_workers(args.workers if args.workers is not None
                                      else config["campaign"]["workers"]),
    )
    _finish_grid(result, config, args.out)
    print(f"costmin grid with {len(result.cells)} cells -> {args.out}")
    return 0


def _cmd_csf(args, config):
    if args.action != "estimate":
        print(f"error: unknown csf action {args.action!r}", file=sys.stderr)
        return 2
    options = parse_cloud_pricing(args.pricing)
    if args.device != "both":
        options = options.of_type(args.device)
    nominal = cfg.econ_from_config(config, "nominal")
    samples = estimate_csf_samples(options, nominal,
                                   config["nominal"]["unit_power_kw"])
    write_csf_samples(samples, args.out)
    _echo_config(config, args.out)
    percentiles = cfg.parse_float_list(args.percentiles)
    table = {}
    for device in sorted({s.device_type for s in samples}):
        values = [s.csf for s in samples if s.device_type == device]
        table[device] = {repr(p): percentile(values, p) for p in percentiles}
        cols = "  ".join(f"P{p:g}={percentile(values, p):.2f}" for p in percentiles)
        print(f"{device}: {len(values)} samples  {cols}")
    if args.summary:
        Path(args.summary).write_text(json.dumps(
            {"percentiles": table, "samples": len(samples), "resolved_config": config},
            indent=2, sort_keys=True) + "\n")
    return 0


def _cmd_scale(args, config):
    result = CampaignResult.read_json(args.grid)
    original = result.config
    nominal_dc = original.get("datacenter", {})
    nominal_econ_dict = original.get("econ", {})
    if nominal_dc.get("fixed_power_kw", 0.0) != 0.0:
        raise ValueError("grid was not solved with zero fixed power; cannot scale")
    nominal_econ = EconParams(
        price_reduction_coeff=nominal_econ_dict.get("price_reduction_coeff", 0.5),
        hourly_unit_price=nominal_econ_dict.get("hourly_unit_price", 1.0),
        energy_price=nominal_econ_dict.get("energy_price", 0.05),
    )
    nominal_g = nominal_dc.get("unit_power_kw", 1.0)
    target_nr = args.NR if args.NR is not None else nominal_dc.get("total_resources", 1.0)
    for cell in result.cells.values():
        if cell.norm_flex is None:
            continue
        nominal_norm = cell.norm_flex
        cell.norm_flex = scale_flex_norm(nominal_norm, args.G, target_nr, args.G0)
        cell.mean_flex_kw = scale_flex_kw(nominal_norm, args.G, target_nr)
        if cell.apcof is not None:
            cell.apcof = scale_acof(cell.apcof, args.A, args.R, args.G,
                                    nominal_econ, nominal_g)
            cell.aecof = cell.aecof * args.pi / nominal_econ.energy_price
            cell.acof = cell.apcof + cell.aecof
    result.config = dict(original)
    result.config["scaled_to"] = {
        "price_reduction_coeff": args.A, "hourly_unit_price": args.R,
        "unit_power_kw": args.G, "fixed_power_kw": args.G0,
        "total_resources": target_nr, "energy_price": args.pi,
    }
    result.config["toolkit"] = config
    result.write_json(args.out)
    print(f"rescaled grid -> {args.out}")
    return 0


def _cmd_profit(args, config):
    result = CampaignResult.read_json(args.grid)
    paths = [p for p in str(args.prices).split(",") if p]
    markets = [m for m in (args.markets or "").split(",") if m]
    series = []
    for i, path in enumerate(paths):
        market = markets[i] if i < len(markets) else None
        series.append(parse_price_series(
            path, market=market,
            conversion_rate=config["ingest"]["currency_rate"],
            currency=config["ingest"]["currency"],
        ))
    percentiles = cfg.parse_float_list(args.percentiles) if args.percentiles else None
    table = price_percentile_table(series, percentiles or
                                   (25.0, 50.0, 75.0, 90.0, 99.0, 99.9, 99.95, 99.99, 100.0),
                                   currency=config["ingest"]["currency"])
    report = profitability_report(result, table)
    report["resolved_config"] = config
    write_profitability_json(report, args.out)
    text = format_profitability_text(report)
    if args.text:
        Path(args.text).write_text(text)
    else:
        print(text, end="")
    print(f"profitability report -> {args.out}")
    return 0


def _cmd_report(args, config):
    result = CampaignResult.read_json(args.grid)
    metric = args.metric or ("acof" if result.kind == "costmin" else "norm_flex")
    written = heatmap_export(result, metric, args.out_prefix)
    _echo_config(config, args.out_prefix)
    for path in written:
        print(f"wrote {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dcflex",
        description="Data-center power flexibility and cost-of-flexibility toolkit",
    )
    parser.add_argument("--config", help="INI configuration file")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic job trace")
    p.add_argument("--profile", required=True, choices=("ai_like", "general_like"))
    p.add_argument("--days", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("ingest", help="parse and normalize input files")
    p.add_argument("--trace")
    p.add_argument("--pricing")
    p.add_argument("--prices")
    p.add_argument("--market")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("preprocess", help="discretize a trace onto the grid")
    p.add_argument("--trace", required=True)
    p.add_argument("--days", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_preprocess)

    for name, fn in (("flexmax", _cmd_flexmax), ("costmin", _cmd_costmin)):
        p = sub.add_parser(name, help=f"run the {name} campaign")
        p.add_argument("--trace", required=True)
        p.add_argument("--days", type=int)
        p.add_argument("--duration", "--durations", dest="durations")
        p.add_argument("--freq", "--freqs", dest="freqs")
        p.add_argument("--max-delay", "--delays", dest="delays")
        if name == "costmin":
            p.add_argument("--fractions")
        p.add_argument("--seed", type=int)
        p.add_argument("--workers", type=int)
        p.add_argument("--out", required=True)
        p.set_defaults(func=fn)

    p = sub.add_parser("csf", help="estimate cost scaling factors from pricing data")
    p.add_argument("action", choices=("estimate",))
    p.add_argument("--pricing", required=True)
    p.add_argument("--device", default="both", choices=("cpu", "gpu", "both"))
    p.add_argument("--percentiles", default="25,50,75")
    p.add_argument("--out", required=True)
    p.add_argument("--summary")
    p.set_defaults(func=_cmd_csf)

    p = sub.add_parser("scale", help="rescale a nominal grid to other parameters")
    p.add_argument("--grid", required=True)
    p.add_argument("--A", type=float, required=True)
    p.add_argument("--R", type=float, required=True)
    p.add_argument("--G", type=float, required=True)
    p.add_argument("--G0", type=float, default=0.0)
    p.add_argument("--NR", type=float)
    p.add_argument("--pi", type=float, default=0.05)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_scale)

    p = sub.add_parser("profit", help="compare a cost grid against market prices")
    p.add_argument("--grid", required=True)
    p.add_argument("--prices", required=True, help="comma-separated price CSVs")
    p.add_argument("--markets", help="comma-separated market names")
    p.add_argument("--percentiles")
    p.add_argument("--out", required=True)
    p.add_argument("--text")
    p.set_defaults(func=_cmd_profit)

    p = sub.add_parser("report", help="emit grid CSV and SVG heatmaps")
    p.add_argument("--grid", required=True)
    p.add_argument("--metric")
    p.add_argument("--out-prefix", required=True)
    p.set_defaults(func=_cmd_report)
    return parser


def cli_main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    try:
        config = cfg.load_config(args.config)
        return args.func(args, config)
    except (IngestError, ValueError, FileNotFoundError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
