"""Parsers for job traces, cloud pricing tables and market price series.

All parsers are pure functions over file contents; multiple files may be
parsed in parallel without shared state.

Canonical file layouts:
  job trace CSV     header ``id,submit_unix_s,start_unix_s,end_unix_s,resources``
  price series CSV  header ``timestamp_iso8601,price``
  pricing CSV       the 13-column cloud rental option layout (see
                    ``CLOUD_PRICING_COLUMNS``)
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from typing import Sequence

import numpy as np

from .model import TimeGrid

#: Canonical job-trace column names; a schema map may rename them per file.
JOB_TRACE_COLUMNS = ("id", "submit_unix_s", "start_unix_s", "end_unix_s", "resources")

#: Cloud pricing table columns, in file order. Headers are matched after
#: normalization so cosmetic differences in spacing/units do not matter.
CLOUD_PRICING_COLUMNS = (
    "Provider",
    "Type",
    "Model",
    "Number of vCPU / GPU",
    "Memory (RAM per CPU, VRAM per GPU)",
    "Unit Price ($/(unit.h))",
    "Total device price ($/h)",
    "CPU Score",
    "GPU FP32",
    "GPU FP16",
    "Unit Rated Power (W/(vCPU, GPU))",
    "Total Rated Power (W)",
    "Notes",
)


class IngestError(ValueError):
    """Raised for unreadable, malformed or empty input files."""


@dataclass
class RawJobTable:
    """Continuous-time job records straight from a trace file.

    Times are unix seconds; submit <= start <= end is not required on input
    (queue normalization fixes submit later), but end >= start is.
    span, when set, is the (start, end) unix-second window the table was
    selected for.
    """

    ids: tuple
    submit: np.ndarray
    start: np.ndarray
    end: np.ndarray
    resources: np.ndarray
    dropped: int = 0
    span: tuple | None = None

    def __post_init__(self):
        self.ids = tuple(self.ids)
        self.submit = np.asarray(self.submit, dtype=np.float64)
        self.start = np.asarray(self.start, dtype=np.float64)
        self.end = np.asarray(self.end, dtype=np.float64)
        self.resources = np.asarray(self.resources, dtype=np.float64)

    def __len__(self) -> int:
        return len(self.ids)

    def workload_resource_seconds(self) -> float:
        return float(np.sum((self.end - self.start) * self.resources))

    def select(self, mask: np.ndarray, span=None, dropped=None) -> "RawJobTable":
        idx = np.flatnonzero(mask)
        return RawJobTable(
            ids=tuple(self.ids[i] for i in idx),
            submit=self.submit[idx],
            start=self.start[idx],
            end=self.end[idx],
            resources=self.resources[idx],
            dropped=self.dropped if dropped is None else dropped,
            span=self.span if span is None else span,
        )


def parse_job_trace(path, schema: dict | None = None) -> RawJobTable:
    """Parse a job trace CSV into a RawJobTable.

    schema maps canonical column names to the file's column names, e.g.
    ``{"start_unix_s": "start_time"}``; unmapped columns keep their
    canonical names. Rows with missing or non-numeric fields, non-positive
    resources, or end < start are dropped and counted.
    """
    schema = dict(schema or {})
    colmap = {canon: schema.get(canon, canon) for canon in JOB_TRACE_COLUMNS}
    path = Path(path)
    try:
        handle = path.open(newline="")
    except OSError as exc:
        raise IngestError(f"cannot read job trace {path}: {exc}") from exc

    ids, submit, start, end, res = [], [], [], [], []
    dropped = 0
    with handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise IngestError(f"job trace {path} is empty") from None
        positions = {}
        for canon, name in colmap.items():
            if name not in header:
                raise IngestError(f"job trace {path} missing column {name!r}")
            positions[canon] = header.index(name)
        i_id, i_sub, i_sta, i_end, i_res = (
            positions["id"],
            positions["submit_unix_s"],
            positions["start_unix_s"],
            positions["end_unix_s"],
            positions["resources"],
        )
        width = max(positions.values()) + 1
        for row in reader:
            if len(row) < width:
                dropped += 1
                continue
            try:
                sub = float(row[i_sub])
                sta = float(row[i_sta])
                e = float(row[i_end])
                r = float(row[i_res])
            except ValueError:
                dropped += 1
                continue
            if not all(map(math.isfinite, (sub, sta, e, r))):
                dropped += 1
                continue
            if e < sta or r <= 0 or sub < 0 or sta < 0:
                dropped += 1
                continue
            ids.append(row[i_id])
            submit.append(sub)
            start.append(sta)
            end.append(e)
            res.append(r)
    if not ids:
        raise IngestError(f"job trace {path}: no valid rows")
    return RawJobTable(ids=ids, submit=submit, start=start, end=end,
                       resources=res, dropped=dropped)


def _daily_workload(table: RawJobTable, day_edges: np.ndarray) -> np.ndarray:
    """Resource-seconds of running work overlapping each day bucket."""
    loads = np.zeros(len(day_edges) - 1)
    for d in range(len(loads)):
        lo, hi = day_edges[d], day_edges[d + 1]
        overlap = np.minimum(table.end, hi) - np.maximum(table.start, lo)
        overlap = np.clip(overlap, 0.0, None)
        loads[d] = float(np.sum(overlap * table.resources))
    return loads


def select_window(
    table: RawJobTable,
    days: int,
    grid: TimeGrid,
    allowed_days: Sequence[int] = (40, 60, 80),
    trim_frac: float = 0.5,
) -> RawJobTable:
    """Pick the most recent contiguous `days`-long slice of a trace.

    Recording artifacts leave under-utilized stretches at the trace
    boundaries; leading and trailing days whose workload stays below
    trim_frac of the full-trace daily mean are trimmed first. The returned
    table keeps every job overlapping the selected window (original times
    untouched) and records the window as span.
    """
    if days not in allowed_days:
        raise ValueError(f"days must be one of {tuple(allowed_days)}, got {days}")
    if not len(table):
        raise IngestError("cannot select a window from an empty table")

    day_s = 86400.0
    t0 = math.floor(float(table.start.min()) / grid.step_seconds) * grid.step_seconds
    t_end = float(table.end.max())
    n_days = int(math.ceil((t_end - t0) / day_s))
    if n_days < 1:
        raise IngestError("trace has no positive duration")
    edges = t0 + day_s * np.arange(n_days + 1)
    loads = _daily_workload(table, edges)
    threshold = trim_frac * loads.mean()

    lo = 0
    while lo < n_days and loads[lo] < threshold:
        lo += 1
    hi = n_days
    while hi > lo and loads[hi - 1] < threshold:
        hi -= 1
    if hi - lo < days:
        raise IngestError(
            f"trace holds only {hi - lo} usable days after trimming, {days} requested"
        )
    win_end = edges[hi]
    win_start = win_end - days * day_s
    mask = (table.end > win_start) & (table.start < win_end)
    return table.select(mask, span=(float(win_start), float(win_end)))


@dataclass(frozen=True)
class CloudOption:
    """One CPU/GPU rental option, normalized to a single resource unit."""

    provider: str
    device_type: str  # "cpu" | "gpu"
    model: str
    unit_count: float
    unit_price: float    # money per unit-hour
    unit_power_w: float  # watts per vCPU or per GPU
    speed: float         # CPU mark, or harmonic mean of GPU FP32/FP16 scores
    estimated_flag: bool = False

    def __post_init__(self):
        if self.unit_price <= 0 or self.unit_power_w <= 0 or self.speed <= 0:
            raise ValueError(f"option {self.provider}/{self.model}: "
                             "price, power and speed must be positive")


@dataclass
class CloudOptionTable:
    options: list
    dropped: int = 0

    def __len__(self) -> int:
        return len(self.options)

    def of_type(self, device_type: str) -> "CloudOptionTable":
        return CloudOptionTable(
            [o for o in self.options if o.device_type == device_type], self.dropped
        )


def _norm_header(name: str) -> str:
    return "".join(ch for ch in name.lower() if ch.isalnum())


_PRICING_KEYS = {
    "provider": "provider",
    "type": "type",
    "model": "model",
    "numberofvcpugpu": "count",
    "unitprice": "unit_price",
    "totaldeviceprice": "total_price",
    "cpuscore": "cpu_score",
    "gpufp32": "gpu_fp32",
    "gpufp16": "gpu_fp16",
    "unitratedpower": "unit_power",
    "totalratedpower": "total_power",
}


def _match_pricing_header(header: list) -> dict:
    found = {}
    for idx, raw in enumerate(header):
        norm = _norm_header(raw)
        for prefix, key in _PRICING_KEYS.items():
            if norm.startswith(prefix) and key not in found:
                found[key] = idx
                break
    required = ("provider", "type", "model", "count")
    missing = [k for k in required if k not in found]
    if missing:
        raise IngestError(f"pricing file missing columns: {missing}")
    return found


def _opt_float(row, idx):
    if idx is None or idx >= len(row):
        return None
    text = row[idx].strip()
    if not text:
        return None
    try:
        value = float(text)
    except ValueError:
        return None
    return value if math.isfinite(value) else None


def harmonic_mean2(a: float, b: float) -> float:
    return 2.0 * a * b / (a + b)


def parse_cloud_pricing(path) -> CloudOptionTable:
    """Parse a cloud rental pricing CSV into per-unit CloudOptions.

    Per-unit price is the total device price divided by the unit count (the
    unit price column is a fallback); per-vCPU power is the physical CPU
    rated power divided by the vCPU count. GPU speed is the harmonic mean
    of the FP32 and FP16 scores. Rows without usable speed or power are
    dropped and counted.
    """
    path = Path(path)
    try:
        handle = path.open(newline="")
    except OSError as exc:
        raise IngestError(f"cannot read pricing file {path}: {exc}") from exc
    options: list[CloudOption] = []
    dropped = 0
    with handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise IngestError(f"pricing file {path} is empty") from None
        cols = _match_pricing_header(header)
        for row in reader:
            if not any(cell.strip() for cell in row):
                continue
            provider = row[cols["provider"]].strip()
            dev = row[cols["type"]].strip().lower()
            model = row[cols["model"]].strip()
            count_text = row[cols["count"]].strip()
            estimated = count_text.endswith("*")
            try:
                count = float(count_text.rstrip("*"))
            except ValueError:
                dropped += 1
                continue
            if count == 0:
                raise IngestError(f"pricing file {path}: zero unit count for {model!r}")
            if dev not in ("cpu", "gpu"):
                dropped += 1
                continue

            total_price = _opt_float(row, cols.get("total_price"))
            unit_price = total_price / count if total_price is not None else \
                _opt_float(row, cols.get("unit_price"))
            total_power = _opt_float(row, cols.get("total_power"))
            unit_power = total_power / count if total_power is not None else \
                _opt_float(row, cols.get("unit_power"))

            if dev == "cpu":
                speed = _opt_float(row, cols.get("cpu_score"))
            else:
                fp32 = _opt_float(row, cols.get("gpu_fp32"))
                fp16 = _opt_float(row, cols.get("gpu_fp16"))
                speed = None
                if fp32 and fp16 and fp32 > 0 and fp16 > 0:
                    speed = harmonic_mean2(fp32, fp16)

            if not speed or speed <= 0 or not unit_power or unit_power <= 0 \
                    or not unit_price or unit_price <= 0:
                dropped += 1
                continue
            options.append(CloudOption(
                provider=provider, device_type=dev, model=model,
                unit_count=count, unit_price=unit_price,
                unit_power_w=unit_power, speed=speed, estimated_flag=estimated,
            ))
    if not options:
        raise IngestError(f"pricing file {path}: no usable options")
    return CloudOptionTable(options=options, dropped=dropped)


@dataclass
class PriceSeries:
    """A power-system service price series in money per kWh."""

    market: str
    timestamps: tuple
    prices: np.ndarray
    currency: str = "USD"

    def __post_init__(self):
        self.timestamps = tuple(self.timestamps)
        self.prices = np.asarray(self.prices, dtype=np.float64)
        if self.prices.size == 0:
            raise IngestError(f"price series {self.market!r} is empty")
        if not np.all(np.isfinite(self.prices)):
            raise IngestError(f"price series {self.market!r} has non-finite prices")

    def __len__(self) -> int:
        return len(self.prices)


def parse_price_series(
    path,
    market: str | None = None,
    conversion_rate: float = 1.0,
    currency: str = "USD",
) -> PriceSeries:
    """Parse a (timestamp, price) CSV into an ascending PriceSeries.

    conversion_rate multiplies every price (e.g. 1.267 USD/GBP to convert a
    GBP series to USD); it comes from configuration, never from code.
    """
    path = Path(path)
    market = market if market is not None else path.stem
    try:
        handle = path.open(newline="")
    except OSError as exc:
        raise IngestError(f"cannot read price series {path}: {exc}") from exc
    stamps, prices = [], []
    with handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise IngestError(f"price series {path} is empty") from None
        for row in reader:
            if not row or not any(cell.strip() for cell in row):
                continue
            if len(row) < 2:
                raise IngestError(f"price series {path}: malformed row {row!r}")
            try:
                stamp = datetime.fromisoformat(row[0].strip())
            except ValueError as exc:
                raise IngestError(f"price series {path}: bad timestamp {row[0]!r}") from exc
            try:
                price = float(row[1])
            except ValueError as exc:
                raise IngestError(f"price series {path}: non-numeric price {row[1]!r}") from exc
            stamps.append(stamp)
            prices.append(price * conversion_rate)
    if not stamps:
        raise IngestError(f"price series {path} has no samples")
    order = sorted(range(len(stamps)), key=lambda i: stamps[i])
    return PriceSeries(
        market=market,
        timestamps=[stamps[i] for i in order],
        prices=[prices[i] for i in order],
        currency=currency,
    )


def write_job_trace(table: RawJobTable, path) -> None:
    """Serialize a RawJobTable to the canonical job trace CSV."""
    with Path(path).open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(JOB_TRACE_COLUMNS)
        for i in range(len(table)):
            writer.writerow([
                table.ids[i],
                repr(float(table.submit[i])),
                repr(float(table.start[i])),
                repr(float(table.end[i])),
                repr(float(table.resources[i])),
            ])
