"""Synthetic job trace generation for desk-scale experiments and tests.

Two workload shapes are provided. ai_like mimics accelerator clusters:
long-running jobs arriving around the clock, high mean utilization with
little variance. general_like mimics scientific-computing clusters:
shorter bursty jobs with a strong diurnal cycle, lower mean utilization
and much higher variance.

Starts snap to submission slots and durations come from a small discrete
menu, the way batch schedulers bucket real workloads; the repetition this
creates keeps daily (start, completion) patterns compact so k-means
aggregation stays faithful. An admission check with headroom keeps the
baseline below capacity even after grid rounding. Generation is
deterministic per seed.
"""

from __future__ import annotations

import math

import numpy as np

from .ingest import RawJobTable
from .model import DataCenterSpec, TimeGrid

PROFILES = ("ai_like", "general_like")


def _admit(usage: np.ndarray, start_min: float, dur_min: float, res: float,
           cap: float) -> bool:
    s = int(start_min)
    e = min(len(usage), int(math.ceil(start_min + dur_min)))
    if s >= e:
        return False
    window = usage[s:e]
    if float(window.max()) + res > cap:
        return False
    window += res
    return True


def generate_synthetic_trace(
    profile: str,
    days: int,
    seed: int,
    grid: TimeGrid | None = None,
    spec: DataCenterSpec | None = None,
) -> RawJobTable:
    """Generate a zero-queue job trace with the requested workload shape."""
    if profile not in PROFILES:
        raise ValueError(f"profile must be one of {PROFILES}")
    if days < 10:
        raise ValueError("need at least 10 days of trace")
    rng = np.random.default_rng(seed)
    total = spec.total_resources if spec is not None else 100.0
    minutes = days * 1440
    usage = np.zeros(minutes)

    if profile == "ai_like":
        slot_min = 60.0
        dur_menu = np.array([240.0, 360.0, 480.0, 720.0, 960.0])
        dur_p = np.array([0.15, 0.2, 0.3, 0.2, 0.15])
        res_menu = np.array([0.04, 0.06, 0.075, 0.11]) * total
        res_p = np.array([0.3, 0.3, 0.2, 0.2])
        offered_util = 1.10
        cap = 0.90 * total
        diurnal_amp = 0.0
        burst_sigma = 0.0
    else:
        slot_min = 45.0
        dur_menu = np.array([30.0, 60.0, 90.0, 180.0, 300.0])
        dur_p = np.array([0.25, 0.3, 0.2, 0.15, 0.1])
        res_menu = np.array([0.075, 0.125, 0.2, 0.3]) * total
        res_p = np.array([0.35, 0.3, 0.2, 0.15])
        offered_util = 1.45
        cap = 0.90 * total
        diurnal_amp = 0.85
        burst_sigma = 0.9

    mean_dur = float(dur_menu @ dur_p)
    mean_res = float(res_menu @ res_p)
    n_slots = int(round(minutes / slot_min))
    jobs_per_slot = offered_util * total * minutes / (mean_dur * mean_res * n_slots)

    # per-slot arrival intensity: diurnal cycle plus lognormal burst noise
    slot_t = (np.arange(n_slots) * slot_min) % 1440.0
    rate = np.full(n_slots, jobs_per_slot)
    if diurnal_amp > 0:
        rate = rate * (1.0 + diurnal_amp * np.sin(2.0 * math.pi * slot_t / 1440.0
                                                  - math.pi / 2))
    if burst_sigma > 0:
        rate = rate * rng.lognormal(-burst_sigma ** 2 / 2.0, burst_sigma, n_slots)
    counts = rng.poisson(rate)

    ids, sub, sta, end, nres = [], [], [], [], []
    for slot in range(n_slots):
        start_min = slot * slot_min
        for _ in range(int(counts[slot])):
            dur_min = float(rng.choice(dur_menu, p=dur_p))
            res = float(np.round(rng.choice(res_menu, p=res_p)))
            if start_min + dur_min > minutes:
                continue
            if not _admit(usage, start_min, dur_min, res, cap):
                continue
            start_s = round(start_min * 60.0)
            end_s = round((start_min + dur_min) * 60.0)
            ids.append(f"j{len(ids):06d}")
            sub.append(float(start_s))
            sta.append(float(start_s))
            end.append(float(end_s))
            nres.append(res)
    return RawJobTable(ids=ids, submit=sub, start=sta, end=end, resources=nres)
