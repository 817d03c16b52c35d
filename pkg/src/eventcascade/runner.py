"""Mode dispatch, event CSV I/O and verification against ground truth."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional

from .cascade import Cascade
from .config import EVENTS_HEADER, DetectorConfig, EventReport
from .powerlaw import PowerLawFilter
from .timestretch import TimeStretchFilter
from .workload import Event


def make_detector(config: DetectorConfig):
    config.validate()
    if config.mode == "online":
        return Cascade(config)
    if config.mode == "time_stretch":
        return TimeStretchFilter(config)
    return PowerLawFilter(config)


def run_detector(config: DetectorConfig, stream):
    """Feed ``stream`` through the configured detector, finalizing where the mode has a finalize step."""
    det = make_detector(config)
    items = stream.tolist() if hasattr(stream, "tolist") else stream
    reports = det.run(items)
    if hasattr(det, "finalize"):
        reports.extend(det.finalize())
    return reports, det


def events_csv(reports: Iterable[EventReport]) -> str:
    return EVENTS_HEADER + "\n" + "".join(r.csv_row() + "\n" for r in reports)


def read_events_csv(path) -> List[EventReport]:
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            trig = row["trigger_time"]
            out.append(
                EventReport(
                    int(row["key"]),
                    int(row["report_time"]),
                    int(row["count"]),
                    trigger_time=int(trig) if trig else None,
                )
            )
    return out


def read_truth_csv(path) -> List[Event]:
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            out.append(Event(int(row["key"]), int(row["first_seen"]), int(row["trigger_time"]), int(row["deadline"])))
    return out


@dataclass
class Verdict:
    checks: Dict[str, List[str]] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not any(self.checks.values())

    def lines(self) -> List[str]:
        out = []
        for name, bad in self.checks.items():
            status = "ok" if not bad else f"FAIL ({len(bad)})"
            out.append(f"{name}: {status}")
            out.extend(f"  {b}" for b in bad[:10])
        return out

    def summary(self) -> Dict[str, int]:
        return {k: len(v) for k, v in self.checks.items()}


def verify(
    reports: List[EventReport],
    truth: List[Event],
    mode: str,
    n: int,
    counts: Optional[Dict[int, int]] = None,
    forbidden_max: Optional[int] = None,
) -> Verdict:
    """Check reports against the oracle's events.

    ``mode`` selects the timeliness rule: ``online``/``power_law`` require
    report_time == trigger_time, ``time_stretch`` requires
    report_time <= min(deadline, n). Without ``forbidden_max`` every reported
    non-event is a false positive (exact mode); with it, only keys whose final
    count is <= forbidden_max are (approximate mode, needs ``counts``).
    """
    v = Verdict({"DUPLICATE": [], "FALSE_NEGATIVE": [], "FALSE_POSITIVE": [], "LATE": []})
    seen = set()
    for r in reports:
        if r.key in seen:
            v.checks["DUPLICATE"].append(f"key {r.key} at {r.report_time}")
        seen.add(r.key)
    by_key = {e.key: e for e in truth}
    for e in truth:
        if e.key not in seen:
            v.checks["FALSE_NEGATIVE"].append(f"key {e.key} trigger {e.trigger_time}")
    first = {}
    for r in reports:
        first.setdefault(r.key, r)
    for k, r in first.items():
        e = by_key.get(k)
        if e is None:
            if forbidden_max is None:
                v.checks["FALSE_POSITIVE"].append(f"key {k} at {r.report_time}")
            elif counts is None or counts.get(k, 0) <= forbidden_max:
                v.checks["FALSE_POSITIVE"].append(f"key {k} count {counts.get(k, 0) if counts else '?'}")
            continue
        if mode == "time_stretch":
            if r.report_time > min(math.floor(e.deadline), n):
                v.checks["LATE"].append(f"key {k} reported {r.report_time} > deadline {math.floor(e.deadline)}")
        elif r.report_time != e.trigger_time:
            v.checks["LATE"].append(f"key {k} reported {r.report_time} != trigger {e.trigger_time}")
    return v
