"""Time-stretch filter: age-scheduled bins, reports emitted during flushes.

Every level except the last is split into ``q`` bins. Level 0 lives in RAM as
dicts; deeper bins are sorted runs held as parallel numpy arrays. Bin 1 of
level 0 shifts every ``bin0 = M // q`` items; level ``i`` shifts after ``r``
shifts of level ``i-1``, so level ``i`` shifts every ``bin0 * r**i`` items.
The last level is a single Misra-Gries run that never shifts.
"""

from __future__ import annotations

from typing import Dict, List, Optional, Tuple

import numpy as np

from .config import ConfigError, DetectorConfig, EventReport
from .emio import IOStats, blocks

Run = Tuple[np.ndarray, np.ndarray]  # (sorted uint64 keys, int64 counts)

_EMPTY_KEYS = np.empty(0, dtype=np.uint64)
_EMPTY_COUNTS = np.empty(0, dtype=np.int64)


def empty_run() -> Run:
    return _EMPTY_KEYS, _EMPTY_COUNTS


def merge_runs(*runs: Run) -> Run:
    runs = [r for r in runs if len(r[0])]
    if not runs:
        return empty_run()
    if len(runs) == 1:
        return runs[0]
    keys = np.concatenate([r[0] for r in runs])
    counts = np.concatenate([r[1] for r in runs])
    uk, inv = np.unique(keys, return_inverse=True)
    return uk, np.bincount(inv, weights=counts, minlength=len(uk)).astype(np.int64)


def dict_run(d: Dict[int, int]) -> Run:
    if not d:
        return empty_run()
    keys = np.fromiter(d.keys(), dtype=np.uint64, count=len(d))
    counts = np.fromiter(d.values(), dtype=np.int64, count=len(d))
    order = np.argsort(keys)
    return keys[order], counts[order]


def mg_trim(run: Run, capacity: int) -> Run:
    """Weighted Misra-Gries reduction of a run to at most ``capacity`` keys."""
    keys, counts = run
    if len(keys) <= capacity:
        return run
    d = np.partition(counts, len(counts) - capacity - 1)[len(counts) - capacity - 1]
    counts = counts - d
    keep = counts > 0
    return keys[keep], counts[keep]


class TimeStretchFilter:
    def __init__(self, config: DetectorConfig, io: Optional[IOStats] = None):
        if not float(config.r).is_integer():
            raise ConfigError("the time-stretch schedule needs an integer growth factor r")
        self.config = config
        self.io = io or IOStats()
        self.q = config.bins
        self.r = int(config.r)
        self.L = max(2, config.levels)
        self.bin0 = max(1, config.m // self.q)
        self.last_capacity = config.level_capacity(self.L - 1)
        self.ram: List[Dict[int, int]] = [dict() for _ in range(self.q)]
        self.ram_fill = 0
        # levels 1..L-2 are binned; index 0 unused
        self.bins: List[List[Run]] = [[] for _ in range(self.L - 1)]
        for i in range(1, self.L - 1):
            self.bins[i] = [empty_run() for _ in range(self.q)]
        self.received = [0] * self.L
        self.last: Run = empty_run()
        self.t = 0
        self.reported = set()
        self.shift_times: List[List[int]] = [[] for _ in range(self.L)]
        self._report_at = config.report_threshold

    def bin_capacity(self, i: int) -> int:
        return self.bin0 * self.r**i

    # ---- ingestion ----------------------------------------------------------
    def insert(self, key) -> List[EventReport]:
        self.t += 1
        b1 = self.ram[0]
        b1[key] = b1.get(key, 0) + 1
        self.ram_fill += 1
        out: List[EventReport] = []
        if key not in self.reported:
            # a key with no instance on disk is fully visible in RAM
            ram_total = 0
            for b in self.ram:
                ram_total += b.get(key, 0)
            if ram_total >= self._report_at:
                out.append(self._emit(key, ram_total))
        if self.ram_fill >= self.bin0:
            out.extend(self.flush(0))
        return out

    def _emit(self, key, count) -> EventReport:
        self.reported.add(key)
        return EventReport(int(key), self.t, int(count))

    def run(self, stream) -> List[EventReport]:
        out: List[EventReport] = []
        for x in stream:
            r = self.insert(x)
            if r:
                out.extend(r)
        return out

    def flush(self, i: int = 0) -> List[EventReport]:
        """Shift level ``i`` (cascading as the schedule dictates) and report."""
        deepest = self._shift(i)
        return self._scan_and_report(deepest)

    def _shift(self, i: int) -> int:
        self.shift_times[i].append(self.t)
        if i == 0:
            moved = dict_run(self.ram[-1])
            self.ram = [dict()] + self.ram[:-1]
            self.ram_fill = 0
        else:
            moved = self.bins[i][-1]
            self.bins[i] = [empty_run()] + self.bins[i][:-1]
        j = i + 1
        self.received[j] += 1
        if j == self.L - 1:
            merged = mg_trim(merge_runs(self.last, moved), self.last_capacity)
            self.io.read(blocks(len(self.last[0]), self.config.b), "flush")
            self.last = merged
            self.io.write(blocks(len(merged[0]), self.config.b), "flush")
            return j
        self.bins[j][0] = merge_runs(self.bins[j][0], moved)
        self.io.write(blocks(len(self.bins[j][0][0]), self.config.b), "flush")
        if self.received[j] == self.r:
            self.received[j] = 0
            return self._shift(j)
        return j

    def _level_runs(self, deepest: int) -> List[Run]:
        runs = [dict_run(b) for b in self.ram]
        b = self.config.b
        for i in range(1, min(deepest, self.L - 2) + 1):
            for run in self.bins[i]:
                self.io.read(blocks(len(run[0]), b), "flush")
                runs.append(run)
        if deepest >= self.L - 1:
            self.io.read(blocks(len(self.last[0]), b), "flush")
            runs.append(self.last)
        return runs

    def _scan_and_report(self, deepest: int) -> List[EventReport]:
        keys, counts = merge_runs(*self._level_runs(deepest))
        hit = counts >= self._report_at
        out = []
        for k, c in zip(keys[hit].tolist(), counts[hit].tolist()):
            if k not in self.reported:
                out.append(self._emit(k, c))
        return out

    def finalize(self) -> List[EventReport]:
        """End-of-stream consolidation over every level."""
        return self._scan_and_report(self.L - 1)

    def totals(self) -> Dict[int, int]:
        """Uncharged consolidated counts (audit helper)."""
        runs = [dict_run(b) for b in self.ram]
        for i in range(1, self.L - 1):
            runs.extend(self.bins[i])
        runs.append(self.last)
        keys, counts = merge_runs(*runs)
        return dict(zip(keys.tolist(), counts.tolist()))


def detect_time_stretch(stream, config: DetectorConfig):
    f = TimeStretchFilter(config.validate())
    reports = f.run(stream)
    reports.extend(f.finalize())
    return reports, f
