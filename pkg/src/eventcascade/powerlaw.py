"""Power-law filter: threshold-capped levels, shuffle merges and RAM sweeps.

Disk level ``i`` (1..L) may hold at most ``tau[i]`` units of any key. When RAM
is full, the smallest level ``j`` able to hold every key of levels ``0..j`` is
chosen, all counts over those levels are consolidated and repacked bottom-up.
A key whose RAM count gets close enough to T triggers a sweep that pulls all
its disk units into RAM and pins it there.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from .config import ConfigError, DetectorConfig, EventReport
from .emio import REPORTED, IOStats, LevelStore
from .mg import Entry, MGTable


class ClogError(RuntimeError):
    """No level can absorb an overflowing level's keys."""

    def __init__(self, level, detail=""):
        super().__init__(f"structure clogged at level {level}" + (f": {detail}" if detail else ""))
        self.level = level


def disk_levels(config: DetectorConfig) -> int:
    """Smallest L >= 1 with r**L >= 2 / (epsilon M)."""
    need = 2 / (config.eps * config.m)
    L = 1
    while Fraction(config.level_capacity(L), config.m) < need:
        L += 1
    return L


def level_capacities(config: DetectorConfig, L: int) -> List[int]:
    """Index 0 is RAM (M); level i holds ceil(2 / (r**(L-i) epsilon)) records."""
    two_over_eps = 2 / config.eps
    caps = [config.m]
    for i in range(1, L + 1):
        caps.append(math.ceil(two_over_eps * config.m / config.level_capacity(L - i)))
    return caps


def static_thresholds(config: DetectorConfig, L: int) -> List[int]:
    """tau_L = (r eps N)^(1/(theta-1)), tau_i = r^(1/(theta-1)) tau_(i+1), floored.

    Index 0 is unused (RAM is unbounded).
    """
    z = 1.0 / (config.theta - 1.0)
    base = float(config.r * config.eps * config.n) ** z
    taus = [0]
    for i in range(1, L + 1):
        taus.append(max(1, math.floor(base * float(config.r) ** ((L - i) * z) + 1e-9)))
    return taus


class PowerLawFilter:
    def __init__(self, config: DetectorConfig, io: Optional[IOStats] = None):
        self.config = config
        self.io = io or IOStats()
        self.L = disk_levels(config)
        self.caps = level_capacities(config, self.L)
        self.dynamic = config.dynamic
        if self.dynamic:
            self.tau = [0] * (self.L + 1)
        else:
            if config.theta is None:
                raise ConfigError("static thresholds need theta")
            self.tau = static_thresholds(config, self.L)
        self.ram = MGTable(config.m)
        self.disk: List[Optional[LevelStore]] = [None] + [
            LevelStore(self.caps[i], config.b, self.io, name=i) for i in range(1, self.L + 1)
        ]
        self.t = 0
        self.reported = set()
        self.sweeps = 0
        self.merges = 0
        self.trace: List[Tuple[int, List[int]]] = []
        self._report_at = config.report_threshold
        if not self.dynamic and self.sweep_trigger() < 1:
            raise ConfigError(
                f"power-law filter needs T - max(2 tau_1, sum tau) >= 1, got "
                f"{config.threshold} - {self.slack()} = {self.sweep_trigger()}"
            )

    # ---- thresholds ---------------------------------------------------------
    def slack(self) -> int:
        """Most units of one key that disk may hold: max(2 tau_1, sum of tau)."""
        return max(2 * self.tau[1], sum(self.tau[1:]))

    def sweep_trigger(self) -> int:
        return self.config.threshold - self.slack()

    # ---- ingestion ----------------------------------------------------------
    def insert(self, key) -> List[EventReport]:
        self.t += 1
        out: List[EventReport] = []
        e = self.ram.entries.get(key)
        if e is None:
            if self.ram.is_full():
                out.extend(self.shuffle_merge())
                if self.ram.is_full():
                    raise ClogError(0, "RAM holds only pinned keys")
            e = self.ram.entries[key] = Entry(0)
        e.count += 1
        if e.pinned:
            if key not in self.reported and e.count >= self._report_at:
                out.append(self._emit(key, e.count))
        elif e.count >= self.sweep_trigger():
            r = self.sweep(key)
            if r is not None:
                out.append(r)
        return out

    def _emit(self, key, count) -> EventReport:
        self.reported.add(key)
        trig = self.t if self.config.exact else None
        return EventReport(int(key), self.t, int(count), trigger_time=trig)

    def run(self, stream) -> List[EventReport]:
        out: List[EventReport] = []
        for x in stream:
            r = self.insert(x)
            if r:
                out.extend(r)
        return out

    def sweep(self, key) -> Optional[EventReport]:
        """Consolidate one key from every level into RAM and pin it."""
        self.sweeps += 1
        e = self.ram.entries[key]
        total = e.count
        for level in self.disk[1:]:
            rec = level.point_query(key, "sweep")
            if rec is not None:
                total += rec[0]
                level.remove(key, "sweep")
        e.count = total
        e.pinned = True
        if key not in self.reported and total >= self._report_at:
            return self._emit(key, total)
        return None

    def shuffle_merge(self) -> List[EventReport]:
        self.merges += 1
        ram_keys = [k for k, e in self.ram.entries.items() if not e.pinned]
        seen = set(ram_keys)
        j = None
        for y in range(1, self.L + 1):
            seen.update(self.disk[y].records)
            if len(seen) <= self.caps[y]:
                j = y
                break
        if j is None:
            raise ClogError(self.L, "no level can absorb the merge")

        members: List[List[int]] = [ram_keys]
        totals: Dict[int, int] = {k: self.ram.entries[k].count for k in ram_keys}
        for y in range(1, j + 1):
            level = self.disk[y]
            level.charge_scan("flush")
            members.append(list(level.records))
            for k, (c, _) in level.records.items():
                totals[k] = totals.get(k, 0) + c

        if self.dynamic:
            self._raise_thresholds(j, members, totals)

        out = []
        for k, c in totals.items():
            if c >= self._report_at and k not in self.reported:
                out.append(self._emit(k, c))

        new_levels: List[Dict[int, List[int]]] = [dict() for _ in range(j + 1)]
        tau = self.tau
        for k, c in totals.items():
            flag = REPORTED if k in self.reported else 0
            rem = c
            for y in range(j, 0, -1):
                put = tau[y] if rem > tau[y] else rem
                if put > 0:
                    new_levels[y][k] = [put, flag]
                    rem -= put
                if rem == 0:
                    break
            if rem > 0:
                self.ram.entries[k].count = rem if k in self.ram.entries else 0
                if k not in self.ram.entries:
                    self.ram.entries[k] = Entry(rem)
            elif k in self.ram.entries:
                del self.ram.entries[k]
        for y in range(1, j + 1):
            if len(new_levels[y]) > self.caps[y]:
                raise ClogError(y, f"{len(new_levels[y])} keys pinned above capacity {self.caps[y]}")
            self.disk[y].rebuild(new_levels[y], "flush")
        if self.dynamic:
            self.trace.append((self.merges, list(self.tau[1:])))
        return out

    def _raise_thresholds(self, j, members, totals) -> None:
        """Bottom-up: smallest tau_y letting half the keys of level y-1 move down."""
        deeper = 0
        for y in range(j, 0, -1):
            above = members[y - 1]
            if above:
                rem = sorted(max(0, totals[k] - deeper) for k in above)
                need = math.ceil(len(rem) / 2)
                self.tau[y] = max(self.tau[y], rem[need - 1])
            deeper += self.tau[y]

    def finalize(self) -> List[EventReport]:
        """Full consolidation at end of stream (matters only in approximate mode)."""
        out = []
        for k, c in self.totals().items():
            if c >= self._report_at and k not in self.reported:
                out.append(self._emit(k, c))
        for level in self.disk[1:]:
            level.charge_scan("query")
        return out

    # ---- audit helpers (uncharged) -----------------------------------------
    def totals(self) -> Dict[int, int]:
        tot = {k: e.count for k, e in self.ram.entries.items()}
        for level in self.disk[1:]:
            for k, (c, _) in level.records.items():
                tot[k] = tot.get(k, 0) + c
        return tot

    def pinned_per_level(self) -> List[int]:
        """Keys on level i whose total exceeds sum(tau[i+1..L]); index 0 unused."""
        tot = self.totals()
        out = [0]
        for i in range(1, self.L + 1):
            below = sum(self.tau[i + 1 :])
            out.append(sum(1 for k in self.disk[i].records if tot[k] > below))
        return out

    def threshold_violations(self) -> int:
        return sum(
            1 for i in range(1, self.L + 1) for c, _ in self.disk[i].records.values() if c > self.tau[i]
        )


def detect_power_law(stream, config: DetectorConfig):
    f = PowerLawFilter(config.validate())
    reports = f.run(stream)
    reports.extend(f.finalize())
    return reports, f
