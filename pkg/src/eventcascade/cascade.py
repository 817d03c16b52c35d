"""External-memory Misra-Gries cascade and the online event detector on top of it.

Level 0 is an in-RAM :class:`MGTable` of ``M`` entries; levels ``1..L-1`` are
sorted runs of capacity ``r**i * M`` in a :class:`LevelStore`. When a level
decrements, the decremented units (plus the unit that caused the decrement)
are merged into the next level. Reported keys whose last record falls off the
bottom level are kept in an overflow level so they are never reported again.
"""

from __future__ import annotations

import math
from typing import Dict, Iterable, List, Optional, Tuple

from .config import DetectorConfig, EventReport
from .emio import REPORTED, IOStats, LevelStore, FileBlockStore
from .mg import Batch, MGTable


class Cascade:
    def __init__(self, config: DetectorConfig, io: Optional[IOStats] = None, directory=None):
        self.config = config
        self.io = io or IOStats()
        self.L = config.levels
        self.level0 = MGTable(config.m)
        self.disk: List[LevelStore] = []
        for i in range(1, self.L):
            store = FileBlockStore(f"{directory}/level{i}.run") if directory else None
            self.disk.append(LevelStore(config.level_capacity(i), config.b, self.io, name=i, store=store))
        store = FileBlockStore(f"{directory}/overflow.run") if directory else None
        self.overflow = LevelStore(None, config.b, self.io, name=self.L, store=store)
        self.t = 0
        self.queries = 0
        self.crossings = 0
        self.reported_keys = set()
        self._line = math.floor(config.trigger_line)
        self._report_at = config.report_threshold

    # ---- ingestion ----------------------------------------------------------
    def insert(self, key) -> List[EventReport]:
        """Insert one stream item; returns the (at most one) report it triggers."""
        self.t += 1
        e = self.level0.entries.get(key)
        prev = e.count if e is not None else 0
        batch = self.level0.insert(key)
        if batch:
            self.flush(0, batch)
            return []
        e = self.level0.entries[key]
        if e.known_total is not None:
            e.known_total += 1
        if not e.queried and prev <= self._line < e.count:
            self.crossings += 1
            total, reported = self.consolidate_query(key)
            e.queried = True
            e.known_total = total
            e.reported = e.reported or reported
        if e.known_total is not None and not e.reported and e.known_total >= self._report_at:
            e.reported = True
            return [self._emit(key, e.known_total)]
        return []

    def _emit(self, key, count) -> EventReport:
        if key in self.reported_keys:
            raise AssertionError(f"key {key} reported twice")
        self.reported_keys.add(key)
        trig = self.t if self.config.exact else None
        return EventReport(key, self.t, count, trigger_time=trig)

    def run(self, stream: Iterable[int]) -> List[EventReport]:
        out: List[EventReport] = []
        for x in stream:
            r = self.insert(x)
            if r:
                out.extend(r)
        return out

    def flush(self, i: int, batch: Batch) -> None:
        """Merge the units decremented out of level ``i`` into level ``i+1``."""
        if not batch:
            return
        if i + 1 >= self.L:
            self._retire(batch)
            return
        level = self.disk[i]
        cap = level.capacity
        level.charge_scan("flush")
        recs = level.records
        out: Batch = []
        for key, rep in batch:
            rec = recs.get(key)
            if rec is not None:
                rec[0] += 1
                if rep:
                    rec[1] |= REPORTED
            elif len(recs) < cap:
                recs[key] = [1, REPORTED if rep else 0]
            else:
                dead = []
                for k, r in recs.items():
                    r[0] -= 1
                    out.append((k, bool(r[1] & REPORTED)))
                    if r[0] == 0:
                        dead.append(k)
                for k in dead:
                    del recs[k]
                out.append((key, rep))
        level.rebuild(recs, "flush")
        if out:
            self.flush(i + 1, out)

    def _retire(self, batch: Batch) -> None:
        """Units leaving the last level are dropped unless already reported."""
        keep = [k for k, rep in batch if rep]
        if not keep:
            return
        recs = self.overflow.records
        self.overflow.charge_scan("flush")
        for k in keep:
            rec = recs.get(k)
            if rec is None:
                recs[k] = [1, REPORTED]
            else:
                rec[0] += 1
        self.overflow.rebuild(recs, "flush")

    # ---- queries ------------------------------------------------------------
    def consolidate_query(self, key) -> Tuple[int, bool]:
        """Sum the key's counts level by level, stopping at a reported record."""
        self.queries += 1
        e = self.level0.entries.get(key)
        total = e.count if e is not None else 0
        if e is not None and e.reported:
            return total, True
        for level in self.disk:
            rec = level.point_query(key, "query")
            if rec is not None:
                total += rec[0]
                if rec[1] & REPORTED:
                    return total, True
        if len(self.overflow) and self.overflow.point_query(key, "query") is not None:
            return total, True
        return total, False

    def estimates(self) -> List[Dict[int, int]]:
        """Uncharged per-level counts, level 0 first (test and audit helper)."""
        out = [dict(self.level0.items())]
        for level in self.disk:
            out.append({k: r[0] for k, r in level.records.items()})
        return out

    def finalize_heavy_hitters(self) -> List[Tuple[int, int, bool]]:
        """Full scan: every key whose consolidated count exceeds (phi - eps) N.

        Returns ``(key, count, already_reported)`` sorted by key.
        """
        totals: Dict[int, int] = {}
        flagged = set()
        for k, e in self.level0.entries.items():
            totals[k] = e.count
            if e.reported:
                flagged.add(k)
        for level in self.disk:
            for k, c, f in level.scan("query"):
                totals[k] = totals.get(k, 0) + c
                if f & REPORTED:
                    flagged.add(k)
        for k, _, _ in self.overflow.scan("query"):
            flagged.add(k)
        flagged |= self.reported_keys
        thr = self._report_at
        return sorted((k, c, k in flagged) for k, c in totals.items() if c >= thr)


def detect_online(stream, config: DetectorConfig, directory=None):
    """Run the online detector over a whole stream; returns (reports, cascade)."""
    c = Cascade(config.validate(), directory=directory)
    return c.run(stream), c
