"""Block-granular storage with I/O accounting.

Sizes are in records (entries), never bytes. A record is one key, one count
and a flag byte. Levels are persisted as sorted runs packed ``B`` records per
block behind a one-block header.
"""

from __future__ import annotations

import math
import os
from bisect import bisect_left
from dataclasses import dataclass, field
from typing import Dict, Iterable, Iterator, List, Optional, Tuple

import numpy as np

PHASES = ("insert", "flush", "query", "sweep")

REPORTED = 1
PINNED = 2
QUERIED = 4

RECORD = np.dtype([("key", "<u8"), ("count", "<u8"), ("flags", "u1"), ("pad", "V7")])
HEADER = np.dtype([("magic", "S8"), ("block_size", "<u8"), ("capacity", "<u8"), ("nrecords", "<u8")])
MAGIC = b"EVCLVL01"

assert RECORD.itemsize == 24


class StorageError(IOError):
    """Raised when a file-backed level cannot be read or written."""


class CapacityError(RuntimeError):
    """A level was asked to hold more records than its capacity."""

    def __init__(self, level, size, capacity):
        super().__init__(f"level {level}: {size} records exceed capacity {capacity}")
        self.level = level
        self.size = size
        self.capacity = capacity


def blocks(n: int, block_size: int) -> int:
    return -(-n // block_size) if n > 0 else 0


@dataclass
class IOStats:
    reads: Dict[str, int] = field(default_factory=lambda: {p: 0 for p in PHASES})
    writes: Dict[str, int] = field(default_factory=lambda: {p: 0 for p in PHASES})

    def read(self, n: int, phase: str) -> None:
        self.reads[phase] += n

    def write(self, n: int, phase: str) -> None:
        self.writes[phase] += n

    def reset(self) -> None:
        for p in PHASES:
            self.reads[p] = 0
            self.writes[p] = 0

    @property
    def total_reads(self) -> int:
        return sum(self.reads.values())

    @property
    def total_writes(self) -> int:
        return sum(self.writes.values())

    @property
    def total(self) -> int:
        return self.total_reads + self.total_writes

    def summary(self) -> dict:
        return {
            "reads": dict(self.reads),
            "writes": dict(self.writes),
            "total_reads": self.total_reads,
            "total_writes": self.total_writes,
        }

    def to_csv(self) -> str:
        lines = ["phase,reads,writes"]
        for p in PHASES:
            lines.append(f"{p},{self.reads[p]},{self.writes[p]}")
        lines.append(f"total,{self.total_reads},{self.total_writes}")
        return "\n".join(lines) + "\n"


def pack_run(records: Iterable[Tuple[int, int, int]], block_size: int, capacity: int) -> bytes:
    """Serialize ``(key, count, flags)`` records into the level file format."""
    recs = list(records)
    arr = np.zeros(len(recs), dtype=RECORD)
    if recs:
        keys, counts, flags = zip(*recs)
        arr["key"] = keys
        arr["count"] = counts
        arr["flags"] = flags
    header = np.zeros(1, dtype=HEADER)
    header["magic"] = MAGIC
    header["block_size"] = block_size
    header["capacity"] = capacity
    header["nrecords"] = len(recs)
    head = header.tobytes().ljust(block_size * RECORD.itemsize, b"\0")
    body = arr.tobytes()
    pad = blocks(len(recs), block_size) * block_size * RECORD.itemsize - len(body)
    return head + body + b"\0" * pad


def unpack_run(data: bytes) -> Tuple[int, int, List[Tuple[int, int, int]]]:
    """Inverse of :func:`pack_run`; returns (block_size, capacity, records)."""
    if len(data) < HEADER.itemsize:
        raise StorageError("truncated level header")
    header = np.frombuffer(data[: HEADER.itemsize], dtype=HEADER)[0]
    if header["magic"] != MAGIC:
        raise StorageError("bad level magic")
    b = int(header["block_size"])
    n = int(header["nrecords"])
    start = b * RECORD.itemsize
    end = start + n * RECORD.itemsize
    if len(data) < end:
        raise StorageError("truncated level body")
    arr = np.frombuffer(data[start:end], dtype=RECORD)
    recs = [(int(k), int(c), int(f)) for k, c, f in zip(arr["key"], arr["count"], arr["flags"])]
    return b, int(header["capacity"]), recs


class FileBlockStore:
    """Persists one level run to a file."""

    def __init__(self, path):
        self.path = os.fspath(path)

    def write(self, data: bytes) -> None:
        try:
            with open(self.path, "wb") as fh:
                fh.write(data)
        except OSError as exc:
            raise StorageError(str(exc)) from exc

    def read(self) -> bytes:
        try:
            with open(self.path, "rb") as fh:
                return fh.read()
        except OSError as exc:
            raise StorageError(str(exc)) from exc


class LevelStore:
    """A sorted run of ``key -> [count, flags]`` records with charged access.

    The working copy lives in a dict; the sorted order is materialized lazily.
    With a :class:`FileBlockStore` attached every rebuild is written through.
    """

    def __init__(self, capacity: Optional[int], block_size: int, io: IOStats, name="", store=None):
        self.capacity = capacity
        self.block_size = int(block_size)
        self.io = io
        self.name = name
        self.store = store
        self.records: Dict[int, List[int]] = {}
        self._keys: Optional[List[int]] = None

    def __len__(self) -> int:
        return len(self.records)

    def __contains__(self, key) -> bool:
        return key in self.records

    def get(self, key):
        return self.records.get(key)

    def sorted_keys(self) -> List[int]:
        if self._keys is None:
            self._keys = sorted(self.records)
        return self._keys

    def nblocks(self) -> int:
        return blocks(len(self.records), self.block_size)

    def scan(self, phase: str = "flush") -> Iterator[Tuple[int, int, int]]:
        self.io.read(self.nblocks(), phase)
        recs = self.records
        for k in self.sorted_keys():
            c, f = recs[k]
            yield k, c, f

    def charge_scan(self, phase: str = "flush") -> None:
        self.io.read(self.nblocks(), phase)

    def rebuild(self, records: Dict[int, List[int]], phase: str = "flush") -> None:
        """Replace the contents with ``records`` (key -> [count, flags])."""
        if self.capacity is not None and len(records) > self.capacity:
            raise CapacityError(self.name, len(records), self.capacity)
        self.records = records
        self._keys = None
        self.io.write(self.nblocks(), phase)
        if self.store is not None:
            self.store.write(self.to_bytes())

    def point_query(self, key, phase: str = "query"):
        """Binary search over blocks; returns ``[count, flags]`` or None."""
        keys = self.sorted_keys()
        b = self.block_size
        nb = self.nblocks()
        touched = set()
        lo, hi = 0, nb - 1
        found = None
        while lo <= hi:
            mid = (lo + hi) // 2
            touched.add(mid)
            first = keys[mid * b]
            last = keys[min(len(keys), (mid + 1) * b) - 1]
            if key < first:
                hi = mid - 1
            elif key > last:
                lo = mid + 1
            else:
                i = bisect_left(keys, key, mid * b, min(len(keys), (mid + 1) * b))
                if i < len(keys) and keys[i] == key:
                    found = self.records[key]
                break
        self.io.read(len(touched), phase)
        return found

    def remove(self, key, phase: str = "sweep") -> None:
        """Drop one record, charged as an in-place rewrite of its block."""
        if key in self.records:
            del self.records[key]
            self._keys = None
            self.io.write(1, phase)

    def to_bytes(self) -> bytes:
        recs = self.records
        return pack_run(
            ((k, recs[k][0], recs[k][1]) for k in self.sorted_keys()),
            self.block_size,
            self.capacity or 0,
        )

    def load(self) -> None:
        """Reload the working copy from the attached file store."""
        if self.store is None:
            return
        b, cap, recs = unpack_run(self.store.read())
        self.records = {k: [c, f] for k, c, f in recs}
        self._keys = None
