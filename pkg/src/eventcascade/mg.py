"""In-memory Misra-Gries frequency table."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterator, List, Tuple

# A decrement batch is a list of (key, reported) unit instances, in the order
# they leave the table. The incoming key that triggered the decrement is last.
Batch = List[Tuple[int, bool]]


@dataclass
class Entry:
    count: int
    reported: bool = False
    pinned: bool = False
    queried: bool = False
    # Consolidated count learned by the last cascade query, kept current by
    # later stream occurrences. None until the entry has been queried.
    known_total: int | None = None


class MGTable:
    """Capacity-bounded key -> count table using the Misra-Gries update rule.

    ``insert`` returns the decrement batch: one unit for every stored key whose
    count was decremented plus one unit for the incoming key itself. Standalone
    users may ignore it; a cascade forwards it to the next level.
    """

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = int(capacity)
        self.entries: Dict[int, Entry] = {}
        self.n = 0
        self.decrements = 0

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, key) -> bool:
        return key in self.entries

    def __iter__(self) -> Iterator[int]:
        return iter(self.entries)

    def is_full(self) -> bool:
        return len(self.entries) >= self.capacity

    def estimate(self, key) -> int:
        e = self.entries.get(key)
        return e.count if e is not None else 0

    def insert(self, key, reported: bool = False) -> Batch:
        self.n += 1
        e = self.entries.get(key)
        if e is not None:
            e.count += 1
            e.reported = e.reported or reported
            return []
        if len(self.entries) < self.capacity:
            self.entries[key] = Entry(1, reported=reported)
            return []
        batch = self.decrement_all()
        batch.append((key, reported))
        return batch

    def decrement_all(self) -> Batch:
        """Decrement every unpinned entry by one, deleting entries that hit zero."""
        self.decrements += 1
        batch: Batch = []
        dead = []
        for k, e in self.entries.items():
            if e.pinned:
                continue
            e.count -= 1
            batch.append((k, e.reported))
            if e.count == 0:
                dead.append(k)
        for k in dead:
            del self.entries[k]
        return batch

    def total(self) -> int:
        return sum(e.count for e in self.entries.values())

    def items(self):
        return ((k, e.count) for k, e in self.entries.items())


def misra_gries(stream, epsilon: float) -> MGTable:
    """Run plain Misra-Gries with ``ceil(1/epsilon)`` counters over ``stream``."""
    import math

    table = MGTable(math.ceil(1 / epsilon))
    for x in stream:
        table.insert(x)
    return table
