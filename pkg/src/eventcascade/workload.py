"""Synthetic streams and the exact-counting ground truth."""

from __future__ import annotations

import hashlib
import math
import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

DISTRIBUTIONS = ("uniform", "power_law", "planted")
ORDERS = ("shuffled", "adversarial_burst", "round_robin")


class SpecError(ValueError):
    """The requested stream cannot be generated."""


def label_key(label: str) -> int:
    """Numeric labels map to themselves, anything else to a stable 63-bit id."""
    label = label.strip()
    if label.isdigit():
        return int(label)
    return int.from_bytes(hashlib.blake2b(label.encode(), digest_size=8).digest(), "little") >> 1


@dataclass
class StreamSpec:
    n: int
    distribution: str = "uniform"
    u: Optional[int] = None
    theta: float = 2.5
    planted: Dict[int, int] = field(default_factory=dict)
    order: str = "shuffled"
    seed: int = 0

    def validate(self) -> "StreamSpec":
        if self.n < 1:
            raise SpecError("n must be >= 1")
        if self.distribution not in DISTRIBUTIONS:
            raise SpecError(f"unknown distribution {self.distribution!r}")
        if self.order not in ORDERS:
            raise SpecError(f"unknown arrival order {self.order!r}")
        if self.distribution == "power_law" and not self.theta > 1:
            raise SpecError("power-law exponent must be > 1")
        if self.distribution == "uniform" and not (self.u or 0) >= 1:
            raise SpecError("uniform streams need a universe size u >= 1")
        if any(c < 1 for c in self.planted.values()):
            raise SpecError("planted counts must be >= 1")
        total = sum(self.planted.values())
        if total > self.n:
            raise SpecError(f"planted counts sum to {total} > n = {self.n}")
        if self.distribution == "planted" and total < self.n and not (self.u or 0) >= 1:
            raise SpecError("planted counts leave room for background items; give u")
        return self


def powerlaw_tail_prob(c: float, theta: float) -> float:
    """P(count > c) for a continuous power law with c_min = 1."""
    if not theta > 1:
        raise ValueError("theta must be > 1")
    if not c >= 1:
        raise ValueError("c must be >= 1")
    return c ** -(theta - 1)


def powerlaw_counts(n: int, theta: float, rng, max_keys: Optional[int] = None) -> List[int]:
    """Per-key counts drawn by inverse transform, adjusted to total exactly ``n``."""
    counts: List[int] = []
    total = 0
    while total < n and (max_keys is None or len(counts) < max_keys):
        u = rng.random(4096)
        c = np.maximum(1, np.rint((1.0 - u) ** (-1.0 / (theta - 1.0)))).astype(np.int64)
        for x in c:
            counts.append(int(x))
            total += int(x)
            if total >= n or (max_keys is not None and len(counts) >= max_keys):
                break
    top = max(range(len(counts)), key=counts.__getitem__)
    diff = n - total
    if counts[top] + diff >= 1:
        counts[top] += diff
    else:
        # overshoot larger than the top count minus one: the last draw absorbs it
        counts[-1] += diff
    return counts


def key_counts(spec: StreamSpec, rng) -> Dict[int, int]:
    if spec.distribution == "uniform":
        keys = rng.integers(0, spec.u, size=spec.n)
        vals, cnt = np.unique(keys, return_counts=True)
        return {int(k) + 1: int(c) for k, c in zip(vals, cnt)}
    if spec.distribution == "power_law":
        counts = powerlaw_counts(spec.n, spec.theta, rng, spec.u)
        ids = rng.permutation(len(counts)) + 1
        return {int(k): c for k, c in zip(ids, counts)}
    out = dict(spec.planted)
    rest = spec.n - sum(out.values())
    if rest:
        base = max(out, default=0) + 1
        keys = rng.integers(0, spec.u, size=rest) + base
        vals, cnt = np.unique(keys, return_counts=True)
        for k, c in zip(vals, cnt):
            out[int(k)] = int(c)
    return out


def arrange(counts: Dict[int, int], order: str, rng) -> np.ndarray:
    keys = list(counts)
    if order == "round_robin":
        left = dict(counts)
        out = []
        while left:
            for k in keys:
                if left.get(k):
                    out.append(k)
                    left[k] -= 1
                    if not left[k]:
                        del left[k]
        return np.asarray(out, dtype=np.uint64)
    items = np.repeat(np.asarray(keys, dtype=np.uint64), [counts[k] for k in keys])
    if order == "shuffled":
        return rng.permutation(items)
    # adversarial burst: each key's first occurrence is scattered through the
    # first half, the rest arrives as one contiguous burst late in the stream
    n = len(items)
    first = np.asarray(keys, dtype=np.uint64)
    rest_keys = [k for k in keys if counts[k] > 1]
    bursts = [np.full(counts[k] - 1, k, dtype=np.uint64) for k in rest_keys]
    rng.shuffle(first)
    perm = rng.permutation(len(bursts))
    tail = np.concatenate([bursts[i] for i in perm]) if bursts else np.empty(0, dtype=np.uint64)
    head = first
    # interleave the head into the front of the tail so bursts start mid-stream
    cut = min(len(tail), n // 4)
    front = rng.permutation(np.concatenate([head, tail[:cut]]))
    return np.concatenate([front, tail[cut:]])


def generate(spec: StreamSpec) -> np.ndarray:
    """Deterministic stream of ``spec.n`` uint64 keys."""
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    counts = key_counts(spec, rng)
    out = arrange(counts, spec.order, rng)
    assert len(out) == spec.n
    return out


# ---- stream files --------------------------------------------------------------

def write_stream(path, stream) -> None:
    path = os.fspath(path)
    arr = np.asarray(stream, dtype=np.uint64)
    if path.endswith(".bin"):
        with open(path, "wb") as fh:
            fh.write(arr.astype("<u8").tobytes())
    else:
        with open(path, "w") as fh:
            fh.write("".join(f"{int(k)}\n" for k in arr))


def read_stream(path) -> np.ndarray:
    path = os.fspath(path)
    if path.endswith(".bin"):
        return np.fromfile(path, dtype="<u8")
    with open(path) as fh:
        return np.asarray([int(line) for line in fh if line.strip()], dtype=np.uint64)


def file_sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


# ---- ground truth -----------------------------------------------------------

@dataclass
class Event:
    key: int
    first_seen: int
    trigger_time: int
    deadline: Fraction

    @property
    def flow(self) -> int:
        return self.trigger_time - self.first_seen


@dataclass
class GroundTruth:
    threshold: int
    alpha: Fraction
    counts: Dict[int, int]
    events: List[Event]

    def by_key(self) -> Dict[int, Event]:
        return {e.key: e for e in self.events}

    def to_csv(self) -> str:
        lines = ["key,first_seen,trigger_time,flow,deadline"]
        for e in self.events:
            lines.append(f"{e.key},{e.first_seen},{e.trigger_time},{e.flow},{math.floor(e.deadline)}")
        return "\n".join(lines) + "\n"


def oracle_events(stream, threshold: int, alpha=0) -> GroundTruth:
    """Exact single pass: an event is the ``threshold``-th occurrence of a key."""
    alpha = Fraction(str(alpha)) if not isinstance(alpha, Fraction) else alpha
    counts: Dict[int, int] = {}
    first: Dict[int, int] = {}
    events: List[Event] = []
    for t, x in enumerate(stream.tolist() if hasattr(stream, "tolist") else stream, start=1):
        c = counts.get(x, 0) + 1
        counts[x] = c
        if c == 1:
            first[x] = t
        if c == threshold:
            t1 = first[x]
            events.append(Event(x, t1, t, t + alpha * (t - t1)))
    return GroundTruth(threshold, alpha, counts, events)
