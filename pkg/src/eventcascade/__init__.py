"""Online event detection over cascaded Misra-Gries levels in external memory."""

from .cascade import Cascade
from .config import ConfigError, DetectorConfig, EventReport
from .emio import CapacityError, IOStats, LevelStore, StorageError
from .mg import MGTable
from .powerlaw import ClogError, PowerLawFilter
from .timestretch import TimeStretchFilter
from .workload import StreamSpec, generate, oracle_events, powerlaw_tail_prob

__all__ = [
    "Cascade",
    "CapacityError",
    "ClogError",
    "ConfigError",
    "DetectorConfig",
    "EventReport",
    "IOStats",
    "LevelStore",
    "MGTable",
    "PowerLawFilter",
    "StorageError",
    "StreamSpec",
    "TimeStretchFilter",
    "generate",
    "oracle_events",
    "powerlaw_tail_prob",
]
