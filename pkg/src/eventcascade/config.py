"""Detector parameters and the event record shared by all detectors."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import Optional

MODES = ("online", "time_stretch", "power_law")


class ConfigError(ValueError):
    """Parameters violate a mode precondition."""


def as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    return Fraction(str(x))


@dataclass
class EventReport:
    key: int
    report_time: int
    count: int
    trigger_time: Optional[int] = None

    def csv_row(self) -> str:
        t = "" if self.trigger_time is None else str(self.trigger_time)
        return f"{self.key},{t},{self.report_time},{self.count}"


EVENTS_HEADER = "key,trigger_time,report_time,count"


@dataclass
class DetectorConfig:
    """All tunables. Exactly one of ``t`` / ``phi`` is given.

    ``epsilon=None`` selects exact mode (epsilon = 1/N). ``q`` or ``alpha``
    configure the time-stretch filter; ``theta`` the static power-law
    thresholds.
    """

    n: int
    m: int
    b: int = 64
    r: float = 2.0
    t: Optional[int] = None
    phi: Optional[str] = None
    epsilon: Optional[str] = None
    mode: str = "online"
    q: Optional[int] = None
    alpha: Optional[str] = None
    theta: Optional[float] = None
    dynamic: bool = False

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}")
        if (self.t is None) == (self.phi is None):
            raise ConfigError("give exactly one of t or phi")
        if self.n < 1 or self.m < 1 or self.b < 1:
            raise ConfigError("n, m and b must be positive")
        if not self.r > 1:
            raise ConfigError("growth factor r must be > 1")
        if self.phi is not None:
            self.phi = str(self.phi)
            if not 0 < self.phi_frac <= 1:
                raise ConfigError("phi must lie in (0, 1]")
        if self.epsilon is not None:
            self.epsilon = str(self.epsilon)
        if self.alpha is not None:
            self.alpha = str(self.alpha)
        if self.t is not None and not 1 <= self.t:
            raise ConfigError("threshold t must be >= 1")
        eps = self.eps
        if not Fraction(1, self.n) <= eps:
            raise ConfigError("epsilon must be >= 1/N")
        if not self.exact and not eps < self.phi_frac:
            raise ConfigError(f"epsilon {eps} must be < phi {self.phi_frac}")

    # ---- derived quantities -------------------------------------------------
    @property
    def phi_frac(self) -> Fraction:
        if self.t is not None:
            return Fraction(self.t, self.n)
        return as_fraction(self.phi)

    @property
    def threshold(self) -> int:
        """T = ceil(phi * N)."""
        if self.t is not None:
            return self.t
        return math.ceil(self.phi_frac * self.n)

    @property
    def eps(self) -> Fraction:
        if self.epsilon is None or self.epsilon == "exact":
            return Fraction(1, self.n)
        return as_fraction(self.epsilon)

    @property
    def exact(self) -> bool:
        return self.eps == Fraction(1, self.n)

    @property
    def report_threshold(self) -> int:
        """Smallest consolidated count that may be reported.

        Exact mode reports at T. Otherwise any count strictly above
        (phi - epsilon) N qualifies.
        """
        if self.exact:
            return self.threshold
        return math.floor((self.phi_frac - self.eps) * self.n) + 1

    @property
    def trigger_line(self) -> Fraction:
        """(phi - 1/M) N: level-0 counts at or below it cannot be events."""
        return (Fraction(self.threshold, self.n) - Fraction(1, self.m)) * self.n

    def level_capacity(self, i: int) -> int:
        if float(self.r).is_integer():
            return int(self.r) ** i * self.m
        return math.ceil(self.r**i * self.m)

    @property
    def levels(self) -> int:
        """Smallest L with capacity(L-1) >= 1/epsilon (at least one level)."""
        need = 1 / self.eps
        L = 1
        while self.level_capacity(L - 1) < need:
            L += 1
        return L

    @property
    def bins(self) -> int:
        if self.q is not None:
            return int(self.q)
        if self.alpha is not None:
            a = as_fraction(self.alpha)
            return max(2, math.ceil((a + 1) / a))
        return 2

    @property
    def alpha_eff(self) -> Fraction:
        return Fraction(1, self.bins - 1)

    def validate(self) -> "DetectorConfig":
        if self.mode == "online":
            if self.trigger_line < 1:
                raise ConfigError(
                    f"online mode needs (phi - 1/M) N >= 1, got "
                    f"({self.threshold}/{self.n} - 1/{self.m}) * {self.n} = {float(self.trigger_line):.4g}"
                )
        elif self.mode == "time_stretch":
            if self.bins < 2:
                raise ConfigError("time-stretch needs q >= 2 bins")
            if self.alpha is not None and not as_fraction(self.alpha) > 0:
                raise ConfigError("alpha must be > 0")
        elif self.mode == "power_law":
            if not self.dynamic and (self.theta is None or not self.theta > 1):
                raise ConfigError("static power-law thresholds need theta > 1")
        return self

    def to_dict(self) -> dict:
        return asdict(self)
