"""Time-dependent scalar schedules: coupling constants and frequency weights."""

from __future__ import annotations

from dataclasses import dataclass
from math import exp

from .errors import ConfigError, DomainError


@dataclass(frozen=True)
class Schedule:
    """Scalar schedule a(t): constant a0 or exponential decay a0*exp(-rate*t)."""

    kind: str = "constant"
    value: float = 0.0
    rate: float = 0.0

    def __post_init__(self):
        if self.kind not in ("constant", "exp-decay"):
            raise ConfigError(f"unknown schedule kind '{self.kind}'")
        if self.kind == "exp-decay" and self.rate < 0:
            raise ConfigError("exp-decay schedule needs rate >= 0")

    def __call__(self, t: float) -> float:
        if self.kind == "constant":
            return self.value
        return self.value * exp(-self.rate * t)

    def integral(self, t0: float, t1: float) -> float:
        """Exact integral over [t0, t1]."""
        if self.kind == "constant" or self.rate == 0.0:
            return self.value * (t1 - t0)
        return self.value * (exp(-self.rate * t0) - exp(-self.rate * t1)) / self.rate

    @property
    def nonincreasing(self) -> bool:
        if self.kind == "constant":
            return True
        return self.value >= 0.0


ZERO = Schedule("constant", 0.0)


@dataclass(frozen=True)
class HSchedule:
    """Frequency weight h(t).

    kinds: "constant" (h = c0), "linear" (h = c0 + c1*t) and
    "negative-tau" (h = -(T - t), the negated backwards time; T supplied
    once the weighted measure fixes it).
    """

    kind: str = "constant"
    c0: float = -1.0
    c1: float = 0.0
    T: float | None = None

    def __post_init__(self):
        if self.kind not in ("constant", "linear", "negative-tau"):
            raise ConfigError(f"unknown h schedule kind '{self.kind}'")
        if self.kind == "negative-tau" and self.T is None:
            raise ConfigError("negative-tau h schedule needs the terminal time T")

    def value(self, t):
        if self.kind == "constant":
            return self.c0 + 0.0 * t
        if self.kind == "linear":
            return self.c0 + self.c1 * t
        return t - self.T

    def deriv(self, t):
        if self.kind == "constant":
            return 0.0 * t
        if self.kind == "linear":
            return self.c1 + 0.0 * t
        return 1.0 + 0.0 * t

    def validate_interval(self, t0: float, t1: float) -> int:
        """Check h is nonzero with constant sign on [t0, t1]; return the sign."""
        h0, h1 = float(self.value(t0)), float(self.value(t1))
        if h0 == 0.0 or h1 == 0.0 or (h0 > 0) != (h1 > 0):
            raise DomainError(
                f"h changes sign (or vanishes) on [{t0}, {t1}]: h({t0})={h0}, h({t1})={h1}"
            )
        # affine in t for every supported kind, endpoint check is sufficient
        return 1 if h0 > 0 else -1
