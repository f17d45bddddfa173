"""Restart strategies and budget splitting.

A strategy ``RESTARTS^n_p`` starts ``n`` instances, each evaluated after
``t_k = p * t_total``; the single survivor then gets ``t_f = t_total - n * t_k``.
All durations are integer milliseconds.
"""

import enum
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal


class BudgetError(ValueError):
    pass


class InfeasibleSplit(BudgetError):
    pass


class DegenerateEvaluation(BudgetError):
    pass


class BudgetMode(enum.Enum):
    STRICT = "strict"
    EMULATED_PAUSE = "emulated-pause"


@dataclass(frozen=True)
class RestartStrategy:
    n: int
    p: float

    def __post_init__(self):
        if not isinstance(self.n, int) or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n!r}")
        if not 0 < self.p <= 1:
            raise ValueError(f"p must lie in (0, 1], got {self.p!r}")

    @classmethod
    def from_percent(cls, n: int, percent: float) -> "RestartStrategy":
        return cls(n, float(Decimal(str(percent)) / 100))

    @classmethod
    def parse(cls, text: str) -> "RestartStrategy":
        """Parse ``"8x5%"`` / ``"8x5"`` (percent) or a label like ``"n8_p5"``."""
        s = text.strip().lower()
        if s.startswith("n") and "_p" in s:
            n, pct = s[1:].split("_p", 1)
        elif "x" in s:
            n, pct = s.split("x", 1)
        else:
            raise ValueError(f"cannot parse strategy {text!r}")
        return cls.from_percent(int(n), float(pct.rstrip("%")))

    @property
    def percent(self) -> float:
        return float(Decimal(str(self.p)) * 100)

    @property
    def is_baseline(self) -> bool:
        return self.n == 1 and self.p == 1.0

    @property
    def label(self) -> str:
        return f"n{self.n}_p{self.percent:g}"

    def __str__(self):
        return f"RESTARTS^{self.n}_{self.percent:g}%"


BASELINE = RestartStrategy(1, 1.0)
STANDARD_GRID = (
    BASELINE,
    RestartStrategy(40, 0.01),
    RestartStrategy(20, 0.02),
    RestartStrategy(8, 0.05),
)


@dataclass(frozen=True)
class BudgetPlan:
    t_total: int
    t_k: int
    t_f: int


def evaluation_window(p: float, t_total: int) -> int:
    # Decimal(str(p)) keeps 0.05 * 300000 at exactly 15000 before rounding
    return int((Decimal(str(p)) * t_total).to_integral_value(rounding=ROUND_HALF_UP))


def plan_budget(strategy: RestartStrategy, t_total: int) -> BudgetPlan:
    if t_total <= 0:
        raise ValueError(f"t_total must be positive, got {t_total}")
    t_k = evaluation_window(strategy.p, t_total)
    if t_k == 0:
        raise DegenerateEvaluation(
            f"{strategy}: p * t_total = {strategy.p} * {t_total} ms rounds to 0 ms"
        )
    if strategy.n * t_k > t_total:
        raise InfeasibleSplit(
            f"{strategy}: n * t_k = {strategy.n} * {t_k} ms exceeds t_total = {t_total} ms"
        )
    return BudgetPlan(t_total=t_total, t_k=t_k, t_f=t_total - strategy.n * t_k)


def survivor_timeout(plan: BudgetPlan, mode: BudgetMode = BudgetMode.STRICT) -> int:
    if mode is BudgetMode.EMULATED_PAUSE:
        return plan.t_f + plan.t_k
    return plan.t_f
