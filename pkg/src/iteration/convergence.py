"""Measured convergence order of a residual history."""

import math
from dataclasses import dataclass
from typing import Sequence

NOISE_FLOOR = 1e-14
MIN_USABLE = 3


@dataclass(frozen=True)
class ConvergenceOrder:
    order: float
    usable: int
    defined: bool

    def to_dict(self) -> dict:
        return {
            "order": self.order if self.defined else None,
            "usable": self.usable,
            "defined": self.defined,
        }


def convergence_order(
    residuals: Sequence[float], floor: float = NOISE_FLOOR, min_usable: int = MIN_USABLE
) -> ConvergenceOrder:
    """
    Mean of log‖E_{i+1}‖ / log‖E_i‖ over consecutive pairs above ``floor``.

    Residuals are divided by twice their maximum when that maximum is at
    least 1 so every logarithm is negative. Fewer than ``min_usable``
    usable entries leave the order undefined (NaN, ``defined=False``).
    """
    values = [float(r) for r in residuals]
    usable = [r for r in values if math.isfinite(r) and r > floor]
    if len(usable) < min_usable:
        return ConvergenceOrder(float("nan"), len(usable), False)

    top = max(usable)
    scale = 2.0 * top if top >= 1.0 else 1.0
    ratios = []
    for prev, nxt in zip(values, values[1:]):
        if not (prev > floor and nxt > floor and math.isfinite(prev) and math.isfinite(nxt)):
            continue
        ratios.append(math.log(nxt / scale) / math.log(prev / scale))
    if not ratios:
        return ConvergenceOrder(float("nan"), len(usable), False)
    return ConvergenceOrder(sum(ratios) / len(ratios), len(usable), True)
