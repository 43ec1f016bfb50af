"""Half-up display rounding.

Published-style tables print whole-percent shares and two-decimal indices.
Counts are integers, so display values are computed on exact rationals and
rounded half-up; a float fallback goes through ``Decimal(repr(x))`` to avoid
binary-representation surprises near .5 boundaries.
"""

from __future__ import annotations

from decimal import ROUND_HALF_UP, Decimal
from fractions import Fraction


def round_half_up(value: float, digits: int = 0) -> float:
    if value < 0:
        raise ValueError("round_half_up is defined for non-negative display values")
    quantum = Decimal(1).scaleb(-digits)
    return float(Decimal(repr(value)).quantize(quantum, rounding=ROUND_HALF_UP))


def fraction_half_up(value: Fraction, digits: int = 0) -> float:
    if value < 0:
        raise ValueError("fraction_half_up is defined for non-negative display values")
    scale = 10**digits
    scaled = value * scale
    units, remainder = divmod(scaled.numerator, scaled.denominator)
    if 2 * remainder >= scaled.denominator:
        units += 1
    return units / scale


def share(count: int, total: int) -> float | None:
    """Raw share in [0, 1]; None when the base is empty."""
    if total == 0:
        return None
    return count / total


def pct_display(count: int, total: int, digits: int = 0) -> float | None:
    """count/total as a percentage, rounded half-up at `digits` decimals."""
    if total == 0:
        return None
    return fraction_half_up(Fraction(100 * count, total), digits)


def index_value(part_count: int, part_total: int, base_count: int, base_total: int) -> float | None:
    """Ratio of the part share to the base share (concentration index), raw."""
    if part_total == 0 or base_total == 0 or base_count == 0:
        return None
    return (part_count / part_total) / (base_count / base_total)


def index_display(
    part_count: int, part_total: int, base_count: int, base_total: int, digits: int = 2
) -> float | None:
    if part_total == 0 or base_total == 0 or base_count == 0:
        return None
    exact = Fraction(part_count, part_total) / Fraction(base_count, base_total)
    return fraction_half_up(exact, digits)
