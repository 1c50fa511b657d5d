"""
Amount - Exact fixed-point arithmetic for capacities, flows and demands.

Amounts are plain ints counting milli-units (1/1000 of a unit), so every
add, subtract and min is exact.
"""

from decimal import Decimal, ROUND_HALF_EVEN, InvalidOperation
from typing import Union


Amount = int
NodeId = int
CommodityId = int

MILLI = 1000

_QUANTUM = Decimal("0.001")


def to_milli(value: Union[int, float, str, Decimal]) -> Amount:
    """
    Convert a unit quantity into milli-units.

    Values with more than 3 decimals are quantized (round half even), which is
    how sampled real capacities enter the model.

    Raises:
        ValueError: If the value is not a finite number
    """
    try:
        dec = Decimal(str(value)) if not isinstance(value, Decimal) else value
    except InvalidOperation:
        raise ValueError(f"Not a numeric amount: {value!r}")
    if not dec.is_finite():
        raise ValueError(f"Amount must be finite: {value!r}")
    quantized = dec.quantize(_QUANTUM, rounding=ROUND_HALF_EVEN)
    return int(quantized * MILLI)


def from_milli(amount: Amount) -> Decimal:
    """Convert milli-units back into an exact unit Decimal."""
    return (Decimal(amount) / MILLI).quantize(_QUANTUM)


def format_amount(amount: Amount) -> str:
    """Human-readable unit string without trailing zeros, e.g. 4000 -> '4'."""
    text = format(from_milli(amount), "f")
    if "." in text:
        text = text.rstrip("0").rstrip(".")
    return text or "0"
