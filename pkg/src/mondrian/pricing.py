"""Exact-decimal pricing and the append-only cost ledger.

Money is fixed-point decimal with 9 fractional digits.  Rates carry at
most 6 decimal places so that `units * rate / 1000` always lands on the
money grid without rounding.
"""

from __future__ import annotations

import json
import threading
from dataclasses import asdict, dataclass, field
from decimal import Decimal, InvalidOperation
from pathlib import Path

from .errors import LedgerError

MONEY_PLACES = Decimal("0.000000001")
PRICING_UNITS = ("Per1kTokens", "Per1kChars")


def as_money(value):
    """Parse a rate or price into Decimal; floats are rejected."""
    if isinstance(value, float):
        raise ValueError("money must be Decimal, str or int, not float")
    try:
        return Decimal(value)
    except (InvalidOperation, TypeError) as err:
        raise ValueError(f"not a money value: {value!r}") from err


@dataclass(frozen=True)
class PricingModel:
    """Per-1000-unit input/output rates under one counting unit."""

    unit: str
    input_rate: Decimal
    output_rate: Decimal = Decimal("0")

    def __post_init__(self):
        if self.unit not in PRICING_UNITS:
            raise ValueError(f"unknown pricing unit: {self.unit!r}")
        for name in ("input_rate", "output_rate"):
            rate = as_money(getattr(self, name))
            if rate < 0:
                raise ValueError(f"{name} must be >= 0")
            if -rate.as_tuple().exponent > 6:
                raise ValueError(f"{name} has more than 6 decimal places")
            object.__setattr__(self, name, rate)


def compute_cost(units, rate, unit=None):
    """units * rate / 1000, exact on the 9-digit money grid."""
    if units < 0:
        raise ValueError("units must be >= 0")
    value = Decimal(units) * as_money(rate) / Decimal(1000)
    return value.quantize(MONEY_PLACES)


@dataclass
class CostRecord:
    """One proxied request: unit counts, prices, and the margin."""

    request_id: str
    received_at: str
    completed_at: str
    original_units: int
    abstracted_units: int
    upstream_output_units: int
    user_price: Decimal
    upstream_cost: Decimal
    margin: Decimal
    status: str = "ok"

    def __post_init__(self):
        self.user_price = as_money(self.user_price)
        self.upstream_cost = as_money(self.upstream_cost)
        self.margin = as_money(self.margin)
        if self.margin != self.user_price - self.upstream_cost:
            raise ValueError("margin must equal user_price - upstream_cost")
        if self.status not in ("ok", "failed"):
            raise ValueError(f"unknown record status: {self.status!r}")

    def to_json(self):
        raw = asdict(self)
        for name in ("user_price", "upstream_cost", "margin"):
            raw[name] = str(raw[name])
        return json.dumps(raw, separators=(",", ":"))

    @classmethod
    def from_json(cls, line):
        try:
            raw = json.loads(line)
            return cls(**raw)
        except (ValueError, TypeError) as err:
            raise LedgerError(f"bad ledger line: {line[:120]!r}") from err


class CostLedger:
    """Append-only JSON-lines ledger with serialized appends."""

    def __init__(self, path):
        self.path = Path(path)
        self._lock = threading.Lock()

    def append(self, record):
        line = record.to_json()
        with self._lock:
            with self.path.open("a", encoding="utf-8") as handle:
                handle.write(line + "\n")

    def records(self, window=None):
        """All records, optionally filtered to received_at in [from, to]."""
        start, end = window or (None, None)
        out = []
        with self._lock:
            if not self.path.exists():
                return out
            lines = self.path.read_text(encoding="utf-8").splitlines()
        for line in lines:
            if not line.strip():
                continue
            record = CostRecord.from_json(line)
            if start is not None and record.received_at < start:
                continue
            if end is not None and record.received_at > end:
                continue
            out.append(record)
        return out


def margin_report(ledger, window=None):
    """Exact totals and quantized means over a ledger window."""
    records = ledger.records(window) if isinstance(ledger, CostLedger) else list(ledger)
    zero = Decimal("0")
    totals = {"user_price": zero, "upstream_cost": zero, "margin": zero}
    original_units = 0
    abstracted_units = 0
    failed = 0
    for record in records:
        totals["user_price"] += record.user_price
        totals["upstream_cost"] += record.upstream_cost
        totals["margin"] += record.margin
        original_units += record.original_units
        abstracted_units += record.abstracted_units
        if record.status == "failed":
            failed += 1
    count = len(records)

    def mean(total):
        if count == 0:
            return zero
        return (total / count).quantize(MONEY_PLACES)

    if original_units > 0:
        unit_reduction_pct = (original_units - abstracted_units) * 100.0 / original_units
    else:
        unit_reduction_pct = 0.0
    return {
        "records": count,
        "failed": failed,
        "total_user_price": totals["user_price"],
        "total_upstream_cost": totals["upstream_cost"],
        "total_margin": totals["margin"],
        "mean_user_price": mean(totals["user_price"]),
        "mean_upstream_cost": mean(totals["upstream_cost"]),
        "mean_margin": mean(totals["margin"]),
        "total_original_units": original_units,
        "total_abstracted_units": abstracted_units,
        "unit_reduction_pct": unit_reduction_pct,
    }
