"""Verification reports and their text/CSV serialization."""

from dataclasses import dataclass, field
from typing import Any

import numpy as np


def fmt(value):
    """Format a value for output; floats use 17 significant digits."""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return "%.17g" % value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (list, tuple, np.ndarray)):
        return "[" + ", ".join(fmt(v) for v in value) + "]"
    if value is None:
        return "none"
    return str(value)


@dataclass
class VerificationReport:
    """Outcome of one numerical check.

    ``passed`` is computed by the check from ``quantities`` and
    ``thresholds`` only; the report never asserts a theoretical constant.
    """

    kind: str
    passed: bool
    inputs: dict = field(default_factory=dict)
    quantities: dict = field(default_factory=dict)
    thresholds: dict = field(default_factory=dict)
    trace: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    def __getitem__(self, key) -> Any:
        return self.quantities[key]

    def to_text(self):
        lines = [f"[{self.kind}]", f"passed = {fmt(self.passed)}"]
        for title, section in (
            ("inputs", self.inputs),
            ("quantities", self.quantities),
            ("thresholds", self.thresholds),
        ):
            lines.append(f"  [{self.kind}.{title}]")
            for k, v in section.items():
                lines.append(f"  {k} = {fmt(v)}")
        if self.trace:
            lines.append(f"  [{self.kind}.trace]")
            for i, row in enumerate(self.trace):
                items = ", ".join(f"{k}={fmt(v)}" for k, v in row.items())
                lines.append(f"  {i} = {{{items}}}")
        for note in self.notes:
            lines.append(f"  # {note}")
        return "\n".join(lines)

    def csv_rows(self):
        rows = [(self.kind, "passed", fmt(self.passed))]
        for k, v in self.quantities.items():
            rows.append((self.kind, k, fmt(v)))
        return rows
