"""Training table container and its CSV serialization.

One row per simulated draw: parameter, summary statistic, optional
decision and utility, and the quantile level tau attached to the row.
CSV files carry the fixed header ``theta,summary,decision,utility,tau``
with blanks for absent columns and 17 significant digits per float so
values round-trip bit for bit.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DataError, DomainError, ShapeError

CSV_HEADER = ("theta", "summary", "decision", "utility", "tau")


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


@dataclass
class TrainingTable:
    """Columnar table of simulated (theta, summary, decision, utility, tau) rows."""

    theta: np.ndarray
    summary: np.ndarray
    tau: np.ndarray
    decision: Optional[np.ndarray] = None
    utility: Optional[np.ndarray] = None
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=np.float64).reshape(-1)
        n = self.theta.shape[0]
        if n < 1:
            raise DataError("table must have at least one row")
        self.summary = np.asarray(self.summary, dtype=np.float64)
        if self.summary.ndim == 1:
            self.summary = self.summary[:, None]
        if self.summary.ndim != 2 or self.summary.shape[0] != n:
            raise ShapeError("summary must align with theta rows")
        self.tau = np.asarray(self.tau, dtype=np.float64).reshape(-1)
        if self.tau.shape[0] != n:
            raise ShapeError("tau must align with theta rows")
        if np.any(self.tau <= 0.0) or np.any(self.tau >= 1.0):
            raise DomainError("all tau must be strictly inside (0,1)")
        for name in ("decision", "utility"):
            col = getattr(self, name)
            if col is not None:
                col = np.asarray(col, dtype=np.float64).reshape(-1)
                if col.shape[0] != n:
                    raise ShapeError(f"{name} must align with theta rows")
                setattr(self, name, col)
        if (self.utility is None) != (self.decision is None):
            raise DataError("decision and utility columns must appear together")
        for name in ("theta", "summary", "tau", "decision", "utility"):
            col = getattr(self, name)
            if col is not None and not np.all(np.isfinite(col)):
                raise DataError(f"{name} column contains non-finite values")

    @property
    def n_rows(self) -> int:
        return self.theta.shape[0]

    @property
    def summary_dim(self) -> int:
        return self.summary.shape[1]

    @property
    def has_utility(self) -> bool:
        return self.utility is not None

    def posterior_design(self):
        """Features (summary, tau) and targets theta for the posterior net."""
        X = np.column_stack([self.summary, self.tau])
        return np.ascontiguousarray(X), self.theta.copy(), self.tau.copy()

    def utility_design(self):
        """Features (decision, tau) and targets utility for the utility net."""
        if not self.has_utility:
            raise DataError("table has no decision/utility columns")
        X = np.column_stack([self.decision, self.tau])
        return np.ascontiguousarray(X), self.utility.copy(), self.tau.copy()

    def to_csv(self, path) -> None:
        if self.summary_dim != 1:
            raise DataError("CSV serialization supports scalar summaries only")
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_HEADER)
            dec = self.decision
            uti = self.utility
            for i in range(self.n_rows):
                writer.writerow([
                    _fmt(self.theta[i]),
                    _fmt(self.summary[i, 0]),
                    _fmt(dec[i]) if dec is not None else "",
                    _fmt(uti[i]) if uti is not None else "",
                    _fmt(self.tau[i]),
                ])

    @classmethod
    def from_csv(cls, path, provenance: Optional[dict] = None) -> "TrainingTable":
        with open(path, "r", newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = tuple(next(reader, ()))
            if header != CSV_HEADER:
                raise DataError(f"unexpected CSV header {header!r}")
            cols = {name: [] for name in CSV_HEADER}
            for line_no, row in enumerate(reader, start=2):
                if len(row) != len(CSV_HEADER):
                    raise DataError(f"line {line_no}: expected {len(CSV_HEADER)} fields")
                for name, cell in zip(CSV_HEADER, row):
                    cols[name].append(cell)
        if not cols["theta"]:
            raise DataError("CSV contains no data rows")

        def parse(name, optional=False):
            cells = cols[name]
            blank = [c == "" for c in cells]
            if optional and all(blank):
                return None
            if any(blank):
                raise DataError(f"column {name} mixes blank and present values")
            return np.array([float(c) for c in cells])

        return cls(theta=parse("theta"), summary=parse("summary"),
                   tau=parse("tau"), decision=parse("decision", optional=True),
                   utility=parse("utility", optional=True),
                   provenance=provenance or {})
