#! /usr/bin/env python3
"""
Aggregate trial records into the per-(tier, variant) result table.
"""

import csv
import io
import logging
from dataclasses import dataclass, field
from itertools import groupby
from typing import Dict, Iterable, List

import numpy as np

from package_autobag.common import FAILURE_CLASSES, EmptyInput
from package_autobag.trial_log import TrialRecord

log = logging.getLogger(__name__)

COLUMNS = ("Tier", "Variant", "Trials", "Open Bag", "#Placed", "#Contained", "n>=1", "n=2")


def mean_std(values: Iterable[float]) -> str:
    """Mean and population standard deviation, one decimal: '1.3±0.7'."""
    values = np.asarray(list(values), dtype=float)
    if len(values) == 0:
        raise EmptyInput("mean_std of no values")
    return f"{values.mean():.1f}±{values.std():.1f}"


def ratio(k: int, n: int) -> str:
    return f"{k}/{n}"


@dataclass(frozen=True)
class ReportRow:
    tier: int
    variant: str
    trials: int
    open_bag: str
    placed: str
    contained: str
    success_n1: str
    success_n2: str
    failures: Dict[str, int] = field(default_factory=dict)

    def cells(self) -> List[str]:
        return ([str(self.tier), self.variant, str(self.trials), self.open_bag, self.placed, self.contained,
                 self.success_n1, self.success_n2] + [str(self.failures.get(c, 0)) for c in FAILURE_CLASSES])


@dataclass(frozen=True)
class Report:
    rows: List[ReportRow]
    skipped: List[str] = field(default_factory=list)

    @property
    def header(self) -> List[str]:
        return list(COLUMNS) + list(FAILURE_CLASSES)


def _row(tier: int, variant: str, records: List[TrialRecord]) -> ReportRow:
    outcomes = [r.outcome for r in records]
    n = len(records)
    failures = {c: 0 for c in FAILURE_CLASSES}
    for r in records:
        failures[r.failure_class] = failures.get(r.failure_class, 0) + 1
    return ReportRow(tier=tier, variant=variant, trials=n,
                     open_bag=ratio(sum(o["opened_bag"] for o in outcomes), n),
                     placed=mean_std(o["n_placed"] for o in outcomes),
                     contained=mean_std(o["n_contained"] for o in outcomes),
                     success_n1=ratio(sum(o["success_n1"] for o in outcomes), n),
                     success_n2=ratio(sum(o["success_n2"] for o in outcomes), n),
                     failures=failures)


def aggregate(records: Iterable[TrialRecord], notes: list = None) -> Report:
    """
    One row per (tier, variant). Records without an outcome (truncated logs) are left out with a note.
    Raises EmptyInput when no complete record remains.
    """
    complete, skipped = [], []
    for r in records:
        if r.complete:
            complete.append(r)
        else:
            skipped.append(f"{r.trial_id}: no outcome record, left out of the report")
    if notes is not None:
        notes.extend(skipped)
    if not complete:
        raise EmptyInput("no complete trial records to aggregate")

    def cell(r: TrialRecord):
        return r.tier, r.variant

    ordered = sorted(complete, key=lambda r: (r.tier, r.variant, r.trial_id))
    rows = [_row(tier, variant, list(group)) for (tier, variant), group in groupby(ordered, key=cell)]
    return Report(rows=rows, skipped=skipped)


def render_text(report: Report) -> str:
    table = [report.header] + [row.cells() for row in report.rows]
    widths = [max(len(line[i]) for line in table) for i in range(len(report.header))]
    lines = ["  ".join(c.ljust(w) for c, w in zip(line, widths)).rstrip() for line in table]
    return "\n".join(lines) + "\n"


def render_csv(report: Report) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(report.header)
    for row in report.rows:
        writer.writerow(row.cells())
    return buffer.getvalue()


RENDERERS = {"text": render_text, "csv": render_csv}
