import csv
import io

import pytest

from package_autobag import report
from package_autobag.common import AUTOBAG, AB_A, FAILURE_CLASSES, EmptyInput
from package_autobag.trial_log import TrialRecord


def finished(index, n_placed, n_contained, tier=1, variant=AUTOBAG, failure="none", opened=True):
    record = TrialRecord(trial_id=f"t{tier}-{variant}-{index:03d}", tier=tier, variant=variant, seed=index)
    record.outcome = {"opened_bag": opened, "n_placed": n_placed, "n_contained": n_contained,
                      "success_n1": n_contained >= 1, "success_n2": n_contained >= 2}
    record.failure_class = failure
    return record


def test_mean_std_formatting():
    assert report.mean_std([2, 2, 1, 2, 1, 0]) == "1.3±0.7"
    assert report.mean_std([2]) == "2.0±0.0"
    with pytest.raises(EmptyInput):
        report.mean_std([])


def test_row_for_six_trials():
    placed = [2, 2, 1, 2, 1, 0]
    contained = [2, 1, 1, 2, 0, 0]
    failures = ["none", "D", "C", "none", "E", "A"]
    records = [finished(i, p, c, failure=f, opened=p > 0)
               for i, (p, c, f) in enumerate(zip(placed, contained, failures))]
    table = report.aggregate(records)
    assert len(table.rows) == 1
    row = table.rows[0]
    assert row.cells()[:8] == ["1", AUTOBAG, "6", "5/6", "1.3±0.7", "1.0±0.8", "4/6", "2/6"]
    assert row.failures == {"A": 1, "B": 0, "C": 1, "D": 1, "E": 1, "none": 2}


def test_single_trial_row():
    table = report.aggregate([finished(0, 2, 2)])
    assert table.rows[0].cells()[2:8] == ["1", "1/1", "2.0±0.0", "2.0±0.0", "1/1", "1/1"]


def test_rows_are_grouped_and_ordered():
    records = [finished(0, 2, 2, tier=2), finished(0, 1, 0, variant=AB_A), finished(1, 2, 2), finished(0, 2, 1)]
    table = report.aggregate(records)
    assert [(r.tier, r.variant, r.trials) for r in table.rows] == [(1, AB_A, 1), (1, AUTOBAG, 2), (2, AUTOBAG, 1)]


def test_incomplete_records_are_skipped():
    notes = []
    truncated = TrialRecord(trial_id="t1-autobag-009", tier=1, variant=AUTOBAG, seed=9)
    table = report.aggregate([finished(0, 2, 2), truncated], notes)
    assert table.rows[0].trials == 1
    assert table.skipped == notes == ["t1-autobag-009: no outcome record, left out of the report"]
    with pytest.raises(EmptyInput):
        report.aggregate([truncated])


def test_renderers():
    table = report.aggregate([finished(0, 2, 2), finished(1, 1, 0, failure="C")])
    text = report.render_text(table).splitlines()
    assert text[0].split() == ["Tier", "Variant", "Trials", "Open", "Bag", "#Placed", "#Contained", "n>=1", "n=2"] + \
        list(FAILURE_CLASSES)
    assert text[1].split()[:8] == ["1", AUTOBAG, "2", "2/2", "1.5±0.5", "1.0±1.0", "1/2", "1/2"]
    assert all(line == line.rstrip() for line in text)
    rows = list(csv.reader(io.StringIO(report.render_csv(table))))
    assert rows[0] == table.header
    assert rows[1] == table.rows[0].cells()
    assert set(report.RENDERERS) == {"text", "csv"}
