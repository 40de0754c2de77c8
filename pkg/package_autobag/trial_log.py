#! /usr/bin/env python3
"""
Trial logs: one JSON object per line, appended as the trial runs.

The first line is the header (trial identity), then one line per policy decision, then the outcome.
Every line is validated against its record schema when written and when read back.
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional

from jsonschema import Draft7Validator

from package_autobag.common import FAILURE_CLASSES, TrialLogError, dump_json

log = logging.getLogger(__name__)

HEADER = "header"
STEP = "step"
OUTCOME = "outcome"

_ACTION = {
    "type": "object",
    "required": ["kind", "params"],
    "properties": {"kind": {"type": "string"}, "params": {"type": "object"}},
}

SCHEMAS = {
    HEADER: {
        "type": "object",
        "required": ["record", "trial_id", "tier", "variant", "seed", "n_objects"],
        "properties": {
            "record": {"const": HEADER},
            "trial_id": {"type": "string"},
            "tier": {"enum": [1, 2, 3]},
            "variant": {"type": "string"},
            "seed": {"type": "integer"},
            "n_objects": {"type": "integer", "minimum": 1},
        },
    },
    STEP: {
        "type": "object",
        "required": ["record", "step_index", "stage", "rule", "observation", "action", "steps_used", "events"],
        "properties": {
            "record": {"const": STEP},
            "step_index": {"type": "integer", "minimum": 0},
            "stage": {"type": "string"},
            "rule": {"type": "string"},
            "observation": {
                "type": "object",
                "required": ["digest", "a_ch", "e_ch", "bag_fraction"],
                "properties": {
                    "digest": {"type": "string"},
                    "a_ch": {"type": "number"},
                    "e_ch": {"type": "number"},
                    "bag_fraction": {"type": "number"},
                },
            },
            "action": _ACTION,
            "steps_used": {"type": "integer", "minimum": 0},
            "events": {"type": "array", "items": {"type": "string"}},
        },
    },
    OUTCOME: {
        "type": "object",
        "required": ["record", "outcome", "failure_class"],
        "properties": {
            "record": {"const": OUTCOME},
            "failure_class": {"enum": list(FAILURE_CLASSES)},
            "insertion": {"type": ["object", "null"]},
            "notes": {"type": "array", "items": {"type": "string"}},
            "outcome": {
                "type": "object",
                "required": ["opened_bag", "n_placed", "n_contained", "success_n1", "success_n2"],
                "properties": {
                    "opened_bag": {"type": "boolean"},
                    "n_placed": {"type": "integer", "minimum": 0},
                    "n_contained": {"type": "integer", "minimum": 0},
                    "success_n1": {"type": "boolean"},
                    "success_n2": {"type": "boolean"},
                    "budget_exhausted": {"type": "boolean"},
                    "off_workspace": {"type": "boolean"},
                },
            },
        },
    },
}

VALIDATORS = {name: Draft7Validator(schema) for name, schema in SCHEMAS.items()}


@dataclass
class TrialRecord:
    trial_id: str
    tier: int
    variant: str
    seed: int
    n_objects: int = 2
    steps: List[dict] = field(default_factory=list)
    outcome: Optional[dict] = None
    failure_class: Optional[str] = None
    insertion: Optional[dict] = None
    notes: List[str] = field(default_factory=list)

    def header(self) -> dict:
        return {"record": HEADER, "trial_id": self.trial_id, "tier": self.tier, "variant": self.variant,
                "seed": self.seed, "n_objects": self.n_objects}

    def closing(self) -> dict:
        return {"record": OUTCOME, "outcome": self.outcome, "failure_class": self.failure_class,
                "insertion": self.insertion, "notes": list(self.notes)}

    def records(self) -> List[dict]:
        records = [self.header()] + [dict(s, record=STEP) for s in self.steps]
        if self.outcome is not None:
            records.append(self.closing())
        return records

    def lines(self) -> List[str]:
        return [encode(r) for r in self.records()]

    @property
    def complete(self) -> bool:
        return self.outcome is not None and self.failure_class is not None


def validate(record: dict) -> None:
    kind = record.get("record") if isinstance(record, dict) else None
    if kind not in VALIDATORS:
        raise TrialLogError(f"unknown record type {kind!r}")
    errors = sorted(VALIDATORS[kind].iter_errors(record), key=lambda e: list(e.path))
    if errors:
        where = "/".join(str(p) for p in errors[0].path) or "<root>"
        raise TrialLogError(f"invalid {kind} record at {where}: {errors[0].message}")


def encode(record: dict) -> str:
    validate(record)
    return dump_json(record)


class TrialLogWriter:
    """
    Appends validated records to a log file, flushing after every line.
    """
    def __init__(self, path) -> None:
        self.path = Path(path)
        self._file = None

    def __enter__(self) -> "TrialLogWriter":
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._file = open(self.path, "w", encoding="utf-8")
        return self

    def __exit__(self, *exc) -> None:
        self._file.close()
        self._file = None

    def write(self, record: dict) -> None:
        self._file.write(encode(record) + "\n")
        self._file.flush()


def write_trial_log(record: TrialRecord, path) -> None:
    with TrialLogWriter(path) as writer:
        for r in record.records():
            writer.write(r)


def read_trial_log(path, notes: list = None) -> TrialRecord:
    """
    Read one log back. A truncated last line (no newline or not valid JSON) is dropped with a note;
    any other bad line raises TrialLogError.
    """
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    lines = text.split("\n")
    complete_tail = text.endswith("\n")
    if lines and lines[-1] == "":
        lines.pop()
    records = []
    for lineno, line in enumerate(lines, start=1):
        last = lineno == len(lines)
        try:
            record = json.loads(line)
            if last and not complete_tail:
                raise ValueError("no line terminator")
            validate(record)
        except (ValueError, TrialLogError) as e:
            if last:
                message = f"{path}: dropped truncated line {lineno} ({e})"
                log.warning(message)
                if notes is not None:
                    notes.append(message)
                break
            raise TrialLogError(f"{path}:{lineno}: {e}") from e
        records.append(record)

    if not records or records[0]["record"] != HEADER:
        raise TrialLogError(f"{path}: missing header record")
    head = records[0]
    trial = TrialRecord(trial_id=head["trial_id"], tier=head["tier"], variant=head["variant"], seed=head["seed"],
                        n_objects=head["n_objects"])
    for record in records[1:]:
        if record["record"] == STEP:
            trial.steps.append({k: v for k, v in record.items() if k != "record"})
        elif record["record"] == OUTCOME:
            trial.outcome = record["outcome"]
            trial.failure_class = record["failure_class"]
            trial.insertion = record.get("insertion")
            trial.notes = list(record.get("notes", []))
        else:
            raise TrialLogError(f"{path}: second header record")
    return trial


def read_trial_logs(directory, notes: list = None) -> List[TrialRecord]:
    """All *.jsonl logs under a directory, sorted by trial_id."""
    paths = sorted(Path(directory).glob("*.jsonl"))
    return sorted((read_trial_log(p, notes) for p in paths), key=lambda r: r.trial_id)
