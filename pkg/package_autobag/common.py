#! /usr/bin/env python3

import os
import json
import logging
from pathlib import Path, os as path_os

log = logging.getLogger(__name__)

# Mask class ids
BACKGROUND = 0
BAG = 1
RIM = 2
HANDLE = 3
CLASS_NAMES = {BACKGROUND: "background", BAG: "bag", RIM: "rim", HANDLE: "handle"}
FOREGROUND_CLASSES = (BAG, RIM, HANDLE)

# Mask file gray levels, bit-exact for golden files
MASK_FILE_VALUES = {BACKGROUND: 0, BAG: 85, RIM: 170, HANDLE: 255}

# Elongation cap so the closed-opening sentinel stays orderable
E_MAX = 100.0

# Opening directions
UP = "up"
DOWN = "down"
SIDEWAYS = "sideways"
OPENING_DIRS = (UP, DOWN, SIDEWAYS)

# Policy stages
STAGE1 = "Stage1"
STAGE2 = "Stage2"
INSERTION = "Insertion"
LIFT = "Lift"
DONE = "Done"
STAGE_ORDER = (STAGE1, STAGE2, INSERTION, LIFT, DONE)

# Policy variants
AUTOBAG = "autobag"
AB_P = "ab-p"
AB_A = "ab-a"
AB_E = "ab-e"
AUTOBAG_G = "autobag-g"
AUTOBAG_C = "autobag-c"
AUTOBAG_D = "autobag-d"
VARIANTS = (AUTOBAG, AB_P, AB_A, AB_E, AUTOBAG_G, AUTOBAG_C, AUTOBAG_D)

# Primitive phases
COLLECT = "collect"
EXECUTE = "execute"

# Failure classes
FAILURE_BUDGET = "A"
FAILURE_OFF_WORKSPACE = "B"
FAILURE_MISPLACED = "C"
FAILURE_FELL_OUT = "D"
FAILURE_LIFT_SLIP = "E"
FAILURE_NONE = "none"
FAILURE_CLASSES = (FAILURE_BUDGET, FAILURE_OFF_WORKSPACE, FAILURE_MISPLACED, FAILURE_FELL_OUT,
                   FAILURE_LIFT_SLIP, FAILURE_NONE)

# Flat test bag, midpoints of the 28-30 cm x 49-54 cm range
BAG_WIDTH_CM = 29.0
BAG_LENGTH_CM = 51.5


class AutobagError(Exception):
    """Base class for every error raised by package_autobag."""


class EmptyInput(AutobagError, ValueError):
    pass


class DegenerateInput(AutobagError, ValueError):
    pass


class DimensionMismatch(AutobagError, ValueError):
    pass


class UnknownKind(AutobagError, ValueError):
    pass


class InvalidTier(AutobagError, ValueError):
    pass


class InvalidAction(AutobagError, ValueError):
    pass


class StateOutOfWorkspace(AutobagError):
    pass


class EmptyBagMask(AutobagError, ValueError):
    pass


class NoRim(AutobagError, ValueError):
    pass


class ClosedOpening(AutobagError, ValueError):
    pass


class StepBudgetExhausted(AutobagError):
    pass


class MaskFormatError(AutobagError, ValueError):
    pass


class TrialLogError(AutobagError, ValueError):
    pass


class ConfigError(AutobagError, ValueError):
    """
    Configuration problem. Carries the file and line where it was found when known.
    :param message: str
    :param path: config file path or None
    :param line: 1-based line number or None
    """
    def __init__(self, message: str, path=None, line=None) -> None:
        self.path = path
        self.line = line
        if path is not None and line is not None:
            message = f"{path}:{line}: {message}"
        elif path is not None:
            message = f"{path}: {message}"
        super().__init__(message)


def get_output_path(out_dir=None, default_name: str = "output_data") -> Path:
    """
    Resolve and create an output directory. Relative paths are placed under AUTOBAG_OUTPUT_PATH
    (default: current working directory).
    :param out_dir: str, Path or None
    :param default_name: directory name used when out_dir is None
    :return: created directory
    """
    project_path = os.environ.get("AUTOBAG_OUTPUT_PATH", os.getcwd())
    if out_dir is None:
        output_dir = Path(f"{project_path}{path_os.sep}{default_name}")
    else:
        output_dir = Path(out_dir)
        if not output_dir.is_absolute():
            output_dir = Path(project_path) / output_dir
    output_dir.mkdir(parents=True, exist_ok=True)
    return output_dir


def write_notes(output_dir: Path, name: str, notes: list) -> None:
    """
    Write notes to {name}_notes.txt, only if actual notes exist.
    """
    if len(notes) > 0:
        # map to str, a note may be any object
        with open(output_dir / f"{name}_notes.txt", "w") as o:
            o.write("\n\n".join(map(lambda note: str(note), notes)))


def dump_json(obj) -> str:
    """
    Canonical JSON text: sorted keys, no whitespace. Used for every file that must be byte-stable.
    """
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))
