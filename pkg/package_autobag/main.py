#! /usr/bin/env python3
"""
autobag command line

Subcommands:
- run-trials       run a cell of seeded trials and write one log per trial plus the report
- simulate         scripted rollout of the data-collection policy, one mask per step
- metrics          opening metrics of a mask file
- label-uv         label a regular/UV image pair into a mask
- collect-dataset  simulated segmentation dataset with manifest
- report           aggregate trial logs into the result table

Environment variables:
- AUTOBAG_CONFIG - config file used when --config is not given
- AUTOBAG_OUTPUT_PATH - root for relative output directories (default: current working directory)
- AUTOBAG_LOG_LEVEL - logging level (default WARNING)

Exit codes: 0 success, 1 configuration or input error, 2 I/O error.
"""

import os
import sys
import json
import logging
import argparse
from dataclasses import replace
from importlib.util import find_spec
from pathlib import Path

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_IO = 2


class UsageError(Exception):
    pass


class ArgumentParser(argparse.ArgumentParser):
    """Bad usage exits through UsageError so it maps to the configuration exit code."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def configure_logging() -> None:
    level_name = os.environ.get("AUTOBAG_LOG_LEVEL", "WARNING").upper()
    level = logging.getLevelName(level_name)
    if not isinstance(level, int):
        level = logging.WARNING
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")


def _config(args):
    cfg = config.load_config(getattr(args, "config", None))
    if getattr(args, "deterministic", False):
        cfg = replace(cfg, sim=replace(cfg.sim, deterministic=True))
    return cfg


def cmd_run_trials(args) -> int:
    cfg = _config(args)
    out = common.get_output_path(args.out, "trials")
    records = harness.run_trials(cfg, tier=args.tier, variant=args.variant, trials=args.trials, seed=args.seed,
                                 out_dir=out, workers=args.workers)
    notes = [f"{r.trial_id}: {n}" for r in records for n in r.notes]
    table = report.aggregate(records, notes)
    (out / "report.txt").write_text(report.render_text(table), encoding="utf-8")
    (out / "report.csv").write_text(report.render_csv(table), encoding="utf-8")
    common.write_notes(out, "run_trials", notes)
    print(report.render_text(table), end="")
    return EXIT_OK


def cmd_report(args) -> int:
    notes = []
    records = trial_log.read_trial_logs(args.input, notes)
    table = report.aggregate(records, notes)
    text = report.RENDERERS[args.format](table)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        print(text, end="")
    for note in notes:
        print(note, file=sys.stderr)
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = _config(args)
    out = common.get_output_path(args.out, "simulate")
    scene = cfg.scene()
    rng = SimRandom(args.seed, deterministic=cfg.sim.deterministic)
    sim = SimHandle.start(args.tier, cfg.sim, rng, scene, cfg.run.n_objects)
    policy = Policy(cfg.policy.variant, cfg.policy_context(), scene.calibration)

    def choose(mask, last_kind, index):
        action, _ = policy.collect(policy.observe(mask), last_kind, rng.child("policy", index))
        return action

    summary = main_sim.rollout(sim, choose, args.steps, out)
    (out / "rollout.json").write_text(common.dump_json(summary) + "\n", encoding="utf-8")
    for entry in summary:
        print(f"{entry['step']:3d} {entry['action']:<9} {' '.join(entry['events'])}")
    return EXIT_OK


def cmd_metrics(args) -> int:
    cfg = config.load_config(args.calibration) if args.calibration else config.RunConfig()
    mask = read_mask(args.mask)
    metrics = perception.opening_metrics(mask, cfg.bag_calibration())
    print(f"a_ch = {metrics.a_ch:.4f}")
    print(f"e_ch = {metrics.e_ch:.4f}")
    hull = [] if metrics.hull is None else metrics.hull.vertices
    print("hull = " + " ".join(f"{x:g},{y:g}" for x, y in hull))
    return EXIT_OK


def cmd_label_uv(args) -> int:
    cfg = config.load_config(args.ranges) if args.ranges else config.RunConfig()
    ranges = cfg.ranges.label_ranges()
    regular = perception.read_image(args.regular)
    uv = perception.read_image(args.uv)
    bag = perception.bag_mask_from_regular(regular, ranges)
    mask = perception.uv_threshold_label(uv, bag, ranges, cfg.segmenter.dilation_radius,
                                         cfg.segmenter.min_component)
    write_mask(mask, args.out)
    return EXIT_OK


def cmd_collect_dataset(args) -> int:
    cfg = _config(args)
    out = common.get_output_path(args.out, "dataset")
    notes = []
    manifest = dataset.collect_dataset(cfg, args.n, args.seed, out, write_images=not args.no_images, notes=notes)
    common.write_notes(out, "collect_dataset", notes)
    print(json.dumps({k: manifest[k] for k in ("n_images", "n_train", "n_val", "episodes")}))
    return EXIT_OK


def build_parser() -> ArgumentParser:
    parser = ArgumentParser(prog="autobag", description="Bag opening and insertion simulator and policy harness")
    sub = parser.add_subparsers(dest="command", parser_class=ArgumentParser)
    sub.required = True

    p = sub.add_parser("run-trials", help="run seeded trials for one tier and variant")
    p.add_argument("--tier", type=int, choices=(1, 2, 3), default=None)
    p.add_argument("--variant", choices=VARIANTS, default=None)
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--config", default=None)
    p.add_argument("--deterministic", action="store_true")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_run_trials)

    p = sub.add_parser("simulate", help="scripted rollout, one mask per step")
    p.add_argument("--tier", type=int, choices=(1, 2, 3), default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--steps", type=int, default=10)
    p.add_argument("--deterministic", action="store_true")
    p.add_argument("--config", default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("metrics", help="opening metrics of a mask")
    p.add_argument("--mask", required=True)
    p.add_argument("--calibration", default=None, help="config file with a calibration or workspace section")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("label-uv", help="label a regular/UV image pair")
    p.add_argument("--regular", required=True)
    p.add_argument("--uv", required=True)
    p.add_argument("--ranges", default=None, help="config file with a ranges section")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_label_uv)

    p = sub.add_parser("collect-dataset", help="simulated segmentation dataset")
    p.add_argument("--n", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--config", default=None)
    p.add_argument("--no-images", action="store_true")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_collect_dataset)

    p = sub.add_parser("report", help="aggregate trial logs")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--format", choices=tuple(report.RENDERERS), default="text")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    configure_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as e:
        print(e, file=sys.stderr)
        return EXIT_CONFIG
    except common.AutobagError as e:
        print(f"autobag: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as e:
        print(f"autobag: {e}", file=sys.stderr)
        return EXIT_IO


if __name__ == '__main__':
    sys.path.append(".")
    sys.path.append("../")

    # Python won't let us place these duplicate imports in a function...
    if (find_spec("package_autobag") is not None):
        from package_autobag import common, config, dataset, harness, perception, report, trial_log
        from package_autobag.common import VARIANTS
        from package_autobag.policy.main_policy import Policy
        from package_autobag.segmask import read_mask, write_mask
        from package_autobag.sim import main_sim
        from package_autobag.sim.common_sim import SimRandom
        from package_autobag.sim.main_sim import SimHandle
    else:
        # run from inside the package directory: put the repo root on the path
        sys.path.append(str(Path(__file__).resolve().parents[1]))
        from package_autobag import common, config, dataset, harness, perception, report, trial_log
        from package_autobag.common import VARIANTS
        from package_autobag.policy.main_policy import Policy
        from package_autobag.segmask import read_mask, write_mask
        from package_autobag.sim import main_sim
        from package_autobag.sim.common_sim import SimRandom
        from package_autobag.sim.main_sim import SimHandle
    sys.exit(main())
else:
    from package_autobag import common, config, dataset, harness, perception, report, trial_log
    from package_autobag.common import VARIANTS
    from package_autobag.policy.main_policy import Policy
    from package_autobag.segmask import read_mask, write_mask
    from package_autobag.sim import main_sim
    from package_autobag.sim.common_sim import SimRandom
    from package_autobag.sim.main_sim import SimHandle
