"""Command-line batch runner.

Usage::

    quantum-clock <experiment> [--config FILE] [--tau 1] [--half-width 32] ... --out report.json

Config files are flat ``key = value`` documents (``#`` starts a comment);
keys are the long flag names without dashes in front.  Flags override file
values.  Exit status: 0 success, 2 configuration error, 3 experiment failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .errors import ClockError, ConfigInvalid
from .experiments import EXPERIMENTS, ExperimentConfig, run
from .report import emit, to_csv, to_json

log = logging.getLogger("quantum_clock")

EXIT_CONFIG = 2
EXIT_FAILURE = 3


def read_config_file(path: str) -> dict:
    values = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigInvalid(f"cannot read config file {path}: {exc}") from exc
    for lineno, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigInvalid(f"{path}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in ExperimentConfig.keys():
            raise ConfigInvalid(f"{path}:{lineno}: unknown key {key!r}")
        values[key] = value
    return values


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        _fail("ConfigInvalid", message, EXIT_CONFIG)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="quantum-clock", description="Ideal quantum clock verification experiments.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="experiment", required=True, parser_class=_Parser)
    for name in EXPERIMENTS:
        p = sub.add_parser(name)
        p.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)
        p.add_argument("--config", help="flat key = value config file")
        for key in ExperimentConfig.keys():
            if key == "experiment":
                continue
            p.add_argument(f"--{key}", dest=key.replace("-", "_"), default=None)
    return parser


def _fail(category: str, message: str, code: int):
    sys.stderr.write(json.dumps({"error": category, "message": message}) + "\n")
    raise SystemExit(code)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        values = read_config_file(args.config) if args.config else {}
        if values.get("experiment", args.experiment) != args.experiment:
            raise ConfigInvalid(f"config file names experiment {values['experiment']!r}, command is {args.experiment!r}")
        values["experiment"] = args.experiment
        for key in ExperimentConfig.keys():
            flag = getattr(args, key.replace("-", "_"), None)
            if key != "experiment" and flag is not None:
                values[key] = flag
        config = ExperimentConfig.from_mapping(values)
    except ConfigInvalid as exc:
        _fail(exc.category, str(exc), EXIT_CONFIG)

    try:
        report = run(config)
    except ConfigInvalid as exc:
        _fail(exc.category, str(exc), EXIT_CONFIG)
    except ClockError as exc:
        _fail(exc.category, str(exc), EXIT_FAILURE)

    log.info("%s finished in %.3f s", config.experiment, report.wall_time)
    for v in report.verdicts:
        log.info("%s %s: %.6g %s %.3g", "PASS" if v.passed else "FAIL", v.name, v.value, v.relation, v.tolerance)
    try:
        if config.out:
            emit(report, config.format, config.out)
        else:
            sys.stdout.write(to_json(report) if config.format == "json" else to_csv(report))
    except ClockError as exc:
        _fail(exc.category, str(exc), EXIT_FAILURE)
    return 0


if __name__ == "__main__":
    sys.exit(main())
