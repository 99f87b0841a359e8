"""Command line entry point: ``tvfreq simulate | validate | preset``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .harness import (
    ConfigError,
    emit_csv,
    load_config,
    preset_configs,
    preset_names,
    run_scenario,
    validate,
)

log = logging.getLogger("tvfreq")

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_CONFIG = 2


def _simulate(args):
    cfg = load_config(args.config)
    out = args.out or cfg.output
    if out is None:
        raise ConfigError("no output path: pass --out or set 'output' in the config")
    records = run_scenario(cfg)
    emit_csv(records, out)
    log.info("wrote %d records to %s", len(records), out)
    return EXIT_OK


def _validate(args):
    cfg = load_config(args.config)
    rep = validate(cfg)
    print("\n".join(rep.lines()))
    return EXIT_OK if rep.passed else EXIT_VALIDATION


def _preset(args):
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    status = EXIT_OK
    for cfg in preset_configs(args.name):
        if args.validate:
            rep = validate(cfg)
            print(f"[{cfg.name}]")
            print("\n".join(rep.lines()))
            if not rep.passed:
                status = EXIT_VALIDATION
        path = out_dir / f"{cfg.name}.csv"
        emit_csv(run_scenario(cfg), path)
        print(f"{cfg.name}: wrote {path}")
    return status


def build_parser():
    p = argparse.ArgumentParser(prog="tvfreq", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run a scenario and write its trajectory as CSV")
    s.add_argument("--config", required=True)
    s.add_argument("--out")
    s.set_defaults(func=_simulate)

    v = sub.add_parser("validate", help="run the oracle checks for a scenario")
    v.add_argument("--config", required=True)
    v.set_defaults(func=_validate)

    r = sub.add_parser("preset", help="run a shipped preset scenario group")
    r.add_argument("--name", required=True, help="one of: " + ", ".join(preset_names()))
    r.add_argument("--out-dir", default=".")
    r.add_argument("--validate", action="store_true", help="also run the oracle checks")
    r.set_defaults(func=_preset)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
