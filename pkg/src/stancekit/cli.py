"""Command-line entry point.

    stancekit pipeline --config path/to/stancekit.ini --out results/
    stancekit stance-train --set labeled=labels.csv --out results/

Exit status is 0 on success, 1 for invalid configuration or input, and 2
when a stage needs artifacts from a stage that has not been run.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .config import CONFIG_ENV, build_config
from .errors import MissingArtifactError, StanceKitError
from .pipeline import STAGES, run_pipeline, run_stage

# flag -> config key
FLAGS = {
    "--input": "input",
    "--lang": "lang",
    "--from": "date_from",
    "--to": "date_to",
    "--seed": "seed",
    "--topics-k": "topics_k",
    "--event-date": "event_date",
    "--out": "out",
}


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help=f"key = value config file (default: ${CONFIG_ENV})")
    for flag, key in FLAGS.items():
        common.add_argument(flag, dest=key, default=None)
    common.add_argument("--strict", action="store_true", default=None,
                        help="abort on the first malformed input line")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override any config key; repeatable")
    common.add_argument("-v", "--verbose", action="count", default=0)

    parser = argparse.ArgumentParser(prog="stancekit", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in [*STAGES, "pipeline"]:
        sub.add_parser(name, parents=[common])
    fx = sub.add_parser("make-fixture", help="write the synthetic fixture file set")
    fx.add_argument("dest")
    fx.add_argument("--tweets", type=int, default=10000)
    fx.add_argument("--fixture-seed", type=int, default=7)
    return parser


def _overrides(args) -> dict:
    values = {key: getattr(args, key) for key in FLAGS.values()}
    values["strict"] = args.strict
    for item in args.set:
        key, sep, value = item.partition("=")
        if not sep:
            raise StanceKitError(f"--set expects KEY=VALUE, got {item!r}")
        values[key] = value
    return values


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(getattr(args, "verbose", 0), 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "make-fixture":
            from .synthetic import generate, write_fixture
            write_fixture(args.dest, generate(n_tweets=args.tweets, seed=args.fixture_seed))
            return 0
        cfg = build_config(args.config, _overrides(args))
        if args.command == "pipeline":
            run_pipeline(cfg)
        else:
            run_stage(args.command, cfg)
    except MissingArtifactError as exc:
        print(f"stancekit: error: {exc}", file=sys.stderr)
        return 2
    except StanceKitError as exc:
        print(f"stancekit: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
