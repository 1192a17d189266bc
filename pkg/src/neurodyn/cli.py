"""Command line entry point: ``neurodyn simulate|presets|verify``."""

from __future__ import annotations

import argparse
import sys

from .core import ValidationError
from .presets import list_presets
from .scenario import (
    EXIT_OK,
    EXIT_PARSE,
    EXIT_VALIDATION,
    EXIT_VERIFY_FAILED,
    ConfigParseError,
    execute,
    load_config,
)
from .verify import DEFAULT_FIXTURES, FixtureError, regenerate, run_fast, run_full


def _simulate(args) -> int:
    try:
        sc = load_config(args.config)
    except ConfigParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ValidationError as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    manifest = execute(sc)
    for f in manifest.files:
        print(sc.output_dir / f["path"])
    print(sc.output_dir / "manifest.json")
    if manifest.status != "ok":
        print(f"error: {manifest.error}", file=sys.stderr)
    return manifest.exit_code


def _presets(args) -> int:
    sys.stdout.write(list_presets())
    return EXIT_OK


def _verify(args) -> int:
    if args.regen:
        fixtures = regenerate(args.fixtures)
        print(f"wrote {len(fixtures)} fixtures to {args.fixtures}")
        return EXIT_OK
    try:
        results = run_full(args.fixtures) if args.full else run_fast()
    except FixtureError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VERIFY_FAILED
    for r in results:
        print(r.line())
    failed = [r.name for r in results if not r.ok]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    if failed:
        print("failed: " + ", ".join(failed), file=sys.stderr)
        return EXIT_VERIFY_FAILED
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="neurodyn", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a scenario config")
    p.add_argument("config", help="path to a YAML scenario file")
    p.set_defaults(func=_simulate)

    p = sub.add_parser("presets", help="print the preset catalog")
    p.set_defaults(func=_presets)

    p = sub.add_parser("verify", help="check pinned regression fixtures")
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--fast", action="store_true", help="arithmetic and identity checks only (default)")
    mode.add_argument("--full", action="store_true", help="also re-run every simulation fixture")
    mode.add_argument("--regen", action="store_true", help="recompute fixtures and overwrite the file")
    p.add_argument("--fixtures", default=DEFAULT_FIXTURES, help="fixture file (default: bundled)")
    p.set_defaults(func=_verify)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
