"""Command-line interface.

Subcommands
-----------
run     execute a preset (optionally with a config file and key overrides)
verify  run the randomized invariant and gradient-oracle checks
scan    perturbation scan around the controls of a finished run

Exit codes: 0 on success, 1 on a validation/configuration error, 2 on a
runtime failure (including failed verification checks).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .errors import ValidationError
from .experiment_runner import (
    PRESETS,
    parse_config_text,
    run_preset,
    scan_run_directory,
)
from .verification import run_all

__all__ = ["main"]


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kscontrol",
        description="Discrete optimal control of the 1D Keller-Segel system.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run an experiment preset")
    run_p.add_argument(
        "--preset", help=f"experiment preset name ({', '.join(sorted(PRESETS))})"
    )
    run_p.add_argument("--config", type=Path, help="key=value config file")
    run_p.add_argument("--out", type=Path, help="output directory")
    run_p.add_argument(
        "--set",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        dest="overrides",
        help="override a single config key (repeatable)",
    )

    verify_p = sub.add_parser("verify", help="run the invariant/oracle suites")
    verify_p.add_argument(
        "--fast", action="store_true", help="smaller instance counts"
    )

    scan_p = sub.add_parser("scan", help="perturbation scan on a finished run")
    scan_p.add_argument("--run", required=True, type=Path, help="run directory")
    scan_p.add_argument("--direction", default="constant", choices=["constant"])
    scan_p.add_argument(
        "--amplitudes", required=True, help="comma-separated perturbation sizes"
    )
    return parser


def _parse_overrides(pairs: list[str]) -> dict[str, str]:
    out: dict[str, str] = {}
    for pair in pairs:
        if "=" not in pair:
            raise ValidationError(f"--set expects KEY=VALUE, got {pair!r}")
        key, value = pair.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def _cmd_run(args: argparse.Namespace) -> int:
    overrides: dict[str, object] = {}
    preset = args.preset
    if args.config is not None:
        if not args.config.exists():
            raise ValidationError(f"config file {args.config} does not exist")
        file_values = parse_config_text(args.config.read_text())
        preset = preset or file_values.get("preset") or ""
        file_values.pop("preset", None)
        overrides.update(file_values)
    overrides.update(_parse_overrides(args.overrides))
    if args.out is not None:
        overrides["out_dir"] = str(args.out)
    if not preset:
        raise ValidationError("no preset given (use --preset or a config 'preset' key)")
    artifacts = run_preset(preset, overrides, log=print)
    print(f"artifacts written to {artifacts.out_dir}")
    return 0


def _cmd_verify(args: argparse.Namespace) -> int:
    results = run_all(fast=args.fast)
    failed = 0
    for res in results:
        status = "PASS" if res.passed else "FAIL"
        print(f"[{status}] {res.name}: {res.detail}")
        failed += 0 if res.passed else 1
    if failed:
        print(f"{failed} of {len(results)} checks failed")
        return 2
    print(f"all {len(results)} checks passed")
    return 0


def _cmd_scan(args: argparse.Namespace) -> int:
    try:
        amplitudes = [float(tok) for tok in args.amplitudes.split(",") if tok.strip()]
    except ValueError as exc:
        raise ValidationError(f"bad amplitude list {args.amplitudes!r}: {exc}") from None
    if not amplitudes:
        raise ValidationError("no amplitudes given")
    out, scan = scan_run_directory(args.run, amplitudes, direction=args.direction)
    for s, cost in scan:
        print(f"{s:+.6g}  ->  {cost:.12g}")
    print(f"scan written to {out}")
    return 0


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "verify":
            return _cmd_verify(args)
        if args.command == "scan":
            return _cmd_scan(args)
        raise AssertionError(f"unhandled command {args.command}")
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
