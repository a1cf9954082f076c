"""Command-line entry point: render figures from a finished run directory.

Exit codes: 0 on success, 1 on a bad request (unknown kind, missing
input), 2 on an unexpected runtime failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .render import ALL_KINDS, FigureRequest, RenderError, render


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="figures", description="Render figures from a run directory."
    )
    parser.add_argument("--run", required=True, type=Path, help="run directory")
    parser.add_argument(
        "--kinds",
        nargs="*",
        default=None,
        metavar="KIND",
        help=f"subset of: {', '.join(ALL_KINDS)} (default: every kind with data)",
    )
    parser.add_argument("--format", default="png", choices=["png", "svg"])
    parser.add_argument(
        "--out", type=Path, default=None, help="output directory (default: <run>/figures)"
    )
    args = parser.parse_args(argv)
    try:
        request = FigureRequest(
            run_dir=args.run,
            kinds=tuple(args.kinds) if args.kinds else None,
            fmt=args.format,
            out_dir=args.out,
        )
        written = render(request)
    except RenderError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 2
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
