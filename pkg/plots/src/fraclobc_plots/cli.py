"""Batch figure rendering for solver experiment outputs.

    fraclobc-plot <kind> --in <dir> --out <file.png> [--style key=value ...]

Kinds: snapshots, z_curve, eigen_stability, trace, f_beta, barrier_slack.
"""

from __future__ import annotations

import argparse
import sys

from .figures import KINDS, render
from .io import MissingInput, SchemaMismatch


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="fraclobc-plot",
        description=__doc__,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("kind", choices=KINDS)
    parser.add_argument("--in", dest="input_dir", required=True,
                        help="experiment output directory")
    parser.add_argument("--out", required=True, help="image file to write")
    parser.add_argument("--style", action="append", metavar="KEY=VALUE",
                        default=[])
    ns = parser.parse_args(argv)
    style = {}
    for item in ns.style:
        if "=" not in item:
            print(f"error: --style expects key=value, got {item!r}",
                  file=sys.stderr)
            return 1
        key, val = item.split("=", 1)
        style[key] = val
    try:
        render(ns.kind, ns.input_dir, ns.out, style)
    except (MissingInput, SchemaMismatch) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {ns.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
