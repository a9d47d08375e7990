"""Command line: satl-figs --run DIR --which KIND [--out FILE].

Exit codes: 0 success, 1 usage/configuration problems, 2 bad or missing
input data (schema mismatches, empty files).
"""

from __future__ import annotations

import argparse
import sys

from .render import KINDS, for_run, render
from .schemas import FigureError, SchemaError


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="satl-figs",
        description="render figures from satl run directories")
    parser.add_argument("--run", required=True,
                        help="run directory containing manifest.json")
    parser.add_argument("--which", required=True, choices=KINDS,
                        help="figure kind to render")
    parser.add_argument("--out", default=None,
                        help="output image path (default: <run>/<kind>.png)")
    args = parser.parse_args(argv)

    try:
        spec = for_run(args.run, args.which, output=args.out)
        path = render(spec)
    except SchemaError as exc:
        print(f"satl-figs: schema error: {exc}", file=sys.stderr)
        return 2
    except FigureError as exc:
        print(f"satl-figs: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"satl-figs: {exc}", file=sys.stderr)
        return 1

    print(f"satl-figs wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
