"""Command line entry point: one figure per invocation plus a markdown
caption file next to the image."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .figures import FIGURE_IDS, FigureSpec, SchemaError, render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="socialrl-plot",
        description="render figures from simulator metric CSVs",
    )
    parser.add_argument("--csv", required=True, help="long-format metrics CSV")
    parser.add_argument("--fig", required=True, choices=FIGURE_IDS)
    parser.add_argument("--eps", type=float, default=None, help="filter runs by drift value")
    parser.add_argument("--agent", type=int, default=None)
    parser.add_argument("--state", type=int, default=None)
    parser.add_argument("--out", required=True, help="output image path (.png)")
    args = parser.parse_args(argv)

    try:
        spec = FigureSpec(figure=args.fig, eps=args.eps, agent=args.agent, state=args.state)
        caption = render(args.csv, spec, args.out)
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    out = Path(args.out)
    caption_path = out.with_suffix(".md")
    caption_path.write_text(f"![{args.fig}]({out.name})\n\n{caption}\n")
    print(f"wrote {out}")
    print(f"wrote {caption_path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
