"""Emit the data tables for figures 2-9 into one directory and print their diagnostics."""

import argparse
from pathlib import Path

from revunc.sweep import emit_figure_data


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="figure_data")
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--figs", default="2,3,4,5,6,7,8,9")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for fig in (int(f) for f in args.figs.split(",")):
        res = emit_figure_data(fig, {"workers": args.workers}, out)
        print(f"figure {fig}: {', '.join(p.name for p in res.paths)}")
        for panel, diag in res.diagnostics.items():
            for k, v in diag.items():
                print(f"    {panel}: {k} = {v:.4g}")


if __name__ == "__main__":
    main()
