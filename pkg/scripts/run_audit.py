"""Run the randomised property audit over several bipartite splits and write a JSON report."""

import argparse
import sys

from revunc.audit import run_audit


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--trials", type=int, default=1000)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", default="audit_report.json")
    args = ap.parse_args()
    report = run_audit(args.seed, args.trials, [(2, 2), (2, 3), (3, 3)], experimental=True, workers=args.workers)
    print("\n".join(report.summary_lines()))
    report.write(args.out)
    print(f"report -> {args.out}")
    sys.exit(0 if report.ok else 2)


if __name__ == "__main__":
    main()
