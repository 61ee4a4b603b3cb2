"""Run the whole pipeline on the synthetic benchmark and print a results table.

Extra arguments are passed to ``visnet run-all`` (for example
``--set subjects=3``).
"""

import argparse
import json
import sys
import time
from pathlib import Path

from visnet import cli


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="out/benchmark")
    args, rest = ap.parse_known_args()

    t0 = time.perf_counter()
    code = cli.main(["run-all", "-o", args.out, "--reproducible", *rest])
    if code:
        sys.exit(code)
    report = json.loads((Path(args.out) / "report.json").read_text())
    print(f"finished in {time.perf_counter() - t0:.1f}s")
    for task in report["tasks"]:
        pos, neg = task["positive"], task["negative"]
        print(f"\n{pos} vs {neg}")
        print(f"  {'features':24s} {'protocol':9s} {'class':6s} {'prec':>12s} {'recall':>12s} "
              f"{'f1':>12s} {'accuracy':>12s}")
        for cell in task["cells"]:
            s = cell["summary"]
            acc = s["accuracy"]
            for tag in (pos, neg):
                m = s[tag]
                cols = " ".join(f"{m[k]['mean']:.2f}+-{m[k]['std']:.2f}".rjust(12)
                                for k in ("precision", "recall", "f1"))
                print(f"  {cell['features']:24s} {cell['protocol']:9s} {tag:6s} {cols} "
                      f"{acc['mean']:.2f}+-{acc['std']:.2f}".rstrip())


if __name__ == "__main__":
    main()
