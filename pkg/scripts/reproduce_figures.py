"""Run every figure config in configs/ and collect the outputs under out/.

    python scripts/reproduce_figures.py [--out out] [--only fig2d fig4a]
"""

import argparse
import sys
import time
from pathlib import Path

from floquet_invisibility.cli import main
from floquet_invisibility.config import load_config

ROOT = Path(__file__).resolve().parents[1]


def run(names, out):
    failures = []
    for name in names:
        path = ROOT / "configs" / f"{name}.toml"
        kind = load_config(path).kind
        start = time.perf_counter()
        code = main([kind, "--config", str(path), "--out", str(out / name)])
        print(f"{name:8s} {kind:12s} exit={code} {time.perf_counter() - start:6.1f}s")
        if code:
            failures.append(name)
    return failures


if __name__ == "__main__":
    p = argparse.ArgumentParser()
    p.add_argument("--out", type=Path, default=ROOT / "out")
    p.add_argument("--only", nargs="*")
    args = p.parse_args()
    names = args.only or sorted(f.stem for f in (ROOT / "configs").glob("fig*.toml"))
    sys.exit(1 if run(names, args.out) else 0)
