"""Capacitance curves and MAWER for configs/capacitance_example.json (grid 201, 64 starts)."""
import argparse
from pathlib import Path

from gmadlab.cli import main

ROOT = Path(__file__).resolve().parents[1]

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", default=str(ROOT / "configs" / "capacitance_example.json"))
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", default=str(ROOT / "results" / "capacitance.csv"))
    args = ap.parse_args()
    Path(args.out).parent.mkdir(exist_ok=True)
    raise SystemExit(main(["capacitance", "--config", args.config, "--workers", str(args.workers),
                           "--out", args.out]))
