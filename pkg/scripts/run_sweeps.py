"""Shell-maximal curves for the three channel families in configs/, every
functional kind, over the config beta list. Writes results/sweep_<name>_<kind>.csv."""
import argparse
from pathlib import Path

from gmadlab.cli import main

ROOT = Path(__file__).resolve().parents[1]
FAMILIES = ["activating_channel", "temperature_nonmonotone", "near_lossless"]
KINDS = ["ergotropy", "incoherent", "coherent", "total"]

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--grid", type=int, default=51)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out-dir", default=str(ROOT / "results"))
    args = ap.parse_args()
    out = Path(args.out_dir)
    out.mkdir(exist_ok=True)
    for name in FAMILIES:
        kinds = KINDS if name == "activating_channel" else ["ergotropy"]
        for kind in kinds:
            target = out / f"sweep_{name}_{kind}.csv"
            main(["sweep", "--config", str(ROOT / "configs" / f"{name}.json"), "--kind", kind,
                  "--grid", str(args.grid), "--workers", str(args.workers), "--out", str(target)])
            print(target)
