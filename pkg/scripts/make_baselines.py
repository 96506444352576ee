"""Regenerate tests/baselines/reference.json. Only run when a change to the
numerics is intended; the regression test compares against this file."""
import json
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "tests"))

from conftest import MPEMBA_RHO, MPEMBA_SIGMA  # noqa: E402
from gmadlab.baselines import all_baselines  # noqa: E402

if __name__ == "__main__":
    out = ROOT / "tests" / "baselines" / "reference.json"
    data = all_baselines(MPEMBA_RHO, MPEMBA_SIGMA)
    out.write_text(json.dumps(data, indent=1, allow_nan=False) + "\n")
    print(f"wrote {out}")
