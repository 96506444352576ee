"""Coherent-ergotropy ordering under repeated channel use for the stored state pair,
plus the interaction-time scan that looks for an ordering flip after one use."""
import argparse
import json
from pathlib import Path

from gmadlab.cli import main
from gmadlab.config import load_config, load_states
from gmadlab.experiments import find_flip_time

ROOT = Path(__file__).resolve().parents[1]

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", default=str(ROOT / "configs" / "mpemba_couplings.json"))
    ap.add_argument("--states", default=str(ROOT / "configs" / "mpemba_states.json"))
    ap.add_argument("--iters", type=int, default=10)
    ap.add_argument("--out", default=str(ROOT / "results" / "mpemba.csv"))
    args = ap.parse_args()
    Path(args.out).parent.mkdir(exist_ok=True)
    code = main(["mpemba", "--config", args.config, "--states", args.states,
                 "--iters", str(args.iters), "--out", args.out])
    cfg = load_config(args.config)
    p = cfg.parametrization
    rho, sigma = load_states(args.states, cfg.hamiltonian.dim)
    t = find_flip_time(p["g10"], p["g21"], p["g20"], cfg.beta, cfg.hamiltonian, rho, sigma)
    print(json.dumps({"first_flip_time": t}))
    raise SystemExit(code)
