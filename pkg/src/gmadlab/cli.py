"""gmadlab command line. Exit codes: 0 pass, 1 property failure, 2 config error."""
from __future__ import annotations

import argparse
import logging
import sys

from . import experiments as ex
from .config import load_config, load_states, parse_beta
from .errors import ConfigError, ValidationError
from .functionals import Constraint, FunctionalKind


def _betas(text: str):
    try:
        return [parse_beta(float(b)) for b in text.split(",") if b.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad beta list {text!r}: {exc}") from exc


def _emit(text: str, out):
    if out:
        ex.write_text(out, text)
    else:
        sys.stdout.write(text)


def cmd_verify(args) -> int:
    cfg = load_config(args.config)
    report, code = ex.run_verify(cfg, n_samples=args.samples)
    _emit(ex.json_text(report), args.out)
    return code


def cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    rows = ex.run_sweep(cfg, args.kind, args.constraint, args.grid, args.betas, args.workers)
    _emit(ex.sweep_csv(cfg, rows), args.out)
    return ex.EXIT_OK


def cmd_capacitance(args) -> int:
    cfg = load_config(args.config)
    res = ex.run_capacitance(cfg, args.grid, args.workers)
    ex.write_text(args.out, ex.csv_text(ex.CAPACITANCE_HEADER, res.rows(), cfg.sha256()))
    summary = {**res.summary(), "config_sha256": cfg.sha256()}
    ex.write_text(ex.sidecar_path(args.out), ex.json_text(summary))
    print(f"MAWER {ex.fmt(res.mawer)}")
    return ex.EXIT_OK


def cmd_mawer(args) -> int:
    cfg = load_config(args.config)
    _emit(ex.json_text(ex.run_mawer(cfg, args.grid, args.workers)), args.out)
    return ex.EXIT_OK


def cmd_mpemba(args) -> int:
    cfg = load_config(args.config)
    rho, sigma = load_states(args.states, cfg.hamiltonian.dim)
    try:
        ex.check_same_dephasing(rho, sigma)
    except ValidationError as exc:
        raise ConfigError(str(exc)) from exc
    rep, code = ex.run_mpemba(cfg, rho, sigma, args.iters)
    ex.write_text(args.out, ex.mpemba_csv(cfg, rep))
    ex.write_text(ex.sidecar_path(args.out), ex.json_text(rep.to_dict()))
    if not rep.incoherent_match:
        print(f"incoherent ergotropies diverge (gap {rep.max_incoherent_gap:.3e})", file=sys.stderr)
    print(f"crossings {rep.crossings} crossings_tot {rep.crossings_tot}")
    return code


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gmadlab", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out_required=False, grid=False):
        sp.add_argument("--config", required=True)
        sp.add_argument("--out", required=out_required)
        if grid:
            sp.add_argument("--grid", type=int, default=None, help="grid size (default: config)")
            sp.add_argument("--workers", type=int, default=1)

    sp = sub.add_parser("verify", help="structural checks of a channel")
    common(sp)
    sp.add_argument("--samples", type=int, default=20)
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("sweep", help="shell/ball functional curves over energy")
    common(sp, grid=True)
    sp.add_argument("--kind", choices=[k.value for k in FunctionalKind], default="ergotropy")
    sp.add_argument("--constraint", choices=[c.value for c in Constraint], default="shell")
    sp.add_argument("--betas", type=_betas, default=None, help="comma list, e.g. 0.1,1,10,inf")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("capacitance", help="ball ergotropy, capacitance and MAWER")
    common(sp, out_required=True, grid=True)
    sp.set_defaults(func=cmd_capacitance)

    sp = sub.add_parser("mawer", help="maximal asymptotic work-energy ratio")
    common(sp, grid=True)
    sp.set_defaults(func=cmd_mawer)

    sp = sub.add_parser("mpemba", help="coherent-ergotropy ordering under iteration")
    common(sp, out_required=True)
    sp.add_argument("--states", required=True)
    sp.add_argument("--iters", type=int, default=10)
    sp.set_defaults(func=cmd_mpemba)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return ex.EXIT_CONFIG
    except ValidationError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return ex.EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
