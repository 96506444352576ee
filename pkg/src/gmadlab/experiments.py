"""Experiment runners behind the CLI: verification, sweeps, capacitance,
MAWER and coherent-ergotropy ordering (Mpemba) iterations.

Runners return plain data; ``write_*`` helpers serialize it. Every CSV starts
with ``# config_sha256=<hash>`` and uses 17 significant digits.
"""
from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import ExperimentConfig, build_channel, format_beta, gmad_spec
from .ergotropy import (
    coherent_ergotropy,
    entropic_beta_of,
    incoherent_ergotropy,
    total_coherent_ergotropy,
)
from .errors import ValidationError
from .functionals import (
    Constraint,
    FunctionalKind,
    MefQuery,
    capacitance_grid,
    chi_capacitance,
    concave_envelope,
    mawer_from_chi,
    normalized_ball_curve,
    sweep_curve,
)
from .gmad import QutritGmadParams, apply_channel, build_qutrit_gmad, verify_channel
from .states import Hamiltonian

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2
DEPHASE_TOL = 1e-8
INCOHERENT_MATCH_TOL = 1e-9


def fmt(x) -> str:
    if isinstance(x, str):
        return x
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if math.isnan(x):
        return "nan"
    return "%.17g" % x


def csv_text(header: list, rows: list, config_hash: str) -> str:
    buf = io.StringIO(newline="")
    buf.write(f"# config_sha256={config_hash}\n")
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(fmt(v) for v in row) + "\n")
    return buf.getvalue()


def write_text(path, text: str):
    with open(path, "w", newline="") as f:
        f.write(text)


def json_text(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def _jsonable(x):
    if isinstance(x, float) and not math.isfinite(x):
        return fmt(x)
    return x


# --- verify -----------------------------------------------------------------

def run_verify(cfg: ExperimentConfig, n_samples: int = 20) -> tuple[dict, int]:
    """Structural checks of the configured channel; exit code 0 iff all pass."""
    spec = gmad_spec(cfg)
    ch = build_channel(cfg, check_unitarity=False)
    report = verify_channel(ch, cfg.beta, n_samples=n_samples, seed=cfg.seed)
    out = report.to_dict()
    resid = spec.unitarity_residual()
    out["residuals"]["unitarity"] = resid
    out["checks"]["unitarity"] = bool(resid < 1e-10)
    out["passed"] = all(out["checks"].values())
    out["config_sha256"] = cfg.sha256()
    return out, EXIT_OK if out["passed"] else EXIT_FAIL


# --- sweep ------------------------------------------------------------------

SWEEP_HEADER = ["beta", "epsilon", "functional_kind", "constraint", "value"]


def run_sweep(cfg: ExperimentConfig, kind="ergotropy", constraint="shell",
              grid_size: int | None = None, betas=None, workers: int = 1) -> list:
    """Rows (beta, E, kind, constraint, value), ordered by beta then E."""
    kind, constraint = FunctionalKind(kind), Constraint(constraint)
    grid_size = grid_size or cfg.grid_size
    betas = cfg.betas if betas is None else tuple(betas)
    rows = []
    for beta in betas:
        ch = build_channel(cfg, beta)
        curve = sweep_curve(MefQuery(ch, kind, constraint), grid_size, cfg.optimizer_config,
                            workers=workers)
        for e, v in zip(curve.epsilon, curve.values):
            rows.append((format_beta(beta), e, kind.value, constraint.value, v))
    return rows


def sweep_csv(cfg: ExperimentConfig, rows: list) -> str:
    return csv_text(SWEEP_HEADER, rows, cfg.sha256())


# --- capacitance / MAWER ------------------------------------------------------

CAPACITANCE_HEADER = ["epsilon", "ball_mef", "chi", "incoherent_ball", "incoherent_envelope"]


@dataclass
class CapacitanceResult:
    epsilon: np.ndarray
    ball: np.ndarray
    chi: np.ndarray
    incoherent_ball: np.ndarray
    incoherent_envelope: np.ndarray
    mawer: float
    ratios: dict
    activated: bool

    def rows(self) -> list:
        return list(zip(self.epsilon, self.ball, self.chi, self.incoherent_ball,
                        self.incoherent_envelope))

    def summary(self) -> dict:
        return {
            "mawer": _jsonable(self.mawer),
            "activated": self.activated,
            "ratios": {fmt(e): r for e, r in sorted(self.ratios.items())},
        }


def run_capacitance(cfg: ExperimentConfig, grid_size: int | None = None, workers: int = 1,
                    with_incoherent: bool = True) -> CapacitanceResult:
    ch = build_channel(cfg)
    opt = cfg.optimizer_config
    eps = capacitance_grid(grid_size or cfg.grid_size)
    ball = normalized_ball_curve(ch, FunctionalKind.ERGOTROPY, eps, opt, workers)
    chi = chi_capacitance(ch, cfg=opt, ball_curve=ball)
    est = mawer_from_chi(chi)
    if with_incoherent:
        inc = normalized_ball_curve(ch, FunctionalKind.INCOHERENT, eps, opt, workers)
        inc_vals, inc_env = inc.values, concave_envelope(inc).values
    else:
        inc_vals = inc_env = np.full(len(eps), np.nan)
    return CapacitanceResult(eps, ball.values, chi.values, inc_vals, inc_env,
                             est.value, est.ratios, est.activated)


def run_mawer(cfg: ExperimentConfig, grid_size: int | None = None, workers: int = 1) -> dict:
    res = run_capacitance(cfg, grid_size, workers, with_incoherent=False)
    return {**res.summary(), "config_sha256": cfg.sha256()}


# --- Mpemba -------------------------------------------------------------------

MPEMBA_HEADER = ["n", "Ec_rho", "Ec_sigma", "ratio", "Ectot_rho", "Ectot_sigma", "ratio_tot",
                 "beta_star_rho", "beta_star_sigma", "Ei_rho", "Ei_sigma"]


def check_same_dephasing(rho, sigma, tol: float = DEPHASE_TOL):
    """Raise naming the diagonal entries where rho and sigma differ."""
    a, b = np.real(np.diagonal(rho)), np.real(np.diagonal(sigma))
    bad = [(i, float(a[i]), float(b[i])) for i in range(len(a)) if abs(a[i] - b[i]) > tol]
    if bad:
        desc = ", ".join(f"[{i}] rho={x:.10g} sigma={y:.10g}" for i, x, y in bad)
        raise ValidationError(f"dephased parts differ at diagonal entries {desc}")


def _ratio(a: float, b: float) -> float:
    if a == b:
        return 1.0
    if b == 0:
        return math.inf
    return a / b


def sign_crossings(values) -> list:
    """Indices n where (v[n-1] - 1) and (v[n] - 1) have strictly opposite signs."""
    out = []
    for n in range(1, len(values)):
        x, y = values[n - 1] - 1.0, values[n] - 1.0
        if math.isfinite(x) and math.isfinite(y) and x * y < 0:
            out.append(n)
    return out


@dataclass
class MpembaReport:
    rows: list
    crossings: list
    crossings_tot: list
    incoherent_match: bool
    max_incoherent_gap: float
    meta: dict = field(default_factory=dict)

    @property
    def ec_difference(self) -> list:
        return [r[1] - r[2] for r in self.rows]

    def to_dict(self) -> dict:
        return {
            "columns": MPEMBA_HEADER,
            "rows": [[_jsonable(float(v)) if not isinstance(v, str) else v for v in r] for r in self.rows],
            "crossings": self.crossings,
            "crossings_tot": self.crossings_tot,
            "incoherent_match": self.incoherent_match,
            "max_incoherent_gap": self.max_incoherent_gap,
            **self.meta,
        }


def mpemba_trajectory(ch, rho, sigma, n_max: int) -> MpembaReport:
    if n_max < 0:
        raise ValidationError("iteration count must be >= 0")
    check_same_dephasing(rho, sigma)
    h = ch.hamiltonian
    rows, gap = [], 0.0
    a, b = np.asarray(rho, complex), np.asarray(sigma, complex)
    for n in range(n_max + 1):
        if n > 0:
            a, b = apply_channel(ch, a), apply_channel(ch, b)
        ec_a, ec_b = coherent_ergotropy(a, h), coherent_ergotropy(b, h)
        et_a, et_b = total_coherent_ergotropy(a, h), total_coherent_ergotropy(b, h)
        ei_a, ei_b = incoherent_ergotropy(a, h), incoherent_ergotropy(b, h)
        gap = max(gap, abs(ei_a - ei_b))
        rows.append((n, ec_a, ec_b, _ratio(ec_a, ec_b), et_a, et_b, _ratio(et_a, et_b),
                     entropic_beta_of(a, h).beta, entropic_beta_of(b, h).beta, ei_a, ei_b))
    return MpembaReport(rows, sign_crossings([r[3] for r in rows]),
                        sign_crossings([r[6] for r in rows]),
                        gap < INCOHERENT_MATCH_TOL, gap)


def run_mpemba(cfg: ExperimentConfig, rho, sigma, n_max: int) -> tuple[MpembaReport, int]:
    ch = build_channel(cfg)
    rep = mpemba_trajectory(ch, rho, sigma, n_max)
    rep.meta["config_sha256"] = cfg.sha256()
    return rep, EXIT_OK if rep.incoherent_match else EXIT_FAIL


def mpemba_csv(cfg: ExperimentConfig, rep: MpembaReport) -> str:
    return csv_text(MPEMBA_HEADER, rep.rows, cfg.sha256())


def coherent_order_flips(ch, rho, sigma) -> bool:
    """True if sign(E_c(rho) - E_c(sigma)) changes after one application."""
    h = ch.hamiltonian
    d0 = coherent_ergotropy(rho, h) - coherent_ergotropy(sigma, h)
    d1 = (coherent_ergotropy(apply_channel(ch, rho), h)
          - coherent_ergotropy(apply_channel(ch, sigma), h))
    return d0 * d1 < 0


def find_flip_time(g10, g21, g20, beta, h: Hamiltonian, rho, sigma, times=None,
                   allow_degenerate_gaps: bool = True):
    """First interaction time (default scan: t = 1, then 400 points in (0, pi])
    at which one application flips the coherent-ergotropy order; None if none."""
    if times is None:
        times = np.concatenate([[1.0], np.linspace(np.pi / 400, np.pi, 400)])
    for t in times:
        p = QutritGmadParams.from_couplings(g10, g21, g20, beta, h, t=float(t),
                                            allow_degenerate_gaps=allow_degenerate_gaps)
        if coherent_order_flips(build_qutrit_gmad(p), rho, sigma):
            return float(t)
    return None


def sidecar_path(out) -> Path:
    out = Path(out)
    return out.with_name(out.stem + ".json") if out.suffix != ".json" else out.with_name(out.stem + ".summary.json")
