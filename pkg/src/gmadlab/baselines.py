"""Reference curves stored as self-regression baselines (first-run values)."""
from __future__ import annotations

import math

import numpy as np

from .experiments import mpemba_trajectory
from .functionals import (
    FunctionalKind,
    MefQuery,
    OptimizerConfig,
    capacitance_grid,
    chi_capacitance,
    normalized_ball_curve,
    sweep_curve,
)
from .gmad import QutritGmadParams, build_qutrit_gmad
from .states import Hamiltonian

BASELINE_OPT = OptimizerConfig(n_starts=16, seed=0)
BETAS = (0.1, 1.0, 10.0, math.inf)
H = Hamiltonian((0.0, 0.8, 1.0))


def _qutrit(s1, sbar, alpha0, beta, h=H):
    return build_qutrit_gmad(QutritGmadParams(s1, sbar, alpha0, beta, h,
                                              allow_degenerate_gaps=h.has_degenerate_gaps()))


def activation_curves(grid: int = 21) -> dict:
    """Shell curves of the activating channel for every kind and beta (inf = MAD limit)."""
    out = {}
    for beta in BETAS:
        ch = _qutrit(0.5, 0.99, 0.99, beta)
        for kind in FunctionalKind:
            c = sweep_curve(MefQuery(ch, kind), grid, BASELINE_OPT)
            out[f"{kind.value}@{beta}"] = c.values.tolist()
    out["epsilon"] = np.linspace(0, 1, grid).tolist()
    return out


def capacitance_curve(grid: int = 21) -> dict:
    ch = _qutrit(0.5, 0.745, 0.745, 1.0)
    eps = capacitance_grid(grid)
    ball = normalized_ball_curve(ch, FunctionalKind.ERGOTROPY, eps, BASELINE_OPT)
    chi = chi_capacitance(ch, cfg=BASELINE_OPT, ball_curve=ball)
    inc = normalized_ball_curve(ch, FunctionalKind.INCOHERENT, eps, BASELINE_OPT)
    return {"epsilon": eps.tolist(), "ball": ball.values.tolist(), "chi": chi.values.tolist(),
            "incoherent_ball": inc.values.tolist()}


def mpemba_rows(rho, sigma, n_max: int = 10) -> list:
    h = Hamiltonian((0.0, 0.5, 1.0))
    ch = _qutrit(math.sin(0.8), math.sin(math.sqrt(5) / 10), 1 / math.sqrt(5), 0.1, h)
    rep = mpemba_trajectory(ch, rho, sigma, n_max)
    return [[float(v) for v in r] for r in rep.rows]


def all_baselines(rho, sigma) -> dict:
    return {"activation": activation_curves(), "capacitance": capacitance_curve(),
            "mpemba": mpemba_rows(rho, sigma)}
