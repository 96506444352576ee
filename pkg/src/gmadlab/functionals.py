"""Channel-level work functionals at fixed input energy (single cell).

The shell functional maximizes a state functional of Phi(|psi><psi|) over
pure inputs with <psi|H|psi> = E. Populations are written as convex
combinations of the vertices of {p in simplex : p . eps = E}; every vertex
is a two-level mixture, so the energy constraint holds by construction.
Convex weights come from squared hyperspherical angles and each level gets a
free relative phase, which leaves an unconstrained search space for
Nelder-Mead.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.optimize import minimize, minimize_scalar
from scipy.stats import qmc

from .errors import DomainError, ValidationError
from .ergotropy import coherent_ergotropy, ergotropy, incoherent_ergotropy, total_ergotropy
from .gmad import KrausChannel
from .states import Hamiltonian

log = logging.getLogger(__name__)

ENERGY_TOL = 1e-10
MAWER_EPSILONS = (1e-2, 5e-3, 2.5e-3)
ACTIVATION_TOL = 1e-9


class FunctionalKind(str, Enum):
    ERGOTROPY = "ergotropy"
    INCOHERENT = "incoherent"
    COHERENT = "coherent"
    TOTAL = "total"


class Constraint(str, Enum):
    SHELL = "shell"
    BALL = "ball"


STATE_FUNCTIONALS = {
    FunctionalKind.ERGOTROPY: ergotropy,
    FunctionalKind.INCOHERENT: incoherent_ergotropy,
    FunctionalKind.COHERENT: coherent_ergotropy,
    FunctionalKind.TOTAL: total_ergotropy,
}


@dataclass(frozen=True)
class OptimizerConfig:
    n_starts: int = 64
    max_iters: int = 2000
    step_tol: float = 1e-10
    value_tol: float = 1e-9
    seed: int = 0
    # starts polished to full tolerance after the coarse multi-start pass
    n_polish: int = 3

    def __post_init__(self):
        if self.n_starts < 1 or self.max_iters < 1 or self.n_polish < 1:
            raise ValidationError("optimizer counts must be positive")
        if self.step_tol <= 0 or self.value_tol <= 0:
            raise ValidationError("optimizer tolerances must be positive")


@dataclass(frozen=True)
class MefQuery:
    channel: KrausChannel
    kind: FunctionalKind = FunctionalKind.ERGOTROPY
    constraint: Constraint = Constraint.SHELL
    energy: float = 0.0
    n_cells: int = 1
    allow_non_gmad_coherent: bool = False

    def __post_init__(self):
        object.__setattr__(self, "kind", FunctionalKind(self.kind))
        object.__setattr__(self, "constraint", Constraint(self.constraint))
        if self.n_cells != 1:
            raise ValidationError("only single-cell functionals are implemented")

    def at(self, energy: float, constraint: Constraint | None = None) -> "MefQuery":
        return MefQuery(self.channel, self.kind, constraint or self.constraint, energy,
                        self.n_cells, self.allow_non_gmad_coherent)


@dataclass
class ShellOptimum:
    value: float
    psi: np.ndarray
    converged: bool
    energy_residual: float
    n_evaluations: int = 0


@dataclass
class EnergyCurve:
    """Functional values on an increasing energy grid."""

    epsilon: np.ndarray
    values: np.ndarray
    kind: FunctionalKind
    constraint: Constraint
    beta: float | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.epsilon = np.asarray(self.epsilon, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.epsilon.shape != self.values.shape or self.epsilon.ndim != 1:
            raise ValidationError("epsilon and values must be 1-d arrays of equal length")
        if np.any(np.diff(self.epsilon) <= 0):
            raise ValidationError("energy grid must be strictly increasing")

    def __len__(self) -> int:
        return len(self.epsilon)


def _check_energy(h: Hamiltonian, e: float) -> float:
    if e < h.ground - ENERGY_TOL or e > h.top + ENERGY_TOL:
        raise DomainError(f"energy {e} outside the spectrum range [{h.ground}, {h.top}]")
    return min(max(e, h.ground), h.top)


def shell_vertices(h: Hamiltonian, e: float) -> np.ndarray:
    """Vertices of the population polytope {p >= 0, sum p = 1, p . eps = e}."""
    eps = h.energies
    verts = []
    for i in range(h.dim):
        for j in range(i + 1, h.dim):
            if eps[i] <= e <= eps[j]:
                v = np.zeros(h.dim)
                v[i] = (eps[j] - e) / (eps[j] - eps[i])
                v[j] = 1.0 - v[i]
                verts.append(v)
    verts = np.unique(np.round(np.array(verts), 14), axis=0)
    return verts


def _angles_to_weights(theta: np.ndarray) -> np.ndarray:
    k = len(theta) + 1
    w = np.empty(k)
    running = 1.0
    for i, t in enumerate(theta):
        w[i] = running * math.cos(t) ** 2
        running *= math.sin(t) ** 2
    w[k - 1] = running
    return w


class ShellParametrization:
    """Map unconstrained coordinates to pure states on an energy shell."""

    def __init__(self, h: Hamiltonian, e: float):
        self.h = h
        self.energy = e
        self.vertices = shell_vertices(h, e)
        self.n_weights = len(self.vertices) - 1
        self.n_params = self.n_weights + h.dim - 1

    @property
    def is_point(self) -> bool:
        return len(self.vertices) == 1 and np.count_nonzero(self.vertices[0] > 0) == 1

    def populations(self, x: np.ndarray) -> np.ndarray:
        w = _angles_to_weights(x[: self.n_weights])
        return np.clip(w @ self.vertices, 0.0, None)

    def psi(self, x: np.ndarray) -> np.ndarray:
        p = self.populations(x)
        phases = np.concatenate([[0.0], x[self.n_weights:]])
        return np.sqrt(p) * np.exp(1j * phases)

    def corner(self, k: int) -> np.ndarray:
        """Angles selecting vertex k alone."""
        theta = np.full(self.n_weights, math.pi / 2)
        if k < self.n_weights:
            theta[k] = 0.0
        return theta

    def starts(self, n: int, rng: np.random.Generator) -> list:
        """Corner starts with random phases, then Latin-hypercube interior points."""
        n_phase = self.h.dim - 1
        out = []
        n_corner = min(len(self.vertices), max(1, n // 4))
        for k in range(n_corner):
            out.append(np.concatenate([self.corner(k), rng.uniform(0, 2 * math.pi, n_phase)]))
        rest = n - len(out)
        if rest > 0:
            sampler = qmc.LatinHypercube(d=self.n_params, seed=rng)
            u = sampler.random(rest)
            lo = np.concatenate([np.zeros(self.n_weights), np.zeros(n_phase)])
            hi = np.concatenate([np.full(self.n_weights, math.pi / 2), np.full(n_phase, 2 * math.pi)])
            out.extend(qmc.scale(u, lo, hi))
        return out


def _objective(ch: KrausChannel, param: ShellParametrization, func):
    d = ch.dim
    s = ch.superoperator
    h = ch.hamiltonian
    counter = [0]

    def f(x):
        counter[0] += 1
        psi = param.psi(x)
        out = (s @ np.outer(psi, psi.conj()).reshape(d * d)).reshape(d, d)
        return -func(out, h)

    return f, counter


def _simplex(x0: np.ndarray, step: float) -> np.ndarray:
    n = len(x0)
    sim = np.tile(x0, (n + 1, 1))
    for i in range(n):
        sim[i + 1, i] += step
    return sim


def _check_kind(ch: KrausChannel, kind: FunctionalKind, allow_non_gmad: bool):
    if kind is FunctionalKind.COHERENT and not ch.gmad_structured and not allow_non_gmad:
        raise ValidationError(
            "pure-state optimization of the coherent functional is only justified for "
            "GMAD-structured channels; pass allow_non_gmad_coherent=True to override"
        )


def optimize_pure_on_shell(ch: KrausChannel, e: float, kind=FunctionalKind.ERGOTROPY,
                           cfg: OptimizerConfig | None = None, rng: np.random.Generator | None = None,
                           allow_non_gmad_coherent: bool = False) -> ShellOptimum:
    """Best functional value over pure inputs with mean energy ``e``.

    Every start gets a coarse Nelder-Mead run; the best ``cfg.n_polish`` are
    then refined to ``step_tol`` / ``value_tol``.
    """
    cfg = cfg or OptimizerConfig()
    kind = FunctionalKind(kind)
    _check_kind(ch, kind, allow_non_gmad_coherent)
    h = ch.hamiltonian
    e = _check_energy(h, e)
    rng = rng if rng is not None else np.random.default_rng(cfg.seed)
    func = STATE_FUNCTIONALS[kind]
    param = ShellParametrization(h, e)
    f, counter = _objective(ch, param, func)

    if param.n_params == 0 or param.is_point:
        x = np.zeros(param.n_params)
        psi = param.psi(x)
        return ShellOptimum(-f(x), psi, True, abs(float(np.abs(psi) ** 2 @ h.energies) - e), counter[0])

    coarse = []
    for x0 in param.starts(cfg.n_starts, rng):
        res = minimize(f, x0, method="Nelder-Mead",
                       options={"maxiter": cfg.max_iters, "xatol": 1e-5, "fatol": 1e-11,
                                "initial_simplex": _simplex(x0, 0.4)})
        coarse.append((res.fun, res.x, res.success))
    coarse.sort(key=lambda t: t[0])

    best_val, best_x, converged = coarse[0]
    any_converged = any(c[2] for c in coarse)
    for val, x, _ in coarse[: cfg.n_polish]:
        res = minimize(f, x, method="Nelder-Mead",
                       options={"maxiter": cfg.max_iters, "xatol": cfg.step_tol, "fatol": cfg.value_tol,
                                "initial_simplex": _simplex(x, 1e-3)})
        if res.fun < best_val:
            best_val, best_x, converged = res.fun, res.x, res.success
    if not any_converged:
        log.warning("shell optimization at E=%g did not converge from any start", e)
    psi = param.psi(best_x)
    resid = abs(float(np.abs(psi) ** 2 @ h.energies) - e)
    return ShellOptimum(-float(best_val), psi, bool(converged or any_converged), resid, counter[0])


def shell_mef(q: MefQuery, cfg: OptimizerConfig | None = None) -> float:
    if q.constraint is not Constraint.SHELL:
        raise ValidationError("shell_mef needs a shell query")
    return optimize_pure_on_shell(q.channel, q.energy, q.kind, cfg,
                                  allow_non_gmad_coherent=q.allow_non_gmad_coherent).value


def ball_mef(q: MefQuery, cfg: OptimizerConfig | None = None, n_grid: int = 17) -> float:
    """max over E' in [eps_0, E] of the shell value: grid scan, then a bounded
    scalar search around the best grid point."""
    if q.constraint is not Constraint.BALL:
        raise ValidationError("ball_mef needs a ball query")
    h = q.channel.hamiltonian
    e = _check_energy(h, q.energy)
    cfg = cfg or OptimizerConfig()

    def shell(x):
        return shell_mef(q.at(x, Constraint.SHELL), cfg)

    if e - h.ground <= ENERGY_TOL:
        return shell(h.ground)
    grid = np.linspace(h.ground, e, n_grid)
    vals = np.array([shell(x) for x in grid])
    k = int(np.argmax(vals))
    lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, n_grid - 1)]
    res = minimize_scalar(lambda x: -shell(x), bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-6 * (h.top - h.ground)})
    return float(max(vals[k], -res.fun))


def _shell_point(args):
    ch, e, kind, cfg, index, allow = args
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, index]))
    return optimize_pure_on_shell(ch, e, kind, cfg, rng=rng, allow_non_gmad_coherent=allow).value


def shell_values(ch: KrausChannel, energies, kind, cfg: OptimizerConfig, workers: int = 1,
                 allow_non_gmad_coherent: bool = False) -> np.ndarray:
    """Shell values at each energy; point i is seeded by (cfg.seed, i)."""
    tasks = [(ch, float(e), FunctionalKind(kind), cfg, i, allow_non_gmad_coherent)
             for i, e in enumerate(energies)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            vals = list(pool.map(_shell_point, tasks))
    else:
        vals = [_shell_point(t) for t in tasks]
    return np.array(vals)


def sweep_curve(template: MefQuery, grid_size: int, cfg: OptimizerConfig | None = None,
                energies=None, workers: int = 1) -> EnergyCurve:
    """Shell or ball values on a uniform grid over [eps_0, eps_{d-1}].

    Ball values are the running maximum of the shell values on the grid.
    """
    if grid_size < 2 and energies is None:
        raise ValidationError("grid_size must be >= 2")
    cfg = cfg or OptimizerConfig()
    ch = template.channel
    h = ch.hamiltonian
    if energies is None:
        energies = np.linspace(h.ground, h.top, grid_size)
    energies = np.asarray(energies, dtype=float)
    vals = shell_values(ch, energies, template.kind, cfg, workers, template.allow_non_gmad_coherent)
    if template.constraint is Constraint.BALL:
        vals = np.maximum.accumulate(vals)
    return EnergyCurve(energies, vals, template.kind, template.constraint, ch.beta,
                       meta={"seed": cfg.seed, "n_starts": cfg.n_starts})


def upper_concave_hull(x, y) -> tuple[np.ndarray, np.ndarray]:
    """Vertices of the upper concave hull (monotone chain), x sorted ascending."""
    x, y = np.asarray(x, float), np.asarray(y, float)
    order = np.argsort(x, kind="stable")
    hull: list = []
    for i in order:
        px, py = x[i], y[i]
        while len(hull) >= 2:
            (ox, oy), (ax, ay) = hull[-2], hull[-1]
            # drop the middle point if it is not strictly above the chord
            if (ax - ox) * (py - oy) - (ay - oy) * (px - ox) >= 0:
                hull.pop()
            else:
                break
        hull.append((px, py))
    hx, hy = np.array(hull).T
    return hx, hy


def concave_envelope(curve: EnergyCurve) -> EnergyCurve:
    """Least concave majorant of a curve, evaluated back on its grid."""
    if len(curve) < 2:
        raise ValidationError("need at least two points for an envelope")
    hx, hy = upper_concave_hull(curve.epsilon, curve.values)
    env = np.interp(curve.epsilon, hx, hy)
    env = np.maximum(env, curve.values)
    return EnergyCurve(curve.epsilon, env, curve.kind, curve.constraint, curve.beta,
                       meta={**curve.meta, "envelope": True})


def normalized_ball_curve(ch: KrausChannel, kind, epsilons, cfg: OptimizerConfig,
                          workers: int = 1) -> EnergyCurve:
    """Ball curve on normalized energies eps in [0, 1], values in the same units."""
    h = ch.hamiltonian
    scale = h.top - h.ground
    if h.ground != 0.0 or scale != 1.0:
        log.info("normalizing spectrum: shift %g, scale factor %g", h.ground, scale)
    epsilons = np.asarray(epsilons, dtype=float)
    vals = shell_values(ch, h.ground + epsilons * scale, kind, cfg, workers)
    return EnergyCurve(epsilons, np.maximum.accumulate(vals / scale), FunctionalKind(kind),
                       Constraint.BALL, ch.beta, meta={"energy_scale": scale})


def capacitance_grid(grid_size: int, extra=MAWER_EPSILONS) -> np.ndarray:
    return np.unique(np.concatenate([np.linspace(0.0, 1.0, grid_size), np.asarray(extra, float)]))


def chi_capacitance(ch: KrausChannel, grid_size: int = 201, cfg: OptimizerConfig | None = None,
                    ball_curve: EnergyCurve | None = None, workers: int = 1) -> EnergyCurve:
    """Local/separable ergotropic capacitance: the concave envelope of the
    single-cell ball ergotropy over normalized energy."""
    cfg = cfg or OptimizerConfig()
    if ball_curve is None:
        ball_curve = normalized_ball_curve(ch, FunctionalKind.ERGOTROPY, capacitance_grid(grid_size),
                                           cfg, workers)
    chi = concave_envelope(ball_curve)
    chi.values = np.maximum.accumulate(chi.values)
    chi.meta["ball_values"] = ball_curve.values
    return chi


@dataclass
class MawerEstimate:
    value: float
    ratios: dict
    chi: EnergyCurve
    activated: bool


def mawer_from_chi(chi: EnergyCurve) -> MawerEstimate:
    """Slope of chi at 0 by two-point Richardson on chi(eps)/eps."""
    ratios = {}
    for e in MAWER_EPSILONS:
        ratios[e] = float(np.interp(e, chi.epsilon, chi.values)) / e
    chi0 = float(np.interp(0.0, chi.epsilon, chi.values))
    if chi0 > ACTIVATION_TOL:
        log.warning("capacitance is %.3e at zero energy; the work-energy ratio diverges", chi0)
        return MawerEstimate(math.inf, ratios, chi, True)
    value = 2.0 * ratios[2.5e-3] - ratios[5e-3]
    return MawerEstimate(value, ratios, chi, False)


def mawer(ch: KrausChannel, cfg: OptimizerConfig | None = None, grid_size: int = 201,
          workers: int = 1) -> float:
    chi = chi_capacitance(ch, grid_size, cfg, workers=workers)
    return mawer_from_chi(chi).value
