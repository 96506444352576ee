"""Work quantifiers of a single state: ergotropy and its coherent/incoherent split.

All quantities use closed forms (sorting eigenvalues or populations against
the ascending spectrum); no unitary optimization happens here.

``ergotropy``, ``incoherent_ergotropy`` and ``coherent_ergotropy`` accept
either a Hamiltonian or a vector of level energies in the state's basis
order, e.g. ``h1.tensor(h2)`` for two cells in the product basis (which may
be degenerate).
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .linalg import eigvalsh_desc
from .states import (
    EntropicTemperature,
    Hamiltonian,
    energy,
    gibbs_populations,
    solve_entropic_beta,
    von_neumann_entropy,
)

log = logging.getLogger(__name__)

NEGATIVE_SLACK = 1e-10


def _levels(h) -> np.ndarray:
    return h.energies if isinstance(h, Hamiltonian) else np.asarray(h, dtype=float)


def _passive_energy(weights_desc: np.ndarray, levels: np.ndarray) -> float:
    return float(weights_desc @ np.sort(levels))


def ergotropy(rho: np.ndarray, h) -> float:
    """tr[rho H] - tr[rho_passive H]."""
    lv = _levels(h)
    e = float(np.real(np.diagonal(rho)) @ lv) - _passive_energy(eigvalsh_desc(rho), lv)
    return max(e, 0.0)


def incoherent_ergotropy(rho: np.ndarray, h) -> float:
    """Ergotropy of the dephased state: best reshuffling of the populations."""
    lv = _levels(h)
    p = np.real(np.diagonal(rho))
    e = float(p @ lv) - _passive_energy(np.sort(p)[::-1], lv)
    return max(e, 0.0)


def coherent_ergotropy(rho: np.ndarray, h) -> float:
    """E - E_i, computed as the gap between the two passive energies."""
    lv = _levels(h)
    p = np.real(np.diagonal(rho))
    e = _passive_energy(np.sort(p)[::-1], lv) - _passive_energy(eigvalsh_desc(rho), lv)
    if e < 0:
        if e < -NEGATIVE_SLACK:
            log.warning("coherent ergotropy %.3e below round-off slack", e)
        else:
            log.debug("clipping coherent ergotropy residual %.3e", e)
        return 0.0
    return e


def entropic_beta_of(rho: np.ndarray, h: Hamiltonian) -> EntropicTemperature:
    s = min(max(von_neumann_entropy(rho), 0.0), math.log(h.dim))
    return solve_entropic_beta(h, s)


def _iso_entropic_gibbs_energy(rho: np.ndarray, h: Hamiltonian) -> float:
    beta = entropic_beta_of(rho, h).beta
    return float(gibbs_populations(h, beta) @ h.energies)


def total_ergotropy(rho: np.ndarray, h: Hamiltonian) -> float:
    """tr[rho H] minus the energy of the thermal state with the same entropy."""
    return max(energy(rho, h) - _iso_entropic_gibbs_energy(rho, h), 0.0)


def total_coherent_ergotropy(rho: np.ndarray, h: Hamiltonian) -> float:
    """tr[(gamma_{Delta rho} - gamma_rho) H]; both thermal states passive."""
    p = np.real(np.diagonal(rho))
    dephased = np.diag(p).astype(complex)
    e = _iso_entropic_gibbs_energy(dephased, h) - _iso_entropic_gibbs_energy(rho, h)
    return max(e, 0.0)


def local_ergotropy_product(rhos, hs) -> float:
    """Locally extractable work of a product state: the sum of cell ergotropies."""
    if len(rhos) != len(hs):
        raise ValueError("need one Hamiltonian per cell")
    return float(sum(ergotropy(r, h) for r, h in zip(rhos, hs)))


@dataclass(frozen=True)
class ErgotropyBreakdown:
    ergotropy: float
    incoherent: float
    coherent: float
    total: float
    total_coherent: float


def ergotropy_breakdown(rho: np.ndarray, h: Hamiltonian) -> ErgotropyBreakdown:
    return ErgotropyBreakdown(
        ergotropy(rho, h),
        incoherent_ergotropy(rho, h),
        coherent_ergotropy(rho, h),
        total_ergotropy(rho, h),
        total_coherent_ergotropy(rho, h),
    )


def reordered_state(rho: np.ndarray, h: Hamiltonian) -> np.ndarray:
    """Apply the energy-basis permutation that sorts populations descending."""
    order = np.argsort(-np.real(np.diagonal(rho)), kind="stable")
    return rho[np.ix_(order, order)]


def same_population_pure_state(rho: np.ndarray) -> np.ndarray:
    """|psi><psi| with psi_j = sqrt(p_j) exp(-i arg rho_0j), phase 0 where undefined."""
    p = np.clip(np.real(np.diagonal(rho)), 0.0, None)
    first = np.asarray(rho)[0]
    theta = np.where(np.abs(first) > 0, -np.angle(first), 0.0)
    theta[0] = 0.0
    psi = np.sqrt(p) * np.exp(1j * theta)
    return np.outer(psi, psi.conj())
