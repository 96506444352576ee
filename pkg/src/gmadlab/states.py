"""Hamiltonians, density matrices and the thermal-state constructions built on them."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ValidationError
from .linalg import as_matrix, eigvalsh_desc, max_abs

STATE_HERM_TOL = 1e-12
STATE_TRACE_TOL = 1e-12
PSD_TOL = 1e-10
ENTROPY_TOL = 1e-9


@dataclass(frozen=True)
class Hamiltonian:
    """Diagonal, non-degenerate Hamiltonian given by its ascending spectrum."""

    spectrum: tuple

    def __post_init__(self):
        spec = tuple(float(e) for e in self.spectrum)
        if len(spec) < 2:
            raise ValidationError("a Hamiltonian needs at least two levels")
        if not all(math.isfinite(e) for e in spec):
            raise ValidationError("spectrum must be finite")
        if any(b - a <= 0 for a, b in zip(spec, spec[1:])):
            raise ValidationError(f"spectrum must be strictly increasing, got {spec}")
        object.__setattr__(self, "spectrum", spec)

    @property
    def dim(self) -> int:
        return len(self.spectrum)

    @property
    def energies(self) -> np.ndarray:
        return np.array(self.spectrum)

    @property
    def matrix(self) -> np.ndarray:
        return np.diag(self.energies).astype(complex)

    @property
    def ground(self) -> float:
        return self.spectrum[0]

    @property
    def top(self) -> float:
        return self.spectrum[-1]

    def gap(self, i: int, j: int) -> float:
        """omega_ij = eps_i - eps_j."""
        return self.spectrum[i] - self.spectrum[j]

    def has_degenerate_gaps(self, rtol: float = 1e-12) -> bool:
        """True if two distinct ordered pairs i > j share the same gap."""
        gaps = sorted(self.gap(i, j) for i in range(self.dim) for j in range(i))
        scale = max(abs(self.top - self.ground), 1.0)
        return any(b - a <= rtol * scale for a, b in zip(gaps, gaps[1:]))

    def normalized(self) -> tuple["Hamiltonian", float]:
        """Affine rescaling onto [0, 1]; returns the new Hamiltonian and the scale."""
        scale = self.top - self.ground
        return Hamiltonian(tuple((e - self.ground) / scale for e in self.spectrum)), scale

    def tensor(self, other: "Hamiltonian") -> np.ndarray:
        """Spectrum of H1 (x) I + I (x) H2 in product-basis order (not sorted)."""
        return np.add.outer(self.energies, other.energies).ravel()


def validate_state(rho, dim: int | None = None) -> np.ndarray:
    """Check the density-matrix invariants and return the array."""
    m = as_matrix(rho)
    if m.shape[0] != m.shape[1]:
        raise ValidationError(f"state is not square: {m.shape}")
    if dim is not None and m.shape[0] != dim:
        raise ValidationError(f"state has dimension {m.shape[0]}, expected {dim}")
    herm = max_abs(m - m.conj().T)
    if herm >= STATE_HERM_TOL:
        raise ValidationError(f"state is not Hermitian (residual {herm:.3e})")
    tr = np.trace(m).real
    if abs(tr - 1.0) >= STATE_TRACE_TOL:
        raise ValidationError(f"state trace is {tr!r}, expected 1")
    lmin = eigvalsh_desc(0.5 * (m + m.conj().T))[-1]
    if lmin < -PSD_TOL:
        raise ValidationError(f"state is not positive semidefinite (min eigenvalue {lmin:.3e})")
    return m


def clean_state(rho: np.ndarray) -> np.ndarray:
    """Hermitize, clip negative eigenvalues to zero and renormalize."""
    m = 0.5 * (rho + rho.conj().T)
    w, v = np.linalg.eigh(m)
    if w.min() >= 0:
        return m / np.trace(m).real
    w = np.clip(w, 0.0, None)
    m = (v * w) @ v.conj().T
    return m / np.trace(m).real


def energy(rho: np.ndarray, h: Hamiltonian) -> float:
    return float(np.real(np.diagonal(rho)) @ h.energies)


def gibbs_populations(h: Hamiltonian, beta: float) -> np.ndarray:
    if math.isinf(beta):
        p = np.zeros(h.dim)
        p[0] = 1.0
        return p
    if beta < 0 or math.isnan(beta):
        raise DomainError(f"inverse temperature must be >= 0, got {beta}")
    w = np.exp(-beta * (h.energies - h.ground))
    return w / w.sum()


def gibbs_state(h: Hamiltonian, beta: float) -> np.ndarray:
    """Thermal state; ``beta = inf`` gives the ground projector."""
    return np.diag(gibbs_populations(h, beta)).astype(complex)


def dephase(rho: np.ndarray) -> np.ndarray:
    """Totally dephasing channel in the energy eigenbasis."""
    return np.diag(np.diagonal(rho)).astype(complex)


def passive_state(rho: np.ndarray, h: Hamiltonian) -> np.ndarray:
    lam = np.clip(eigvalsh_desc(rho), 0.0, None)
    return np.diag(lam / lam.sum()).astype(complex)


def _entropy_of_probs(p: np.ndarray) -> float:
    p = p[p > 0]
    return float(-np.sum(p * np.log(p)))


def von_neumann_entropy(rho: np.ndarray) -> float:
    """Entropy in nats, with 0 ln 0 = 0."""
    lam = np.clip(np.linalg.eigvalsh(rho), 0.0, None)
    return _entropy_of_probs(lam / lam.sum())


def gibbs_entropy(h: Hamiltonian, beta: float) -> float:
    return _entropy_of_probs(gibbs_populations(h, beta))


@dataclass(frozen=True)
class EntropicTemperature:
    """Inverse temperature of the passive thermal state with a given entropy."""

    beta: float

    @property
    def is_infinite(self) -> bool:
        return math.isinf(self.beta)


def solve_entropic_beta(h: Hamiltonian, target_entropy: float) -> EntropicTemperature:
    """Find beta* >= 0 with S(gibbs(h, beta*)) = target_entropy.

    Bracket [0, 1] is doubled until the entropy falls below the target, then
    bisected 200 times. Negative-temperature solutions are excluded.
    """
    smax = math.log(h.dim)
    if target_entropy < -ENTROPY_TOL or target_entropy > smax + ENTROPY_TOL:
        raise DomainError(f"target entropy {target_entropy} outside [0, ln {h.dim}]")
    if target_entropy >= smax - 1e-15:
        return EntropicTemperature(0.0)
    if target_entropy <= 0.0:
        return EntropicTemperature(math.inf)
    lo, hi = 0.0, 1.0
    while gibbs_entropy(h, hi) > target_entropy:
        lo, hi = hi, 2.0 * hi
        if hi > 1e300:
            return EntropicTemperature(math.inf)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if gibbs_entropy(h, mid) > target_entropy:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * hi:
            break
    return EntropicTemperature(0.5 * (lo + hi))


def random_state(d: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Random density matrix from the induced (Ginibre) measure."""
    k = d if rank is None else rank
    g = rng.standard_normal((d, k)) + 1j * rng.standard_normal((d, k))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def pure_state(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    psi = psi / np.linalg.norm(psi)
    return np.outer(psi, psi.conj())

