"""Generalized multilevel amplitude damping (GMAD) channels.

A GMAD on a ``d``-level system is fixed by an inverse temperature ``beta``
and unitary blocks ``u^(m)`` of size ``(m+1) x (m+1)`` for ``m = 1..d-1``.
Jump amplitudes are ``gamma^(m)_ij = u^(m)_ij r_mj`` with
``r_mj = Z^{-1/2} exp(-beta (eps_m - eps_j) / 2)`` and
``Z = 1 + sum_{m>j} exp(-beta (eps_m - eps_j))``.

``beta = math.inf`` is handled analytically (``r_mj = 0`` for ``m > j`` and
``Z = 1``), which reproduces the zero-temperature MAD channel exactly.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import ConstructionError, StructureError, ValidationError
from .linalg import as_matrix, dagger, max_abs, random_unitary
from .states import Hamiltonian, dephase, gibbs_state, random_state

log = logging.getLogger(__name__)

UNITARY_TOL = 1e-10
TP_TOL = 1e-10
CHOI_TOL = 1e-10
STRUCTURE_TOL = 1e-14
DETAILED_BALANCE_RTOL = 1e-9
DETAILED_BALANCE_FLOOR = 1e-14


@dataclass(frozen=True)
class KrausChannel:
    """A channel rho -> sum_k K_k rho K_k^dagger relative to a Hamiltonian.

    ``gmad_structured`` marks channels whose Kraus operators are each either
    diagonal or a single jump |i><j|; ``microreversible`` marks GMADs built
    from symmetric unitary blocks (detailed balance holds for those).
    """

    hamiltonian: Hamiltonian
    kraus: tuple
    gmad_structured: bool = False
    microreversible: bool = False
    beta: float | None = None

    def __post_init__(self):
        ops = tuple(np.asarray(k, dtype=complex) for k in self.kraus)
        d = self.hamiltonian.dim
        if not ops:
            raise ValidationError("a channel needs at least one Kraus operator")
        for k in ops:
            if k.shape != (d, d):
                raise ValidationError(f"Kraus operator shape {k.shape} does not match d={d}")
            k.setflags(write=False)
        object.__setattr__(self, "kraus", ops)

    @property
    def dim(self) -> int:
        return self.hamiltonian.dim

    def __len__(self) -> int:
        return len(self.kraus)

    @cached_property
    def superoperator(self) -> np.ndarray:
        """Matrix S with vec(Phi(rho)) = S vec(rho), row-major vec."""
        return sum(np.kron(k, k.conj()) for k in self.kraus)

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        d = self.dim
        return (self.superoperator @ np.asarray(rho).reshape(d * d)).reshape(d, d)

    def trace_residual(self) -> float:
        return max_abs(sum(dagger(k) @ k for k in self.kraus) - np.eye(self.dim))


@dataclass(frozen=True)
class GmadSpec:
    """Hamiltonian, inverse temperature and unitary blocks u^(1)..u^(d-1)."""

    hamiltonian: Hamiltonian
    beta: float
    unitaries: tuple
    allow_degenerate_gaps: bool = False

    def __post_init__(self):
        beta = float(self.beta)
        if math.isnan(beta) or beta < 0:
            raise ValidationError(f"beta must be >= 0 or inf, got {self.beta}")
        object.__setattr__(self, "beta", beta)
        d = self.hamiltonian.dim
        blocks = tuple(as_matrix(u) for u in self.unitaries)
        if len(blocks) != d - 1:
            raise ValidationError(f"expected {d - 1} unitary blocks for d={d}, got {len(blocks)}")
        for m, u in enumerate(blocks, start=1):
            if u.shape != (m + 1, m + 1):
                raise ValidationError(f"block u^({m}) must be {(m + 1, m + 1)}, got {u.shape}")
        object.__setattr__(self, "unitaries", blocks)

    @property
    def dim(self) -> int:
        return self.hamiltonian.dim

    def block(self, m: int) -> np.ndarray:
        """u^(m), with the convention u^(0) = (1)."""
        if m == 0:
            return np.ones((1, 1), dtype=complex)
        return self.unitaries[m - 1]

    def unitarity_residual(self) -> float:
        return max(max_abs(dagger(u) @ u - np.eye(len(u))) for u in self.unitaries)

    def is_symmetric(self, tol: float = 1e-12) -> bool:
        return all(max_abs(u - u.T) < tol for u in self.unitaries)


def thermal_weights(h: Hamiltonian, beta: float):
    """Return (Z, tau) with tau[m, j] = exp(-beta omega_mj) / Z for m >= j.

    ``tau[m, m] = 1/Z`` and entries with m < j are zero. ``r_mj = sqrt(tau[m, j])``.
    """
    d = h.dim
    boltz = np.zeros((d, d))
    for m in range(d):
        boltz[m, m] = 1.0
        for j in range(m):
            boltz[m, j] = 0.0 if math.isinf(beta) else math.exp(-beta * h.gap(m, j))
    z = 1.0 + sum(boltz[m, j] for m in range(d) for j in range(m))
    return z, boltz / z


def _check_spec(spec: GmadSpec, check_unitarity: bool = True):
    if spec.hamiltonian.has_degenerate_gaps() and not spec.allow_degenerate_gaps:
        raise ConstructionError(
            f"spectrum {spec.hamiltonian.spectrum} has degenerate energy gaps; "
            "pass allow_degenerate_gaps=True to build the channel anyway"
        )
    resid = spec.unitarity_residual()
    if check_unitarity and resid >= UNITARY_TOL:
        raise ConstructionError(f"unitary blocks are not unitary (residual {resid:.3e})")


def _unit(d: int, i: int, j: int) -> np.ndarray:
    e = np.zeros((d, d), dtype=complex)
    e[i, j] = 1.0
    return e


def build_gmad(spec: GmadSpec, check_unitarity: bool = True) -> KrausChannel:
    """Full (non-minimal) Kraus list of a GMAD in canonical order.

    Off-diagonal jumps sorted by (m, j, i), then diagonal operators K^(D)_ij
    sorted by (i, j), and K^(D)_00 last. ``check_unitarity=False`` builds the
    operators from non-unitary blocks anyway, so verification can report the
    resulting failures instead of refusing.
    """
    _check_spec(spec, check_unitarity)
    h, d = spec.hamiltonian, spec.dim
    z, tau = thermal_weights(h, spec.beta)
    r = np.sqrt(tau)
    ops = []
    for m in range(1, d):
        u = spec.block(m)
        for j in range(m + 1):
            for i in range(m + 1):
                if i != j:
                    ops.append(u[i, j] * r[m, j] * _unit(d, i, j))
    for i in range(1, d):
        for j in range(i):
            diag = np.ones(d, dtype=complex)
            diag[j] = spec.block(i)[j, j]
            ops.append(r[i, j] * np.diag(diag))
    ops.append(np.diag([spec.block(k)[k, k] for k in range(d)]) / math.sqrt(z))
    return KrausChannel(h, tuple(ops), gmad_structured=True,
                        microreversible=spec.is_symmetric(), beta=spec.beta)


@dataclass(frozen=True)
class QutritGmadParams:
    """Qutrit GMAD from the exchange-coupling model.

    s1 = sin(g10 t), sbar = sin(gbar t), alpha0 = g20 / gbar with
    gbar = sqrt(g20^2 + g21^2). Cosines are the non-negative roots.
    """

    s1: float
    sbar: float
    alpha0: float
    beta: float
    hamiltonian: Hamiltonian
    allow_degenerate_gaps: bool = False

    def __post_init__(self):
        for name in ("s1", "sbar", "alpha0"):
            v = float(getattr(self, name))
            if not -1.0 <= v <= 1.0:
                raise ValidationError(f"{name} must lie in [-1, 1], got {v}")
            object.__setattr__(self, name, v)
        if self.hamiltonian.dim != 3:
            raise ValidationError("qutrit parametrization needs a 3-level Hamiltonian")
        beta = float(self.beta)
        if math.isnan(beta) or beta < 0:
            raise ValidationError(f"beta must be >= 0 or inf, got {self.beta}")
        object.__setattr__(self, "beta", beta)

    @classmethod
    def from_couplings(cls, g10, g21, g20, beta, hamiltonian, t=1.0, **kw):
        gbar = math.hypot(g20, g21)
        alpha0 = g20 / gbar if gbar > 0 else 1.0
        return cls(math.sin(g10 * t), math.sin(gbar * t), alpha0, beta, hamiltonian, **kw)

    @property
    def c1(self) -> float:
        return math.sqrt(max(0.0, 1.0 - self.s1 ** 2))

    @property
    def cbar(self) -> float:
        return math.sqrt(max(0.0, 1.0 - self.sbar ** 2))

    @property
    def alpha1(self) -> float:
        return math.sqrt(max(0.0, 1.0 - self.alpha0 ** 2))

    def unitary_blocks(self):
        """u^(1) = c1 I - i s1 sigma_x and u^(2) = exp(-i t H~) written in (s, c, alpha)."""
        c1, s1, cb, sb = self.c1, self.s1, self.cbar, self.sbar
        a0, a1 = self.alpha0, self.alpha1
        u1 = np.array([[c1, -1j * s1], [-1j * s1, c1]])
        u2 = np.array([
            [1 + a0 ** 2 * (cb - 1), a0 * a1 * (cb - 1), -1j * a0 * sb],
            [a0 * a1 * (cb - 1), 1 + a1 ** 2 * (cb - 1), -1j * a1 * sb],
            [-1j * a0 * sb, -1j * a1 * sb, cb],
        ])
        return u1, u2

    def to_spec(self) -> GmadSpec:
        return GmadSpec(self.hamiltonian, self.beta, self.unitary_blocks(),
                        allow_degenerate_gaps=self.allow_degenerate_gaps)

    def mad_rates(self):
        """(gamma1', gamma2', gamma3') of the zero-temperature limit: 1->0, 2->1, 2->0."""
        return self.s1 ** 2, self.alpha1 ** 2 * self.sbar ** 2, self.alpha0 ** 2 * self.sbar ** 2


def build_qutrit_gmad(params: QutritGmadParams) -> KrausChannel:
    """The twelve qutrit Kraus operators written out explicitly.

    K^(2)_10 carries r21 (not r20) so that the list agrees with the general
    construction and is trace preserving.
    """
    h = params.hamiltonian
    if h.dim != 3:
        raise ValidationError("build_qutrit_gmad needs d = 3")
    _check_spec(params.to_spec())
    z, tau = thermal_weights(h, params.beta)
    r00, r10, r20, r21 = 1 / math.sqrt(z), math.sqrt(tau[1, 0]), math.sqrt(tau[2, 0]), math.sqrt(tau[2, 1])
    c1, s1, cb, sb = params.c1, params.s1, params.cbar, params.sbar
    a0, a1 = params.alpha0, params.alpha1
    e = lambda i, j: _unit(3, i, j)  # noqa: E731

    k10_1 = -1j * r00 * s1 * e(0, 1)
    k21_2 = -1j * r00 * sb * a1 * e(1, 2)
    k20_2 = -1j * r00 * sb * a0 * e(0, 2)
    k10_2 = r21 * (cb - 1) * a0 * a1 * e(0, 1)
    k01_1 = -1j * r10 * s1 * e(1, 0)
    k12_2 = -1j * r21 * sb * a1 * e(2, 1)
    k02_2 = -1j * r20 * sb * a0 * e(2, 0)
    k01_2 = r20 * (cb - 1) * a0 * a1 * e(1, 0)

    ops = (
        # off-diagonal, (m, j, i) order
        k01_1, k10_1,
        k01_2, k02_2, k10_2, k12_2, k20_2, k21_2,
        # diagonal
        r10 * np.diag([c1, 1, 1]).astype(complex),
        r20 * np.diag([a1 ** 2 + a0 ** 2 * cb, 1, 1]).astype(complex),
        r21 * np.diag([1, a0 ** 2 + a1 ** 2 * cb, 1]).astype(complex),
        r00 * np.diag([1, c1, cb]).astype(complex),
    )
    return KrausChannel(h, ops, gmad_structured=True, microreversible=True, beta=params.beta)


def qutrit_mad_channel(h: Hamiltonian, gamma1: float, gamma2: float, gamma3: float) -> KrausChannel:
    """Zero-temperature qutrit MAD with decay probabilities 1->0, 2->1, 2->0."""
    if min(gamma1, gamma2, gamma3) < 0 or gamma1 > 1 or gamma2 + gamma3 > 1 + 1e-15:
        raise ValidationError("MAD rates must satisfy 0 <= gamma1 <= 1, gamma2 + gamma3 <= 1")
    ops = (
        np.diag([1, math.sqrt(1 - gamma1), math.sqrt(max(0.0, 1 - gamma2 - gamma3))]).astype(complex),
        math.sqrt(gamma1) * _unit(3, 0, 1),
        math.sqrt(gamma2) * _unit(3, 1, 2),
        math.sqrt(gamma3) * _unit(3, 0, 2),
    )
    return KrausChannel(h, ops, gmad_structured=True, beta=math.inf)


def identity_channel(h: Hamiltonian) -> KrausChannel:
    return KrausChannel(h, (np.eye(h.dim, dtype=complex),), gmad_structured=True, microreversible=True)


def dephasing_channel(h: Hamiltonian) -> KrausChannel:
    return KrausChannel(h, tuple(_unit(h.dim, j, j) for j in range(h.dim)), gmad_structured=True)


def ground_reset_channel(h: Hamiltonian) -> KrausChannel:
    """Every input is sent to the ground state."""
    return KrausChannel(h, tuple(_unit(h.dim, 0, j) for j in range(h.dim)), gmad_structured=True,
                        beta=math.inf)


def apply_channel(ch: KrausChannel, rho) -> np.ndarray:
    rho = as_matrix(rho)
    if rho.shape != (ch.dim, ch.dim):
        raise ValidationError(f"state shape {rho.shape} does not match channel dimension {ch.dim}")
    return sum(k @ rho @ dagger(k) for k in ch.kraus)


def apply_direct(spec: GmadSpec, rho) -> np.ndarray:
    """GMAD output assembled entrywise, without building Kraus operators.

    Phi(|p><q|) = delta_pq sum_{m >= max(1,p)} sum_{i != p, i <= m} |gamma^(m)_ip|^2 |i><i|
                  + alpha_pq |p><q|
    where alpha_pq collects the diagonal Kraus operators.
    """
    _check_spec(spec)
    rho = as_matrix(rho)
    d = spec.dim
    if rho.shape != (d, d):
        raise ValidationError(f"state shape {rho.shape} does not match d={d}")
    z, tau = thermal_weights(spec.hamiltonian, spec.beta)
    diag_u = np.array([spec.block(k)[k, k] for k in range(d)])

    alpha = np.outer(diag_u, diag_u.conj()) / z
    for l in range(1, d):
        for j in range(l):
            ujj = spec.block(l)[j, j]
            f = np.ones(d, dtype=complex)
            f[j] = ujj
            alpha += tau[l, j] * np.outer(f, f.conj())

    out = alpha * rho
    pops = np.real(np.diagonal(rho))
    for p in range(d):
        for m in range(max(1, p), d):
            u = spec.block(m)
            for i in range(m + 1):
                if i != p:
                    out[i, i] += abs(u[i, p]) ** 2 * tau[m, p] * pops[p]
    return out


def iterate_channel(ch: KrausChannel, rho, n: int) -> list:
    """[Phi(rho), Phi^2(rho), ..., Phi^n(rho)]."""
    if n < 1:
        raise ValidationError("number of iterations must be >= 1")
    out, cur = [], as_matrix(rho)
    for _ in range(n):
        cur = apply_channel(ch, cur)
        out.append(cur)
    return out


def choi_matrix(ch: KrausChannel) -> np.ndarray:
    """(Phi (x) id)(|Omega><Omega|) with unnormalized |Omega> = sum_j |jj>."""
    vecs = np.array([k.reshape(-1) for k in ch.kraus])
    return vecs.T @ vecs.conj()


def choi_distance(a: KrausChannel, b: KrausChannel) -> float:
    return max_abs(choi_matrix(a) - choi_matrix(b))


def transition_matrix(ch: KrausChannel) -> np.ndarray:
    """P[i, j] = <i| Phi(|j><j|) |i>, the probability of the jump j -> i."""
    d = ch.dim
    s = ch.superoperator
    idx = np.arange(d) * (d + 1)
    return np.real(s[np.ix_(idx, idx)])


def coherence_multipliers(ch: KrausChannel) -> np.ndarray:
    """zeta[i, j] = <i| Phi(|i><j|) |j>; for strictly incoherent maps
    Phi(rho)_ij = zeta_ij rho_ij off the diagonal."""
    d = ch.dim
    idx = np.arange(d * d)
    zeta = ch.superoperator[idx, idx].reshape(d, d)
    np.fill_diagonal(zeta, 1.0)
    return zeta


def _split_structure(ch: KrausChannel):
    d = ch.dim
    diagonals, jumps = [], {}
    scale = max(1.0, max(max_abs(k) for k in ch.kraus))
    for k in ch.kraus:
        mask = np.abs(k) > STRUCTURE_TOL * scale
        off = mask & ~np.eye(d, dtype=bool)
        if not off.any():
            diagonals.append(np.diagonal(k).copy())
        elif off.sum() == 1 and not (mask & np.eye(d, dtype=bool)).any():
            i, j = map(int, np.argwhere(off)[0])
            jumps[(i, j)] = jumps.get((i, j), 0.0) + abs(k[i, j]) ** 2
        else:
            raise StructureError("Kraus operator is neither diagonal nor a single jump |i><j|")
    return diagonals, jumps


def minimal_kraus(ch: KrausChannel, rtol: float = 1e-14) -> KrausChannel:
    """Merge jumps with the same (i, j) and diagonalize the diagonal part.

    Jumps: one operator sqrt(eta_ij) |i><j| per pair, eta_ij = sum |gamma_ij|^2.
    Diagonal part: Q = sum_s c_s c_s^dagger over the diagonal vectors c_s;
    each eigenpair (D_r, V_r) of Q gives sqrt(D_r) diag(V_r).
    Zero-weight operators are dropped.
    """
    d = ch.dim
    diagonals, jumps = _split_structure(ch)
    ops = []
    for (i, j), eta in sorted(jumps.items(), key=lambda kv: (kv[0][1], kv[0][0])):
        if eta > 0:
            ops.append(math.sqrt(eta) * _unit(d, i, j))
    if diagonals:
        c = np.array(diagonals).T
        q = c @ c.conj().T
        w, v = np.linalg.eigh(q)
        keep = w > rtol * max(w.max(), 1.0)
        for r in np.flatnonzero(keep)[::-1]:
            ops.append(math.sqrt(w[r]) * np.diag(v[:, r]))
    return KrausChannel(ch.hamiltonian, tuple(ops), gmad_structured=True,
                        microreversible=ch.microreversible, beta=ch.beta)


@dataclass
class ChannelReport:
    """Residuals of the structural checks; ``None`` residual means not applicable."""

    trace_residual: float
    choi_min_eigenvalue: float
    gibbs_residual: float | None
    incoherence_residual: float
    detailed_balance_residual: float | None
    beta: float | None
    n_samples: int
    checks: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def to_dict(self) -> dict:
        beta = self.beta
        return {
            "passed": self.passed,
            "checks": dict(self.checks),
            "residuals": {
                "trace_preservation": self.trace_residual,
                "choi_min_eigenvalue": self.choi_min_eigenvalue,
                "gibbs_fixed_point": self.gibbs_residual,
                "strict_incoherence": self.incoherence_residual,
                "detailed_balance": self.detailed_balance_residual,
            },
            "beta": "inf" if beta is not None and math.isinf(beta) else beta,
            "n_samples": self.n_samples,
        }


def detailed_balance_residual(ch: KrausChannel, beta: float) -> float:
    """Largest relative violation of P(j->i) = exp(-beta omega_ij) P(i->j)."""
    h, p = ch.hamiltonian, transition_matrix(ch)
    worst = 0.0
    for i in range(ch.dim):
        for j in range(i):
            up, down = p[i, j], p[j, i]
            if up < DETAILED_BALANCE_FLOOR and down < DETAILED_BALANCE_FLOOR:
                continue
            expected = 0.0 if math.isinf(beta) else math.exp(-beta * h.gap(i, j)) * down
            worst = max(worst, abs(up - expected) / max(up, expected, DETAILED_BALANCE_FLOOR))
    return worst


def verify_channel(ch: KrausChannel, beta: float | None = None, n_samples: int = 20,
                   seed: int = 0) -> ChannelReport:
    """Run the structural checks on a channel and collect residuals.

    Detailed balance is only checked for channels flagged microreversible.
    """
    if beta is None:
        beta = ch.beta
    d = ch.dim
    rng = np.random.default_rng(seed)
    tp = ch.trace_residual()
    choi_min = float(np.linalg.eigvalsh(choi_matrix(ch)).min())
    gibbs_res = None
    if beta is not None:
        g = gibbs_state(ch.hamiltonian, beta)
        gibbs_res = max_abs(apply_channel(ch, g) - g)
    inc = 0.0
    for _ in range(n_samples):
        rho = random_state(d, rng)
        inc = max(inc, max_abs(dephase(apply_channel(ch, rho)) - apply_channel(ch, dephase(rho))))
    db = None
    if ch.microreversible and beta is not None:
        db = detailed_balance_residual(ch, beta)
    checks = {
        "trace_preservation": bool(tp < TP_TOL),
        "complete_positivity": bool(choi_min > -CHOI_TOL),
        "strict_incoherence": bool(inc < TP_TOL),
    }
    if gibbs_res is not None:
        checks["gibbs_fixed_point"] = bool(gibbs_res < TP_TOL)
    if db is not None:
        checks["detailed_balance"] = bool(db < DETAILED_BALANCE_RTOL)
    return ChannelReport(float(tp), choi_min, gibbs_res, float(inc), db, beta, n_samples, checks)


def random_symmetric_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    w = random_unitary(d, rng)
    return w @ w.T


def random_spectrum(d: int, rng: np.random.Generator, min_gap_separation: float = 1e-3) -> tuple:
    """Random increasing spectrum on [0, 1] with pairwise distinct gaps."""
    while True:
        inner = np.sort(rng.uniform(0.05, 0.95, size=d - 2))
        spec = np.concatenate([[0.0], inner, [1.0]])
        if np.min(np.diff(spec)) < 0.02:
            continue
        gaps = np.sort([spec[i] - spec[j] for i in range(d) for j in range(i)])
        if len(gaps) < 2 or np.min(np.diff(gaps)) > min_gap_separation:
            return tuple(spec)


def random_gmad_spec(d: int, beta: float, rng: np.random.Generator,
                     symmetric: bool = False) -> GmadSpec:
    h = Hamiltonian(random_spectrum(d, rng))
    make = random_symmetric_unitary if symmetric else random_unitary
    return GmadSpec(h, beta, tuple(make(m + 1, rng) for m in range(1, d)))

