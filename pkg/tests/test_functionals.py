import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import QUTRIT_H, qutrit
from gmadlab.errors import DomainError, ValidationError
from gmadlab.ergotropy import ergotropy
from gmadlab.functionals import (
    Constraint,
    EnergyCurve,
    FunctionalKind,
    MefQuery,
    OptimizerConfig,
    ball_mef,
    capacitance_grid,
    chi_capacitance,
    concave_envelope,
    mawer,
    mawer_from_chi,
    normalized_ball_curve,
    optimize_pure_on_shell,
    shell_mef,
    shell_values,
    shell_vertices,
    sweep_curve,
    upper_concave_hull,
)
from gmadlab.gmad import KrausChannel, dephasing_channel, ground_reset_channel, identity_channel
from gmadlab.linalg import random_unitary
from gmadlab.states import Hamiltonian, pure_state

FAST = OptimizerConfig(n_starts=16)


def grid_search_ergotropy(ch, e, n=200, refine=41):
    """Exhaustive search over (p1, phase1, phase2) on the qutrit shell, then a
    finer grid around the best cell. Spectrum must start at 0."""
    eps = ch.hamiltonian.energies
    s = ch.superoperator

    def evaluate(p1, ph1, ph2):
        p1, ph1, ph2 = np.broadcast_arrays(p1, ph1, ph2)
        p2 = (e - eps[1] * p1) / eps[2]
        p0 = 1 - p1 - p2
        ok = (p0 >= -1e-15) & (p2 >= -1e-15) & (p1 >= 0)
        amp = np.sqrt(np.clip(np.stack([p0, p1, p2], -1), 0, None))
        psi = amp * np.exp(1j * np.stack([np.zeros_like(ph1), ph1, ph2], -1))
        rho = np.einsum("...i,...j->...ij", psi, psi.conj()).reshape(*psi.shape[:-1], 9)
        out = np.einsum("kl,...l->...k", s, rho).reshape(*psi.shape[:-1], 3, 3)
        lam = np.linalg.eigvalsh(out)[..., ::-1]
        pops = np.real(np.einsum("...ii->...i", out))
        val = pops @ eps - lam @ np.sort(eps)
        return np.where(ok, val, -np.inf)

    # p2 >= 0 and p0 >= 0 bound p1 from above
    p1_min, p1_max = 0.0, min(1.0, e / eps[1], (eps[2] - e) / (eps[2] - eps[1]))
    p1 = np.linspace(p1_min, p1_max, n)
    ph = np.linspace(0, 2 * np.pi, n, endpoint=False)
    v = evaluate(p1[:, None, None], ph[None, :, None], ph[None, None, :])
    i, j, k = np.unravel_index(np.argmax(v), v.shape)
    dp, dph = (p1[1] - p1[0]) if n > 1 else 0.0, ph[1] - ph[0]
    fp = np.clip(np.linspace(p1[i] - dp, p1[i] + dp, refine), p1_min, p1_max)
    f1 = np.linspace(ph[j] - dph, ph[j] + dph, refine)
    f2 = np.linspace(ph[k] - dph, ph[k] + dph, refine)
    w = evaluate(fp[:, None, None], f1[None, :, None], f2[None, None, :])
    return float(max(v.max(), w.max()))


def concavity_defect(x, y):
    """Largest amount by which an interior point falls below its neighbours' chord."""
    t = (x[1:-1] - x[:-2]) / (x[2:] - x[:-2])
    chord = (1 - t) * y[:-2] + t * y[2:]
    return float(np.max(chord - y[1:-1], initial=0.0))


def chord_envelope(x, y):
    """sup over pairs of grid points of the chord value at each x."""
    out = y.copy()
    for a in range(len(x)):
        for b in range(a + 1, len(x)):
            t = (x - x[a]) / (x[b] - x[a])
            inside = (t >= 0) & (t <= 1)
            out = np.where(inside, np.maximum(out, (1 - t) * y[a] + t * y[b]), out)
    return out


# --- shell optimization -------------------------------------------------------

@pytest.mark.parametrize("e", [0.2, 0.5, 0.85])
def test_shell_optimum_matches_grid_search(e):
    ch = qutrit(0.5, 0.745, 0.745, 1.0)
    opt = optimize_pure_on_shell(ch, e, "ergotropy", OptimizerConfig())
    oracle = grid_search_ergotropy(ch, e)
    assert opt.value >= oracle - 1e-9
    assert opt.value == pytest.approx(oracle, abs=1e-4)


def test_reported_state_is_feasible_and_reproduces_value():
    ch = qutrit(0.5, 0.745, 0.745, 1.0)
    opt = optimize_pure_on_shell(ch, 0.6, "ergotropy", FAST)
    rho = np.outer(opt.psi, opt.psi.conj())
    assert abs(np.vdot(opt.psi, opt.psi) - 1) < 1e-12
    assert abs(np.real(np.diagonal(rho)) @ QUTRIT_H.energies - 0.6) < 1e-10
    assert opt.energy_residual < 1e-10
    assert ergotropy(ch(rho), QUTRIT_H) == pytest.approx(opt.value, abs=FAST.value_tol)
    assert opt.converged


def test_identity_channel_extracts_everything():
    h2 = Hamiltonian((0.0, 1.0))
    opt = optimize_pure_on_shell(identity_channel(h2), 0.3, "ergotropy", FAST)
    assert opt.value == pytest.approx(0.3, abs=1e-12)
    np.testing.assert_allclose(np.abs(opt.psi) ** 2, [0.7, 0.3], atol=1e-12)
    curve = sweep_curve(MefQuery(identity_channel(QUTRIT_H)), 11, FAST)
    np.testing.assert_allclose(curve.values, curve.epsilon - QUTRIT_H.ground, atol=1e-12)


def test_shell_is_a_point_at_ground_energy():
    ch = qutrit(0.5, 0.99, 0.99, 1.0)
    ground = pure_state([1, 0, 0])
    for kind, f in [("ergotropy", ergotropy)]:
        assert shell_mef(MefQuery(ch, kind, "shell", 0.0), FAST) == pytest.approx(f(ch(ground), QUTRIT_H))


def test_shell_vertices():
    v = shell_vertices(QUTRIT_H, 0.9)
    np.testing.assert_allclose(v @ QUTRIT_H.energies, 0.9)
    np.testing.assert_allclose(v.sum(axis=1), 1.0)
    assert len(v) == 2
    assert len(shell_vertices(QUTRIT_H, 0.0)) == 1


def test_energy_outside_spectrum_rejected():
    ch = qutrit(0.5, 0.745, 0.745, 1.0)
    with pytest.raises(DomainError):
        optimize_pure_on_shell(ch, 1.2)
    with pytest.raises(DomainError):
        shell_mef(MefQuery(ch, "ergotropy", "shell", -0.1))


def test_coherent_requires_gmad_structure():
    rng = np.random.default_rng(3)
    u = random_unitary(3, rng)
    ch = KrausChannel(QUTRIT_H, (u,))
    with pytest.raises(ValidationError):
        optimize_pure_on_shell(ch, 0.5, "coherent", FAST)
    v = optimize_pure_on_shell(ch, 0.5, "coherent", FAST, allow_non_gmad_coherent=True).value
    assert v >= 0


@pytest.mark.parametrize("beta", [0.1, 1.0, 10.0, math.inf])
def test_coherent_vanishes_at_spectrum_ends(beta):
    for params in [(0.5, 0.745, 0.745), (0.5, 0.99, 0.99), (0.01, 0.99, 0.745)]:
        ch = qutrit(*params, beta)
        for e in (QUTRIT_H.ground, QUTRIT_H.top):
            assert shell_mef(MefQuery(ch, "coherent", "shell", e), FAST) < 1e-8


def test_energy_activation():
    ch = qutrit(0.5, 0.99, 0.99, 1.0)
    assert shell_mef(MefQuery(ch, "ergotropy", "shell", 0.0), FAST) > 1e-3


def test_near_identity_channel_tracks_input_energy():
    # caption-level claim "almost coincides with the input energy", read as >= 0.95 E
    es = np.linspace(0, 1, 11)
    for beta in (0.1, 1.0, 10.0, math.inf):
        vals = shell_values(qutrit(0.99, 0.255, 0.5, beta), es, "ergotropy", FAST)
        assert np.all(vals >= 0.95 * es - 1e-12), (beta, vals / np.maximum(es, 1e-12))


def test_kind_decomposition_bounds():
    ch = qutrit(0.5, 0.745, 0.745, 1.0)
    es = np.linspace(0, 1, 9)
    erg = shell_values(ch, es, "ergotropy", FAST)
    inc = shell_values(ch, es, "incoherent", FAST)
    coh = shell_values(ch, es, "coherent", FAST)
    tot = shell_values(ch, es, "total", FAST)
    assert np.all(erg >= inc - 1e-9)
    assert np.all(coh >= erg - inc - 1e-6)
    assert np.all(tot >= erg - 1e-9)


# --- ball and sweeps ------------------------------------------------------------

def test_ball_is_running_max_of_shell():
    ch = qutrit(0.5, 0.99, 0.99, 1.0)
    q = MefQuery(ch, "incoherent", "shell")
    shell = sweep_curve(q, 21, FAST)
    ball = sweep_curve(MefQuery(ch, "incoherent", "ball"), 21, FAST)
    np.testing.assert_array_equal(ball.values, np.maximum.accumulate(shell.values))
    assert np.all(np.diff(ball.values) >= 0)
    assert np.all(ball.values >= shell.values)


def test_ball_mef_single_energy():
    ch = qutrit(0.5, 0.99, 0.99, 1.0)
    shell = sweep_curve(MefQuery(ch, "incoherent", "shell"), 41, FAST)
    e = 0.7
    running = np.maximum.accumulate(shell.values)[np.searchsorted(shell.epsilon, e)]
    b = ball_mef(MefQuery(ch, "incoherent", "ball", e), FAST)
    assert b >= running - 1e-6
    assert b == pytest.approx(running, abs=5e-3)
    assert ball_mef(MefQuery(ch, "ergotropy", "ball", 0.0), FAST) == pytest.approx(
        shell_mef(MefQuery(ch, "ergotropy", "shell", 0.0), FAST))
    with pytest.raises(ValidationError):
        ball_mef(MefQuery(ch, "ergotropy", "shell", 0.3))


def test_identity_ball():
    ch = identity_channel(QUTRIT_H)
    for e in (0.0, 0.3, 1.0):
        assert ball_mef(MefQuery(ch, "ergotropy", "ball", e), FAST) == pytest.approx(e, abs=1e-9)


def test_sweep_is_deterministic():
    ch = qutrit(0.5, 0.745, 0.745, 1.0)
    a = sweep_curve(MefQuery(ch), 7, FAST)
    b = sweep_curve(MefQuery(ch), 7, FAST)
    np.testing.assert_array_equal(a.values, b.values)


def test_parallel_matches_serial():
    ch = qutrit(0.5, 0.745, 0.745, 1.0)
    es = np.linspace(0, 1, 6)
    np.testing.assert_array_equal(shell_values(ch, es, "ergotropy", FAST, workers=2),
                                  shell_values(ch, es, "ergotropy", FAST))


def test_config_validation():
    with pytest.raises(ValidationError):
        OptimizerConfig(n_starts=0)
    with pytest.raises(ValidationError):
        OptimizerConfig(step_tol=0)
    with pytest.raises(ValidationError):
        MefQuery(identity_channel(QUTRIT_H), n_cells=2)
    with pytest.raises(ValidationError):
        EnergyCurve([0, 0.5, 0.5], [0, 1, 2], "ergotropy", "shell")
    with pytest.raises(ValidationError):
        sweep_curve(MefQuery(identity_channel(QUTRIT_H)), 1)


# --- envelopes --------------------------------------------------------------------

def _curve(x, y):
    return EnergyCurve(np.asarray(x, float), np.asarray(y, float), FunctionalKind.ERGOTROPY,
                       Constraint.BALL)


def test_envelope_of_linear_and_concave_curves():
    x = np.linspace(0, 1, 51)
    np.testing.assert_allclose(concave_envelope(_curve(x, 2 * x + 1)).values, 2 * x + 1, atol=1e-12)
    y = np.sqrt(x)
    np.testing.assert_allclose(concave_envelope(_curve(x, y)).values, y, atol=1e-12)


def test_envelope_of_w_curve_matches_chord_oracle():
    x = np.linspace(0, 1, 41)
    y = np.abs(np.sin(3 * np.pi * x)) * (1 - 0.3 * x)
    env = concave_envelope(_curve(x, y)).values
    np.testing.assert_allclose(env, chord_envelope(x, y), atol=1e-12)


def test_hull_vertices_are_curve_points():
    x = np.linspace(0, 1, 11)
    y = np.array([0, 1, 0, 0, 2, 0, 0, 0, 1, 0, 0.5])
    hx, hy = upper_concave_hull(x, y)
    for a, b in zip(hx, hy):
        assert b == y[np.argmin(np.abs(x - a))]


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=2, max_size=30))
def test_envelope_properties(ys):
    y = np.array(ys)
    x = np.linspace(0, 1, len(y))
    env = concave_envelope(_curve(x, y)).values
    assert np.all(env >= y - 1e-15)
    assert np.all(np.diff(env, 2) <= 1e-12)
    np.testing.assert_allclose(env, chord_envelope(x, y), atol=1e-12)


# --- capacitance and MAWER ------------------------------------------------------------

def test_identity_capacitance_and_mawer():
    ch = identity_channel(QUTRIT_H)
    chi = chi_capacitance(ch, 21, FAST)
    np.testing.assert_allclose(chi.values, chi.epsilon, atol=1e-12)
    est = mawer_from_chi(chi)
    assert not est.activated
    assert est.value == pytest.approx(1.0, abs=1e-12)


def test_reset_channel_mawer_against_direct_small_energy_shell():
    ch = ground_reset_channel(QUTRIT_H)
    assert mawer(ch, FAST, grid_size=11) == pytest.approx(0.0, abs=1e-12)
    direct = optimize_pure_on_shell(ch, 2.5e-3, "ergotropy", FAST).value / 2.5e-3
    assert direct == pytest.approx(0.0, abs=1e-9)


def test_dephasing_capacitance_mixes_energy_extremes():
    # small-energy shells only reach 0.2 eps, but mixing eps = 0 with the
    # top level (which survives dephasing untouched) gives chi(eps) = eps
    ch = dephasing_channel(QUTRIT_H)
    direct = optimize_pure_on_shell(ch, 2.5e-3, "ergotropy", FAST).value / 2.5e-3
    assert direct == pytest.approx(0.2, abs=1e-9)
    chi = chi_capacitance(ch, 11, FAST)
    np.testing.assert_allclose(chi.values, chi.epsilon, atol=1e-12)
    assert mawer_from_chi(chi).value == pytest.approx(1.0, abs=1e-12)


def test_activated_channel_reports_infinite_ratio():
    ch = qutrit(0.5, 0.99, 0.99, 1.0)
    est = mawer_from_chi(chi_capacitance(ch, 6, FAST))
    assert est.activated and math.isinf(est.value)


def test_capacitance_structure():
    for ch in (qutrit(0.5, 0.745, 0.745, 1.0), qutrit(0.5, 0.99, 0.99, 10.0),
               qutrit(0.01, 0.99, 0.745, math.inf)):
        ball = normalized_ball_curve(ch, "ergotropy", capacitance_grid(21), FAST)
        chi = chi_capacitance(ch, cfg=FAST, ball_curve=ball)
        assert concavity_defect(chi.epsilon, chi.values) <= 1e-10
        assert np.all(np.diff(chi.values) >= 0)
        assert np.all(chi.values >= ball.values)


def test_capacitance_grid_contains_richardson_points():
    g = capacitance_grid(201)
    for e in (1e-2, 5e-3, 2.5e-3):
        assert np.any(g == e)
    assert g[0] == 0.0 and g[-1] == 1.0 and np.all(np.diff(g) > 0)


def test_unnormalized_spectrum_is_rescaled():
    h = Hamiltonian((1.0, 2.6, 3.0))
    chi = chi_capacitance(identity_channel(h), 11, FAST)
    np.testing.assert_allclose(chi.values, chi.epsilon, atol=1e-12)
