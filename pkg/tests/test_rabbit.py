import math

import numpy as np
import pytest

from moldelays.constants import AU_TIME_TO_AS, omega0_from_wavelength_nm
from moldelays.model import MoleculeModel, default_ground_grid, ground_state
from moldelays.pt2 import pt2_sideband_phase
from moldelays.rabbit import (RabbitFit, RabbitSpectrogram, fit_pattern,
                              fit_spectrogram, harmonic_orders, ladder_scale,
                              make_pulses, molecular_delay, sideband_energy,
                              stereo_molecular, tau_samples, wrap_phase)
from moldelays.tdse import PulseSet, vector_potential

W800 = omega0_from_wavelength_nm(800.0)


def test_ladder_scale():
    assert [ladder_scale(l) for l in (800, 1600, 3200, 6400, 12800)] == [1, 2, 4, 8, 16]
    with pytest.raises(ValueError):
        ladder_scale(1000.0)


def test_harmonic_orders_800_and_ladder():
    assert harmonic_orders(800.0) == (21, 23, 25, 27, 29)
    assert harmonic_orders(1600.0) == (43, 45, 47, 49, 51, 53, 55, 57)
    orders_3200 = harmonic_orders(3200.0)
    assert all(o % 2 == 1 for o in orders_3200)
    assert 91 not in orders_3200  # only flanking pairs are driven


def test_sideband_energy_ladder_invariant():
    e_i = 1.094
    eps = sideband_energy(22, W800, e_i)
    # same physical energy regardless of wavelength by construction
    for lam in (800.0, 1600.0, 12800.0):
        scale = ladder_scale(lam)
        w0 = omega0_from_wavelength_nm(lam)
        assert 22 * scale * w0 - e_i == pytest.approx(eps, rel=1e-12)


def test_omega0_numeric_value():
    # 800 nm fundamental: ~1.55 eV
    assert W800 * 27.211386 == pytest.approx(1.5498, abs=2e-3)


def test_make_pulses_amplitudes():
    p = make_pulses(800.0)
    assert p.harmonic_orders == (21, 23, 25, 27, 29)
    e0 = math.sqrt(1e10 / 3.50944758e16)
    assert p.a0_ir == pytest.approx(e0 / W800, rel=1e-12)
    assert p.a0_harmonics[0] == pytest.approx(e0 / (21 * W800), rel=1e-12)
    # IR dressing parameter held fixed along the ladder: A0 proportional to 1/lambda
    p2 = make_pulses(6400.0)
    assert p2.a0_ir == pytest.approx(p.a0_ir / 8.0, rel=1e-12)


def test_vector_potential_supports_and_midpoint():
    T = 100.0
    p = PulseSet(omega0=0.057, harmonic_orders=(), a0_ir=0.01, a0_harmonics=(),
                 duration=T)
    assert vector_potential(p, -1.0) == 0.0
    assert vector_potential(p, T + 1.0) == 0.0
    assert abs(vector_potential(p, T / 2.0)) == pytest.approx(0.01, rel=1e-12)


def test_vector_potential_comb_spectrum():
    """Fourier peaks of the comb land on the harmonic frequencies with the
    bandwidth of the 40 fs sin^2 envelope."""
    p = make_pulses(800.0, xuv_intensity_w_cm2=1e10).without_ir()
    dt = 0.2
    t = np.arange(0.0, p.duration + dt, dt)
    a = np.array([vector_potential(p, ti) for ti in t])
    freq = 2 * math.pi * np.fft.rfftfreq(8 * len(t), dt)
    spec = np.abs(np.fft.rfft(a, 8 * len(t))) ** 2
    for order in (21, 23, 25, 27, 29):
        sel = np.abs(freq - order * W800) < 0.5 * W800
        peak = freq[sel][np.argmax(spec[sel])]
        assert peak == pytest.approx(order * W800, abs=2.0 * math.pi / p.duration)
        # FWHM of the sin^2 spectral intensity ~ 1.44 * 2 pi / T
        half = spec[sel].max() / 2.0
        width = freq[sel][spec[sel] > half]
        fwhm = width.max() - width.min()
        assert fwhm == pytest.approx(1.44 * 2.0 * math.pi / p.duration, rel=0.15)


def test_fit_pattern_exact_recovery():
    taus = np.linspace(0.0, 2.0 * math.pi / (2 * W800), 16, endpoint=False)
    s = 1.0 + 0.3 * np.cos(2 * W800 * taus - 0.5)
    p, q, th, rel = fit_pattern(taus, s, W800)
    assert p == pytest.approx(1.0, abs=1e-12)
    assert q == pytest.approx(0.3, abs=1e-12)
    assert th == pytest.approx(0.5, abs=1e-12)
    assert rel < 1e-12


def test_fit_pattern_with_noise(rng):
    taus = np.linspace(0.0, 2.0 * math.pi / W800, 16, endpoint=False)
    errs = []
    for _ in range(200):
        s = 1.0 + 0.3 * np.cos(2 * W800 * taus - 0.5) + rng.normal(0, 0.01, taus.size)
        _, _, th, _ = fit_pattern(taus, s, W800)
        errs.append(th - 0.5)
    assert np.max(np.abs(errs)) < 0.1
    assert np.std(errs) < 0.01 / 0.3  # phase noise ~ sigma / Q


def test_fit_pattern_tau_offset_periodicity():
    t_ir = 2.0 * math.pi / W800
    taus = np.linspace(0.0, t_ir, 16, endpoint=False)
    s = 2.0 + 0.5 * np.cos(2 * W800 * taus - 1.1)
    _, _, th1, _ = fit_pattern(taus, s, W800)
    _, _, th2, _ = fit_pattern(taus + 3 * t_ir, s, W800)
    assert th1 == pytest.approx(th2, abs=1e-9)


def _fit(theta_fit_0=0.3, theta_fit_180=0.4, lam=800.0):
    return RabbitFit(lambda_nm=lam, base_order=22, eps_center=0.16,
                     p={0: 1.0, 180: 1.0}, q={0: 0.3, 180: 0.3},
                     theta_fit={0: theta_fit_0, 180: theta_fit_180},
                     residual_rel={0: 1e-4, 180: 1e-4}, flagged=False)


def test_molecular_delay_identity():
    """tau_mol = phase / (2 omega0) exactly; benchmark arithmetic."""
    # a fitted phase that maps onto the tabulated -0.4872 rad
    raw = wrap_phase(-(-0.4872) - math.pi)
    recs = molecular_delay(_fit(theta_fit_0=raw))
    rec0 = [r for r in recs if r.theta == 0][0]
    assert rec0.phase == pytest.approx(-0.4872, abs=1e-12)
    assert rec0.tau_mol_as == pytest.approx(rec0.phase / (2 * W800) * AU_TIME_TO_AS,
                                            rel=1e-15)
    assert rec0.tau_mol_as == pytest.approx(-103.46, abs=0.05)
    assert rec0.tau_mol_as == pytest.approx(-103.4, abs=0.1)


def test_molecular_delay_1600():
    w0 = omega0_from_wavelength_nm(1600.0)
    raw = wrap_phase(-(-0.3747) - math.pi)
    recs = molecular_delay(_fit(theta_fit_0=raw, lam=1600.0))
    rec0 = [r for r in recs if r.theta == 0][0]
    assert rec0.tau_mol_as == pytest.approx(-0.3747 / (2 * w0) * AU_TIME_TO_AS, rel=1e-12)
    assert rec0.tau_mol_as == pytest.approx(-159.0, abs=0.2)


def test_zero_phase_zero_delay():
    recs = molecular_delay(_fit(theta_fit_0=wrap_phase(-math.pi)))
    rec0 = [r for r in recs if r.theta == 0][0]
    assert rec0.phase == pytest.approx(0.0, abs=1e-12)
    assert rec0.tau_mol_as == 0.0


def test_stereo_molecular():
    recs = molecular_delay(_fit())
    assert stereo_molecular(recs) == pytest.approx(
        [r for r in recs if r.theta == 180][0].tau_mol_as
        - [r for r in recs if r.theta == 0][0].tau_mol_as)


def test_spectrogram_validation():
    taus = tau_samples(800.0, 16)
    spec = RabbitSpectrogram(lambda_nm=800.0, base_order=22, eps_center=0.16,
                             taus=taus, signal={0: np.ones(16), 180: np.ones(16)},
                             integration_halfwidth=0.8, gamma=0.0035)
    spec.validate()
    short = RabbitSpectrogram(lambda_nm=800.0, base_order=22, eps_center=0.16,
                              taus=taus[:4],
                              signal={0: np.ones(4), 180: np.ones(4)},
                              integration_halfwidth=0.8, gamma=0.0035)
    with pytest.raises(ValueError):
        short.validate()


def test_fit_spectrogram_flags_bad_residual(rng):
    taus = tau_samples(800.0, 16)
    noisy = 1.0 + 0.02 * rng.normal(size=16)
    spec = RabbitSpectrogram(lambda_nm=800.0, base_order=22, eps_center=0.16,
                             taus=taus, signal={0: noisy, 180: noisy},
                             integration_halfwidth=0.8, gamma=0.0035)
    fit = fit_spectrogram(spec)
    assert fit.flagged


def test_effective_halfwidth_rule():
    """Window edges stay clear of the flanking harmonics' spectral sidelobes.

    At 800 nm / 40 fs the base 0.8 choice is essentially optimal (the edge
    sits on a spectral zero of the harmonic line); along the ladder the
    clean zone shrinks until only a narrow kernel-limited core remains.
    """
    from moldelays.constants import fs_to_au
    from moldelays.rabbit import effective_halfwidth
    dur = fs_to_au(40.0)
    hw800 = effective_halfwidth(800.0, 0.8, dur, 0.0035)
    assert 0.75 < hw800 <= 0.8
    hw1600 = effective_halfwidth(1600.0, 0.8, dur, 0.0035 / 2)
    assert 0.45 < hw1600 < 0.62    # inside the measured clean plateau
    hw6400 = effective_halfwidth(6400.0, 0.8, dur, 0.0035 / 8)
    assert hw6400 == pytest.approx(2.5 * (0.0035 / 8) / omega0_from_wavelength_nm(6400.0))
    # integration helper: plain trapezoid over the sub-window
    from moldelays.rabbit import integrate_sideband
    eps = np.linspace(0.0, 1.0, 101)
    p = np.ones_like(eps)
    assert integrate_sideband(eps, p, 0.5, 0.2) == pytest.approx(0.4, abs=1e-12)


def test_pt2_symmetric_molecule_has_no_stereo_phase():
    m = MoleculeModel(q=0.5, a=0.374166, x1=+1.053522, x2=-1.053522)
    gs = ground_state(m, default_ground_grid(30.0, 0.05))
    res = pt2_sideband_phase(m, gs, 800.0, 22)
    assert res.phase[0] == pytest.approx(res.phase[180], abs=1e-6)


def test_pt2_eta_sweep_diagnostic(paper_model, paper_ground):
    res = pt2_sideband_phase(paper_model, paper_ground, 800.0, 22)
    assert res.sweep_spread < 0.1
    assert set(res.phase) == {0, 180}
    assert res.phase[0] == pytest.approx(-0.50, abs=0.05)
    assert res.phase[180] == pytest.approx(-0.53, abs=0.05)
