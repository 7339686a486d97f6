"""Sideband delay scans, interferometric pattern fits and molecular delays.

A scan propagates the molecule under the XUV comb plus IR dressing for a set
of pump-probe delays tau, spectrally integrates each sideband on each side,
and fits the two-color pattern

    S(tau) = P + Q cos(2 omega0 tau - theta_fit).

Probe-wavelength ladder: lambda_n = 2^(n-1) x 800 nm with the sideband
orders scaled by 2^(n-1), which keeps the XUV photon energies (and thus the
sideband photoelectron energies) fixed while only the IR quantum changes.
The comb carries the odd harmonics flanking each tracked sideband; at
800 nm this reduces to H21..H29.

Phase convention
----------------
Simulations define the pulses through their vector potentials with cosine
carriers, and the interaction is applied in the velocity gauge.  Written in
terms of the field-carrier (length-form) convention used by the tabulated
benchmark phases, each velocity vertex contributes a factor i omega relative
to the length vertex, which shifts the fitted two-path interference phase by
exactly pi; the tabulated delay axis additionally runs opposite to
``tau_xuv_ir`` as defined here.  The fitted phase therefore maps onto the
tabulated molecular phase as

    theta_mol = wrap(-theta_fit - pi),

a fixed convention constant validated against the second-order perturbation
route (see :mod:`moldelays.pt2` and the cross-method tests).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constants import (AU_TIME_TO_AS, field_amplitude_au, fs_to_au,
                        omega0_from_wavelength_nm)
from .model import MoleculeModel
from .tdse import (PulseSet, TdseGrid, TdseState, WindowAnalyzer, auto_grid,
                   free_propagate, grid_bound_states, propagate)
from .wigner import THETA_LABELS

BASE_SIDEBANDS = (22, 24, 26, 28)

# theta_fit -> tabulated molecular phase
PHASE_SIGN = -1.0
PHASE_OFFSET = -math.pi


def wrap_phase(phi: float) -> float:
    return (phi + math.pi) % (2.0 * math.pi) - math.pi


def ladder_scale(lambda_nm: float) -> int:
    """2^(n-1) for lambda on the 800 nm geometric ladder."""
    ratio = lambda_nm / 800.0
    n = round(math.log2(ratio)) + 1
    if abs(2.0 ** (n - 1) - ratio) > 1e-9 or n < 1:
        raise ValueError(f"{lambda_nm} nm is not on the 2^(n-1) x 800 nm ladder")
    return 2 ** (n - 1)


def harmonic_orders(lambda_nm: float, base_sidebands=BASE_SIDEBANDS) -> tuple:
    """Odd comb orders flanking every tracked sideband at this wavelength."""
    s = ladder_scale(lambda_nm)
    orders = set()
    for q2 in base_sidebands:
        orders.add(q2 * s - 1)
        orders.add(q2 * s + 1)
    return tuple(sorted(orders))


def sideband_energy(base_order: int, omega0_800: float, e_i: float) -> float:
    """Center photoelectron energy 2q omega0(800nm) - E_I (ladder invariant)."""
    return base_order * omega0_800 - e_i


def make_pulses(lambda_nm: float, tau: float = 0.0,
                base_sidebands=BASE_SIDEBANDS,
                xuv_intensity_w_cm2: float = 1e10,
                ir_intensity_800_w_cm2: float = 1e10,
                duration_fs: float = 40.0) -> PulseSet:
    """Pulse set for one ladder wavelength.

    The XUV intensity applies per harmonic.  The IR intensity is quoted at
    800 nm and scaled by (800 / lambda)^4 along the ladder, which holds the
    free-free dressing parameter k A0 / omega0 fixed so every wavelength
    stays equally deep in the one-IR-photon regime.
    """
    w0 = omega0_from_wavelength_nm(lambda_nm)
    orders = harmonic_orders(lambda_nm, base_sidebands)
    e_xuv = field_amplitude_au(xuv_intensity_w_cm2)
    ir_intensity = ir_intensity_800_w_cm2 * (800.0 / lambda_nm) ** 4
    a_ir = field_amplitude_au(ir_intensity) / w0
    a_h = tuple(e_xuv / (o * w0) for o in orders)
    return PulseSet(omega0=w0, harmonic_orders=orders, a0_ir=a_ir,
                    a0_harmonics=a_h, duration=fs_to_au(duration_fs),
                    tau_xuv_ir=tau)


def tau_samples(lambda_nm: float, n_tau: int = 16) -> np.ndarray:
    """Uniform delay grid covering one IR period, centered on zero."""
    t_ir = 2.0 * math.pi / omega0_from_wavelength_nm(lambda_nm)
    return (np.arange(n_tau) / n_tau - 0.5) * t_ir


def effective_halfwidth(lambda_nm: float, base_frac: float, duration: float,
                        gamma: float) -> float:
    """Sideband integration halfwidth, as a fraction of omega0(lambda).

    The harmonic lines keep the fixed spectral width of the pulse envelope
    while the sideband spacing shrinks along the wavelength ladder, so the
    window must stay clear of the harmonics' spectral sidelobes: the edge
    keeps >= 3.2 envelope bandwidths 2 pi / T of distance from the flanking
    lines (their sidelobe intensity is below 1e-4 of the peak there).  When
    no such clean zone exists (longest wavelengths, blended peaks) the
    window falls back to a narrow core of a few kernel widths, where the
    sideband still dominates.
    """
    w0 = omega0_from_wavelength_nm(lambda_nm)
    exclusion = 3.2 * 2.0 * math.pi / duration
    hw = min(base_frac, 1.0 - exclusion / w0)
    return max(hw, 2.5 * gamma / w0)


# ----------------------------------------------------------------------
# spectrogram data
# ----------------------------------------------------------------------

@dataclass
class RabbitSpectrogram:
    """Integrated sideband signals versus pump-probe delay for one sideband."""

    lambda_nm: float
    base_order: int
    eps_center: float
    taus: np.ndarray
    signal: dict                        # theta label -> array over taus
    integration_halfwidth: float        # in units of omega0
    gamma: float

    def validate(self):
        w0 = omega0_from_wavelength_nm(self.lambda_nm)
        span = self.taus.max() - self.taus.min()
        if len(self.taus) < 8 or span < 2.0 * math.pi / w0 * (1.0 - 1.5 / len(self.taus)):
            raise ValueError("spectrogram needs >= 8 samples spanning one IR period")


@dataclass(frozen=True)
class RabbitFit:
    """Eq.-pattern fit per side; theta_fit is the literal fitted phase."""

    lambda_nm: float
    base_order: int
    eps_center: float
    p: dict
    q: dict
    theta_fit: dict
    residual_rel: dict
    flagged: bool
    integration_halfwidth: float = 0.0


@dataclass(frozen=True)
class MolecularDelayRecord:
    lambda_nm: float
    base_order: int
    eps: float
    theta: int
    phase: float          # tabulated-convention molecular phase (rad)
    tau_mol_as: float
    method: str           # "tdse" or "pt2"


def fit_pattern(taus, signal, omega0: float):
    """Least-squares fit of S(tau) = P + Q cos(2 omega0 tau - theta).

    Linear regression on {1, cos, sin}; returns (P, Q, theta, rel_residual)
    with Q >= 0 and theta in (-pi, pi].
    """
    taus = np.asarray(taus, dtype=float)
    signal = np.asarray(signal, dtype=float)
    design = np.stack([np.ones_like(taus), np.cos(2.0 * omega0 * taus),
                       np.sin(2.0 * omega0 * taus)], axis=1)
    coef, *_ = np.linalg.lstsq(design, signal, rcond=None)
    p = float(coef[0])
    q = float(np.hypot(coef[1], coef[2]))
    theta = float(np.arctan2(coef[2], coef[1]))
    resid = float(np.sqrt(np.mean((design @ coef - signal) ** 2)))
    rel = resid / abs(p) if p != 0 else np.inf
    return p, q, theta, rel


def fit_spectrogram(spec: RabbitSpectrogram, residual_tol: float = 1e-2) -> RabbitFit:
    spec.validate()
    w0 = omega0_from_wavelength_nm(spec.lambda_nm)
    p, q, th, rr = {}, {}, {}, {}
    for label in THETA_LABELS:
        p[label], q[label], th[label], rr[label] = fit_pattern(
            spec.taus, spec.signal[label], w0)
    flagged = any(r > residual_tol for r in rr.values())
    return RabbitFit(lambda_nm=spec.lambda_nm, base_order=spec.base_order,
                     eps_center=spec.eps_center, p=p, q=q, theta_fit=th,
                     residual_rel=rr, flagged=flagged,
                     integration_halfwidth=spec.integration_halfwidth)


def molecular_delay(fit: RabbitFit, method: str = "tdse") -> list:
    """Molecular phases and delays per side, tau_mol = theta / (2 omega0)."""
    w0 = omega0_from_wavelength_nm(fit.lambda_nm)
    records = []
    for label in THETA_LABELS:
        phase = wrap_phase(PHASE_SIGN * fit.theta_fit[label] + PHASE_OFFSET)
        records.append(MolecularDelayRecord(
            lambda_nm=fit.lambda_nm, base_order=fit.base_order,
            eps=fit.eps_center, theta=label, phase=phase,
            tau_mol_as=phase / (2.0 * w0) * AU_TIME_TO_AS, method=method))
    return records


def stereo_molecular(records: list) -> float:
    """Delta tau_mol = tau_mol(180) - tau_mol(0) from one record pair."""
    by_theta = {r.theta: r for r in records}
    return by_theta[180].tau_mol_as - by_theta[0].tau_mol_as


# ----------------------------------------------------------------------
# scan orchestration
# ----------------------------------------------------------------------

@dataclass
class RabbitRunSetup:
    """Everything one delay point needs; shared across the tau scan."""

    model: MoleculeModel
    lambda_nm: float
    base_sidebands: tuple
    e_i: float
    omega0_800: float
    grid: TdseGrid
    bound: list
    dt: float
    t_free: float
    gamma: float
    halfwidth: float                    # sideband integration halfwidth / omega0
    xuv_intensity: float
    ir_intensity_800: float
    duration_fs: float

    def sb_windows(self, stored_halfwidth: float = 0.9):
        """Spectral grids per sideband, spanning the widest analyzable window.

        Points are stored over +- stored_halfwidth * omega0; integration
        limits are applied afterwards (see :func:`effective_halfwidth`).
        """
        w0 = omega0_from_wavelength_nm(self.lambda_nm)
        out = {}
        for q2 in self.base_sidebands:
            center = sideband_energy(q2, self.omega0_800, self.e_i)
            half = stored_halfwidth * w0
            grid_step = self.gamma / 3.0
            npts = max(11, int(round(2 * half / grid_step)) + 1)
            out[q2] = (center, np.linspace(center - half, center + half, npts))
        return out

    def fit_halfwidth(self) -> float:
        w0 = omega0_from_wavelength_nm(self.lambda_nm)
        return effective_halfwidth(self.lambda_nm, self.halfwidth,
                                   fs_to_au(self.duration_fs), self.gamma)


def build_setup(model: MoleculeModel, lambda_nm: float, e_i: float,
                base_sidebands=BASE_SIDEBANDS, dt: float = 0.05,
                dx: float = 0.15, t_free_fs: float = 3.0,
                gamma_800: float = 0.0035, halfwidth: float = 0.8,
                xuv_intensity: float = 1e10, ir_intensity_800: float = 1e10,
                duration_fs: float = 40.0, n_tau: int = 16) -> RabbitRunSetup:
    """Grid, bound states and analysis settings for one ladder wavelength.

    The spectral window width scales with omega0 to keep sidebands resolved
    at every wavelength.
    """
    omega0_800 = omega0_from_wavelength_nm(800.0)
    w0 = omega0_from_wavelength_nm(lambda_nm)
    scale = ladder_scale(lambda_nm)
    max_order = max(harmonic_orders(lambda_nm, base_sidebands))
    eps_max = max_order * w0 - e_i + 3.0 * omega0_800
    t_ir = 2.0 * math.pi / w0
    t_total = fs_to_au(duration_fs) + t_ir * (0.5 - 1.0 / n_tau) + fs_to_au(t_free_fs)
    grid = auto_grid(eps_max, t_total, dx=dx)
    bound = grid_bound_states(model, grid, polish_dt=dt)
    return RabbitRunSetup(model=model, lambda_nm=lambda_nm,
                          base_sidebands=tuple(base_sidebands), e_i=e_i,
                          omega0_800=omega0_800, grid=grid, bound=bound, dt=dt,
                          t_free=fs_to_au(t_free_fs), gamma=gamma_800 / scale,
                          halfwidth=halfwidth, xuv_intensity=xuv_intensity,
                          ir_intensity_800=ir_intensity_800, duration_fs=duration_fs)


def run_delay_point(setup: RabbitRunSetup, tau: float,
                    pulse_override=None, return_state: bool = False):
    """One propagation plus windowed sideband spectra at delay tau.

    Returns {"spectra": {base_order: (eps_grid, p_by_label)}, "norm_dev",
    "edge_density"}; integration over a chosen sub-window happens at fit
    time.  ``pulse_override`` maps a PulseSet to a modified one (intensity
    scalings for the property tests).
    """
    pulses = make_pulses(setup.lambda_nm, tau, setup.base_sidebands,
                         setup.xuv_intensity, setup.ir_intensity_800,
                         setup.duration_fs)
    if pulse_override is not None:
        pulses = pulse_override(pulses)
    e0, phi0 = setup.bound[0]
    state = TdseState(grid=setup.grid, psi=phi0.astype(complex), time=0.0)
    state = propagate(state, setup.model, pulses, dt=setup.dt)
    state = free_propagate(state, setup.model, setup.t_free, dt=setup.dt)
    windows = setup.sb_windows()
    eps_max = max(w[1].max() for w in windows.values())
    analyzer = WindowAnalyzer(setup.model, setup.grid, setup.gamma, eps_max,
                              bound_states=setup.bound)
    spectra = {}
    for q2, (center, eps_grid) in windows.items():
        spec = analyzer.side_resolved(state.psi, eps_grid)
        spectra[q2] = (eps_grid, {0: spec.p_left, 180: spec.p_right})
    out = {"spectra": spectra,
           "norm_dev": abs(state.norm() - 1.0),
           "edge_density": state.edge_density()}
    if return_state:
        out["state"] = state
    return out


def integrate_sideband(eps_grid, p_values, center: float, halfwidth_au: float) -> float:
    """Trapezoid integral of a stored sideband spectrum over a sub-window."""
    eps_grid = np.asarray(eps_grid, dtype=float)
    sel = np.abs(eps_grid - center) <= halfwidth_au + 1e-12
    return float(np.trapezoid(np.asarray(p_values, dtype=float)[sel], eps_grid[sel]))


class ScanAborted(RuntimeError):
    """A member run failed; completed delay points ride along."""

    def __init__(self, message, partial):
        super().__init__(message)
        self.partial = partial


def scan_rabbit(setup: RabbitRunSetup, taus=None,
                point_results: dict | None = None) -> dict:
    """Full delay scan; returns {base_order: RabbitSpectrogram}.

    ``point_results`` may carry already-computed delay points keyed by tau
    index (the resume path); missing points are computed here.
    """
    if taus is None:
        taus = tau_samples(setup.lambda_nm)
    taus = np.asarray(taus, dtype=float)
    results = dict(point_results or {})
    for j, tau in enumerate(taus):
        if j in results:
            continue
        try:
            results[j] = run_delay_point(setup, float(tau))
        except Exception as exc:
            raise ScanAborted(f"delay point {j} (tau={tau:.3f}) failed: {exc}",
                              partial=results) from exc
    w0 = omega0_from_wavelength_nm(setup.lambda_nm)
    hw = setup.fit_halfwidth()
    out = {}
    for q2 in setup.base_sidebands:
        center = sideband_energy(q2, setup.omega0_800, setup.e_i)
        signal = {}
        for label in THETA_LABELS:
            vals = []
            for j in range(len(taus)):
                eps_grid, sides = results[j]["spectra"][q2]
                vals.append(integrate_sideband(eps_grid, sides[label], center, hw * w0))
            signal[label] = np.array(vals)
        out[q2] = RabbitSpectrogram(lambda_nm=setup.lambda_nm, base_order=q2,
                                    eps_center=center, taus=taus, signal=signal,
                                    integration_halfwidth=hw,
                                    gamma=setup.gamma)
    return out
