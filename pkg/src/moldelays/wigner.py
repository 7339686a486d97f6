"""One-photon selected continuum waves and orientation-resolved Wigner delays.

The selected continuum wave at energy eps is the dipole projection onto the
degenerate continuum,

    Psi_sel = sum_k <Psi_k | d | Phi_0> Psi_k,

over any orthonormal basis {Psi_k} of the two-dimensional eigenspace; the
result is basis independent.  Its two asymptotic tails carry side-resolved
amplitudes A and phase shifts eta measured against a reference wave (radial
hydrogen s Coulomb wave, or a plane wave) centered at the expansion origin
x_ref.  Wigner delays are the energy derivatives tau_W = d eta / d eps,
evaluated by central differences.

Emission-direction labels
-------------------------
``theta_k = 0`` labels ejection toward the heavy nucleus (negative x on the
default geometry) and ``theta_k = 180`` toward the light one.  This pairing
of labels with geometric sides is fixed by the benchmark delay tables: their
origin-shifted columns reproduce only with this assignment, which also makes
the origin-shift law read

    tau_W(theta; x_ref) = tau_W(theta; 0) - cos(theta) * x_ref / sqrt(2 eps).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constants import ANGSTROM_TO_BOHR, AU_TIME_TO_AS, HARTREE_TO_EV
from .model import BoundState, MoleculeModel
from .partial_wave import (PolarFrame, ScanSolutions, decompose_potential,
                           reference_phase_batch, solve_scan)

THETA_LABELS = (0, 180)

# geometric side picked out by each label: index into (right, left) pairs
_SIDE_INDEX = {0: 1, 180: 0}


@dataclass(frozen=True)
class ScwfSummary:
    """Asymptotic summary of one selected continuum wave."""

    energy: float
    x_ref: float
    gauge: str
    reference_kind: str
    amplitude: dict          # theta label -> A >= 0, A(180) = 1
    eta: dict                # theta label -> phase shift (rad)

    def side_amplitude_ratio(self) -> float:
        """A(0) / A(180): heavy-side over light-side tail amplitude."""
        return self.amplitude[0] / self.amplitude[180]


@dataclass(frozen=True)
class WignerDelayRecord:
    energy: float
    theta: int
    x_ref: float
    tau_as: float
    deps: float
    reference_kind: str
    gauge: str


@dataclass
class DelayTable:
    """Scan results keyed deterministically by (eps, x_ref, theta)."""

    records: list
    canonical_x_ref: float | None = None

    def get(self, eps: float, theta: int, x_ref: float,
            eps_tol: float = 1e-9, x_tol: float = 1e-9) -> WignerDelayRecord:
        for rec in self.records:
            if (abs(rec.energy - eps) < eps_tol and rec.theta == theta
                    and abs(rec.x_ref - x_ref) < x_tol):
                return rec
        raise KeyError(f"no record at eps={eps}, theta={theta}, x_ref={x_ref}")

    def energies(self) -> np.ndarray:
        return np.unique([r.energy for r in self.records])

    def x_refs(self) -> np.ndarray:
        return np.unique([r.x_ref for r in self.records])


def ground_components(ground: BoundState, frame: PolarFrame, r_grid):
    """Even/odd components of Phi_0 about the frame origin."""
    plus = ground.interpolated(frame.x_ref + r_grid)
    minus = ground.interpolated(frame.x_ref - r_grid)
    f0 = (plus + minus) / math.sqrt(2.0)
    f1 = (plus - minus) / math.sqrt(2.0)
    return f0, f1


def _dipole_raw(scan: ScanSolutions, idx: int, ground: BoundState,
                gauge: str) -> np.ndarray:
    """<solution_s | d | Phi_0> for the two raw solutions at scan index idx.

    Length form uses d = x = x_ref + z.  Velocity form evaluates
    -<solution | d/dz | Phi_0> / (eps - E0), identical to the length form
    for exact states; the derivative is moved onto the radial solutions by
    parts (their derivatives are integrator outputs, the bound state's would
    need numerical differentiation).
    """
    r = scan.r_inner
    f0, f1 = ground_components(ground, scan.frame, r)
    out = np.zeros(2)
    for s in range(2):
        p0 = scan.inner[:, idx, s, 0]
        p1 = scan.inner[:, idx, s, 2]
        if gauge == "length":
            out[s] = (np.trapezoid(r * (p0 * f1 + p1 * f0), r)
                      + scan.frame.x_ref * np.trapezoid(p0 * f0 + p1 * f1, r))
        elif gauge == "velocity":
            dp0 = scan.inner[:, idx, s, 1]
            dp1 = scan.inner[:, idx, s, 3]
            grad = -np.trapezoid(dp0 * f1 + dp1 * f0, r)
            out[s] = -grad / (scan.eps[idx] - ground.energy)
        else:
            raise ValueError(f"unknown dipole gauge {gauge!r}")
    return out


def _selected_side_amplitudes(scan: ScanSolutions, idx: int, ground: BoundState,
                              gauge: str) -> np.ndarray:
    """Complex (right, left) tail amplitudes of the selected wave at idx."""
    d_raw = _dipole_raw(scan, idx, ground, gauge)
    if np.all(np.abs(d_raw) < 1e-12):
        raise RuntimeError(f"dark transition at eps={scan.eps[idx]}: "
                           "both dipole matrix elements vanish")
    gram = np.real(scan.amplitudes[idx] @ scan.amplitudes[idx].conj().T)
    weights = np.linalg.solve(gram, d_raw)
    c = weights @ scan.amplitudes[idx]
    right = (c[0] + c[1]) / math.sqrt(2.0)
    left = (c[0] - c[1]) / math.sqrt(2.0)
    return np.array([right, left])


def build_scwf(eps: float, scan: ScanSolutions, ground: BoundState,
               gauge: str = "length", reference_kind: str = "coulomb",
               reference_delta: float | None = None) -> ScwfSummary:
    """Selected continuum wave summary at one scan energy.

    ``reference_delta`` short-circuits the reference-wave solve when the
    caller has batched it already.
    """
    idx = int(np.argmin(np.abs(scan.eps - eps)))
    if abs(scan.eps[idx] - eps) > 1e-9:
        raise KeyError(f"energy {eps} not present in the scan batch")
    if reference_delta is None:
        if reference_kind == "plane":
            reference_delta = 0.0
        else:
            deltas, _, _, _ = reference_phase_batch(np.array([eps]), r_max=scan.r_max)
            reference_delta = float(deltas[0])
    sides = _selected_side_amplitudes(scan, idx, ground, gauge)
    amp = {th: float(np.abs(sides[_SIDE_INDEX[th]])) for th in THETA_LABELS}
    eta = {th: float(np.angle(sides[_SIDE_INDEX[th]]) - reference_delta)
           for th in THETA_LABELS}
    scale = amp[180]
    return ScwfSummary(energy=eps, x_ref=scan.frame.x_ref, gauge=gauge,
                       reference_kind=reference_kind,
                       amplitude={th: amp[th] / scale for th in THETA_LABELS},
                       eta=eta)


def _wrap(phi):
    return (phi + math.pi) % (2.0 * math.pi) - math.pi


def wigner_delay(eta_of_eps, eps: float, deps: float = 1e-3,
                 max_halvings: int = 6):
    """Central-difference group delay tau_W = d eta / d eps in attoseconds.

    ``eta_of_eps`` maps an energy array to phase-shift arrays (one per call
    side).  When the wrapped phase difference across the step exceeds pi/2
    the step is halved, up to ``max_halvings`` times.
    """
    step = deps
    for _ in range(max_halvings + 1):
        lo, hi = eta_of_eps(np.array([eps - step / 2.0, eps + step / 2.0]))
        jump = _wrap(hi - lo)
        if abs(jump) <= math.pi / 2.0:
            return float(jump / step * AU_TIME_TO_AS), step
        step /= 2.0
    raise RuntimeError(f"phase unwrapping failed at eps={eps} down to step {step}")


def origin_shift(tau_as: float, eps: float, theta: int, x_ref: float) -> float:
    """Analytic origin correction of a Wigner delay computed at x_ref = 0.

    tau_W(theta; x_ref) = tau_W(theta; 0) - cos(theta) x_ref / sqrt(2 eps),
    with theta the emission label defined in this module (0 = heavy side).
    """
    cos_t = 1.0 if theta == 0 else -1.0
    return tau_as - cos_t * x_ref / math.sqrt(2.0 * eps) * AU_TIME_TO_AS


def stereo_wigner(rec_180: WignerDelayRecord, rec_0: WignerDelayRecord) -> float:
    """Stereo Wigner delay tau_W(180) - tau_W(0); metadata must match."""
    same = (abs(rec_180.energy - rec_0.energy) < 1e-12
            and abs(rec_180.x_ref - rec_0.x_ref) < 1e-12
            and rec_180.reference_kind == rec_0.reference_kind
            and rec_180.gauge == rec_0.gauge)
    if not same:
        raise ValueError("stereo delay requires records at identical (eps, x_ref, reference)")
    if (rec_180.theta, rec_0.theta) != (180, 0):
        raise ValueError("pass the 180-degree record first, the 0-degree record second")
    return rec_180.tau_as - rec_0.tau_as


class WignerEngine:
    """Shared machinery for eta evaluations of one molecule.

    Caches Coulomb reference phases per energy and exposes batched
    side-resolved phases for arbitrary (eps, x_ref) requests.
    """

    def __init__(self, model: MoleculeModel, ground: BoundState,
                 r_max: float = 2600.0, gauge: str = "length",
                 reference_kind: str = "coulomb", inner_r: float = 60.0):
        self.model = model
        self.ground = ground
        self.r_max = r_max
        self.gauge = gauge
        self.reference_kind = reference_kind
        self.inner_r = inner_r
        self._ref_cache: dict = {}

    def reference_deltas(self, eps: np.ndarray) -> np.ndarray:
        if self.reference_kind == "plane":
            return np.zeros(len(eps))
        missing = [e for e in eps if e not in self._ref_cache]
        if missing:
            deltas, _, resid, _ = reference_phase_batch(np.array(missing), r_max=self.r_max)
            for e, d in zip(missing, deltas):
                self._ref_cache[e] = float(d)
        return np.array([self._ref_cache[e] for e in eps])

    def side_phases(self, eps: np.ndarray, x_ref: float):
        """(eta, amplitude) arrays of shape (ne, 2 labels) at one origin."""
        eps = np.asarray(eps, dtype=float)
        frame = PolarFrame(x_ref)
        v0, v1 = decompose_potential(self.model.potential, frame)
        scan = solve_scan(eps, v0, v1, frame, r_max=self.r_max, inner_r=self.inner_r)
        ref = self.reference_deltas(eps)
        eta = np.empty((eps.size, 2))
        amp = np.empty((eps.size, 2))
        for i in range(eps.size):
            sides = _selected_side_amplitudes(scan, i, self.ground, self.gauge)
            for j, th in enumerate(THETA_LABELS):
                c = sides[_SIDE_INDEX[th]]
                eta[i, j] = np.angle(c) - ref[i]
                amp[i, j] = np.abs(c)
        return eta, amp

    def delays(self, eps: np.ndarray, x_ref: float, deps: float = 1e-3):
        """tau_W for both labels at each energy, via one batched solve."""
        eps = np.asarray(eps, dtype=float)
        probe = np.concatenate([eps - deps / 2.0, eps + deps / 2.0])
        eta, _ = self.side_phases(probe, x_ref)
        ne = eps.size
        tau = np.empty((ne, 2))
        for i in range(ne):
            for j, th in enumerate(THETA_LABELS):
                jump = _wrap(eta[ne + i, j] - eta[i, j])
                if abs(jump) > math.pi / 2.0:
                    def eta_fn(e_pair, _j=j, _xr=x_ref):
                        et, _ = self.side_phases(e_pair, _xr)
                        return et[:, _j]
                    tau[i, j], _ = wigner_delay(eta_fn, float(eps[i]), deps / 2.0)
                else:
                    tau[i, j] = jump / deps * AU_TIME_TO_AS
        return tau


def wigner_energy_scan(model: MoleculeModel, ground: BoundState,
                       eps_grid, x_refs, canonical_x_ref: float | None = None,
                       gauge: str = "length", reference_kind: str = "coulomb",
                       deps: float = 1e-3, r_max: float = 2600.0) -> DelayTable:
    """Delay table over an energy grid and a set of expansion origins.

    Failures at individual energies are recorded as NaN rows and the scan
    continues.  Records are ordered by (eps, x_ref, theta).
    """
    eps_grid = np.asarray(eps_grid, dtype=float)
    if np.any(eps_grid <= 0):
        raise ValueError("scan energies must be positive")
    engine = WignerEngine(model, ground, r_max=r_max, gauge=gauge,
                          reference_kind=reference_kind)
    records = []
    for x_ref in x_refs:
        try:
            tau = engine.delays(eps_grid, x_ref, deps=deps)
        except Exception:
            tau = np.full((eps_grid.size, 2), np.nan)
        for i, e in enumerate(eps_grid):
            for j, th in enumerate(THETA_LABELS):
                records.append(WignerDelayRecord(
                    energy=float(e), theta=th, x_ref=float(x_ref),
                    tau_as=float(tau[i, j]), deps=deps,
                    reference_kind=reference_kind, gauge=gauge))
    records.sort(key=lambda r: (r.energy, r.x_ref, r.theta))
    return DelayTable(records=records, canonical_x_ref=canonical_x_ref)


def finite_difference_delay(engine: WignerEngine, eps: float, omega0: float,
                            x_ref: float, n_chain: int = 9) -> dict:
    """Two-omega-wide finite difference of eta per label, in attoseconds.

    [eta(eps + omega0) - eta(eps - omega0)] / (2 omega0), with the branch
    tracked along a chain of intermediate energies.
    """
    chain = np.linspace(eps - omega0, eps + omega0, n_chain)
    eta, _ = engine.side_phases(chain, x_ref)
    out = {}
    for j, th in enumerate(THETA_LABELS):
        unwrapped = np.unwrap(eta[:, j])
        out[th] = (unwrapped[-1] - unwrapped[0]) / (2.0 * omega0) * AU_TIME_TO_AS
    return out


def delay_table_rows(table: DelayTable):
    """CSV-ready rows (eps_eV, theta_deg, xref_angstrom, tau_as, kind, gauge)."""
    for r in table.records:
        yield (r.energy * HARTREE_TO_EV, r.theta, r.x_ref / ANGSTROM_TO_BOHR,
               r.tau_as, r.reference_kind, r.gauge)
