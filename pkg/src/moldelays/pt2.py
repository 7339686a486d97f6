"""Two-photon sideband phases from second-order perturbation theory.

For sideband 2q the two interfering pathways absorb the flanking harmonics
and exchange one IR photon, each in both time orderings (XUV first through
the on-shell continuum, IR first through sub-threshold virtual states).
Per emission side, with the XUV vertex in length form and the IR vertex in
velocity form,

    M_∓(side) = <Psi-_side| p G(E0 + w_{2q∓1}) x |Phi_0>
              + <Psi-_side| x G(E0 ± w0) p |Phi_0>,

and the molecular phase in the tabulated convention is
theta(side) = arg(M_+ M_-^*) - pi.  The commutator identity p = i[H, x]
maps this ordering-summed amplitude exactly onto ∓ i w0 times the
all-length-form one (the contact terms cancel between orderings), which is
where the constant pi comes from.  The velocity-form IR vertex matters
numerically: the free-free integrand loses its linear-in-x weight, turning
the regularized radial integrals into simple poles.

Detector states Psi-_side are the incoming-boundary-condition continuum
states with outgoing flux only toward the requested side, assembled from the
coupled-channel solution pair at the sideband energy.

The continuum driven equations (E + i eta - H) xi = x Phi_0 are regularized
with a small positive eta (outgoing waves, convergent free-free integrals
inside a finite box).  The eta dependence of the extracted phase is
dominated by the analytically known free-free pole factor; after removing

    theta_pole(eta) = -atan(eta / (k_+ dk_+)) - atan(eta / (k_- |dk_-|)),

where dk_± are the intermediate-to-final momentum offsets, the corrected
phases are extrapolated to eta = 0.  A x2 sweep of eta is part of every
evaluation and its spread is reported as the regularization diagnostic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constants import AU_TIME_TO_AS, omega0_from_wavelength_nm
from .model import BoundState, MoleculeModel
from .partial_wave import PolarFrame, decompose_potential, solve_coupled
from .rabbit import ladder_scale, sideband_energy
from .tdse import _numerov_resolvent
from .wigner import THETA_LABELS


@dataclass(frozen=True)
class Pt2Result:
    lambda_nm: float
    base_order: int
    eps: float
    phase: dict                # theta label -> extrapolated phase (rad)
    tau_mol_as: dict
    etas: np.ndarray
    phase_raw: dict            # theta label -> phases at each eta before extrapolation
    sweep_spread: float        # max |corrected(eta_min) - corrected(eta_max)|
    box_half_width: float


@dataclass
class DetectorStates:
    """Incoming-BC detector data at one energy: weights over the raw pair."""

    eps: float
    weights: dict              # theta label -> complex (2,) coefficients
    pair: object               # ContinuumPair with full radial storage

    def cartesian(self, label: int, x: np.ndarray) -> np.ndarray:
        w = self.weights[label]
        s1, s2 = self.pair.states
        return w[0] * s1.cartesian(x) + w[1] * s2.cartesian(x)


def detector_states(model: MoleculeModel, eps: float, r_max: float) -> DetectorStates:
    """Detector states for both emission labels at one energy.

    The outgoing component toward the opposite side is cancelled: label 0
    detects electrons leaving toward negative x (heavy side), label 180
    toward positive x.
    """
    frame = PolarFrame(0.0)
    v0, v1 = decompose_potential(model.potential, frame)
    pair = solve_coupled(eps, v0, v1, frame, r_max=r_max)
    c = pair.channel_amplitudes
    right = (c[:, 0] + c[:, 1]) / math.sqrt(2.0)
    left = (c[:, 0] - c[:, 1]) / math.sqrt(2.0)
    weights = {
        # detect left (label 0): no outgoing wave on the right side
        0: np.array([right[1], -right[0]]),
        # detect right (label 180): no outgoing wave on the left side
        180: np.array([left[1], -left[0]]),
    }
    return DetectorStates(eps=eps, weights=weights, pair=pair)


def box_half_width(k_max: float, eta_min: float, floor: float = 2520.0) -> float:
    """Box size keeping the eta-damped free-free tails converged in-box.

    Truncation demands exp(-eta X / k) (X dk) << 1 with dk ~ omega0 / k;
    X = 11.5 k / eta_min satisfies it at the per-mille level.
    """
    return max(floor, 11.5 * k_max / eta_min)


def pt2_box_for(lambda_nm: float, base_order: int, e_i: float,
                eta_scale: float = 0.09) -> tuple[float, float]:
    """(sideband energy, required box half width) for one evaluation."""
    w0 = omega0_from_wavelength_nm(lambda_nm)
    omega0_800 = w0 * ladder_scale(lambda_nm)
    eps_sb = sideband_energy(base_order, omega0_800, e_i)
    k_plus = math.sqrt(2.0 * (eps_sb + w0))
    return eps_sb, box_half_width(k_plus, eta_scale * w0)


def _driven_solution(v_ext, dx, src, energy, eta):
    """xi = (energy + i eta - H)^{-1} src on the uniform grid."""
    return -_numerov_resolvent(v_ext, dx, src.astype(complex), energy + 1j * eta)


def _pole_correction(eta: float, k_sb: float, k_plus: float, k_minus: float) -> float:
    """Free-free (simple) pole contribution to arg(M_+ M_-^*) at finite eta."""
    dk_plus = k_plus - k_sb
    dk_minus = k_sb - k_minus
    return (-math.atan(eta / (k_plus * dk_plus))
            - math.atan(eta / (k_minus * dk_minus)))


def _derivative_4th(f: np.ndarray, dx: float) -> np.ndarray:
    """Centered 4th-order first derivative; one-sided at the edges."""
    out = np.empty_like(f)
    out[2:-2] = (f[:-4] - 8.0 * f[1:-3] + 8.0 * f[3:-1] - f[4:]) / (12.0 * dx)
    out[:2] = (f[1:3] - f[0:2]) / dx
    out[-2:] = (f[-2:] - f[-3:-1]) / dx
    return out


def pt2_sideband_phase(model: MoleculeModel, ground: BoundState,
                       lambda_nm: float, base_order: int,
                       dx: float = 0.15, eta_scale: float = 0.09,
                       include_ir_first: bool = True,
                       detectors: DetectorStates | None = None) -> Pt2Result:
    """Sideband phase per emission side from the two-photon amplitudes.

    eta runs over eta_scale * omega0 * {1, 1.5, 2}; phases are pole-corrected
    and quadratically extrapolated to eta = 0.
    """
    w0 = omega0_from_wavelength_nm(lambda_nm)
    scale = ladder_scale(lambda_nm)
    omega0_800 = w0 * scale
    e0 = ground.energy
    eps_sb = sideband_energy(base_order, omega0_800, -e0)
    k_sb = math.sqrt(2.0 * eps_sb)
    k_plus = math.sqrt(2.0 * (eps_sb + w0))
    k_minus = math.sqrt(2.0 * (eps_sb - w0))
    etas = eta_scale * w0 * np.array([1.0, 1.5, 2.0])
    half = box_half_width(k_plus, float(etas[0]))

    if detectors is None or detectors.pair.r_max < half:
        detectors = detector_states(model, eps_sb, r_max=half + 40.0)

    n = int(2 * round(half / dx)) + 1
    x = (np.arange(n) - n // 2) * dx
    v = model.potential(x)
    phi = ground.interpolated(x)
    phi = phi / math.sqrt(float(np.sum(phi ** 2) * dx))
    src_x = x * phi
    src_p = _derivative_4th(phi, dx)          # p phi = -i phi'; the -i rides along below

    psi_det = {label: np.conj(detectors.cartesian(label, x))
               for label in THETA_LABELS}

    order_sb = base_order * scale
    phase_raw = {label: [] for label in THETA_LABELS}
    zeta_plus = zeta_minus = 0.0
    if include_ir_first:
        # sub-threshold virtual excitation by the IR photon, then the XUV one
        zeta_plus = -1j * _driven_solution(v, dx, src_p, e0 - w0, 0.0)
        zeta_minus = -1j * _driven_solution(v, dx, src_p, e0 + w0, 0.0)
    for eta in etas:
        xi_plus = _driven_solution(v, dx, src_x, e0 + (order_sb + 1) * w0, float(eta))
        xi_minus = _driven_solution(v, dx, src_x, e0 + (order_sb - 1) * w0, float(eta))
        dxi_plus = -1j * _derivative_4th(xi_plus, dx)
        dxi_minus = -1j * _derivative_4th(xi_minus, dx)
        for label in THETA_LABELS:
            m_plus = np.sum(psi_det[label] * (dxi_plus + x * zeta_plus)) * dx
            m_minus = np.sum(psi_det[label] * (dxi_minus + x * zeta_minus)) * dx
            phase_raw[label].append(float(np.angle(m_plus * np.conj(m_minus)) - math.pi))

    phase = {}
    spreads = []
    for label in THETA_LABELS:
        raw = np.unwrap(np.array(phase_raw[label]))
        corrected = raw - np.array([_pole_correction(float(e), k_sb, k_plus, k_minus)
                                    for e in etas])
        coeffs = np.polyfit(etas, corrected, 2)
        val = float(np.polyval(coeffs, 0.0))
        phase[label] = (val + math.pi) % (2.0 * math.pi) - math.pi
        spreads.append(float(abs(corrected[-1] - corrected[0])))
    tau = {label: phase[label] / (2.0 * w0) * AU_TIME_TO_AS for label in THETA_LABELS}
    return Pt2Result(lambda_nm=lambda_nm, base_order=base_order, eps=eps_sb,
                     phase=phase, tau_mol_as=tau, etas=etas,
                     phase_raw={k: np.array(v) for k, v in phase_raw.items()},
                     sweep_spread=max(spreads), box_half_width=half)
