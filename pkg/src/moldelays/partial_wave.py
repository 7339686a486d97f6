"""1D polar coordinates, even/odd partial waves and coupled radial equations.

Any function of the signed coordinate z = x - x_ref can be written on the
two-point angular set theta in {0, pi} (theta = 0 for z > 0) as

    F(z) = f_0(r) Y_0(theta) + f_1(r) Y_1(theta),     r = |z|,
    Y_l(theta) = (cos theta)^l / sqrt(2),
    f_l(r) = [F(+r) + (-1)^l F(-r)] / sqrt(2).

The basis is orthonormal under summation over the two angles and obeys the
product rule Y_l Y_l' = [delta_ll' Y_0 + (1 - delta_ll') Y_1] / sqrt(2).
Inserting the expansions of the potential and of a stationary state into the
Schroedinger equation and projecting on Y_l yields the coupled radial system

    [-1/2 d^2/dr^2 + u_0(r) - eps] psi_l(r) + u_1(r) psi_{1-l}(r) = 0

where u_l = v_l / sqrt(2) = [V(x_ref + r) + (-1)^l V(x_ref - r)] / 2 (the
1/sqrt(2) between expansion coefficients v_l and couplings u_l is forced by
the product rule; u_0 -> V for a symmetric potential, as it must).
Continuity of the full wave-function at z = 0 imposes psi_0'(0) = 0 and
psi_1(0) = 0, and the positive-energy solution space is two dimensional:
initial data {psi_0(0), psi_1'(0)} = {1, 0} and {0, 1} generate a basis.

Solutions behave asymptotically as Coulomb waves of unit charge,
A sin(k r + ln(2 k r)/k + delta), and are characterized by the complex
channel amplitudes C = A exp(i delta) extracted by linear least squares on a
far window.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

SQRT2 = math.sqrt(2.0)


# ----------------------------------------------------------------------
# frames and angular basis
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class PolarFrame:
    """Signed coordinate z = x - x_ref mapped to (r, theta), theta in {0, pi}."""

    x_ref: float

    def to_polar(self, x):
        z = np.asarray(x, dtype=float) - self.x_ref
        r = np.abs(z)
        theta = np.where(z >= 0.0, 0.0, math.pi)
        return r, theta

    def to_cartesian(self, r, theta):
        return self.x_ref + np.asarray(r) * np.cos(theta)


def angular_basis(l: int, theta):
    """Y_l(theta) = (cos theta)^l / sqrt(2) for l in {0, 1}."""
    if l not in (0, 1):
        raise ValueError("the 1D expansion carries exactly two terms, l in {0, 1}")
    c = np.cos(theta)
    return (c ** l) / SQRT2


def partial_components(values_plus, values_minus):
    """Even/odd components from samples F(x_ref + r) and F(x_ref - r)."""
    f0 = (np.asarray(values_plus) + np.asarray(values_minus)) / SQRT2
    f1 = (np.asarray(values_plus) - np.asarray(values_minus)) / SQRT2
    return f0, f1


def reconstruct(r_grid, f0, f1, z):
    """Sum of the partial-wave expansion at signed coordinates z.

    f0, f1 are sampled on r_grid; values are interpolated to |z|.
    """
    z = np.asarray(z, dtype=float)
    sign = np.where(z >= 0.0, 1.0, -1.0)
    r = np.abs(z)
    return (np.interp(r, r_grid, f0) + sign * np.interp(r, r_grid, f1)) / SQRT2


def decompose_potential(potential, frame: PolarFrame, r_max: float | None = None):
    """Expansion coefficients (v0, v1) of a potential about the frame origin.

    ``potential`` is either a callable V(x) defined on both sides of x_ref
    out to r_max, or a pair (x_grid, v_grid); gridded input is rejected when
    the requested range exceeds the grid.  Returns callables of r with

        v_l(r) = [V(x_ref + r) + (-1)^l V(x_ref - r)] / sqrt(2)

    so that V(z) = v_0(r) Y_0 + v_1(r) Y_1 exactly.
    """
    if callable(potential):
        vfun = potential
    else:
        x_grid, v_grid = potential
        if r_max is not None:
            if frame.x_ref + r_max > x_grid[-1] or frame.x_ref - r_max < x_grid[0]:
                raise ValueError("requested radial range exceeds the potential grid")
        vfun = lambda x: np.interp(x, x_grid, v_grid)

    def v0(r):
        return (vfun(frame.x_ref + np.asarray(r)) + vfun(frame.x_ref - np.asarray(r))) / SQRT2

    def v1(r):
        return (vfun(frame.x_ref + np.asarray(r)) - vfun(frame.x_ref - np.asarray(r))) / SQRT2

    return v0, v1


# ----------------------------------------------------------------------
# radial states
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class RadialPartialWaveState:
    """One solution of the coupled radial system at a single energy."""

    energy: float
    frame: PolarFrame
    r: np.ndarray
    psi0: np.ndarray
    psi1: np.ndarray
    dpsi0: np.ndarray
    dpsi1: np.ndarray
    log_scale: float = 0.0

    def cartesian(self, x):
        """Reconstruct the wave-function at signed positions x (interpolated)."""
        z = np.asarray(x, dtype=float) - self.frame.x_ref
        sign = np.where(z >= 0.0, 1.0, -1.0)
        r = np.abs(z)
        p0 = np.interp(r, self.r, self.psi0)
        p1 = np.interp(r, self.r, self.psi1)
        return (p0 + sign * p1) / SQRT2


@dataclass
class ContinuumPair:
    """Two independent regular solutions spanning the degenerate continuum."""

    energy: float
    frame: PolarFrame
    states: tuple
    channel_amplitudes: np.ndarray      # (2 solutions, 2 channels) complex
    fit_residuals: np.ndarray
    r_max: float
    dr: float

    @property
    def k(self) -> float:
        return math.sqrt(2.0 * self.energy)

    def gram(self) -> np.ndarray:
        """Long-range limit of the (scaled) mutual overlaps.

        Products of tail sinusoids average to cos(delta_i - delta_j)/2 per
        unit length; the resulting metric M_ij = sum_l Re(C_il C_jl^*) is what
        box-normalized overlaps converge to (up to a common factor) as the
        box grows, and is the quadratic form under which the pair is
        orthonormalized.
        """
        c = self.channel_amplitudes
        return np.real(c @ c.conj().T)

    def orthonormal_weights(self) -> np.ndarray:
        """Symmetric (Loewdin) orthonormalization weights W.

        Rows of W give the coefficients of orthonormal combinations in terms
        of the raw pair: Psi_k = sum_s W[k, s] states[s].
        """
        m = self.gram()
        vals, vecs = np.linalg.eigh(m)
        if np.any(vals <= 0):
            raise RuntimeError("degenerate continuum pair: Gram matrix not positive")
        w = vecs @ np.diag(vals ** -0.5) @ vecs.T
        return w.T

    def overlap_after_orthonormalization(self) -> np.ndarray:
        w = self.orthonormal_weights()
        return w @ self.gram() @ w.T

    def asymptotic_wronskian(self) -> float:
        """Scale-normalized independence measure of the pair.

        Determinant of the complex channel-amplitude matrix, normalized by
        the solution magnitudes; vanishes iff the two solutions become
        asymptotically proportional.
        """
        c = self.channel_amplitudes
        norms = np.sqrt(np.sum(np.abs(c) ** 2, axis=1))
        return float(abs(np.linalg.det(c)) / (norms[0] * norms[1]))

    def side_amplitudes(self, weights) -> np.ndarray:
        """Complex tail amplitudes (right, left) of sum_s weights[s] states[s].

        Both sides are referred to the common phase kr + ln(2kr)/k; the left
        entry combines the channels with the theta = pi basis values.
        """
        c = np.asarray(weights) @ self.channel_amplitudes
        right = (c[..., 0] + c[..., 1]) / SQRT2
        left = (c[..., 0] - c[..., 1]) / SQRT2
        return np.stack([right, left], axis=-1)


# ----------------------------------------------------------------------
# integration
# ----------------------------------------------------------------------

def radial_step(eps: float) -> float:
    """Fixed RK4 step honoring both the potential scale and the wavelength."""
    k = math.sqrt(2.0 * abs(eps))
    return min(0.05, 2.0 * math.pi / (20.0 * k)) if k > 0 else 0.05


def _tail_window(r_grid: np.ndarray, r_max: float, tail_len: float) -> np.ndarray:
    lo = max(r_max - tail_len, 5.0)
    hi = r_max - 20.0
    sel = (r_grid >= lo) & (r_grid <= hi)
    if int(sel.sum()) < 50:
        raise ValueError(f"radial range {r_max} too short for a tail-fit window")
    return sel


def _rk4_coupled(eps, u0_half, u1_half, nstep, dr, collect_mask=None,
                 y0=None, return_final: bool = False):
    """Vectorized RK4 of the coupled system for a batch of energies.

    eps has shape (ne,); state y has shape (ne, 2 solutions, 4 components)
    ordered (psi0, dpsi0, psi1, dpsi1).  u*_half sample the couplings on the
    half-step grid (2 nstep + 1 points).  Returns stored states at the steps
    flagged by collect_mask (by default: every step).
    """
    eps = np.atleast_1d(np.asarray(eps, dtype=float))
    ne = eps.size
    if y0 is None:
        y = np.zeros((ne, 2, 4))
        y[:, 0, 0] = 1.0
        y[:, 1, 3] = 1.0
    else:
        y = y0.copy()
    if collect_mask is None:
        collect_mask = np.ones(nstep + 1, dtype=bool)
    out = np.empty((int(collect_mask.sum()), ne, 2, 4))
    pos = 0
    if collect_mask[0]:
        out[pos] = y
        pos += 1

    def deriv(yv, u0v, u1v):
        f = np.empty_like(yv)
        f[:, :, 0] = yv[:, :, 1]
        f[:, :, 2] = yv[:, :, 3]
        coef = 2.0 * (u0v - eps)[:, None]
        f[:, :, 1] = coef * yv[:, :, 0] + 2.0 * u1v * yv[:, :, 2]
        f[:, :, 3] = coef * yv[:, :, 2] + 2.0 * u1v * yv[:, :, 0]
        return f

    h = dr
    for i in range(nstep):
        ua0, ua1 = u0_half[2 * i], u1_half[2 * i]
        ub0, ub1 = u0_half[2 * i + 1], u1_half[2 * i + 1]
        uc0, uc1 = u0_half[2 * i + 2], u1_half[2 * i + 2]
        k1 = deriv(y, ua0, ua1)
        k2 = deriv(y + 0.5 * h * k1, ub0, ub1)
        k3 = deriv(y + 0.5 * h * k2, ub0, ub1)
        k4 = deriv(y + h * k3, uc0, uc1)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if collect_mask[i + 1]:
            out[pos] = y
            pos += 1
    if return_final:
        return out, y
    return out


def asymptotic_fit(r, f, eps: float, charge: float = 1.0,
                   residual_tol: float = 1e-4):
    """Least-squares fit of A sin(k r + (charge/k) ln(2 k r) + delta).

    The phase model carries the next asymptotic order of the Coulomb wave,
    -charge^2 / (2 k^3 r); without it the fitted phase is biased by ~1e-3 rad
    at fitting radii of a few thousand bohr, far above the reproducibility
    this layer must deliver.  Returns (A, delta, relative_residual, C) with
    A > 0, delta in (-pi, pi] and C = A exp(i delta).
    """
    r = np.asarray(r, dtype=float)
    f = np.asarray(f, dtype=float)
    k = math.sqrt(2.0 * eps)
    if charge != 0.0:
        theta = (k * r + (charge / k) * np.log(2.0 * k * r)
                 + charge ** 2 / (2.0 * k ** 3 * r))
    else:
        theta = k * r
    design = np.stack([np.sin(theta), np.cos(theta)], axis=1)
    coef, *_ = np.linalg.lstsq(design, f, rcond=None)
    amp = float(np.hypot(coef[0], coef[1]))
    delta = float(np.arctan2(coef[1], coef[0]))
    resid = float(np.sqrt(np.mean((design @ coef - f) ** 2)))
    rel = resid / amp if amp > 0 else np.inf
    return amp, delta, rel, amp * np.exp(1j * delta)


def asymptotic_radius(v0, v1, r_probe=None, tol: float = 1e-6):
    """Smallest probed radius where the couplings are Coulomb-clean.

    Criterion on the radial couplings u_l = v_l / sqrt(2):
    |u_1(r)| < tol and |u_0(r) + 1/r| < tol.
    """
    if r_probe is None:
        r_probe = np.linspace(50.0, 5000.0, 200)
    u0 = np.asarray(v0(r_probe)) / SQRT2
    u1 = np.asarray(v1(r_probe)) / SQRT2
    ok = (np.abs(u1) < tol) & (np.abs(u0 + 1.0 / r_probe) < tol)
    idx = np.argmax(ok)
    if not ok[idx:].all() or not ok.any():
        raise RuntimeError("no probed radius satisfies the asymptotic criterion")
    return float(r_probe[idx])


def _integrate_segments(eps, v0, v1, r_core: float, r_max: float, dr: float,
                        collect_inner: bool = True, tail_len: float = 120.0,
                        collect_all: bool = False):
    """Two-segment RK4: refined step through the core, standard step beyond.

    The molecular region is traversed at dr/4 (the soft-core features are
    only a few standard steps wide and dominate the solution's amplitude
    error otherwise); the long Coulomb zone keeps the wavelength-based step.
    Returns (r_kept, stored, y_end_unused) with stored shaped
    (n_kept, ne, 2, 4).
    """
    eps = np.atleast_1d(np.asarray(eps, dtype=float))
    dr_fine = dr / 4.0
    n_fine = int(round(r_core / dr_fine))
    r_half_a = np.arange(2 * n_fine + 1) * (dr_fine / 2.0)
    u0a = np.asarray(v0(r_half_a), dtype=float) / SQRT2
    u1a = np.asarray(v1(r_half_a), dtype=float) / SQRT2
    mask_a = np.ones(n_fine + 1, dtype=bool) if (collect_inner or collect_all) \
        else np.zeros(n_fine + 1, dtype=bool)
    if not mask_a.any():
        mask_a[-1] = True
    stored_a, y_end = _rk4_coupled(eps, u0a, u1a, n_fine, dr_fine,
                                   collect_mask=mask_a, return_final=True)
    r_a = (np.arange(n_fine + 1) * dr_fine)[mask_a]

    n_coarse = int(round((r_max - r_core) / dr))
    r_half_b = r_core + np.arange(2 * n_coarse + 1) * (dr / 2.0)
    u0b = np.asarray(v0(r_half_b), dtype=float) / SQRT2
    u1b = np.asarray(v1(r_half_b), dtype=float) / SQRT2
    r_grid_b = r_core + np.arange(n_coarse + 1) * dr
    if collect_all:
        mask_b = np.ones(n_coarse + 1, dtype=bool)
    else:
        mask_b = _tail_window(r_grid_b, r_max, tail_len)
    mask_b[0] = False          # r_core already stored by segment A
    stored_b, _ = _rk4_coupled(eps, u0b, u1b, n_coarse, dr,
                               collect_mask=mask_b, y0=y_end, return_final=True)
    r_b = r_grid_b[mask_b]
    r_kept = np.concatenate([r_a, r_b])
    stored = np.concatenate([stored_a, stored_b], axis=0)
    return r_kept, stored


def solve_coupled(eps: float, v0, v1, frame: PolarFrame | None = None,
                  r_max: float = 2600.0, dr: float | None = None,
                  tail_len: float = 120.0, r_core: float = 64.0) -> ContinuumPair:
    """Outward integration of the coupled system at one positive energy.

    v0, v1 are the expansion coefficients from :func:`decompose_potential`
    (internally scaled by 1/sqrt(2) to the equation couplings).  The two
    solutions follow the initial sets {psi_0(0), psi_1'(0)} = {1, 0}, {0, 1};
    their channel tails are fitted against the unit-charge Coulomb form over
    the last ``tail_len`` (minus a 20 a.u. guard).
    """
    if eps <= 0:
        raise ValueError("solve_coupled handles the positive-energy continuum only")
    if dr is None:
        dr = radial_step(eps)
    r_core = min(r_core, r_max / 2.0)
    frame = frame or PolarFrame(0.0)
    r_grid, stored = _integrate_segments(np.array([eps]), v0, v1, r_core, r_max, dr,
                                         collect_all=True, tail_len=tail_len)
    states = tuple(
        RadialPartialWaveState(
            energy=eps, frame=frame, r=r_grid,
            psi0=stored[:, 0, s, 0].copy(), psi1=stored[:, 0, s, 2].copy(),
            dpsi0=stored[:, 0, s, 1].copy(), dpsi1=stored[:, 0, s, 3].copy())
        for s in range(2))
    sel = _tail_window(r_grid, r_max, tail_len)
    amps = np.zeros((2, 2), dtype=complex)
    resid = np.zeros((2, 2))
    for s in range(2):
        for l in range(2):
            f = states[s].psi0 if l == 0 else states[s].psi1
            _, _, rel, c = asymptotic_fit(r_grid[sel], f[sel], eps)
            amps[s, l] = c
            resid[s, l] = rel
    return ContinuumPair(energy=eps, frame=frame, states=states,
                         channel_amplitudes=amps, fit_residuals=resid,
                         r_max=r_max, dr=dr)


@dataclass
class ScanSolutions:
    """Batched radial solves at many energies with reduced storage.

    inner blocks keep the full-resolution solutions over [0, inner_r] for
    bound-state matrix elements; only fitted complex channel amplitudes are
    retained from the asymptotic region.
    """

    eps: np.ndarray
    frame: PolarFrame
    r_inner: np.ndarray
    inner: np.ndarray                  # (n_inner, ne, 2, 4)
    amplitudes: np.ndarray             # (ne, 2 solutions, 2 channels) complex
    fit_residuals: np.ndarray          # (ne, 2, 2)
    r_max: float
    dr: float

    def pair_view(self, i: int) -> ContinuumPair:
        """Lightweight pair (no radial arrays) for amplitude-level work."""
        return ContinuumPair(energy=float(self.eps[i]), frame=self.frame, states=(),
                             channel_amplitudes=self.amplitudes[i],
                             fit_residuals=self.fit_residuals[i],
                             r_max=self.r_max, dr=self.dr)


def solve_scan(eps, v0, v1, frame: PolarFrame, r_max: float = 2600.0,
               inner_r: float = 64.0, tail_len: float = 120.0,
               dr: float | None = None) -> ScanSolutions:
    """Solve the coupled system for a batch of energies in one sweep."""
    eps = np.atleast_1d(np.asarray(eps, dtype=float))
    if np.any(eps <= 0):
        raise ValueError("scan energies must be strictly positive")
    if dr is None:
        dr = min(radial_step(float(e)) for e in eps)
    r_kept, stored = _integrate_segments(eps, v0, v1, inner_r, r_max, dr,
                                         collect_inner=True, tail_len=tail_len)
    inner_sel = r_kept <= inner_r
    tail_sel = ~inner_sel
    r_tail = r_kept[tail_sel]
    amps = np.zeros((eps.size, 2, 2), dtype=complex)
    resid = np.zeros((eps.size, 2, 2))
    for j in range(eps.size):
        for s in range(2):
            for l in range(2):
                f = stored[tail_sel, j, s, 2 * l]
                _, _, rel, c = asymptotic_fit(r_tail, f, float(eps[j]))
                amps[j, s, l] = c
                resid[j, s, l] = rel
    return ScanSolutions(eps=eps, frame=frame, r_inner=r_kept[inner_sel],
                         inner=stored[inner_sel], amplitudes=amps,
                         fit_residuals=resid, r_max=r_max, dr=dr)


# ----------------------------------------------------------------------
# reference waves
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class ReferenceWave:
    """Regular radial reference wave and its fitted asymptotic phase."""

    energy: float
    x_ref: float
    kind: str                      # "coulomb" or "plane"
    delta: float
    amplitude: float
    fit_residual: float
    r: np.ndarray = field(repr=False, default=None)
    u: np.ndarray = field(repr=False, default=None)


def reference_wave(eps: float, x_ref: float = 0.0, kind: str = "coulomb",
                   r_max: float = 2600.0, dr: float | None = None,
                   tail_len: float = 120.0, keep_radial: bool = False) -> ReferenceWave:
    """Radial s reference wave: hydrogen Coulomb (charge 1) or free.

    Integrated outward from a series start near the origin and fitted over
    the far window; the center x_ref only relabels the coordinate, the
    radial function is center independent.
    """
    if eps <= 0:
        raise ValueError("reference waves are defined for positive energies")
    if kind not in ("coulomb", "plane"):
        raise ValueError(f"unknown reference kind {kind!r}")
    charge = 1.0 if kind == "coulomb" else 0.0
    if kind == "plane":
        k = math.sqrt(2.0 * eps)
        r = None
        u = None
        if keep_radial:
            dr = dr or radial_step(eps)
            r = np.arange(int(round(r_max / dr)) + 1) * dr
            u = np.sin(k * r)
        return ReferenceWave(energy=eps, x_ref=x_ref, kind=kind, delta=0.0,
                             amplitude=1.0, fit_residual=0.0, r=r, u=u)
    deltas, amps, resid, (r, u) = reference_phase_batch(
        np.array([eps]), r_max=r_max, dr=dr, tail_len=tail_len, keep_radial=keep_radial)
    return ReferenceWave(energy=eps, x_ref=x_ref, kind=kind, delta=float(deltas[0]),
                         amplitude=float(amps[0]), fit_residual=float(resid[0]),
                         r=r, u=None if u is None else u[:, 0])


def _coulomb_series_start(eps: np.ndarray, r_start: float, n_terms: int = 40):
    """Regular solution of -u''/2 - u/r = eps u by power series at r_start.

    u = sum_n a_n r^n with a_0 = 0, a_1 = 1 and
    a_{n+2} = -(2 eps a_n + 2 a_{n+1}) / ((n + 2)(n + 1)); entire function,
    machine-converged at r_start ~ 0.5 within a few tens of terms.
    """
    ne = eps.size
    a_prev = np.zeros(ne)            # a_{n-1}
    a_curr = np.ones(ne)             # a_n, starting at a_1 = 1
    u = a_curr * r_start
    du = a_curr.copy()
    r_pow = r_start                  # r_start^n
    for n in range(1, n_terms):
        a_next = -(2.0 * eps * a_prev + 2.0 * a_curr) / ((n + 1.0) * n)
        u += a_next * r_pow * r_start
        du += a_next * (n + 1.0) * r_pow
        r_pow *= r_start
        a_prev, a_curr = a_curr, a_next
    return u, du


def reference_phase_batch(eps, r_max: float = 2600.0, dr: float | None = None,
                          tail_len: float = 120.0, keep_radial: bool = False):
    """Coulomb reference phases for a batch of energies (vectorized RK4).

    A series start and a refined step through the strong-field core keep the
    phase reproducible across grid refinement at the 1e-6 rad level.
    """
    eps = np.atleast_1d(np.asarray(eps, dtype=float))
    if dr is None:
        dr = min(radial_step(float(e)) for e in eps)
    r_start, r_core = 0.5, 10.0
    dr_core = dr / 5.0
    n_core = int(round((r_core - r_start) / dr_core))
    nstep = int(round((r_max - r_core) / dr))
    y = np.zeros((eps.size, 2))
    y[:, 0], y[:, 1] = _coulomb_series_start(eps, r_start)

    def deriv(yv, rv):
        f = np.empty_like(yv)
        f[:, 0] = yv[:, 1]
        f[:, 1] = -2.0 * (eps + 1.0 / rv) * yv[:, 0]
        return f

    def rk4(yv, rv, h):
        k1 = deriv(yv, rv)
        k2 = deriv(yv + 0.5 * h * k1, rv + 0.5 * h)
        k3 = deriv(yv + 0.5 * h * k2, rv + 0.5 * h)
        k4 = deriv(yv + h * k3, rv + h)
        return yv + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)

    for i in range(n_core):
        y = rk4(y, r_start + i * dr_core, dr_core)
    r_grid = r_core + np.arange(nstep + 1) * dr
    keep = _tail_window(r_grid, r_max, tail_len)
    keep_all = keep | keep_radial
    stored = np.empty((int(np.count_nonzero(keep_all)), eps.size, 2))
    pos = 0
    if keep_all[0]:
        stored[pos] = y
        pos += 1
    for i in range(nstep):
        y = rk4(y, r_grid[i], dr)
        if keep_all[i + 1]:
            stored[pos] = y
            pos += 1
    r_kept = r_grid[keep_all]
    tail_in_kept = keep[keep_all]
    deltas = np.empty(eps.size)
    amps = np.empty(eps.size)
    resid = np.empty(eps.size)
    for j in range(eps.size):
        a, d, rel, _ = asymptotic_fit(r_kept[tail_in_kept], stored[tail_in_kept, j, 0],
                                      float(eps[j]), charge=1.0)
        deltas[j] = d
        amps[j] = a
        resid[j] = rel
    radial = (r_kept, stored[:, :, 0]) if keep_radial else (None, None)
    return deltas, amps, resid, radial


def dump_channels(pair: ContinuumPair, path) -> None:
    """Debug CSV of the radial channels (r, psi0, psi1) per solution."""
    with open(path, "w") as fh:
        fh.write("r_bohr,sol1_psi0,sol1_psi1,sol2_psi0,sol2_psi1\n")
        s1, s2 = pair.states
        for i in range(len(s1.r)):
            fh.write(f"{s1.r[i]:.6f},{s1.psi0[i]:.10e},{s1.psi1[i]:.10e},"
                     f"{s2.psi0[i]:.10e},{s2.psi1[i]:.10e}\n")
