"""Circuit Hamiltonians for two inductively coupled heavy fluxonium qubits
with a flux-tunable coupler.

Four modes: qubit phases phi_a, phi_b and the coupler's antisymmetric /
symmetric combinations phi_minus, phi_plus.  Qubit modes are written in a
frame referenced to half a flux quantum, where external qubit flux enters
only through linear displacement terms, so the per-mode eigenproblems do not
depend on qubit flux; the coupler junction sees its reduced flux phi_c
directly.  External fluxes are in units of the flux quantum, energies in GHz.

The half-flux qubit frame uses +E_J cos(phi) together with the quadratic
inductive term, which reproduces the standard single-fluxonium Hamiltonian

    H = 4 E_C n^2 + (1/2) E_L (phi + 2 pi phi_ext)^2 - E_J cos(phi)

at phi_ext = 0.5 after the shift phi -> phi - pi; `fluxonium_hamiltonian`
implements that standard form directly and the test suite round-trips the
two conventions against each other at arbitrary flux.
"""

from dataclasses import dataclass

import numpy as np

from .operators import (
    charge_squared,
    cos_phi,
    embed,
    embed_pair,
    fix_eigenvector_signs,
    phase_operator,
)


@dataclass(frozen=True)
class FluxoniumParams:
    """Single-junction fluxonium energies (GHz): E_J, E_C, E_L."""

    e_j: float
    e_c: float
    e_l: float


@dataclass(frozen=True)
class CircuitParams:
    """Full-device energies.

    e_jc is the coupler junction, e_cc / e_cm the coupler charging energies
    entering the plus/minus mode combinations, e_l the coupler shunt
    inductance.  See `derived_coupler_params` for the physical mode values.
    """

    qubit_a: FluxoniumParams
    qubit_b: FluxoniumParams
    e_jc: float
    e_cc: float
    e_cm: float
    e_l: float


@dataclass(frozen=True)
class FluxPoint:
    """External fluxes in units of the flux quantum."""

    phi_a: float = 0.5
    phi_b: float = 0.5
    phi_c: float = 0.0


@dataclass(frozen=True)
class DerivedCouplerParams:
    """Physical coupler-mode energies derived from the circuit elements."""

    e_c_minus: float
    e_c_plus: float
    e_lc: float


def derived_coupler_params(params):
    """Charging/inductive energies of the coupler's plus and minus modes.

    E_C+ = 2 E_Cc,  E_C- = (1/E_Cm + 1/(2 E_Cc))^-1,
    E_Lc = ((E_La + E_Lb)/2 + E_L) / 2.
    """
    e_c_plus = 2.0 * params.e_cc
    e_c_minus = 1.0 / (1.0 / params.e_cm + 1.0 / (2.0 * params.e_cc))
    e_lc = 0.5 * (0.5 * (params.qubit_a.e_l + params.qubit_b.e_l) + params.e_l)
    return DerivedCouplerParams(e_c_minus, e_c_plus, e_lc)


def fluxonium_hamiltonian(params, phi_ext, dim=60):
    """Single fluxonium in its oscillator basis, standard flux convention.

    H = 4 E_C n^2 + (1/2) E_L (phi + 2 pi phi_ext)^2 - E_J cos(phi)
    """
    phi = phase_operator(params.e_c, params.e_l, dim)
    n2 = charge_squared(params.e_c, params.e_l, dim)
    off = 2.0 * np.pi * phi_ext
    ident = np.eye(dim)
    h = (4.0 * params.e_c * n2
         + 0.5 * params.e_l * (phi @ phi + 2.0 * off * phi + off * off * ident)
         - params.e_j * cos_phi(phi))
    return 0.5 * (h + h.T)


def qubit_mode_hamiltonian(params, dim=60):
    """Qubit mode in the half-flux frame: 4 E_C n^2 + E_L phi^2/2 + E_J cos phi."""
    phi = phase_operator(params.e_c, params.e_l, dim)
    n2 = charge_squared(params.e_c, params.e_l, dim)
    h = (4.0 * params.e_c * n2 + 0.5 * params.e_l * (phi @ phi)
         + params.e_j * cos_phi(phi))
    return 0.5 * (h + h.T)


def coupler_minus_hamiltonian(params, phi_c, dim=60):
    """Antisymmetric coupler mode: a fluxonium built on E_C-, E_Lc, E_Jc.

    H = 4 E_C- n^2 + (1/2) E_Lc phi^2 - E_Jc cos(phi + 2 pi phi_c)
    """
    d = derived_coupler_params(params)
    phi = phase_operator(d.e_c_minus, d.e_lc, dim)
    n2 = charge_squared(d.e_c_minus, d.e_lc, dim)
    h = (4.0 * d.e_c_minus * n2 + 0.5 * d.e_lc * (phi @ phi)
         - params.e_jc * cos_phi(phi, offset=2.0 * np.pi * phi_c))
    return 0.5 * (h + h.T)


def coupler_plus_hamiltonian(params, dim=60):
    """Symmetric coupler mode: harmonic, 4 E_C+ n^2 + (1/2) E_Lc phi^2."""
    d = derived_coupler_params(params)
    omega = np.sqrt(8.0 * d.e_c_plus * d.e_lc)
    return np.diag(omega * (np.arange(dim) + 0.5))


def _assemble(mode_hs, mode_phis, params, flux):
    """Joint Hamiltonian from per-mode pieces in any common mode bases.

    Mode order is (a, b, minus, plus).  Couplings:

        V = - (E_La/2) phi_a (phi_+ + phi_-) - (E_Lb/2) phi_b (phi_+ - phi_-)
            + sum_mu (E_Lmu/2) dphi_mu (-2 phi_mu + phi_+ + s_mu phi_-)

    with s_a = +1, s_b = -1 and dphi_mu = 2 pi (phi_mu - 0.5) the qubit flux
    displacement from the half-flux point in radians.
    """
    dims = tuple(m.shape[0] for m in mode_hs)
    phi_a, phi_b, phi_m, phi_p = mode_phis
    ela = params.qubit_a.e_l
    elb = params.qubit_b.e_l

    h = sum(embed(mode_hs[k], k, dims) for k in range(4))
    h = h - 0.5 * ela * (embed_pair(phi_a, 0, phi_p, 3, dims)
                         + embed_pair(phi_a, 0, phi_m, 2, dims))
    h = h - 0.5 * elb * (embed_pair(phi_b, 1, phi_p, 3, dims)
                         - embed_pair(phi_b, 1, phi_m, 2, dims))

    da = 2.0 * np.pi * (flux.phi_a - 0.5)
    db = 2.0 * np.pi * (flux.phi_b - 0.5)
    if da != 0.0:
        h = h + 0.5 * ela * da * (-2.0 * embed(phi_a, 0, dims)
                                  + embed(phi_p, 3, dims) + embed(phi_m, 2, dims))
    if db != 0.0:
        h = h + 0.5 * elb * db * (-2.0 * embed(phi_b, 1, dims)
                                  + embed(phi_p, 3, dims) - embed(phi_m, 2, dims))
    return 0.5 * (h + h.T)


def full_hamiltonian(params, flux, dims=(12, 12, 6, 6)):
    """Four-mode Hamiltonian in the raw oscillator product basis.

    Single-point validation path; `CircuitModel` is the production path with
    prediagonalized modes.  Returns a real symmetric (prod(dims), prod(dims))
    matrix.
    """
    d = derived_coupler_params(params)
    mode_hs = (
        qubit_mode_hamiltonian(params.qubit_a, dims[0]),
        qubit_mode_hamiltonian(params.qubit_b, dims[1]),
        coupler_minus_hamiltonian(params, flux.phi_c, dims[2]),
        coupler_plus_hamiltonian(params, dims[3]),
    )
    mode_phis = (
        phase_operator(params.qubit_a.e_c, params.qubit_a.e_l, dims[0]),
        phase_operator(params.qubit_b.e_c, params.qubit_b.e_l, dims[1]),
        phase_operator(d.e_c_minus, d.e_lc, dims[2]),
        phase_operator(d.e_c_plus, d.e_lc, dims[3]),
    )
    return _assemble(mode_hs, mode_phis, params, flux)


class _Mode:
    """Kept eigenbasis of one mode: eigenvalues and the phase operator."""

    __slots__ = ("evals", "phi")

    def __init__(self, evals, phi):
        self.evals = evals
        self.phi = phi


def _superdiagonal_sign_fix(phi):
    """Flip basis-state signs so <j-1|phi|j> >= 0 along the superdiagonal.

    Fixes the intra-mode phase convention; with it, matrix elements such as
    <0|phi|1> (and hence extracted coupling signs) are reproducible.
    """
    k = phi.shape[0]
    s = np.ones(k)
    for j in range(1, k):
        if abs(phi[j - 1, j]) > 1e-12:
            s[j] = s[j - 1] * np.sign(phi[j - 1, j])
        else:
            s[j] = s[j - 1]
    return s[:, None] * phi * s[None, :], s


def _prediagonalize(h, phi_full, keep):
    w, v = np.linalg.eigh(h)
    v = fix_eigenvector_signs(v[:, :keep])
    phi = v.T @ phi_full @ v
    phi, _ = _superdiagonal_sign_fix(0.5 * (phi + phi.T))
    return _Mode(w[:keep], phi)


class CircuitModel:
    """Hierarchical-basis device model.

    Each mode is diagonalized in a `ho_dim` oscillator basis and the lowest
    `keep` levels per mode span the joint problem, where the coupling terms
    are added and the dense real-symmetric matrix is diagonalized.  Qubit
    modes never depend on flux in this frame, and minus-mode bases are cached
    per coupler flux, so flux sweeps only rebuild the joint matrix.
    """

    def __init__(self, params, keep=(8, 8, 6, 4), ho_dim=48):
        self.params = params
        self.keep = tuple(keep)
        self.ho_dim = ho_dim
        self.derived = derived_coupler_params(params)
        self._mode_a = _prediagonalize(
            qubit_mode_hamiltonian(params.qubit_a, ho_dim),
            phase_operator(params.qubit_a.e_c, params.qubit_a.e_l, ho_dim),
            self.keep[0])
        self._mode_b = _prediagonalize(
            qubit_mode_hamiltonian(params.qubit_b, ho_dim),
            phase_operator(params.qubit_b.e_c, params.qubit_b.e_l, ho_dim),
            self.keep[1])
        self._plus = self._plus_mode()
        self._minus_cache = {}

    def _plus_mode(self):
        omega = np.sqrt(8.0 * self.derived.e_c_plus * self.derived.e_lc)
        k = self.keep[3]
        evals = omega * (np.arange(k) + 0.5)
        phi = phase_operator(self.derived.e_c_plus, self.derived.e_lc, k)
        return _Mode(evals, phi)

    def minus_mode(self, phi_c):
        """Kept eigenbasis of the minus mode at coupler flux phi_c (cached)."""
        mode = self._minus_cache.get(phi_c)
        if mode is None:
            h = coupler_minus_hamiltonian(self.params, phi_c, self.ho_dim)
            phi = phase_operator(self.derived.e_c_minus, self.derived.e_lc,
                                 self.ho_dim)
            mode = _prediagonalize(h, phi, self.keep[2])
            if len(self._minus_cache) > 512:
                self._minus_cache.clear()
            self._minus_cache[phi_c] = mode
        return mode

    @property
    def mode_a(self):
        return self._mode_a

    @property
    def mode_b(self):
        return self._mode_b

    @property
    def plus_mode(self):
        return self._plus

    def qubit_phi_01(self, which):
        """Phase matrix element <0|phi|1> of a bare qubit mode."""
        mode = self._mode_a if which == "a" else self._mode_b
        return mode.phi[0, 1]

    def hamiltonian(self, flux):
        """Real symmetric joint Hamiltonian at the given flux point."""
        mm = self.minus_mode(flux.phi_c)
        mode_hs = (np.diag(self._mode_a.evals), np.diag(self._mode_b.evals),
                   np.diag(mm.evals), np.diag(self._plus.evals))
        mode_phis = (self._mode_a.phi, self._mode_b.phi, mm.phi, self._plus.phi)
        return _assemble(mode_hs, mode_phis, self.params, flux)
