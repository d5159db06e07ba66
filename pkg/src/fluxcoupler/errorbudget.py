"""Per-gate error budget for the flux-driven gate set.

Covers the four native gates (sqrt-iSWAP driven at the qubit difference
frequency, sqrt-bSWAP at the sum, and the two single-qubit sqrt-X
pulses): second-order Magnus integrals of the counter-rotating drive
terms and the Bloch-Siegert shifts they imply, leading-order infidelity
polynomials, first-order decoherence estimates with Lindblad-simulated
cross-checks, carrier-envelope phase sweeps, RF-crosstalk propagator
errors, and assembly of the whole table.

Conventions: drive amplitudes are angular rates in rad/ns, frequencies
are MHz, durations ns, decoherence rates 1/us.  The drive envelope is a
Gaussian of width sigma = tau/4 centered at tau/2.  Frequencies handed
to the Magnus integrals are magnitudes; for single-qubit pulses the
"a" Bloch-Siegert slot carries the driven qubit's shift.
"""

import math
from dataclasses import dataclass

import numpy as np
import scipy.integrate
import scipy.linalg

from .config import GRID_UNIT_NS
from .dynamics import (TWO_PI_MHZ, ALL_CHANNELS, propagate_unitary,
                       propagate_lindblad)
from .errors import AccuracyError

ERF_SQRT2 = math.erf(math.sqrt(2.0))

GATE_KINDS = ("iswap", "bswap", "x90a", "x90b")
TWO_QUBIT_KINDS = ("iswap", "bswap")

#: default gate durations in ns, on the 1000/384 ns sequencer grid
DEFAULT_GATE_TIMES_NS = {
    "iswap": 99 * GRID_UNIT_NS,
    "bswap": 39 * GRID_UNIT_NS,
    "x90a": 32 * GRID_UNIT_NS,
    "x90b": 25 * GRID_UNIT_NS,
}

_I2 = np.eye(2)
_SX = np.array([[0.0, 1.0], [1.0, 0.0]])
_SY = np.array([[0.0, -1.0j], [1.0j, 0.0]])
_SZ = np.diag([1.0, -1.0])

XX = np.kron(_SX, _SX)
YY = np.kron(_SY, _SY).real          # real matrix
XA = np.kron(_SX, _I2)
YA = np.kron(_SY, _I2)
XB = np.kron(_I2, _SX)
YB = np.kron(_I2, _SY)

# swap-channel Paulis: minus couples |01><10|, plus couples |00><11|
SIGMA_X_MINUS = 0.5 * (XX + YY)
SIGMA_X_PLUS = 0.5 * (XX - YY)
SIGMA_Y_MINUS = np.zeros((4, 4), dtype=complex)
SIGMA_Y_MINUS[1, 2], SIGMA_Y_MINUS[2, 1] = -1j, 1j
SIGMA_Y_PLUS = np.zeros((4, 4), dtype=complex)
SIGMA_Y_PLUS[0, 3], SIGMA_Y_PLUS[3, 0] = -1j, 1j


def drive_frequency_mhz(kind, f_a_mhz, f_b_mhz):
    """Carrier frequency of a native gate: difference, sum, or qubit."""
    if kind == "iswap":
        return abs(f_a_mhz - f_b_mhz)
    if kind == "bswap":
        return f_a_mhz + f_b_mhz
    if kind == "x90a":
        return f_a_mhz
    if kind == "x90b":
        return f_b_mhz
    raise ValueError(f"unknown gate kind {kind!r}")


def gate_time_amplitude(tau_ns=None, amplitude=None):
    """Invert tau = sqrt(2 pi) / (A erf(sqrt 2)) either way.

    With the Gaussian envelope (sigma = tau/4, centered at tau/2) this
    relation makes the resonant first-order rotation angle exactly pi/4,
    i.e. a half swap on the driven channel or a sqrt-X pulse.  Amplitude
    is the peak angular drive rate in rad/ns.
    """
    if (tau_ns is None) == (amplitude is None):
        raise ValueError("give exactly one of tau_ns or amplitude")
    given = tau_ns if amplitude is None else amplitude
    if given <= 0:
        raise ValueError("tau_ns and amplitude must be positive")
    return math.sqrt(2.0 * math.pi) / (given * ERF_SQRT2)


def _envelope(t, tau):
    sigma = tau / 4.0
    return np.exp(-0.5 * ((t - tau / 2.0) / sigma) ** 2)


def envelope_area(tau_ns):
    """Closed-form integral of the Gaussian envelope over [0, tau]."""
    return tau_ns / 4.0 * math.sqrt(2.0 * math.pi) * ERF_SQRT2


@dataclass(frozen=True)
class MagnusResult:
    """First- and second-order Magnus coefficients of a driven pulse.

    alpha_minus/alpha_plus are the first-order rotation angles of the
    difference and sum channels (rad); beta_minus/beta_plus the
    second-order z coefficients; delta the deviation of the resonant
    alpha from pi/4.  The Bloch-Siegert shifts are (beta_+ +- beta_-)/tau
    by construction, reported in kHz.
    """

    alpha_minus: float
    alpha_plus: float
    beta_minus: float
    beta_plus: float
    delta: float
    tau_ns: float
    bloch_siegert_a_khz: float
    bloch_siegert_b_khz: float

    def __post_init__(self):
        for name in ("alpha_minus", "alpha_plus", "beta_minus", "beta_plus",
                     "delta", "tau_ns"):
            if not np.isfinite(getattr(self, name)):
                raise ValueError(f"{name} is not finite")

    @classmethod
    def from_integrals(cls, alpha_minus, alpha_plus, beta_minus, beta_plus,
                       delta, tau_ns):
        to_khz = 1e6 / (2.0 * np.pi)           # rad/ns -> kHz
        return cls(
            alpha_minus=alpha_minus, alpha_plus=alpha_plus,
            beta_minus=beta_minus, beta_plus=beta_plus,
            delta=delta, tau_ns=tau_ns,
            bloch_siegert_a_khz=(beta_plus + beta_minus) / tau_ns * to_khz,
            bloch_siegert_b_khz=(beta_plus - beta_minus) / tau_ns * to_khz)


def _adaptive_alpha(amplitude, tau, w_d, w, tolerance):
    def integrand(t):
        return amplitude * _envelope(t, tau) * np.cos(w_d * t) * np.cos(w * t)

    val, err = scipy.integrate.quad(integrand, 0.0, tau,
                                    epsabs=0.1 * tolerance, epsrel=1e-12,
                                    limit=800)
    if err > tolerance:
        raise AccuracyError("alpha integral did not reach tolerance")
    return val


def _adaptive_beta(amplitude, tau, w_d, w, tolerance):
    """Ordered double integral for one z coefficient, iterated quadrature.

    The integrand factorizes through sin(w (t2 - t1)) =
    Im[exp(-i w t1) exp(+i w t2)], so the inner integral is the running
    transform G(t) = int_0^t f cos(w_d t') exp(i w t') dt'.  The inner
    tolerance is kept ten times tighter than the outer one.
    """
    scale = amplitude * amplitude
    tol_outer = 0.1 * tolerance / scale
    tol_inner = 0.1 * tol_outer / max(tau, 1.0)
    inner_err = [0.0]

    def g_re(t):
        return _envelope(t, tau) * np.cos(w_d * t) * np.cos(w * t)

    def g_im(t):
        return _envelope(t, tau) * np.cos(w_d * t) * np.sin(w * t)

    def outer(t1):
        re, e1 = scipy.integrate.quad(g_re, 0.0, t1, epsabs=tol_inner,
                                      epsrel=1e-12, limit=800)
        im, e2 = scipy.integrate.quad(g_im, 0.0, t1, epsabs=tol_inner,
                                      epsrel=1e-12, limit=800)
        inner_err[0] = max(inner_err[0], e1, e2)
        # Im[conj(g(t1)) * G(t1)] with g = env cos(w_d t) e^{i w t}
        return _envelope(t1, tau) * np.cos(w_d * t1) * (
            np.cos(w * t1) * im - np.sin(w * t1) * re)

    val, err = scipy.integrate.quad(outer, 0.0, tau, epsabs=tol_outer,
                                    epsrel=1e-12, limit=800)
    total_err = scale * (err + inner_err[0] * tau)
    if total_err > tolerance:
        raise AccuracyError("beta integral did not reach tolerance")
    return scale * val


def magnus_integrals(amplitude, tau_ns, f_d_mhz, omega_sum_mhz,
                     omega_diff_mhz, tolerance=1e-8):
    """First two Magnus orders of the driven two-channel Hamiltonian.

    alpha_pm = int A f cos(w_d t) cos(w_pm t) dt and the ordered double
    integrals beta_pm, via adaptive quadrature to the given absolute
    tolerance (rad).  delta is measured against the resonant channel,
    chosen as the one nearer the drive frequency (difference wins ties,
    which also covers single-qubit pulses where all three coincide).
    """
    w_d = TWO_PI_MHZ * f_d_mhz
    w_p = TWO_PI_MHZ * omega_sum_mhz
    w_m = TWO_PI_MHZ * omega_diff_mhz
    alpha_m = _adaptive_alpha(amplitude, tau_ns, w_d, w_m, tolerance)
    alpha_p = _adaptive_alpha(amplitude, tau_ns, w_d, w_p, tolerance)
    beta_m = _adaptive_beta(amplitude, tau_ns, w_d, w_m, tolerance)
    beta_p = _adaptive_beta(amplitude, tau_ns, w_d, w_p, tolerance)
    if abs(f_d_mhz - omega_diff_mhz) <= abs(f_d_mhz - omega_sum_mhz):
        delta = alpha_m - np.pi / 4.0
    else:
        delta = alpha_p - np.pi / 4.0
    return MagnusResult.from_integrals(alpha_m, alpha_p, beta_m, beta_p,
                                       delta, tau_ns)


def magnus_beta_brute(amplitude, tau_ns, f_d_mhz, omega_mhz, points=1_000_000):
    """Fixed-grid Riemann oracle for one beta double integral.

    Midpoint rule on a uniform grid of `points` samples per axis over the
    ordered triangle t2 < t1, evaluated through exact prefix sums of the
    factorized integrand.  Deliberately adaptive-free as an independent
    check on the quadrature route.
    """
    w_d = TWO_PI_MHZ * f_d_mhz
    w = TWO_PI_MHZ * omega_mhz
    h = tau_ns / points
    t = (np.arange(points) + 0.5) * h
    g = _envelope(t, tau_ns) * np.cos(w_d * t) * np.exp(1j * w * t)
    prefix = np.concatenate(([0.0], np.cumsum(g)[:-1]))   # sum over t2 < t1
    total = np.sum(np.conj(g) * prefix)
    return amplitude * amplitude * h * h * float(np.imag(total))


def pedersen_fidelity(u, u_target):
    """Average-gate fidelity (Tr[U+U] + |Tr[UT+ U]|^2) / (d (d+1))."""
    u = np.asarray(u)
    u_target = np.asarray(u_target)
    if u.shape != u_target.shape or u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise ValueError("operators must be square and of equal dimension")
    d = u.shape[0]
    overlap = np.trace(u_target.conj().T @ u)
    return float((np.trace(u.conj().T @ u).real + abs(overlap) ** 2)
                 / (d * (d + 1)))


def leading_order_infidelity(result, kind):
    """Quoted small-error polynomial for 1 - F of a native gate.

    Two-qubit kinds use (2/5)(spurious^2 + delta^2 + beta^2 terms); the
    single-qubit kinds use 4 beta^2/(3 pi^2) + delta^2/6 with the
    doubled single-qubit alpha/beta bookkeeping.
    """
    if kind == "iswap":
        delta = result.alpha_minus - np.pi / 4.0
        return 0.4 * (result.alpha_plus ** 2 + delta ** 2
                      + result.beta_plus ** 2
                      + 8.0 / np.pi ** 2 * result.beta_minus ** 2)
    if kind == "bswap":
        delta = result.alpha_plus - np.pi / 4.0
        return 0.4 * (result.alpha_minus ** 2 + delta ** 2
                      + result.beta_minus ** 2
                      + 8.0 / np.pi ** 2 * result.beta_plus ** 2)
    if kind in ("x90a", "x90b"):
        beta = result.beta_plus + result.beta_minus
        delta = result.alpha_plus + result.alpha_minus - np.pi / 2.0
        return 4.0 * beta ** 2 / (3.0 * np.pi ** 2) + delta ** 2 / 6.0
    raise ValueError(f"unknown gate kind {kind!r}")


def magnus_for_gate(kind, tau_ns, f_a_mhz, f_b_mhz, tolerance=1e-8):
    """MagnusResult for a native gate at its standard drive frequency."""
    amplitude = gate_time_amplitude(tau_ns=tau_ns)
    f_d = drive_frequency_mhz(kind, f_a_mhz, f_b_mhz)
    if kind in TWO_QUBIT_KINDS:
        w_sum, w_diff = f_a_mhz + f_b_mhz, abs(f_a_mhz - f_b_mhz)
    else:
        w_sum = w_diff = f_d
    return magnus_integrals(amplitude, tau_ns, f_d, w_sum, w_diff, tolerance)


# ---------------------------------------------------------------------------
# decoherence

def decoherence_infidelity(rates, tau_ns, dim=4):
    """First-order decoherence infidelity, split by channel.

    Total is d/(2(d+1)) tau sum_mu (Gamma1 + Gammaphi); the per-channel
    entries assign Gamma1/2 each to decay and heating (the collapse set
    splits T1 equally between them) and Gammaphi to dephasing, so they
    sum to the total exactly.
    """
    pref = dim / (2.0 * (dim + 1.0)) * tau_ns * 1e-3     # rates are 1/us
    g1 = rates.gamma1_a + rates.gamma1_b
    gphi = rates.gammaphi_a + rates.gammaphi_b
    out = {
        "decay": pref * g1 / 2.0,
        "heating": pref * g1 / 2.0,
        "dephasing": pref * gphi,
    }
    out["total"] = out["decay"] + out["heating"] + out["dephasing"]
    return out


_RWA_GENERATORS = {
    "iswap": 0.25 * (XX + YY),
    "bswap": 0.25 * (XX - YY),
    "x90a": 0.5 * XA,
    "x90b": 0.5 * XB,
}


def mub_states():
    """The 20 states of the five mutually unbiased bases of two qubits.

    Joint eigenbases of the five maximal commuting Pauli classes
    {ZI,IZ}, {XI,IX}, {YI,IY}, {XY,YZ}, {YX,ZY}; the twenty states form
    a projective 2-design, so their mean state fidelity under a channel
    equals the average gate fidelity.
    """
    pauli = {"i": _I2, "x": _SX, "y": _SY, "z": _SZ}

    def two(label):
        return np.kron(pauli[label[0]], pauli[label[1]])

    states = []
    for g1, g2 in (("zi", "iz"), ("xi", "ix"), ("yi", "iy"),
                   ("xy", "yz"), ("yx", "zy")):
        _, vecs = np.linalg.eigh(two(g1) + 0.5 * two(g2))
        states.extend(vecs[:, k] for k in range(4))
    return np.array(states)


_MUB_CACHE = None


def _mub():
    global _MUB_CACHE
    if _MUB_CACHE is None:
        _MUB_CACHE = mub_states()
    return _MUB_CACHE


def rwa_target(kind, tau_ns):
    """Ideal gate generated by the envelope-only RWA drive."""
    theta = gate_time_amplitude(tau_ns=tau_ns) * envelope_area(tau_ns) / 2.0
    return scipy.linalg.expm(-1j * theta * 2.0 * _RWA_GENERATORS[kind])


def lindblad_gate_infidelity(kind, tau_ns, rates, channels=ALL_CHANNELS,
                             tolerance=1e-8):
    """Average-gate infidelity of the RWA pulse under selected collapse
    channels, by propagating the 20-state 2-design and averaging state
    fidelities against the ideal gate."""
    amplitude = gate_time_amplitude(tau_ns=tau_ns)
    gen = _RWA_GENERATORS[kind]

    def h_of_t(times):
        g = amplitude * _envelope(np.atleast_1d(times), tau_ns)
        return g[:, None, None] * gen[None]

    target = rwa_target(kind, tau_ns)
    fids = []
    for psi in _mub():
        rho0 = np.outer(psi, psi.conj())
        rho = propagate_lindblad(h_of_t, rates, rho0, tau_ns,
                                 tolerance=tolerance, channels=channels)
        ideal = target @ psi
        fids.append(np.real(ideal.conj() @ rho @ ideal))
    return max(1.0 - float(np.mean(fids)), 0.0)


# ---------------------------------------------------------------------------
# rotating-frame propagation (counter-rotating terms retained)

def rotating_frame_drive(kind, amplitude, tau_ns, f_a_mhz, f_b_mhz,
                         theta_ce=0.0, crosstalk=None):
    """Drive Hamiltonian in the frame rotating with both qubits.

    Two-qubit kinds act on the full 4-dim space through both swap
    channels; single-qubit kinds return the driven qubit's 2-dim problem.
    A CrosstalkModel adds sigma_x lines on the qubits sharing the gate
    carrier and envelope (net of any compensation tone).
    """
    w_d = TWO_PI_MHZ * drive_frequency_mhz(kind, f_a_mhz, f_b_mhz)
    w_a = TWO_PI_MHZ * f_a_mhz
    w_b = TWO_PI_MHZ * f_b_mhz

    if kind in TWO_QUBIT_KINDS:
        w_m = TWO_PI_MHZ * abs(f_a_mhz - f_b_mhz)
        w_p = TWO_PI_MHZ * (f_a_mhz + f_b_mhz)
        sx_m, sx_p = SIGMA_X_MINUS, SIGMA_X_PLUS
        sy_m, sy_p = SIGMA_Y_MINUS, SIGMA_Y_PLUS
        lines = []
        if crosstalk is not None:
            za, zb = crosstalk.line_phasors()
            for z, kappa, w_q, sx, sy in (
                    (za, crosstalk.kappa_a_mhz_per_phi0, w_a, XA, YA),
                    (zb, crosstalk.kappa_b_mhz_per_phi0, w_b, XB, YB)):
                omega = TWO_PI_MHZ * abs(z) * kappa
                if omega != 0.0:
                    lines.append((omega, float(np.angle(z)), w_q, sx, sy))

        def h_of_t(times):
            t = np.atleast_1d(np.asarray(times, dtype=float))
            g = _envelope(t, tau_ns)
            carrier = np.cos(w_d * t + theta_ce)
            j = amplitude * g * carrier
            h = (j[:, None, None]
                 * (np.cos(w_m * t)[:, None, None] * sx_m
                    + np.sin(w_m * t)[:, None, None] * sy_m
                    + np.cos(w_p * t)[:, None, None] * sx_p
                    + np.sin(w_p * t)[:, None, None] * sy_p))
            for omega, phase, w_q, sx, sy in lines:
                amp = omega * g * np.cos(w_d * t + theta_ce + phase)
                h = h + (amp[:, None, None]
                         * (np.cos(w_q * t)[:, None, None] * sx
                            + np.sin(w_q * t)[:, None, None] * sy))
            return h

        h_of_t.carrier_rad_per_ns = w_d + w_p
        return h_of_t

    w_q = w_a if kind == "x90a" else w_b

    def h_of_t(times):
        t = np.atleast_1d(np.asarray(times, dtype=float))
        j = amplitude * _envelope(t, tau_ns) * np.cos(w_d * t + theta_ce)
        return (j[:, None, None]
                * (np.cos(w_q * t)[:, None, None] * _SX
                   + np.sin(w_q * t)[:, None, None] * _SY))

    h_of_t.carrier_rad_per_ns = w_d + w_q
    return h_of_t


def _clean_target(kind, tau_ns):
    if kind in TWO_QUBIT_KINDS:
        return rwa_target(kind, tau_ns)
    theta = gate_time_amplitude(tau_ns=tau_ns) * envelope_area(tau_ns) / 2.0
    return scipy.linalg.expm(-1j * theta * _SX)


def simulated_beyond_rwa(kind, tau_ns, f_a_mhz, f_b_mhz, theta_ce=0.0,
                         tolerance=1e-10):
    """Propagator infidelity of the full rotating-frame drive (all
    counter-rotating terms kept) against the RWA-ideal gate."""
    amplitude = gate_time_amplitude(tau_ns=tau_ns)
    h = rotating_frame_drive(kind, amplitude, tau_ns, f_a_mhz, f_b_mhz,
                             theta_ce=theta_ce)
    u = propagate_unitary(h, tau_ns, tolerance=tolerance)
    return max(1.0 - pedersen_fidelity(u, _clean_target(kind, tau_ns)), 0.0)


def crosstalk_infidelity(kind, crosstalk, tau_ns, f_a_mhz, f_b_mhz,
                         tolerance=1e-10):
    """Propagator infidelity with spurious qubit-line drives included.

    The crosstalk tones share the gate carrier and envelope; their
    amplitudes are the net line flux (after compensation) times the
    line's flux-to-rate conversion.  With zero crosstalk this reduces to
    the clean beyond-RWA infidelity exactly.
    """
    if kind not in TWO_QUBIT_KINDS:
        raise ValueError("crosstalk model applies to the two-qubit kinds")
    amplitude = gate_time_amplitude(tau_ns=tau_ns)
    h = rotating_frame_drive(kind, amplitude, tau_ns, f_a_mhz, f_b_mhz,
                             crosstalk=crosstalk)
    u = propagate_unitary(h, tau_ns, tolerance=tolerance)
    return max(1.0 - pedersen_fidelity(u, _clean_target(kind, tau_ns)), 0.0)


def simulated_bloch_siegert(kind, tau_ns, f_a_mhz, f_b_mhz,
                            amplitude_scale=0.1, tolerance=1e-10):
    """Bloch-Siegert shifts read off a simulated propagator, in kHz.

    Runs the rotating-frame drive at a reduced amplitude (where the
    second-order estimate is accurate), extracts the accumulated z
    phases from the diagonal of the propagator, and divides by the gate
    time.  Compare against a MagnusResult at the same scaled amplitude.
    """
    amplitude = amplitude_scale * gate_time_amplitude(tau_ns=tau_ns)
    h = rotating_frame_drive(kind, amplitude, tau_ns, f_a_mhz, f_b_mhz)
    u = propagate_unitary(h, tau_ns, tolerance=tolerance)
    p = np.angle(np.diag(u))
    to_khz = 1e6 / (2.0 * np.pi)
    if kind in TWO_QUBIT_KINDS:
        za = 0.5 * (p[2] + p[3] - p[0] - p[1])
        zb = 0.5 * (p[1] + p[3] - p[0] - p[2])
        return za / tau_ns * to_khz, zb / tau_ns * to_khz
    return (p[1] - p[0]) / tau_ns * to_khz, 0.0


# ---------------------------------------------------------------------------
# carrier-envelope phase sweep

@dataclass(frozen=True)
class CarrierEnvelopeSweep:
    thetas: np.ndarray
    infidelity: np.ndarray
    mean_excess: float
    max_excess: float


def _dense_grid(tau_ns, n=1 << 16):
    t = np.linspace(0.0, tau_ns, n + 1)
    return t, _envelope(t, tau_ns)


def _single_components(amplitude, tau_ns, w_d, w, t, env):
    """Base integrals for the complex resonant amplitude vs theta_CE."""
    phase = np.exp(1j * w * t)
    i_cos = scipy.integrate.simpson(env * np.cos(w_d * t) * phase, x=t)
    i_sin = scipy.integrate.simpson(env * np.sin(w_d * t) * phase, x=t)
    return amplitude * i_cos, amplitude * i_sin


def _beta_components(amplitude, tau_ns, w_d, w, t, env):
    """Base double integrals (cc, cs, sc, ss) for beta vs theta_CE.

    With cos(w_d t + theta) expanded, beta(theta) =
    cos^2 cc - sin cos (cs + sc) + sin^2 ss over these four kernels.
    """
    phase = np.exp(1j * w * t)
    gc = env * np.cos(w_d * t) * phase
    gs = env * np.sin(w_d * t) * phase

    def running(g):
        # cumulative_simpson truncates complex input, so cumulate the
        # quadratures separately
        return (scipy.integrate.cumulative_simpson(g.real, x=t, initial=0.0)
                + 1j * scipy.integrate.cumulative_simpson(
                    g.imag, x=t, initial=0.0))

    big_gc, big_gs = running(gc), running(gs)
    scale = amplitude * amplitude

    def combine(outer, inner):
        return scale * scipy.integrate.simpson(
            np.imag(np.conj(outer) * inner), x=t)

    return (combine(gc, big_gc), combine(gc, big_gs),
            combine(gs, big_gc), combine(gs, big_gs))


def carrier_envelope_sweep(kind, tau_ns, f_a_mhz, f_b_mhz, n_points=24,
                           thetas=None):
    """Leading-order infidelity versus carrier-envelope phase.

    For each theta the resonant rotation axis moves with the carrier, so
    the deviation is measured against the rotated axis: delta uses the
    magnitude of the complex resonant amplitude, the spurious channel
    its complex magnitude, and the raw z coefficients enter unchanged.
    Reports the average and maximum excess over the best phase.
    """
    if thetas is None:
        thetas = np.linspace(0.0, 2.0 * np.pi, n_points, endpoint=False)
    thetas = np.asarray(thetas, dtype=float)
    if thetas.size < 16:
        raise ValueError("need at least 16 carrier-envelope phases")

    amplitude = gate_time_amplitude(tau_ns=tau_ns)
    w_d = TWO_PI_MHZ * drive_frequency_mhz(kind, f_a_mhz, f_b_mhz)
    t, env = _dense_grid(tau_ns)
    cos_t, sin_t = np.cos(thetas), np.sin(thetas)

    def alpha_mag(w):
        a_c, a_s = _single_components(amplitude, tau_ns, w_d, w, t, env)
        return np.abs(cos_t * a_c - sin_t * a_s)

    def beta_curve(w):
        cc, cs, sc, ss = _beta_components(amplitude, tau_ns, w_d, w, t, env)
        return (cos_t ** 2 * cc - cos_t * sin_t * (cs + sc)
                + sin_t ** 2 * ss)

    if kind in TWO_QUBIT_KINDS:
        w_m = TWO_PI_MHZ * abs(f_a_mhz - f_b_mhz)
        w_p = TWO_PI_MHZ * (f_a_mhz + f_b_mhz)
        beta_m, beta_p = beta_curve(w_m), beta_curve(w_p)
        if kind == "iswap":
            delta = alpha_mag(w_m) - np.pi / 4.0
            spur = alpha_mag(w_p)
            curve = 0.4 * (spur ** 2 + delta ** 2 + beta_p ** 2
                           + 8.0 / np.pi ** 2 * beta_m ** 2)
        else:
            delta = alpha_mag(w_p) - np.pi / 4.0
            spur = alpha_mag(w_m)
            curve = 0.4 * (spur ** 2 + delta ** 2 + beta_m ** 2
                           + 8.0 / np.pi ** 2 * beta_p ** 2)
    else:
        w_q = w_d
        delta = 2.0 * (alpha_mag(w_q) - np.pi / 4.0)
        beta = 2.0 * beta_curve(w_q)
        curve = 4.0 * beta ** 2 / (3.0 * np.pi ** 2) + delta ** 2 / 6.0

    best = float(np.min(curve))
    return CarrierEnvelopeSweep(
        thetas=thetas, infidelity=curve,
        mean_excess=float(np.mean(curve) - best),
        max_excess=float(np.max(curve) - best))


# ---------------------------------------------------------------------------
# optional higher-order drive operators

_ROTATING_SINGLES = {
    "ix": (None, "x"), "xi": ("x", None),
    "zx": ("z", "x"), "xz": ("x", "z"),
    "iy": (None, "y"), "yi": ("y", None),
}


def higher_order_excess(kind, coefficients, tau_ns, f_a_mhz, f_b_mhz,
                        tolerance=1e-10):
    """Infidelity added by extra drive-operator components.

    coefficients maps two-qubit Pauli labels from {ix, xi, zx, xz, iy,
    yi} to their relative drive weight; each named operator is added to
    the coupler drive with the shared envelope and carrier, and the
    infidelity increase over the clean pulse is returned.
    """
    if kind not in TWO_QUBIT_KINDS:
        raise ValueError("higher-order drive terms apply to two-qubit kinds")
    for label in coefficients:
        if label not in _ROTATING_SINGLES:
            raise ValueError(f"unsupported drive operator {label!r}")
    amplitude = gate_time_amplitude(tau_ns=tau_ns)
    base = rotating_frame_drive(kind, amplitude, tau_ns, f_a_mhz, f_b_mhz)
    w_d = TWO_PI_MHZ * drive_frequency_mhz(kind, f_a_mhz, f_b_mhz)
    w = {"a": TWO_PI_MHZ * f_a_mhz, "b": TWO_PI_MHZ * f_b_mhz}

    def rotated(label, t):
        ops = []
        for which, single in zip("ab", _ROTATING_SINGLES[label]):
            if single is None:
                ops.append(np.broadcast_to(_I2, (t.size, 2, 2)))
            elif single == "z":
                ops.append(np.broadcast_to(_SZ + 0j, (t.size, 2, 2)))
            else:
                c = np.cos(w[which] * t)[:, None, None]
                s = np.sin(w[which] * t)[:, None, None]
                base_op = _SX if single == "x" else _SY
                quad_op = _SY if single == "x" else -_SX
                ops.append(c * base_op + s * quad_op)
        return np.einsum("nij,nkl->nikjl", ops[0], ops[1]).reshape(-1, 4, 4)

    def h_of_t(times):
        t = np.atleast_1d(np.asarray(times, dtype=float))
        j = amplitude * _envelope(t, tau_ns) * np.cos(w_d * t)
        h = base(t)
        for label, coeff in coefficients.items():
            h = h + (coeff * j)[:, None, None] * rotated(label, t)
        return h

    h_of_t.carrier_rad_per_ns = base.carrier_rad_per_ns
    u = propagate_unitary(h_of_t, tau_ns, tolerance=tolerance)
    with_extra = max(1.0 - pedersen_fidelity(u, _clean_target(kind, tau_ns)),
                     0.0)
    clean = simulated_beyond_rwa(kind, tau_ns, f_a_mhz, f_b_mhz,
                                 tolerance=tolerance)
    return max(with_extra - clean, 0.0)


# ---------------------------------------------------------------------------
# budget assembly

CHANNELS = ("decay", "heating", "dephasing", "beyond_rwa",
            "carrier_envelope", "higher_order_drive")
TOTALS = ("estimated_decoherence", "simulated_all", "measured")


@dataclass(frozen=True)
class BudgetEntry:
    analytic: float | None
    simulated: float | None


@dataclass(frozen=True)
class ErrorBudget:
    """Per-gate error table: channels x {analytic, simulated} + totals."""

    gates: tuple
    entries: dict     # (gate, channel) -> BudgetEntry
    totals: dict      # (gate, total name) -> float | None

    def validate(self):
        for entry in self.entries.values():
            for value in (entry.analytic, entry.simulated):
                if value is not None and value < 0.0:
                    raise ValueError("negative budget entry")
        for gate in self.gates:
            est = self.totals[(gate, "estimated_decoherence")]
            sim = self.totals[(gate, "simulated_all")]
            for channel in CHANNELS:
                entry = self.entries[(gate, channel)]
                if (est is not None and entry.analytic is not None
                        and channel in ("decay", "heating", "dephasing")
                        and entry.analytic > est + 1e-12):
                    raise ValueError("analytic total below a component")
                if (sim is not None and entry.simulated is not None
                        and entry.simulated > sim + 1e-12):
                    raise ValueError("simulated total below a component")
        return self

    def to_json_dict(self):
        channels = {}
        for gate in self.gates:
            channels[gate] = {
                ch: {"analytic": self.entries[(gate, ch)].analytic,
                     "simulated": self.entries[(gate, ch)].simulated}
                for ch in CHANNELS}
        totals = {gate: {name: self.totals[(gate, name)] for name in TOTALS}
                  for gate in self.gates}
        return {"gates": list(self.gates), "channels": channels,
                "totals": totals,
                "provenance": {"analytic": "closed-form first-order estimates",
                               "simulated": "propagator and Lindblad runs"}}

    def table_text(self):
        def cell(entry):
            left = "-" if entry.analytic is None else f"{entry.analytic:.2e}"
            right = ("-" if entry.simulated is None
                     else f"({entry.simulated:.2e})")
            return f"{left} {right}"

        width = 24
        lines = ["error source".ljust(width)
                 + "".join(g.ljust(width) for g in self.gates)]
        for ch in CHANNELS:
            lines.append(ch.ljust(width) + "".join(
                cell(self.entries[(g, ch)]).ljust(width) for g in self.gates))
        for name in TOTALS:
            row = []
            for g in self.gates:
                value = self.totals[(g, name)]
                row.append(("-" if value is None else f"{value:.2e}")
                           .ljust(width))
            lines.append(name.ljust(width) + "".join(row))
        return "\n".join(lines)


def assemble_error_budget(rates, gates=GATE_KINDS, tau_ns_by_gate=None,
                          f_a_mhz=48.4, f_b_mhz=61.8, simulate=True,
                          higher_order_coeffs=None, measured=None,
                          ce_points=24, tolerance=1e-8):
    """Build the full per-gate error table.

    Analytic cells come from the first-order decoherence formula and the
    leading-order Magnus polynomial; simulated cells from channel-at-a-
    time Lindblad runs and rotating-frame propagators.  The simulated
    total composes the joint-decoherence run with the beyond-RWA and
    carrier-envelope contributions (these are additive at this error
    scale).  Missing pieces - simulate=False, absent higher-order
    coefficients, single-qubit carrier-envelope cells, or absent
    measured values - are left as explicit gaps.
    """
    taus = dict(DEFAULT_GATE_TIMES_NS)
    if tau_ns_by_gate:
        taus.update(tau_ns_by_gate)
    measured = measured or {}
    entries = {}
    totals = {}
    for gate in gates:
        tau = taus[gate]
        dec = decoherence_infidelity(rates, tau)
        result = magnus_for_gate(gate, tau, f_a_mhz, f_b_mhz, tolerance)
        analytic_rwa = leading_order_infidelity(result, gate)

        sims = {}
        joint = None
        beyond = None
        ce = None
        higher = None
        if simulate:
            for channel in ALL_CHANNELS:
                sims[channel] = lindblad_gate_infidelity(
                    gate, tau, rates, channels=(channel,))
            joint = lindblad_gate_infidelity(gate, tau, rates)
            beyond = simulated_beyond_rwa(gate, tau, f_a_mhz, f_b_mhz)
            if gate in TWO_QUBIT_KINDS:
                ce = carrier_envelope_sweep(gate, tau, f_a_mhz, f_b_mhz,
                                            n_points=ce_points).mean_excess
                if higher_order_coeffs:
                    higher = higher_order_excess(gate, higher_order_coeffs,
                                                 tau, f_a_mhz, f_b_mhz)

        entries[(gate, "decay")] = BudgetEntry(dec["decay"],
                                               sims.get("decay"))
        entries[(gate, "heating")] = BudgetEntry(dec["heating"],
                                                 sims.get("heating"))
        entries[(gate, "dephasing")] = BudgetEntry(dec["dephasing"],
                                                   sims.get("dephasing"))
        entries[(gate, "beyond_rwa")] = BudgetEntry(analytic_rwa, beyond)
        entries[(gate, "carrier_envelope")] = BudgetEntry(None, ce)
        entries[(gate, "higher_order_drive")] = BudgetEntry(None, higher)

        totals[(gate, "estimated_decoherence")] = dec["total"]
        if simulate:
            totals[(gate, "simulated_all")] = (
                joint + beyond + (ce or 0.0) + (higher or 0.0))
        else:
            totals[(gate, "simulated_all")] = None
        totals[(gate, "measured")] = measured.get(gate)
    return ErrorBudget(gates=tuple(gates), entries=entries,
                       totals=totals).validate()
