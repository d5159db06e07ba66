"""Time-domain dynamics of the two qubits in the computational subspace.

The effective model is a pair of two-level systems with an XX flux drive:

    H(t) = omega_a n_a + omega_b n_b
           + J_ac f(t) cos(omega_d t + theta_CE) sigma_x^a sigma_x^b
           + sum_mu Omega_ct,mu f(t) cos(omega_d t + ...) sigma_x^mu

in angular units (rad/ns) internally; all public frequencies are plain MHz.
Basis order is |n_a n_b> = 00, 01, 10, 11.  Propagation uses a
commutator-free fourth-order Magnus scheme on batched 4x4 exponentials,
with step doubling until the propagator settles.
"""

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg

from .errors import AccuracyError, CalibrationError

TWO_PI_MHZ = 2e-3 * np.pi            # MHz -> rad/ns

_I2 = np.eye(2)
_SX = np.array([[0.0, 1.0], [1.0, 0.0]])
_N1 = np.array([[0.0, 0.0], [0.0, 1.0]])
XX = np.kron(_SX, _SX)
XA = np.kron(_SX, _I2)
XB = np.kron(_I2, _SX)
NA = np.kron(_N1, _I2)
NB = np.kron(_I2, _N1)

_ENVELOPES = ("gaussian", "flat", "gaussian_derivative")


@dataclass(frozen=True)
class DrivePulse:
    """One flux-drive pulse on the coupler line.

    amplitude is the peak coupling rate in MHz when mode="rate", or the
    peak flux excursion in Phi0 when mode="flux" (converted through the
    cached dJ/dphi_c slope).  The gaussian envelope has sigma = tau/4 and
    is supported on [0, tau]; "gaussian_derivative" adds the scaled
    envelope derivative on the carrier quadrature.
    """

    amplitude: float
    f_d_mhz: float
    tau_ns: float
    theta_ce: float = 0.0
    envelope: str = "gaussian"
    derivative_coefficient: float = 0.0
    mode: str = "rate"
    slope_mhz_per_phi0: float = None

    def __post_init__(self):
        if not self.tau_ns > 0:
            raise ValueError("pulse duration must be positive")
        if self.envelope not in _ENVELOPES:
            raise ValueError(f"unknown envelope {self.envelope!r}")
        if self.mode not in ("rate", "flux"):
            raise ValueError(f"unknown drive mode {self.mode!r}")
        if self.mode == "flux":
            if self.slope_mhz_per_phi0 is None or \
                    not np.isfinite(self.slope_mhz_per_phi0):
                raise ValueError(
                    "flux-mode pulses need a finite dJ/dphi_c slope")

    def j_ac_mhz(self):
        """Peak XX coupling rate in MHz."""
        if self.mode == "flux":
            return self.amplitude * self.slope_mhz_per_phi0
        return self.amplitude

    def envelope_value(self, t):
        t = np.asarray(t, dtype=float)
        if self.envelope == "flat":
            return np.ones_like(t)
        sigma = self.tau_ns / 4.0
        return np.exp(-0.5 * ((t - self.tau_ns / 2.0) / sigma) ** 2)

    def quadrature_value(self, t):
        """Envelope-derivative correction riding the carrier quadrature."""
        t = np.asarray(t, dtype=float)
        if self.envelope != "gaussian_derivative":
            return np.zeros_like(t)
        sigma = self.tau_ns / 4.0
        g = np.exp(-0.5 * ((t - self.tau_ns / 2.0) / sigma) ** 2)
        return self.derivative_coefficient * (-(t - self.tau_ns / 2.0)
                                              / sigma ** 2) * g

    def envelope_integral(self):
        """Integral of the in-phase envelope over [0, tau] in ns."""
        if self.envelope == "flat":
            return self.tau_ns
        sigma = self.tau_ns / 4.0
        from scipy.special import erf
        return sigma * np.sqrt(2.0 * np.pi) * erf(np.sqrt(2.0))


@dataclass(frozen=True)
class DecoherenceRates:
    """Decay and pure-dephasing rates per qubit, in 1/us."""

    gamma1_a: float
    gamma1_b: float
    gammaphi_a: float
    gammaphi_b: float

    def __post_init__(self):
        for name in ("gamma1_a", "gamma1_b", "gammaphi_a", "gammaphi_b"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")

    @classmethod
    def from_coherence_times(cls, t1_a_us, t2_a_us, t1_b_us, t2_b_us):
        """Build rates from T1 and T2; T2 may not exceed 2 T1."""
        for t1, t2, which in ((t1_a_us, t2_a_us, "a"), (t1_b_us, t2_b_us, "b")):
            if t2 > 2.0 * t1:
                raise ValueError(
                    f"qubit {which}: T2 = {t2} exceeds the 2*T1 = {2*t1} limit")
        return cls(
            gamma1_a=1.0 / t1_a_us, gamma1_b=1.0 / t1_b_us,
            gammaphi_a=1.0 / t2_a_us - 0.5 / t1_a_us,
            gammaphi_b=1.0 / t2_b_us - 0.5 / t1_b_us)

    def zeroed(self):
        return DecoherenceRates(0.0, 0.0, 0.0, 0.0)


@dataclass(frozen=True)
class CrosstalkModel:
    """Spurious RF flux reaching the qubit lines during a coupler drive.

    xi is the peak spurious flux (Phi0) per line; kappa converts flux to a
    sigma_x drive rate (MHz per Phi0, = 2 pi E_L |<0|phi|1>| x 1000 for
    the device qubits).  Compensation is an extra tone on the same line
    with its own phase and amplitude.
    """

    xi_a: float = 0.0
    xi_b: float = 0.0
    kappa_a_mhz_per_phi0: float = 0.0
    kappa_b_mhz_per_phi0: float = 0.0
    comp_phase_a: float = 0.0
    comp_amp_a: float = 0.0
    comp_phase_b: float = 0.0
    comp_amp_b: float = 0.0

    def __post_init__(self):
        if abs(self.xi_a) >= 0.1 or abs(self.xi_b) >= 0.1:
            raise ValueError("spurious flux amplitude must stay below 0.1 Phi0")

    def line_phasors(self):
        """Net (complex amplitude in Phi0) per line after compensation."""
        za = self.xi_a + self.comp_amp_a * np.exp(1j * self.comp_phase_a)
        zb = self.xi_b + self.comp_amp_b * np.exp(1j * self.comp_phase_b)
        return za, zb


def drive_hamiltonian(pulse, f_a_mhz, f_b_mhz, crosstalk=None):
    """Lab-frame H(t) builder for an XX drive plus optional line crosstalk.

    Returns a callable taking an array of times (ns) and returning stacked
    (n, 4, 4) hermitian matrices in rad/ns.
    """
    wa = TWO_PI_MHZ * f_a_mhz
    wb = TWO_PI_MHZ * f_b_mhz
    wd = TWO_PI_MHZ * pulse.f_d_mhz
    j = TWO_PI_MHZ * pulse.j_ac_mhz()
    h0 = wa * NA + wb * NB

    lines = []
    if crosstalk is not None:
        za, zb = crosstalk.line_phasors()
        for z, kappa, op in ((za, crosstalk.kappa_a_mhz_per_phi0, XA),
                             (zb, crosstalk.kappa_b_mhz_per_phi0, XB)):
            amp = TWO_PI_MHZ * kappa * abs(z)
            if amp != 0.0:
                lines.append((amp, np.angle(z), op))

    def h_of_t(t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        f = pulse.envelope_value(t)
        q = pulse.quadrature_value(t)
        phase = wd * t + pulse.theta_ce
        coeff = j * (f * np.cos(phase) + q * np.sin(phase))
        out = np.broadcast_to(h0, t.shape + (4, 4)).copy()
        out += coeff[:, None, None] * XX
        for amp, extra, op in lines:
            out += (amp * f * np.cos(phase + extra))[:, None, None] * op
        return out

    h_of_t.carrier_rad_per_ns = wd
    return h_of_t


def crosstalk_hamiltonian(pulse, crosstalk, f_a_mhz, f_b_mhz):
    """Drive Hamiltonian including residual line crosstalk (xi=0 gives the
    pure XX drive)."""
    return drive_hamiltonian(pulse, f_a_mhz, f_b_mhz, crosstalk=crosstalk)


# ---------------------------------------------------------------------------
# propagation

_GL_LO = 0.5 - np.sqrt(3.0) / 6.0
_GL_HI = 0.5 + np.sqrt(3.0) / 6.0
_CF_A1 = 0.25 + np.sqrt(3.0) / 6.0
_CF_A2 = 0.25 - np.sqrt(3.0) / 6.0

MAX_STEPS = 1 << 21


def _call_stacked(h_of_t, times):
    out = np.asarray(h_of_t(times))
    if out.ndim == 2:                # scalar-only callable
        out = np.stack([np.asarray(h_of_t(float(t))) for t in times])
    dim = out.shape[-1]
    return out.reshape(len(times), dim, dim)


def _expm_unitaries(h_stack, dt):
    """exp(-i dt H_k) for a stack of hermitian 4x4 matrices."""
    w, v = np.linalg.eigh(h_stack)
    phases = np.exp(-1j * dt * w)
    return (v * phases[:, None, :]) @ np.conjugate(np.swapaxes(v, -1, -2))


def _chronological_product(mats):
    """Ordered product M_{n-1} ... M_1 M_0 by pairwise reduction."""
    m = mats
    while m.shape[0] > 1:
        n = m.shape[0]
        paired = m[1:n - (n % 2):2] @ m[0:n - (n % 2):2]
        if n % 2:
            paired = np.concatenate([paired, m[n - 1:]])
        m = paired
    return m[0]


def _cf4_factors(h_of_t, t0, t1, n):
    """Stacked chronological CF4 factors for n steps across [t0, t1]."""
    edges = np.linspace(t0, t1, n + 1)
    h = edges[1] - edges[0]
    ta = edges[:-1] + _GL_LO * h
    tb = edges[:-1] + _GL_HI * h
    ha = _call_stacked(h_of_t, ta)
    hb = _call_stacked(h_of_t, tb)
    first = _expm_unitaries(_CF_A1 * ha + _CF_A2 * hb, h)
    second = _expm_unitaries(_CF_A2 * ha + _CF_A1 * hb, h)
    dim = first.shape[-1]
    out = np.empty((2 * n, dim, dim), dtype=complex)
    out[0::2] = first
    out[1::2] = second
    return out


def _segment_unitary(h_of_t, t0, t1, n):
    return _chronological_product(_cf4_factors(h_of_t, t0, t1, n))


def _initial_steps(h_of_t, tau):
    probe = _call_stacked(h_of_t, np.linspace(0.0, tau, 7))
    scale = float(np.max(np.linalg.norm(probe, axis=(1, 2))))
    carrier = getattr(h_of_t, "carrier_rad_per_ns", 0.0)
    rate = max(scale, carrier, 0.1) * (8.0 / (2.0 * np.pi))
    n = int(np.ceil(tau * rate))
    return max(64, 1 << int(np.ceil(np.log2(n))))


def propagate_unitary(h_of_t, tau, tolerance=1e-10):
    """Time-ordered propagator over [0, tau] ns.

    Doubles the step count until the propagator changes by less than
    `tolerance` (max element), then verifies unitarity to 1e-10.
    """
    n = _initial_steps(h_of_t, tau)
    u_prev = _segment_unitary(h_of_t, 0.0, tau, n)
    while True:
        n *= 2
        if n > MAX_STEPS:
            raise AccuracyError(
                f"propagator not converged at {n//2} steps "
                f"(tolerance {tolerance})")
        u = _segment_unitary(h_of_t, 0.0, tau, n)
        if np.max(np.abs(u - u_prev)) < tolerance:
            break
        u_prev = u
    defect = np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0])))
    if defect > 1e-10:
        raise AccuracyError(f"propagator unitarity defect {defect:.2e}")
    return u


def propagate_states(h_of_t, times, psi0, tolerance=1e-9):
    """State snapshots at the given times (ns, increasing, from 0).

    Propagates segment by segment at a step density established by
    doubling on the full interval, and returns an array (len(times), 4).
    """
    times = np.asarray(times, dtype=float)
    if times[0] < 0 or np.any(np.diff(times) <= 0):
        raise ValueError("times must be increasing and non-negative")
    tau = float(times[-1])
    if tau == 0.0:
        return np.tile(psi0, (len(times), 1))
    n = _initial_steps(h_of_t, tau)
    u_prev = _segment_unitary(h_of_t, 0.0, tau, n)
    while True:
        n *= 2
        if n > MAX_STEPS:
            raise AccuracyError("state propagation not converged")
        u = _segment_unitary(h_of_t, 0.0, tau, n)
        if np.max(np.abs(u - u_prev)) < tolerance:
            break
        u_prev = u
    density = n / tau                 # steps per ns that converged
    out = np.empty((len(times), 4), dtype=complex)
    psi = np.asarray(psi0, dtype=complex)
    t_prev = 0.0
    for i, t in enumerate(times):
        if t > t_prev:
            seg_n = max(1, int(np.ceil((t - t_prev) * density)))
            psi = _segment_unitary(h_of_t, t_prev, t, seg_n) @ psi
            t_prev = t
        out[i] = psi
    return out


# ---------------------------------------------------------------------------
# Lindblad propagation

_SM = np.array([[0.0, 1.0], [0.0, 0.0]])     # sigma_minus |0><1|
_SP = _SM.T
_SZ = np.array([[1.0, 0.0], [0.0, -1.0]])


ALL_CHANNELS = ("decay", "heating", "dephasing")


def collapse_operators(rates, channels=ALL_CHANNELS):
    """Weighted collapse operators: sigma-, sigma+, sigma_z per qubit at
    rates Gamma1/2, Gamma1/2, Gammaphi/2 (rates converted to 1/ns).

    channels selects a subset of ("decay", "heating", "dephasing") so a
    single dissipation mechanism can be switched on at a time.
    """
    for name in channels:
        if name not in ALL_CHANNELS:
            raise ValueError(f"unknown decoherence channel {name!r}")
    ops = []
    for g1, gphi, (low, raise_, z) in (
            (rates.gamma1_a, rates.gammaphi_a,
             (np.kron(_SM, _I2), np.kron(_SP, _I2), np.kron(_SZ, _I2))),
            (rates.gamma1_b, rates.gammaphi_b,
             (np.kron(_I2, _SM), np.kron(_I2, _SP), np.kron(_I2, _SZ)))):
        g1_ns = g1 * 1e-3
        gphi_ns = gphi * 1e-3
        if "decay" in channels:
            ops.append(np.sqrt(g1_ns / 2.0) * low)
        if "heating" in channels:
            ops.append(np.sqrt(g1_ns / 2.0) * raise_)
        if "dephasing" in channels:
            ops.append(np.sqrt(gphi_ns / 2.0) * z)
    return ops


def _dissipator(rates, channels=ALL_CHANNELS):
    """Time-independent dissipation superoperator (row-major vec), 16x16."""
    d = np.zeros((16, 16), dtype=complex)
    eye = np.eye(4)
    for c in collapse_operators(rates, channels):
        cdc = c.conj().T @ c
        d += np.kron(c, c.conj())
        d -= 0.5 * (np.kron(cdc, eye) + np.kron(eye, cdc.T))
    return d


def _liouvillian(h, dissipator):
    eye = np.eye(4)
    return -1j * (np.kron(h, eye) - np.kron(eye, h.T)) + dissipator


def propagate_lindblad(h_of_t, rates, rho0, tau, tolerance=1e-8,
                       channels=ALL_CHANNELS):
    """Density matrix at time tau under H(t) with the standard collapse set.

    Strang splitting per step: half a dissipation exponential, the CF4
    unitary for the step, then the other half.  Every factor is a CPTP
    map, so trace and positivity hold by construction; the step count is
    doubled until the result settles, then both are certified.
    """
    rho0 = np.asarray(rho0, dtype=complex)
    if abs(np.trace(rho0) - 1.0) > 1e-9:
        raise ValueError("rho0 must have unit trace")
    if np.max(np.abs(rho0 - rho0.conj().T)) > 1e-9:
        raise ValueError("rho0 must be hermitian")
    if np.linalg.eigvalsh(rho0)[0] < -1e-10:
        raise ValueError("rho0 must be positive semidefinite")
    diss = _dissipator(rates, channels)

    def run(n):
        dt = tau / n
        factors = _cf4_factors(h_of_t, 0.0, tau, n)
        steps = factors[1::2] @ factors[0::2]          # per-step unitaries
        half = scipy.linalg.expm(diss * (0.5 * dt))
        rho = rho0
        for k in range(n):
            rho = (half @ rho.reshape(16)).reshape(4, 4)
            rho = steps[k] @ rho @ steps[k].conj().T
            rho = (half @ rho.reshape(16)).reshape(4, 4)
        return rho

    n = max(64, _initial_steps(h_of_t, tau))
    prev = run(n)
    while True:
        n *= 2
        if n > MAX_STEPS:
            raise AccuracyError("density-matrix propagation not converged")
        cur = run(n)
        if np.max(np.abs(cur - prev)) < tolerance:
            break
        prev = cur
    rho = 0.5 * (cur + cur.conj().T)
    if abs(np.trace(rho).real - 1.0) > 1e-10:
        raise AccuracyError("Lindblad propagation lost trace")
    if np.linalg.eigvalsh(rho)[0] < -1e-10:
        raise AccuracyError("Lindblad propagation lost positivity")
    return rho


# ---------------------------------------------------------------------------
# chevron scans

_BRANCH_START = {"difference": 2, "sum": 0}    # |10> and |00>


@dataclass
class ChevronMap:
    f_d_mhz: np.ndarray
    t_ns: np.ndarray
    populations: np.ndarray            # (n_freq, n_time, 4)
    branch: str

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["f_d_MHz", "t_ns", "P00", "P01", "P10", "P11"])
            for i, fd in enumerate(self.f_d_mhz):
                for k, t in enumerate(self.t_ns):
                    p = self.populations[i, k]
                    w.writerow([f"{fd:.10g}", f"{t:.10g}",
                                f"{p[0]:.8g}", f"{p[1]:.8g}",
                                f"{p[2]:.8g}", f"{p[3]:.8g}"])


def chevron_scan(f_a_mhz, f_b_mhz, amplitude_mhz, f_d_grid, t_grid,
                 branch, envelope="flat", theta_ce=0.0, crosstalk=None,
                 mode="rate", slope_mhz_per_phi0=None, threads=0):
    """Population maps versus drive frequency and duration.

    branch "difference" starts in |10> and watches the |01><->|10>
    exchange; "sum" starts in |00> and watches |00><->|11>.
    """
    if branch not in _BRANCH_START:
        raise ValueError(f"branch must be one of {sorted(_BRANCH_START)}")
    f_d_grid = np.asarray(f_d_grid, dtype=float)
    t_grid = np.asarray(t_grid, dtype=float)
    psi0 = np.zeros(4, dtype=complex)
    psi0[_BRANCH_START[branch]] = 1.0
    tau = float(t_grid[-1])

    def column(fd):
        pulse = DrivePulse(amplitude=amplitude_mhz, f_d_mhz=fd, tau_ns=tau,
                           theta_ce=theta_ce, envelope=envelope, mode=mode,
                           slope_mhz_per_phi0=slope_mhz_per_phi0)
        h = drive_hamiltonian(pulse, f_a_mhz, f_b_mhz, crosstalk=crosstalk)
        states = propagate_states(h, t_grid, psi0)
        return np.abs(states) ** 2

    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            pops = list(ex.map(column, f_d_grid))
    else:
        pops = [column(fd) for fd in f_d_grid]
    return ChevronMap(f_d_grid, t_grid, np.array(pops), branch)


def fit_oscillation_frequency(t_ns, y):
    """Dominant oscillation frequency of a trace, in MHz.

    Seeds from a Hann-windowed zero-padded FFT, then refines by
    minimizing the residual of a least-squares cosine fit; robust to
    short records and carrier micromotion where a bare FFT peak is
    pulled by the window.
    """
    t = np.asarray(t_ns, dtype=float)
    y = np.asarray(y, dtype=float) - np.mean(y)
    win = np.hanning(len(y))
    n = 1 << 18
    spec = np.abs(np.fft.rfft(y * win, n))
    freqs = np.fft.rfftfreq(n, t[1] - t[0]) * 1e3
    spec[0] = 0.0
    f0 = freqs[int(np.argmax(spec))]

    def resid(f_mhz):
        w = TWO_PI_MHZ * f_mhz
        design = np.column_stack(
            [np.ones_like(t), np.cos(w * t), np.sin(w * t)])
        _, res, _, _ = np.linalg.lstsq(design, y, rcond=None)
        return res[0] if res.size else 0.0

    from scipy.optimize import minimize_scalar
    out = minimize_scalar(resid, bracket=None,
                          bounds=(0.7 * f0, 1.4 * f0), method="bounded",
                          options={"xatol": 1e-6})
    return float(out.x)


# ---------------------------------------------------------------------------
# crosstalk frequency shift and compensation calibration

def crosstalk_shift_prediction(omega_mhz, f_d_mhz, omega_ct_mhz):
    """Second-order qubit frequency shift under an off-resonant sigma_x
    tone: (Omega^2/2) [1/(omega - omega_d) + 1/(omega + omega_d)], MHz.

    The second term is the counter-rotating (Bloch-Siegert) half, which at
    these drive-to-qubit detunings contributes at the tens-of-percent
    level and is required to match fitted precession.
    """
    return 0.5 * omega_ct_mhz ** 2 * (1.0 / (omega_mhz - f_d_mhz)
                                      + 1.0 / (omega_mhz + f_d_mhz))


def fit_crosstalk_shift(f_a_mhz, f_b_mhz, f_d_mhz, omega_ct_mhz, which="a",
                        t_max_ns=400.0, n_t=160):
    """Fitted qubit-frequency shift (MHz) under a continuous crosstalk tone.

    Starts the target qubit in a superposition, tracks the phase of its
    coherence in the frame of the bare splitting, and fits a line to the
    unwrapped phase; the drive is applied to that qubit's line only.
    """
    kappa = 1000.0
    xi = omega_ct_mhz / kappa
    ct = CrosstalkModel(
        xi_a=xi if which == "a" else 0.0,
        xi_b=xi if which == "b" else 0.0,
        kappa_a_mhz_per_phi0=kappa, kappa_b_mhz_per_phi0=kappa)
    pulse = DrivePulse(amplitude=0.0, f_d_mhz=f_d_mhz, tau_ns=t_max_ns,
                       envelope="flat")
    h = drive_hamiltonian(pulse, f_a_mhz, f_b_mhz, crosstalk=ct)
    psi0 = np.zeros(4, dtype=complex)
    if which == "a":
        psi0[0] = psi0[2] = 1.0 / np.sqrt(2.0)
        pair = (0, 2)
        f0 = f_a_mhz
    else:
        psi0[0] = psi0[1] = 1.0 / np.sqrt(2.0)
        pair = (0, 1)
        f0 = f_b_mhz
    times = np.linspace(0.0, t_max_ns, n_t + 1)
    states = propagate_states(h, times, psi0)
    coher = states[:, pair[1]] * np.conj(states[:, pair[0]])
    phase = np.unwrap(np.angle(coher)) + TWO_PI_MHZ * f0 * times
    slope = np.polyfit(times, phase, 1)[0]     # rad/ns relative to bare
    return -slope / TWO_PI_MHZ                 # MHz shift of the splitting


def _bswap_contrast(f_a_mhz, f_b_mhz, amplitude_mhz, crosstalk, tau_ns):
    pulse = DrivePulse(amplitude=amplitude_mhz, f_d_mhz=f_a_mhz + f_b_mhz,
                       tau_ns=tau_ns, envelope="flat")
    h = drive_hamiltonian(pulse, f_a_mhz, f_b_mhz, crosstalk=crosstalk)
    u = propagate_unitary(h, tau_ns, tolerance=1e-9)
    return float(np.abs(u[3, 0]) ** 2)


def calibrate_crosstalk_compensation(injected, f_a_mhz, f_b_mhz,
                                     amplitude_mhz=2.0, phase_points=24,
                                     amp_points=13, rounds=2):
    """Recover per-line compensation settings from Rabi-contrast feedback.

    The injected CrosstalkModel is only ever used inside the simulated
    experiment; the calibrator sees nothing but the |00> -> |11> transfer
    probability at the pi time.  For each line it sweeps the compensation
    phase at a probe amplitude, refines the best phase on a parabola, then
    does the same in amplitude, and iterates.  A flat contrast landscape
    (no crosstalk) returns zero amplitude.
    """
    tau_pi = 1e3 / (2.0 * amplitude_mhz)       # flat-envelope full transfer
    settings = {"a": (0.0, 0.0), "b": (0.0, 0.0)}

    def contrast(comp):
        model = replace(
            injected,
            comp_phase_a=comp["a"][0], comp_amp_a=comp["a"][1],
            comp_phase_b=comp["b"][0], comp_amp_b=comp["b"][1])
        return _bswap_contrast(f_a_mhz, f_b_mhz, amplitude_mhz, model, tau_pi)

    def refine(values, scores):
        k = int(np.argmax(scores))
        if 0 < k < len(values) - 1:
            y0, y1, y2 = scores[k - 1], scores[k], scores[k + 1]
            denom = y0 - 2 * y1 + y2
            if denom < 0:
                shift = 0.5 * (y0 - y2) / denom
                step = values[1] - values[0]
                return values[k] + shift * step
        return values[k]

    def amp_sweep(which, phase, hi):
        while True:
            amps = np.linspace(0.0, hi, amp_points)
            scores = []
            for am in amps:
                trial = dict(settings)
                trial[which] = (phase, am)
                scores.append(contrast(trial))
            if int(np.argmax(scores)) < len(amps) - 1 or hi > 0.05:
                return max(refine(amps, scores), 0.0)
            hi *= 2.0

    base = contrast(settings)
    probe_amp = 1e-3
    for which in ("a", "b"):
        best_phase, best_amp = 0.0, 0.0
        for _ in range(rounds):
            phases = np.linspace(0.0, 2.0 * np.pi, phase_points,
                                 endpoint=False)
            trial_amp = best_amp if best_amp > 0 else probe_amp
            scores = []
            for ph in phases:
                trial = dict(settings)
                trial[which] = (ph, trial_amp)
                scores.append(contrast(trial))
            if max(scores) - min(scores) < 1e-7:
                best_amp = 0.0
                break
            best_phase = refine(phases, scores) % (2.0 * np.pi)
            best_amp = amp_sweep(which, best_phase, 2.0 * trial_amp)
        settings[which] = (best_phase, best_amp)

    result = replace(
        injected,
        comp_phase_a=settings["a"][0], comp_amp_a=settings["a"][1],
        comp_phase_b=settings["b"][0], comp_amp_b=settings["b"][1])
    final = contrast(settings)
    if final < base - 1e-9:
        raise CalibrationError(
            f"compensation search worsened contrast ({base:.6f} -> "
            f"{final:.6f})")
    return result
