"""Parametrized two-qubit gates, virtual-Z frame tracking, calibration
simulators, and CNOT compilation.

Gate matrices live in the computational basis |n_a n_b> = 00, 01, 10, 11.
A generic XX parametric drive produces, depending on the resonant branch,
a |00><->|11> ("bswap-like") or |01><->|10| ("iswap-like") rotation with
three free phases plus the drive phase; the calibration simulators
recover those phases from amplified-error sequences exactly as an
experiment would, seeing nothing but populations.
"""

from dataclasses import dataclass

import numpy as np

from .config import GRID_UNIT_NS
from .errors import CalibrationError


def _wrap(phi):
    """Wrap an angle to (-pi, pi]."""
    out = (-phi + np.pi) % (2.0 * np.pi)
    return np.pi - out


@dataclass(frozen=True)
class GatePhases:
    """Rotation angle and phase freedoms of a parametric two-qubit gate.

    phi_11 is not stored: it is defined by the identity
    phi_11 = phi_01 + phi_10 + phi_zz, which therefore holds exactly.
    """

    theta: float = 0.0
    phi_01: float = 0.0
    phi_10: float = 0.0
    phi_d: float = 0.0
    phi_zz: float = 0.0

    @property
    def phi_11(self):
        return self.phi_01 + self.phi_10 + self.phi_zz

    @classmethod
    def with_phi_11(cls, theta=0.0, phi_01=0.0, phi_10=0.0, phi_d=0.0,
                    phi_11=0.0):
        return cls(theta=theta, phi_01=phi_01, phi_10=phi_10, phi_d=phi_d,
                   phi_zz=phi_11 - phi_01 - phi_10)


def bswap_like_matrix(p):
    """Unitary of a |00><->|11> parametric rotation with gate phases."""
    c, s = np.cos(p.theta), np.sin(p.theta)
    u = np.zeros((4, 4), dtype=complex)
    u[0, 0] = c
    u[0, 3] = 1j * np.exp(1j * p.phi_d) * s
    u[1, 1] = np.exp(1j * p.phi_01)
    u[2, 2] = np.exp(1j * p.phi_10)
    u[3, 0] = 1j * np.exp(1j * (p.phi_11 - p.phi_d)) * s
    u[3, 3] = np.exp(1j * p.phi_11) * c
    return u


def iswap_like_matrix(p):
    """Unitary of a |01><->|10> parametric rotation with gate phases."""
    c, s = np.cos(p.theta), np.sin(p.theta)
    u = np.zeros((4, 4), dtype=complex)
    u[0, 0] = 1.0
    u[1, 1] = np.exp(1j * p.phi_01) * c
    u[1, 2] = 1j * np.exp(1j * (p.phi_01 + p.phi_d)) * s
    u[2, 1] = 1j * np.exp(1j * (p.phi_10 - p.phi_d)) * s
    u[2, 2] = np.exp(1j * p.phi_10) * c
    u[3, 3] = np.exp(1j * p.phi_11)
    return u


SQRT_ISWAP = iswap_like_matrix(GatePhases(theta=np.pi / 4))
SQRT_BSWAP = bswap_like_matrix(GatePhases(theta=np.pi / 4))
CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0],
                 [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)

_SX = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
_SY = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
_I2 = np.eye(2, dtype=complex)


def _embed(m, qubit):
    if qubit == "a":
        return np.kron(m, _I2)
    if qubit == "b":
        return np.kron(_I2, m)
    raise ValueError(f"unknown qubit {qubit!r}")


def x_half_matrix(phase, qubit):
    """pi/2 rotation about the equatorial axis at angle `phase`."""
    axis = np.cos(phase) * _SX + np.sin(phase) * _SY
    m = np.cos(np.pi / 4) * _I2 - 1j * np.sin(np.pi / 4) * axis
    return _embed(m, qubit)


def z_matrix(phase, qubit):
    return _embed(np.diag([1.0, np.exp(1j * phase)]), qubit)


# ---------------------------------------------------------------------------
# gate sequences with virtual-Z frame tracking

# default durations in 1000/384 ns grid units
_DEFAULT_UNITS = {"x90a": 32, "x90b": 25, "bswap": 39, "iswap": 99, "vz": 0}


@dataclass(frozen=True)
class GateEntry:
    kind: str                  # x90 | vz | bswap | iswap
    qubit: str                 # a | b | ab
    params: tuple              # x90/vz: (phase,); 2q: (theta, 01, 10, zz, d)
    duration_ns: float

    def __post_init__(self):
        if self.kind in ("x90", "vz") and self.qubit not in ("a", "b"):
            raise ValueError("single-qubit entries act on qubit a or b")
        if self.kind in ("bswap", "iswap") and self.qubit != "ab":
            raise ValueError("two-qubit entries act on qubits ab")
        if self.kind not in ("x90", "vz", "bswap", "iswap"):
            raise ValueError(f"unknown entry kind {self.kind!r}")
        units = self.duration_ns / GRID_UNIT_NS
        if abs(units - round(units)) > 1e-9:
            raise ValueError(
                f"duration {self.duration_ns} ns is not on the "
                f"1000/384 ns grid")


def x90(qubit, phase, duration_ns=None):
    if duration_ns is None:
        duration_ns = _DEFAULT_UNITS["x90" + qubit] * GRID_UNIT_NS
    return GateEntry("x90", qubit, (float(phase),), duration_ns)


def vz(qubit, phase):
    return GateEntry("vz", qubit, (float(phase),), 0.0)


def two_qubit(kind, phases, duration_ns=None):
    if duration_ns is None:
        duration_ns = _DEFAULT_UNITS[kind] * GRID_UNIT_NS
    return GateEntry(kind, "ab",
                     (phases.theta, phases.phi_01, phases.phi_10,
                      phases.phi_zz, phases.phi_d), duration_ns)


def apply_virtual_z(frame, phase, qubit):
    """Advance the software phase frame of one qubit."""
    fa, fb = frame
    if qubit == "a":
        return (fa + phase, fb)
    return (fa, fb + phase)


@dataclass
class GateSequence:
    """Ordered gate list, first entry applied first."""

    entries: list

    def duration_ns(self):
        return sum(e.duration_ns for e in self.entries)

    def two_qubit_count(self):
        return sum(1 for e in self.entries if e.kind in ("bswap", "iswap"))

    def unitary(self, include_frame=True):
        """Composite unitary with virtual Z folded into pulse phases.

        Virtual Z entries only advance the frame; physical pulses are
        played at (requested phase - frame), and two-qubit gates absorb
        the frame into their drive phase.  With include_frame the pending
        frame is applied as explicit Z matrices at the end, making the
        result equal to literal matrix insertion.
        """
        u = np.eye(4, dtype=complex)
        frame = (0.0, 0.0)
        for e in self.entries:
            if e.kind == "vz":
                frame = apply_virtual_z(frame, e.params[0], e.qubit)
                continue
            if e.kind == "x90":
                shift = frame[0] if e.qubit == "a" else frame[1]
                u = x_half_matrix(e.params[0] - shift, e.qubit) @ u
                continue
            theta, p01, p10, pzz, pd = e.params
            fa, fb = frame
            shift = fa + fb if e.kind == "bswap" else fa - fb
            p = GatePhases(theta=theta, phi_01=p01, phi_10=p10, phi_zz=pzz,
                           phi_d=pd + shift)
            mat = bswap_like_matrix(p) if e.kind == "bswap" \
                else iswap_like_matrix(p)
            u = mat @ u
        if include_frame:
            u = z_matrix(frame[1], "b") @ z_matrix(frame[0], "a") @ u
        return u

    def unitary_explicit(self):
        """Composite by literal matrix insertion of every entry."""
        u = np.eye(4, dtype=complex)
        for e in self.entries:
            if e.kind == "vz":
                u = z_matrix(e.params[0], e.qubit) @ u
            elif e.kind == "x90":
                u = x_half_matrix(e.params[0], e.qubit) @ u
            else:
                theta, p01, p10, pzz, pd = e.params
                p = GatePhases(theta=theta, phi_01=p01, phi_10=p10,
                               phi_zz=pzz, phi_d=pd)
                mat = bswap_like_matrix(p) if e.kind == "bswap" \
                    else iswap_like_matrix(p)
                u = mat @ u
        return u

    def to_lines(self):
        out = []
        for e in self.entries:
            params = " ".join(f"{x:.12g}" for x in e.params)
            out.append(f"{e.kind} {e.qubit} {params} {e.duration_ns:.12g}")
        return out

    @classmethod
    def from_lines(cls, lines):
        entries = []
        for line in lines:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            kind, qubit = parts[0], parts[1]
            values = [float(x) for x in parts[2:]]
            entries.append(GateEntry(kind, qubit, tuple(values[:-1]),
                                     values[-1]))
        return cls(entries)


# ---------------------------------------------------------------------------
# calibration simulators

def calibrate_rotation_angle(pulse_family, nominal_amplitude,
                             max_reps=402, window=0.2, points=41):
    """Locate the drive amplitude producing an exact quarter rotation.

    pulse_family(amplitude) must return the 4x4 gate unitary; the search
    plays it 4n+2 times from |00> and maximizes the |11> population,
    progressively narrowing the amplitude window while raising the rep
    count.  Returns (amplitude, theta_at_nominal, uncertainty).
    """
    def p11(amplitude, reps):
        u = np.linalg.matrix_power(pulse_family(amplitude), reps)
        return float(np.abs(u[3, 0]) ** 2)

    center = nominal_amplitude
    half = window * nominal_amplitude
    reps = 2
    while True:
        grid = np.linspace(center - half, center + half, points)
        scores = np.array([p11(a, reps) for a in grid])
        k = int(np.argmax(scores))
        maxima = [i for i in range(1, points - 1)
                  if scores[i] > scores[i - 1] and scores[i] > scores[i + 1]
                  and scores[i] > scores[k] - 0.5]
        if reps > 2 and len(maxima) > 1:
            raise CalibrationError(
                f"rotation-angle scan not unimodal at {reps} reps "
                f"({len(maxima)} peaks)")
        if 0 < k < points - 1:
            y0, y1, y2 = scores[k - 1], scores[k], scores[k + 1]
            denom = y0 - 2.0 * y1 + y2
            shift = 0.5 * (y0 - y2) / denom if denom < 0 else 0.0
            center = grid[k] + shift * (grid[1] - grid[0])
        else:
            center = grid[k]
        if reps >= max_reps:
            step = grid[1] - grid[0]
            break
        half /= 4.0
        reps = min(4 * reps + 2, max_reps)
    theta = (np.pi / 4) * nominal_amplitude / center
    uncertainty = (np.pi / 4) * step / (8.0 * center)
    return center, theta, uncertainty


def _phase_sweep_p11(gate, phi_a, n_units):
    """|11> population after n_units of (gate then Z_a(phi_a)) from |00>."""
    w = z_matrix(phi_a, "a") @ gate
    return float(np.abs(np.linalg.matrix_power(w, n_units)[3, 0]) ** 2)


def _i3_population(gate, phi_a, n):
    """Qubit-B ground population of the bracketed sequence at 4n+2 units."""
    w = z_matrix(phi_a, "a") @ gate
    u = np.linalg.matrix_power(w, 4 * n + 2)
    u = x_half_matrix(0.0, "b") @ u @ x_half_matrix(0.0, "a")
    psi = u[:, 0]
    return float(np.abs(psi[0]) ** 2 + np.abs(psi[2]) ** 2)


def i3_population_formula(phi_10, phi_11, phi_d, n):
    """Closed-form qubit-B ground population of the bracketed sequence."""
    d = phi_10 - phi_11
    return 0.5 * (1.0 + (-1.0) ** n * np.sin(4 * n * d + 2 * d + phi_d))


def _shift_drive_phase(gate, chi):
    """Same pulse replayed with its carrier phase advanced by chi.

    Implemented as Z conjugation on qubit a, which shifts the hidden
    drive phase of a bswap-like gate while leaving every other phase
    untouched, exactly as adjusting the drive phase would.
    """
    return z_matrix(-chi, "a") @ gate @ z_matrix(chi, "a")


def _fit_i3(gate, phi_a, ns):
    """Quadrature fit of the bracketed-sequence populations.

    (-1)^n (2 P - 1) follows sin(4 n delta + psi); replaying with the
    drive phase advanced by pi/2 yields the cosine quadrature, so the
    two traces combine into a unit phasor whose unwrapped phase is
    linear in n.  Returns (delta, psi).
    """
    ns = np.asarray(list(ns))
    if np.any(np.diff(ns) != 1):
        raise ValueError("the fit schedule must be consecutive integers")
    signs = (-1.0) ** ns
    y_sin = signs * (2.0 * np.array(
        [_i3_population(gate, phi_a, n) for n in ns]) - 1.0)
    gate_q = _shift_drive_phase(gate, np.pi / 2.0)
    y_cos = signs * (2.0 * np.array(
        [_i3_population(gate_q, phi_a, n) for n in ns]) - 1.0)
    z = y_cos + 1j * y_sin
    if np.max(np.abs(np.abs(z) - 1.0)) > 1e-6:
        raise CalibrationError(
            "bracketed-sequence quadratures inconsistent; gate is not a "
            "clean quarter rotation")
    phase = np.unwrap(np.angle(z))
    slope, intercept = np.polyfit(ns, phase, 1)
    if np.max(np.abs(np.polyval([slope, intercept], ns) - phase)) > 1e-6:
        raise CalibrationError(
            "bracketed-sequence phase not linear in n (aliasing); use a "
            "denser n schedule")
    return slope / 4.0, intercept


def calibrate_phases(gate_unitary, n_units=322, n_schedule=range(12)):
    """Recover the phase freedoms of a quarter-rotation bswap-like gate.

    Step 1 sweeps a per-unit Z on qubit a over a long repeated sequence;
    the |11> transfer peaks when the Z cancels phi_11.  Step 2 plays the
    X/2-bracketed sequence at several 4n+2 unit counts and fits the
    (-1)^n-signed sinusoid for phi_10 - phi_11 and the drive phase.
    Step 3 repeats step 2 with the qubit roles mirrored to get phi_01
    directly, so no small-phi_zz assumption enters.

    phi_11 and phi_d are resolved over the full circle; the bracketed
    fits pin phi_01 and phi_10 relative to phi_11 only within +/- pi/4
    (larger offsets alias by multiples of pi/2), which covers the
    protocol's use of trimming residual phase drifts.
    """
    if n_units % 4 != 2:
        raise ValueError("the repeated-unit count must be of the form 4n+2")
    gate = np.asarray(gate_unitary, dtype=complex)

    # step 1: phi_11 from the Z-phase sweep
    sweep = np.linspace(-np.pi, np.pi, 720, endpoint=False)
    pops = np.array([_phase_sweep_p11(gate, p, n_units) for p in sweep])
    k = int(np.argmax(pops))
    y0, y1, y2 = pops[k - 1], pops[k], pops[(k + 1) % len(sweep)]
    denom = y0 - 2.0 * y1 + y2
    shift = 0.5 * (y0 - y2) / denom if denom < 0 else 0.0
    step = sweep[1] - sweep[0]
    phi_11 = _wrap(-(sweep[k] + shift * step))

    # step 2: phi_10 - phi_11 and phi_d from the bracketed sequence
    delta, psi = _fit_i3(gate, -phi_11, n_schedule)
    phi_10 = _wrap(phi_11 + delta)
    phi_d = _wrap(psi - 2.0 * delta)

    # step 3: mirrored sequence for phi_01
    swap = np.eye(4)[[0, 2, 1, 3]]
    gate_m = swap @ gate @ swap
    delta_m, _ = _fit_i3(gate_m, -phi_11, n_schedule)
    phi_01 = _wrap(phi_11 + delta_m)

    return GatePhases.with_phi_11(theta=np.pi / 4, phi_01=phi_01,
                                  phi_10=phi_10, phi_d=phi_d, phi_11=phi_11)


# ---------------------------------------------------------------------------
# CNOT compilation

def compile_cnot():
    """CNOT (control a, target b) from two quarter bswap rotations.

    Sandwiching a pi pulse on qubit a between two clean quarter
    rotations collapses the pair to sigma_x^a exp(i pi/4 XX) up to a
    phase; conjugating qubit a into the Z basis and undoing the leftover
    local rotations yields CNOT exactly.  The pi pulse is two X/2
    pulses, so the sequence holds exactly five single-qubit pulses and
    two two-qubit entries; composite equals CNOT up to global phase.
    """
    quarter = GatePhases(theta=np.pi / 4)
    entries = [
        x90("a", np.pi / 2),
        two_qubit("bswap", quarter),
        x90("a", 0.0),
        x90("a", 0.0),                  # embedded pi pulse
        two_qubit("bswap", quarter),
        x90("a", -np.pi / 2),
        x90("b", 0.0),
        vz("a", -np.pi / 2),
    ]
    return GateSequence(entries)
