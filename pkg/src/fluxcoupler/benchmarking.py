"""Simulated randomized and cross-entropy benchmarking of the gate set.

Reference sequences follow the experiment's layer structure: each layer
plays a half rotation and a virtual Z on every qubit, both with phases
drawn from {n pi/4}, and a two-qubit gate may be interleaved after each
layer.  Noise is either an injected per-layer depolarizing factor or the
package's dissipation channel integrated over the layer duration.
Populations are exact expectation values unless a finite sample count is
requested, so fits are limited only by sequence-sampling statistics.

Seeding rule: the master seed is split with numpy's SeedSequence into
one child stream per run mode, and that child is split again into one
generator per (depth index, trial index) pair, depth-major.  Identical
run parameters therefore replay identical sequences regardless of
execution order.
"""

import numpy as np
import scipy.linalg
import scipy.optimize
from dataclasses import dataclass

from .dynamics import _dissipator
from .errorbudget import DEFAULT_GATE_TIMES_NS
from .errors import AccuracyError, FitError
from .gates import (GatePhases, bswap_like_matrix, compile_cnot,
                    iswap_like_matrix, x_half_matrix, z_matrix)

DIM = 4
MODES = ("reference", "interleaved", "simultaneous-1q-rb", "interleaved-rb")
PHASE_STEP = np.pi / 4.0

# ideal interleaved two-qubit gates (quarter rotations, zero frame phases)
TWO_QUBIT_IDEAL = {
    "iswap": iswap_like_matrix(GatePhases(theta=np.pi / 4.0)),
    "bswap": bswap_like_matrix(GatePhases(theta=np.pi / 4.0)),
}

_I2 = np.eye(2, dtype=complex)
_SX = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
_SY = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
_SZ = np.diag([1.0, -1.0]).astype(complex)

_CZ = np.diag([1.0, 1.0, 1.0, -1.0]).astype(complex)
_SWAP = np.array([[1, 0, 0, 0], [0, 0, 1, 0],
                  [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex)
_ISWAP_FULL = np.array([[1, 0, 0, 0], [0, 0, 1j, 0],
                        [0, 1j, 0, 0], [0, 0, 0, 1]], dtype=complex)
# 120-degree rotation about (1,1,1): cycles the three Pauli axes
_AXIS_CYCLE = 0.5 * (_I2 - 1j * (_SX + _SY + _SZ))
_S1 = (_I2, _AXIS_CYCLE, _AXIS_CYCLE @ _AXIS_CYCLE)


# ---------------------------------------------------------------------------
# run configuration

@dataclass(frozen=True)
class NoiseModel:
    """Noise attached to a benchmarking run.

    kind "none" propagates ideal unitaries; "depolarizing" applies
    p_layer after every sampled layer and p_gate after every interleaved
    gate; "lindblad" integrates the dissipator from `rates` over the
    layer / gate durations.  samples > 0 adds multinomial readout
    statistics with that many shots per sequence.
    """

    kind: str = "none"
    p_layer: float = 1.0
    p_gate: float = 1.0
    rates: object = None
    layer_time_ns: float = DEFAULT_GATE_TIMES_NS["x90a"]
    samples: int = 0

    def __post_init__(self):
        if self.kind not in ("none", "depolarizing", "lindblad"):
            raise ValueError(f"unknown noise kind {self.kind!r}")
        for p in (self.p_layer, self.p_gate):
            if not 0.0 <= p <= 1.0:
                raise ValueError("depolarizing factors must lie in [0, 1]")
        if self.kind == "lindblad" and self.rates is None:
            raise ValueError("lindblad noise needs DecoherenceRates")
        if self.samples < 0:
            raise ValueError("sample count must be non-negative")

    def to_json_dict(self):
        out = {"kind": self.kind, "samples": self.samples}
        if self.kind == "depolarizing":
            out.update(p_layer=self.p_layer, p_gate=self.p_gate)
        if self.kind == "lindblad":
            r = self.rates
            out.update(layer_time_ns=self.layer_time_ns,
                       gamma1_a=r.gamma1_a, gamma1_b=r.gamma1_b,
                       gammaphi_a=r.gammaphi_a, gammaphi_b=r.gammaphi_b)
        return out


@dataclass(frozen=True)
class BenchmarkRun:
    depths: tuple
    trials: int
    seed: int
    mode: str = "reference"
    gate: str = "bswap"
    noise: NoiseModel = NoiseModel()

    def __post_init__(self):
        depths = tuple(int(m) for m in self.depths)
        object.__setattr__(self, "depths", depths)
        if len(depths) == 0 or any(m < 1 for m in depths):
            raise ValueError("depths must be positive layer counts")
        if any(b <= a for a, b in zip(depths, depths[1:])):
            raise ValueError("depths must be strictly increasing")
        if int(self.trials) < 1:
            raise ValueError("trials must be at least 1")
        object.__setattr__(self, "trials", int(self.trials))
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.gate not in TWO_QUBIT_IDEAL:
            raise ValueError(f"unknown interleaved gate {self.gate!r}")

    def trial_rngs(self):
        """One generator per (depth, trial), depth-major; the stream is
        keyed on the run mode so reference and interleaved runs sharing
        a seed stay independent."""
        root = np.random.SeedSequence(self.seed)
        child = root.spawn(len(MODES))[MODES.index(self.mode)]
        seeds = child.spawn(len(self.depths) * self.trials)
        return [[np.random.default_rng(seeds[d * self.trials + t])
                 for t in range(self.trials)]
                for d in range(len(self.depths))]

    def to_json_dict(self):
        return {"depths": list(self.depths), "trials": self.trials,
                "seed": self.seed, "mode": self.mode, "gate": self.gate,
                "noise": self.noise.to_json_dict()}


# ---------------------------------------------------------------------------
# layer sampling

@dataclass(frozen=True)
class ReferenceLayer:
    """Per-qubit (half-rotation phase, virtual-Z phase), all n pi/4."""

    phase_xa: float
    phase_xb: float
    phase_za: float
    phase_zb: float

    def unitary(self):
        u = x_half_matrix(self.phase_xb, "b") @ x_half_matrix(self.phase_xa, "a")
        return z_matrix(self.phase_zb, "b") @ z_matrix(self.phase_za, "a") @ u


def sample_reference_layer(rng):
    """Draw one layer; consumes a single length-4 integer draw."""
    n = rng.integers(0, 8, size=4)
    return ReferenceLayer(phase_xa=n[0] * PHASE_STEP,
                          phase_xb=n[1] * PHASE_STEP,
                          phase_za=n[2] * PHASE_STEP,
                          phase_zb=n[3] * PHASE_STEP)


# ---------------------------------------------------------------------------
# Clifford groups

def _canonical_key(u):
    flat = u.reshape(-1)
    idx = int(np.argmax(np.abs(flat) > 1e-8))
    v = flat / (flat[idx] / abs(flat[idx]))
    # adding complex zero collapses -0.0 so equal phases share bytes
    return (np.round(v, 8) + (0.0 + 0.0j)).tobytes()


def _single_qubit_cliffords():
    """The 24 single-qubit Cliffords, generated from X/2 and Z/2."""
    rx = np.cos(np.pi / 4) * _I2 - 1j * np.sin(np.pi / 4) * _SX
    rz = np.diag([1.0, 1.0j]).astype(complex)
    found = {_canonical_key(_I2): _I2}
    frontier = [_I2]
    while frontier:
        u = frontier.pop()
        for g in (rx, rz):
            v = g @ u
            key = _canonical_key(v)
            if key not in found:
                found[key] = v
                frontier.append(v)
    group = list(found.values())
    if len(group) != 24:
        raise RuntimeError(f"Clifford closure found {len(group)} elements")
    return group


_C1_CACHE = None


def _c1():
    global _C1_CACHE
    if _C1_CACHE is None:
        _C1_CACHE = _single_qubit_cliffords()
    return _C1_CACHE


def sample_two_qubit_clifford(rng):
    """Uniform two-qubit Clifford via the class decomposition.

    Classes (single-qubit, CZ-like, iSWAP-like, SWAP) have sizes
    576/5184/5184/576, giving weights 1:9:9:1; the entangling classes
    carry an extra axis-cycling layer on each qubit (3 x 3 choices).
    """
    c1 = _c1()
    layer = np.kron(c1[rng.integers(24)], c1[rng.integers(24)])
    r = int(rng.integers(20))
    if r == 0:
        return layer
    if r == 19:
        return _SWAP @ layer
    core = _CZ if r <= 9 else _ISWAP_FULL
    s = np.kron(_S1[rng.integers(3)], _S1[rng.integers(3)])
    return s @ core @ layer


# ---------------------------------------------------------------------------
# noise channels

def _identity_channel(rho):
    return rho


def _depolarizing_channel(p):
    def apply(rho):
        return p * rho + (1.0 - p) * np.trace(rho).real * np.eye(DIM) / DIM
    return apply


def _dissipation_channel(rates, duration_ns):
    s = scipy.linalg.expm(_dissipator(rates) * duration_ns)

    def apply(rho):
        return (s @ rho.reshape(DIM * DIM)).reshape(DIM, DIM)
    return apply


def _noise_channels(noise, gate_kind):
    """(after-layer, after-gate) channel pair for a run."""
    if noise.kind == "none":
        return _identity_channel, _identity_channel
    if noise.kind == "depolarizing":
        return (_depolarizing_channel(noise.p_layer),
                _depolarizing_channel(noise.p_gate))
    gate_time = DEFAULT_GATE_TIMES_NS[gate_kind]
    return (_dissipation_channel(noise.rates, noise.layer_time_ns),
            _dissipation_channel(noise.rates, gate_time))


def _measured_populations(rho, rng, samples):
    q = np.clip(np.real(np.diag(rho)), 0.0, None)
    q = q / q.sum()
    if samples:
        return rng.multinomial(samples, q) / samples
    return q


# ---------------------------------------------------------------------------
# decay curves and fitting

@dataclass(frozen=True)
class DecayCurve:
    depths: np.ndarray
    means: np.ndarray
    sems: np.ndarray
    samples: np.ndarray       # (n_depths, trials)
    observable: str

    def is_flat(self):
        return float(np.ptp(self.means)) < 1e-12

    def to_rows(self):
        rows = [("depth", "mean", "sem")]
        for m, y, s in zip(self.depths, self.means, self.sems):
            rows.append((int(m), float(y), float(s)))
        return rows

    def to_json_dict(self):
        return {"observable": self.observable,
                "depths": [int(m) for m in self.depths],
                "means": [float(y) for y in self.means],
                "sems": [float(s) for s in self.sems]}


@dataclass(frozen=True)
class DecayFit:
    """A p^m exponential fit with a bootstrap 95% interval on p."""

    p: float
    amplitude: float
    offset: float
    ci_low: float
    ci_high: float

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError("depolarizing parameter must lie in [0, 1]")
        if not self.ci_low <= self.p <= self.ci_high:
            raise ValueError("confidence interval must contain the estimate")

    def error_per_layer(self):
        return 1.0 - self.p

    def to_json_dict(self):
        return {"p": self.p, "amplitude": self.amplitude,
                "offset": self.offset,
                "ci95": [self.ci_low, self.ci_high]}


def _decay_model(m, amplitude, p, offset):
    return amplitude * np.power(p, m) + offset


def _fit_decay_once(depths, values):
    offset0 = values[-1]
    shift = values - offset0
    mask = shift > 1e-12
    if np.count_nonzero(mask) >= 2:
        slope = np.polyfit(depths[mask], np.log(shift[mask]), 1)[0]
        p0 = float(np.clip(np.exp(slope), 1e-4, 1.0))
    else:
        p0 = 0.99
    amp0 = values[0] - offset0
    if abs(amp0) < 1e-9:
        amp0 = 0.5
    popt, _ = scipy.optimize.curve_fit(
        _decay_model, depths, values, p0=[amp0, p0, offset0],
        bounds=([-2.0, 0.0, -1.0], [2.0, 1.0, 1.0]), maxfev=20000)
    return popt


def fit_depolarizing(curve, n_bootstrap=200, seed=0):
    """Least-squares A p^m + B fit with a bootstrap-over-trials CI."""
    depths = np.asarray(curve.depths, dtype=float)
    if depths.size < 4:
        raise ValueError("need at least 4 depths to fit a decay")
    values = np.asarray(curve.means, dtype=float)
    if curve.is_flat():
        level = float(values.mean())
        return DecayFit(p=1.0, amplitude=0.0, offset=level,
                        ci_low=1.0, ci_high=1.0)

    try:
        amp, p, off = _fit_decay_once(depths, values)
    except RuntimeError as exc:
        resid = values - values.mean()
        raise FitError(
            f"decay fit did not converge; rms residual about the mean "
            f"{float(np.sqrt(np.mean(resid ** 2))):.3e}") from exc

    if n_bootstrap == 0:
        return DecayFit(p=float(p), amplitude=float(amp), offset=float(off),
                        ci_low=float(p), ci_high=float(p))
    samples = np.asarray(curve.samples, dtype=float)
    n_trials = samples.shape[1]
    rng = np.random.default_rng(seed)
    boot = []
    for _ in range(n_bootstrap):
        cols = rng.integers(0, n_trials, size=(depths.size, n_trials))
        resampled = np.take_along_axis(samples, cols, axis=1).mean(axis=1)
        try:
            boot.append(_fit_decay_once(depths, resampled)[1])
        except RuntimeError:
            continue
    if len(boot) < max(10, n_bootstrap // 2):
        raise FitError(f"bootstrap unstable: only {len(boot)} of "
                       f"{n_bootstrap} refits converged")
    lo, hi = np.percentile(boot, [2.5, 97.5])
    return DecayFit(p=float(p), amplitude=float(amp), offset=float(off),
                    ci_low=float(min(lo, p)), ci_high=float(max(hi, p)))


def fidelity_from_depolarizing(p_gate, dim=DIM):
    """Average fidelity of a depolarizing factor: F = p + (1 - p) / D."""
    if not 0.0 <= p_gate <= 1.0:
        raise ValueError("depolarizing parameter must lie in [0, 1]")
    if dim < 2:
        raise ValueError("dimension must be at least 2")
    return p_gate + (1.0 - p_gate) / dim


# ---------------------------------------------------------------------------
# cross-entropy benchmarking

# smallest non-degenerate ideal-distribution weight; the layer phases give
# sum_x q^2 - 1/4 in {0, 1/8, 1/4, ...}, so 0.05 cleanly rejects only the
# uniform (zero-signal) sequences
_MIN_XEB_WEIGHT = 0.05
_MAX_REDRAWS = 100


def _xeb_sequence(rng, depth, interleave, after_layer, after_gate, rho0):
    u = np.eye(DIM, dtype=complex)
    rho = rho0
    for _ in range(depth):
        lu = sample_reference_layer(rng).unitary()
        u = lu @ u
        rho = after_layer(lu @ rho @ lu.conj().T)
        if interleave is not None:
            u = interleave @ u
            rho = after_gate(interleave @ rho @ interleave.conj().T)
    return u, rho


def run_xeb(run):
    """Run reference or interleaved XEB sequences.

    The per-sequence observable is the normalized cross-entropy
    estimator (sum_x q_meas q_ideal - 1/D) / (sum_x q_ideal^2 - 1/D),
    which equals p^depth exactly under depolarizing noise.  Sequences
    whose ideal distribution is uniform carry no signal and are redrawn.
    Returns the per-depth DecayCurve.
    """
    if run.mode not in ("reference", "interleaved"):
        raise ValueError("run_xeb handles reference/interleaved modes only")
    interleave = TWO_QUBIT_IDEAL[run.gate] if run.mode == "interleaved" else None
    after_layer, after_gate = _noise_channels(run.noise, run.gate)

    rngs = run.trial_rngs()
    rho0 = np.zeros((DIM, DIM), dtype=complex)
    rho0[0, 0] = 1.0
    uniform = 1.0 / DIM
    samples = np.empty((len(run.depths), run.trials))
    for d, depth in enumerate(run.depths):
        for t in range(run.trials):
            rng = rngs[d][t]
            for _ in range(_MAX_REDRAWS):
                u, rho = _xeb_sequence(rng, depth, interleave,
                                       after_layer, after_gate, rho0)
                q_ideal = np.abs(u[:, 0]) ** 2
                weight = float(q_ideal @ q_ideal) - uniform
                if weight >= _MIN_XEB_WEIGHT:
                    break
            else:
                # a single half-rotation layer always lands on the uniform
                # distribution, so depth-1 reference sequences never pass
                raise AccuracyError(
                    f"no informative XEB sequence at depth {depth} after "
                    f"{_MAX_REDRAWS} draws; half-rotation layers need "
                    f"depth >= 2")
            q_meas = _measured_populations(rho, rng, run.noise.samples)
            samples[d, t] = (float(q_meas @ q_ideal) - uniform) / weight

    means = samples.mean(axis=1)
    sems = samples.std(axis=1, ddof=1) / np.sqrt(run.trials) \
        if run.trials > 1 else np.zeros(len(run.depths))
    return DecayCurve(depths=np.asarray(run.depths), means=means, sems=sems,
                      samples=samples, observable="xeb_fidelity")


@dataclass(frozen=True)
class XebPairResult:
    """Reference + interleaved XEB runs and the extracted gate fidelity.

    fidelity uses the depolarizing ratio p_int / p_ref; the subtraction
    summary 1 - (err_int - err_ref) is reported alongside because the
    two differ at the (1 - p)/D level.
    """

    gate: str
    reference: DecayCurve
    interleaved: DecayCurve
    fit_reference: DecayFit
    fit_interleaved: DecayFit
    p_gate: float
    fidelity: float
    fidelity_subtraction: float

    def to_json_dict(self):
        return {"gate": self.gate,
                "reference": {"curve": self.reference.to_json_dict(),
                              "fit": self.fit_reference.to_json_dict()},
                "interleaved": {"curve": self.interleaved.to_json_dict(),
                                "fit": self.fit_interleaved.to_json_dict()},
                "p_gate": self.p_gate, "fidelity": self.fidelity,
                "fidelity_subtraction": self.fidelity_subtraction}


def run_xeb_pair(gate, depths, trials, seed, noise=NoiseModel()):
    """Reference and interleaved XEB with a shared master seed."""
    ref = run_xeb(BenchmarkRun(depths, trials, seed, "reference", gate, noise))
    inter = run_xeb(BenchmarkRun(depths, trials, seed, "interleaved", gate,
                                 noise))
    fit_ref = fit_depolarizing(ref)
    fit_int = fit_depolarizing(inter)
    if fit_ref.p <= 0.0:
        raise FitError("reference decay fitted to p = 0; no usable ratio")
    p_gate = min(fit_int.p / fit_ref.p, 1.0)
    return XebPairResult(
        gate=gate, reference=ref, interleaved=inter,
        fit_reference=fit_ref, fit_interleaved=fit_int, p_gate=p_gate,
        fidelity=fidelity_from_depolarizing(p_gate),
        fidelity_subtraction=1.0 - (fit_ref.p - fit_int.p))


# ---------------------------------------------------------------------------
# randomized benchmarking

def run_simultaneous_rb(run):
    """Simultaneous independent single-qubit RB on both qubits.

    Samples a Clifford string per qubit, applies joint noise, appends
    the exact recovery, and records each qubit's ground-state marginal.
    Returns (curve_a, curve_b).
    """
    if run.mode != "simultaneous-1q-rb":
        raise ValueError("run mode must be simultaneous-1q-rb")
    c1 = _c1()
    after_layer, _ = _noise_channels(run.noise, run.gate)
    rngs = run.trial_rngs()
    rho0 = np.zeros((DIM, DIM), dtype=complex)
    rho0[0, 0] = 1.0
    surv_a = np.empty((len(run.depths), run.trials))
    surv_b = np.empty_like(surv_a)
    for d, depth in enumerate(run.depths):
        for t in range(run.trials):
            rng = rngs[d][t]
            ua = ub = np.eye(2, dtype=complex)
            rho = rho0
            for _ in range(depth):
                ca = c1[rng.integers(24)]
                cb = c1[rng.integers(24)]
                joint = np.kron(ca, cb)
                rho = after_layer(joint @ rho @ joint.conj().T)
                ua, ub = ca @ ua, cb @ ub
            rec = np.kron(ua.conj().T, ub.conj().T)
            rho = after_layer(rec @ rho @ rec.conj().T)
            pops = _measured_populations(rho, rng, run.noise.samples)
            surv_a[d, t] = pops[0] + pops[1]
            surv_b[d, t] = pops[0] + pops[2]

    def curve(samples):
        means = samples.mean(axis=1)
        sems = samples.std(axis=1, ddof=1) / np.sqrt(run.trials) \
            if run.trials > 1 else np.zeros(len(run.depths))
        return DecayCurve(depths=np.asarray(run.depths), means=means,
                          sems=sems, samples=samples, observable="survival")
    return curve(surv_a), curve(surv_b)


@dataclass(frozen=True)
class IrbResult:
    reference: DecayCurve
    interleaved: DecayCurve
    fit_reference: DecayFit
    fit_interleaved: DecayFit
    p_gate: float
    fidelity: float
    fidelity_ci: tuple

    def to_json_dict(self):
        return {"reference": {"curve": self.reference.to_json_dict(),
                              "fit": self.fit_reference.to_json_dict()},
                "interleaved": {"curve": self.interleaved.to_json_dict(),
                                "fit": self.fit_interleaved.to_json_dict()},
                "p_gate": self.p_gate, "fidelity": self.fidelity,
                "fidelity_ci": list(self.fidelity_ci)}


def _rb_survivals(run, interleave, after_layer, after_gate):
    rngs = run.trial_rngs()
    rho0 = np.zeros((DIM, DIM), dtype=complex)
    rho0[0, 0] = 1.0
    samples = np.empty((len(run.depths), run.trials))
    for d, depth in enumerate(run.depths):
        for t in range(run.trials):
            rng = rngs[d][t]
            u = np.eye(DIM, dtype=complex)
            rho = rho0
            for _ in range(depth):
                c = sample_two_qubit_clifford(rng)
                u = c @ u
                rho = after_layer(c @ rho @ c.conj().T)
                if interleave is not None:
                    u = interleave @ u
                    rho = after_gate(interleave @ rho @ interleave.conj().T)
            rec = u.conj().T
            rho = after_layer(rec @ rho @ rec.conj().T)
            pops = _measured_populations(rho, rng, run.noise.samples)
            samples[d, t] = pops[0]
    means = samples.mean(axis=1)
    sems = samples.std(axis=1, ddof=1) / np.sqrt(run.trials) \
        if run.trials > 1 else np.zeros(len(run.depths))
    return DecayCurve(depths=np.asarray(run.depths), means=means, sems=sems,
                      samples=samples, observable="survival")


def run_interleaved_rb_cnot(run):
    """Two-qubit interleaved RB of the compiled CNOT.

    Runs a reference Clifford decay and a CNOT-interleaved decay with
    the run's noise, and converts the ratio of depolarizing parameters
    to an average fidelity.  The recovery step is charged one layer of
    noise like any other Clifford.
    """
    if run.mode != "interleaved-rb":
        raise ValueError("run mode must be interleaved-rb")
    cnot = compile_cnot().unitary()
    after_layer, after_gate = _noise_channels(run.noise, run.gate)
    reference = _rb_survivals(run, None, after_layer, after_gate)
    interleaved = _rb_survivals(run, cnot, after_layer, after_gate)
    fit_ref = fit_depolarizing(reference)
    fit_int = fit_depolarizing(interleaved)
    if fit_ref.p <= 0.0:
        raise FitError("reference decay fitted to p = 0; no usable ratio")
    p_gate = min(fit_int.p / fit_ref.p, 1.0)
    lo = fit_int.ci_low / max(fit_ref.ci_high, 1e-12)
    hi = fit_int.ci_high / max(fit_ref.ci_low, 1e-12)
    bounds = sorted((min(p_gate, max(lo, 0.0)), min(max(hi, p_gate), 1.0)))
    return IrbResult(
        reference=reference, interleaved=interleaved,
        fit_reference=fit_ref, fit_interleaved=fit_int, p_gate=p_gate,
        fidelity=fidelity_from_depolarizing(p_gate),
        fidelity_ci=(fidelity_from_depolarizing(bounds[0]),
                     fidelity_from_depolarizing(bounds[1])))


def cnot_noise_from_infidelities(infidelities, samples=0):
    """Depolarizing NoiseModel for CNOT benchmarking from an error table.

    infidelities maps gate names (x90a, x90b, bswap, ...) to average
    two-qubit-space infidelities; each compiled CNOT entry contributes
    1 - D (1 - F) / (D - 1) to the composite gate factor.  Reference
    Cliffords are charged one half rotation per qubit - only the ratio
    matters for the interleaved estimate.
    """
    def factor(err):
        return 1.0 - err * DIM / (DIM - 1.0)

    p_gate = 1.0
    for entry in compile_cnot().entries:
        if entry.kind == "vz":
            continue
        key = entry.kind + entry.qubit if entry.kind == "x90" else entry.kind
        p_gate *= factor(infidelities[key])
    p_layer = factor(infidelities["x90a"]) * factor(infidelities["x90b"])
    return NoiseModel(kind="depolarizing", p_layer=p_layer, p_gate=p_gate,
                      samples=samples)
