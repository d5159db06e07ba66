"""Spectra, coupling landscapes, gate dynamics and error budgets for two
inductively coupled heavy fluxonium qubits with a flux-tunable coupler."""

__version__ = "0.1.0"

from .circuit import (  # noqa: F401
    CircuitModel,
    CircuitParams,
    FluxPoint,
    FluxoniumParams,
    derived_coupler_params,
    fluxonium_hamiltonian,
    full_hamiltonian,
)
from .config import RunConfig, config_echo, load_config  # noqa: F401
from .spectrum import (  # noqa: F401
    computational_spectrum,
    fit_spectroscopy,
    qubit_splittings,
    read_spectroscopy_csv,
    spectroscopy_forward,
    write_spectroscopy_csv,
    zz_strength,
)
from .fluxmap import (  # noqa: F401
    EffectiveParams,
    ZZLandscape,
    cancellation_offset,
    extract_effective_params,
    find_off_position,
    phi_s_rows,
    sweet_spot_contour,
    zz_landscape,
)
from .dynamics import (  # noqa: F401
    ChevronMap,
    CrosstalkModel,
    DecoherenceRates,
    DrivePulse,
    calibrate_crosstalk_compensation,
    chevron_scan,
    fit_oscillation_frequency,
    propagate_lindblad,
    propagate_unitary,
)
from .gates import (  # noqa: F401
    GatePhases,
    GateSequence,
    bswap_like_matrix,
    calibrate_phases,
    calibrate_rotation_angle,
    compile_cnot,
    iswap_like_matrix,
)
from .errorbudget import (  # noqa: F401
    ErrorBudget,
    MagnusResult,
    assemble_error_budget,
    decoherence_infidelity,
    magnus_for_gate,
    pedersen_fidelity,
)
from .benchmarking import (  # noqa: F401
    BenchmarkRun,
    DecayCurve,
    DecayFit,
    NoiseModel,
    XebPairResult,
    fidelity_from_depolarizing,
    fit_depolarizing,
    run_interleaved_rb_cnot,
    run_simultaneous_rb,
    run_xeb,
    run_xeb_pair,
)
from .errors import (  # noqa: F401
    AccuracyError,
    CalibrationError,
    ConfigError,
    FitError,
    FluxcouplerError,
    LabelingError,
    LandscapeError,
)
