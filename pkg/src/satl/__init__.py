"""Single-atom laser toolkit.

Steady states, output spectra, photon statistics, and quantum-trajectory
realizations for three- and four-level single-atom gain schemes in a
damped cavity, with incoherent or coherent pumping.
"""

__version__ = "0.1.0"

from .errors import (
    ConfigurationError,
    DegenerateSteadyStateError,
    DoubletDetectedError,
    FitError,
    NumericalError,
    PreconditionError,
    SatlError,
    TruncationFailureError,
    UnsupportedSchemeError,
    ZeroSignalError,
)
from .hilbert import OperatorMatrix, StateSpace, annihilation, atomic_transition
from .liouvillian import (
    Generator,
    SteadyState,
    build_generator,
    propagate,
    solve_with_adaptive_truncation,
    steady_state,
    unvec,
    vec,
)
from .models import (
    ModelSpec,
    RateParams,
    SCHEMES,
    build_model,
    four_level_coherent,
    four_level_incoherent,
    three_level_incoherent,
)
from .observables import (
    PhotonStats,
    beta_for_scheme,
    beta_four_level,
    beta_three_level,
    photon_stats,
    trace_distance,
    verify_adiabatic_reduction,
)
from .spectrum import (
    FrequencyGrid,
    LineFit,
    Peak,
    ReducedGenerator,
    SpectrumResult,
    classify_peaks,
    estimate_fwhm,
    fit_lorentzian,
    output_spectrum,
    reduced_spectrum,
    regression_spectrum,
    schawlow_townes,
    sector_reduced_generator,
)
from .trajectory import (
    CollapseEvent,
    ConditionedState,
    RngStream,
    TrajectoryRecord,
    effective_hamiltonian,
    ensemble_density,
    ensemble_events,
    run_trajectory,
    segment_oscillation_frequencies,
    step,
)
