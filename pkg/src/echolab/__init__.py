"""echolab: quantum-reversibility and entanglement phenomenology of chaotic
quantum maps -- Loschmidt, displacement and Boltzmann echoes, purity decay,
discrete Wigner functions, and regime analysis."""

__version__ = "0.1.0"

from .qstate import (  # noqa: F401
    BasisMismatchError,
    DensityMatrix,
    GenericBasis,
    SpinBasis,
    StateVector,
    TorusGrid,
    WavepacketSpec,
    coherent_width,
    compass_mixture,
    compass_pure,
    gaussian_torus,
    overlap,
    partial_trace,
    purity,
    random_state,
    spin_coherent,
)
from .dynamics import (  # noqa: F401
    CoupledRotatorFloquet,
    KickedRotatorFloquet,
    KickedTopFloquet,
    LyapunovEstimate,
    benettin_lyapunov,
    boltzmann_backward,
    finite_time_lyapunov,
    spin_operators,
    standard_map_step,
    top_map_step,
)
from .echoes import (  # noqa: F401
    CompassSampler,
    DisplacementSpec,
    EchoEnsembleStats,
    EchoSeries,
    GaussianPacketSampler,
    RandomStateSampler,
    SpinCoherentSampler,
    boltzmann_echo,
    displacement_echo,
    displacement_plateau_prediction,
    ensemble_stats,
    loschmidt,
    mixed_state_echo,
    prepared_echo,
    response_spectrum,
    threshold_time,
)
from .entanglement import (  # noqa: F401
    BipartiteState,
    PuritySeries,
    purity_ensemble,
    purity_series,
    reduced_density,
    spin_dephasing_toy,
)
from .phasespace import (  # noqa: F401
    PointCloud,
    WignerGrid,
    classical_fidelity,
    gaussian_cloud_sphere,
    gaussian_cloud_torus,
    liouville_propagate,
    momentum_marginal,
    position_marginal,
    rotate_x,
    trace_product,
    wigner,
    wigner_to_csv,
)
from .analysis import (  # noqa: F401
    FitKind,
    FitResult,
    LdosHistogram,
    Regime,
    RegimeParams,
    classify_regime,
    default_fit_window,
    ehrenfest_time,
    fit_exponential,
    fit_gaussian,
    fit_power,
    ldos,
    lorentzian_fit,
    predicted_gamma,
    reference_curve,
    spectral_echo_mean,
    unitary_eigensystem,
)
