"""Transmission and emission of transluminal space-time gratings."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ConfigError,
    DomainError,
    HorizonSingularity,
    InsufficientPeaks,
    NoConvergence,
    NoSignChange,
    NotTransluminal,
    NumericalError,
    OverflowRisk,
    StepUnderflow,
    TranslumeError,
)
from .grating import (  # noqa: E402
    GratingConfig,
    HorizonKind,
    HorizonSet,
    RayTrajectory,
    comoving_params,
    find_horizons,
    local_speed,
    refractive_profile,
    trace_ray,
)
from .pulse import (  # noqa: E402
    PulseModel,
    asymptotic_amplitude,
    gamma,
    hawking_temperature,
    intensity_sum,
    pair_mode_sum,
    pair_number,
    phase_map,
    spectral_amplitude,
    spectral_amplitude_fourier,
)
from .floquet import (  # noqa: E402
    TransmissionLadder,
    WindowKernel,
    conservation_residual,
    coupling_matrix,
    transmission_column,
    transmission_ladder,
    window_kernel_weights,
)
from .emission import (  # noqa: E402
    EmissionSpectrum,
    FluxSpectrum,
    alias_signature,
    fit_temperature,
    photon_counts,
    stimulated_fractions,
    thermal_fit,
    vacuum_spectrum,
)
