"""Multi-tone feedback FM (MT-FFM) waveform synthesis, analysis and design."""

from .errors import (
    ConvergenceDomainError,
    DomainError,
    MetricUndefinedError,
    MTFFMError,
    NumericalError,
    PreconditionError,
)
from .kapteyn import (
    DesignCoefficients,
    KapteynExpansion,
    WaveformParams,
    invert_kepler,
    kapteyn_coefficients,
    modulation_function,
    phase_function,
)
from .metrics import (
    IsrResult,
    isr,
    mainlobe_null,
    rms_bandwidth_direct,
    rms_bandwidth_kapteyn,
    rms_bandwidth_spectral,
    waveform_isr,
)
from .optimizer import OptimizationTrace, OptimizerConfig, optimize, project_convergence, random_init
from .special_functions import bessel_j, fourier_line_coefficients, gbf
from .waveform import (
    AmbiguitySurface,
    FourierLineCoefficients,
    SampledWaveform,
    acf,
    ambiguity_closed,
    ambiguity_numeric,
    line_coefficients,
    spectrogram,
    spectrum,
    synthesize,
)

__version__ = "0.1.0"
