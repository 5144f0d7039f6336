"""Bell-test simulation toolkit for classical stochastic optical fields.

Models partially polarized light as finite ensembles of stochastic
two-component fields, decomposes them into polarization and function-space
factors, and reproduces an interferometric Bell-test protocol end to end:
source synthesis, polarization tomography, Schmidt decomposition,
stripping-polarizer interferometry, intensity-based joint-probability
extraction, and CHSH evaluation with bootstrap errors.
"""

from .bell import (
    AngleSettings,
    LhvModel,
    SHIPPED_LHV_MODELS,
    chsh,
    chsh_closed_form_max,
    correlation,
    correlation_closed_form,
    cosine_response_model,
    joint_probability_direct,
    joint_probability_kappa,
    joint_probability_projected,
    lhv_chsh,
    lhv_correlation,
    marginal_A,
    max_chsh,
    sign_response_model,
)
from .ensemble import (
    CoherenceMatrix,
    FieldEnsemble,
    SchmidtDecomposition,
    StokesVector,
    coherence_matrix,
    dop,
    intensity,
    kappa_from_dop,
    load_ensemble_csv,
    polarization_report,
    save_ensemble_csv,
    schmidt,
    stokes,
    synthesize_partially_polarized,
    synthesize_schmidt_form,
    tomography,
)
from .errors import (
    DegenerateFieldError,
    DomainError,
    ExtractionError,
    ModelContractError,
    StrippedBeamError,
    WavebellError,
)
from .interferometer import (
    BellReport,
    CorrelationCurve,
    IntensityTriple,
    NoiseModel,
    ProtocolConfig,
    SettingResult,
    bootstrap_error,
    extract_probability,
    measure_correlation,
    measure_intensities,
    measure_joint_probability,
    run_bell_protocol,
    scan_correlation,
)
from .optics import (
    FunctionBasis,
    LabBasis,
    apply_polarizer,
    beamsplitter_combine,
    beamsplitter_split,
    polarizer_axis,
    reduce_polarizer_angle,
    rotate_function_basis,
    rotate_lab_basis,
    stripping_angle,
    stripping_angle_orthogonal,
    waveplate,
)

__version__ = "0.1.0"
