"""Truncated Fock-space simulator for heralded non-Gaussian optical states."""

from ._kernels import BACKEND
from .channels import (
    DetectorModel,
    ThermalLossParams,
    click_matrix,
    dark_count_mean_photon,
    noisy_herald_pnrd,
    pure_loss,
    thermal_loss,
    thermal_loss_dilation_oracle,
)
from .fock import (
    DensityOperator,
    PureState,
    Truncation,
    TruncationWarning,
    ZeroProbabilityHerald,
    density,
    fock_state,
    normalize,
    partial_trace,
    pure,
    tensor,
    truncation_health,
    vacuum,
)
from .measurement import (
    HeraldedResult,
    breed_x0,
    herald_homodyne_x0,
    herald_pnrd,
    homodyne_x_functional,
    quadrature_distribution,
)
from .metrics import (
    SqueezingReport,
    db_to_r,
    effective_squeezing,
    fidelity,
    parity,
    squeezing_correction,
    squeezing_db,
    stabilizer_expectation,
    wigner,
)
from .operators import (
    Beamsplitter,
    CubicPhase,
    Displace,
    ModeOperator,
    Squeeze,
    TwoModeSqueeze,
    build_unitary,
    expm_skew,
    heralded_opa_kraus,
    ladder,
)
from .optimize import OptimizationProblem, OptimizationResult, grid_refine, maximize
from .protocols import (
    ProtocolConfig,
    ProtocolReport,
    cat_breed,
    cubic_fock,
    cubic_opa,
    find_efficiency_threshold,
    find_loss_threshold,
    fock_prep,
    gaussian_correct,
    generation_rate,
    gkp_breed,
    gkp_pipeline,
    photon_add_fock,
    photon_add_opa,
    run_config,
)
from .targets import (
    CatSpec,
    GkpSpec,
    coherent,
    ideal_cat,
    ideal_cubic,
    ideal_gkp,
    ideal_photon_added_squeezed,
    squeezed_vacuum,
)

__version__ = "0.1.0"
