"""MSE-based training and transmission optimization for MIMO ISAC links.

The package covers the full pipeline: correlation models and LMMSE
estimators, closed-form performance metrics, training-signal designs
(general and structured water-filling), MM-based robust beamforming,
statistical-CSI joint designs (alternating and GP-based), and a Monte
Carlo experiment harness with a CLI.
"""

from .beamforming import (
    MMTrace,
    SurrogateCoefficients,
    beamforming_objective,
    existing_scheme,
    mm_beamformer,
    mm_beamformer_mi,
    solve_surrogate,
    surrogate_coefficients,
    surrogate_value,
)
from .experiments import (
    ExperimentConfig,
    algorithm_comparison,
    approximation_study,
    emit_csv,
    load_config,
    mse_region_sweep,
    run_scheme,
    run_sweep,
)
from .joint import (
    AOTrace,
    PowerAllocationState,
    communication_oriented,
    joint_design_ao,
    joint_design_gp,
    joint_objective,
    sensing_oriented,
    solve_training_subproblem,
)
from .metrics import (
    MetricReport,
    mi_ce,
    mi_com,
    mi_com_avg,
    mi_rad,
    mmse_receiver,
    mse_ce,
    mse_com,
    mse_com_avg,
    mse_rad,
    receiver_mse,
)
from .model import (
    Beamformer,
    ChannelEstimate,
    ChannelRealization,
    CorrelationMatrix,
    SystemConfig,
    TrainingSignal,
    complex_gaussian,
    exponential_correlation,
    identity_correlation,
    lmmse_channel_estimate,
    lmmse_trm_estimate,
    qpsk_symbols,
    synthesize_channel,
    trial_rng,
)
from .numerics import (
    EigenDecomposition,
    SolverSettings,
    barrier_newton,
    bisect,
    evd,
    pgd_minimize,
    psd_project,
    quartic_positive_root,
    spd_inverse,
)
from .results import DesignResult
from .training import (
    TrainingDesign,
    WaterfillAllocation,
    design_training,
    design_training_ls,
    design_training_mi,
    design_training_structured,
    recover_training,
)

__version__ = "0.1.0"
