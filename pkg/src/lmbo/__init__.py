"""Mixed-variable Bayesian optimization of MLP architectures trained by Levenberg-Marquardt."""

from .bo import BoResult, TrialRecord, expected_improvement, propose_next, run_ego
from .design_space import (
    DesignPoint,
    DesignSpace,
    DesignSpaceError,
    VariableSpec,
    aero_space,
    build_space,
    categorical,
    continuous,
    decree_activity,
    integer,
    ordinal,
    self_noise_space,
)
from .gp import GpConfig, GpModel, fit, log_likelihood
from .kernels import ThetaLayout, corr_matrix, k_cat_cr, k_cat_gd, k_cont, k_mixed
from .lm import TrainConfig, TrainedModel, lm_step, split_dataset, train
from .metrics import mape, mse, parameter_efficiency, rmse
from .mlp import MlpArchitecture, count_params, embed, forward, init_params, jacobian

__version__ = "0.1.0"
