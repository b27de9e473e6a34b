"""Control, games and generative diffusion driven by Rosenblatt noise."""
from .control import optimal_gain, surrogate_sweep, variance_aware_gains
from .cournot import CournotSpec, full_equilibrium, price_of_simplicity
from .diffusion import DiffusionSpec
from .errors import (
    BlowUpError,
    CoefficientSignError,
    ConfigurationError,
    ConvergenceError,
    DomainError,
    ExistenceError,
    GenerationError,
    InadmissibleError,
    ResourceLimitError,
    RosctlError,
    StencilError,
)
from .games import NashSpec, ZeroSumSpec, nash_fixed_point, zero_sum_saddle
from .harness import MCEstimate, NoiseConfig, estimate_ergodic_cost, summary_stats, wasserstein1
from .mftg import MftgSpec, cooperative_optimum, mftg_equilibrium
from .noise import NoiseKind, PathEnsemble, SamplePath, gen_brownian, gen_ensemble, gen_fgn, gen_rosenblatt
from .numerics import HurstParam, rosenblatt_constants
from .predict import PredictorSpec, f_exp, g_exp, predict_linear_ou, predict_martingale
from .sde import LinearDynamics, rosenblatt_ou_exact, simulate_linear_sde

__version__ = "0.1.0"
