"""Kernel ridge regression surrogates of dynamical systems from irregularly sampled series.

The kernel is a five-term composite whose parameters are learned with Kernel
Flows.  Time gaps between observations can be fed to the regressor alongside
the delayed states, which is what makes irregular sampling tractable.
"""
from .embedding import EmbeddedDataset, TimeSeries, Variant, embed
from .errors import (
    DivergenceError,
    FitError,
    InputError,
    IOFailure,
    KFlowError,
    LengthError,
    MetricError,
    NumericError,
    TrainingError,
)
from .experiment import ExperimentConfig, ExperimentReport, emit_table, run_experiment
from .forecaster import ForecastConfig, ForecastResult, forecast_chunked
from .interpolant import (
    FittedModel,
    error_bound,
    error_bounds,
    extend,
    fit,
    fit_dataset,
    newton_basis,
    predict,
    predict_many,
)
from .kernel_flows import KFConfig, TrainTrace, rho, rho_gradient, train
from .kernels import KernelParams, cross_gram, eval_kernel, gram, gram_param_gradient
from .metrics import ScoreReport, score
from .systems import SamplingScheme, SystemKind, SystemSpec, integrate, irregular_series

__version__ = "0.1.0"
