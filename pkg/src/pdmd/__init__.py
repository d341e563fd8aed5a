"""Parametric dynamic mode decomposition with baselines and a benchmark
pipeline."""
from .baselines import fit_rkoi, fit_stacked, predict_rkoi, predict_stacked
from .dmd import SnapshotSet, fit_dmd, predict_dmd
from .errors import (
    DegenerateInput,
    DivergenceDetected,
    IllConditioned,
    InvalidInput,
    NumericalFailure,
    RankDeficiencyWarning,
    SingularEigenvalue,
    SpecRejected,
)
from .metrics import compare_methods, residual_error, time_averaged_error
from .params import Normalization, ParamFunction, ParamMap
from .pidmd import fit_pidmd, predict_pidmd, reduce

__version__ = "0.1.0"
