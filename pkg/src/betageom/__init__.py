"""Beta-geometric models of conception delay and mean fecundability."""

__version__ = "0.1.0"

from .bayes import BetaPrior, PosteriorSpec, empirical_prior, posterior, shrinkage_check
from .errors import (
    BetaGeomError,
    ConfigError,
    ConvergenceError,
    DegenerateDataError,
    DivergenceError,
    DomainError,
    EstimationError,
    InvalidMomentRegion,
    MissingMomentsError,
    MomentDoesNotExist,
    ParseError,
)
from .estimate import (
    FitResult,
    WaitSample,
    fit_geometric,
    fit_mle,
    fit_mme,
    log_likelihood,
    observed_information,
    score,
)
from .model import (
    BetaGeometricLaw,
    BetaLaw,
    GeometricLaw,
    WeinbergGladenParams,
    bg_cdf,
    bg_log_pmf,
    bg_moments,
    bg_pmf,
    bg_pmf_ratio,
    from_wg,
    geom_pmf,
    to_wg,
)
from .sampling import SeedSpec, sample_beta, sample_bg, sample_geometric
from .simstudy import StudyConfig, StudyTable, run_replicate, run_study
