"""Generalized inverse Gaussian distributions and their characterizations."""

__version__ = "0.1.0"

from .core import (  # noqa: E402
    GammaParams,
    GigParams,
    cdf,
    density,
    density_theta_eta,
    entropy,
    log_density,
    mean_log,
    mode,
    moment,
    quantile,
    reciprocal,
    scale_score,
    sf,
)
from .errors import (  # noqa: E402
    BesselOverflowError,
    BoundaryConditionError,
    ConfigurationError,
    ConvergenceError,
    GigDomainError,
    GigError,
    NonFiniteMomentError,
    NumericalDerivativeError,
    SampleSizeError,
    TailTruncationError,
)
from .estimation import FitResult, SummaryStats, eta_mle, fit_gig, profile_likelihood  # noqa: E402
from .sampling import (  # noqa: E402
    SampleBatch,
    SeedPlan,
    chain_iterates,
    chain_path,
    chain_step,
    sample_gamma,
    sample_gig,
)
from .special import (  # noqa: E402
    BesselEvalConfig,
    bessel_k,
    bessel_k_dlog_dorder,
    bessel_k_quadrature,
    bessel_k_ratio,
    log_bessel_k,
)
