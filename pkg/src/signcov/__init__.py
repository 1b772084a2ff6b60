"""Sign covariance ``t*``: estimation, null laws and independence tests."""
__version__ = "0.1.0"

from .estimator import InsufficientSampleError, PairedSample, TStarEstimate, tstar, tstar_bruteforce, tstar_many
from .inference import (
    MarginalSpec,
    PowerRequest,
    TestResult,
    critical_value,
    power_normal_approx,
    sample_size,
    test_asymptotic,
    test_permutation,
)
from .kernel import Classification, Quadruple, classify, h_kernel
from .nulldist import NullDistribution, PrecisionError
from .spectrum import (
    DiscreteMarginal,
    MixtureSpectrum,
    spectrum_continuous,
    spectrum_discrete,
    spectrum_mixed,
)

__all__ = [
    "__version__",
    "Classification",
    "DiscreteMarginal",
    "InsufficientSampleError",
    "MarginalSpec",
    "MixtureSpectrum",
    "NullDistribution",
    "PairedSample",
    "PowerRequest",
    "PrecisionError",
    "Quadruple",
    "TStarEstimate",
    "TestResult",
    "classify",
    "critical_value",
    "h_kernel",
    "power_normal_approx",
    "sample_size",
    "spectrum_continuous",
    "spectrum_discrete",
    "spectrum_mixed",
    "test_asymptotic",
    "test_permutation",
    "tstar",
    "tstar_bruteforce",
    "tstar_many",
]
