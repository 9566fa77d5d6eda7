"""
qidlab: quasi-infinite divisibility of discrete multivariate laws.

A discrete law is lifted to a trigonometric series on a torus, the minimum
of its modulus is certified on a grid, and when it is positive the
distinguished logarithm yields the quasi-Levy triplet.
"""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    BudgetExceeded,
    CertificateError,
    DimensionMismatch,
    GeneratorMismatch,
    InvalidLaw,
    LiftError,
    NoTriplet,
    QIDError,
    RealnessError,
    TruncationError,
    UnwrapError,
)
from .spectrum import (  # noqa: E402
    DiscreteLaw,
    GeneratorSystem,
    Spectrum,
    convolve,
    exp_spectrum,
    invert,
    truncate_normalize,
)
from .lattice import LiftMap, injective_functional, lift, lift_rational, rational_basis  # noqa: E402
from .torus import (  # noqa: E402
    DistinguishedLog,
    MinModulusCertificate,
    certified_min_modulus,
    distinguished_log,
    kronecker_min_probe,
    winding_numbers,
)
from .engine import (  # noqa: E402
    AnalysisReport,
    QuasiLevyTriplet,
    Tolerances,
    Verdict,
    analyze,
    convolution_power,
    factorize,
    reconstruct_error,
    triplet_to_law,
)
from .cramer_wold import cw_test, generic_direction, lattice_direction, project  # noqa: E402
from .lawspec import load_spec, parse_spec  # noqa: E402
