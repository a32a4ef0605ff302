"""Fast non-singular rational approximations of entropic measures.

Kernels for exact, rational-approximation and Mitchell-baseline entropy
and symmetrized divergence terms; accuracy/bias/shape probes; a spectral
projected gradient optimizer over simplex and box constraints; and an
entropic feature-selection benchmark with a LASSO baseline.
"""

from .kernels import (
    NATURAL,
    ApproxCoefficients,
    DomainError,
    KernelVariant,
    ProbVector,
    ShapeError,
    SingularityError,
    entropy,
    entropy_grad,
    fea_term,
    fea_term_curvature,
    fea_term_grad,
    kl_divergence,
    kl_term_exact,
    kl_term_fea,
    kl_term_fea_grad,
    mitchell_entropy_term,
    mitchell_kl_term,
    mitchell_log2,
    rebase_coefficients,
    shannon_term_exact,
    shannon_term_exact_grad,
)

__version__ = "0.1.0"
