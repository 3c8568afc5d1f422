"""Marginal moment profiles of convex bodies and a greedy search for
orthonormal directions with subgaussian-type two-sided moment bounds."""

__version__ = "0.1.0"

from .bodies import (  # noqa: E402
    BodyKind,
    BodySpec,
    MarginalDensity,
    closed_form_marginal,
    contains,
    load_body,
    make_body,
    marginal_density,
    support,
    support_radius,
)
from .construction import DirectionSet, GridD, certify, find_directions, in_Ap, in_Bp, make_grid  # noqa: E402
from .errors import *  # noqa: E402,F401,F403
from .isotropy import IsotropicTransform, estimate_covariance, isotropic_transform, isotropize  # noqa: E402
from .moments import (  # noqa: E402
    MomentProfile,
    sphere_gauss_prefactor,
    marginal_lp,
    moment_profile,
    neg_moment_gaussian,
    neg_moment_sphere,
    psi2_norm,
)
from .sampling import SampleBatch, sample_gaussian, sample_uniform  # noqa: E402
