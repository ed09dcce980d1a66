"""Probability distributions built from measurement-scale invariances.

A distribution is q = k exp(-lam T(z)) on a canonical scale T, weighted by
one of three measures (dz, dT or the radial dR).  Submodules:

scales       base and canonical scales, generators
invariance   affine-similarity and shift/stretch checks
engine       normalization, densities, moments, identities
chart        scale minimum and radial coordinate
radial       Gaussian radial form and rotational partitions
catalog      named families with closed-form oracles
sampling     deterministic inverse-CDF sampling
fitting      maximum-likelihood fits
"""

from .catalog import FamilyTag, NamedFamily, REFERENCE_PARAMS, beta_mode, build, closed_form_pdf, cross_check
from .chart import RadialChart, find_scale_minimum
from .engine import (Distribution, MeasureKind, average_T, cdf, conserved_check, cumulative_relation_check,
                     distribution_from_spec, distribution_to_spec, entropy, entropy_direct, log_pdf,
                     make_distribution, mean_of, normalize, pdf, solve_lambda, to_radial, total_mass)
from .errors import *  # noqa: F401,F403
from .fitting import FitResult, mle_fit, sufficient_stats_gamma
from .invariance import (InvarianceReport, check_affine_similarity, check_asymptotic_invariance,
                         check_shift_invariance, check_stretch_invariance, fit_affine, iterate_generator,
                         natural_generator, verify_distribution)
from .quadrature import QuadratureConfig, integrate
from .radial import (Partition2D, circular_partition, factor_location_rate, parametric_curves,
                     radial_coordinate, radial_variance, sqrt_probability_partition, to_gaussian_form)
from .sampling import quantile, sample
from .scales import (BaseScale, CanonicalScale, Generator, GeneratorKind, ScaleKind, apply_generator,
                     compose_scales, eval_base, eval_canonical)

__version__ = "0.1.0"
