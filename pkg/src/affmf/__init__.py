"""Multifractal machinery for dominated planar self-affine systems."""

__version__ = "0.1.0"

from .cones import (DominationReport, FurstenbergCover, Multicone, domination_ratio_test,
                    find_invariant_multicone, furstenberg_cover, verify_strong_invariance)
from .config import ConfigError, SystemConfig, load_config
from .empirical import (WeightedCloud, coarse_spectrum, exact_dimension_check,
                        local_dimension_at, sample_selfaffine_measure, validate_legendre)
from .geometry import (Enclosure, SeparationReport, attractor_sample, canonical_point,
                       check_projective_strong_separation, check_strong_separation,
                       enclosure, projected_density)
from .matrix2 import AngleInterval, Mat2, NonInvertibleError, projective_image, \
    singular_values, word_product
from .pressure import (BudgetError, EquilibriumFunctionals, PotentialSpec, PressureEstimate,
                       equilibrium_functionals, gibbs_level_measure, multifractal_potential,
                       pressure_estimate, pressure_value, qb_constant_calibrate, svf)
from .spectrum import (LyapunovDimensionResult, SpectrumPoint, SpectrumTable,
                       affinity_dimension, depth_extrapolate, legendre_point,
                       lyapunov_cross_dimension, lyapunov_dimension, lyapunov_dimension_root,
                       solve_sq, spectrum_table, tau, tau_prime_fd, tau_prime_formula)
from .symbolic import (BernoulliWeights, BlockGibbsWeights, CylinderWeightModel, LevelMeasure,
                       SupportError, Word, bernoulli_weight, cross_entropy_of_level,
                       entropy_of_level)
from .system import AffineIFS
