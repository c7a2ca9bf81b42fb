"""Averaging and fluctuation laboratory for 1D reaction-diffusion SPDEs with
fast transport and white-noise flux forcing on the boundary."""

from .operator import (EllipticOperator1D, InvariantMeasure, SpectralBasis, eigensolve,
                       hmu_norm, invariant_density, semigroup_apply)
from .neumann import adjoint_mode_coeff, boundary_propagator_coeff, solve_neumann
from .noise import NoisePath, NoiseSpec, refine, sample_batch, sample_path
from .coefficients import HypothesisError, ScalarField, constant, validate, zero
from .spde import SpdeConfig, SpdePath, integrate
from .averaged import AveragedModel, build as build_averaged, integrate_coupled, integrate_law
from .fluctuation import gaussian_compare, i0_covariance, z_field

__version__ = "0.1.0"
