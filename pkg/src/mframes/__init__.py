"""Bandlimited Parseval frames, positive cubature and Shannon sampling on compact manifolds."""
from .cubature import CubatureRule, auto_rule, compute_weights, integrate, verify_exactness
from .filterbank import FilterBank, apply_filter, eval_filter, eval_g, eval_kernel
from .frames import FrameSet, analyze, build_frame, localization_profile, synthesize
from .lattice import Lattice, generate_lattice, verify_lattice
from .manifolds import (
    CIRCLE, SPHERE2, TORUS2, EigenEntry, Manifold, SpectralCoefficients,
    dim_bandlimited, eval_eigenfunction, geodesic_distance, get_manifold,
    product_band, random_bandlimited, spectrum,
)
from .sampling import build_sampling_scheme, fourier_coefficients, reconstruct

__version__ = "0.1.0"
