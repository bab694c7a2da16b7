"""Continuous interpolants of lattice functions on Z^d.

``basis`` provides the nodal shape functions and their self-convolutions,
``interp`` the bar/tilde fields and their norms, ``convop`` the lattice
convolution operator and the smooth nodal interpolant, ``quasi`` the dual
basis and quasi-interpolant, and ``studies`` the experiment harness.
"""

from .basis import (
    AnalyticTensorCubic,
    ConvolutionQuadrature,
    NodalBasis,
    make_basis,
    make_extended_hat,
    make_p1,
    make_q1,
    smoothed,
    verify_assumptions,
)
from .convop import (
    ConvolutionOperator,
    InverseKernel,
    NonInvertibleBasisError,
    apply,
    build_operator,
    inverse_kernel,
    smooth_nodal_interpolant,
    solve,
)
from .interp import InterpolantField, Kind, NormReport, evaluate, lp_norm_field, sample_to_lattice, sobolev_norm
from .lattice import (
    DeformationField,
    DomainMismatchError,
    InvalidParameterError,
    LatticeDomain,
    LatticeFunction,
    forward_difference,
    lp_norm,
)
from .quasi import (
    DualBasis,
    Polynomial,
    QuasiInterpolant,
    apply_quasi,
    build_dual,
    cubic_preimage,
    two_basis_difference_check,
)

__version__ = "0.1.0"
