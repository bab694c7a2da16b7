from .checks import AssumptionReport, AssumptionResult, lattice_sum, verify_assumptions
from .nodal import (
    BasisConstructionError,
    Flavor,
    NodalBasis,
    PiecewiseBasis,
    Q1Basis,
    UnsupportedOrderError,
    custom_from_dict,
    load_custom,
    make_basis,
    make_extended_hat,
    make_p1,
    make_q1,
    support_set,
)
from .partition import (
    PartitionError,
    SimplicialPartition,
    crisscross_partition,
    default_partition,
    kuhn_partition,
)
from .smoothed import AnalyticTensorCubic, ConvolutionQuadrature, SmoothedBasis, bspline3, smoothed

