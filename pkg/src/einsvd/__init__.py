"""Extremal singular triplets of dense tensors under the Einstein product."""

from .einstein import (
    EinsteinSvd,
    SingularTriplet,
    SplitTensor,
    diagonal_tensor,
    einstein_product,
    exact_einstein_svd,
    identity_tensor,
    transpose,
    truncated_reconstruct,
)
from .errors import (
    CapacityError,
    EinsvdError,
    FormatError,
    ModeError,
    NumericalError,
    PreconditionError,
    ShapeError,
)
from .lanczos import LanczosFactorization, aelb, elb, gres_norm, lift_triplets, res_norm
from .ritz import RestartConfig, RestartReport, build_augmented, extend_to_m, lbr
from .tensor import ModeSplit, read_eten, write_eten

__version__ = "0.1.0"
