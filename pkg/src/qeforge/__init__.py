"""qeforge: quasi-Einstein geometry verification engine.

Curvature of pseudo-Riemannian metrics and affine connections via truncated
Taylor (jet) differentiation, Walker/Riemannian-extension constructors,
self-duality analysis on neutral four-manifolds, the generalized
quasi-Einstein residual suite, and affine eigenspace dimensions by jet
prolongation.
"""

from .errors import (
    DegenerateMetricError,
    FrameError,
    ParseError,
    QeforgeError,
    SingularityError,
)
from .jets import Jet, seed
from .dsl import ScalarField, parse
from .tensors import CurvaturePack, MetricField, curvature_pack
from .affine import AffineSurface, dim_E, s_kappa, type_A, type_B

__all__ = [
    "AffineSurface",
    "CurvaturePack",
    "DegenerateMetricError",
    "FrameError",
    "Jet",
    "MetricField",
    "ParseError",
    "QeforgeError",
    "ScalarField",
    "SingularityError",
    "curvature_pack",
    "dim_E",
    "parse",
    "s_kappa",
    "seed",
    "type_A",
    "type_B",
]
