"""Random systems of two interval homeomorphisms, studied on the real line."""

from .cantor import CantorBlock, GridCantorSet, gaps, membership, order_homeo
from .conjugacy import dh, h_forward, h_inverse
from .errors import (
    ConstructionError,
    DomainError,
    InfeasibleError,
    InvalidMapError,
    NotExactError,
    RihomError,
)
from .maps import (
    MonotoneMap,
    PiecewiseMap,
    compose,
    endpoint_derivatives,
    identity,
    sup_distance,
    translation,
    transport_map,
)
from .numbers import QSqrt2
from .systems import RandomSystem, lyapunov, system_distance, validate

__version__ = "0.1.0"
