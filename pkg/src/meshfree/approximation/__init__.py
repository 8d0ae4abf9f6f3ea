from .basis import (
    IDENTITY,
    LAPLACIAN,
    MonomialBasis,
    Operator,
    apply_operator_to_monomial,
    eval_monomial,
    first_partials,
    partial,
    phs_apply_operator,
    phs_eval,
    second_partial,
    second_partials,
)
from .engines import RBFConfig, WLSConfig, local_coordinates, rbffd_batch, rbffd_weights, wls_batch, wls_weights
from .shapes import Engine, EngineAssignment, ShapeStore, assign_engines, compute_shapes

__all__ = [
    "IDENTITY", "LAPLACIAN", "MonomialBasis", "Operator", "apply_operator_to_monomial", "eval_monomial",
    "first_partials", "partial", "phs_apply_operator", "phs_eval", "second_partial", "second_partials",
    "RBFConfig", "WLSConfig", "local_coordinates", "rbffd_batch", "rbffd_weights", "wls_batch", "wls_weights",
    "Engine", "EngineAssignment", "ShapeStore", "assign_engines", "compute_shapes",
]
