"""Meshless RBF-FD solver for small-strain elasto-plastic plane-strain problems."""

from .approx import BasisConfig, WeightStore, build_stencils, build_weight_store, compute_weights
from .driver import LoadProgram, RunReport, SolverConfig, run
from .elastic import (
    BoundaryConditionSet,
    assemble,
    boundary_conditions_from_tags,
    strain_from_displacement,
    stress_from_elastic_strain,
)
from .geometry import Cutout, QuarterAnnulus, Rectangle, contains, discretize_boundary
from .material import (
    ElasticConstants,
    HardeningCurve,
    MaterialModel,
    PointState,
    return_mapping,
    update_state,
    von_mises,
    yield_function,
)
from .nodegen import NodeSet, fill, nearest_neighbors
from .verify import (
    elastic_reference,
    error_norm,
    extract_front,
    front_from_pressure,
    front_shape,
    plastic_reference,
    to_cylindrical,
)

__all__ = [
    "BasisConfig", "WeightStore", "build_stencils", "build_weight_store", "compute_weights",
    "LoadProgram", "RunReport", "SolverConfig", "run",
    "BoundaryConditionSet", "assemble", "boundary_conditions_from_tags",
    "strain_from_displacement", "stress_from_elastic_strain",
    "Cutout", "QuarterAnnulus", "Rectangle", "contains", "discretize_boundary",
    "ElasticConstants", "HardeningCurve", "MaterialModel", "PointState",
    "return_mapping", "update_state", "von_mises", "yield_function",
    "NodeSet", "fill", "nearest_neighbors",
    "elastic_reference", "error_norm", "extract_front", "front_from_pressure",
    "front_shape", "plastic_reference", "to_cylindrical",
]

__version__ = "0.1.0"
