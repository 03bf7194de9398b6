"""Nilpotentization, stratified isomorphism and Cantor-set rectification tools."""
from .symvec import Poly, PolyVectorField, Frame
from .flag import GrowthVector, bracket_flag, equiregular_check, hausdorff_dimension, weights
from .gliso import (GradedLieAlgebra, GradedMap, change_basis, e147_family, e147_orbit,
                    invariant_prescreen, stratified_iso_search, symbol0_algebra,
                    symbol0_normalizer)
from .nilpot import Nilpotentizer, nilpotentization, privileged_coordinates
from .carnot import CarnotGroup, ControlSignal
from .ccmetric import (EstimateConstants, TangentModel, cc_distance_bounds, closed_loop_defect,
                       integrate_controls, transfer_defect)
from .patchwork import (CubicalPatchwork, PatchworkBuilder, PointCloudMM, build_patchwork,
                        check_patchwork, lattice_box, sample_group_cloud)
from .rectify import (CantorEmbedder, build_cantor, build_embedding, cantor_measure_report,
                      check_biholder, coverage_experiment, tree_maps)

__version__ = "0.1.0"
