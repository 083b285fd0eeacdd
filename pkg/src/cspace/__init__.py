"""Complementary-space analysis of closed triangulated surfaces.

Pockets, tunnels and voids from the flow complex of the surface sample,
pockets by level-set out-and-back closing, thin walls on the interior
medial axis, and contact-based assembly order between parts.
"""
__version__ = "0.1.0"

from .kernels import BACKEND
from .mesh import BallSet, Label, MeshError, TriangleMesh
from .io import load_mesh, load_pdb, save_mesh, write_off
from .delaunay import build_delaunay, voronoi_dual
from .distance import DistanceField, signed_distance, unsigned_distance
from .flow import FlowComplex, extract_critical_points
from .features import (FeatureSet, SpaceModel, UndersampledError, compare_feature_sets,
                       compspace, tag_feature_mesh)
from .quantify import enclosed_volume, measure, measure_all, min_diameter, mouth_area, \
    time_series_report
from .levelset import (ScalarGrid, balls_to_grid, out_and_back, propagate_out_and_back,
                       rasterize_signed_distance)
from .thin import detect_thin_regions, interior_medial_axis, missing_tunnel_geometry
from .contact import Part, assembly_graph, contact_region, max_weight_spanning_tree

__all__ = [
    "BACKEND", "BallSet", "Label", "MeshError", "TriangleMesh", "load_mesh", "load_pdb",
    "save_mesh", "write_off", "build_delaunay", "voronoi_dual", "DistanceField",
    "signed_distance", "unsigned_distance", "FlowComplex", "extract_critical_points",
    "FeatureSet", "SpaceModel", "UndersampledError", "compare_feature_sets", "compspace",
    "tag_feature_mesh", "enclosed_volume", "measure", "measure_all", "min_diameter",
    "mouth_area", "time_series_report", "ScalarGrid", "balls_to_grid", "out_and_back",
    "propagate_out_and_back", "rasterize_signed_distance", "detect_thin_regions",
    "interior_medial_axis", "missing_tunnel_geometry", "Part", "assembly_graph",
    "contact_region", "max_weight_spanning_tree",
]
