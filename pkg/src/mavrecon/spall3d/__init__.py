"""3D spall quantification: preprocess a column point cloud, segment side
planes, recover the undamaged prism, and integrate the cross-section area
deficit slice by slice. Includes a synthetic column generator whose carved
volume is known from a brute-force voxel oracle."""

from .cloud import Cloud, load_cloud, load_ply, load_xyz, save_ply, preprocess
from .planes import Plane, fit_plane_ransac
from .prism import PrismModel, PrismParams, segment_prism
from .volume import SliceRow, SpallReport, spall_volume
from .synth import Carve, ColumnSpec, gen_column, sample_column_cloud, voxel_carve_volume

__all__ = [
    "Cloud", "load_cloud", "load_ply", "load_xyz", "save_ply", "preprocess",
    "Plane", "fit_plane_ransac",
    "PrismModel", "PrismParams", "segment_prism",
    "SliceRow", "SpallReport", "spall_volume",
    "Carve", "ColumnSpec", "gen_column", "sample_column_cloud", "voxel_carve_volume",
]
