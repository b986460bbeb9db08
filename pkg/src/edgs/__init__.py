"""Dense-correspondence splat initialization toolkit."""

from .camera import (CameraSet, CameraView, ProjectionMatrix, camera_distance,
                     load_colmap, nearest_neighbors, project, project_many,
                     projection_matrix, qvec_to_rotation, rotation_to_qvec)
from .correspondence import (CorrespondenceSet, MatchRecord, read_colors,
                             read_corr, write_colors, write_corr)
from .pipeline import (PipelineConfig, PipelineReport, neighbor_plan,
                       run_pipeline, select_reference_views)
from .sampling import (NoEligibleCorrespondences, Thresholds, ViewDistribution,
                       ViewSample, aggregate_global, build_view_distribution,
                       eligible, sample, view_seed)
from .sh import (ShBasisRow, ShCoefficients, eval_color, fit_sh, init_splat_sh,
                 sh_basis, sh_basis_many)
from .splat import (SplatInit, covariance_from, init_scale, inverse_sigmoid,
                    perturb, write_ply)
from .synth import (SceneOracle, export_scene, make_scene,
                    render_correspondences)
from .triangulate import (CandidateSet, TriangulatedCandidate, ndc,
                          reprojection_error, triangulate_pair, triangulate_set)

__version__ = "0.1.0"

__all__ = [
    "CameraSet", "CameraView", "ProjectionMatrix", "camera_distance",
    "load_colmap", "nearest_neighbors", "project", "project_many",
    "projection_matrix", "qvec_to_rotation", "rotation_to_qvec",
    "CorrespondenceSet", "MatchRecord", "read_colors", "read_corr",
    "write_colors", "write_corr",
    "PipelineConfig", "PipelineReport", "neighbor_plan", "run_pipeline",
    "select_reference_views",
    "NoEligibleCorrespondences", "Thresholds", "ViewDistribution", "ViewSample",
    "aggregate_global", "build_view_distribution", "eligible", "sample",
    "view_seed",
    "ShBasisRow", "ShCoefficients", "eval_color", "fit_sh", "init_splat_sh",
    "sh_basis", "sh_basis_many",
    "SplatInit", "covariance_from", "init_scale", "inverse_sigmoid", "perturb",
    "write_ply",
    "SceneOracle", "export_scene", "make_scene", "render_correspondences",
    "TriangulatedCandidate", "CandidateSet", "ndc", "reprojection_error",
    "triangulate_pair", "triangulate_set",
]
