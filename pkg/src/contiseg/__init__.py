"""Continuity-preserving segmentation losses and instance-length metrics."""

from .components import ComponentLabels, label_components, overlap_table
from .lengths import (
    InstanceLength,
    SkeletonGraph,
    build_skeleton_graph,
    graph_diameter,
    instance_lengths,
    write_lengths_csv,
)
from .losses import (
    EPS,
    PRESETS,
    DegenerateLossWarning,
    LossReport,
    LossWeights,
    bce,
    cl_dice,
    combined_loss,
    find_regions,
    negative_centerline,
    simplified_topology,
    soft_dice,
)
from .metrics import (
    InstanceMatching,
    MetricReport,
    evaluate_pair,
    match_instances,
    overlapping_instances,
    precision_recall,
    ssmd,
    voxel_dice,
    wasserstein_1d,
)
from .morphology import binary_dilate, maxpool, minpool
from .skeleton import binarize_skeleton, soft_skeleton
from .synth import TubeSpec, generate_scene, stamp_centerline
from .volume import (
    ContainerFormatError,
    Spacing,
    downscale_xy,
    read_volume,
    upscale_xy_nearest,
    write_volume,
)

__version__ = "0.1.0"

__all__ = [
    "ComponentLabels",
    "ContainerFormatError",
    "DegenerateLossWarning",
    "EPS",
    "InstanceLength",
    "InstanceMatching",
    "LossReport",
    "LossWeights",
    "MetricReport",
    "PRESETS",
    "SkeletonGraph",
    "Spacing",
    "TubeSpec",
    "bce",
    "binarize_skeleton",
    "binary_dilate",
    "build_skeleton_graph",
    "cl_dice",
    "combined_loss",
    "downscale_xy",
    "evaluate_pair",
    "find_regions",
    "generate_scene",
    "graph_diameter",
    "instance_lengths",
    "label_components",
    "match_instances",
    "maxpool",
    "minpool",
    "negative_centerline",
    "overlap_table",
    "overlapping_instances",
    "precision_recall",
    "read_volume",
    "simplified_topology",
    "soft_dice",
    "soft_skeleton",
    "ssmd",
    "stamp_centerline",
    "upscale_xy_nearest",
    "voxel_dice",
    "wasserstein_1d",
    "write_lengths_csv",
    "write_volume",
]
