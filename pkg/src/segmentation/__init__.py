from src.segmentation.amodal import (
    AmodalInputs,
    PartAmodalInputs,
    prepare_amodal_inputs,
    prepare_amodal_inputs_for_parts,
)
from src.segmentation.features import FaceFeatureSet, geometric_fallback_features, load_features, save_features
from src.segmentation.segmenter import (
    BASE,
    MOVABLE,
    PartLabels,
    SegmentationResult,
    backproject_mask,
    kmeans_refine,
    mean_feature,
    segment_movable,
    threshold_assign,
)

__all__ = [
    "AmodalInputs",
    "PartAmodalInputs",
    "prepare_amodal_inputs",
    "prepare_amodal_inputs_for_parts",
    "FaceFeatureSet",
    "geometric_fallback_features",
    "load_features",
    "save_features",
    "BASE",
    "MOVABLE",
    "PartLabels",
    "SegmentationResult",
    "backproject_mask",
    "kmeans_refine",
    "mean_feature",
    "segment_movable",
    "threshold_assign",
]
