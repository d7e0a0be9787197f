"""Streaming discovery of the most salient object in an unlabeled image sequence."""

from .evaluation import (
    GroundTruth,
    MetricReport,
    average_precision,
    corloc,
    evaluate_sequence,
    load_davis_gt,
    load_ground_truth,
    match_at_iou,
    precision_recall_f,
)
from .exceptions import ObjScoutError
from .features import (
    DESCRIPTOR_DIM,
    extract_descriptor,
    load_embeddings,
    similarity,
    write_embedding_file,
)
from .geometry import BoundingBox, Frame, clip_box, crop_resize, iou, iter_frames, load_frame
from .graph import CorrespondenceGraph, Edge, TrackPath, Vertex, emit_detection, match_frames, path_score
from .pipeline import (
    DetectionRecord,
    DiscoverySession,
    SalientObjectDiscovery,
    read_detections,
    write_detections,
)
from .proposals import (
    ObjectProposal,
    ProposalManifest,
    generate_fallback_proposals,
    load_proposals,
    saliency_nms,
    score_saliency,
)
from .saliency import SaliencyMap, binarize, compute_saliency, mbd_transform, normalize_saliency
from .synthetic import SyntheticSpec, generate_synthetic
from .template import Template, build_template, ncc_search, predict_proposal

__version__ = "0.1.0"

__all__ = [
    "BoundingBox",
    "CorrespondenceGraph",
    "DESCRIPTOR_DIM",
    "DetectionRecord",
    "DiscoverySession",
    "Edge",
    "Frame",
    "GroundTruth",
    "MetricReport",
    "ObjScoutError",
    "ObjectProposal",
    "ProposalManifest",
    "SaliencyMap",
    "SalientObjectDiscovery",
    "SyntheticSpec",
    "Template",
    "TrackPath",
    "Vertex",
    "average_precision",
    "binarize",
    "build_template",
    "clip_box",
    "compute_saliency",
    "corloc",
    "crop_resize",
    "emit_detection",
    "evaluate_sequence",
    "extract_descriptor",
    "generate_fallback_proposals",
    "generate_synthetic",
    "iou",
    "iter_frames",
    "load_davis_gt",
    "load_embeddings",
    "load_frame",
    "load_ground_truth",
    "load_proposals",
    "match_at_iou",
    "match_frames",
    "mbd_transform",
    "ncc_search",
    "normalize_saliency",
    "path_score",
    "precision_recall_f",
    "predict_proposal",
    "read_detections",
    "saliency_nms",
    "score_saliency",
    "similarity",
    "write_detections",
    "write_embedding_file",
]
