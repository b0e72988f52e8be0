"""Streaming token-grid compression through a three-tier memory hierarchy.

Dense per-frame feature-token grids flow through short, mid and long
buffers; temporal selection and spatial consolidation keep what moves and
merge what repeats, with per-frame adaptive thresholds and a zero-overhead
scene-change trigger.
"""

from .engine import (
    EngineStats,
    EvictionRecord,
    FlattenedContext,
    MemoryConfig,
    StreamingMemory,
    TriggerEvent,
)
from .fmts import FmtsError, read_stream, write_stream
from .model import FrameEntry, RetainedToken, TokenGrid
from .otsu import ThresholdReport, otsu_threshold
from .policies import Policy, apply_policy
from .scoring import (
    ScoreField,
    adjacent_scores,
    backward_scores,
    cosine_distance,
    forward_scores,
)
from .sdc import UnionFind, neighbor_pairs, sdc_consolidate
from .synth import SceneSpec, generate, generate_with_masks
from .tas import tas_select

__version__ = "0.1.0"

__all__ = [
    "EngineStats",
    "EvictionRecord",
    "FlattenedContext",
    "FmtsError",
    "FrameEntry",
    "MemoryConfig",
    "Policy",
    "RetainedToken",
    "SceneSpec",
    "ScoreField",
    "StreamingMemory",
    "ThresholdReport",
    "TokenGrid",
    "TriggerEvent",
    "UnionFind",
    "adjacent_scores",
    "apply_policy",
    "backward_scores",
    "cosine_distance",
    "forward_scores",
    "generate",
    "generate_with_masks",
    "neighbor_pairs",
    "otsu_threshold",
    "read_stream",
    "sdc_consolidate",
    "tas_select",
    "write_stream",
]
