"""Temporal adjacency selection: which tokens of an evicted frame survive.

A token survives when its novelty versus either the past or the future
frame strictly exceeds that side's own Otsu threshold. The two sides are
thresholded independently and combined by disjunction. Frames with no
predecessor keep everything (nothing to be redundant with); a degenerate
score distribution keeps nothing on that side (pure redundancy).
"""

from __future__ import annotations

import numpy as np

from .model import FrameEntry, TokenGrid, entry_from_mask
from .otsu import DEFAULT_BINS, DEFAULT_FLAT_EPSILON, ThresholdReport, otsu_threshold
from .scoring import ScoreField


def tas_select(
    frame: TokenGrid,
    scores: ScoreField,
    bins: int = DEFAULT_BINS,
    flat_epsilon: float = DEFAULT_FLAT_EPSILON,
) -> tuple[FrameEntry, ThresholdReport | None, ThresholdReport | None]:
    """Select survivors of `frame` given its score field.

    Returns (entry, backward report, forward report); a report is None when
    that side's scores are absent. Survivors keep weight 1 and row-major
    order.
    """
    if scores.frame_index != frame.frame_index:
        raise ValueError(
            f"score field frame {scores.frame_index} != grid frame {frame.frame_index}"
        )
    if scores.backward is None and scores.forward is None:
        raise ValueError("both score sides absent")

    H, W, _ = frame.shape
    rep_minus = rep_plus = None
    if scores.backward is not None:
        rep_minus = otsu_threshold(scores.backward.ravel(), bins, flat_epsilon)
    if scores.forward is not None:
        rep_plus = otsu_threshold(scores.forward.ravel(), bins, flat_epsilon)

    if scores.backward is None:
        keep = np.ones((H, W), dtype=bool)  # first frame: no past to compare
    else:
        keep = np.zeros((H, W), dtype=bool)
        if not rep_minus.degenerate:
            keep |= scores.backward.astype(np.float64) > rep_minus.threshold
        if rep_plus is not None and not rep_plus.degenerate:
            keep |= scores.forward.astype(np.float64) > rep_plus.threshold

    return entry_from_mask(frame, keep), rep_minus, rep_plus
