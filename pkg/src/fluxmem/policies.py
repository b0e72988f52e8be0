"""Per-frame token reduction policies for baseline comparisons.

apply_policy maps (frame, scores) to a FrameEntry the way the adaptive
selector does, so any policy can stand in at the short-to-mid boundary:

  fluxmem          adaptive selection (the real method)
  fifo             keep everything; reduction happens only by tier eviction
  uniform          keep every k-th token row-major for a target drop ratio
  random           keep a seeded uniform sample of the exact target count
  fixed_threshold  the selection rule with constant thresholds instead of
                   per-frame Otsu (stands in for fixed-rule competitors)

random keep-sets come from the portable counter-based generator keyed by
(seed, frame_index), so they reproduce across platforms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import FrameEntry, TokenGrid, entry_from_mask
from .otsu import DEFAULT_BINS, DEFAULT_FLAT_EPSILON
from .rng import PortableRng
from .scoring import ScoreField
from .tas import tas_select

POLICY_KINDS = ("fluxmem", "fifo", "uniform", "random", "fixed_threshold")


@dataclass(frozen=True)
class Policy:
    kind: str
    ratio: float = 0.0  # target drop ratio for uniform/random
    theta_minus: float | None = None
    theta_plus: float | None = None
    theta_sdc: float | None = None
    seed: int = 0

    def __post_init__(self):
        if self.kind not in POLICY_KINDS:
            raise ValueError(f"unknown policy kind {self.kind!r}, expected one of {POLICY_KINDS}")
        if not 0.0 <= self.ratio <= 1.0:
            raise ValueError(f"ratio must be in [0, 1], got {self.ratio}")
        for name in ("theta_minus", "theta_plus", "theta_sdc"):
            v = getattr(self, name)
            if v is not None and not 0.0 <= v <= 2.0:
                raise ValueError(f"{name} must be in [0, 2], got {v}")
        if self.kind == "fixed_threshold" and self.theta_minus is None and self.theta_plus is None:
            raise ValueError("fixed_threshold needs theta_minus and/or theta_plus")


def uniform_keep_mask(n: int, ratio: float) -> np.ndarray:
    """Keep index i where floor((i+1)*keep_rate) increments; floor(n*keep) kept."""
    keep_rate = 1.0 - ratio
    idx = np.arange(n + 1, dtype=np.float64)
    marks = np.floor(idx * keep_rate)
    return (marks[1:] - marks[:-1]) >= 1.0


def random_keep_mask(n: int, ratio: float, seed: int, frame_index: int) -> np.ndarray:
    k = int(round((1.0 - ratio) * n))
    rng = PortableRng(seed, 0xF0A11C7, frame_index)
    mask = np.zeros(n, dtype=bool)
    mask[rng.sample(n, k)] = True
    return mask


def apply_policy(
    policy: Policy,
    frame: TokenGrid,
    scores: ScoreField | None,
    bins: int = DEFAULT_BINS,
    flat_epsilon: float = DEFAULT_FLAT_EPSILON,
) -> FrameEntry:
    """Reduce one frame to its kept tokens under the given policy."""
    n = frame.height * frame.width
    if policy.kind == "fluxmem":
        if scores is None:
            raise ValueError("fluxmem policy needs a score field")
        entry, _, _ = tas_select(frame, scores, bins, flat_epsilon)
        return entry
    if policy.kind == "fifo":
        return entry_from_mask(frame, np.ones(n, dtype=bool))
    if policy.kind == "uniform":
        return entry_from_mask(frame, uniform_keep_mask(n, policy.ratio))
    if policy.kind == "random":
        return entry_from_mask(
            frame, random_keep_mask(n, policy.ratio, policy.seed, frame.frame_index)
        )
    # fixed_threshold: the selection rule with constant thresholds
    if scores is None or (scores.backward is None and scores.forward is None):
        raise ValueError("fixed_threshold policy needs a score field")
    if scores.backward is None:
        keep = np.ones((frame.height, frame.width), dtype=bool)  # mirror frame-0 keep-all
    else:
        keep = np.zeros((frame.height, frame.width), dtype=bool)
        if policy.theta_minus is not None:
            keep |= scores.backward.astype(np.float64) > policy.theta_minus
        if scores.forward is not None and policy.theta_plus is not None:
            keep |= scores.forward.astype(np.float64) > policy.theta_plus
    return entry_from_mask(frame, keep)
