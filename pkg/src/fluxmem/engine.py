"""Streaming three-tier memory: raw short tier, selected mid tier, anchor long tier.

Each incoming frame is scored against its predecessor on entry (one fused
pass also fills the predecessor's forward field), the activity trigger is
evaluated from those same scores at zero extra distance cost, and the frame
joins the short tier. Overflows cascade: the oldest short frame is filtered
by temporal selection into the mid tier; the oldest mid entry is
consolidated into anchors in the long tier; the long tier drops its oldest
entries outright.

Single-writer: one ingest or query at a time. State after frame t is a pure
function of frames 0..t and the queries at or before t, which `serialize`
makes checkable byte-for-byte (timing accumulators are excluded).
"""

from __future__ import annotations

import math
import struct
import time
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .model import FrameEntry, RetainedToken, TokenGrid
from .otsu import DEFAULT_BINS, DEFAULT_FLAT_EPSILON, otsu_threshold
from .policies import Policy, apply_policy
from .scoring import ScoreField, adjacent_scores
from .sdc import sdc_consolidate
from .tas import tas_select

CAPACITY_UNITS = ("frames", "tokens")


@dataclass(frozen=True)
class MemoryConfig:
    """Tier capacities and thresholding knobs.

    capacity_unit selects whether c_m and c_l count frame entries or tokens;
    the short tier always counts frames. c_s >= 2 so every evicted frame has
    its successor in-buffer for forward scoring.
    """

    c_s: int = 8
    c_m: int = 64
    c_l: int = 1024
    capacity_unit: str = "frames"
    gamma: float = 0.3
    bins: int = DEFAULT_BINS
    flat_epsilon: float = DEFAULT_FLAT_EPSILON

    def __post_init__(self):
        if self.c_s < 2:
            raise ValueError(f"c_s must be >= 2 (forward scoring needs a successor), got {self.c_s}")
        if self.c_m < 1 or self.c_l < 1:
            raise ValueError("c_m and c_l must be >= 1")
        if self.capacity_unit not in CAPACITY_UNITS:
            raise ValueError(f"capacity_unit must be one of {CAPACITY_UNITS}")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError(f"gamma must be in [0, 1], got {self.gamma}")
        if self.bins < 2:
            raise ValueError(f"bins must be >= 2, got {self.bins}")
        if self.flat_epsilon <= 0.0:
            raise ValueError(f"flat_epsilon must be > 0, got {self.flat_epsilon}")


@dataclass(frozen=True)
class TriggerEvent:
    """Outcome of one activity evaluation (fraction of novel positions)."""

    frame_index: int
    ratio: float
    threshold_used: float  # NaN when the frame has no predecessor
    fired: bool


@dataclass
class EvictionRecord:
    stage: str  # "tas" | "sdc" | "long_evict"
    frame_index: int
    tokens_in: int
    tokens_out: int
    micros: float = 0.0


@dataclass(frozen=True)
class FlattenedContext:
    """Tokens concatenated long + mid + short, oldest first within each tier."""

    features: np.ndarray  # (N, D) float32
    frames: np.ndarray  # (N,) int64 provenance
    rows: np.ndarray
    cols: np.ndarray
    weights: np.ndarray
    tier_tokens: tuple[int, int, int]  # (long, mid, short)

    @property
    def token_count(self) -> int:
        return int(self.features.shape[0])


class _ShortSlot:
    __slots__ = ("grid", "backward", "forward")

    def __init__(self, grid: TokenGrid, backward: np.ndarray | None):
        self.grid = grid
        self.backward = backward
        self.forward: np.ndarray | None = None


@dataclass
class EngineStats:
    frames_ingested: int
    tokens_ingested: int
    short_frames: int
    short_tokens: int
    mid_entries: int
    mid_tokens: int
    long_entries: int
    long_tokens: int
    drop_ratio: float
    trigger_fires: int
    queries: int
    stage_micros: dict[str, float] = field(default_factory=dict)

    @property
    def tokens_held(self) -> int:
        return self.short_tokens + self.mid_tokens + self.long_tokens


class StreamingMemory:
    """The stream orchestrator; see module docstring for the cascade."""

    def __init__(self, config: MemoryConfig | None = None, policy: Policy | None = None):
        self.config = config or MemoryConfig()
        self.policy = policy
        self._short: deque[_ShortSlot] = deque()
        self._mid: deque[FrameEntry] = deque()
        self._long: deque[FrameEntry] = deque()
        self.last_activation: int | None = None
        self._next_frame = 0
        self._shape: tuple[int, int, int] | None = None
        self._tokens_ingested = 0
        self._trigger_fires = 0
        self._queries = 0
        self._stage_micros = {"scoring": 0.0, "otsu": 0.0, "tas": 0.0, "sdc": 0.0}

    # -- ingestion ----------------------------------------------------------

    def ingest_frame(self, grid: TokenGrid) -> tuple[TriggerEvent, list[EvictionRecord]]:
        cfg = self.config
        if grid.frame_index != self._next_frame:
            raise ValueError(f"expected frame {self._next_frame}, got {grid.frame_index}")
        if self._shape is None:
            self._shape = grid.shape
        elif grid.shape != self._shape:
            raise ValueError(f"frame shape changed mid-stream: {self._shape} -> {grid.shape}")

        t0 = time.perf_counter()
        backward = None
        if self._short:
            prev = self._short[-1]
            prev.forward, backward = adjacent_scores(prev.grid, grid)
        self._stage_micros["scoring"] += (time.perf_counter() - t0) * 1e6

        t0 = time.perf_counter()
        if backward is not None:
            rep = otsu_threshold(backward.ravel(), cfg.bins, cfg.flat_epsilon)
            if rep.degenerate:
                ratio = 0.0
            else:
                above = np.count_nonzero(backward.astype(np.float64) > rep.threshold)
                ratio = above / backward.size
            threshold_used = rep.threshold
        else:
            ratio, threshold_used = 0.0, math.nan
        fired = self.last_activation is not None and ratio > cfg.gamma
        if fired:
            self.last_activation = grid.frame_index
            self._trigger_fires += 1
        event = TriggerEvent(grid.frame_index, ratio, threshold_used, fired)
        self._stage_micros["otsu"] += (time.perf_counter() - t0) * 1e6

        self._short.append(_ShortSlot(grid, backward))
        self._tokens_ingested += grid.height * grid.width
        self._next_frame += 1

        evictions: list[EvictionRecord] = []
        if len(self._short) > cfg.c_s:
            evictions.append(self._evict_short())
        while self._tier_size(self._mid) > cfg.c_m:
            evictions.append(self._evict_mid())
        while self._tier_size(self._long) > cfg.c_l:
            entry = self._long.popleft()
            evictions.append(
                EvictionRecord("long_evict", entry.frame_index, entry.token_count, 0)
            )
        return event, evictions

    def _evict_short(self) -> EvictionRecord:
        slot = self._short.popleft()
        scores = ScoreField(
            frame_index=slot.grid.frame_index, backward=slot.backward, forward=slot.forward
        )
        t0 = time.perf_counter()
        if self.policy is None or self.policy.kind == "fluxmem":
            entry, _, _ = tas_select(
                slot.grid, scores, self.config.bins, self.config.flat_epsilon
            )
        else:
            entry = apply_policy(
                self.policy, slot.grid, scores, self.config.bins, self.config.flat_epsilon
            )
        micros = (time.perf_counter() - t0) * 1e6
        self._stage_micros["tas"] += micros
        self._mid.append(entry)
        return EvictionRecord(
            "tas", entry.frame_index, slot.grid.height * slot.grid.width, entry.token_count, micros
        )

    def _evict_mid(self) -> EvictionRecord:
        entry = self._mid.popleft()
        theta_sdc = None
        if self.policy is not None and self.policy.kind == "fixed_threshold":
            theta_sdc = self.policy.theta_sdc
        t0 = time.perf_counter()
        anchors, _ = sdc_consolidate(
            entry, self.config.bins, self.config.flat_epsilon, fixed_threshold=theta_sdc
        )
        micros = (time.perf_counter() - t0) * 1e6
        self._stage_micros["sdc"] += micros
        self._long.append(FrameEntry(frame_index=entry.frame_index, tokens=tuple(anchors)))
        return EvictionRecord("sdc", entry.frame_index, entry.token_count, len(anchors), micros)

    def _tier_size(self, tier: deque[FrameEntry]) -> int:
        if self.config.capacity_unit == "frames":
            return len(tier)
        return sum(e.token_count for e in tier)

    # -- queries and reads --------------------------------------------------

    def handle_query(self, frame_index: int | None = None) -> FlattenedContext:
        """Flatten the hierarchy for a response and mark the activation time."""
        if self._next_frame == 0:
            raise ValueError("no frames ingested")
        if frame_index is None:
            frame_index = self._next_frame - 1
        self.last_activation = frame_index
        self._queries += 1

        feats: list[np.ndarray] = []
        frames: list[int] = []
        rows: list[int] = []
        cols: list[int] = []
        weights: list[int] = []

        def _add_entry(entry: FrameEntry) -> int:
            for tok in entry.tokens:
                t, h, w = tok.origin
                feats.append(tok.feature)
                frames.append(t)
                rows.append(h)
                cols.append(w)
                weights.append(tok.weight)
            return entry.token_count

        n_long = sum(_add_entry(e) for e in self._long)
        n_mid = sum(_add_entry(e) for e in self._mid)
        n_short = 0
        for slot in self._short:
            g = slot.grid
            feats.append(g.data.reshape(-1, g.dim))
            idx = np.arange(g.height * g.width)
            frames.extend([g.frame_index] * idx.size)
            rows.extend((idx // g.width).tolist())
            cols.extend((idx % g.width).tolist())
            weights.extend([1] * idx.size)
            n_short += idx.size

        dim = self._shape[2]
        if feats:
            stacked = [f.reshape(-1, dim) for f in feats]
            features = np.concatenate(stacked, axis=0).astype(np.float32)
        else:
            features = np.empty((0, dim), dtype=np.float32)
        return FlattenedContext(
            features=features,
            frames=np.asarray(frames, dtype=np.int64),
            rows=np.asarray(rows, dtype=np.int64),
            cols=np.asarray(cols, dtype=np.int64),
            weights=np.asarray(weights, dtype=np.int64),
            tier_tokens=(n_long, n_mid, n_short),
        )

    def stats(self) -> EngineStats:
        short_tokens = sum(s.grid.height * s.grid.width for s in self._short)
        mid_tokens = sum(e.token_count for e in self._mid)
        long_tokens = sum(e.token_count for e in self._long)
        held = short_tokens + mid_tokens + long_tokens
        drop = 1.0 - held / self._tokens_ingested if self._tokens_ingested else 0.0
        return EngineStats(
            frames_ingested=self._next_frame,
            tokens_ingested=self._tokens_ingested,
            short_frames=len(self._short),
            short_tokens=short_tokens,
            mid_entries=len(self._mid),
            mid_tokens=mid_tokens,
            long_entries=len(self._long),
            long_tokens=long_tokens,
            drop_ratio=drop,
            trigger_fires=self._trigger_fires,
            queries=self._queries,
            stage_micros=dict(self._stage_micros),
        )

    def serialize(self) -> bytes:
        """Canonical byte snapshot of the logical state (timing excluded)."""
        out = bytearray()
        out += struct.pack(
            "<qqqq",
            self._next_frame,
            self._tokens_ingested,
            -1 if self.last_activation is None else self.last_activation,
            self._trigger_fires,
        )

        def _pack_tokens(tokens):
            out.extend(struct.pack("<q", len(tokens)))
            for tok in tokens:
                t, h, w = tok.origin
                out.extend(struct.pack("<qqqq", t, h, w, tok.weight))
                out.extend(np.ascontiguousarray(tok.feature, dtype="<f4").tobytes())

        out += struct.pack("<q", len(self._long))
        for entry in self._long:
            out += struct.pack("<q", entry.frame_index)
            _pack_tokens(entry.tokens)
        out += struct.pack("<q", len(self._mid))
        for entry in self._mid:
            out += struct.pack("<q", entry.frame_index)
            _pack_tokens(entry.tokens)
        out += struct.pack("<q", len(self._short))
        for slot in self._short:
            out += struct.pack("<q", slot.grid.frame_index)
            out += np.ascontiguousarray(slot.grid.data, dtype="<f4").tobytes()
            for side in (slot.backward, slot.forward):
                if side is None:
                    out += struct.pack("<b", 0)
                else:
                    out += struct.pack("<b", 1)
                    out += np.ascontiguousarray(side, dtype="<f4").tobytes()
        return bytes(out)
