"""Core value types: token grids, retained tokens, per-frame entries.

All types are immutable after construction (arrays are marked read-only) and
safe to share between threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class TokenGrid:
    """One frame's H x W grid of D-dimensional float32 feature tokens."""

    frame_index: int
    data: np.ndarray  # (H, W, D) float32, finite, read-only

    # lazily cached squared norms, shared by the scoring kernels
    _norms_sq: list = field(default_factory=list, repr=False, compare=False)

    def __post_init__(self):
        if self.frame_index < 0:
            raise ValueError(f"frame_index must be >= 0, got {self.frame_index}")
        arr = np.asarray(self.data)
        if arr.ndim != 3:
            raise ValueError(f"token grid must be (H, W, D), got shape {arr.shape}")
        if min(arr.shape) < 1:
            raise ValueError(f"H, W, D must be positive, got shape {arr.shape}")
        if arr.dtype != np.float32:
            arr = arr.astype(np.float32)
        if not np.isfinite(arr).all():
            raise ValueError(f"frame {self.frame_index}: non-finite feature value")
        object.__setattr__(self, "data", _freeze(arr))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def dim(self) -> int:
        return self.data.shape[2]

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.data.shape

    def norms_sq(self) -> np.ndarray:
        """(H, W) float64 squared token norms; computed once per grid."""
        if not self._norms_sq:
            q = np.sum(self.data * self.data, axis=-1, dtype=np.float64)
            self._norms_sq.append(_freeze(q))
        return self._norms_sq[0]

    def token(self, h: int, w: int) -> np.ndarray:
        return self.data[h, w]

    def __eq__(self, other) -> bool:
        if not isinstance(other, TokenGrid):
            return NotImplemented
        return (
            self.frame_index == other.frame_index
            and self.data.shape == other.data.shape
            and self.data.tobytes() == other.data.tobytes()
        )

    def __repr__(self) -> str:
        return f"TokenGrid(frame={self.frame_index}, shape={self.data.shape})"


@dataclass(frozen=True, eq=False)
class RetainedToken:
    """A surviving token or merged anchor with (t, h, w) provenance."""

    feature: np.ndarray  # (D,) float32, read-only
    origin: tuple[int, int, int]  # (frame_index, row, col)
    weight: int = 1  # raw tokens merged into this one

    def __post_init__(self):
        arr = np.asarray(self.feature)
        if arr.ndim != 1:
            raise ValueError(f"feature must be 1-D, got shape {arr.shape}")
        if arr.dtype != np.float32:
            arr = arr.astype(np.float32)
        if arr.flags.writeable:
            arr = _freeze(arr.copy())
        # read-only arrays (including views of frozen blocks) are shared as-is
        object.__setattr__(self, "feature", arr)
        t, h, w = self.origin
        if t < 0 or h < 0 or w < 0:
            raise ValueError(f"origin components must be >= 0, got {self.origin}")
        if self.weight < 1:
            raise ValueError(f"weight must be >= 1, got {self.weight}")

    def __eq__(self, other) -> bool:
        if not isinstance(other, RetainedToken):
            return NotImplemented
        return (
            self.origin == other.origin
            and self.weight == other.weight
            and self.feature.tobytes() == other.feature.tobytes()
        )

    def __repr__(self) -> str:
        return f"RetainedToken(origin={self.origin}, weight={self.weight})"


@dataclass(frozen=True, eq=False)
class FrameEntry:
    """Ordered tokens retained from one frame (row-major by origin)."""

    frame_index: int
    tokens: tuple[RetainedToken, ...]

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        prev = None
        for tok in self.tokens:
            t, h, w = tok.origin
            if t != self.frame_index:
                raise ValueError(
                    f"token origin frame {t} differs from entry frame {self.frame_index}"
                )
            if prev is not None and (h, w) <= prev:
                raise ValueError(f"tokens not strictly row-major at origin {(h, w)}")
            prev = (h, w)

    @property
    def token_count(self) -> int:
        return len(self.tokens)

    @property
    def total_weight(self) -> int:
        return sum(tok.weight for tok in self.tokens)

    def __eq__(self, other) -> bool:
        if not isinstance(other, FrameEntry):
            return NotImplemented
        return self.frame_index == other.frame_index and self.tokens == other.tokens

    def __len__(self) -> int:
        return len(self.tokens)

    def __repr__(self) -> str:
        return f"FrameEntry(frame={self.frame_index}, tokens={len(self.tokens)})"


def entry_from_mask(grid: TokenGrid, keep: np.ndarray) -> FrameEntry:
    """Build a weight-1 FrameEntry for grid positions where keep is True.

    Survivor features come from one contiguous copy of the kept rows, so
    the per-token cost is a read-only view, not a copy.
    """
    keep_idx = np.flatnonzero(np.asarray(keep).reshape(-1))
    block = grid.data.reshape(-1, grid.dim)[keep_idx]
    block.flags.writeable = False
    rows, cols = np.divmod(keep_idx, grid.width)
    t = grid.frame_index
    tokens = tuple(
        RetainedToken(feature=block[i], origin=(t, int(rows[i]), int(cols[i])), weight=1)
        for i in range(keep_idx.size)
    )
    return FrameEntry(frame_index=t, tokens=tokens)
