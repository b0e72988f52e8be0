"""Spatial consolidation of one frame's retained tokens into mean anchors.

Retained tokens that are 8-adjacent in their original grid positions form
a sparse graph; edges whose cosine distance falls at or below the Otsu
threshold of the pair-distance distribution are unioned, and each
resulting component is replaced by the unweighted mean of its members.
The anchor inherits the lexicographically smallest member origin and the
summed member weight, so total weight is conserved.
"""

from __future__ import annotations

import numpy as np

from .model import FrameEntry, RetainedToken
from .otsu import DEFAULT_BINS, DEFAULT_FLAT_EPSILON, ThresholdReport, otsu_threshold
from .scoring import ZERO_NORM_SQ, _count


class UnionFind:
    """Disjoint sets over range(n): union by size with path compression."""

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.size = [1] * n

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]


def _pair_arrays(entry: FrameEntry) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(index_a, index_b, distance) arrays for 8-adjacent retained pairs."""
    toks = entry.tokens
    empty = (np.empty(0, np.int64), np.empty(0, np.int64), np.empty(0, np.float64))
    if len(toks) < 2:
        return empty

    origins = np.array([(t.origin[1], t.origin[2]) for t in toks], dtype=np.int64)
    hmax = int(origins[:, 0].max()) + 1
    wmax = int(origins[:, 1].max()) + 1
    index_map = np.full((hmax, wmax), -1, dtype=np.int64)
    index_map[origins[:, 0], origins[:, 1]] = np.arange(len(toks))

    # probe only "forward" offsets so each unordered pair appears once
    ia_parts = []
    ib_parts = []
    for dh, dw in ((0, 1), (1, -1), (1, 0), (1, 1)):
        at = index_map[
            slice(max(0, -dh), hmax - max(0, dh)), slice(max(0, -dw), wmax - max(0, dw))
        ]
        nb = index_map[
            slice(max(0, dh), hmax - max(0, -dh)), slice(max(0, dw), wmax - max(0, -dw))
        ]
        both = (at >= 0) & (nb >= 0)
        ia_parts.append(at[both])
        ib_parts.append(nb[both])
    ia = np.concatenate(ia_parts)
    ib = np.concatenate(ib_parts)
    if ia.size == 0:
        return empty

    feats = _feature_matrix(toks)
    q = np.sum(feats * feats, axis=-1, dtype=np.float64)
    dots = np.sum(feats[ia] * feats[ib], axis=-1, dtype=np.float64)
    _count(dots.size)
    with np.errstate(invalid="ignore", divide="ignore"):
        d = 1.0 - dots / np.sqrt(q[ia] * q[ib])
    d = np.where((q[ia] < ZERO_NORM_SQ) | (q[ib] < ZERO_NORM_SQ), 1.0, d)
    np.clip(d, 0.0, 2.0, out=d)
    return ia, ib, d


def neighbor_pairs(entry: FrameEntry) -> list[tuple[int, int, float]]:
    """Unordered 8-adjacent retained pairs with their cosine distances.

    One record per pair of tokens whose origins sit at Chebyshev distance 1.
    Distances match the scalar cosine kernel bit for bit.
    """
    ia, ib, d = _pair_arrays(entry)
    return [(int(x), int(y), float(v)) for x, y, v in zip(ia, ib, d)]


def _feature_matrix(toks) -> np.ndarray:
    """(n, D) feature rows; reuses the shared block when the tokens are the
    consecutive views of one frozen array that selection produces."""
    base = toks[0].feature.base
    if base is not None and base.ndim == 2 and base.shape == (len(toks), toks[0].feature.size):
        addr = base.__array_interface__["data"][0]
        step = base.strides[0]
        if all(
            t.feature.__array_interface__["data"][0] == addr + i * step
            for i, t in enumerate(toks)
        ):
            return base
    return np.stack([t.feature for t in toks])


def _passthrough_report() -> ThresholdReport:
    return ThresholdReport(
        threshold=0.0,
        omega1=1.0,
        omega2=0.0,
        mu1=0.0,
        mu2=0.0,
        inter_class_variance=0.0,
        degenerate=True,
        bin_width=0.0,
    )


def sdc_consolidate(
    entry: FrameEntry,
    bins: int = DEFAULT_BINS,
    flat_epsilon: float = DEFAULT_FLAT_EPSILON,
    fixed_threshold: float | None = None,
) -> tuple[list[RetainedToken], ThresholdReport]:
    """Merge linked components of `entry` into mean anchors.

    With no adjacent pairs every token passes through as its own anchor and
    the report is degenerate. A degenerate pair-distance distribution links
    every pair (distance <= threshold holds at equality). `fixed_threshold`
    bypasses Otsu for the fixed-rule baseline.
    """
    toks = entry.tokens
    if not toks:
        return [], _passthrough_report()
    ia, ib, dists = _pair_arrays(entry)
    if ia.size == 0:
        return list(toks), _passthrough_report()

    if fixed_threshold is not None:
        report = _fixed_report(dists, fixed_threshold, bins)
        mask = dists <= fixed_threshold
    else:
        report = otsu_threshold(dists, bins, flat_epsilon)
        if report.degenerate:
            mask = np.ones(dists.size, dtype=bool)  # all equal: everything links
        else:
            mask = dists <= report.threshold

    uf = UnionFind(len(toks))
    for a, b in zip(ia[mask].tolist(), ib[mask].tolist()):
        uf.union(a, b)

    groups: dict[int, list[int]] = {}
    for i in range(len(toks)):
        groups.setdefault(uf.find(i), []).append(i)

    anchors = []
    for members in groups.values():
        if len(members) == 1:
            anchors.append(toks[members[0]])  # mean of one token is itself
            continue
        origins = [toks[i].origin for i in members]
        feats = np.stack([toks[i].feature for i in members]).astype(np.float64)
        anchors.append(
            RetainedToken(
                feature=feats.mean(axis=0).astype(np.float32),
                origin=min(origins, key=lambda o: (o[1], o[2])),
                weight=sum(toks[i].weight for i in members),
            )
        )
    anchors.sort(key=lambda t: (t.origin[1], t.origin[2]))
    return anchors, report


def _fixed_report(dists: np.ndarray, theta: float, bins: int) -> ThresholdReport:
    """Class statistics of the fixed split, for reporting parity."""
    lower = dists[dists <= theta]
    upper = dists[dists > theta]
    n = dists.size
    w1 = lower.size / n
    w2 = upper.size / n
    m1 = float(lower.mean()) if lower.size else 0.0
    m2 = float(upper.mean()) if upper.size else 0.0
    span = float(dists.max() - dists.min())
    return ThresholdReport(
        threshold=theta,
        omega1=w1,
        omega2=w2,
        mu1=m1,
        mu2=m2,
        inter_class_variance=w1 * w2 * (m1 - m2) ** 2,
        degenerate=False,
        bin_width=span / bins,
    )
