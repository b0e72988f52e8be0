import numpy as np
import pytest

from fluxmem.model import FrameEntry, RetainedToken
from fluxmem.oracles import (
    chebyshev_pairs_bruteforce,
    sdc_components_bruteforce,
    _random_entry,
)
from fluxmem.rng import PortableRng
from fluxmem.sdc import UnionFind, neighbor_pairs, sdc_consolidate


def make_entry(cells, frame=0, dim=4, features=None):
    tokens = []
    for k, (h, w) in enumerate(sorted(cells)):
        if features is None:
            feat = np.zeros(dim, dtype=np.float32)
            feat[k % dim] = 1.0
        else:
            feat = np.asarray(features[k], dtype=np.float32)
        tokens.append(RetainedToken(feature=feat, origin=(frame, h, w), weight=1))
    return FrameEntry(frame_index=frame, tokens=tuple(tokens))


class TestUnionFind:
    def test_basic_merging(self):
        uf = UnionFind(5)
        uf.union(0, 1)
        uf.union(3, 4)
        assert uf.find(0) == uf.find(1)
        assert uf.find(3) == uf.find(4)
        assert uf.find(0) != uf.find(3)
        uf.union(1, 4)
        assert uf.find(0) == uf.find(3)

    def test_components_independent_of_edge_order(self):
        edges = [(0, 1), (1, 2), (4, 5), (2, 3)]
        def comps(order):
            uf = UnionFind(6)
            for a, b in order:
                uf.union(a, b)
            groups = {}
            for i in range(6):
                groups.setdefault(uf.find(i), set()).add(i)
            return sorted(frozenset(g) for g in groups.values())
        assert comps(edges) == comps(list(reversed(edges)))


class TestNeighborPairs:
    def test_far_tokens_have_no_pairs(self):
        entry = make_entry([(0, 0), (5, 5)])
        assert neighbor_pairs(entry) == []

    def test_full_3x3_block_has_20_pairs(self):
        entry = make_entry([(i, j) for i in range(3) for j in range(3)])
        pairs = neighbor_pairs(entry)
        assert len(pairs) == 20  # 12 rook-adjacent + 8 diagonal
        ref = chebyshev_pairs_bruteforce(entry)
        assert {(a, b) for a, b, _ in pairs} == {(a, b) for a, b, _ in ref}
        ref_d = {(a, b): d for a, b, d in ref}
        for a, b, d in pairs:
            assert d == ref_d[(a, b)]  # bitwise-identical distances

    def test_identical_adjacent_features_distance_zero(self):
        feat = np.array([0.3, 0.7, 0.1], dtype=np.float32)
        entry = make_entry([(2, 2), (2, 3)], dim=3, features=[feat, feat])
        pairs = neighbor_pairs(entry)
        assert len(pairs) == 1
        assert pairs[0][2] == 0.0


class TestConsolidate:
    def test_four_identical_adjacent_tokens_merge(self):
        feat = np.array([0.5, 0.5], dtype=np.float32)
        entry = make_entry([(0, 0), (0, 1), (1, 0), (1, 1)], dim=2, features=[feat] * 4)
        anchors, report = sdc_consolidate(entry)
        assert len(anchors) == 1
        assert anchors[0].weight == 4
        assert anchors[0].origin == (0, 0, 0)
        assert np.array_equal(anchors[0].feature, feat)
        assert report.degenerate  # all pair distances equal

    def test_distant_tokens_pass_through(self):
        entry = make_entry([(0, 0), (4, 4)])
        anchors, report = sdc_consolidate(entry)
        assert len(anchors) == 2
        assert [a.weight for a in anchors] == [1, 1]
        assert report.degenerate  # no pairs at all
        assert [a.feature.tobytes() for a in anchors] == [
            t.feature.tobytes() for t in entry.tokens
        ]

    def test_empty_entry(self):
        anchors, report = sdc_consolidate(FrameEntry(frame_index=0, tokens=()))
        assert anchors == []
        assert report.degenerate

    def test_matches_bfs_oracle(self):
        rng = PortableRng(99)
        for trial in range(20):
            entry = _random_entry(rng, 8, 8, 8)
            anchors, _ = sdc_consolidate(entry)
            ref = sdc_components_bruteforce(entry)
            assert len(anchors) == len(ref), f"trial {trial}"
            for a, r in zip(anchors, ref):
                assert a.origin == r["origin"]
                assert a.weight == r["weight"]
                scale = max(float(np.max(np.abs(r["feature"]))), 1e-12)
                err = float(np.max(np.abs(a.feature.astype(np.float64) - r["feature"])))
                assert err <= 1e-6 * scale

    def test_mass_conservation(self):
        rng = PortableRng(7)
        for trial in range(10):
            entry = _random_entry(rng, 6, 6, 4)
            anchors, _ = sdc_consolidate(entry)
            assert sum(a.weight for a in anchors) == sum(t.weight for t in entry.tokens)
            assert len(anchors) <= len(entry.tokens)

    def test_weights_preserved_for_heavy_singletons(self):
        toks = (
            RetainedToken(feature=np.ones(3, dtype=np.float32), origin=(0, 0, 0), weight=5),
            RetainedToken(feature=np.ones(3, dtype=np.float32), origin=(0, 4, 4), weight=2),
        )
        anchors, _ = sdc_consolidate(FrameEntry(frame_index=0, tokens=toks))
        assert [a.weight for a in anchors] == [5, 2]

    def test_anchor_ordering_row_major(self):
        rng = PortableRng(13)
        entry = _random_entry(rng, 8, 8, 4)
        anchors, _ = sdc_consolidate(entry)
        origins = [(a.origin[1], a.origin[2]) for a in anchors]
        assert origins == sorted(origins)

    def test_fixed_threshold_links_at_or_below(self):
        a = np.array([1.0, 0.0], dtype=np.float32)
        b = np.array([0.0, 1.0], dtype=np.float32)  # distance 1 from a
        entry = make_entry([(0, 0), (0, 1), (0, 2)], dim=2, features=[a, b, a])
        anchors_tight, _ = sdc_consolidate(entry, fixed_threshold=0.5)
        assert len(anchors_tight) == 3  # no links below 0.5
        anchors_loose, rep = sdc_consolidate(entry, fixed_threshold=1.0)
        assert len(anchors_loose) == 1  # d == 1.0 links at equality
        assert rep.threshold == 1.0

    def test_determinism(self):
        rng = PortableRng(3)
        entry = _random_entry(rng, 8, 8, 8)
        a1, r1 = sdc_consolidate(entry)
        a2, r2 = sdc_consolidate(entry)
        assert r1 == r2
        assert [(t.origin, t.weight, t.feature.tobytes()) for t in a1] == [
            (t.origin, t.weight, t.feature.tobytes()) for t in a2
        ]
