"""Independent brute-force references for the fast paths.

Everything here recomputes results from first principles with deliberately
different machinery (nested loops, searchsorted sweeps, BFS) so that a bug
in the production code cannot hide in its own reference. The CLI `oracle`
subcommand and the acceptance suite both drive these checks.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import FrameEntry, TokenGrid
from .otsu import DEFAULT_BINS, DEFAULT_FLAT_EPSILON, otsu_threshold
from .rng import PortableRng
from .scoring import cosine_distance
from .sdc import neighbor_pairs, sdc_consolidate
from .tas import tas_select


# ---------------------------------------------------------------------------
# Otsu references
# ---------------------------------------------------------------------------

def otsu_edge_bruteforce(
    samples, bins: int = DEFAULT_BINS, flat_epsilon: float = DEFAULT_FLAT_EPSILON
) -> tuple[float, float]:
    """Evaluate the between-class variance at every bin upper edge directly.

    Same candidate set as the fast path, but classes are formed by splitting
    the raw sorted samples at each edge (searchsorted + prefix sums) instead
    of binning them, so histogram bookkeeping bugs cannot cancel out. The
    top edge covers all samples by definition. Returns (threshold, sigma^2).
    """
    xs = np.sort(np.asarray(samples, dtype=np.float64).ravel())
    n = xs.size
    lo, hi = float(xs[0]), float(xs[-1])
    span = hi - lo
    if span < flat_epsilon:
        return lo, 0.0
    bw = span / bins
    edges = lo + np.arange(1, bins + 1, dtype=np.float64) * bw
    n1 = np.searchsorted(xs, edges, side="right").astype(np.float64)
    n1[-1] = n
    prefix = np.concatenate([[0.0], np.cumsum(xs)])
    s1 = prefix[n1.astype(np.int64)]
    total = prefix[-1]
    valid = (n1 > 0) & (n1 < n)
    w1 = n1 / n
    with np.errstate(invalid="ignore", divide="ignore"):
        m1 = np.where(n1 > 0, s1 / n1, 0.0)
        m2 = np.where(n1 < n, (total - s1) / (n - n1), 0.0)
    sigma = np.where(valid, w1 * (1.0 - w1) * (m1 - m2) ** 2, 0.0)
    k = int(np.argmax(sigma))
    return float(edges[k]), float(sigma[k])


def otsu_exact_sweep(samples) -> tuple[float, float]:
    """Unrestricted exact Otsu: split after every distinct sorted value.

    The canonical threshold is the largest class-1 sample of the maximizing
    partition (the smallest value achieving the optimum, matching the fast
    path's tie-break-low convention). Returns (threshold, sigma^2).
    """
    xs = np.sort(np.asarray(samples, dtype=np.float64).ravel())
    n = xs.size
    best_sigma = -1.0
    best_theta = float(xs[0])
    prefix = np.cumsum(xs)
    total = prefix[-1]
    for k in range(1, n):
        if xs[k] == xs[k - 1]:
            continue
        w1 = k / n
        m1 = prefix[k - 1] / k
        m2 = (total - prefix[k - 1]) / (n - k)
        sigma = w1 * (1.0 - w1) * (m1 - m2) ** 2
        if sigma > best_sigma:
            best_sigma = sigma
            best_theta = float(xs[k - 1])
    if best_sigma < 0.0:
        return float(xs[0]), 0.0
    return best_theta, best_sigma


# ---------------------------------------------------------------------------
# Scoring / TAS references
# ---------------------------------------------------------------------------

def scores_bruteforce(src: TokenGrid, dst: TokenGrid) -> np.ndarray:
    """Nested-loop min-over-window field; float32, same contract as scoring."""
    H, W, _ = src.shape
    out = np.empty((H, W), dtype=np.float32)
    for h in range(H):
        for w in range(W):
            best = np.inf
            for i in range(max(0, h - 1), min(H, h + 2)):
                for j in range(max(0, w - 1), min(W, w + 2)):
                    d = cosine_distance(src.data[h, w], dst.data[i, j])
                    if d < best:
                        best = d
            out[h, w] = best
    return out


def tas_mask_bruteforce(
    prev: TokenGrid | None,
    cur: TokenGrid,
    nxt: TokenGrid | None,
    bins: int = DEFAULT_BINS,
    flat_epsilon: float = DEFAULT_FLAT_EPSILON,
) -> np.ndarray:
    """Survivor mask recomputed from scratch (loops + edge-bruteforce Otsu)."""
    H, W, _ = cur.shape
    if prev is None:
        return np.ones((H, W), dtype=bool)
    keep = np.zeros((H, W), dtype=bool)
    for other in (prev, nxt):
        if other is None:
            continue
        scores = scores_bruteforce(cur, other)
        flat = scores.astype(np.float64).ravel()
        if float(flat.max() - flat.min()) < flat_epsilon:
            continue  # no separable classes: this side keeps nothing
        theta, _ = otsu_edge_bruteforce(flat, bins, flat_epsilon)
        keep |= scores.astype(np.float64) > theta
    return keep


def entry_mask(entry: FrameEntry, height: int, width: int) -> np.ndarray:
    mask = np.zeros((height, width), dtype=bool)
    for tok in entry.tokens:
        _, h, w = tok.origin
        mask[h, w] = True
    return mask


# ---------------------------------------------------------------------------
# SDC references
# ---------------------------------------------------------------------------

def chebyshev_pairs_bruteforce(entry: FrameEntry) -> list[tuple[int, int, float]]:
    """All unordered 8-adjacent retained pairs by O(n^2) origin comparison."""
    pairs = []
    toks = entry.tokens
    for a in range(len(toks)):
        _, ha, wa = toks[a].origin
        for b in range(a + 1, len(toks)):
            _, hb, wb = toks[b].origin
            if max(abs(ha - hb), abs(wa - wb)) == 1:
                pairs.append((a, b, cosine_distance(toks[a].feature, toks[b].feature)))
    return pairs


def sdc_components_bruteforce(
    entry: FrameEntry, bins: int = DEFAULT_BINS, flat_epsilon: float = DEFAULT_FLAT_EPSILON
) -> list[dict]:
    """Components via BFS over thresholded edges, anchors via direct means.

    Returns one record per component sorted by anchor origin:
    {"members": frozenset of origins, "origin": (t,h,w), "weight": int,
     "feature": float64 mean}.
    """
    toks = entry.tokens
    n = len(toks)
    if n == 0:
        return []
    pairs = chebyshev_pairs_bruteforce(entry)
    adj: list[list[int]] = [[] for _ in range(n)]
    if pairs:
        dists = np.array([p[2] for p in pairs], dtype=np.float64)
        if float(dists.max() - dists.min()) < flat_epsilon:
            linked = pairs  # all pair distances equal: everything links
        else:
            theta, _ = otsu_edge_bruteforce(dists, bins, flat_epsilon)
            linked = [p for p in pairs if p[2] <= theta]
        for a, b, _ in linked:
            adj[a].append(b)
            adj[b].append(a)

    seen = [False] * n
    comps = []
    for start in range(n):
        if seen[start]:
            continue
        queue = [start]
        seen[start] = True
        members = []
        while queue:
            u = queue.pop()
            members.append(u)
            for v in adj[u]:
                if not seen[v]:
                    seen[v] = True
                    queue.append(v)
        feats = np.stack([toks[i].feature for i in members]).astype(np.float64)
        origins = [toks[i].origin for i in members]
        comps.append(
            {
                "members": frozenset(origins),
                "origin": min(origins, key=lambda o: (o[1], o[2])),
                "weight": sum(toks[i].weight for i in members),
                "feature": feats.mean(axis=0),
            }
        )
    comps.sort(key=lambda c: (c["origin"][1], c["origin"][2]))
    return comps


# ---------------------------------------------------------------------------
# Check drivers shared by the CLI and the acceptance suite
# ---------------------------------------------------------------------------

@dataclass
class CheckResult:
    name: str
    trials: int
    failures: int = 0
    detail: str = ""
    stats: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.failures == 0

    def line(self) -> str:
        status = "PASS" if self.ok else "FAIL"
        extra = f" ({self.detail})" if self.detail else ""
        return f"[{status}] {self.name}: {self.trials} trials, {self.failures} failures{extra}"


def _mixed_samples(rng: PortableRng, size: int) -> np.ndarray:
    """Unimodal or bimodal draw, the mix used for Otsu validation."""
    if rng.uniform(1)[0] < 0.5:
        center = 0.2 + 0.6 * rng.uniform(1)[0]
        sigma = 0.05 + 0.15 * rng.uniform(1)[0]
        return center + sigma * rng.normal(size)
    n1 = size // 2
    c1 = 0.1 + 0.25 * rng.uniform(1)[0]
    c2 = 0.6 + 0.3 * rng.uniform(1)[0]
    s1 = 0.01 + 0.04 * rng.uniform(1)[0]
    s2 = 0.01 + 0.04 * rng.uniform(1)[0]
    return np.concatenate([c1 + s1 * rng.normal(n1), c2 + s2 * rng.normal(size - n1)])


def check_otsu(trials: int = 1000, seed: int = 0, bins: int = DEFAULT_BINS) -> CheckResult:
    """Fast threshold within one bin width of the edge-bruteforce optimum,
    achieving >= 99.9% of its between-class variance."""
    rng = PortableRng(seed, 0x075)
    res = CheckResult("otsu threshold vs edge-bruteforce", trials)
    worst_dist = 0.0
    worst_ratio = 1.0
    for t in range(trials):
        size = int(8 * (512 / 8) ** rng.uniform(1)[0])  # log-uniform in [8, 512]
        x = _mixed_samples(rng, size).astype(np.float32)
        rep = otsu_threshold(x, bins=bins)
        theta_ref, sigma_ref = otsu_edge_bruteforce(x, bins=bins)
        if rep.degenerate:
            continue
        dist = abs(rep.threshold - theta_ref) / rep.bin_width
        ratio = rep.inter_class_variance / sigma_ref if sigma_ref > 0 else 1.0
        worst_dist = max(worst_dist, dist)
        worst_ratio = min(worst_ratio, ratio)
        if dist > 1.0 or ratio < 0.999:
            res.failures += 1
            if not res.detail:
                res.detail = f"trial {t}: |dTheta|={dist:.3f} bins, sigma ratio={ratio:.6f}"
    res.stats = {"worst_theta_dist_bins": worst_dist, "worst_sigma_ratio": worst_ratio}
    if res.ok:
        res.detail = f"worst |dTheta|={worst_dist:.3g} bins, worst sigma ratio={worst_ratio:.6f}"
    return res


def _random_triple(rng: PortableRng, h: int, w: int, d: int) -> tuple[TokenGrid, TokenGrid, TokenGrid]:
    """Half the triples are i.i.d.; half are a jittered chain (more realistic)."""
    base = rng.unit_vectors(h * w, d)
    if rng.uniform(1)[0] < 0.5:
        grids = [base, rng.unit_vectors(h * w, d), rng.unit_vectors(h * w, d)]
    else:
        grids = [base]
        for _ in range(2):
            nxt = grids[-1].astype(np.float64) + 0.3 * rng.normal(h * w * d).reshape(h * w, d)
            nxt /= np.linalg.norm(nxt, axis=1, keepdims=True)
            grids.append(nxt.astype(np.float32))
    return tuple(
        TokenGrid(frame_index=i, data=g.reshape(h, w, d)) for i, g in enumerate(grids)
    )


def check_tas(
    trials: int = 200,
    seed: int = 0,
    shapes: tuple[tuple[int, int, int], ...] = ((8, 8, 16), (16, 16, 32)),
    bins: int = DEFAULT_BINS,
) -> CheckResult:
    """Survivor masks bit-identical to the nested-loop + brute-Otsu oracle."""
    from .scoring import ScoreField, backward_scores, forward_scores

    rng = PortableRng(seed, 0x7A5)
    res = CheckResult("tas survivor mask vs nested-loop oracle", trials)
    per_shape = [shapes[i % len(shapes)] for i in range(trials)]
    for t, (h, w, d) in enumerate(per_shape):
        prev, cur, nxt = _random_triple(rng, h, w, d)
        sf = ScoreField(
            frame_index=cur.frame_index,
            backward=backward_scores(cur, prev),
            forward=forward_scores(cur, nxt),
        )
        entry, _, _ = tas_select(cur, sf, bins=bins)
        fast = entry_mask(entry, h, w)
        ref = tas_mask_bruteforce(prev, cur, nxt, bins=bins)
        if not np.array_equal(fast, ref):
            res.failures += 1
            if not res.detail:
                bad = np.argwhere(fast != ref)[0]
                res.detail = (
                    f"trial {t} shape {(h, w, d)}: first mismatch at (h={bad[0]}, w={bad[1]}): "
                    f"fast={bool(fast[bad[0], bad[1]])} oracle={bool(ref[bad[0], bad[1]])}"
                )
    return res


def _random_entry(rng: PortableRng, h: int, w: int, d: int, frame: int = 0) -> FrameEntry:
    """Retained subset with local feature clusters so some pairs sit close."""
    from .model import RetainedToken

    keep = rng.uniform(h * w) < 0.6
    feats = rng.unit_vectors(h * w, d).reshape(h, w, d)
    copy_up = rng.uniform(h * w).reshape(h, w) < 0.4
    for i in range(1, h):
        for j in range(w):
            if copy_up[i, j]:
                feats[i, j] = feats[i - 1, j]
    tokens = []
    for idx in range(h * w):
        if keep[idx]:
            i, j = divmod(idx, w)
            tokens.append(RetainedToken(feature=feats[i, j].copy(), origin=(frame, i, j), weight=1))
    return FrameEntry(frame_index=frame, tokens=tuple(tokens))


def check_sdc(
    trials: int = 200,
    seed: int = 0,
    shape: tuple[int, int, int] = (8, 8, 16),
    bins: int = DEFAULT_BINS,
) -> CheckResult:
    """Components match BFS-over-linked-edges; anchors match direct means."""
    rng = PortableRng(seed, 0x5DC)
    res = CheckResult("sdc components vs bfs oracle", trials)
    h, w, d = shape
    for t in range(trials):
        entry = _random_entry(rng, h, w, d)
        anchors, _ = sdc_consolidate(entry, bins=bins)
        ref = sdc_components_bruteforce(entry, bins=bins)
        msg = _compare_sdc(entry, anchors, ref)
        if msg:
            res.failures += 1
            if not res.detail:
                res.detail = f"trial {t}: {msg}"
    return res


def _compare_sdc(entry: FrameEntry, anchors, ref) -> str:
    if len(anchors) != len(ref):
        return f"{len(anchors)} anchors vs {len(ref)} oracle components"
    total_in = sum(tok.weight for tok in entry.tokens)
    total_out = sum(a.weight for a in anchors)
    if total_in != total_out:
        return f"weight sum {total_out} != input weight sum {total_in}"
    for a, r in zip(anchors, ref):
        if a.origin != r["origin"]:
            return f"anchor origin {a.origin} != oracle {r['origin']}"
        if a.weight != r["weight"]:
            return f"anchor at {a.origin}: weight {a.weight} != oracle {r['weight']}"
        fa = a.feature.astype(np.float64)
        scale = max(float(np.max(np.abs(r["feature"]))), 1e-12)
        if float(np.max(np.abs(fa - r["feature"]))) > 1e-6 * scale:
            return f"anchor at {a.origin}: feature deviates beyond 1e-6 relative"
    return ""


def check_pairs(trials: int = 100, seed: int = 0, shape: tuple[int, int, int] = (8, 8, 8)) -> CheckResult:
    """neighbor_pairs matches exhaustive Chebyshev enumeration exactly."""
    rng = PortableRng(seed, 0xAA1)
    res = CheckResult("neighbor pairs vs exhaustive enumeration", trials)
    h, w, d = shape
    for t in range(trials):
        entry = _random_entry(rng, h, w, d)
        fast = {(a, b): dist for a, b, dist in neighbor_pairs(entry)}
        ref = {(a, b): dist for a, b, dist in chebyshev_pairs_bruteforce(entry)}
        if set(fast) != set(ref):
            res.failures += 1
            if not res.detail:
                diff = set(fast).symmetric_difference(ref)
                res.detail = f"trial {t}: pair sets differ, e.g. {sorted(diff)[0]}"
            continue
        for key in fast:
            if fast[key] != ref[key]:
                res.failures += 1
                if not res.detail:
                    res.detail = f"trial {t}: distance mismatch on pair {key}"
                break
    return res
