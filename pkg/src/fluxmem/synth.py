"""Deterministic synthetic token streams with known redundancy structure.

Feature vectors are unit-norm-projected Gaussians (cosine distances stay
well-conditioned, like normalized encoder embeddings). All draws come from
the portable counter-based generator, so a (spec, seed) pair produces a
bit-identical stream on any platform.

Kinds:
  static       one base grid repeated; optional i.i.d. additive noise
  moving_blob  base grid with a square block of cells set to one distinct
               vector, translating with wraparound (constant change mass)
  scene_cuts   every `cut_period` frames, ceil(cut_fraction*H*W) cells get
               fresh vectors that persist until the next cut
  noise        fully i.i.d. frames
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import TokenGrid
from .rng import PortableRng

SCENE_KINDS = ("static", "moving_blob", "scene_cuts", "noise")

# stream tags to keep draw sequences independent
_TAG_BASE = 1
_TAG_NOISE = 2
_TAG_BLOB = 3
_TAG_CUT_CELLS = 4
_TAG_CUT_FEATS = 5
_TAG_FRAME = 6


@dataclass(frozen=True)
class SceneSpec:
    kind: str
    height: int
    width: int
    dim: int
    num_frames: int
    noise_sigma: float = 0.0  # static kind only
    blob_size: int = 2
    blob_velocity: tuple[int, int] = (1, 1)  # cells/frame (rows, cols)
    cut_period: int = 10
    cut_fraction: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.kind not in SCENE_KINDS:
            raise ValueError(f"unknown scene kind {self.kind!r}, expected one of {SCENE_KINDS}")
        if min(self.height, self.width, self.dim) < 1:
            raise ValueError("height, width, dim must be positive")
        if self.num_frames < 0:
            raise ValueError("num_frames must be >= 0")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")
        if self.kind == "moving_blob" and not (
            1 <= self.blob_size <= min(self.height, self.width)
        ):
            raise ValueError(f"blob_size {self.blob_size} does not fit a {self.height}x{self.width} grid")
        if self.cut_period < 1:
            raise ValueError("cut_period must be >= 1")
        if not 0.0 <= self.cut_fraction <= 1.0:
            raise ValueError("cut_fraction must be in [0, 1]")


def generate(spec: SceneSpec) -> list[TokenGrid]:
    return generate_with_masks(spec)[0]


def generate_with_masks(spec: SceneSpec) -> tuple[list[TokenGrid], list[np.ndarray]]:
    """Frames plus ground-truth change masks.

    masks[t] marks cells whose feature differs from frame t-1 (masks[0] is
    all True: everything is new at the start).
    """
    h, w, d = spec.height, spec.width, spec.dim
    planes = _raw_planes(spec)
    grids = [TokenGrid(frame_index=t, data=plane) for t, plane in enumerate(planes)]
    masks: list[np.ndarray] = []
    for t, g in enumerate(grids):
        if t == 0:
            masks.append(np.ones((h, w), dtype=bool))
        else:
            masks.append(np.any(g.data != grids[t - 1].data, axis=-1))
    return grids, masks


def _raw_planes(spec: SceneSpec) -> list[np.ndarray]:
    h, w, d = spec.height, spec.width, spec.dim
    n = spec.num_frames
    if n == 0:
        return []

    if spec.kind == "noise":
        return [
            PortableRng(spec.seed, _TAG_FRAME, t).unit_vectors(h * w, d).reshape(h, w, d)
            for t in range(n)
        ]

    base = PortableRng(spec.seed, _TAG_BASE).unit_vectors(h * w, d).reshape(h, w, d)

    if spec.kind == "static":
        planes = []
        for t in range(n):
            if spec.noise_sigma == 0.0:
                planes.append(base)
            else:
                noise = (
                    PortableRng(spec.seed, _TAG_NOISE, t).normal(h * w * d).reshape(h, w, d)
                )
                planes.append((base.astype(np.float64) + spec.noise_sigma * noise).astype(np.float32))
        return planes

    if spec.kind == "moving_blob":
        blob_vec = PortableRng(spec.seed, _TAG_BLOB).unit_vectors(1, d)[0]
        vy, vx = spec.blob_velocity
        planes = []
        for t in range(n):
            plane = base.copy()
            top = (t * vy) % h
            left = (t * vx) % w
            rows = [(top + i) % h for i in range(spec.blob_size)]
            cols = [(left + j) % w for j in range(spec.blob_size)]
            for r in rows:
                for c in cols:
                    plane[r, c] = blob_vec
            planes.append(plane)
        return planes

    # scene_cuts: cut frames replace a fixed-count cell subset with fresh vectors
    k = math.ceil(spec.cut_fraction * h * w)
    current = base.copy()
    planes = []
    for t in range(n):
        if t > 0 and t % spec.cut_period == 0 and k > 0:
            cells = PortableRng(spec.seed, _TAG_CUT_CELLS, t).sample(h * w, k)
            fresh = PortableRng(spec.seed, _TAG_CUT_FEATS, t).unit_vectors(k, d)
            flat = current.reshape(h * w, d).copy()
            flat[cells] = fresh
            current = flat.reshape(h, w, d)
        planes.append(current)
    return planes


# ---------------------------------------------------------------------------
# Flat key=value scene files (CLI `gen` input)
# ---------------------------------------------------------------------------

_INT_KEYS = {"height", "width", "dim", "num_frames", "blob_size", "blob_vy", "blob_vx", "cut_period", "seed"}
_FLOAT_KEYS = {"noise_sigma", "cut_fraction"}


def parse_scene_text(text: str) -> SceneSpec:
    """Parse `key = value` lines (# comments allowed) into a SceneSpec."""
    fields: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"scene file line {lineno}: expected key = value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key == "kind":
            fields["kind"] = value
        elif key in _INT_KEYS:
            fields[key] = int(value)
        elif key in _FLOAT_KEYS:
            fields[key] = float(value)
        else:
            raise ValueError(f"scene file line {lineno}: unknown key {key!r}")
    vy = fields.pop("blob_vy", 1)
    vx = fields.pop("blob_vx", 1)
    missing = {"kind", "height", "width", "dim", "num_frames"} - set(fields)
    if missing:
        raise ValueError(f"scene file missing required keys: {sorted(missing)}")
    return SceneSpec(blob_velocity=(vy, vx), **fields)


def load_scene_file(path) -> SceneSpec:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_scene_text(fh.read())


def scene_text(spec: SceneSpec) -> str:
    lines = [
        f"kind = {spec.kind}",
        f"height = {spec.height}",
        f"width = {spec.width}",
        f"dim = {spec.dim}",
        f"num_frames = {spec.num_frames}",
        f"noise_sigma = {spec.noise_sigma}",
        f"blob_size = {spec.blob_size}",
        f"blob_vy = {spec.blob_velocity[0]}",
        f"blob_vx = {spec.blob_velocity[1]}",
        f"cut_period = {spec.cut_period}",
        f"cut_fraction = {spec.cut_fraction}",
        f"seed = {spec.seed}",
    ]
    return "\n".join(lines) + "\n"
