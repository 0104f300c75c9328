"""Tile materialization: square crops around uncertain anchors, random
source-domain crops, and optional full-image samples."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .geometry import Box, ImageDims, clip_box, expand_square
from .gates import Variant


class TileKind(str, Enum):
    TARGET_UNCERTAIN = "target_uncertain"
    SOURCE_RANDOM = "source_random"
    FULL_IMAGE = "full_image"


@dataclass(frozen=True)
class TileSpec:
    """A crop region plus provenance."""

    image_id: str
    region: Box
    kind: TileKind
    anchor: Box | None = None
    scale_used: float | None = None


def _as_rng(rng: np.random.Generator | int) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def extract_target_tile(
    anchor_box: Box,
    dims: ImageDims,
    scale: float = 5.0,
    image_id: str = "",
) -> TileSpec:
    """Square tile of ``scale`` times the anchor's larger side, centred on
    the anchor and shifted (capped at the image extent) to fit."""
    region = expand_square(anchor_box, scale, dims)
    return TileSpec(
        image_id=image_id,
        region=region,
        kind=TileKind.TARGET_UNCERTAIN,
        anchor=anchor_box,
        scale_used=scale,
    )


def sample_source_tile(
    gt_boxes: Sequence[Box],
    dims: ImageDims,
    rng: np.random.Generator | int,
    min_area_frac: float = 0.6,
    max_attempts: int = 100,
    aspect_range: tuple[float, float] = (0.75, 4.0 / 3.0),
    require_full_containment: bool = False,
    image_id: str = "",
) -> TileSpec | None:
    """Uniformly sampled crop covering at least ``min_area_frac`` of the
    image area and containing at least one ground-truth object.

    Object presence is checked by box-center containment by default;
    ``require_full_containment`` demands the whole box instead. Returns
    None if no ground truth exists or every attempt is rejected.
    """
    if not (0.0 < min_area_frac <= 1.0):
        raise ValueError(f"min_area_frac must be in (0, 1], got {min_area_frac}")
    if not gt_boxes:
        return None
    gen = _as_rng(rng)
    img_area = dims.width * dims.height
    for _ in range(max_attempts):
        area = gen.uniform(min_area_frac, 1.0) * img_area
        aspect = gen.uniform(*aspect_range)
        w = math.sqrt(area * aspect)
        h = area / w
        # Clamping one side keeps the sampled area exact; area <= img_area
        # guarantees the other side then fits.
        if w > dims.width:
            w = dims.width
            h = area / w
        if h > dims.height:
            h = dims.height
            w = area / h
        x1 = gen.uniform(0.0, dims.width - w)
        y1 = gen.uniform(0.0, dims.height - h)
        region = clip_box(Box(x1, y1, x1 + w, y1 + h), dims)
        if require_full_containment:
            hit = any(
                region.x1 <= b.x1 and region.y1 <= b.y1
                and b.x2 <= region.x2 and b.y2 <= region.y2
                for b in gt_boxes
            )
        else:
            hit = any(region.contains_point(*b.center) for b in gt_boxes)
        if hit:
            return TileSpec(
                image_id=image_id,
                region=region,
                kind=TileKind.SOURCE_RANDOM,
            )
    return None


def assemble_tile_batch(
    target_tiles: Sequence[TileSpec],
    source_tiles: Sequence[TileSpec],
    images: Sequence[tuple[str, ImageDims]],
    full_image_prob: float,
    rng: np.random.Generator | int,
    variant: Variant,
) -> list[TileSpec]:
    """Concatenate target and source tiles; under the dagger variant each
    image additionally contributes a full-image tile with probability
    ``full_image_prob``. Deterministic under a fixed seed."""
    batch = list(target_tiles) + list(source_tiles)
    if variant is not Variant.SSAL_DAGGER:
        return batch
    gen = _as_rng(rng)
    for image_id, dims in images:
        if gen.random() < full_image_prob:
            batch.append(
                TileSpec(
                    image_id=image_id,
                    region=Box(0.0, 0.0, dims.width, dims.height),
                    kind=TileKind.FULL_IMAGE,
                )
            )
    return batch
