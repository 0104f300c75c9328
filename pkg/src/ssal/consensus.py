"""Cross-pass consensus clustering of stochastic-inference detections.

A detection from one forward pass is matched against all other passes; the
matched set yields the uncertainty statistics (mean confidence, confidence
variance, localization instability, consistency) that drive selection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .geometry import Box, ImageDims, iou


@dataclass(frozen=True)
class Detection:
    """One predicted object in one inference pass."""

    box: Box
    class_id: int
    confidence: float
    pass_index: int

    def __post_init__(self) -> None:
        if not (0.0 < self.confidence <= 1.0):
            raise ValueError(f"confidence must be in (0, 1], got {self.confidence}")
        if self.class_id < 1:
            raise ValueError(f"class_id must be >= 1, got {self.class_id}")
        if self.pass_index < 0:
            raise ValueError(f"pass_index must be >= 0, got {self.pass_index}")


@dataclass(frozen=True)
class PassSet:
    """All detections for one image across N stochastic forward passes."""

    image_id: str
    dims: ImageDims
    passes: tuple[tuple[Detection, ...], ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "passes", tuple(tuple(p) for p in self.passes))
        for k, dets in enumerate(self.passes):
            for d in dets:
                if d.pass_index != k:
                    raise ValueError(
                        f"detection pass_index {d.pass_index} does not match "
                        f"its pass position {k}"
                    )

    @property
    def n_passes(self) -> int:
        return len(self.passes)

    def all_detections(self) -> list[Detection]:
        return [d for dets in self.passes for d in dets]


@dataclass(frozen=True)
class ClusterMember:
    detection: Detection
    iou_with_anchor: float


@dataclass(frozen=True)
class ConsensusCluster:
    """An anchor detection plus its matched cross-pass set and statistics.

    ``consistency`` is the matched-set size |T|; ``consistency_frac``
    normalizes it by the N-1 foreign passes (0 when N = 1).
    """

    anchor: Detection
    members: tuple[ClusterMember, ...]
    p_hat: float
    s2: float
    l_hat: float
    consistency: int
    consistency_frac: float

    def __post_init__(self) -> None:
        if not (0.0 < self.p_hat <= 1.0):
            raise ValueError(f"p_hat must be in (0, 1], got {self.p_hat}")
        if self.s2 < 0.0:
            raise ValueError(f"s2 must be >= 0, got {self.s2}")
        if not (0.0 <= self.l_hat < 1.0):
            raise ValueError(f"l_hat must be in [0, 1), got {self.l_hat}")
        if not (0.0 <= self.consistency_frac <= 1.0):
            raise ValueError(
                f"consistency_frac must be in [0, 1], got {self.consistency_frac}"
            )


def _box_key(b: Box) -> tuple[float, float, float, float]:
    return b.x1, b.y1, b.x2, b.y2


# math.fsum makes every statistic independent of summation order, so results
# are bit-identical under any permutation of the passes.

def _mean_confidence(confs: list[float], anchor_confidence: float) -> float:
    if not confs:
        return anchor_confidence
    return math.fsum(confs) / len(confs)


def _confidence_variance(confs: list[float]) -> float:
    if len(confs) <= 1:
        return 0.0
    mean = math.fsum(confs) / len(confs)
    return math.fsum((c - mean) ** 2 for c in confs) / len(confs)


def _instability(ious: list[float]) -> float:
    if not ious:
        return 0.0
    return 1.0 - math.fsum(ious) / len(ious)


def _confidences(cluster: ConsensusCluster, include_anchor: bool) -> list[float]:
    confs = [m.detection.confidence for m in cluster.members]
    if include_anchor:
        confs.append(cluster.anchor.confidence)
    return confs


def mean_confidence(cluster: ConsensusCluster, include_anchor: bool = False) -> float:
    """Arithmetic mean of the matched-set confidences.

    The anchor's own confidence is excluded by default (the matched set
    spans only foreign passes); ``include_anchor`` folds it in. An empty
    matched set falls back to the anchor confidence.
    """
    return _mean_confidence(
        _confidences(cluster, include_anchor), cluster.anchor.confidence
    )


def confidence_variance(
    cluster: ConsensusCluster, include_anchor: bool = False
) -> float:
    """Population variance of the matched-set confidences; 0 when |T| <= 1."""
    return _confidence_variance(_confidences(cluster, include_anchor))


def localization_instability(cluster: ConsensusCluster) -> float:
    """One minus the mean member IoU with the anchor; 0 for an empty set."""
    return _instability([m.iou_with_anchor for m in cluster.members])


def _build_cluster(
    anchor: Detection,
    members: list[ClusterMember],
    n_passes: int,
    include_anchor: bool,
) -> ConsensusCluster:
    # Canonical member order keeps cluster equality independent of pass order.
    members.sort(
        key=lambda m: (
            -m.iou_with_anchor,
            -m.detection.confidence,
            _box_key(m.detection.box),
        )
    )
    confs = [m.detection.confidence for m in members]
    if include_anchor:
        confs.append(anchor.confidence)
    return ConsensusCluster(
        anchor=anchor,
        members=tuple(members),
        p_hat=_mean_confidence(confs, anchor.confidence),
        s2=_confidence_variance(confs),
        l_hat=_instability([m.iou_with_anchor for m in members]),
        consistency=len(members),
        consistency_frac=(len(members) / (n_passes - 1) if n_passes > 1 else 0.0),
    )


def match_cluster(
    anchor: Detection,
    passes: PassSet,
    gamma: float,
    include_anchor: bool = False,
) -> ConsensusCluster:
    """Match ``anchor`` against every other pass and compute its statistics.

    A foreign detection joins the matched set when it has the anchor's class
    and IoU with the anchor strictly above ``gamma``; at most one detection
    per foreign pass is kept (highest IoU wins).
    """
    if not (0.0 < gamma < 1.0):
        raise ValueError(f"gamma must be in (0, 1), got {gamma}")
    if not (
        0 <= anchor.pass_index < passes.n_passes
        and anchor in passes.passes[anchor.pass_index]
    ):
        raise ValueError("anchor does not belong to the given pass set")

    members: list[ClusterMember] = []
    for k, dets in enumerate(passes.passes):
        if k == anchor.pass_index:
            continue
        best: ClusterMember | None = None
        for d in dets:
            if d.class_id != anchor.class_id:
                continue
            v = iou(anchor.box, d.box)
            if v <= gamma:
                continue
            if best is None or (v, d.confidence, _box_key(d.box)) > (
                best.iou_with_anchor,
                best.detection.confidence,
                _box_key(best.detection.box),
            ):
                best = ClusterMember(d, v)
        if best is not None:
            members.append(best)
    return _build_cluster(anchor, members, passes.n_passes, include_anchor)


def _rank_key(c: ConsensusCluster):
    # Permutation-stable ordering: never keyed on pass indices.
    return (
        -c.p_hat,
        -c.consistency,
        _box_key(c.anchor.box),
        c.anchor.class_id,
        -c.anchor.confidence,
    )


def consensus_partition(
    passes: PassSet,
    gamma: float,
    include_anchor: bool = False,
) -> tuple[list[ConsensusCluster], list[ConsensusCluster]]:
    """Cluster every detection, then deduplicate mutually-matching anchors.

    Returns ``(kept, suppressed)``. Anchors of the same class overlapping a
    kept anchor above ``gamma`` are suppressed; the survivor is the cluster
    ranked best by (p_hat, consistency, anchor box, class, confidence), so
    the outcome does not depend on pass order.
    """
    clusters = [
        match_cluster(d, passes, gamma, include_anchor)
        for d in passes.all_detections()
    ]
    clusters.sort(key=_rank_key)
    kept: list[ConsensusCluster] = []
    suppressed: list[ConsensusCluster] = []
    for c in clusters:
        duplicate = any(
            k.anchor.class_id == c.anchor.class_id
            and iou(k.anchor.box, c.anchor.box) > gamma
            for k in kept
        )
        (suppressed if duplicate else kept).append(c)
    return kept, suppressed


def build_consensus(
    passes: PassSet,
    gamma: float,
    include_anchor: bool = False,
) -> list[ConsensusCluster]:
    """Deduplicated consensus clusters for one image (see consensus_partition)."""
    kept, _ = consensus_partition(passes, gamma, include_anchor)
    return kept
