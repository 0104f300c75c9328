"""Boolean selection rules turning consensus clusters into pseudo-labels
or tile anchors, for both the base and the dagger variant."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .consensus import ConsensusCluster
from .geometry import Box, iou


class Variant(str, Enum):
    SSAL = "ssal"
    SSAL_DAGGER = "ssal-dagger"


class RejectReason(str, Enum):
    """Stable reason codes for detections that end up neither pseudo-label
    nor tile anchor."""

    BELOW_KAPPA1_LOW = "below_kappa1_low"
    INCONSISTENT = "inconsistent"
    HIGH_VARIANCE = "high_variance"
    MID_CONFIDENCE_CONSISTENT = "mid_confidence_consistent"
    CONSENSUS_DUPLICATE = "consensus_duplicate"
    DUPLICATE_SUPPRESSED = "duplicate_suppressed"
    R0_PL_DISABLED = "r0_pseudo_labelling_disabled"
    SCHEMA_INVALID = "schema_invalid"


@dataclass(frozen=True)
class GateConfig:
    """Thresholds for pseudo-label and tile selection.

    Defaults: confidence and consistency gates at 0.5, variance gate and
    low-confidence floor at 0.1, IoU threshold 0.5, 10 passes.
    """

    kappa0: float = 0.1
    kappa1: float = 0.5
    kappa1_low: float = 0.1
    kappa2: float = 0.5
    n_passes: int = 10
    gamma: float = 0.5
    variant: Variant = Variant.SSAL

    def __post_init__(self) -> None:
        if not (0.0 <= self.kappa1_low < self.kappa1 <= 1.0):
            raise ValueError(
                f"need 0 <= kappa1_low < kappa1 <= 1, "
                f"got {self.kappa1_low}, {self.kappa1}"
            )
        if not (0.0 < self.kappa2 <= 1.0):
            raise ValueError(f"kappa2 must be in (0, 1], got {self.kappa2}")
        if self.kappa0 <= 0.0:
            raise ValueError(f"kappa0 must be > 0, got {self.kappa0}")
        if not (0.0 < self.gamma < 1.0):
            raise ValueError(f"gamma must be in (0, 1), got {self.gamma}")
        if self.n_passes < 1:
            raise ValueError(f"n_passes must be >= 1, got {self.n_passes}")
        if not isinstance(self.variant, Variant):
            object.__setattr__(self, "variant", Variant(self.variant))


@dataclass(frozen=True)
class PseudoLabel:
    """A selected detection promoted to a training label (box = anchor box)."""

    box: Box
    class_id: int
    p_hat: float
    cluster: ConsensusCluster


def ugpl_gate(cluster: ConsensusCluster, cfg: GateConfig) -> bool:
    """Base pseudo-label rule: confident and consistent."""
    return cluster.p_hat >= cfg.kappa1 and cluster.consistency_frac >= cfg.kappa2


def ugpl_dagger_gate(cluster: ConsensusCluster, cfg: GateConfig) -> bool:
    """Dagger pseudo-label rule: additionally requires low confidence variance."""
    return cluster.s2 <= cfg.kappa0 and ugpl_gate(cluster, cfg)


def ugt_gate(cluster: ConsensusCluster, cfg: GateConfig) -> bool:
    """Base tiling rule: mid-band confidence and inconsistent."""
    return (
        cfg.kappa1_low <= cluster.p_hat < cfg.kappa1
        and cluster.consistency_frac < cfg.kappa2
    )


def ugt_dagger_gate(cluster: ConsensusCluster, cfg: GateConfig) -> bool:
    """Dagger tiling rule: mid-band confidence, consistency constraint dropped."""
    return cfg.kappa1_low <= cluster.p_hat < cfg.kappa1


def pl_gate(cluster: ConsensusCluster, cfg: GateConfig) -> bool:
    """Variant-dispatched pseudo-label gate."""
    if cfg.variant is Variant.SSAL_DAGGER:
        return ugpl_dagger_gate(cluster, cfg)
    return ugpl_gate(cluster, cfg)


def tile_gate(cluster: ConsensusCluster, cfg: GateConfig) -> bool:
    """Variant-dispatched tile gate."""
    if cfg.variant is Variant.SSAL_DAGGER:
        return ugt_dagger_gate(cluster, cfg)
    return ugt_gate(cluster, cfg)


def _pl_rank_key(c: ConsensusCluster):
    return (
        -c.p_hat,
        -c.consistency,
        (c.anchor.box.x1, c.anchor.box.y1, c.anchor.box.x2, c.anchor.box.y2),
        c.anchor.class_id,
    )


def _greedy_pl_partition(
    clusters: list[ConsensusCluster], cfg: GateConfig
) -> tuple[list[ConsensusCluster], list[ConsensusCluster]]:
    """Split PL-gate passers into (kept, suppressed) by same-class greedy
    suppression at IoU > gamma, highest p_hat first."""
    passing = sorted((c for c in clusters if pl_gate(c, cfg)), key=_pl_rank_key)
    kept: list[ConsensusCluster] = []
    suppressed: list[ConsensusCluster] = []
    for c in passing:
        clash = any(
            k.anchor.class_id == c.anchor.class_id
            and iou(k.anchor.box, c.anchor.box) > cfg.gamma
            for k in kept
        )
        (suppressed if clash else kept).append(c)
    return kept, suppressed


def select_pseudo_labels(
    clusters: list[ConsensusCluster], cfg: GateConfig
) -> list[PseudoLabel]:
    """Pseudo-labels for one image's clusters under the configured variant."""
    kept, _ = _greedy_pl_partition(clusters, cfg)
    return [
        PseudoLabel(
            box=c.anchor.box,
            class_id=c.anchor.class_id,
            p_hat=c.p_hat,
            cluster=c,
        )
        for c in kept
    ]


def select_tile_anchors(
    clusters: list[ConsensusCluster], cfg: GateConfig
) -> list[ConsensusCluster]:
    """Tile-anchor clusters under the configured variant.

    A cluster passing the pseudo-label gate is never a tile anchor; the
    gates are already disjoint in p_hat, so the exclusion is a guard only.
    """
    return sorted(
        (c for c in clusters if tile_gate(c, cfg) and not pl_gate(c, cfg)),
        key=_pl_rank_key,
    )


def rejection_reason(cluster: ConsensusCluster, cfg: GateConfig) -> RejectReason:
    """Reason code for a cluster that passed neither gate."""
    if cluster.p_hat < cfg.kappa1_low:
        return RejectReason.BELOW_KAPPA1_LOW
    if cluster.p_hat >= cfg.kappa1:
        if cluster.consistency_frac < cfg.kappa2:
            return RejectReason.INCONSISTENT
        # Only reachable under the dagger variant's variance constraint.
        return RejectReason.HIGH_VARIANCE
    # Mid band: only the base variant rejects here (consistent detections).
    return RejectReason.MID_CONFIDENCE_CONSISTENT
