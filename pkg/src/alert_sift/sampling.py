"""Deduplicating sampling and time-disjoint train/test partitioning.

Labeled corpora are heavily duplicated per rule (one noisy sensor can emit
thousands of near-identical alerts differing only in port). Striding keeps
the first item of every ``stride`` within each rule partition, capped per
rule, which removes bulk duplication while allowing slight repetition.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime

from .errors import ValidationError
from .labeling import LabeledAlert


@dataclass(frozen=True)
class SampleParams:
    stride: int = 100
    per_rule_cap: int = 10

    def __post_init__(self):
        if self.stride < 1:
            raise ValidationError(f"stride must be >= 1, got {self.stride}")
        if self.per_rule_cap < 1:
            raise ValidationError(f"per_rule_cap must be >= 1, got {self.per_rule_cap}")


def dedup_sample(
    alerts: list[LabeledAlert], params: SampleParams | None = None
) -> list[LabeledAlert]:
    """Stride-sample each rule_uuid partition, then cap it.

    Within each partition (arrival order) positions 1, 1+stride, 1+2*stride,
    ... are kept, truncated to per_rule_cap; partitions are re-emitted in
    first-seen rule order.
    """
    params = params or SampleParams()
    partitions: dict[str, list[LabeledAlert]] = {}
    for item in alerts:
        partitions.setdefault(item.alert.rule_uuid, []).append(item)
    out: list[LabeledAlert] = []
    for items in partitions.values():
        out.extend(items[:: params.stride][: params.per_rule_cap])
    return out


def partition_by_period(
    alerts: list[LabeledAlert], split_instant: datetime
) -> tuple[list[LabeledAlert], list[LabeledAlert]]:
    """Split into (train, test): timestamps before the instant train, rest test."""
    if split_instant.tzinfo is None:
        raise ValidationError("split_instant must be timezone-aware")
    train = [a for a in alerts if a.alert.timestamp < split_instant]
    test = [a for a in alerts if a.alert.timestamp >= split_instant]
    return train, test
