"""Trajectory classification relative to the baseline EDSS."""

from __future__ import annotations

import enum
from collections.abc import Sequence
from dataclasses import dataclass

from .core import DEFAULT_GROUPING, Cohort, StateGrouping, VisitRecord
from .errors import EmptyCohort, InvalidConfig, NoPostBaselineVisits


class PathLabel(enum.Enum):
    Worsening = "Worsening"
    Improver = "Improver"
    Stable = "Stable"
    Cycler = "Cycler"


def _pairs(visits) -> list[tuple[int, float]]:
    return [(v.month, v.edss) if isinstance(v, VisitRecord) else (int(v[0]), float(v[1]))
            for v in visits]


def classify(
    visits: Sequence,
    horizon: int | None = None,
    level: str = "raw",
    grouping: StateGrouping = DEFAULT_GROUPING,
) -> PathLabel:
    """Label one subject's trajectory.

    ``visits`` are time-ordered ``VisitRecord`` or ``(month, edss)`` pairs
    starting with the baseline.  Any visit above baseline while never below
    is Worsening, the mirror case Improver, neither Stable, both Cycler.
    ``level="group"`` compares state groups instead of raw scores.
    """
    pairs = _pairs(visits)
    if not pairs or pairs[0][0] != 0:
        raise NoPostBaselineVisits("trajectory has no month-0 baseline")
    if level == "group":
        pairs = [(m, float(grouping.indices([x])[0])) for m, x in pairs]
    elif level != "raw":
        raise InvalidConfig(f"unknown classification level {level!r}")
    base = pairs[0][1]
    after = [x for m, x in pairs[1:] if horizon is None or m <= horizon]
    if not after:
        raise NoPostBaselineVisits("no post-baseline visit within the horizon")
    above = max(after) > base
    below = min(after) < base
    if above and below:
        return PathLabel.Cycler
    if above:
        return PathLabel.Worsening
    if below:
        return PathLabel.Improver
    return PathLabel.Stable


@dataclass(frozen=True)
class PathSummary:
    labels: dict[str, PathLabel]
    counts: dict[PathLabel, int]
    proportions: dict[PathLabel, float]
    excluded: tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "n_classified": len(self.labels),
            "excluded_count": len(self.excluded),
            "excluded": list(self.excluded),
            "counts": {k.value: v for k, v in self.counts.items()},
            "proportions": {k.value: v for k, v in self.proportions.items()},
        }


def path_proportions(cohort: Cohort, level: str = "raw") -> PathSummary:
    """Classify every subject; those without follow-up are reported as excluded."""
    if len(cohort) == 0:
        raise EmptyCohort("empty cohort")
    labels = {}
    excluded = []
    for row, sid in enumerate(cohort.ids):
        try:
            labels[sid] = classify(cohort.trajectory(row), cohort.horizon_months, level, cohort.grouping)
        except NoPostBaselineVisits:
            excluded.append(sid)
    counts = {k: 0 for k in PathLabel}
    for lab in labels.values():
        counts[lab] += 1
    n = len(labels)
    props = {k: (c / n if n else 0.0) for k, c in counts.items()}
    return PathSummary(labels, counts, props, tuple(excluded))
