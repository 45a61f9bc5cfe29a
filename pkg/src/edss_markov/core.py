"""EDSS scores, state groups, visit records and cohorts.

A :class:`Cohort` stores its visits as a dense panel: one row per subject,
one column per scheduled visit (month ``k * interval_months``), with ``nan``
marking visits that were not observed.  Because only on-schedule visits up to
the horizon are retained, the panel is an exact representation of the
retained records and every analysis can work on whole columns at once.
"""

from __future__ import annotations

import bisect
import logging
import math
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from decimal import Decimal
from typing import NamedTuple

import numpy as np

from . import rng
from .errors import (
    DuplicateVisit,
    EmptyCohort,
    InsufficientSubjects,
    InvalidConfig,
    InvalidHalf,
    NotHalfStep,
    OutOfRange,
)

log = logging.getLogger(__name__)

EdssScore = float

#: every value on the scale: 0 then 1.0 to 10.0 in half steps
VALID_EDSS: tuple[float, ...] = (0.0,) + tuple(1.0 + 0.5 * i for i in range(19))

DEFAULT_BOUNDARIES: tuple[float, ...] = (0.0, 1.0, 2.0, 2.5, 3.0, 3.5, 4.0, 6.0)


def parse_edss(raw) -> EdssScore:
    """Validate a raw EDSS value and return it as a float.

    Accepts numbers, ``Decimal`` or numeric strings.

    >>> parse_edss("6.5")
    6.5
    """
    if isinstance(raw, str):
        raw = raw.strip()
        try:
            value = float(Decimal(raw))
        except Exception as exc:  # decimal.InvalidOperation and friends
            raise NotHalfStep(f"not a number: {raw!r}") from exc
    else:
        value = float(raw)
    if not math.isfinite(value) or value < 0.0 or value > 10.0:
        raise OutOfRange(f"EDSS {raw!r} outside [0, 10]")
    doubled = value * 2.0
    if abs(doubled - round(doubled)) > 1e-9:
        raise NotHalfStep(f"EDSS {raw!r} is not on a half-point step")
    value = round(doubled) / 2.0
    if value == 0.5:
        raise InvalidHalf("0.5 is not on the EDSS scale")
    return value


def _fmt(x: float) -> str:
    return f"{x:g}"


class StateGroup(NamedTuple):
    index: int
    label: str


@dataclass(frozen=True)
class StateGrouping:
    """Partition of the EDSS scale into ordered groups by lower bounds."""

    lower_bounds: tuple[float, ...] = DEFAULT_BOUNDARIES

    def __post_init__(self):
        b = tuple(float(x) for x in self.lower_bounds)
        object.__setattr__(self, "lower_bounds", b)
        if not b or b[0] != 0.0:
            raise InvalidConfig("group boundaries must start at 0")
        if any(hi <= lo for lo, hi in zip(b, b[1:])):
            raise InvalidConfig("group boundaries must be strictly increasing")
        members = [[] for _ in b]
        for s in VALID_EDSS:
            members[bisect.bisect_right(b, s) - 1].append(s)
        if any(not m for m in members):
            raise InvalidConfig(f"some group in {b} contains no valid EDSS score")
        object.__setattr__(self, "_members", tuple(tuple(m) for m in members))

    @property
    def n_groups(self) -> int:
        return len(self.lower_bounds)

    @property
    def labels(self) -> tuple[str, ...]:
        out = []
        for m in self._members:
            out.append(_fmt(m[0]) if len(m) == 1 else f"{_fmt(m[0])}-{_fmt(m[-1])}")
        return tuple(out)

    def group_min(self, index: int) -> float:
        """Smallest valid EDSS score in the group."""
        return self._members[index][0]

    def group_max(self, index: int) -> float:
        """Largest valid EDSS score in the group."""
        return self._members[index][-1]

    def members(self, index: int) -> tuple[float, ...]:
        return self._members[index]

    def index_of_label(self, label: str) -> int:
        return self.labels.index(label)

    def group(self, index: int) -> StateGroup:
        return StateGroup(index, self.labels[index])

    def indices(self, values) -> np.ndarray:
        """Vectorised group index; ``nan`` maps to -1."""
        v = np.asarray(values, dtype=float)
        out = np.searchsorted(np.asarray(self.lower_bounds), v, side="right") - 1
        return np.where(np.isnan(v), -1, out).astype(np.int64)


DEFAULT_GROUPING = StateGrouping()


def group_of(score: EdssScore, grouping: StateGrouping = DEFAULT_GROUPING) -> StateGroup:
    """Map a valid EDSS score onto its state group."""
    return grouping.group(bisect.bisect_right(grouping.lower_bounds, float(score)) - 1)


@dataclass(frozen=True)
class VisitRecord:
    subject_id: str
    month: int
    edss: EdssScore

    def __post_init__(self):
        if isinstance(self.month, bool) or int(self.month) != self.month or self.month < 0:
            raise OutOfRange(f"month must be a non-negative integer, got {self.month!r}")
        object.__setattr__(self, "month", int(self.month))
        object.__setattr__(self, "subject_id", str(self.subject_id))
        object.__setattr__(self, "edss", parse_edss(self.edss))


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Cohort:
    """Validated collection of subjects' scheduled visits.

    ``edss[s, k]`` is subject ``ids[s]``'s score at month ``k * interval_months``
    or ``nan`` when that visit was not observed.
    """

    ids: tuple[str, ...]
    edss: np.ndarray
    interval_months: int = 3
    horizon_months: int = 36
    grouping: StateGrouping = DEFAULT_GROUPING
    dropped_visits: int = field(default=0, compare=False)
    truncated_visits: int = field(default=0, compare=False)
    excluded_subjects: int = field(default=0, compare=False)

    def __post_init__(self):
        if self.interval_months <= 0 or self.horizon_months <= 0:
            raise InvalidConfig("interval and horizon must be positive")
        if self.horizon_months % self.interval_months:
            raise InvalidConfig("horizon must be a multiple of the interval")
        ids = tuple(str(s) for s in self.ids)
        edss = np.asarray(self.edss, dtype=float).reshape(len(ids), self.n_steps + 1)
        if len(set(ids)) != len(ids):
            raise DuplicateVisit("subject ids must be unique")
        if len(ids) and np.isnan(edss[:, 0]).any():
            raise InvalidConfig("every subject needs a month-0 visit")
        order = sorted(range(len(ids)), key=ids.__getitem__)
        object.__setattr__(self, "ids", tuple(ids[i] for i in order))
        object.__setattr__(self, "edss", _readonly(edss[order]))

    @property
    def n_steps(self) -> int:
        return self.horizon_months // self.interval_months

    @property
    def months(self) -> np.ndarray:
        return np.arange(self.n_steps + 1) * self.interval_months

    def __len__(self) -> int:
        return len(self.ids)

    def __eq__(self, other):
        if not isinstance(other, Cohort):
            return NotImplemented
        return (
            self.ids == other.ids
            and self.interval_months == other.interval_months
            and self.horizon_months == other.horizon_months
            and self.grouping == other.grouping
            and np.array_equal(self.edss, other.edss, equal_nan=True)
        )

    __hash__ = None

    def step_of(self, month: int) -> int:
        if month % self.interval_months or not 0 <= month <= self.horizon_months:
            raise InvalidConfig(f"month {month} is not a scheduled visit")
        return month // self.interval_months

    def groups(self) -> np.ndarray:
        """Panel of group indices, -1 where unobserved."""
        return self.grouping.indices(self.edss)

    def observed(self) -> np.ndarray:
        return ~np.isnan(self.edss)

    def visits(self, subject_id: str) -> tuple[VisitRecord, ...]:
        row = self.edss[self.ids.index(subject_id)]
        return tuple(
            VisitRecord(subject_id, int(m), float(v))
            for m, v in zip(self.months, row)
            if not np.isnan(v)
        )

    def trajectory(self, row: int) -> list[tuple[int, float]]:
        """``(month, edss)`` pairs of the subject in panel row ``row``."""
        v = self.edss[row]
        return [(int(m), float(x)) for m, x in zip(self.months, v) if x == x]

    @property
    def subjects(self) -> Mapping[str, tuple[VisitRecord, ...]]:
        return {sid: self.visits(sid) for sid in self.ids}

    def records(self) -> Iterable[VisitRecord]:
        for sid, row in zip(self.ids, self.edss):
            for m, v in zip(self.months, row):
                if not np.isnan(v):
                    yield VisitRecord(sid, int(m), float(v))

    def subset(self, ids: Iterable[str]) -> Cohort:
        wanted = set(ids)
        rows = [i for i, s in enumerate(self.ids) if s in wanted]
        return Cohort(
            tuple(self.ids[i] for i in rows),
            self.edss[rows] if rows else np.empty((0, self.n_steps + 1)),
            self.interval_months,
            self.horizon_months,
            self.grouping,
        )


def build_cohort(
    records: Iterable[VisitRecord],
    interval: int = 3,
    horizon: int = 36,
    grouping: StateGrouping = DEFAULT_GROUPING,
) -> Cohort:
    """Assemble a cohort from visit records.

    Off-schedule visits (month not a multiple of ``interval``) and visits
    beyond ``horizon`` are dropped and counted.  Two records for the same
    subject and month raise :class:`DuplicateVisit`.  Subjects without a
    month-0 visit are excluded and counted.
    """
    if interval <= 0 or horizon <= 0 or horizon % interval:
        raise InvalidConfig("interval and horizon must be positive, horizon a multiple of interval")
    n_steps = horizon // interval
    visits: dict[str, dict[int, float]] = {}
    dropped = truncated = 0
    seen: set[tuple[str, int]] = set()
    for rec in records:
        key = (rec.subject_id, rec.month)
        if key in seen:
            raise DuplicateVisit(f"subject {rec.subject_id!r} has two visits at month {rec.month}")
        seen.add(key)
        if rec.month % interval:
            dropped += 1
            continue
        if rec.month > horizon:
            truncated += 1
            continue
        visits.setdefault(rec.subject_id, {})[rec.month // interval] = rec.edss
    if not visits:
        raise EmptyCohort("no records")
    ids = [sid for sid, v in visits.items() if 0 in v]
    excluded = len(visits) - len(ids)
    if not ids:
        raise EmptyCohort("no subject has a month-0 visit")
    panel = np.full((len(ids), n_steps + 1), np.nan)
    for r, sid in enumerate(ids):
        for k, v in visits[sid].items():
            panel[r, k] = v
    if dropped:
        log.warning("dropped %d off-schedule visits", dropped)
    if excluded:
        log.warning("excluded %d subjects without a baseline visit", excluded)
    return Cohort(tuple(ids), panel, interval, horizon, grouping, dropped, truncated, excluded)


def split_cohort(cohort: Cohort, n_validation: int, seed: int) -> tuple[Cohort, Cohort]:
    """Randomly set aside ``n_validation`` subjects.

    The subject ids (already sorted) are permuted with
    :func:`edss_markov.rng.permutation`; the first ``n_validation`` positions
    form the validation cohort.
    """
    if n_validation < 0 or n_validation >= len(cohort):
        raise InsufficientSubjects(
            f"cannot set aside {n_validation} of {len(cohort)} subjects"
        )
    perm = rng.permutation(len(cohort), seed)
    val_rows = sorted(perm[:n_validation])
    disc_rows = sorted(perm[n_validation:])

    def take(rows):
        return Cohort(
            tuple(cohort.ids[i] for i in rows),
            cohort.edss[rows] if rows else np.empty((0, cohort.n_steps + 1)),
            cohort.interval_months,
            cohort.horizon_months,
            cohort.grouping,
        )

    return take(disc_rows), take(val_rows)


@dataclass(frozen=True)
class CohortSummary:
    n: int
    labels: tuple[str, ...]
    baseline_distribution: np.ndarray
    baseline_mean: float
    baseline_sd: float
    baseline_median: float
    baseline_iqr: float
    months: np.ndarray
    retention: np.ndarray
    observed: np.ndarray

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "baseline_distribution": dict(zip(self.labels, map(float, self.baseline_distribution))),
            "baseline_edss": {
                "mean": self.baseline_mean,
                "sd": self.baseline_sd,
                "median": self.baseline_median,
                "iqr": self.baseline_iqr,
            },
            "retention": {str(int(m)): int(c) for m, c in zip(self.months, self.retention)},
            "observed": {str(int(m)): int(c) for m, c in zip(self.months, self.observed)},
        }


def summarize_cohort(cohort: Cohort) -> CohortSummary:
    """Descriptive summary of a cohort.

    ``retention[k]`` counts subjects still in follow-up at month k (last
    observed visit at or after it), which is non-increasing; ``observed[k]``
    counts subjects actually seen at month k.
    """
    if len(cohort) == 0:
        raise EmptyCohort("empty cohort")
    base = cohort.edss[:, 0]
    g = cohort.grouping.indices(base)
    counts = np.bincount(g, minlength=cohort.grouping.n_groups).astype(float)
    dist = counts / counts.sum()
    obs = cohort.observed()
    last = obs.shape[1] - 1 - np.argmax(obs[:, ::-1], axis=1)
    retention = np.array([(last >= k).sum() for k in range(obs.shape[1])])
    q75, q25 = np.percentile(base, [75, 25])
    return CohortSummary(
        n=len(cohort),
        labels=cohort.grouping.labels,
        baseline_distribution=dist,
        baseline_mean=float(base.mean()),
        baseline_sd=float(base.std(ddof=1)) if len(base) > 1 else 0.0,
        baseline_median=float(np.median(base)),
        baseline_iqr=float(q75 - q25),
        months=cohort.months,
        retention=retention,
        observed=obs.sum(axis=0),
    )
