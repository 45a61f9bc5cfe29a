"""Confirmed disability worsening (CDW), regression from CDW, and their
model-based probabilities on the state-group chain."""

from __future__ import annotations

import math
import warnings
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from .chain import TransitionMatrix
from .core import DEFAULT_GROUPING, Cohort, StateGroup, StateGrouping, VisitRecord, group_of
from .errors import (
    DegenerateExpected,
    EmptyRegressionSet,
    InvalidConfig,
    NoCdwEvents,
    ThresholdAboveScale,
)
from .special import t_sf_two_sided

#: EDSS used for a whole group when only the group is known
DEFAULT_REPRESENTATIVE = (0.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.5, 6.5)

#: output-only sub-rows of the regression table: label -> (group, max trigger EDSS)
DEFAULT_SUBROWS = {"4-4.5": (6, 4.5)}


@dataclass(frozen=True)
class CdwRule:
    """Minimum EDSS increase over baseline that counts as worsening.

    +``delta_for_zero`` from a baseline of 0, +``delta_high`` from baselines
    at or above ``high_cutoff``, +``delta_mid`` otherwise; the increase must
    be confirmed ``confirmation_months`` later.
    """

    delta_for_zero: float = 1.5
    delta_mid: float = 1.0
    delta_high: float = 0.5
    high_cutoff: float = 5.5
    confirmation_months: int = 6

    def __post_init__(self):
        for name in ("delta_for_zero", "delta_mid", "delta_high"):
            d = getattr(self, name)
            if d <= 0 or (2 * d) != int(2 * d):
                raise InvalidConfig(f"{name} must be a positive multiple of 0.5, got {d}")
        if self.confirmation_months <= 0:
            raise InvalidConfig("confirmation_months must be positive")

    def confirmation_steps(self, interval_months: int) -> int:
        if self.confirmation_months % interval_months:
            raise InvalidConfig("confirmation_months must be a multiple of the visit interval")
        return self.confirmation_months // interval_months


def cdw_threshold(baseline: float, rule: CdwRule = CdwRule()) -> float:
    """EDSS a subject must reach for worsening; clipped to 10 with a warning."""
    if baseline == 0:
        t = baseline + rule.delta_for_zero
    elif baseline >= rule.high_cutoff:
        t = baseline + rule.delta_high
    else:
        t = baseline + rule.delta_mid
    if t > 10.0:
        warnings.warn(f"threshold {t} above the EDSS scale, clipped to 10", ThresholdAboveScale,
                      stacklevel=2)
        t = 10.0
    return t


@dataclass(frozen=True)
class CdwEvent:
    subject_id: str
    onset_month: int
    trigger_edss: float
    threshold_edss: float
    trigger_group: StateGroup
    baseline_edss: float
    confirm_month: int
    confirm_edss: float


@dataclass(frozen=True)
class RegressionEvent:
    subject_id: str
    month: int
    edss: float


def _pairs(visits) -> list[tuple[int, float]]:
    return [(v.month, v.edss) if isinstance(v, VisitRecord) else (int(v[0]), float(v[1]))
            for v in visits]


def detect_cdw(
    visits: Sequence,
    rule: CdwRule = CdwRule(),
    subject_id: str = "",
    grouping: StateGrouping = DEFAULT_GROUPING,
) -> CdwEvent | None:
    """Earliest confirmed worsening in a baseline-first, time-ordered trajectory.

    A visit at or above threshold is confirmed when the first visit at least
    ``confirmation_months`` later exists and it, and every visit in between,
    stays at or above threshold.  Missing intermediate visits are tolerated.
    """
    pairs = _pairs(visits)
    if not pairs or pairs[0][0] != 0:
        raise InvalidConfig("trajectory must start with a month-0 baseline")
    if visits and isinstance(visits[0], VisitRecord):
        subject_id = subject_id or visits[0].subject_id
    base = pairs[0][1]
    thr = cdw_threshold(base, rule)
    for i in range(1, len(pairs)):
        m, x = pairs[i]
        if x < thr:
            continue
        end = m + rule.confirmation_months
        for m2, x2 in pairs[i + 1:]:
            if x2 < thr:
                break
            if m2 >= end:
                return CdwEvent(subject_id, m, x, thr, group_of(x, grouping), base, m2, x2)
    return None


def detect_regression(visits: Sequence, event: CdwEvent) -> RegressionEvent | None:
    """First visit after CDW onset strictly below the worsening threshold."""
    for m, x in _pairs(visits):
        if m > event.onset_month and x < event.threshold_edss:
            return RegressionEvent(event.subject_id, m, x)
    return None


def worsening_cut(
    threshold_edss: float,
    grouping: StateGrouping = DEFAULT_GROUPING,
    mode: str = "max",
    representative: Sequence[float] = DEFAULT_REPRESENTATIVE,
) -> int:
    """Index of the lowest group counted as worsened for a threshold EDSS.

    Groups below the cut form the regression set.  ``mode`` decides how a
    group straddling the threshold is treated: ``"max"`` counts it as worsened
    when its largest score reaches the threshold, ``"min"`` only when its
    smallest score does, ``"representative"`` when its representative EDSS
    does.  Returns ``n_groups`` when no group qualifies.
    """
    n = grouping.n_groups
    if mode == "max":
        key = grouping.group_max
    elif mode == "min":
        key = grouping.group_min
    elif mode == "representative":
        if len(representative) != n:
            raise InvalidConfig("need one representative EDSS per group")
        key = representative.__getitem__
    else:
        raise InvalidConfig(f"unknown threshold mode {mode!r}")
    for g in range(n):
        if key(g) >= threshold_edss:
            return g
    return n


def group_threshold(baseline_group: int, rule: CdwRule, representative=DEFAULT_REPRESENTATIVE) -> float:
    return cdw_threshold(representative[baseline_group], rule)


def _first_passage(P: np.ndarray, start: int, target: np.ndarray, horizon_steps: int) -> float:
    absorbing = P.copy()
    absorbing[target] = 0.0
    absorbing[target, target] = 1.0
    d = np.zeros(P.shape[0])
    d[start] = 1.0
    for _ in range(horizon_steps):
        d = d @ absorbing
    return float(min(max(d[target].sum(), 0.0), 1.0))


def predicted_regression_probability(
    m: TransitionMatrix,
    baseline_group: int,
    cdw_group: int,
    horizon_steps: int,
    rule: CdwRule = CdwRule(),
    grouping: StateGrouping = DEFAULT_GROUPING,
    threshold_mode: str = "max",
    representative: Sequence[float] = DEFAULT_REPRESENTATIVE,
    threshold_edss: float | None = None,
) -> float:
    """Probability that a walk starting in ``cdw_group`` enters the regression
    set within ``horizon_steps`` transitions.

    The threshold comes from ``threshold_edss`` when given, else from the
    representative EDSS of ``baseline_group``; the regression set is every
    group below :func:`worsening_cut`.
    """
    thr = group_threshold(baseline_group, rule, representative) if threshold_edss is None else threshold_edss
    cut = worsening_cut(thr, grouping, threshold_mode, representative)
    if cut == 0:
        raise EmptyRegressionSet(f"no group lies below threshold {thr}")
    if cdw_group < cut:
        raise InvalidConfig(f"group {cdw_group} already lies below the threshold {thr}")
    return _first_passage(m.entries, cdw_group, np.arange(cut), horizon_steps)


def _cdw_propagation(P, start, cut, c, horizon_steps):
    n = P.shape[0]
    worse = np.arange(n) >= cut
    mass = np.zeros((n, c + 1))
    mass[start, 0] = 1.0
    absorbed = 0.0
    totals = [1.0]
    for _ in range(horizon_steps):
        moved = mass.T @ P  # (c+1, n): row k = mass with k steps above, after one transition
        nxt = np.zeros_like(mass)
        nxt[~worse, 0] = moved[:, ~worse].sum(axis=0)
        for k in range(c):
            nxt[worse, k + 1] = moved[k, worse]
        absorbed += moved[c, worse].sum()
        mass = nxt
        totals.append(float(mass.sum() + absorbed))
    return absorbed, totals


def predicted_cdw_probability(
    m: TransitionMatrix,
    baseline_group: int,
    horizon_steps: int,
    rule: CdwRule = CdwRule(),
    grouping: StateGrouping = DEFAULT_GROUPING,
    interval_months: int = 3,
    threshold_mode: str = "max",
    representative: Sequence[float] = DEFAULT_REPRESENTATIVE,
    threshold_edss: float | None = None,
) -> float:
    """Probability of a confirmed worsening within ``horizon_steps``.

    Worsening starts at some step t >= 1 in a worsened group and must stay
    there for the following ``confirmation_months / interval`` steps, all
    within the horizon.  Computed exactly on the chain augmented with a
    counter of consecutive worsened steps.
    """
    thr = group_threshold(baseline_group, rule, representative) if threshold_edss is None else threshold_edss
    cut = worsening_cut(thr, grouping, threshold_mode, representative)
    c = rule.confirmation_steps(interval_months)
    if cut >= m.n_states:
        return 0.0
    absorbed, _ = _cdw_propagation(m.entries, baseline_group, cut, c, horizon_steps)
    return float(min(max(absorbed, 0.0), 1.0))


def proportion_test(p0: float, k: float, n: int) -> tuple[float, float]:
    """One-sample proportion test with a Student t reference.

    ``t = (k/n - p0) / sqrt(p0 (1 - p0) / n)``, two-sided p-value on
    ``n - 1`` degrees of freedom.  ``k`` may be fractional (an observed
    proportion times ``n``).
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if not 0.0 < p0 < 1.0:
        raise DegenerateExpected(f"expected proportion {p0} must lie strictly inside (0, 1)")
    t = (k / n - p0) / math.sqrt(p0 * (1.0 - p0) / n)
    p = t_sf_two_sided(t, n - 1) if n > 1 else float("nan")
    return t, p


@dataclass(frozen=True)
class RegressionRow:
    label: str
    expected: float
    observed: float
    n: int
    regressed: int
    t_value: float
    p_value: float


@dataclass(frozen=True)
class SubjectCdw:
    event: CdwEvent
    regression: RegressionEvent | None
    expected: float


@dataclass(frozen=True)
class RegressionTable:
    rows: list[RegressionRow]
    subjects: list[SubjectCdw]

    @property
    def aggregate_observed(self) -> float:
        return sum(s.regression is not None for s in self.subjects) / len(self.subjects)

    @property
    def aggregate_expected(self) -> float:
        return float(np.mean([s.expected for s in self.subjects]))


def find_cdw_events(cohort: Cohort, rule: CdwRule = CdwRule()) -> list[tuple[int, CdwEvent, RegressionEvent | None]]:
    """``(panel row, event, regression)`` for every subject with CDW."""
    out = []
    for row, sid in enumerate(cohort.ids):
        traj = cohort.trajectory(row)
        ev = detect_cdw(traj, rule, sid, cohort.grouping)
        if ev is not None:
            out.append((row, ev, detect_regression(traj, ev)))
    return out


def regression_table(
    cohort: Cohort,
    m: TransitionMatrix,
    rule: CdwRule = CdwRule(),
    mode: str = "per_subject",
    horizon_steps: int | None = None,
    threshold_mode: str = "max",
    representative: Sequence[float] = DEFAULT_REPRESENTATIVE,
    subrows: dict[str, tuple[int, float]] | None = None,
) -> RegressionTable:
    """Predicted versus observed regression by the group of the CDW trigger.

    ``mode="per_subject"`` starts each prediction from the group at the
    confirming visit and uses that subject's remaining follow-up, which is
    exactly what can be observed.  ``mode="fixed"`` starts from the trigger
    group with a common horizon (default: study horizon minus the
    confirmation window); it ignores that confirmation already ruled out
    early dips, so it overstates regression.
    Each subject's own threshold defines its regression set.
    """
    grouping = cohort.grouping
    c = rule.confirmation_steps(cohort.interval_months)
    if horizon_steps is None:
        horizon_steps = cohort.n_steps - c
    if subrows is None:
        subrows = DEFAULT_SUBROWS if grouping == DEFAULT_GROUPING else {}
    found = find_cdw_events(cohort, rule)
    if not found:
        raise NoCdwEvents("no subject met the confirmed disability worsening definition")
    obs = cohort.observed()
    subjects = []
    for row, ev, reg in found:
        if mode == "fixed":
            start, h = ev.trigger_group.index, horizon_steps
        elif mode == "per_subject":
            start = group_of(ev.confirm_edss, grouping).index
            last = int(np.nonzero(obs[row])[0].max()) * cohort.interval_months
            h = (last - ev.confirm_month) // cohort.interval_months
        else:
            raise InvalidConfig(f"unknown regression mode {mode!r}")
        cut = worsening_cut(ev.threshold_edss, grouping, threshold_mode, representative)
        if cut == 0:
            expected = 0.0
        elif start < cut:
            # coarsening puts the start inside the regression set
            expected = 1.0
        else:
            expected = _first_passage(m.entries, start, np.arange(cut), h)
        subjects.append(SubjectCdw(ev, reg, expected))

    groups: dict[str, list[SubjectCdw]] = {}
    for s in subjects:
        groups.setdefault(s.event.trigger_group.label, []).append(s)
    for label, (g, max_edss) in subrows.items():
        sel = [s for s in subjects if s.event.trigger_group.index == g and s.event.trigger_edss <= max_edss]
        if sel:
            groups[label] = sel
    order = {lab: i for i, lab in enumerate(grouping.labels)}
    for label, (g, _) in subrows.items():
        order[label] = g + 0.5
    rows = []
    for label in sorted(groups, key=order.__getitem__):
        sel = groups[label]
        n = len(sel)
        k = sum(s.regression is not None for s in sel)
        p0 = float(np.mean([s.expected for s in sel]))
        try:
            t, p = proportion_test(p0, k, n)
        except DegenerateExpected:
            t, p = float("nan"), float("nan")
        rows.append(RegressionRow(label, p0, k / n, n, k, t, p))
    return RegressionTable(rows, subjects)


@dataclass(frozen=True)
class CdwFigureRow:
    label: str
    baseline_n: int
    cdw_observed: float
    cdw_predicted: float
    cdw_n: int
    regression_expected: float
    regression_observed: float


def cdw_figure_data(
    cohort: Cohort,
    m: TransitionMatrix,
    table: RegressionTable | None,
    rule: CdwRule = CdwRule(),
    threshold_mode: str = "max",
    representative: Sequence[float] = DEFAULT_REPRESENTATIVE,
) -> list[CdwFigureRow]:
    """Per-group CDW proportions (by baseline group) beside regression
    proportions (by trigger group), the data behind the CDW bar chart."""
    grouping = cohort.grouping
    base = grouping.indices(cohort.edss[:, 0])
    with_cdw = {ev.subject_id for _, ev, _ in (find_cdw_events(cohort, rule))}
    by_label = {r.label: r for r in table.rows} if table else {}
    out = []
    for g, label in enumerate(grouping.labels):
        members = [cohort.ids[i] for i in np.nonzero(base == g)[0]]
        n = len(members)
        pred = predicted_cdw_probability(
            m, g, cohort.n_steps, rule, grouping, cohort.interval_months, threshold_mode, representative
        )
        r = by_label.get(label)
        out.append(CdwFigureRow(
            label, n, (sum(s in with_cdw for s in members) / n) if n else 0.0, pred,
            r.n if r else 0,
            r.expected if r else float("nan"),
            r.observed if r else float("nan"),
        ))
    return out
