"""Expected distributions under the three model variants and chi-squared fit."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .chain import (
    Distribution,
    TransitionMatrix,
    average_matrices,
    chain_product,
    estimate_intervals,
    matrix_power,
    propagate,
)
from .core import Cohort
from .errors import (
    AllCellsExcluded,
    DimensionMismatch,
    EmptyCohort,
    InvalidConfig,
    MissingIntervalMatrix,
)
from .special import chi2_sf

#: cells with expected count below this are dropped from the statistic
EXCLUDE_BELOW = 1e-9


class VariantKind(enum.Enum):
    BaselineConstant = "baseline"
    HomogeneousPower = "homogeneous"
    InhomogeneousChained = "inhomogeneous"

    @classmethod
    def parse(cls, name: str) -> VariantKind:
        for k in cls:
            if name.lower() in (k.value, k.name.lower()):
                return k
        raise InvalidConfig(f"unknown model variant {name!r}")


@dataclass(frozen=True)
class ModelVariant:
    kind: VariantKind
    from_month: int = 0

    @property
    def name(self) -> str:
        return self.kind.value if self.from_month == 0 else f"{self.kind.value}_from{self.from_month}"


def observed_distribution(cohort: Cohort, month: int) -> Distribution:
    g = cohort.groups()[:, cohort.step_of(month)]
    g = g[g >= 0]
    if g.size == 0:
        raise EmptyCohort(f"nobody observed at month {month}")
    counts = np.bincount(g, minlength=cohort.grouping.n_groups)
    return Distribution(counts / counts.sum(), month)


@dataclass(frozen=True, eq=False)
class FittedModel:
    """A model variant estimated on a discovery cohort.

    ``start`` is the discovery distribution at ``variant.from_month`` (the
    baseline distribution when modeling starts at month 0).
    """

    variant: ModelVariant
    start: Distribution
    intervals: dict[int, TransitionMatrix]
    averaged: TransitionMatrix | None
    interval_months: int

    def expected(self, t: int) -> Distribution:
        f = self.variant.from_month
        if t < f or (t - f) % self.interval_months:
            raise InvalidConfig(f"cannot predict month {t} from month {f}")
        kind = self.variant.kind
        if kind is VariantKind.BaselineConstant:
            return Distribution(self.start.probs, t)
        k = (t - f) // self.interval_months
        if k == 0:
            return self.start
        if kind is VariantKind.HomogeneousPower:
            return propagate(self.start, matrix_power(self.averaged, k))
        steps = []
        for s in range(f, t, self.interval_months):
            if s not in self.intervals:
                raise MissingIntervalMatrix(f"no interval matrix for month {s}")
            steps.append(self.intervals[s])
        return propagate(self.start, chain_product(steps))


def fit_model(variant: ModelVariant, discovery: Cohort, average_mode: str = "mean") -> FittedModel:
    if variant.from_month % discovery.interval_months:
        raise InvalidConfig("from_month must be a multiple of the interval")
    start = observed_distribution(discovery, variant.from_month)
    intervals = {}
    averaged = None
    if variant.kind is not VariantKind.BaselineConstant:
        ms = estimate_intervals(discovery, variant.from_month, skip_empty=True)
        intervals = {m.from_month: m for m in ms}
        if variant.kind is VariantKind.HomogeneousPower:
            if not ms:
                raise MissingIntervalMatrix("no interval matrices to average")
            averaged = average_matrices(ms, average_mode)
    return FittedModel(variant, start, intervals, averaged, discovery.interval_months)


def expected_distribution(
    variant: ModelVariant, discovery: Cohort, t: int, average_mode: str = "mean"
) -> Distribution:
    """Distribution the variant predicts for month ``t``."""
    return fit_model(variant, discovery, average_mode).expected(t)


def expected_counts(d: Distribution, n_remaining: int) -> np.ndarray:
    if n_remaining < 0:
        raise ValueError("n_remaining must be non-negative")
    return d.probs * n_remaining


@dataclass(frozen=True)
class GofResult:
    chi_sq: float
    df: int
    p_value: float
    excluded: tuple[int, ...] = ()
    cells: tuple[tuple[int, ...], ...] = ()


def _pool_adjacent(expected: np.ndarray, min_expected: float) -> list[list[int]]:
    cells = [[i] for i in range(len(expected))]
    sums = list(map(float, expected))
    while len(cells) > 1 and min(sums) < min_expected:
        i = int(np.argmin(sums))
        if i == 0:
            j = 1
        elif i == len(cells) - 1:
            j = i - 1
        else:
            j = i - 1 if sums[i - 1] <= sums[i + 1] else i + 1
        lo, hi = sorted((i, j))
        cells[lo] += cells[hi]
        sums[lo] += sums[hi]
        del cells[hi], sums[hi]
    return cells


def chi_squared_gof(observed, expected, pooling: str = "none", min_expected: float = 5.0) -> GofResult:
    """Pearson chi-squared goodness of fit.

    With ``pooling="none"`` cells whose expected count is essentially zero
    are excluded and the degrees of freedom reduced.  ``pooling="adjacent"``
    merges the smallest cell into its smaller ordinal neighbour until every
    cell expects at least ``min_expected``.
    """
    o = np.asarray(observed, dtype=float)
    e = np.asarray(expected, dtype=float)
    if o.shape != e.shape:
        raise DimensionMismatch("observed and expected differ in length")
    keep = [i for i in range(len(e)) if e[i] >= EXCLUDE_BELOW]
    excluded = tuple(i for i in range(len(e)) if e[i] < EXCLUDE_BELOW)
    if not keep:
        raise AllCellsExcluded("every cell has zero expected count")
    if pooling == "none":
        cells = [[i] for i in keep]
    elif pooling == "adjacent":
        cells = [[keep[i] for i in c] for c in _pool_adjacent(e[keep], min_expected)]
    else:
        raise InvalidConfig(f"unknown pooling {pooling!r}")
    oc = np.array([o[c].sum() for c in cells])
    ec = np.array([e[c].sum() for c in cells])
    chi = float(np.sum((oc - ec) ** 2 / ec))
    df = len(cells) - 1
    p = chi2_sf(chi, df) if df > 0 else 1.0
    return GofResult(chi, df, min(max(p, 0.0), 1.0), excluded, tuple(tuple(c) for c in cells))


@dataclass(frozen=True, eq=False)
class FitPoint:
    month: int
    observed_counts: np.ndarray
    expected_counts: np.ndarray
    n_remaining: int
    chi_sq: float
    df: int
    p_value: float
    excluded: tuple[int, ...] = field(default=())


def fit_series(
    variant: ModelVariant,
    discovery: Cohort,
    validation: Cohort,
    average_mode: str = "mean",
    pooling: str = "none",
) -> list[FitPoint]:
    """Chi-squared fit of the variant against the validation cohort over time.

    One point per scheduled month after ``variant.from_month``; months where
    no validation subject was observed are skipped.
    """
    if (discovery.interval_months != validation.interval_months
            or discovery.grouping != validation.grouping):
        raise DimensionMismatch("discovery and validation cohorts use different schedules or groupings")
    model = fit_model(variant, discovery, average_mode)
    n_groups = validation.grouping.n_groups
    g = validation.groups()
    horizon = min(discovery.horizon_months, validation.horizon_months)
    points = []
    for t in range(variant.from_month + validation.interval_months, horizon + 1,
                   validation.interval_months):
        col = g[:, validation.step_of(t)]
        col = col[col >= 0]
        if col.size == 0:
            continue
        obs = np.bincount(col, minlength=n_groups)
        exp = expected_counts(model.expected(t), int(col.size))
        res = chi_squared_gof(obs, exp, pooling)
        points.append(FitPoint(t, obs, exp, int(col.size), res.chi_sq, res.df, res.p_value, res.excluded))
    return points


def fit_is_plausible(points: list[FitPoint], alpha: float = 0.001) -> bool:
    return all(p.p_value > alpha for p in points)
