"""Transition matrix estimation and algebra on the state-group chain."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from .core import Cohort
from .errors import (
    DimensionMismatch,
    EmptyInput,
    InvalidConfig,
    MissingIntervalMatrix,
    NoConvergence,
    NonContiguousSpans,
    NoTransitionsObserved,
)

#: validation tolerance for row sums; operations meet tighter bounds
ROW_SUM_TOL = 1e-9


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class TransitionMatrix:
    """Row-stochastic matrix: ``entries[i, j] = P(next group j | group i)``.

    ``from_month``/``to_month`` give the span of one application of the
    matrix.  ``zero_rows[i]`` is set when row i had no observed transitions
    and was replaced by a self-loop.
    """

    entries: np.ndarray
    from_month: int = 0
    to_month: int = 3
    counts: np.ndarray | None = None
    zero_rows: tuple[bool, ...] = ()
    kind: str = "interval"
    sources: tuple[tuple[int, int], ...] = field(default=())

    def __post_init__(self):
        e = _frozen(self.entries)
        if e.ndim != 2 or e.shape[0] != e.shape[1]:
            raise DimensionMismatch(f"transition matrix must be square, got {e.shape}")
        if (e < -1e-15).any() or (e > 1 + 1e-12).any():
            raise InvalidConfig("transition probabilities must lie in [0, 1]")
        if np.abs(e.sum(axis=1) - 1.0).max() > ROW_SUM_TOL:
            raise InvalidConfig("transition matrix rows must sum to 1")
        object.__setattr__(self, "entries", e)
        if self.counts is not None:
            c = _frozen(self.counts)
            if c.shape != e.shape or (c < 0).any():
                raise DimensionMismatch("counts must be a non-negative matrix like entries")
            object.__setattr__(self, "counts", c)
        zr = tuple(bool(z) for z in self.zero_rows) or (False,) * e.shape[0]
        if len(zr) != e.shape[0]:
            raise DimensionMismatch("zero_rows length must equal the number of states")
        object.__setattr__(self, "zero_rows", zr)
        if self.to_month < self.from_month:
            raise InvalidConfig("to_month precedes from_month")

    @property
    def n_states(self) -> int:
        return self.entries.shape[0]

    @property
    def span(self) -> int:
        return self.to_month - self.from_month

    @property
    def row_occupancy(self) -> np.ndarray | None:
        return None if self.counts is None else self.counts.sum(axis=1)


@dataclass(frozen=True, eq=False)
class Distribution:
    """Probability vector over state groups at a study month."""

    probs: np.ndarray
    month: int = 0

    def __post_init__(self):
        p = np.array(self.probs, dtype=float, copy=True)
        if p.ndim != 1:
            raise DimensionMismatch("distribution must be a vector")
        if (p < -1e-12).any() or abs(p.sum() - 1.0) > ROW_SUM_TOL:
            raise InvalidConfig(f"not a probability vector: {p}")
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    @classmethod
    def point_mass(cls, index: int, n: int, month: int = 0) -> Distribution:
        p = np.zeros(n)
        p[index] = 1.0
        return cls(p, month)

    @classmethod
    def uniform(cls, n: int, month: int = 0) -> Distribution:
        return cls(np.full(n, 1.0 / n), month)


def _normalize_counts(counts: np.ndarray) -> tuple[np.ndarray, tuple[bool, ...]]:
    totals = counts.sum(axis=1)
    zero = totals == 0
    entries = np.divide(counts, totals[:, None], out=np.zeros_like(counts, dtype=float),
                        where=~zero[:, None])
    entries[zero, zero.nonzero()[0]] = 1.0
    return entries, tuple(bool(z) for z in zero)


def interval_matrix(cohort: Cohort, t: int) -> TransitionMatrix:
    """Estimate the transition matrix from month ``t`` to ``t + interval``.

    Only subjects observed at both ends contribute.  Rows with no transitions
    become self-loops and are flagged in ``zero_rows``.
    """
    k = cohort.step_of(t)
    if k + 1 > cohort.n_steps:
        raise MissingIntervalMatrix(f"no scheduled visit after month {t}")
    n = cohort.grouping.n_groups
    g = cohort.groups()
    a, b = g[:, k], g[:, k + 1]
    both = (a >= 0) & (b >= 0)
    counts = np.bincount(a[both] * n + b[both], minlength=n * n).reshape(n, n).astype(float)
    if counts.sum() == 0:
        raise NoTransitionsObserved(f"no subject observed at both month {t} and {t + cohort.interval_months}")
    entries, zero = _normalize_counts(counts)
    return TransitionMatrix(entries, t, t + cohort.interval_months, counts, zero)


def estimate_intervals(
    cohort: Cohort, from_month: int = 0, to_month: int | None = None, skip_empty: bool = False
) -> list[TransitionMatrix]:
    """Interval matrices for every scheduled interval in ``[from_month, to_month]``.

    With ``skip_empty`` intervals without any observed transition are left
    out instead of raising.
    """
    to_month = cohort.horizon_months if to_month is None else to_month
    out = []
    for t in range(from_month, to_month, cohort.interval_months):
        try:
            out.append(interval_matrix(cohort, t))
        except NoTransitionsObserved:
            if not skip_empty:
                raise
    return out


def _check_dims(matrices: Sequence[TransitionMatrix]) -> int:
    if not matrices:
        raise EmptyInput("no matrices given")
    n = matrices[0].n_states
    if any(m.n_states != n for m in matrices):
        raise DimensionMismatch("matrices differ in dimension")
    return n


def average_matrices(matrices: Sequence[TransitionMatrix], mode: str = "mean") -> TransitionMatrix:
    """Combine interval matrices into one homogeneous matrix.

    ``mode="mean"`` takes the unweighted element-wise mean of the probability
    matrices; ``mode="pooled"`` sums the raw counts first and re-normalises,
    weighting intervals by their sample size.
    """
    n = _check_dims(matrices)
    spans = {m.span for m in matrices}
    if len(spans) != 1:
        raise DimensionMismatch(f"matrices cover different interval lengths {sorted(spans)}")
    step = spans.pop()
    start = min(m.from_month for m in matrices)
    sources = tuple((m.from_month, m.to_month) for m in matrices)
    have_counts = all(m.counts is not None for m in matrices)
    pooled = np.sum([m.counts for m in matrices], axis=0) if have_counts else None
    if mode == "mean":
        entries = np.mean([m.entries for m in matrices], axis=0)
        entries /= entries.sum(axis=1, keepdims=True)
        zero = tuple(all(m.zero_rows[i] for m in matrices) for i in range(n))
    elif mode == "pooled":
        if not have_counts:
            raise EmptyInput("pooled averaging needs raw counts")
        entries, zero = _normalize_counts(pooled)
    else:
        raise InvalidConfig(f"unknown average mode {mode!r}")
    return TransitionMatrix(entries, start, start + step, pooled, zero, "average", sources)


def chain_product(matrices: Sequence[TransitionMatrix]) -> TransitionMatrix:
    """Multiply time-ordered, contiguous interval matrices left to right."""
    n = _check_dims(matrices)
    for a, b in zip(matrices, matrices[1:]):
        if a.to_month != b.from_month:
            raise NonContiguousSpans(f"span ends at {a.to_month} but next starts at {b.from_month}")
    out = matrices[0].entries
    for m in matrices[1:]:
        out = out @ m.entries
    zero = tuple(any(m.zero_rows[i] for m in matrices) for i in range(n))
    return TransitionMatrix(out, matrices[0].from_month, matrices[-1].to_month,
                            zero_rows=zero, kind="product",
                            sources=tuple((m.from_month, m.to_month) for m in matrices))


def matrix_power(m: TransitionMatrix, k: int) -> TransitionMatrix:
    """``m`` raised to the ``k``-th power by repeated squaring."""
    if k < 0:
        raise ValueError("k must be non-negative")
    result = np.eye(m.n_states)
    base = m.entries
    e = k
    first = True
    while e:
        if e & 1:
            result = base.copy() if first else result @ base
            first = False
        e >>= 1
        if e:
            base = base @ base
    return TransitionMatrix(result, m.from_month, m.from_month + k * m.span,
                            zero_rows=m.zero_rows if k else (), kind="power")


def propagate(d: Distribution, m: TransitionMatrix) -> Distribution:
    """Advance a distribution by one application of ``m``."""
    if d.probs.shape[0] != m.n_states:
        raise DimensionMismatch(f"distribution has {d.probs.shape[0]} states, matrix {m.n_states}")
    p = d.probs @ m.entries
    return Distribution(np.clip(p, 0.0, None), d.month + m.span)


def closed_classes(entries: np.ndarray) -> list[list[int]]:
    """Closed communicating classes of a stochastic matrix."""
    n = entries.shape[0]
    reach = (entries > 0) | np.eye(n, dtype=bool)
    for k in range(n):
        reach |= reach[:, [k]] & reach[[k], :]
    out = []
    seen = set()
    for i in range(n):
        if i in seen:
            continue
        cls = [j for j in range(n) if reach[i, j] and reach[j, i]]
        seen.update(cls)
        reachable = set(np.nonzero(reach[i])[0].tolist())
        if reachable <= set(cls):
            out.append(cls)
    return out


@dataclass(frozen=True)
class StationaryResult:
    distribution: Distribution
    iterations: int
    unique: bool
    residual: float


def stationary(
    m: TransitionMatrix,
    tol: float = 1e-10,
    max_iter: int = 100_000,
    start: np.ndarray | None = None,
) -> StationaryResult:
    """Stationary distribution by power iteration.

    Iterates ``x <- x M`` from ``start`` (uniform by default) until the L1
    change drops below ``tol``.  ``unique`` is False when the chain has more
    than one closed class, in which case the result depends on ``start``.
    """
    n = m.n_states
    x = np.full(n, 1.0 / n) if start is None else np.asarray(start, dtype=float) / np.sum(start)
    P = m.entries
    for it in range(1, max_iter + 1):
        nxt = x @ P
        change = np.abs(nxt - x).sum()
        x = nxt / nxt.sum()
        if change < tol:
            residual = float(np.abs(x @ P - x).sum())
            return StationaryResult(Distribution(x), it, len(closed_classes(P)) == 1, residual)
    raise NoConvergence(f"power iteration did not converge in {max_iter} iterations")
