"""Synthetic cohorts from known chains, and Monte Carlo walk oracles."""

from __future__ import annotations

import math
import os
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import kernels, rng
from .cdw import DEFAULT_REPRESENTATIVE, CdwRule, group_threshold, worsening_cut
from .chain import Distribution, TransitionMatrix
from .core import DEFAULT_GROUPING, Cohort, StateGrouping
from .errors import EmptyTargetSet, InvalidConfig

#: baseline group distribution of the reference discovery cohort
REFERENCE_BASELINE = (0.110, 0.254, 0.254, 0.132, 0.103, 0.072, 0.074, 0.001)

#: long-run distribution after omitting the first year (cal. target)
OMITTED_YEAR_STATIONARY = (0.119, 0.269, 0.226, 0.122, 0.107, 0.056, 0.070, 0.032)


def thread_count() -> int:
    try:
        return max(1, int(os.environ.get("EDSS_MARKOV_THREADS", "1")))
    except ValueError:
        return 1


def _cumulative(p: np.ndarray) -> np.ndarray:
    """Cumulative sums along the last axis with the tail pinned to exactly 1."""
    cum = np.cumsum(p, axis=-1)
    last = p.shape[-1] - 1 - np.argmax(p[..., ::-1] > 0, axis=-1)
    mask = np.arange(p.shape[-1]) >= last[..., None]
    return np.where(mask, 1.0, cum)


def _run_panel(cum_init, cum_mats, hazard, n, seed, stream, threads, backend=None):
    threads = max(1, min(threads, n)) if n else 1
    if threads == 1:
        return kernels.simulate_panel(cum_init, cum_mats, hazard, n, seed, 0, stream, backend=backend)
    bounds = np.linspace(0, n, threads + 1).astype(int)
    with ThreadPoolExecutor(threads) as pool:
        parts = pool.map(
            lambda ab: kernels.simulate_panel(cum_init, cum_mats, hazard, int(ab[1] - ab[0]), seed,
                                              int(ab[0]), stream, backend=backend),
            zip(bounds[:-1], bounds[1:]),
        )
        return np.concatenate(list(parts), axis=0)


@dataclass(frozen=True, eq=False)
class SimConfig:
    """Ground truth for a synthetic cohort.

    ``matrices`` is one matrix (homogeneous) or one per interval.
    ``dropout_hazard`` is a scalar, a per-interval sequence, or an
    ``(intervals, groups)`` table giving state-dependent dropout.
    """

    n_subjects: int
    initial_distribution: Sequence[float] = REFERENCE_BASELINE
    matrices: object = None
    dropout_hazard: object = 0.0
    horizon_months: int = 36
    interval_months: int = 3
    seed: int = 0
    representative_edss: Sequence[float] = DEFAULT_REPRESENTATIVE
    grouping: StateGrouping = DEFAULT_GROUPING

    @property
    def n_steps(self) -> int:
        return self.horizon_months // self.interval_months

    def arrays(self):
        """Validated ``(init, mats, hazard)`` arrays; raises InvalidConfig."""
        if int(self.n_subjects) != self.n_subjects or self.n_subjects < 1:
            raise InvalidConfig(f"n_subjects must be a positive integer, got {self.n_subjects}")
        if self.interval_months <= 0 or self.horizon_months % self.interval_months:
            raise InvalidConfig("horizon must be a positive multiple of the interval")
        g = self.grouping.n_groups
        k = self.n_steps
        init = np.asarray(getattr(self.initial_distribution, "probs", self.initial_distribution), float)
        if init.shape != (g,) or (init < 0).any() or abs(init.sum() - 1) > 1e-9:
            raise InvalidConfig("initial distribution must be a probability vector over the groups")
        if self.matrices is None:
            raise InvalidConfig("no transition matrix given")
        ms = self.matrices
        if isinstance(ms, (TransitionMatrix, np.ndarray)) and np.ndim(getattr(ms, "entries", ms)) == 2:
            ms = [ms] * k
        mats = np.array([np.asarray(getattr(m, "entries", m), float) for m in ms])
        if mats.shape != (k, g, g):
            raise InvalidConfig(f"need one {g}x{g} matrix or {k} of them, got shape {mats.shape}")
        if (mats < 0).any() or np.abs(mats.sum(axis=2) - 1).max() > 1e-9:
            raise InvalidConfig("transition matrices must be row-stochastic")
        h = np.asarray(self.dropout_hazard, float)
        if h.ndim == 0:
            h = np.full((k, g), float(h))
        elif h.ndim == 1:
            if h.shape != (k,):
                raise InvalidConfig(f"per-interval hazard needs {k} entries")
            h = np.repeat(h[:, None], g, axis=1)
        if h.shape != (k, g) or (h < 0).any() or (h >= 1).any():
            raise InvalidConfig("dropout hazard must lie in [0, 1)")
        rep = tuple(float(x) for x in self.representative_edss)
        if len(rep) != g or any(self.grouping.indices([x])[0] != i for i, x in enumerate(rep)):
            raise InvalidConfig("representative EDSS must fall inside its own group")
        if not 0 <= int(self.seed) < 2**64:
            raise InvalidConfig("seed must be a 64-bit unsigned integer")
        return init, mats, h


def dropout_for_total(total: float, n_intervals: int) -> float:
    """Constant per-interval hazard giving ``total`` dropout over ``n_intervals``."""
    return 1.0 - (1.0 - total) ** (1.0 / n_intervals)


def simulate_states(config: SimConfig, threads: int | None = None, backend=None) -> np.ndarray:
    """Group-index panel of the simulated cohort, -1 after dropout."""
    init, mats, hazard = config.arrays()
    return _run_panel(_cumulative(init), _cumulative(mats), hazard, config.n_subjects,
                      int(config.seed), rng.STREAM_SIMULATE,
                      thread_count() if threads is None else threads, backend)


def simulate_cohort(config: SimConfig, threads: int | None = None, backend=None) -> Cohort:
    """Draw a synthetic cohort.

    Subject ``i`` (id ``S`` + zero-padded i) draws a baseline group, then at
    each interval may drop out with the hazard of its current group and
    otherwise moves one step along the chain.  Scores are the groups'
    representative EDSS.  Output depends only on the config, never on
    ``threads``.
    """
    states = simulate_states(config, threads, backend)
    rep = np.append(np.asarray(config.representative_edss, float), np.nan)
    edss = rep[np.where(states < 0, len(rep) - 1, states)]
    width = max(5, len(str(config.n_subjects - 1)))
    ids = tuple(f"S{i:0{width}d}" for i in range(config.n_subjects))
    return Cohort(ids, edss, config.interval_months, config.horizon_months, config.grouping)


def _walks(m, start: int, horizon_steps: int, n_walks: int, seed: int, backend=None) -> np.ndarray:
    P = np.asarray(getattr(m, "entries", m), float)
    n = P.shape[0]
    init = np.zeros(n)
    init[start] = 1.0
    mats = np.broadcast_to(_cumulative(P), (horizon_steps, n, n))
    hazard = np.zeros((horizon_steps, n))
    return _run_panel(_cumulative(init), mats, hazard, n_walks, int(seed), rng.STREAM_WALK,
                      thread_count(), backend)


def _estimate(hits: np.ndarray) -> tuple[float, float]:
    p = float(hits.mean())
    return p, math.sqrt(p * (1 - p) / hits.size)


def monte_carlo_first_passage(m, start_group: int, target_set, horizon_steps: int, n_walks: int,
                              seed: int, backend=None) -> tuple[float, float]:
    """Fraction of simulated walks that visit ``target_set`` within the horizon."""
    target = sorted(set(int(t) for t in target_set))
    if not target:
        raise EmptyTargetSet("target set is empty")
    if n_walks < 1:
        raise InvalidConfig("n_walks must be positive")
    walks = _walks(m, start_group, horizon_steps, n_walks, seed, backend)
    hits = np.isin(walks, target).any(axis=1)
    return _estimate(hits)


def monte_carlo_cdw(m, baseline_group: int, rule: CdwRule, horizon_steps: int, n_walks: int,
                    seed: int, interval_months: int = 3, grouping: StateGrouping = DEFAULT_GROUPING,
                    threshold_mode: str = "max",
                    representative: Sequence[float] = DEFAULT_REPRESENTATIVE,
                    threshold_edss: float | None = None, backend=None) -> tuple[float, float]:
    """Fraction of simulated walks with a confirmed worsening within the horizon.

    Each walk is scanned for an onset step followed by the full confirmation
    window in worsened groups, the window ending inside the horizon.
    """
    if n_walks < 1:
        raise InvalidConfig("n_walks must be positive")
    thr = group_threshold(baseline_group, rule, representative) if threshold_edss is None else threshold_edss
    cut = worsening_cut(thr, grouping, threshold_mode, representative)
    c = rule.confirmation_steps(interval_months)
    walks = _walks(m, baseline_group, horizon_steps, n_walks, seed, backend)
    worse = walks >= cut
    hits = np.zeros(n_walks, dtype=bool)
    for onset in range(1, horizon_steps - c + 1):
        hits |= worse[:, onset:onset + c + 1].all(axis=1)
    return _estimate(hits)


def reversible_chain(pi, mobility: float = 0.3, grouping: StateGrouping = DEFAULT_GROUPING) -> TransitionMatrix:
    """Birth-death chain with stationary distribution ``pi``.

    Flow between neighbouring groups i, i+1 is ``mobility * min(pi_i, pi_i+1)``
    in each direction (detailed balance); the rest stays put.
    """
    pi = np.asarray(pi, float)
    pi = pi / pi.sum()
    n = pi.size
    if not 0 < mobility <= 0.5:
        raise InvalidConfig("mobility must lie in (0, 0.5]")
    P = np.zeros((n, n))
    for i in range(n - 1):
        flow = mobility * min(pi[i], pi[i + 1])
        P[i, i + 1] = flow / pi[i]
        P[i + 1, i] = flow / pi[i + 1]
    P[np.arange(n), np.arange(n)] = 1.0 - P.sum(axis=1)
    return TransitionMatrix(P, 0, 3)


def reference_baseline() -> Distribution:
    p = np.asarray(REFERENCE_BASELINE)
    return Distribution(p / p.sum())
