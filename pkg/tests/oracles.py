"""Independent reference implementations used only by the tests."""

import itertools

import numpy as np


def enumerate_first_passage(P, start, target, horizon):
    """Sum of path probabilities over every length-``horizon`` path that
    visits ``target`` at some step 0..horizon."""
    P = np.asarray(P)
    n = P.shape[0]
    target = set(target)
    total = 0.0
    for path in itertools.product(range(n), repeat=horizon):
        states = (start,) + path
        prob = 1.0
        for a, b in zip(states, states[1:]):
            prob *= P[a, b]
        if prob and any(s in target for s in states):
            total += prob
    return total


def enumerate_cdw(P, start, cut, confirm_steps, horizon):
    """Probability over all paths that some onset t >= 1 has states
    t..t+confirm_steps all >= cut, with t + confirm_steps <= horizon."""
    P = np.asarray(P)
    n = P.shape[0]
    total = 0.0
    for path in itertools.product(range(n), repeat=horizon):
        states = (start,) + path
        prob = 1.0
        for a, b in zip(states, states[1:]):
            prob *= P[a, b]
        if not prob:
            continue
        for t in range(1, horizon - confirm_steps + 1):
            if all(s >= cut for s in states[t:t + confirm_steps + 1]):
                total += prob
                break
    return total


def naive_label(edss_values):
    """Direct boolean scan: first value is the baseline."""
    base = edss_values[0]
    went_up = False
    went_down = False
    for x in edss_values[1:]:
        if x > base:
            went_up = True
        if x < base:
            went_down = True
    if went_up and went_down:
        return "Cycler"
    if went_up:
        return "Worsening"
    if went_down:
        return "Improver"
    return "Stable"


def random_stochastic(rng, n, positive=False):
    """Random row-stochastic matrix (dense when ``positive``)."""
    if positive:
        return rng.dirichlet(np.ones(n), size=n)
    M = rng.dirichlet(np.ones(n) * 0.5, size=n)
    mask = rng.random((n, n)) < 0.3
    np.fill_diagonal(mask, False)
    M[mask] = 0.0
    M[np.arange(n), np.arange(n)] += 1e-3
    return M / M.sum(axis=1, keepdims=True)


def drift_chain(n=8, up=0.3):
    """Moves one group up with probability ``up``; top group absorbing."""
    P = np.eye(n) * (1 - up)
    for i in range(n - 1):
        P[i, i + 1] = up
    P[n - 1, n - 1] = 1.0
    return P
