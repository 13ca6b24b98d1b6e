"""Independent Monte-Carlo oracles used by several test modules."""

import itertools
import math

import numpy as np


def corner_shifts(d, r):
    return np.array(list(itertools.product((-1.0, 1.0), repeat=d))) * (r / math.sqrt(d))


def axis_shifts(d, r):
    return np.eye(d) * r


def mc_lr_second_moment(shifts, n, eps, samples, seed, chunk=100_000):
    """Average of L^2 over null samples, L = mean over shifts of prod_i [1 - eps + eps * phi(X_i - mu) / phi(X_i)].

    Returns (estimate, standard error).
    """
    rng = np.random.default_rng(seed)
    d = shifts.shape[1]
    half_sq = 0.5 * (shifts**2).sum(axis=1)
    total = total_sq = 0.0
    done = 0
    while done < samples:
        m = min(chunk, samples - done)
        x = rng.standard_normal((m, n, d))
        # density ratio of N(mu, I) to N(0, I) at every (replicate, row, shift)
        ratio = np.exp(x @ shifts.T - half_sq)
        lik = np.prod(1.0 - eps + eps * ratio, axis=1).mean(axis=1)
        sq = lik**2
        total += sq.sum()
        total_sq += (sq**2).sum()
        done += m
    mean = total / samples
    var = total_sq / samples - mean**2
    return mean, math.sqrt(var / samples)
