"""Brute-force reference computations over tiny fields.

Every helper enumerates F_p^n outright, so keep p^n in the low thousands.
"""

import itertools

import numpy as np


def all_vectors(p, n):
    for v in itertools.product(range(p), repeat=n):
        yield np.array(v, dtype=np.int64)


def kernel_size(rows, p):
    """Number of v with rows @ v == 0."""
    a = np.array(rows, dtype=np.int64)
    n = a.shape[1]
    return sum(1 for v in all_vectors(p, n) if not np.mod(a @ v, p).any())


def brute_rank(rows, p):
    """Rank from the kernel size: |ker| = p^(n - rank)."""
    a = np.array(rows, dtype=np.int64)
    n = a.shape[1]
    size = kernel_size(rows, p)
    return n - round(np.log(size) / np.log(p))


def span_contains(target, generators, p):
    target = np.mod(np.array(target, dtype=np.int64), p)
    gens = [np.array(g, dtype=np.int64) for g in generators]
    for coeffs in itertools.product(range(p), repeat=len(gens)):
        total = sum((c * g for c, g in zip(coeffs, gens)), np.zeros_like(target))
        if np.array_equal(np.mod(total, p), target):
            return True
    return False
