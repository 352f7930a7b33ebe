"""Exact small-sample enumeration oracles.

mu_exact(kernel, n) enumerates E[U^2] over all n! orderings of one column
(the other can be held at identity by exchangeability of the full
U-statistic) in exact integer arithmetic.  solve_zetas recovers the
covariance ladder zeta_1..zeta_k from mu at n = k..2k-1 via the hypergeometric
variance expansion

    mu(n) * C(n,k) = sum_c C(k,c) * C(n-k,k-c) * zeta_c,

which is triangular in c: n = k pins zeta_k, n = k+1 pins zeta_{k-1}, and so
on down to zeta_1 at n = 2k-1.  These routines are the ground truth against
which the stamped constants and the closed-form moments are checked.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction

import numpy as np

from .kernels import DEGREE, SCALE, KernelId, perm_code, scaled_table

_FACT = [math.factorial(i) for i in range(13)]


def all_perms(n: int) -> np.ndarray:
    """All n! permutations of 0..n-1 as an (n!, n) int8 array."""
    if n > 10:
        raise ValueError("n! too large to materialize")
    it = itertools.chain.from_iterable(itertools.permutations(range(n)))
    flat = np.fromiter(it, dtype=np.int8, count=_FACT[n] * n)
    return flat.reshape(_FACT[n], n)


def _mu_exact_py(kernel: KernelId, n: int) -> Fraction:
    k = DEGREE[kernel]
    tvec = scaled_table(kernel)
    subsets = list(itertools.combinations(range(n), k))
    tot = 0
    for w in itertools.permutations(range(1, n + 1)):
        u = 0
        for s in subsets:
            u += tvec[perm_code([w[i] for i in s])]
        tot += u * u
    return Fraction(int(tot), _FACT[n] * math.comb(n, k) ** 2 * SCALE[kernel] ** 2)


def _mu_exact_np(kernel: KernelId, n: int, chunk: int = 400_000) -> Fraction:
    k = DEGREE[kernel]
    tvec = scaled_table(kernel)
    perms = all_perms(n)
    weights = [_FACT[k - 1 - i] for i in range(k)]
    subsets = list(itertools.combinations(range(n), k))
    tot = 0
    for lo in range(0, perms.shape[0], chunk):
        block = perms[lo : lo + chunk]
        u = np.zeros(block.shape[0], dtype=np.int64)
        for s in subsets:
            sub = block[:, s]
            code = np.zeros(block.shape[0], dtype=np.int64)
            for i in range(k):
                below = np.zeros(block.shape[0], dtype=np.int64)
                for j in range(i + 1, k):
                    below += sub[:, j] < sub[:, i]
                code += below * weights[i]
            u += tvec[code]
        tot += int(np.dot(u, u))
    return Fraction(tot, _FACT[n] * math.comb(n, k) ** 2 * SCALE[kernel] ** 2)


def mu_exact(kernel: KernelId, n: int) -> Fraction:
    """Exact E[U^2] at sample size n by full permutation enumeration."""
    k = DEGREE[kernel]
    if n < k:
        raise ValueError(f"need n >= {k}")
    # pure python wins for tiny n; the vectorized path handles n up to ~10
    if _FACT[n] <= 5040:
        return _mu_exact_py(kernel, n)
    return _mu_exact_np(kernel, n)


def solve_zetas(kernel: KernelId, mus: dict[int, Fraction] | None = None) -> dict[int, Fraction]:
    """Recover zeta_1..zeta_k from exact mu(n), n = k..2k-1."""
    k = DEGREE[kernel]
    if mus is None:
        mus = {n: mu_exact(kernel, n) for n in range(k, 2 * k)}
    zetas: dict[int, Fraction] = {}
    for n in range(k, 2 * k):
        lhs = mus[n] * math.comb(n, k)
        for c in range(k, 0, -1):
            coef = math.comb(k, c) * math.comb(n - k, k - c) if k - c <= n - k else 0
            if c in zetas:
                lhs -= coef * zetas[c]
            else:
                zetas[c] = lhs / coef
                break
    return zetas


def mu_from_zetas(kernel: KernelId, n: int, zetas: dict[int, Fraction]) -> Fraction:
    """E[U^2] at any n >= k from the covariance ladder."""
    k = DEGREE[kernel]
    s = Fraction(0)
    for c in range(1, k + 1):
        if k - c <= n - k:
            s += math.comb(k, c) * math.comb(n - k, k - c) * zetas[c]
    return s / math.comb(n, k)
