"""Pairwise rank statistics: fast paths, naive oracles, and all-pairs batch.

Every routine here is exact: the scalar fast paths reduce each statistic to
integer counts divided by an integer, the batch paths push the same integers
through GEMMs whose partial sums stay below the exact-integer capacity of
the float type (2^24 for float32 sign products, 2^53 for float64), and the
naive oracles enumerate subsets with rational arithmetic.  Exactness is what
makes results bit-identical regardless of thread count.

U-statistics average the kernel over k-subsets; W-statistics average
h(S1) * h(S2) over ordered pairs of disjoint k-subsets and are exactly
unbiased for the squared signal.  The generic W engine runs in O(n^k) time
and O(n^(k-1)) memory via inclusion-exclusion over shared indices, which is
practical up to n of a few hundred for degree 3 and 4 and roughly n <= 60
for degree 5.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import LengthMismatch, SampleTooSmall
from .kernels import DEGREE, SCALE, KernelId, pattern, scaled_table
from .ranks import RankMatrix

_FACT = [math.factorial(i) for i in range(13)]


# ---------------------------------------------------------------- validation

def _as_rank_vector(r, n: int | None = None) -> np.ndarray:
    v = np.asarray(r, dtype=np.int64)
    if v.ndim != 1:
        raise ValueError("rank vector must be 1-dimensional")
    if n is not None and v.size != n:
        raise LengthMismatch(f"rank vectors differ in length: {v.size} vs {n}")
    if v.size == 0 or v.min() < 1 or v.max() > v.size:
        raise ValueError("not a permutation of 1..n")
    counts = np.bincount(v, minlength=v.size + 1)
    if not (counts[1:] == 1).all():
        raise ValueError("not a permutation of 1..n")
    return v


def _check_pair(rx, ry, min_n: int, what: str) -> tuple[np.ndarray, np.ndarray, int]:
    vx = _as_rank_vector(rx)
    vy = _as_rank_vector(ry, n=vx.size)
    n = vx.size
    if n < min_n:
        raise SampleTooSmall(f"{what} needs n >= {min_n}, got {n}")
    return vx, vy, n


# ------------------------------------------------------------ scalar U paths

def _inversions(seq: list[int]) -> int:
    """Merge-sort inversion count."""
    if len(seq) <= 1:
        return 0

    def count(a):
        if len(a) <= 1:
            return a, 0
        mid = len(a) // 2
        left, il = count(a[:mid])
        right, ir = count(a[mid:])
        merged = []
        inv = il + ir
        i = j = 0
        while i < len(left) and j < len(right):
            if left[i] <= right[j]:
                merged.append(left[i])
                i += 1
            else:
                merged.append(right[j])
                j += 1
                inv += len(left) - i
        merged.extend(left[i:])
        merged.extend(right[j:])
        return merged, inv

    return count(seq)[1]


def _tau_inv(rx: np.ndarray, ry: np.ndarray, n: int) -> int:
    # y-ranks in x-rank order; rx is a permutation so no sort is needed
    seq = np.empty(n, dtype=np.int64)
    seq[rx - 1] = ry
    return _inversions(seq.tolist())


def kendall_tau_fast(rx, ry) -> float:
    """Kendall tau of two rank vectors in O(n log n)."""
    vx, vy, n = _check_pair(rx, ry, 2, "kendall_tau_fast")
    inv = _tau_inv(vx, vy, n)
    return (n * (n - 1) - 4 * inv) / (n * (n - 1))


def spearman_rho(rx, ry) -> float:
    """Classical Spearman rank correlation."""
    vx, vy, n = _check_pair(rx, ry, 2, "spearman_rho")
    d2 = int(np.dot(vx - vy, vx - vy))
    return 1 - 6 * d2 / (n * (n * n - 1))


def rho_hat(rx, ry) -> float:
    """Unbiased grade-correlation U-statistic (degree-3 kernel).

    Single integer numerator: (rho_num - 3 tau_num) / (n(n-1)(n-2)) with
    rho_num = 12 sum(R_i S_i) - 3n(n+1)^2 and tau_num = n(n-1) tau.
    """
    vx, vy, n = _check_pair(rx, ry, 3, "rho_hat")
    rnum = 12 * int(np.dot(vx, vy)) - 3 * n * (n + 1) ** 2
    tnum = n * (n - 1) - 4 * _tau_inv(vx, vy, n)
    return (rnum - 3 * tnum) / (n * (n - 1) * (n - 2))


def hoeffding_d(rx, ry) -> float:
    """Degree-5 joint-vs-product-distance U-statistic in O(n^2).

    Count form: with c_i = #{j : R_j < R_i and S_j < S_i},
    D = [(n-2)(n-3) D1 + D2 - 2(n-2) D3] / (n..(n-4)) where D1 = sum c(c-1),
    D2 = sum (R-1)(R-2)(S-1)(S-2), D3 = sum (R-2)(S-2)c.
    """
    vx, vy, n = _check_pair(rx, ry, 5, "hoeffding_d")
    less = (vx[None, :] < vx[:, None]) & (vy[None, :] < vy[:, None])
    c = less.sum(axis=1, dtype=np.int64)
    d1 = int(np.dot(c, c - 1))
    d2 = int(np.sum((vx - 1) * (vx - 2) * (vy - 1) * (vy - 2), dtype=np.int64))
    d3 = int(np.sum((vx - 2) * (vy - 2) * c, dtype=np.int64))
    num = (n - 2) * (n - 3) * d1 + d2 - 2 * (n - 2) * d3
    den = n * (n - 1) * (n - 2) * (n - 3) * (n - 4)
    return num / den


def tstar(rx, ry) -> float:
    """Degree-4 concordance-of-quadruples U-statistic in O(n^2).

    The kernel is 2/3 on a quadruple whose two x-smallest points are also
    the two y-smallest or the two y-largest, and -1/3 otherwise.  Counting
    qualifying quadruples by their two x-smallest points gives
    t* = (3(Q1+Q2) - C(n,4)) / (3 C(n,4)).
    """
    vx, vy, n = _check_pair(rx, ry, 4, "tstar")
    grid = np.zeros((n + 2, n + 2), dtype=np.int64)
    grid[vx, vy] = 1
    # gt[a, b] = #{w : R_w > a, S_w > b}; lt[a, b] = #{w : R_w > a, S_w < b}
    suf_x = np.flip(np.cumsum(np.flip(grid, 0), 0), 0)
    gt_full = np.flip(np.cumsum(np.flip(suf_x, 1), 1), 1)
    lt_full = np.cumsum(suf_x, 1)
    gt = gt_full[1:, 1:]  # gt[a, b] valid for a, b in 0..n via offset +1
    lt = np.zeros((n + 1, n + 1), dtype=np.int64)
    lt[:, 1:] = lt_full[1 : n + 2, 0:n]
    q1 = 0
    q2 = 0
    block = max(1, (1 << 21) // n)
    for lo in range(0, n, block):
        hi = min(n, lo + block)
        mx = np.maximum(vx[lo:hi, None], vx[None, :])
        my = np.maximum(vy[lo:hi, None], vy[None, :])
        ny = np.minimum(vy[lo:hi, None], vy[None, :])
        a = gt[mx, my]
        b = lt[mx, ny]
        mask = np.arange(n)[None, :] > np.arange(lo, hi)[:, None]
        q1 += int(np.sum(a * (a - 1) // 2, where=mask, dtype=np.int64))
        q2 += int(np.sum(b * (b - 1) // 2, where=mask, dtype=np.int64))
    tot = math.comb(n, 4)
    return (3 * (q1 + q2) - tot) / (3 * tot)


_FAST_U = {
    KernelId.TAU: kendall_tau_fast,
    KernelId.RHO_HAT: rho_hat,
    KernelId.T_STAR: tstar,
    KernelId.HOEFF_D: hoeffding_d,
}


# ------------------------------------------------------------- naive oracles

def u_stat_naive(kernel: KernelId, rx, ry) -> float:
    """U-statistic by direct enumeration of all k-subsets (oracle)."""
    k = DEGREE[kernel]
    vx, vy, n = _check_pair(rx, ry, k, "u_stat_naive")
    tvec = scaled_table(kernel)
    from .kernels import perm_code

    tot = 0
    for idx in itertools.combinations(range(n), k):
        sx = [vx[i] for i in idx]
        sy = [vy[i] for i in idx]
        order = sorted(range(k), key=lambda c: sx[c])
        tot += int(tvec[perm_code(pattern([sy[c] for c in order]))])
    return float(Fraction(tot, math.comb(n, k) * SCALE[kernel]))


def w_stat_naive(kernel: KernelId, rx, ry) -> float:
    """W-statistic by enumerating 2k-subsets and all k/k splits (oracle)."""
    k = DEGREE[kernel]
    vx, vy, n = _check_pair(rx, ry, 2 * k, "w_stat_naive")
    tvec = scaled_table(kernel)
    from .kernels import perm_code

    def hval(idx):
        sx = [vx[i] for i in idx]
        sy = [vy[i] for i in idx]
        order = sorted(range(k), key=lambda c: sx[c])
        return int(tvec[perm_code(pattern([sy[c] for c in order]))])

    tot = 0
    for u in itertools.combinations(range(n), 2 * k):
        for j in itertools.combinations(u, k):
            comp = tuple(x for x in u if x not in j)
            tot += hval(j) * hval(comp)
    den = math.comb(n, 2 * k) * math.comb(2 * k, k) * SCALE[kernel] ** 2
    return float(Fraction(tot, den))


# ------------------------------------------------------------ W fast engine

def _w_tau_closed(vx: np.ndarray, vy: np.ndarray, n: int) -> float:
    # numerator T^2 - sum r_i^2 + C(n,2) over the signed concordance matrix
    h = np.sign(vx[:, None] - vx[None, :]) * np.sign(vy[:, None] - vy[None, :])
    t = int(h.sum()) // 2
    r = h.sum(axis=1, dtype=np.int64)
    num = t * t - int(np.dot(r, r)) + math.comb(n, 2)
    return float(Fraction(num, math.comb(n, 2) * math.comb(n - 2, 2)))


def _w_engine(kernel: KernelId, vx: np.ndarray, vy: np.ndarray, n: int) -> float:
    """Generic O(n^k) W-statistic via inclusion-exclusion level sums."""
    k = DEGREE[kernel]
    tvec = scaled_table(kernel)
    order = np.argsort(vx)
    s = vy[order].astype(np.int64)  # y-ranks in x-order
    f = k - 2
    weights = [_FACT[k - 1 - i] for i in range(f)]

    def build(c: tuple[int, ...]):
        lo = c[-1] + 1
        ya = s[lo:]
        fixed = [int(s[i]) for i in c]
        const = 0
        for i in range(f):
            below = sum(1 for j in range(i + 1, f) if fixed[j] < fixed[i])
            const += below * weights[i]
        va = np.zeros(ya.size, dtype=np.int64)
        for i in range(f):
            va += weights[i] * (ya < fixed[i])
        code = const + va[:, None] + va[None, :] + (ya[None, :] < ya[:, None])
        return np.triu(tvec[code], 1), lo

    def subsets(c):
        for r in range(f + 1):
            yield from itertools.combinations(c, r)

    levels = {l: np.zeros((n,) * l, dtype=np.int64) for l in range(1, k)}
    s0 = 0
    slabs = [c for c in itertools.combinations(range(n), f) if n - (c[-1] + 1) >= 2]

    for c in slabs:
        h, lo = build(c)
        rows = h.sum(axis=1)
        cols = h.sum(axis=0)
        tot = int(h.sum())
        s0 += tot
        grow = slice(lo, n)
        for csub in subsets(c):
            f2 = len(csub)
            if f2 >= 1:
                levels[f2][csub] += tot
            levels[f2 + 1][csub + (grow,)] += rows + cols
            if f2 + 2 <= k - 1:
                levels[f2 + 2][csub + (grow, grow)] += h

    num = 0
    for c in slabs:
        h, lo = build(c)
        grow = slice(lo, n)
        hbar = np.full(h.shape, s0, dtype=np.int64)
        for csub in subsets(c):
            f2 = len(csub)
            if f2 >= 1:
                hbar += (-1) ** f2 * int(levels[f2][csub])
            vec = levels[f2 + 1][csub + (grow,)]
            hbar += (-1) ** (f2 + 1) * (vec[:, None] + vec[None, :])
            if f2 + 2 <= k - 1:
                hbar += (-1) ** f2 * levels[f2 + 2][csub + (grow, grow)]
            elif f2 + 2 == k:
                hbar += (-1) ** k * h
        num += int(np.sum(h * hbar, dtype=np.int64))

    den = math.comb(n, k) * math.comb(n - k, k) * SCALE[kernel] ** 2
    return float(Fraction(num, den))


def w_stat(kernel: KernelId, rx, ry) -> float:
    """Unbiased squared-signal W-statistic for one pair of rank vectors."""
    k = DEGREE[kernel]
    vx, vy, n = _check_pair(rx, ry, 2 * k, "w_stat")
    if kernel is KernelId.TAU:
        return _w_tau_closed(vx, vy, n)
    return _w_engine(kernel, vx, vy, n)


# ------------------------------------------------------------ batch all-pairs

@dataclass(frozen=True)
class PairStatistics:
    """Values of one statistic on all m(m-1)/2 column pairs, (p,q) lex order."""

    kernel: KernelId
    kind: str  # "U" or "W"
    values: np.ndarray
    n: int
    m: int

    def value(self, p: int, q: int) -> float:
        if not 0 <= p < q < self.m:
            raise IndexError("need 0 <= p < q < m")
        idx = p * self.m - p * (p + 1) // 2 + (q - p - 1)
        return float(self.values[idx])


def _row_blocks(total: int, threads: int) -> list[tuple[int, int]]:
    nb = min(max(threads, 1), total)
    bounds = np.linspace(0, total, nb + 1).astype(int)
    return [(int(bounds[i]), int(bounds[i + 1])) for i in range(nb) if bounds[i] < bounds[i + 1]]


def _run_blocks(fn, blocks, threads: int) -> None:
    if threads <= 1 or len(blocks) <= 1:
        for b in blocks:
            fn(b)
    else:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            list(ex.map(fn, blocks))


def _sign_flat(ranks: np.ndarray) -> np.ndarray:
    """Per-column concordance sign matrices, flattened to (m, n*n) int8."""
    n, m = ranks.shape
    out = np.empty((m, n * n), dtype=np.int8)
    for j in range(m):
        col = ranks[:, j]
        out[j] = np.sign(col[:, None] - col[None, :]).astype(np.int8).reshape(-1)
    return out


def _exact_gram(flat: np.ndarray, threads: int) -> np.ndarray:
    """G = flat @ flat.T for small-integer entries, exact, thread-stable.

    float32 GEMMs on column chunks keep every partial sum below 2^24, so
    each chunk result is an exact integer; chunks accumulate in float64.
    """
    m, length = flat.shape
    g = np.zeros((m, m), dtype=np.float64)
    chunk = 1 << 22
    blocks = _row_blocks(m, threads)
    for lo in range(0, length, chunk):
        part = flat[:, lo : lo + chunk].astype(np.float32)

        def work(b, part=part):
            g[b[0] : b[1]] += (part[b[0] : b[1]] @ part.T).astype(np.float64)

        _run_blocks(work, blocks, threads)
    return g


def _tau_num_matrix(ranks: np.ndarray, threads: int) -> np.ndarray:
    """n(n-1) * tau for every column pair, as exact integers in float64."""
    return _exact_gram(_sign_flat(ranks), threads)


def _rank_gram(ranks: np.ndarray, threads: int) -> np.ndarray:
    n, m = ranks.shape
    rf = ranks.astype(np.float64)
    g = np.zeros((m, m), dtype=np.float64)
    blocks = _row_blocks(m, threads)

    def work(b):
        g[b[0] : b[1]] = rf.T[b[0] : b[1]] @ rf

    _run_blocks(work, blocks, threads)
    return g


def _upper(mat: np.ndarray, m: int) -> np.ndarray:
    iu = np.triu_indices(m, 1)
    return np.ascontiguousarray(mat[iu])


def all_pairs_spearman(ranks: RankMatrix, threads: int = 1) -> np.ndarray:
    """Spearman rho for all column pairs, lexicographic order."""
    n, m = ranks.n, ranks.m
    if n < 2:
        raise SampleTooSmall(f"spearman needs n >= 2, got {n}")
    g = _rank_gram(ranks.ranks, threads)
    rho = (12.0 * g - 3.0 * n * (n + 1) ** 2) / (n * (n * n - 1))
    return _upper(rho, m)


def _pairwise_loop(ranks: np.ndarray, fn, threads: int) -> np.ndarray:
    n, m = ranks.shape
    pairs = [(p, q) for p in range(m) for q in range(p + 1, m)]
    vals = np.empty(len(pairs), dtype=np.float64)

    def work(b):
        for idx in range(b[0], b[1]):
            p, q = pairs[idx]
            vals[idx] = fn(ranks[:, p], ranks[:, q])

    _run_blocks(work, _row_blocks(len(pairs), threads), threads)
    return vals


def _w_tau_all(ranks: np.ndarray, threads: int) -> np.ndarray:
    n, m = ranks.shape
    tnum = _tau_num_matrix(ranks, threads)  # 2T as exact ints
    t = tnum / 2.0
    r2 = np.zeros((m, m), dtype=np.float64)
    blocks = _row_blocks(n, threads)
    partials = {}

    def work(b):
        acc = np.zeros((m, m), dtype=np.float64)
        for i in range(b[0], b[1]):
            bi = np.sign(ranks[i][None, :] - ranks).T.astype(np.float32)  # (m, n)
            gi = (bi @ bi.T).astype(np.float64)
            acc += gi * gi
        partials[b] = acc

    _run_blocks(work, blocks, threads)
    for b in blocks:
        r2 += partials[b]
    num = t * t - r2 + math.comb(n, 2)
    return num / (math.comb(n, 2) * math.comb(n - 2, 2))


def all_pairs(ranks: RankMatrix, kernel: KernelId, kind: str = "U", threads: int = 1) -> PairStatistics:
    """Evaluate one pairwise statistic on every column pair.

    All paths are exact-integer, so the result does not depend on threads.
    """
    if kind not in ("U", "W"):
        raise ValueError(f"kind must be 'U' or 'W', got {kind!r}")
    n, m = ranks.n, ranks.m
    if m < 2:
        raise ValueError("need at least 2 columns")
    k = DEGREE[kernel]
    min_n = k if kind == "U" else 2 * k
    if n < min_n:
        raise SampleTooSmall(f"{kind}({kernel.key}) needs n >= {min_n}, got {n}")
    r = ranks.ranks

    if kind == "U":
        if kernel is KernelId.TAU:
            tau = _tau_num_matrix(r, threads) / (n * (n - 1))
            vals = _upper(tau, m)
        elif kernel is KernelId.RHO_HAT:
            tnum = _tau_num_matrix(r, threads)
            g = _rank_gram(r, threads)
            rh = (12.0 * g - 3.0 * n * (n + 1) ** 2 - 3.0 * tnum) / (n * (n - 1) * (n - 2))
            vals = _upper(rh, m)
        else:
            vals = _pairwise_loop(r, _FAST_U[kernel], threads)
    else:
        if kernel is KernelId.TAU:
            vals = _upper(_w_tau_all(r, threads), m)
        else:
            fn = lambda a, b: _w_engine(kernel, a, b, n)  # noqa: E731
            vals = _pairwise_loop(r, fn, threads)

    return PairStatistics(kernel=kernel, kind=kind, values=vals, n=n, m=m)
