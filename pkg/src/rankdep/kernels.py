"""Symmetric rank-correlation kernels and their exact null moments.

Four kernels are supported, identified by KernelId:

  TAU      degree 2   sign concordance of a pair
  RHO_HAT  degree 3   symmetrized grade-correlation kernel
  T_STAR   degree 4   concordance-of-quadruples kernel
  HOEFF_D  degree 5   joint-vs-product distribution distance kernel

Each kernel depends on its k points only through the relative order of the
x-coordinates and of the y-coordinates, so it is tabulated once per kernel:
with x-ranks fixed ascending, the kernel value is a function of the pattern
(within-tuple ranks) of the y-coordinates.  All table values are exact
rationals with a small integer scaling (1, 1, 3, 60), which lets every
downstream statistic be computed in exact integer arithmetic.

mu_h(kernel, n) is the exact null second moment E[U^2] of the corresponding
pairwise U-statistic when the two rank columns are independent uniform
permutations of 1..n.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .errors import SampleTooSmall, TiesPresent, WrongArity

_FACT = [math.factorial(i) for i in range(13)]


class KernelId(enum.Enum):
    TAU = "tau"
    RHO_HAT = "rho_hat"
    T_STAR = "tstar"
    HOEFF_D = "hoeffd"

    @property
    def key(self) -> str:
        return self.value


DEGREE = {KernelId.TAU: 2, KernelId.RHO_HAT: 3, KernelId.T_STAR: 4, KernelId.HOEFF_D: 5}

# integer scaling that clears every denominator in the pattern table
SCALE = {KernelId.TAU: 1, KernelId.RHO_HAT: 1, KernelId.T_STAR: 3, KernelId.HOEFF_D: 60}


def _sgn(x) -> int:
    return (x > 0) - (x < 0)


def _h_tau(rx, ry) -> Fraction:
    return Fraction(_sgn(rx[0] - rx[1]) * _sgn(ry[0] - ry[1]))


def _h_rho_hat(rx, ry) -> Fraction:
    s = 0
    for p in itertools.permutations(range(3)):
        s += _sgn(rx[p[0]] - rx[p[1]]) * _sgn(ry[p[0]] - ry[p[2]])
    return Fraction(s, 2)


def _phi_d(r) -> int:
    return ((r[0] >= r[1]) - (r[0] >= r[2])) * ((r[0] >= r[3]) - (r[0] >= r[4]))


def _h_hoeff_d(rx, ry) -> Fraction:
    s = 0
    for p in itertools.permutations(range(5)):
        s += _phi_d([rx[i] for i in p]) * _phi_d([ry[i] for i in p])
    return Fraction(s, 4 * 120)


def _phi_t(r) -> int:
    a = max(r[0], r[2]) < min(r[1], r[3])
    b = min(r[0], r[2]) > max(r[1], r[3])
    c = max(r[0], r[1]) < min(r[2], r[3])
    d = min(r[0], r[1]) > max(r[2], r[3])
    return a + b - c - d


def _h_t_star(rx, ry) -> Fraction:
    s = 0
    for p in itertools.permutations(range(4)):
        s += _phi_t([rx[i] for i in p]) * _phi_t([ry[i] for i in p])
    return Fraction(s, 24)


_DEFINITION = {
    KernelId.TAU: _h_tau,
    KernelId.RHO_HAT: _h_rho_hat,
    KernelId.T_STAR: _h_t_star,
    KernelId.HOEFF_D: _h_hoeff_d,
}


def pattern(values) -> tuple[int, ...]:
    """Within-tuple ranks (1-based) of a sequence of distinct values."""
    order = sorted(range(len(values)), key=lambda i: values[i])
    r = [0] * len(values)
    for rank0, i in enumerate(order):
        r[i] = rank0 + 1
    return tuple(r)


def perm_code(p) -> int:
    """Lexicographic index (Lehmer code) of a 1-based pattern."""
    k = len(p)
    code = 0
    for i in range(k):
        below = sum(1 for j in range(i + 1, k) if p[j] < p[i])
        code += below * _FACT[k - 1 - i]
    return code


@lru_cache(maxsize=None)
def table(kernel: KernelId) -> dict[tuple[int, ...], Fraction]:
    """y-pattern (x fixed ascending) -> exact kernel value."""
    k = DEGREE[kernel]
    h = _DEFINITION[kernel]
    xid = tuple(range(1, k + 1))
    return {p: h(xid, p) for p in itertools.permutations(xid)}


@lru_cache(maxsize=None)
def scaled_table(kernel: KernelId) -> np.ndarray:
    """int64 vector of SCALE[kernel] * h, indexed by perm_code of the pattern."""
    k = DEGREE[kernel]
    s = SCALE[kernel]
    vec = np.zeros(_FACT[k], dtype=np.int64)
    for p, v in table(kernel).items():
        sv = v * s
        if sv.denominator != 1:
            raise AssertionError(f"scaling {s} does not clear {v} for {kernel}")
        vec[perm_code(p)] = int(sv)
    return vec


def eval_kernel(kernel: KernelId, points) -> float:
    """Kernel value on k (x, y) points, using only within-tuple ranks."""
    k = DEGREE[kernel]
    pts = list(points)
    if len(pts) != k:
        raise WrongArity(f"{kernel.key} kernel takes {k} points, got {len(pts)}")
    xs = [p[0] for p in pts]
    ys = [p[1] for p in pts]
    if len(set(xs)) != k:
        raise TiesPresent(0, float(next(v for v in xs if xs.count(v) > 1)))
    if len(set(ys)) != k:
        raise TiesPresent(1, float(next(v for v in ys if ys.count(v) > 1)))
    order = sorted(range(k), key=lambda i: xs[i])
    key = pattern([ys[i] for i in order])
    return float(table(kernel)[key])


# Exact E[U^2] under the permutation null as prefactor * num(n) / den(n).
# The rational prefactors live in the stamped constants file; the polynomial
# shapes below are fixed by the kernel degrees.
_MU_POLY = {
    KernelId.TAU: (lambda n: 2 * n + 5, lambda n: n * (n - 1)),
    KernelId.RHO_HAT: (lambda n: n * n - 3, lambda n: n * (n - 1) * (n - 2)),
    KernelId.T_STAR: (
        lambda n: 3 * n * n + 5 * n - 18,
        lambda n: n * (n - 1) * (n - 2) * (n - 3),
    ),
    KernelId.HOEFF_D: (
        lambda n: n * n + 5 * n - 32,
        lambda n: n * (n - 1) * (n - 3) * (n - 4),
    ),
}


def mu_h_exact(kernel: KernelId, n: int) -> Fraction:
    """Exact rational E[U^2] for sample size n (valid for all n >= degree)."""
    k = DEGREE[kernel]
    if n < k:
        raise SampleTooSmall(f"mu_h({kernel.key}) needs n >= {k}, got {n}")
    from . import constants

    pref = constants.get().kernel(kernel).mu_prefactor
    num, den = _MU_POLY[kernel]
    return pref * Fraction(num(n), den(n))


def mu_h(kernel: KernelId, n: int) -> float:
    return float(mu_h_exact(kernel, n))


@dataclass(frozen=True)
class KernelSpec:
    """Degree, degeneracy order, and limiting constants of one kernel."""

    kernel: KernelId
    k: int
    d: int
    zeta_d: Fraction
    eta: Fraction | None


def kernel_spec(kernel: KernelId) -> KernelSpec:
    from . import constants

    c = constants.get().kernel(kernel)
    return KernelSpec(kernel=kernel, k=c.k, d=c.d, zeta_d=c.zetas[c.d], eta=c.eta)
