"""Aggregate test statistics over all column pairs, and their rescaling.

Three families aggregate a pairwise statistic U_pq or W_pq over the
m(m-1)/2 pairs:

  S   sum of squared U-statistics, centered at its exact null mean
  T   sum of W-statistics (exactly unbiased for the squared signal)
  Z   plain sum of U-statistics (one-sided, positive association)

plus two specials: S_RHO_S, the centered sum of squared classical Spearman
correlations, and S_MAX_TAU, the maximum absolute Kendall tau.

rescale() multiplies a raw statistic by the factor that makes it converge
to a standard normal (or, for S_MAX_TAU, leaves it on the Gumbel scale).
The factors depend on the kernel degeneracy order d and the stamped
constants zeta_d and eta.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import ConfigError, SampleTooSmall, UnknownConstant
from .kernels import DEGREE, KernelId, mu_h_exact
from .pairwise import PairStatistics, all_pairs, all_pairs_spearman
from .ranks import RankMatrix


class StatKind(enum.Enum):
    S = "S"
    T = "T"
    Z = "Z"
    S_RHO_S = "S_RHO_S"
    S_MAX_TAU = "S_MAX_TAU"


@dataclass(frozen=True)
class StatisticId:
    kind: StatKind
    kernel: KernelId | None = None

    def __post_init__(self):
        needs_kernel = self.kind in (StatKind.S, StatKind.T, StatKind.Z)
        if needs_kernel and self.kernel is None:
            raise ConfigError(f"{self.kind.value} statistic needs a kernel")
        if not needs_kernel and self.kernel is not None:
            raise ConfigError(f"{self.kind.value} statistic takes no kernel")

    @property
    def name(self) -> str:
        for name, sid in NAMED_STATISTICS.items():
            if sid == self:
                return name
        kern = self.kernel.key if self.kernel else ""
        return f"{self.kind.value.lower()}_{kern}"

    def __str__(self) -> str:
        return self.name


NAMED_STATISTICS: dict[str, StatisticId] = {
    "s_tau": StatisticId(StatKind.S, KernelId.TAU),
    "t_tau": StatisticId(StatKind.T, KernelId.TAU),
    "z_tau": StatisticId(StatKind.Z, KernelId.TAU),
    "s_rho_hat": StatisticId(StatKind.S, KernelId.RHO_HAT),
    "t_rho_hat": StatisticId(StatKind.T, KernelId.RHO_HAT),
    "z_rho_hat": StatisticId(StatKind.Z, KernelId.RHO_HAT),
    "s_d": StatisticId(StatKind.S, KernelId.HOEFF_D),
    "z_d": StatisticId(StatKind.Z, KernelId.HOEFF_D),
    "s_tstar": StatisticId(StatKind.S, KernelId.T_STAR),
    "t_tstar": StatisticId(StatKind.T, KernelId.T_STAR),
    "z_tstar": StatisticId(StatKind.Z, KernelId.T_STAR),
    "s_rho_s": StatisticId(StatKind.S_RHO_S),
    "s_max_tau": StatisticId(StatKind.S_MAX_TAU),
}


def statistic_from_name(name: str) -> StatisticId:
    try:
        return NAMED_STATISTICS[name]
    except KeyError:
        known = ", ".join(sorted(NAMED_STATISTICS))
        raise ConfigError(f"unknown statistic {name!r}; known: {known}") from None


def min_sample_size(statistic: StatisticId) -> int:
    if statistic.kind in (StatKind.S, StatKind.T):
        return 2 * DEGREE[statistic.kernel]
    if statistic.kind is StatKind.Z:
        return DEGREE[statistic.kernel]
    return 2


# ------------------------------------------------------------- raw statistics

def _check_pairs(pairs: PairStatistics, kind: str, what: str) -> None:
    if pairs.kind != kind:
        raise ValueError(f"{what} needs {kind}-statistics, got {pairs.kind}")
    npairs = pairs.m * (pairs.m - 1) // 2
    if pairs.values.shape != (npairs,):
        raise ValueError(f"{what}: expected {npairs} pair values")


def s_stat(pairs: PairStatistics, n: int, m: int) -> float:
    """Sum of squared U-statistics minus its exact null mean."""
    _check_pairs(pairs, "U", "s_stat")
    if (pairs.n, pairs.m) != (n, m):
        raise ValueError(f"pairs are for (n={pairs.n}, m={pairs.m}), not ({n}, {m})")
    k = DEGREE[pairs.kernel]
    if n < 2 * k:
        raise SampleTooSmall(f"s_stat({pairs.kernel.key}) needs n >= {2 * k}, got {n}")
    center = math.comb(m, 2) * mu_h_exact(pairs.kernel, n)
    return math.fsum(float(v) * float(v) for v in pairs.values) - float(center)


def t_stat(pairs: PairStatistics) -> float:
    """Sum of W-statistics over all pairs."""
    _check_pairs(pairs, "W", "t_stat")
    return math.fsum(float(v) for v in pairs.values)


def z_stat(pairs: PairStatistics) -> float:
    """Plain sum of U-statistics (sensitive to positive association only)."""
    _check_pairs(pairs, "U", "z_stat")
    return math.fsum(float(v) for v in pairs.values)


def s_rho_s(ranks: RankMatrix, threads: int = 1) -> float:
    """Centered sum of squared Spearman correlations."""
    n, m = ranks.n, ranks.m
    vals = all_pairs_spearman(ranks, threads)
    center = Fraction(math.comb(m, 2), n - 1)
    return math.fsum(float(v) * float(v) for v in vals) - float(center)


def s_max_tau(pairs: PairStatistics) -> float:
    """Maximum absolute Kendall tau over all pairs."""
    _check_pairs(pairs, "U", "s_max_tau")
    if pairs.kernel is not KernelId.TAU:
        raise ValueError("s_max_tau is defined on Kendall tau pairs")
    return float(np.abs(pairs.values).max())


def pair_requirement(statistic: StatisticId) -> tuple[KernelId, str] | None:
    """Which all_pairs result a statistic consumes (None: works on ranks)."""
    if statistic.kind is StatKind.S_RHO_S:
        return None
    if statistic.kind is StatKind.S_MAX_TAU:
        return (KernelId.TAU, "U")
    if statistic.kind is StatKind.T:
        return (statistic.kernel, "W")
    return (statistic.kernel, "U")


def raw_from_pairs(statistic: StatisticId, pairs: PairStatistics) -> float:
    if statistic.kind is StatKind.S:
        return s_stat(pairs, pairs.n, pairs.m)
    if statistic.kind is StatKind.T:
        return t_stat(pairs)
    if statistic.kind is StatKind.Z:
        return z_stat(pairs)
    if statistic.kind is StatKind.S_MAX_TAU:
        return s_max_tau(pairs)
    raise ValueError(f"{statistic} does not consume pair statistics")


def raw_statistic(ranks: RankMatrix, statistic: StatisticId, threads: int = 1) -> float:
    """Compute the raw (unrescaled) aggregate statistic on a rank matrix."""
    n = ranks.n
    need = min_sample_size(statistic)
    if n < need:
        raise SampleTooSmall(f"{statistic.name} needs n >= {need}, got {n}")
    req = pair_requirement(statistic)
    if req is None:
        return s_rho_s(ranks, threads)
    kernel, kind = req
    pairs = all_pairs(ranks, kernel, kind, threads)
    return raw_from_pairs(statistic, pairs)


# ----------------------------------------------------------------- rescaling

@dataclass(frozen=True)
class RescaledStatistic:
    statistic: StatisticId
    raw: float
    rescaled: float
    n: int
    m: int
    limit: str  # "normal" or "gumbel"


def limit_family(statistic: StatisticId) -> str:
    return "gumbel" if statistic.kind is StatKind.S_MAX_TAU else "normal"


def _rescale_factor(statistic: StatisticId, n: int, m: int) -> float:
    from . import constants

    kind = statistic.kind
    if kind is StatKind.S_RHO_S:
        return n / m
    if kind is StatKind.S_MAX_TAU:
        return 1.0
    kc = constants.get().kernel(statistic.kernel)
    k = kc.k
    if kc.d == 1:
        zeta1 = kc.zetas[1]
        if zeta1 == 0:
            raise UnknownConstant(f"zeta_1 vanishes for {statistic.kernel.key}")
        if kind in (StatKind.S, StatKind.T):
            return float(Fraction(n, k * k * m) / zeta1)
        return math.sqrt(2 * n) / (k * m * math.sqrt(float(zeta1)))
    if kc.d == 2:
        zeta2 = kc.zetas[2]
        ck2 = math.comb(k, 2)
        if kind is StatKind.Z:
            return n / (ck2 * m * math.sqrt(float(zeta2)))
        if kc.eta is None:
            raise UnknownConstant(f"eta not stamped for {statistic.kernel.key}")
        mult = 6 if kind is StatKind.S else 2
        radical = math.sqrt(float(zeta2 * zeta2 + mult * kc.eta))
        return n * n / (ck2 * ck2 * 2 * m * radical)
    raise UnknownConstant(f"no rescaling for degeneracy order {kc.d}")


def rescale(statistic: StatisticId, raw: float, n: int, m: int) -> RescaledStatistic:
    """Scale a raw statistic onto its limiting (normal or Gumbel) scale."""
    if n < 2 or m < 2:
        raise ValueError("need n >= 2 and m >= 2")
    factor = _rescale_factor(statistic, n, m)
    return RescaledStatistic(
        statistic=statistic,
        raw=raw,
        rescaled=raw * factor,
        n=n,
        m=m,
        limit=limit_family(statistic),
    )
