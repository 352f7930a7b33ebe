"""Calibration: asymptotic p-values and Monte Carlo permutation nulls.

Rescaled S, T, and Z statistics are compared against the upper tail of the
standard normal.  S_MAX_TAU uses its extreme-value limit: with
t = (9n/4) s^2 - 4 log m + log log m, the null distribution of t converges
to F(t) = exp(-exp(-t/2) / sqrt(8 pi)).

The Monte Carlo path draws `reps` independent permutation datasets (each
column its own keyed Fisher-Yates stream, so results are reproducible and
thread-count independent), evaluates the raw statistic on each, and uses
the add-one estimator p = (1 + #{null >= observed}) / (reps + 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _rng
from .aggregate import (
    StatisticId,
    min_sample_size,
    raw_statistic,
    rescale,
    statistic_from_name,
)
from .errors import ConfigError, DomainError
from .ranks import RankMatrix


class Asymptotic:
    """Calibration method: limiting normal / Gumbel distribution."""

    def __repr__(self) -> str:
        return "Asymptotic"


ASYMPTOTIC = Asymptotic()


@dataclass(frozen=True)
class MonteCarlo:
    """Calibration method: permutation null with `reps` replicates."""

    reps: int
    seed: int


Method = Asymptotic | MonteCarlo

_SQRT_8PI = math.sqrt(8.0 * math.pi)


def normal_pvalue(z: float) -> float:
    """Upper-tail standard normal probability, abs error below 1e-10."""
    return 0.5 * math.erfc(z / math.sqrt(2.0))


def gumbel_max_pvalue(s_max: float, n: int, m: int) -> float:
    """Upper-tail p-value of the max-|tau| statistic under its Gumbel limit."""
    if m < 3:
        raise DomainError(f"gumbel calibration needs m >= 3, got {m}")
    if n < 2:
        raise DomainError(f"gumbel calibration needs n >= 2, got {n}")
    if not 0.0 <= s_max <= 1.0:
        raise DomainError(f"max-|tau| must lie in [0, 1], got {s_max}")
    t = 2.25 * n * s_max * s_max - 4.0 * math.log(m) + math.log(math.log(m))
    return -math.expm1(-math.exp(-t / 2.0) / _SQRT_8PI)


# --------------------------------------------------------------- null tables

@dataclass(frozen=True)
class NullTable:
    """Sorted raw-statistic values from the permutation null."""

    statistic: StatisticId
    n: int
    m: int
    reps: int
    seed: int
    values: np.ndarray  # float64, ascending

    def quantile(self, q: float) -> float:
        if not 0.0 <= q <= 1.0:
            raise DomainError(f"quantile level must be in [0, 1], got {q}")
        idx = min(self.reps - 1, max(0, math.ceil(q * self.reps) - 1))
        return float(self.values[idx])


def permutation_ranks(n: int, m: int, seed: int, replicate: int) -> RankMatrix:
    """Independent uniform rank columns, keyed by (seed, replicate, column)."""
    rm = np.empty((n, m), dtype=np.int64)
    for c in range(m):
        rm[:, c] = _rng.generator(seed, replicate, c).permutation(n) + 1
    return RankMatrix(rm)


def montecarlo_null(
    statistic: StatisticId,
    n: int,
    m: int,
    reps: int,
    seed: int,
    threads: int = 1,
) -> NullTable:
    """Evaluate the raw statistic on `reps` keyed permutation datasets."""
    if reps < 1:
        raise ConfigError(f"reps must be positive, got {reps}")
    if m < 2:
        raise ConfigError(f"need m >= 2 columns, got {m}")
    need = min_sample_size(statistic)
    if n < need:
        raise ConfigError(f"{statistic.name} needs n >= {need}, got {n}")
    vals = np.empty(reps, dtype=np.float64)

    def work(block):
        for r in range(block[0], block[1]):
            ranks = permutation_ranks(n, m, seed, r)
            vals[r] = raw_statistic(ranks, statistic, threads=1)

    from .pairwise import _row_blocks, _run_blocks

    _run_blocks(work, _row_blocks(reps, threads), threads)
    vals.sort()
    return NullTable(statistic=statistic, n=n, m=m, reps=reps, seed=seed, values=vals)


def cache_name(statistic: StatisticId, n: int, m: int, reps: int, seed: int, fmt: str = "csv") -> str:
    return f"null_{statistic.name}_n{n}_m{m}_r{reps}_s{seed}.{fmt}"


def save_null_table(table: NullTable, path) -> None:
    p = Path(path)
    if p.suffix == ".npz":
        np.savez(
            p,
            values=table.values,
            meta=np.array(
                [table.statistic.name, str(table.n), str(table.m), str(table.reps), str(table.seed)]
            ),
        )
        return
    with open(p, "w") as f:
        f.write("statistic,n,m,reps,seed\n")
        f.write(f"{table.statistic.name},{table.n},{table.m},{table.reps},{table.seed}\n")
        f.write("value\n")
        for v in table.values:
            f.write(repr(float(v)) + "\n")


def load_null_table(path) -> NullTable:
    p = Path(path)
    if p.suffix == ".npz":
        with np.load(p, allow_pickle=False) as z:
            meta = [str(x) for x in z["meta"]]
            values = np.asarray(z["values"], dtype=np.float64)
        name, n, m, reps, seed = meta
    else:
        lines = p.read_text().splitlines()
        if len(lines) < 3 or lines[0] != "statistic,n,m,reps,seed" or lines[2] != "value":
            raise ConfigError(f"not a null table file: {p}")
        name, n, m, reps, seed = lines[1].split(",")
        values = np.array([float(x) for x in lines[3:]], dtype=np.float64)
    table = NullTable(
        statistic=statistic_from_name(name),
        n=int(n),
        m=int(m),
        reps=int(reps),
        seed=int(seed),
        values=values,
    )
    if values.size != table.reps:
        raise ConfigError(f"null table {p} holds {values.size} values, expected {table.reps}")
    return table


def load_or_create_null_table(
    cache_dir,
    statistic: StatisticId,
    n: int,
    m: int,
    reps: int,
    seed: int,
    threads: int = 1,
    fmt: str = "csv",
) -> NullTable:
    d = Path(cache_dir)
    d.mkdir(parents=True, exist_ok=True)
    p = d / cache_name(statistic, n, m, reps, seed, fmt)
    if p.exists():
        return load_null_table(p)
    table = montecarlo_null(statistic, n, m, reps, seed, threads)
    save_null_table(table, p)
    return table


# ------------------------------------------------------------------ test run

@dataclass(frozen=True)
class TestResult:
    statistic: StatisticId
    raw: float
    rescaled: float
    p_value: float
    reject: bool
    n: int
    m: int
    method: str  # "asymptotic" or "montecarlo"
    alpha: float
    seed: int | None = None
    reps: int | None = None

    def to_dict(self) -> dict:
        return {
            "statistic": self.statistic.name,
            "raw": self.raw,
            "rescaled": self.rescaled,
            "p_value": self.p_value,
            "reject": self.reject,
            "n": self.n,
            "m": self.m,
            "method": self.method,
            "seed": self.seed,
        }


def run_test(
    ranks: RankMatrix,
    statistic: StatisticId,
    alpha: float = 0.05,
    method: Method = ASYMPTOTIC,
    threads: int = 1,
    null_table: NullTable | None = None,
) -> TestResult:
    """Full pipeline on a rank matrix: raw value, rescaling, p-value, decision."""
    if not 0.0 < alpha < 1.0:
        raise ConfigError(f"alpha must lie in (0, 1), got {alpha}")
    n, m = ranks.n, ranks.m
    raw = raw_statistic(ranks, statistic, threads=threads)
    scaled = rescale(statistic, raw, n, m)
    if isinstance(method, MonteCarlo):
        if method.reps < 1:
            raise ConfigError(f"reps must be positive, got {method.reps}")
        table = null_table
        if table is not None:
            if (table.statistic, table.n, table.m) != (statistic, n, m):
                raise ConfigError("provided null table does not match this test")
        else:
            table = montecarlo_null(statistic, n, m, method.reps, method.seed, threads)
        exceed = int(np.count_nonzero(table.values >= raw))
        p = (1 + exceed) / (table.reps + 1)
        return TestResult(
            statistic=statistic,
            raw=raw,
            rescaled=scaled.rescaled,
            p_value=p,
            reject=p <= alpha,
            n=n,
            m=m,
            method="montecarlo",
            alpha=alpha,
            seed=method.seed,
            reps=table.reps,
        )
    if scaled.limit == "gumbel":
        p = gumbel_max_pvalue(raw, n, m)
    else:
        p = normal_pvalue(scaled.rescaled)
    return TestResult(
        statistic=statistic,
        raw=raw,
        rescaled=scaled.rescaled,
        p_value=p,
        reject=p <= alpha,
        n=n,
        m=m,
        method="asymptotic",
        alpha=alpha,
    )
