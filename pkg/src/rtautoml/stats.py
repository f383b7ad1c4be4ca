"""Mann-Whitney U testing and win-count ranking of approaches.

Small pooled samples get an exact permutation p-value computed by enumerating
every assignment of pooled midranks, which handles ties without falling back
to an approximation. Larger samples use the normal approximation with tie and
continuity corrections.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from math import comb
from typing import Mapping, Sequence

import numpy as np
from scipy.special import ndtr
from scipy.stats import rankdata

ALTERNATIVES = ("less", "greater", "two-sided")
EXACT_LIMIT = 12


@dataclass(frozen=True)
class MwuResult:
    statistic: float
    pvalue: float
    exact: bool

    def __post_init__(self):
        if not 0.0 <= self.pvalue <= 1.0:
            raise ValueError("p-value outside [0, 1]")


def _validate_sample(x, name: str) -> np.ndarray:
    arr = np.asarray(x, dtype=float).ravel()
    if arr.size == 0:
        raise ValueError(f"sample {name} is empty")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"sample {name} contains non-finite values")
    return arr


def mann_whitney_u(a, b, alternative: str = "two-sided") -> MwuResult:
    """Mann-Whitney U test of sample a against sample b.

    The statistic is U_a; alternative "less" asks whether a is stochastically
    smaller than b. Pooled sizes up to EXACT_LIMIT are enumerated exactly over
    the midrank multiset (so tied pools stay exact); beyond that a normal
    approximation with tie correction and a 0.5 continuity correction applies.
    """
    if alternative not in ALTERNATIVES:
        raise ValueError(f"alternative must be one of {ALTERNATIVES}")
    xa = _validate_sample(a, "a")
    xb = _validate_sample(b, "b")
    n1, n2 = len(xa), len(xb)
    n = n1 + n2
    ranks = rankdata(np.concatenate([xa, xb]))
    rank_sum_a = float(ranks[:n1].sum())
    u_a = rank_sum_a - n1 * (n1 + 1) / 2.0
    if n <= EXACT_LIMIT:
        p_less, p_greater = _exact_tail_probs(ranks, n1, rank_sum_a)
        exact = True
    else:
        p_less, p_greater = _normal_tail_probs(ranks, n1, n2, u_a)
        exact = False
    if alternative == "less":
        p = p_less
    elif alternative == "greater":
        p = p_greater
    else:
        p = min(1.0, 2.0 * min(p_less, p_greater))
    return MwuResult(statistic=u_a, pvalue=min(1.0, p), exact=exact)


def _exact_tail_probs(ranks: np.ndarray, n1: int,
                      observed: float) -> tuple[float, float]:
    # Midranks are multiples of 0.5, so sums compare exactly in floats.
    n = len(ranks)
    total = comb(n, n1)
    count_le = 0
    count_ge = 0
    for idx in combinations(range(n), n1):
        s = float(ranks[list(idx)].sum())
        if s <= observed:
            count_le += 1
        if s >= observed:
            count_ge += 1
    return count_le / total, count_ge / total


def _normal_tail_probs(ranks: np.ndarray, n1: int, n2: int,
                       u_a: float) -> tuple[float, float]:
    n = n1 + n2
    _, counts = np.unique(ranks, return_counts=True)
    tie_term = float((counts.astype(float) ** 3 - counts).sum())
    var = n1 * n2 / 12.0 * ((n + 1) - tie_term / (n * (n - 1)))
    if var <= 0:
        return 1.0, 1.0
    sigma = np.sqrt(var)
    mu = n1 * n2 / 2.0
    p_less = float(ndtr((u_a - mu + 0.5) / sigma))
    p_greater = float(ndtr(-(u_a - mu - 0.5) / sigma))
    return p_less, p_greater


@dataclass(frozen=True)
class ApproachRanking:
    wins: dict[str, int]
    ranks: dict[str, int]
    average_rank: dict[str, float]
    normalized_rank: dict[str, int]


def _dense_rank(values: Mapping[str, float], descending: bool) -> dict[str, int]:
    levels = sorted(set(values.values()), reverse=descending)
    position = {v: i + 1 for i, v in enumerate(levels)}
    return {k: position[v] for k, v in values.items()}


def rank_approaches(samples, alpha: float = 0.05) -> ApproachRanking:
    """Rank approaches by pairwise Mann-Whitney wins.

    samples is a mapping approach -> final-accuracy sample, or a sequence of
    such mappings (one per dataset). Within each mapping, a pair awards a win
    to the side a one-tailed test finds greater, but only when the two-sided
    test rejects equivalence at alpha. Ranks are the dense rank of total win
    counts, descending; the normalized rank densely re-ranks the per-dataset
    average ranks.
    """
    if isinstance(samples, Mapping):
        tables: list[Mapping[str, Sequence[float]]] = [samples]
    else:
        tables = list(samples)
    if not tables:
        raise ValueError("no samples given")
    names = sorted(tables[0])
    if len(names) < 2:
        raise ValueError("ranking needs at least two approaches")
    for table in tables:
        if sorted(table) != names:
            raise ValueError("every table must cover the same approaches")
    total_wins = {a: 0 for a in names}
    per_table_ranks: list[dict[str, int]] = []
    for table in tables:
        wins = {a: 0 for a in names}
        for a, b in combinations(names, 2):
            two = mann_whitney_u(table[a], table[b], "two-sided").pvalue
            if two >= alpha:
                continue
            if mann_whitney_u(table[a], table[b], "greater").pvalue < alpha:
                wins[a] += 1
            elif mann_whitney_u(table[a], table[b], "less").pvalue < alpha:
                wins[b] += 1
        per_table_ranks.append(_dense_rank({a: float(w) for a, w in wins.items()},
                                           descending=True))
        for a in names:
            total_wins[a] += wins[a]
    average_rank = {a: float(np.mean([r[a] for r in per_table_ranks]))
                    for a in names}
    return ApproachRanking(
        wins=total_wins,
        ranks=_dense_rank({a: float(w) for a, w in total_wins.items()},
                          descending=True),
        average_rank=average_rank,
        normalized_rank=_dense_rank(average_rank, descending=False),
    )
