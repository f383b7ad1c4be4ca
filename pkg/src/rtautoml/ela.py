"""Exploratory landscape features over sampled clustering landscapes.

Five families: objective-distribution shape, linear/quadratic meta-models,
dispersion of the best-quantile subsets, information content of the fitness
sequence, and nearest-better-neighbour statistics. Degenerate quantities are
NaN; the extractor substitutes the sentinel and records validity.
"""
from __future__ import annotations

import math

import numpy as np

from .distances import pairwise_distances
from .landscape import LandscapeSample

DISPERSION_QUANTILES = (0.02, 0.05, 0.10, 0.25)
IC_EPS_GRID_SIZE = 32
IC_EPS_FLOOR = 1e-6


def _need(sample: LandscapeSample, n_min: int) -> tuple[np.ndarray, np.ndarray]:
    if len(sample) < n_min:
        raise ValueError(f"need at least {n_min} landscape samples")
    return sample.xs, sample.ys


def ela_y_distribution(sample: LandscapeSample) -> dict[str, float]:
    """Moment shape of the objective values plus a KDE peak count."""
    _, y = _need(sample, 3)
    if np.ptp(y) == 0:
        return {"y_skewness": 0.0, "y_kurtosis": 0.0, "y_n_peaks": 1.0}
    c = y - y.mean()
    m2 = float(np.mean(c ** 2))
    m3 = float(np.mean(c ** 3))
    m4 = float(np.mean(c ** 4))
    return {
        "y_skewness": m3 / m2 ** 1.5,
        "y_kurtosis": m4 / m2 ** 2 - 3.0,
        "y_n_peaks": float(_kde_peak_count(y)),
    }


def _kde_peak_count(y: np.ndarray) -> int:
    """Local maxima of a Gaussian KDE (Silverman bandwidth) on a 512-point grid."""
    n = len(y)
    sd = float(y.std())
    q75, q25 = np.percentile(y, [75, 25])
    scale = min(sd, (q75 - q25) / 1.34) or sd  # zero IQR falls back to the sd
    bw = 0.9 * scale * n ** (-0.2)
    if bw <= 0:
        return 1
    grid = np.linspace(y.min() - 3 * bw, y.max() + 3 * bw, 512)
    dens = np.exp(-0.5 * ((grid[:, None] - y[None, :]) / bw) ** 2).sum(axis=1)
    peaks = int(np.count_nonzero((dens[1:-1] > dens[:-2]) & (dens[1:-1] >= dens[2:])))
    return max(peaks, 1)


def ela_meta_model(sample: LandscapeSample) -> dict[str, float]:
    """Adjusted R2 and slope extremes of linear and per-dimension quadratic fits.

    The quadratic basis is the linear one plus squared terms per dimension (no
    cross terms). Rank-deficient systems take the minimum-norm solution and
    are flagged; a constant objective gives adjusted R2 = 0 by convention and
    an exhausted degrees-of-freedom denominator gives NaN.
    """
    X, y = _need(sample, 3)
    n, d = X.shape
    if n < d + 2:
        raise ValueError("need n > d + 1 samples for the linear fit")
    out: dict[str, float] = {}
    ss_tot = float(((y - y.mean()) ** 2).sum())
    for tag, basis in (("lin", X), ("quad", np.hstack([X, X ** 2]))):
        A = np.column_stack([np.ones(n), basis])
        p = A.shape[1] - 1
        coef, _, rank, _ = np.linalg.lstsq(A, y, rcond=None)
        resid = y - A @ coef
        ss_res = float(resid @ resid)
        if ss_tot == 0.0:
            r2_adj = 0.0
        elif n - p - 1 <= 0:
            r2_adj = math.nan
        else:
            r2 = 1.0 - ss_res / ss_tot
            r2_adj = 1.0 - (1.0 - r2) * (n - 1) / (n - p - 1)
        slopes = coef[1:]
        out[f"mm_r2_{tag}_adj"] = float(r2_adj)
        out[f"mm_{tag}_coef_min"] = float(slopes.min())
        out[f"mm_{tag}_coef_max"] = float(slopes.max())
        out[f"mm_{tag}_rank_deficient"] = bool(rank < A.shape[1])
    return out


def ela_dispersion(sample: LandscapeSample) -> dict[str, float]:
    """Mean pairwise distance of best-quantile subsets against the full sample.

    Subsets are threshold based (y >= quantile(y, 1 - q)) so tied objective
    values keep all their points; a subset below two points gives NaN, and a
    fully coincident sample gives ratio 1 / difference 0.
    """
    X, y = _need(sample, 3)
    n = len(y)
    D = pairwise_distances(X, X, "euclidean")
    iu = np.triu_indices(n, k=1)
    all_mean = float(D[iu].mean())
    out: dict[str, float] = {}
    for q in DISPERSION_QUANTILES:
        key = f"{int(round(q * 100)):02d}"
        sel = np.flatnonzero(y >= np.quantile(y, 1.0 - q))
        if len(sel) < 2:
            out[f"disp_ratio_{key}"] = math.nan
            out[f"disp_diff_{key}"] = math.nan
            continue
        sub = D[np.ix_(sel, sel)]
        sub_mean = float(sub[np.triu_indices(len(sel), k=1)].mean())
        out[f"disp_ratio_{key}"] = sub_mean / all_mean if all_mean > 0 else 1.0
        out[f"disp_diff_{key}"] = sub_mean - all_mean
    return out


def nearest_neighbour_tour(xs: np.ndarray) -> np.ndarray:
    """Visit order: start at row 0, repeatedly hop to the nearest unvisited row."""
    D = pairwise_distances(xs, xs, "euclidean")
    n = len(xs)
    visited = np.zeros(n, dtype=bool)
    order = np.empty(n, dtype=int)
    cur = 0
    for i in range(n):
        order[i] = cur
        visited[cur] = True
        if i == n - 1:
            break
        row = np.where(visited, np.inf, D[cur])
        cur = int(np.argmin(row))  # ties -> lowest index
    return order


def _symbols(deltas: np.ndarray, eps: float) -> np.ndarray:
    s = np.zeros(len(deltas), dtype=np.int8)
    s[deltas > eps] = 1
    s[deltas < -eps] = -1
    return s


def _pair_entropy(symbols: np.ndarray) -> float:
    """H = -sum over ordered unequal symbol pairs of p * log6(p)."""
    if len(symbols) < 2:
        return 0.0
    a, b = symbols[:-1], symbols[1:]
    keep = a != b
    if not np.any(keep):
        return 0.0
    pair = (a[keep].astype(int) + 1) * 3 + (b[keep].astype(int) + 1)
    counts = np.bincount(pair, minlength=9)
    probs = counts[counts > 0] / (len(symbols) - 1)
    return float(-(probs * (np.log(probs) / math.log(6.0))).sum())


def _partial_information(symbols: np.ndarray) -> float:
    """Length of the zero-free, repeat-collapsed sequence over the full length."""
    nz = symbols[symbols != 0]
    if len(nz) == 0:
        return 0.0
    return (1 + int(np.count_nonzero(nz[1:] != nz[:-1]))) / len(symbols)


def ela_information_content(sample: LandscapeSample) -> dict[str, float]:
    """Entropy of the sign-symbol sequence along a nearest-neighbour tour.

    Symbols come from raw successive objective differences under tolerance
    eps, over a grid of {0} plus 32 log-spaced values in [1e-6, range(Y)].
    Reported: max entropy (h_max), log10 of the smallest grid eps with an
    all-zero sequence (settling sensitivity), log10 of max |delta| (the eps
    that guarantees a settled sequence), log10 of the largest eps keeping
    M(eps) above half the initial partial information, and M(0) itself.
    """
    _, y = _need(sample, 3)
    rng_y = float(np.ptp(y))
    if rng_y == 0:
        return {"ic_h_max": 0.0, "ic_settling_sensitivity": math.log10(IC_EPS_FLOOR),
                "ic_eps_s": math.log10(IC_EPS_FLOOR), "ic_m0_ratio": math.nan,
                "ic_initial_partial_info": 0.0}
    order = nearest_neighbour_tour(sample.xs)
    deltas = np.diff(y[order])
    hi_exp = max(math.log10(rng_y), math.log10(IC_EPS_FLOOR))
    grid = np.concatenate([[0.0], np.logspace(math.log10(IC_EPS_FLOOR), hi_exp,
                                              IC_EPS_GRID_SIZE)])
    hs: list[float] = []
    ms: list[float] = []
    for eps in grid:
        s = _symbols(deltas, eps)
        hs.append(_pair_entropy(s))
        ms.append(_partial_information(s))
    abs_max = float(np.abs(deltas).max())
    settle = next((e for e in grid if abs_max <= e), abs_max)
    m0 = ms[0]
    if m0 == 0:
        m0_ratio = math.nan
    else:
        kept = [e for e, mv in zip(grid, ms) if mv > 0.5 * m0]
        m0_ratio = math.log10(max(max(kept), IC_EPS_FLOOR)) if kept else math.nan
    return {
        "ic_h_max": float(max(hs)),
        "ic_settling_sensitivity": math.log10(max(settle, IC_EPS_FLOOR)),
        "ic_eps_s": math.log10(max(abs_max, IC_EPS_FLOOR)),
        "ic_m0_ratio": m0_ratio,
        "ic_initial_partial_info": float(m0),
    }


def ela_nbc(sample: LandscapeSample) -> dict[str, float]:
    """Nearest against nearest-better neighbour statistics (maximisation).

    Points with no strictly better neighbour take the maximum pairwise
    distance as their nearest-better distance and emit no graph edge.
    """
    X, y = _need(sample, 3)
    n = len(y)
    keys = ("nbc_sd_ratio", "nbc_mean_ratio", "nbc_dist_correlation", "nbc_cv_ratio",
            "nbc_indegree_cv")
    if np.ptp(y) == 0:
        return {k: math.nan for k in keys}
    D = pairwise_distances(X, X, "euclidean")
    np.fill_diagonal(D, np.inf)
    nn = D.min(axis=1)
    dmax = float(D[np.isfinite(D)].max())
    nb = np.empty(n)
    indeg = np.zeros(n)
    for i in range(n):
        row = np.where(y > y[i], D[i], np.inf)
        j = int(np.argmin(row))
        if math.isinf(row[j]):
            nb[i] = dmax
        else:
            nb[i] = row[j]
            indeg[j] += 1.0
    out = dict.fromkeys(keys, math.nan)
    with np.errstate(all="ignore"):
        if nn.std() > 0:
            out["nbc_sd_ratio"] = float(nb.std() / nn.std())
        if nn.mean() > 0:
            out["nbc_mean_ratio"] = float(nb.mean() / nn.mean())
            ratios = nb / nn
            if ratios.mean() > 0:
                out["nbc_cv_ratio"] = float(ratios.std() / ratios.mean())
        if nn.std() > 0 and nb.std() > 0:
            out["nbc_dist_correlation"] = float(np.corrcoef(nn, nb)[0, 1])
        if indeg.mean() > 0:
            out["nbc_indegree_cv"] = float(indeg.std() / indeg.mean())
    return {k: (v if math.isfinite(v) else math.nan) for k, v in out.items()}
