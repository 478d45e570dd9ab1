"""Corpus-level statistics: CCDF curves, maximum-likelihood distribution
fitting with NLLF ranking, Kolmogorov-Smirnov goodness of fit, per-sample
chi-squared feature ranking, and label-group summaries.

Fitting conventions
-------------------
* exponential: two parameters. Location MLE is the sample minimum and the
  scale MLE is (mean - min); pdf(x) = exp(-(x-loc)/scale)/scale for x >= loc.
* normal: mean and population standard deviation.
* lognormal: location fixed at 0; shape = std of log-values, scale =
  exp(mean of log-values). Requires strictly positive samples.
* gamma: location fixed at 0 (a shift below the sample minimum can be
  requested for positive samples); shape solved by Newton iteration on the
  profile log-likelihood, scale = mean/shape. Requires positive samples.

The K-S p-value uses the asymptotic Kolmogorov series with the usual
effective-sample-size correction and is computed after estimating
parameters from the same data, i.e. no Lilliefors adjustment is applied.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import special

from .corpus import Corpus, Label
from .topo import MetricSeries


MIN_FIT_SAMPLES = 8
FAMILIES = ("exponential", "gamma", "lognormal", "normal")


class FitError(ValueError):
    """A distribution fit could not be performed on this sample."""


class InsufficientSampleError(FitError):
    pass


class DegenerateSampleError(FitError):
    """Zero spread (or otherwise collapsed) sample for a family that needs it."""


# ---------------------------------------------------------------------------
# CCDF
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CcdfCurve:
    """Empirical survival function: P(X > x) at each distinct sample value."""
    points: tuple[tuple[float, float], ...]


def ccdf(values: Sequence[float]) -> CcdfCurve:
    """Survival fraction strictly above each distinct sorted value."""
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        raise ValueError("ccdf of an empty sample")
    if not np.all(np.isfinite(arr)):
        raise ValueError("ccdf requires finite values")
    xs, counts = np.unique(arr, return_counts=True)
    n = arr.size
    above = n - np.cumsum(counts)
    return CcdfCurve(points=tuple((float(x), float(a) / n) for x, a in zip(xs, above)))


# ---------------------------------------------------------------------------
# Maximum-likelihood fitting
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FitResult:
    family: str
    params: dict[str, float]   # location/scale, plus shape where applicable
    nllf: float
    n: int


def _as_sample(values: Sequence[float]) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.size < MIN_FIT_SAMPLES:
        raise InsufficientSampleError(
            f"need at least {MIN_FIT_SAMPLES} values, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise FitError("sample contains non-finite values")
    if arr.max() == arr.min():
        # Every supported family needs spread; catch this exactly, before
        # floating-point noise in downstream reductions can hide it.
        raise DegenerateSampleError("zero spread: all values are equal")
    return arr


def _fit_exponential(x: np.ndarray) -> dict[str, float]:
    loc = float(x.min())
    scale = float(x.mean() - loc)
    if scale <= 0.0:
        raise DegenerateSampleError("zero spread: exponential scale would be 0")
    return {"location": loc, "scale": scale}


def _fit_normal(x: np.ndarray) -> dict[str, float]:
    mean = float(x.mean())
    std = float(np.sqrt(np.mean((x - mean) ** 2)))
    if std <= 0.0:
        raise DegenerateSampleError("zero spread: normal stddev would be 0")
    return {"location": mean, "scale": std}


def _fit_lognormal(x: np.ndarray) -> dict[str, float]:
    if x.min() <= 0.0:
        raise FitError("lognormal requires values > location (= 0)")
    logs = np.log(x)
    mu = float(logs.mean())
    sigma = float(np.sqrt(np.mean((logs - mu) ** 2)))
    if sigma <= 0.0:
        raise DegenerateSampleError("zero spread in log-values")
    return {"shape": sigma, "location": 0.0, "scale": math.exp(mu)}


def _gamma_shape(log_mean_minus_mean_log: float, k0: float) -> float:
    """Solve log(k) - digamma(k) = s by Newton iteration from k0."""
    s = log_mean_minus_mean_log
    k = max(k0, 1e-8)
    for _ in range(200):
        f = math.log(k) - special.digamma(k) - s
        fprime = 1.0 / k - special.polygamma(1, k)
        step = f / fprime
        new_k = k - step
        if new_k <= 0:
            new_k = k / 2.0
        if abs(new_k - k) <= 1e-10 * max(1.0, abs(new_k)):
            return new_k
        k = new_k
    return k


def _fit_gamma(x: np.ndarray, shift: bool = False) -> dict[str, float]:
    loc = 0.0
    if shift:
        if x.min() <= 0.0:
            raise FitError("shifted gamma requires strictly positive values")
        # Keep every value strictly above the location.
        loc = float(x.min()) * (1.0 - 1e-6)
    y = x - loc
    if y.min() <= 0.0:
        raise FitError("gamma requires values > location")
    mean = float(y.mean())
    s = math.log(mean) - float(np.mean(np.log(y)))
    if s <= 1e-12:
        raise DegenerateSampleError("zero spread: gamma shape diverges")
    var = float(np.mean((y - mean) ** 2))
    if var <= 0.0:
        raise DegenerateSampleError("zero spread: gamma sample")
    k0 = mean * mean / var  # method-of-moments start
    shape = _gamma_shape(s, k0)
    return {"shape": shape, "location": loc, "scale": mean / shape}


def log_pdf(family: str, params: dict[str, float], x: np.ndarray) -> np.ndarray:
    """Log density of a fitted family, -inf outside the support."""
    x = np.asarray(x, dtype=float)
    out = np.full(x.shape, -np.inf)
    if family == "exponential":
        loc, scale = params["location"], params["scale"]
        ok = x >= loc
        out[ok] = -(x[ok] - loc) / scale - math.log(scale)
    elif family == "normal":
        mu, sigma = params["location"], params["scale"]
        z = (x - mu) / sigma
        out = -0.5 * z * z - math.log(sigma) - 0.5 * math.log(2.0 * math.pi)
    elif family == "lognormal":
        sigma, loc, scale = params["shape"], params["location"], params["scale"]
        ok = x > loc
        y = x[ok] - loc
        z = (np.log(y) - math.log(scale)) / sigma
        out[ok] = (-0.5 * z * z - np.log(y) - math.log(sigma)
                   - 0.5 * math.log(2.0 * math.pi))
    elif family == "gamma":
        shape, loc, scale = params["shape"], params["location"], params["scale"]
        ok = x > loc
        y = (x[ok] - loc) / scale
        out[ok] = ((shape - 1.0) * np.log(y) - y
                   - math.lgamma(shape) - math.log(scale))
    else:
        raise ValueError(f"unknown family {family!r}")
    return out


def cdf(family: str, params: dict[str, float], x: np.ndarray) -> np.ndarray:
    """CDF of a fitted family at the given points."""
    x = np.asarray(x, dtype=float)
    if family == "exponential":
        loc, scale = params["location"], params["scale"]
        return np.where(x < loc, 0.0, 1.0 - np.exp(-np.maximum(x - loc, 0.0) / scale))
    if family == "normal":
        mu, sigma = params["location"], params["scale"]
        return 0.5 * (1.0 + special.erf((x - mu) / (sigma * math.sqrt(2.0))))
    if family == "lognormal":
        sigma, loc, scale = params["shape"], params["location"], params["scale"]
        out = np.zeros(x.shape)
        ok = x > loc
        z = (np.log(x[ok] - loc) - math.log(scale)) / sigma
        out[ok] = 0.5 * (1.0 + special.erf(z / math.sqrt(2.0)))
        return out
    if family == "gamma":
        shape, loc, scale = params["shape"], params["location"], params["scale"]
        out = np.zeros(x.shape)
        ok = x > loc
        out[ok] = special.gammainc(shape, (x[ok] - loc) / scale)
        return out
    raise ValueError(f"unknown family {family!r}")


def fit_mle(values: Sequence[float], family: str, *, shift: bool = False) -> FitResult:
    """Fit one family by maximum likelihood and report its NLLF.

    ``shift`` applies only to the gamma family and moves the location just
    below the sample minimum (all values must be positive).
    """
    x = _as_sample(values)
    if family == "exponential":
        params = _fit_exponential(x)
    elif family == "normal":
        params = _fit_normal(x)
    elif family == "lognormal":
        params = _fit_lognormal(x)
    elif family == "gamma":
        params = _fit_gamma(x, shift=shift)
    else:
        raise ValueError(f"unknown family {family!r}; expected one of {FAMILIES}")
    nllf = float(-np.sum(log_pdf(family, params, x)))
    if not math.isfinite(nllf):
        raise FitError(f"{family} NLLF is not finite on this sample")
    return FitResult(family=family, params=params, nllf=nllf, n=int(x.size))


def rank_families(
    values: Sequence[float],
    families: Sequence[str] = FAMILIES,
) -> tuple[list[FitResult], list[tuple[str, str]]]:
    """Fit every family and sort by ascending NLLF (best fit first).

    Returns (ranked fits, excluded) where ``excluded`` lists
    (family, reason) for families whose preconditions failed.
    """
    fits = []
    excluded = []
    for family in families:
        try:
            fits.append(fit_mle(values, family))
        except FitError as exc:
            excluded.append((family, str(exc)))
    if not fits:
        raise FitError("no family could be fitted: "
                       + "; ".join(f"{f}: {r}" for f, r in excluded))
    fits.sort(key=lambda fit: (fit.nllf, fit.family))
    return fits, excluded


# ---------------------------------------------------------------------------
# Kolmogorov-Smirnov
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class KsResult:
    d_stat: float
    p_value: float
    fitted: FitResult


def kolmogorov_sf(lam: float) -> float:
    """Asymptotic Kolmogorov survival function 2*sum (-1)^{j-1} e^{-2 j^2 lam^2}.

    Below lam ~ 1.18 the alternating series converges too slowly, so the
    equivalent theta-function form of the CDF is used there instead.
    """
    if lam <= 0.0:
        return 1.0
    if lam < 1.18:
        w = math.exp(-math.pi * math.pi / (8.0 * lam * lam))
        cdf_val = (math.sqrt(2.0 * math.pi) / lam) * (w + w ** 9 + w ** 25 + w ** 49)
        return min(1.0, max(0.0, 1.0 - cdf_val))
    total = 0.0
    for j in range(1, 101):
        term = 2.0 * (-1.0) ** (j - 1) * math.exp(-2.0 * j * j * lam * lam)
        total += term
        if abs(term) < 1e-16:
            break
    return min(1.0, max(0.0, total))


def ks_statistic(values: np.ndarray, fitted_cdf: np.ndarray) -> float:
    """Sup gap between the empirical CDF and a fitted CDF at sample points.

    Both one-sided gaps are taken at each sorted sample point: the
    empirical CDF steps from (i-1)/n to i/n at the i-th order statistic.
    """
    n = values.size
    order = np.argsort(values, kind="stable")
    f = fitted_cdf[order]
    i = np.arange(1, n + 1)
    d_plus = np.max(i / n - f)
    d_minus = np.max(f - (i - 1) / n)
    return float(max(d_plus, d_minus))


def ks_test(values: Sequence[float], fitted: FitResult) -> KsResult:
    """K-S statistic and asymptotic p-value for an already-fitted family."""
    x = np.asarray(values, dtype=float)
    d = ks_statistic(x, cdf(fitted.family, fitted.params, x))
    sqrt_n = math.sqrt(x.size)
    lam = d * (sqrt_n + 0.12 + 0.11 / sqrt_n)
    return KsResult(d_stat=d, p_value=kolmogorov_sf(lam), fitted=fitted)


def ks_exponential(values: Sequence[float]) -> KsResult:
    """Fit a two-parameter exponential and test it against the sample."""
    return ks_test(values, fit_mle(values, "exponential"))


# ---------------------------------------------------------------------------
# Chi-squared feature ranking
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ChiSquaredRanking:
    """Features ordered by descending chi-squared statistic."""
    entries: tuple[tuple[str, float], ...]
    # (feature, class label) pairs whose class mean collapsed below 1e-12
    # after scaling; their terms contribute 0 to the statistic.
    zeroed_terms: tuple[tuple[str, str], ...] = ()


def _minmax_scale(column: np.ndarray) -> np.ndarray:
    lo, hi = column.min(), column.max()
    if hi - lo <= 0.0:
        return np.zeros_like(column)
    return (column - lo) / (hi - lo)


def rank_features(
    features: np.ndarray,
    labels: Sequence[Label | str],
    names: Optional[Sequence[str]] = None,
) -> ChiSquaredRanking:
    """Per-sample two-class chi-squared ranking over min-max scaled columns.

    For each column j (scaled to [0,1]) with class means m0 (non-rumor)
    and m1 (rumor), the statistic sums (x_ij - m0)^2/m0 + (x_ij - m1)^2/m1
    over all samples i. A class-mean below 1e-12 zeroes that class's term
    (recorded in ``zeroed_terms``). Ties order lexicographically by name.
    """
    x = np.asarray(features, dtype=float)
    if x.ndim != 2:
        raise ValueError("features must be a 2-D matrix")
    n, m = x.shape
    if names is None:
        names = [f"feature_{j}" for j in range(m)]
    if len(names) != m:
        raise ValueError("one name per feature column required")

    lab = np.array([
        1 if (l == Label.RUMOR or l == Label.RUMOR.value) else
        0 if (l == Label.NON_RUMOR or l == Label.NON_RUMOR.value) else -1
        for l in labels
    ])
    if lab.size != n:
        raise ValueError("one label per row required")
    if np.any(lab < 0):
        raise ValueError("labels must be rumor or non-rumor")
    n1 = int(np.sum(lab == 1))
    n0 = int(np.sum(lab == 0))
    if n0 < 2 or n1 < 2:
        raise ValueError(f"need >= 2 samples per class, got {n0} non-rumor / {n1} rumor")

    scores = {}
    zeroed = []
    for j in range(m):
        col = _minmax_scale(x[:, j])
        chi2 = 0.0
        for cls, cls_name in ((0, Label.NON_RUMOR.value), (1, Label.RUMOR.value)):
            mu = float(col[lab == cls].mean())
            if mu < 1e-12:
                zeroed.append((names[j], cls_name))
                continue
            chi2 += float(np.sum((col - mu) ** 2) / mu)
        scores[names[j]] = chi2

    ordered = sorted(scores.items(), key=lambda item: (-item[1], item[0]))
    return ChiSquaredRanking(entries=tuple(ordered), zeroed_terms=tuple(zeroed))


# ---------------------------------------------------------------------------
# Label-group summaries and verification ratios
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GroupStats:
    count: int
    mean: float
    median: float


def label_group_summary(series: MetricSeries) -> dict[str, GroupStats]:
    """Mean/median/count per label plus an 'overall' row."""
    if not series.values:
        raise ValueError("empty metric series")
    groups: dict[str, list[float]] = {}
    for cid, value in series.values:
        groups.setdefault(series.label_of[cid].value, []).append(value)
    out = {}
    for label, vals in groups.items():
        arr = np.asarray(vals)
        out[label] = GroupStats(count=arr.size, mean=float(arr.mean()),
                                median=float(np.median(arr)))
    everything = np.asarray([v for _, v in series.values])
    out["overall"] = GroupStats(count=everything.size, mean=float(everything.mean()),
                                median=float(np.median(everything)))
    return out


@dataclass(frozen=True)
class VerificationCell:
    ratio: Optional[float]      # None when no profiled user falls in the cell
    verified: int
    profiled: int
    unprofiled: int             # nodes excluded for lack of a profile


@dataclass(frozen=True)
class VerificationTable:
    """Verified-user ratios for source vs. participant, per label.

    ``cells`` is keyed by (group, label) with group in {source, participant}
    and label in {rumor, non-rumor}; the participant group counts every
    node in a cascade. Nodes without profiles are excluded from both the
    numerator and denominator and tallied in ``unprofiled``.
    """
    cells: dict[tuple[str, str], VerificationCell]


def verification_ratios(corpus: Corpus) -> VerificationTable:
    if corpus.profile_coverage <= 0.0:
        raise ValueError("no profiles attached to this corpus")
    counts = {
        (group, label.value): [0, 0, 0]     # verified, profiled, unprofiled
        for group in ("source", "participant")
        for label in (Label.RUMOR, Label.NON_RUMOR)
    }
    for cascade in corpus:
        if cascade.label is Label.UNLABELED:
            continue
        lab = cascade.label.value
        for node in cascade.nodes:
            cells = [("participant", lab)]
            if node.is_root:
                cells.append(("source", lab))
            for key in cells:
                if node.profile is None:
                    counts[key][2] += 1
                else:
                    counts[key][1] += 1
                    if node.profile.verified:
                        counts[key][0] += 1
    cells = {}
    for key, (verified, profiled, unprofiled) in counts.items():
        ratio = verified / profiled if profiled else None
        cells[key] = VerificationCell(ratio=ratio, verified=verified,
                                      profiled=profiled, unprofiled=unprofiled)
    return VerificationTable(cells=cells)


# ---------------------------------------------------------------------------
# Per-cascade attribute features (input to rank_features)
# ---------------------------------------------------------------------------

ATTRIBUTE_FEATURES = ("fans", "followings", "tweets", "registration_year",
                      "verified_ratio")


@dataclass(frozen=True)
class AttributeMatrix:
    features: np.ndarray            # n x 5, one row per usable cascade
    labels: tuple[Label, ...]
    cascade_ids: tuple[str, ...]
    names: tuple[str, ...] = ATTRIBUTE_FEATURES
    skipped: tuple[str, ...] = ()   # unlabeled or no profiled nodes


def attribute_matrix(corpus: Corpus) -> AttributeMatrix:
    """Per-cascade means of the profile attributes plus the verified ratio.

    Rows average over the cascade's profiled nodes; cascades that are
    unlabeled or have no profiled node are skipped and reported.
    """
    rows = []
    labels = []
    ids = []
    skipped = []
    for cascade in corpus:
        profiles = [n.profile for n in cascade.nodes if n.profile is not None]
        if cascade.label is Label.UNLABELED or not profiles:
            skipped.append(cascade.id)
            continue
        k = len(profiles)
        rows.append([
            sum(p.fans for p in profiles) / k,
            sum(p.followings for p in profiles) / k,
            sum(p.tweets for p in profiles) / k,
            sum(p.registration_year for p in profiles) / k,
            sum(1 for p in profiles if p.verified) / k,
        ])
        labels.append(cascade.label)
        ids.append(cascade.id)
    return AttributeMatrix(
        features=np.asarray(rows, dtype=float).reshape(len(rows), len(ATTRIBUTE_FEATURES)),
        labels=tuple(labels), cascade_ids=tuple(ids), skipped=tuple(skipped))
