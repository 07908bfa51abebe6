"""Posterior dispersion estimators over log-likelihood matrices.

Everything here consumes an S x N matrix of pointwise log-likelihood values
(S posterior draws, N datapoints) and works per column. All heavy quantities
stay in the log domain; linear-domain likelihoods are never materialized at
full scale, so columns sitting at -1000 nats are as safe as columns at -1.

Columns are canonicalized by sorting before any reduction, which makes every
estimator bitwise-invariant under permutation of the posterior draws.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "NEAR_SINGULAR_EPS",
    "LogLikMatrix",
    "PointwiseSummary",
    "ReportRow",
    "MismatchReport",
    "GroupStats",
    "log_posterior_predictive",
    "log_posterior_predictive_mcse",
    "mean_log_lik",
    "var_log_lik",
    "log_var_lik",
    "wapdi",
    "pdi_ratio",
    "pdi_ratio_linear",
    "waic",
    "summarize",
    "summarize_column",
    "rank_report",
    "group_aggregate",
]

# |log mu| below this is treated as a singular WAPDI denominator.
NEAR_SINGULAR_EPS = 1e-8

FLAG_ZERO_VARIANCE = "zero_variance"
FLAG_NEAR_SINGULAR = "near_singular_log_mu"
FLAG_NONFINITE = "nonfinite_loglik"


@dataclass(frozen=True)
class LogLikMatrix:
    """S x N matrix of pointwise log-likelihoods plus column labels.

    Rows are posterior draws, columns are datapoints. Entries must be finite;
    pass ``allow_degenerate=True`` to keep columns containing -inf (zero
    likelihood under some draw), which are then summarized with flags instead
    of aborting.
    """

    values: np.ndarray
    datapoint_ids: tuple[str, ...]
    allow_degenerate: bool = False

    def __init__(self, values, datapoint_ids=None, allow_degenerate=False):
        values = np.asarray(values, dtype=np.float64)
        if values.ndim != 2:
            raise ValueError("log-likelihood matrix must be 2-D (draws x datapoints)")
        n_draws, n_points = values.shape
        if n_draws < 2:
            raise ValueError(f"need at least 2 posterior draws, got {n_draws}")
        if n_points < 1:
            raise ValueError("need at least 1 datapoint column")
        if np.isnan(values).any():
            s, n = np.argwhere(np.isnan(values))[0]
            raise ValueError(f"NaN log-likelihood at draw {s}, datapoint {n}")
        if np.isposinf(values).any():
            s, n = np.argwhere(np.isposinf(values))[0]
            raise ValueError(f"+inf log-likelihood at draw {s}, datapoint {n}")
        if not allow_degenerate and np.isneginf(values).any():
            s, n = np.argwhere(np.isneginf(values))[0]
            raise ValueError(
                f"-inf log-likelihood at draw {s}, datapoint {n} "
                "(zero-likelihood draw; pass allow_degenerate=True to keep it)"
            )
        if datapoint_ids is None:
            datapoint_ids = tuple(str(j) for j in range(n_points))
        else:
            datapoint_ids = tuple(str(i) for i in datapoint_ids)
            if len(datapoint_ids) != n_points:
                raise ValueError(
                    f"{len(datapoint_ids)} datapoint ids for {n_points} columns"
                )
        values = values.copy()
        values.flags.writeable = False
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "datapoint_ids", datapoint_ids)
        object.__setattr__(self, "allow_degenerate", bool(allow_degenerate))

    @property
    def draw_count(self) -> int:
        return self.values.shape[0]

    @property
    def point_count(self) -> int:
        return self.values.shape[1]

    def column(self, j: int) -> np.ndarray:
        return self.values[:, j]


@dataclass(frozen=True)
class PointwiseSummary:
    """All per-datapoint dispersion quantities for one column.

    ``log_sigma2`` is -inf when the linear-domain variance is exactly zero
    (all draws equal); ``wapdi`` is NaN when flagged. ``flags`` names every
    degeneracy hit while summarizing the column.
    """

    log_mu: float
    mu_log: float
    log_sigma2: float
    sigma2_log: float
    wapdi: float
    pdi_ratio_log: float
    waic_term: float
    flags: tuple[str, ...] = ()


@dataclass(frozen=True)
class ReportRow:
    datapoint_id: str
    summary: PointwiseSummary
    rank_wapdi: int
    rank_log_mu: int


@dataclass(frozen=True)
class MismatchReport:
    """Ranked per-datapoint records, worst WAPDI first, plus the WAIC scalar."""

    rows: tuple[ReportRow, ...]
    waic: float
    group_labels: dict[str, str] | None = None


@dataclass(frozen=True)
class GroupStats:
    mean_wapdi: float
    mean_log_mu: float
    count: int


def _as_column(column, min_draws: int = 1) -> np.ndarray:
    col = np.asarray(column, dtype=np.float64)
    if col.ndim != 1:
        raise ValueError("expected a 1-D column of log-likelihood values")
    if col.size == 0:
        raise ValueError("empty log-likelihood column")
    if col.size < min_draws:
        raise ValueError(f"need at least {min_draws} draws, got {col.size}")
    if np.isnan(col).any():
        raise ValueError("NaN in log-likelihood column")
    if not np.isfinite(col).all():
        raise ValueError("non-finite log-likelihood in column")
    return np.sort(col)


def log_posterior_predictive(column) -> float:
    """log of the posterior-draw average of exp(column), via shifted log-sum-exp.

    This is log mu(n): the log posterior predictive density of datapoint n
    estimated from S draws. Exact for constant columns by construction.
    """
    col = _as_column(column)
    m = col[-1]
    return float(m + np.log(np.mean(np.exp(col - m))))


def log_posterior_predictive_mcse(column) -> float:
    """Standard error of ``log_posterior_predictive`` under i.i.d. draws.

    Delta method on the shifted linear-domain mean: se(log mu) ~= sd(w) /
    (mean(w) * sqrt(S)) with w = exp(column - max). Only meaningful when the
    draws are independent (exact samplers); MCMC draws need batching instead.
    """
    col = _as_column(column, min_draws=2)
    w = np.exp(col - col[-1])
    return float(np.std(w, ddof=1) / (np.mean(w) * np.sqrt(col.size)))


def mean_log_lik(column) -> float:
    """Posterior mean of the log-likelihood, mu_log(n)."""
    col = _as_column(column)
    m = col[-1]
    return float(m + np.mean(col - m))


def var_log_lik(column) -> float:
    """Sample variance (S-1 divisor) of the log-likelihood, sigma2_log(n)."""
    col = _as_column(column, min_draws=2)
    return float(np.var(col - col[-1], ddof=1))


def log_var_lik(column) -> float:
    """log of the sample variance of the linear-domain likelihood.

    Computed fully shifted: with m = max(column), returns
    2m + log(var(exp(column - m))). Returns -inf (the degenerate marker) when
    the shifted variance is exactly zero, i.e. all draws agree.
    """
    col = _as_column(column, min_draws=2)
    m = col[-1]
    v = np.var(np.exp(col - m), ddof=1)
    if v == 0.0:
        return float("-inf")
    return float(2.0 * m + np.log(v))


def wapdi(column, *, eps: float = NEAR_SINGULAR_EPS) -> float:
    """var_log_lik / log_posterior_predictive for one column.

    Negative for well-behaved columns (log mu < 0, positive variance);
    small magnitudes mean a well-modeled point. Returns NaN when |log mu| < ``eps`` -- a
    near-singular denominator is flagged rather than amplified.
    """
    col = _as_column(column, min_draws=2)
    return _wapdi_from(var_log_lik(col), log_posterior_predictive(col), eps)


def _wapdi_from(sigma2_log: float, log_mu: float, eps: float) -> float:
    if abs(log_mu) < eps:
        return float("nan")
    return sigma2_log / log_mu


def pdi_ratio(column) -> float:
    """log-domain variance-to-mean ratio: log sigma2(n) - log mu(n).

    The degenerate -inf marker from ``log_var_lik`` propagates through.
    """
    col = _as_column(column, min_draws=2)
    return log_var_lik(col) - log_posterior_predictive(col)


def pdi_ratio_linear(column) -> float:
    """exp of ``pdi_ratio``; may overflow to inf, which callers must expect."""
    with np.errstate(over="ignore"):
        return float(np.exp(pdi_ratio(column)))


def summarize_column(
    column, *, eps: float = NEAR_SINGULAR_EPS, allow_degenerate: bool = False
) -> PointwiseSummary:
    """Compute every pointwise quantity for a single column of S >= 2 draws."""
    col = np.asarray(column, dtype=np.float64)
    if col.ndim != 1 or col.size < 2:
        raise ValueError("summarize_column needs a 1-D column with S >= 2 draws")
    if np.isnan(col).any() or np.isposinf(col).any():
        raise ValueError("NaN or +inf in log-likelihood column")
    if not allow_degenerate and np.isneginf(col).any():
        raise ValueError("-inf in log-likelihood column (allow_degenerate=False)")
    col = np.sort(col)
    if np.isneginf(col).any():
        return _degenerate_summary(col, eps)

    m = col[-1]
    shifted = col - m
    log_mu = float(m + np.log(np.mean(np.exp(shifted))))
    mu_log = float(m + np.mean(shifted))
    sigma2_log = float(np.var(shifted, ddof=1))

    flags: list[str] = []
    v_lin = np.var(np.exp(shifted), ddof=1)
    if v_lin == 0.0:
        log_sigma2 = float("-inf")
        flags.append(FLAG_ZERO_VARIANCE)
    else:
        log_sigma2 = float(2.0 * m + np.log(v_lin))

    if abs(log_mu) < eps:
        wapdi_val = float("nan")
        flags.append(FLAG_NEAR_SINGULAR)
    else:
        wapdi_val = sigma2_log / log_mu

    return PointwiseSummary(
        log_mu=log_mu,
        mu_log=mu_log,
        log_sigma2=log_sigma2,
        sigma2_log=sigma2_log,
        wapdi=wapdi_val,
        pdi_ratio_log=log_sigma2 - log_mu,
        waic_term=-log_mu + sigma2_log,
        flags=tuple(flags),
    )


def _degenerate_summary(col: np.ndarray, eps: float) -> PointwiseSummary:
    # Opt-in path for columns holding -inf entries: the linear-domain moments
    # still exist (exp(-inf) = 0) but log-domain variance does not.
    nan = float("nan")
    m = col[-1]
    if np.isneginf(m):
        return PointwiseSummary(
            log_mu=float("-inf"),
            mu_log=float("-inf"),
            log_sigma2=float("-inf"),
            sigma2_log=nan,
            wapdi=nan,
            pdi_ratio_log=nan,
            waic_term=nan,
            flags=(FLAG_NONFINITE, FLAG_ZERO_VARIANCE),
        )
    w = np.exp(col - m)
    log_mu = float(m + np.log(np.mean(w)))
    v_lin = np.var(w, ddof=1)
    flags = [FLAG_NONFINITE]
    if v_lin == 0.0:
        log_sigma2 = float("-inf")
        flags.append(FLAG_ZERO_VARIANCE)
    else:
        log_sigma2 = float(2.0 * m + np.log(v_lin))
    return PointwiseSummary(
        log_mu=log_mu,
        mu_log=float("-inf"),
        log_sigma2=log_sigma2,
        sigma2_log=nan,
        wapdi=nan,
        pdi_ratio_log=log_sigma2 - log_mu,
        waic_term=nan,
        flags=tuple(flags),
    )


def summarize(
    matrix: LogLikMatrix, *, eps: float = NEAR_SINGULAR_EPS
) -> list[PointwiseSummary]:
    """Apply every column estimator to each column of the matrix.

    Columns are independent; degeneracies are recorded per row via flags and
    never abort the rest of the matrix.
    """
    return [
        summarize_column(
            matrix.values[:, j], eps=eps, allow_degenerate=matrix.allow_degenerate
        )
        for j in range(matrix.point_count)
    ]


def waic(matrix: LogLikMatrix) -> tuple[float, np.ndarray]:
    """WAIC as the mean over datapoints of t(n) = -log mu(n) + sigma2_log(n).

    Returns (scalar, per-point terms). Zero-variance columns contribute a
    zero penalty term.
    """
    terms = np.array([s.waic_term for s in summarize(matrix)])
    return float(np.mean(terms)), terms


def _rank_keys(summaries, ids):
    # NaN (flagged) entries sort after every finite value so ranks stay a
    # permutation of 1..N.
    def wapdi_key(i):
        s = summaries[i]
        bad = 1 if np.isnan(s.wapdi) else 0
        return (bad, 0.0 if bad else s.wapdi, s.log_mu, ids[i])

    def log_mu_key(i):
        s = summaries[i]
        w_bad = 1 if np.isnan(s.wapdi) else 0
        return (s.log_mu, 0.0 if w_bad else s.wapdi, ids[i])

    return wapdi_key, log_mu_key


def rank_report(
    summaries: list[PointwiseSummary],
    ids,
    group_labels: dict[str, str] | None = None,
) -> MismatchReport:
    """Rank datapoints by WAPDI (rank 1 = most negative = worst).

    Ties break by ascending log_mu, then by id. The secondary ranking by
    log_mu uses the mirrored key (log_mu, wapdi, id). Duplicate ids are
    rejected.
    """
    ids = [str(i) for i in ids]
    if len(summaries) != len(ids):
        raise ValueError(f"{len(summaries)} summaries for {len(ids)} ids")
    if len(set(ids)) != len(ids):
        dupes = sorted({i for i in ids if ids.count(i) > 1})
        raise ValueError(f"duplicate datapoint ids: {', '.join(dupes)}")

    wapdi_key, log_mu_key = _rank_keys(summaries, ids)
    order_w = sorted(range(len(ids)), key=wapdi_key)
    order_m = sorted(range(len(ids)), key=log_mu_key)
    rank_w = {i: r + 1 for r, i in enumerate(order_w)}
    rank_m = {i: r + 1 for r, i in enumerate(order_m)}

    rows = tuple(
        ReportRow(
            datapoint_id=ids[i],
            summary=summaries[i],
            rank_wapdi=rank_w[i],
            rank_log_mu=rank_m[i],
        )
        for i in order_w
    )
    waic_scalar = float(np.mean([s.waic_term for s in summaries]))
    labels = dict(group_labels) if group_labels is not None else None
    return MismatchReport(rows=rows, waic=waic_scalar, group_labels=labels)


def group_aggregate(
    report: MismatchReport, grouping: dict[str, str] | None = None
) -> dict[str, GroupStats]:
    """Per-group arithmetic means of WAPDI and log_mu, ordered by label.

    ``grouping`` maps datapoint id to label; defaults to the report's own
    group labels. Every row must be covered.
    """
    if grouping is None:
        grouping = report.group_labels
    if grouping is None:
        raise ValueError("no grouping given and the report carries no group labels")
    buckets: dict[str, list[ReportRow]] = {}
    for row in report.rows:
        if row.datapoint_id not in grouping:
            raise ValueError(f"datapoint {row.datapoint_id!r} has no group label")
        buckets.setdefault(grouping[row.datapoint_id], []).append(row)
    out: dict[str, GroupStats] = {}
    for label in sorted(buckets):
        rows = buckets[label]
        out[label] = GroupStats(
            mean_wapdi=float(np.mean([r.summary.wapdi for r in rows])),
            mean_log_mu=float(np.mean([r.summary.log_mu for r in rows])),
            count=len(rows),
        )
    return out
