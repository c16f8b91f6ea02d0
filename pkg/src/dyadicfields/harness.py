"""Monte Carlo experiments for the limit statements: weighted dyadic series,
single-path strong-law traces, truncation-centered weak-law probabilities,
L_p convergence of normalized maxima, max-tail versus marginal-tail ratios,
and the moment-series equivalence table.

Decision rules are finite-sample heuristics, documented rather than asserted:
tail probabilities carry Wilson intervals, and "tends to zero" verdicts come
from a least-squares slope on the log scale tested at 95% confidence.  The
almost-sure statements are probed by labeled single-path surrogates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import stats as sps

from .dyadic import TruncationLadder
from .inequalities import _map_replicates
from .models import FieldModel, MarginalSpec, SpecError, sample_field
from .varying import SlowlyVaryingFamily, debruijn_conjugate

__all__ = [
    "SeriesBlockRow",
    "SeriesEstimate",
    "TracePoint",
    "ConvergenceTrace",
    "MomentSeriesReport",
    "baum_katz_series",
    "regular_norming_series",
    "mz_slln_trace",
    "feller_wlln",
    "pyke_root_lp",
    "lemma_a1_ratio",
    "moment_series_check",
]


# ---------------------------------------------------------------------------
# Estimation helpers
# ---------------------------------------------------------------------------


def wilson_interval(hits: int, n: int, level: float = 0.95) -> tuple[float, float]:
    if n <= 0:
        raise SpecError("interval requires n >= 1")
    z = float(sps.norm.ppf(0.5 + level / 2))
    phat = hits / n
    denom = 1.0 + z * z / n
    center = (phat + z * z / (2 * n)) / denom
    half = z * math.sqrt(phat * (1 - phat) / n + z * z / (4 * n * n)) / denom
    lo = 0.0 if hits == 0 else float(max(center - half, 0.0))
    hi = 1.0 if hits == n else float(min(center + half, 1.0))
    return lo, hi


def _slope_test(xs: np.ndarray, ys: np.ndarray, level: float = 0.95
                ) -> tuple[float, float, int]:
    """Least-squares slope of ys on xs with its two-sided confidence sign:
    returns (slope, t statistic, df)."""
    n = xs.size
    if n < 3:
        return 0.0, 0.0, 0
    x_c = xs - xs.mean()
    sxx = float(np.dot(x_c, x_c))
    if sxx == 0:
        return 0.0, 0.0, 0
    slope = float(np.dot(x_c, ys)) / sxx
    resid = ys - (ys.mean() + slope * x_c)
    df = n - 2
    s2 = float(np.dot(resid, resid)) / df if df > 0 else 0.0
    se = math.sqrt(s2 / sxx) if s2 > 0 else 0.0
    t = slope / se if se > 0 else (math.copysign(math.inf, slope) if slope != 0 else 0.0)
    return slope, t, df


def _verdict_from_fit(xs: np.ndarray, stats: np.ndarray, floor: float,
                      level: float = 0.95) -> tuple[str, float]:
    """Classify a trace as decreasing-to-zero / flat / increasing from the
    log-scale slope, significant at the requested confidence."""
    stats = np.asarray(stats, dtype=float)
    if np.all(stats <= floor):
        return "decreasing-to-zero", -math.inf
    ys = np.log(np.maximum(stats, floor))
    slope, t, df = _slope_test(np.asarray(xs, dtype=float), ys)
    if df <= 0:
        return "flat", slope
    crit = float(sps.t.ppf(0.5 + level / 2, df))
    if t < -crit:
        return "decreasing-to-zero", slope
    if t > crit:
        return "increasing", slope
    return "flat", slope


# ---------------------------------------------------------------------------
# Result containers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SeriesBlockRow:
    k: int
    l: int
    block_weight: float
    tail_prob: float
    ci_low: float
    ci_high: float
    weighted_term: float
    partial_sum: float


@dataclass(frozen=True)
class SeriesEstimate:
    rows: tuple[SeriesBlockRow, ...]
    p: float
    alpha: float
    eps: float
    reps: int
    master_seed: int
    norming: str

    CSV_HEADER = "k,l,block_weight,tail_prob,ci_low,ci_high,weighted_term,partial_sum"

    def csv_rows(self) -> list[str]:
        return [
            f"{r.k},{r.l},{r.block_weight!r},{r.tail_prob!r},{r.ci_low!r},"
            f"{r.ci_high!r},{r.weighted_term!r},{r.partial_sum!r}"
            for r in self.rows
        ]

    def shell_totals(self) -> tuple[np.ndarray, np.ndarray]:
        """Weighted terms aggregated over k + l shells (the natural series order)."""
        shells = sorted({r.k + r.l for r in self.rows})
        totals = [sum(r.weighted_term for r in self.rows if r.k + r.l == s) for s in shells]
        return np.array(shells, dtype=float), np.array(totals)

    def decay_verdict(self, min_shell: int = 4, level: float = 0.95) -> tuple[str, float]:
        """Slope test on log shell totals against the shell index; all-zero
        shells are dropped, zero totals inside the fitted range are floored at
        half a hit per replicate budget."""
        shells, totals = self.shell_totals()
        keep = shells >= min_shell
        shells, totals = shells[keep], totals[keep]
        nz = totals > 0
        if not np.any(nz):
            return "decreasing-to-zero", -math.inf
        first = int(np.argmax(nz))
        shells, totals = shells[first:], totals[first:]
        floor_w = min(t for t in totals if t > 0) * (0.5 / self.reps)
        return _verdict_from_fit(shells, totals, floor=floor_w, level=level)

    def to_json_dict(self) -> dict:
        verdict, slope = self.decay_verdict()
        return {
            "p": self.p, "alpha": self.alpha, "eps": self.eps, "reps": self.reps,
            "master_seed": self.master_seed, "norming": self.norming,
            "total": self.rows[-1].partial_sum if self.rows else 0.0,
            "decay_verdict": verdict, "decay_slope": slope,
            "rows": [
                {"k": r.k, "l": r.l, "block_weight": r.block_weight,
                 "tail_prob": r.tail_prob, "ci": [r.ci_low, r.ci_high],
                 "weighted_term": r.weighted_term, "partial_sum": r.partial_sum}
                for r in self.rows
            ],
        }


@dataclass(frozen=True)
class TracePoint:
    label: str
    m_exp: int
    n_exp: int
    statistic: float
    ci_low: float
    ci_high: float


@dataclass(frozen=True)
class ConvergenceTrace:
    points: tuple[TracePoint, ...]
    verdict: str                    # decreasing-to-zero | flat | increasing
    slope: float
    statistic_kind: str
    params: dict

    CSV_HEADER = "label,m_exp,n_exp,statistic,ci_low,ci_high"

    def csv_rows(self) -> list[str]:
        return [
            f"{p.label},{p.m_exp},{p.n_exp},{p.statistic!r},{p.ci_low!r},{p.ci_high!r}"
            for p in self.points
        ]

    def statistics(self) -> np.ndarray:
        return np.array([p.statistic for p in self.points])

    def to_json_dict(self) -> dict:
        return {
            "statistic_kind": self.statistic_kind,
            "verdict": self.verdict,
            "slope": self.slope,
            "params": self.params,
            "points": [
                {"label": p.label, "m_exp": p.m_exp, "n_exp": p.n_exp,
                 "statistic": p.statistic, "ci": [p.ci_low, p.ci_high]}
                for p in self.points
            ],
        }


def _split_exp(total_exp: int) -> tuple[int, int]:
    m = (total_exp + 1) // 2
    return m, total_exp - m


def _mean_grid(model: FieldModel, rows: int, cols: int) -> np.ndarray:
    return model.factor_grid(rows, cols) * model.marginal.mean()


def _max_abs_prefix(values: np.ndarray, centering: np.ndarray, strict: bool) -> float:
    table = np.zeros((values.shape[0] + 1, values.shape[1] + 1))
    table[1:, 1:] = np.cumsum(np.cumsum(values - centering, axis=0), axis=1)
    body = table[1:-1, 1:-1] if strict else table[1:, 1:]
    return float(np.max(np.abs(body))) if body.size else 0.0


# ---------------------------------------------------------------------------
# Weighted dyadic series
# ---------------------------------------------------------------------------


def _series(model: FieldModel, p: float, alpha: float, eps: float,
            max_block: int, reps: int, seed: int, threads: int,
            norm_of_block: Callable[[int], float], norming_desc: str) -> SeriesEstimate:
    if p < 1 or not 0.5 < alpha <= 1.0 or alpha * p < 1:
        raise SpecError("series requires p >= 1, alpha in (1/2, 1], alpha*p >= 1")
    if eps <= 0:
        raise SpecError("series requires eps > 0")
    if not 2 <= max_block <= 12:
        raise SpecError("series requires 2 <= max_block <= 12")
    if reps < 1:
        raise SpecError("series requires reps >= 1")
    blocks = [(k, l) for k in range(1, max_block) for l in range(1, max_block)
              if k + l <= max_block]
    blocks.sort()
    rows_out: list[SeriesBlockRow] = []
    partial = 0.0
    for b_idx, (k, l) in enumerate(blocks):
        rows, cols = 2**k, 2**l
        mean_grid = _mean_grid(model, rows, cols)
        threshold = eps * norm_of_block(k + l)
        base = b_idx * reps

        def one(rep: int) -> float:
            field = sample_field(model, k, l, seed, base + rep)
            mx = _max_abs_prefix(field.values, mean_grid, strict=True)
            return 1.0 if mx > threshold else 0.0

        hits = _map_replicates(one, reps, threads)
        n_hits = int(hits.sum())
        phat = n_hits / reps
        lo, hi = wilson_interval(n_hits, reps)
        bw = 2.0 ** ((k + l) * (alpha * p - 1.0))
        term = bw * phat
        partial += term
        rows_out.append(SeriesBlockRow(
            k=k, l=l, block_weight=bw, tail_prob=phat, ci_low=lo, ci_high=hi,
            weighted_term=term, partial_sum=partial))
    return SeriesEstimate(rows=tuple(rows_out), p=p, alpha=alpha, eps=eps,
                          reps=reps, master_seed=seed, norming=norming_desc)


def baum_katz_series(model: FieldModel, p: float, alpha: float, eps: float,
                     max_block: int, reps: int, seed: int,
                     threads: int = 1) -> SeriesEstimate:
    """Dyadic-block tail series: per block (k, l), MC-estimates
    P(max over strict rectangles |centered sum| > eps 2^((k+l) alpha)) and
    accumulates 2^((k+l)(alpha p - 1)) weighted partial sums."""
    return _series(model, p, alpha, eps, max_block, reps, seed, threads,
                   norm_of_block=lambda r: 2.0 ** (r * alpha),
                   norming_desc=f"2^(r*{alpha:g})")


def regular_norming_series(model: FieldModel, p: float, alpha: float, eps: float,
                           sv_family: SlowlyVaryingFamily, max_block: int,
                           reps: int, seed: int, threads: int = 1) -> SeriesEstimate:
    """Series with regularly varying norming: threshold eps * y * Lt(y) at
    y = 2^((k+l) alpha), Lt the de Bruijn conjugate of the given family."""
    conj = debruijn_conjugate(sv_family)

    def norm_of_block(r: int) -> float:
        y = 2.0 ** (r * alpha)
        return y * float(conj.value(y))

    return _series(model, p, alpha, eps, max_block, reps, seed, threads,
                   norm_of_block=norm_of_block,
                   norming_desc=f"y*conj[{sv_family.describe()}](y), y=2^(r*{alpha:g})")


# ---------------------------------------------------------------------------
# Strong-law single-path trace
# ---------------------------------------------------------------------------


def mz_slln_trace(model: FieldModel, p: float, max_exp: int, seed: int) -> ConvergenceTrace:
    """One sample path on nested square grids 2^k x 2^k, k <= max_exp;
    statistic is the max-normalized centered sum with norming (mn)^(1/p).
    A pathwise surrogate: the trace follows a single realization."""
    if not 1 <= p < 2:
        raise SpecError("requires 1 <= p < 2")
    if max_exp < 1:
        raise SpecError("requires max_exp >= 1")
    field = sample_field(model, max_exp, max_exp, seed, 0)
    rows = 2**max_exp
    mean_grid = _mean_grid(model, rows, rows)
    table = np.zeros((rows + 1, rows + 1))
    table[1:, 1:] = np.cumsum(np.cumsum(field.values - mean_grid, axis=0), axis=1)
    points = []
    for k in range(1, max_exp + 1):
        side = 2**k
        body = np.abs(table[1:side + 1, 1:side + 1])
        stat = float(np.max(body)) / (2.0 ** (2 * k / p))
        points.append(TracePoint(label=f"2^{k}x2^{k}", m_exp=k, n_exp=k,
                                 statistic=stat, ci_low=stat, ci_high=stat))
    stats = np.array([pt.statistic for pt in points])
    floor = max(float(stats[stats > 0].min()) * 1e-3 if np.any(stats > 0) else 1e-12, 1e-300)
    xs = np.arange(1, max_exp + 1, dtype=float)
    verdict, slope = _verdict_from_fit(xs, stats, floor=floor)
    return ConvergenceTrace(
        points=tuple(points), verdict=verdict, slope=slope,
        statistic_kind="single-path max-normalized sum (pathwise surrogate)",
        params={"p": p, "max_exp": max_exp, "seed": seed},
    )


# ---------------------------------------------------------------------------
# Weak-law and L_p traces
# ---------------------------------------------------------------------------


def _trace_over_grids(model: FieldModel, grid_exps: Sequence[int], reps: int,
                      seed: int, threads: int,
                      stat_of_rep: Callable[[int, int, int, np.ndarray, float, int], float],
                      kind: str, probability: bool, params: dict,
                      centering: Callable[[FieldModel, int, int, float], np.ndarray]
                      ) -> ConvergenceTrace:
    points = []
    per_grid_stats = []
    for g_idx, total_exp in enumerate(sorted(grid_exps)):
        m, n = _split_exp(total_exp)
        rows, cols = 2**m, 2**n
        norm = 2.0 ** (total_exp / params["p"])
        cent = centering(model, rows, cols, norm)
        base = g_idx * reps
        vals = _map_replicates(
            lambda rep: stat_of_rep(m, n, base + rep, cent, norm, total_exp),
            reps, threads)
        stat = float(np.mean(vals))
        if probability:
            hits = int(vals.sum())
            lo, hi = wilson_interval(hits, reps)
        else:
            se = float(np.std(vals, ddof=1) / math.sqrt(reps)) if reps > 1 else 0.0
            z = float(sps.norm.ppf(0.975))
            lo, hi = stat - z * se, stat + z * se
        per_grid_stats.append(stat)
        points.append(TracePoint(label=f"2^{m}x2^{n}", m_exp=m, n_exp=n,
                                 statistic=stat, ci_low=lo, ci_high=hi))
    stats = np.array(per_grid_stats)
    if probability:
        floor = 0.5 / reps
    else:
        floor = max(float(stats[stats > 0].min()) * 1e-3 if np.any(stats > 0) else 1e-12, 1e-300)
    xs = np.array(sorted(grid_exps), dtype=float)
    verdict, slope = _verdict_from_fit(xs, stats, floor=floor)
    return ConvergenceTrace(points=tuple(points), verdict=verdict, slope=slope,
                            statistic_kind=kind, params=params)


def feller_wlln(model: FieldModel, p: float, grid_exps: Sequence[int], eps: float,
                reps: int, seed: int, threads: int = 1) -> ConvergenceTrace:
    """Per grid, MC estimate of P(max-normalized statistic > eps) where the
    statistic centers every cell at its exact truncated mean at level
    (mn)^(1/p) and normalizes by (mn)^(1/p); max over closed rectangles."""
    if not 1 <= p < 2:
        raise SpecError("requires 1 <= p < 2")
    if eps <= 0:
        raise SpecError("requires eps > 0")

    def centering(mdl: FieldModel, rows: int, cols: int, norm: float) -> np.ndarray:
        factors = mdl.factor_grid(rows, cols)
        vals = factors * np.asarray(mdl.marginal.signed_truncated_mean(norm / factors))
        return vals

    def stat_of_rep(m: int, n: int, rep: int, cent: np.ndarray, norm: float,
                    total_exp: int) -> float:
        field = sample_field(model, m, n, seed, rep)
        mx = _max_abs_prefix(field.values, cent, strict=False)
        return 1.0 if mx / norm > eps else 0.0

    return _trace_over_grids(
        model, grid_exps, reps, seed, threads, stat_of_rep,
        kind="exceedance probability of the truncation-centered normalized maximum",
        probability=True,
        params={"p": p, "eps": eps, "reps": reps, "seed": seed},
        centering=centering)


def pyke_root_lp(model: FieldModel, p: float, grid_exps: Sequence[int],
                 reps: int, seed: int, threads: int = 1) -> ConvergenceTrace:
    """Per grid, MC estimate of E[(max-normalized centered statistic)^p];
    centering at exact means, max over closed rectangles."""
    if not 1 <= p < 2:
        raise SpecError("requires 1 <= p < 2")

    def centering(mdl: FieldModel, rows: int, cols: int, norm: float) -> np.ndarray:
        return _mean_grid(mdl, rows, cols)

    def stat_of_rep(m: int, n: int, rep: int, cent: np.ndarray, norm: float,
                    total_exp: int) -> float:
        field = sample_field(model, m, n, seed, rep)
        mx = _max_abs_prefix(field.values, cent, strict=False)
        return (mx / norm) ** p

    return _trace_over_grids(
        model, grid_exps, reps, seed, threads, stat_of_rep,
        kind="p-th moment of the mean-centered normalized maximum",
        probability=False,
        params={"p": p, "reps": reps, "seed": seed},
        centering=centering)


# ---------------------------------------------------------------------------
# Max-tail versus marginal-tail ratio
# ---------------------------------------------------------------------------


def lemma_a1_ratio(model: FieldModel, grid_exps: Sequence[int], eps: float,
                   reps: int, seed: int, ladder: TruncationLadder | None = None,
                   threads: int = 1) -> ConvergenceTrace:
    """Trace of (mn P(|X| > b eps)) / P(max |X| > b eps) across grids.

    The numerator uses the exact marginal tail; the denominator is an MC
    estimate (exact for the 1x1 grid where both events coincide).  Entries
    where both sides vanish are recorded as nan (the bound holds trivially).
    """
    if model.modulation is not None:
        raise SpecError("ratio trace requires identically distributed cells")
    if eps <= 0:
        raise SpecError("requires eps > 0")
    ladder = ladder or TruncationLadder.power(1.0)
    points = []
    stats = []
    for g_idx, total_exp in enumerate(sorted(grid_exps)):
        m, n = _split_exp(total_exp)
        rows, cols = 2**m, 2**n
        mn = rows * cols
        b = float(ladder.value(mn))
        x = b * eps
        marg = float(model.marginal.abs_tail(x))
        numer = mn * marg
        if mn == 1:
            denom, lo, hi = marg, marg, marg
        else:
            base = g_idx * reps

            def one(rep: int) -> float:
                field = sample_field(model, m, n, seed, base + rep)
                return 1.0 if float(np.max(np.abs(field.values))) > x else 0.0

            hits = _map_replicates(one, reps, threads)
            denom = float(np.mean(hits))
            lo, hi = wilson_interval(int(hits.sum()), reps)
        ratio = numer / denom if denom > 0 else (math.nan if numer == 0 else math.inf)
        ci_lo = numer / hi if hi > 0 else math.nan
        ci_hi = numer / lo if lo > 0 else math.inf
        stats.append(ratio)
        points.append(TracePoint(label=f"2^{m}x2^{n}", m_exp=m, n_exp=n,
                                 statistic=ratio, ci_low=ci_lo, ci_high=ci_hi))
    finite = np.array([s for s in stats if math.isfinite(s)])
    xs = np.array([i for i, s in enumerate(stats) if math.isfinite(s)], dtype=float)
    if finite.size >= 3:
        verdict, slope = _verdict_from_fit(xs, finite, floor=1e-12)
    else:
        verdict, slope = "flat", 0.0
    return ConvergenceTrace(
        points=tuple(points), verdict=verdict, slope=slope,
        statistic_kind="marginal-tail mass over max-tail probability",
        params={"eps": eps, "reps": reps, "seed": seed,
                "ladder_alpha": ladder.alpha})


# ---------------------------------------------------------------------------
# Moment-series equivalence table
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MomentSeriesReport:
    """Partial sums and convergence classifications of the four equivalent
    series, plus the moment value they are all equivalent to."""

    shell_index: tuple[int, ...]            # M for the (mn)-indexed series
    tail_power_terms: tuple[float, ...]     # shells of (mn)^(alpha p - 1) tails
    trunc_power_terms: tuple[float, ...]    # shells of truncated-moment series
    diag_index: tuple[int, ...]             # r for the dyadic series
    tail_dyadic_terms: tuple[float, ...]
    trunc_dyadic_terms: tuple[float, ...]
    classifications: dict
    moment_value: float                      # E(|X|^p log|X|), inf when divergent

    def agree(self) -> bool:
        c = self.classifications
        return (c["tail_power"] == c["tail_dyadic"]
                and c["trunc_power"] == c["trunc_dyadic"]
                and c["tail_power"] == c["trunc_power"]
                and c["tail_power"] == c["moment_finite"])


def _fit_dyadic_rate(idx: np.ndarray, terms: np.ndarray) -> float:
    """log2 growth rate of the terms against the index, fitted over the top
    half of the range (finite-sample ratio test)."""
    keep = terms > 0
    if keep.sum() < 3:
        return -math.inf
    xs = idx[keep].astype(float)
    ys = np.log2(terms[keep])
    half = xs >= np.median(xs)
    slope, _, _ = _slope_test(xs[half], ys[half])
    return slope


def _doubling_increments(shell_terms: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Partial-sum increments over doubling windows M in (2^j, 2^(j+1)]."""
    top = int(math.floor(math.log2(shell_terms.size)))
    js, incs = [], []
    for j in range(top):
        lo, hi = 2**j, min(2 ** (j + 1), shell_terms.size)
        js.append(j)
        incs.append(float(shell_terms[lo:hi].sum()))
    return np.array(js, dtype=float), np.array(incs)


def _fit_increment_rate(js: np.ndarray, incs: np.ndarray) -> float:
    """log2 rate of the doubling increments over the top third of the windows
    (slow log corrections push the decay onset late)."""
    keep = incs > 0
    if keep.sum() < 3:
        return -math.inf
    js, incs = js[keep], incs[keep]
    cut = js[-1] - max(2.0, (js[-1] - js[0]) / 3.0)
    sel = js >= cut
    slope, _, _ = _slope_test(js[sel], np.log2(incs[sel]))
    return slope


def _moment_log_value(marginal: MarginalSpec, p: float) -> float:
    """E(|X|^p log|X|) with log a = ln(a v 2); inf for power tails with
    index <= p."""
    if marginal.is_discrete:
        v, pr = marginal.atoms()
        av = np.abs(v)
        return float(np.sum(pr * av**p * np.log(np.maximum(av, 2.0))))
    if marginal.kind in ("pareto", "symmetrized_pareto") and marginal.beta <= p:
        return math.inf
    return marginal._quad_expect(
        lambda x: np.abs(x) ** p * np.log(np.maximum(np.abs(x), 2.0)))


def moment_series_check(marginal: MarginalSpec, p: float, alpha: float, q: float,
                        max_term: int = 2048, max_diag: int = 40) -> MomentSeriesReport:
    """Partial sums of the four equivalent series with convergence
    classifications, plus the moment value they are all equivalent to.

    The (mn)-indexed series are aggregated over shells max(m, n) = M and
    classified by the log2 rate of their partial-sum increments over doubling
    windows; the dyadic series carry a (r - 1) multiplicity and are classified
    by the log2 rate of their terms.  Convergent means rate < -0.02 (guard
    band for the finite truncation), fitted over the top half of the range.

    Caveat: the (mn)-indexed fits only reach products near max_term^2, so for
    decay rates within ~0.05 of zero (e.g. a power tail whose index sits just
    above p for the truncated pair with q near the tail index) the power and
    dyadic classifications can disagree at desk scale; the report carries the
    fitted rates so margins are visible.
    """
    if not 0 < p < q:
        raise SpecError("requires 0 < p < q")
    if alpha <= 0:
        raise SpecError("requires alpha > 0")
    if max_term < 32:
        raise SpecError("requires max_term >= 32")
    Ms = np.arange(1, max_term + 1)
    tail_shells = np.empty(max_term)
    trunc_shells = np.empty(max_term)
    for M in Ms:
        # shell max(m, n) = M: pairs (M, n) and (m, M) for m, n <= M
        inner = np.arange(1, M + 1)
        prods = (M * inner).astype(float)
        tails = np.asarray(marginal.abs_tail(np.power(prods, alpha)))
        tail_terms = np.power(prods, alpha * p - 1.0) * tails
        tmom = np.asarray(marginal.abs_truncated_moment(q, np.power(prods, alpha)))
        trunc_terms = np.power(prods, alpha * (p - q) - 1.0) * tmom
        tail_shells[M - 1] = 2.0 * tail_terms.sum() - tail_terms[-1]
        trunc_shells[M - 1] = 2.0 * trunc_terms.sum() - trunc_terms[-1]
    rs = np.arange(2, max_diag + 1)
    mult = rs - 1.0
    y = np.power(2.0, rs * alpha)
    tail_dyadic = mult * np.power(2.0, rs * alpha * p) * np.asarray(marginal.abs_tail(y))
    trunc_dyadic = (mult * np.power(2.0, rs * alpha * (p - q))
                    * np.asarray(marginal.abs_truncated_moment(q, y)))

    j_tail, inc_tail = _doubling_increments(tail_shells)
    j_trunc, inc_trunc = _doubling_increments(trunc_shells)
    e_tail = _fit_increment_rate(j_tail, inc_tail)
    e_trunc = _fit_increment_rate(j_trunc, inc_trunc)
    r_tail = _fit_dyadic_rate(rs, tail_dyadic)
    r_trunc = _fit_dyadic_rate(rs, trunc_dyadic)
    mval = _moment_log_value(marginal, p)
    classifications = {
        "tail_power": bool(e_tail < -0.02),
        "trunc_power": bool(e_trunc < -0.02),
        "tail_dyadic": bool(r_tail < -0.02),
        "trunc_dyadic": bool(r_trunc < -0.02),
        "moment_finite": bool(math.isfinite(mval)),
        "fitted": {"tail_power": e_tail, "trunc_power": e_trunc,
                   "tail_dyadic": r_tail, "trunc_dyadic": r_trunc},
    }
    return MomentSeriesReport(
        shell_index=tuple(int(m) for m in Ms),
        tail_power_terms=tuple(float(x) for x in tail_shells),
        trunc_power_terms=tuple(float(x) for x in trunc_shells),
        diag_index=tuple(int(r) for r in rs),
        tail_dyadic_terms=tuple(float(x) for x in tail_dyadic),
        trunc_dyadic_terms=tuple(float(x) for x in trunc_dyadic),
        classifications=classifications,
        moment_value=mval,
    )
