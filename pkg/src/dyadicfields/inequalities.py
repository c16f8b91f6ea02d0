"""Weight scheme, both sides of the truncated maximal inequalities, and the
brute-force moment-condition verifier on small discrete instances.

The abstract constant C(q) is never assumed: the right-hand sides are
evaluated with C(q) = 1 and the observed LHS/RHS ratio is reported as an
implied constant.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import stats as sps

from .dyadic import TruncationLadder
from .models import FieldModel, MarginalSpec, SpecError, sample_field

__all__ = [
    "WeightScheme",
    "MeanEstimate",
    "H2qInstance",
    "MonotoneTransform",
    "TailBoundReport",
    "InequalityLedger",
    "weight",
    "weight_total",
    "envelope_constant",
    "rosenthal_rhs",
    "rosenthal_lhs_mc",
    "enumerate_lhs_exact",
    "tailbound_check",
    "h2q_min_constant",
]


# ---------------------------------------------------------------------------
# Weight scheme
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WeightScheme:
    """Parameters (p, alpha, q, a) with the admissibility chain
    alpha*p/(2q) < a < alpha; when a is omitted it defaults to the midpoint of
    the admissible interval (using the tighter interval when p >= 2)."""

    p: float
    alpha: float
    q: float = 1.0
    a: float | None = None

    def __post_init__(self) -> None:
        if self.p < 1:
            raise SpecError("requires p >= 1")
        if not 0.5 < self.alpha <= 1.0:
            raise SpecError("requires alpha in (1/2, 1]")
        if self.q < 1:
            raise SpecError("requires q >= 1")
        if self.p >= 2:
            floor_q = (self.alpha * self.p - 1) / (2 * self.alpha - 1)
            if self.q <= floor_q:
                raise SpecError(
                    f"requires q > (alpha*p-1)/(2*alpha-1) = {floor_q:.6g} when p >= 2")
        if self.a is None:
            if self.p < 2:
                lo = self.alpha * self.p / (2 * self.q)
            else:
                lo = self.alpha - (self.q - 1) / (2 * self.q)
            object.__setattr__(self, "a", 0.5 * (lo + self.alpha))
        if not self.alpha * self.p / (2 * self.q) < self.a < self.alpha:
            raise SpecError(
                f"requires alpha*p/(2q) < a < alpha, got a={self.a:.6g} outside "
                f"({self.alpha * self.p / (2 * self.q):.6g}, {self.alpha:.6g})")


def weight(m: int, n: int, s: int, t: int, scheme: WeightScheme) -> float:
    """2**(a(m+n) + (alpha-a)(s+t)); separable in (m+n) and (s+t)."""
    if not (1 <= s <= m and 1 <= t <= n):
        raise SpecError("requires 1 <= s <= m and 1 <= t <= n")
    return 2.0 ** (scheme.a * (m + n) + (scheme.alpha - scheme.a) * (s + t))


def weight_total(m: int, n: int, scheme: WeightScheme) -> float:
    """Sum of the weights over 1 <= s <= m, 1 <= t <= n (closed geometric form)."""
    if m < 1 or n < 1:
        raise SpecError("requires m, n >= 1")
    r = 2.0 ** (scheme.alpha - scheme.a)

    def geo(k: int) -> float:
        return r * (r**k - 1.0) / (r - 1.0)

    return 2.0 ** (scheme.a * (m + n)) * geo(m) * geo(n)


def envelope_constant(scheme: WeightScheme) -> float:
    """C1 with b(2^(m+n)) <= weight_total <= C1 * b(2^(m+n))."""
    r = 2.0 ** (scheme.alpha - scheme.a)
    return (r / (r - 1.0)) ** 2


# ---------------------------------------------------------------------------
# Monte Carlo estimates
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MeanEstimate:
    mean: float
    std_error: float
    reps: int
    level: float = 0.99

    @property
    def ci(self) -> tuple[float, float]:
        z = float(sps.norm.ppf(0.5 + self.level / 2))
        return self.mean - z * self.std_error, self.mean + z * self.std_error

    def contains(self, value: float) -> bool:
        lo, hi = self.ci
        return lo <= value <= hi


def _mean_estimate(samples: np.ndarray, level: float = 0.99) -> MeanEstimate:
    n = samples.size
    mean = float(np.mean(samples))
    se = float(np.std(samples, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return MeanEstimate(mean=mean, std_error=se, reps=n, level=level)


# ---------------------------------------------------------------------------
# Cell-moment maxima
# ---------------------------------------------------------------------------


def _strict_factor_values(model: FieldModel, rows: int, cols: int) -> np.ndarray:
    if model.modulation is None:
        return np.array([1.0])
    sub = model.modulation.factor_grid(rows, cols)[: max(rows - 1, 1), : max(cols - 1, 1)]
    return np.unique(sub)


def _max_abs_clamp_pow(model: FieldModel, factors: np.ndarray, r: float, b: float) -> float:
    """max over distinct cells of E min(|X_cell|, b)^r."""
    vals = factors**r * np.asarray(model.marginal.abs_clamp_pow(r, b / factors))
    return float(np.max(vals))


def _max_abs_tail(model: FieldModel, factors: np.ndarray, x: float) -> float:
    return float(np.max(np.asarray(model.marginal.abs_tail(x / factors))))


def _is_nonnegative(marginal: MarginalSpec) -> bool:
    if marginal.is_discrete:
        v, _ = marginal.atoms()
        return bool(np.min(v) >= 0)
    if marginal.kind == "pareto":
        return marginal.shift >= -marginal.scale  # support starts at scale+shift
    if marginal.kind == "exponential":
        return marginal.shift >= 0
    return False


# ---------------------------------------------------------------------------
# Rosenthal-type maximal inequality, both sides
# ---------------------------------------------------------------------------


def rosenthal_rhs(model: FieldModel, m_exp: int, n_exp: int,
                  scheme: WeightScheme, ladder: TruncationLadder) -> float:
    """Right side of the truncated maximal moment bound with C(q) = 1:

        (deterministic tail)^(2q)
        + a_{m,n}^(2q) * sum_{s,t} 2^(m+n) lambda^(-2q)
            (max E|X_{s+t}|^(2q) + 2^((s+t)(q-1)) max (E X_{s+t}^2)^q)

    Cell maxima scan distinct cell distributions only.
    """
    m, n = m_exp, n_exp
    if m < 1 or n < 1:
        raise SpecError("requires grid exponents >= 1")
    q = scheme.q
    rows, cols = 2**m, 2**n
    factors = _strict_factor_values(model, rows, cols)
    lv = ladder.levels(m + n)
    a_mn = weight_total(m, n, scheme)
    det = 0.0
    main = 0.0
    for s in range(1, m + 1):
        for t in range(1, n + 1):
            r = s + t
            det += 2.0**r * float(lv[r]) * _max_abs_tail(model, factors, float(lv[r - 2]))
            lam = weight(m, n, s, t, scheme)
            e2q = _max_abs_clamp_pow(model, factors, 2 * q, float(lv[r]))
            e2 = _max_abs_clamp_pow(model, factors, 2.0, float(lv[r]))
            main += 2.0 ** (m + n) * lam ** (-2 * q) * (e2q + 2.0 ** (r * (q - 1)) * e2**q)
    return det ** (2 * q) + a_mn ** (2 * q) * main


def _clamp_mean_grids(model: FieldModel, rows: int, cols: int, b: float
                      ) -> np.ndarray:
    """Exact per-cell mean of the three-level clamp at level b."""
    factors = model.factor_grid(rows, cols)
    pos = factors * np.asarray(model.marginal.pos_clamp_pow(1.0, b / factors, sign=1))
    neg = factors * np.asarray(model.marginal.pos_clamp_pow(1.0, b / factors, sign=-1))
    return pos - neg


def _lhs_statistic(model: FieldModel, m_exp: int, n_exp: int, q: float,
                   b_top: float, mean_grid: np.ndarray, seed: int, rep: int) -> float:
    field = sample_field(model, m_exp, n_exp, seed, rep)
    clamped = np.clip(field.values, -b_top, b_top)
    centered = clamped - mean_grid
    table = np.zeros((clamped.shape[0] + 1, clamped.shape[1] + 1))
    table[1:, 1:] = np.cumsum(np.cumsum(centered, axis=0), axis=1)
    body = np.abs(table[1:-1, 1:-1])
    mx = float(np.max(body)) if body.size else 0.0
    return mx ** (2 * q)


def rosenthal_lhs_mc(model: FieldModel, m_exp: int, n_exp: int, q: float,
                     ladder: TruncationLadder, reps: int, seed: int,
                     level: float = 0.99, threads: int = 1) -> MeanEstimate:
    """Monte Carlo estimate of E max_(u,v strict) |centered truncated sum|^(2q);
    deterministic in the seed, replicate streams independent of scheduling."""
    if reps < 2:
        raise SpecError("requires reps >= 2")
    b_top = ladder.level(m_exp + n_exp)
    rows, cols = 2**m_exp, 2**n_exp
    mean_grid = _clamp_mean_grids(model, rows, cols, b_top)
    samples = _map_replicates(
        lambda rep: _lhs_statistic(model, m_exp, n_exp, q, b_top, mean_grid, seed, rep),
        reps, threads)
    return _mean_estimate(samples, level=level)


def enumerate_lhs_exact(model: FieldModel, m_exp: int, n_exp: int, q: float,
                        ladder: TruncationLadder, max_outcomes: int = 1_000_000) -> float:
    """Exhaustive-enumeration oracle for the MC left side: iid discrete cells
    only.  Independent of the sampling path by construction."""
    if model.dependence.kind != "iid":
        raise SpecError("exact enumeration supports iid dependence only")
    if not model.marginal.is_discrete:
        raise SpecError("exact enumeration requires a discrete marginal")
    rows, cols = 2**m_exp, 2**n_exp
    b_top = ladder.level(m_exp + n_exp)
    factors = model.factor_grid(rows, cols).reshape(-1)
    mean_grid = _clamp_mean_grids(model, rows, cols, b_top).reshape(-1)
    v, p = model.marginal.atoms()
    n_cells = rows * cols
    if len(v) ** n_cells > max_outcomes:
        raise SpecError("enumeration space too large")
    total = 0.0
    for combo in itertools.product(range(len(v)), repeat=n_cells):
        prob = 1.0
        vals = np.empty(n_cells)
        for idx, c in enumerate(combo):
            prob *= p[c]
            vals[idx] = v[c] * factors[idx]
        clamped = np.clip(vals, -b_top, b_top) - mean_grid
        grid = clamped.reshape(rows, cols)
        table = np.zeros((rows + 1, cols + 1))
        table[1:, 1:] = np.cumsum(np.cumsum(grid, axis=0), axis=1)
        body = np.abs(table[1:-1, 1:-1])
        mx = float(np.max(body)) if body.size else 0.0
        total += prob * mx ** (2 * q)
    return total


# ---------------------------------------------------------------------------
# Tail-probability bound with preconditions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TailBoundReport:
    trunc_mean_excess: float        # sum over all cells of E(|X| 1(|X| > b_top))
    tail_term: float                # 6 sum 2^(s+t) b(2^(s+t)) max tail
    a_mn: float
    eps: float
    precond_trunc_mean_ok: bool
    precond_tail_term_ok: bool
    threshold_multiplier: float     # 3 for nonnegative fields, 6 for signed
    lhs_tail_mc: MeanEstimate
    rhs_bound: float

    @property
    def preconditions_met(self) -> bool:
        return self.precond_trunc_mean_ok and self.precond_tail_term_ok


def tailbound_check(model: FieldModel, m_exp: int, n_exp: int,
                    scheme: WeightScheme, ladder: TruncationLadder, eps: float,
                    reps: int = 400, seed: int = 0, threads: int = 1) -> TailBoundReport:
    """Evaluate both preconditions exactly, the C(q)=1 right side including the
    whole-grid tail sum, and an MC estimate of the left tail probability."""
    if eps <= 0:
        raise SpecError("requires eps > 0")
    m, n = m_exp, n_exp
    q = scheme.q
    rows, cols = 2**m, 2**n
    lv = ladder.levels(m + n)
    b_top = float(lv[m + n])
    a_mn = weight_total(m, n, scheme)

    full_factors = model.factor_grid(rows, cols)
    uniq, counts = np.unique(full_factors, return_counts=True)
    excess = 0.0
    grid_tail_sum = 0.0
    for c, cnt in zip(uniq, counts):
        cell = model.marginal.scaled_by(float(c))
        excess += cnt * cell.excess_abs_mean(b_top)
        grid_tail_sum += cnt * float(cell.abs_tail(b_top))

    strict_factors = _strict_factor_values(model, rows, cols)
    tail_term = 0.0
    main = 0.0
    for s in range(1, m + 1):
        for t in range(1, n + 1):
            r = s + t
            tail_term += 2.0**r * float(lv[r]) * _max_abs_tail(model, strict_factors, float(lv[r - 2]))
            lam = weight(m, n, s, t, scheme)
            e2q = _max_abs_clamp_pow(model, strict_factors, 2 * q, float(lv[r]))
            e2 = _max_abs_clamp_pow(model, strict_factors, 2.0, float(lv[r]))
            main += 2.0 ** (m + n) * lam ** (-2 * q) * (e2q + 2.0 ** (r * (q - 1)) * e2**q)
    tail_term *= 6.0
    rhs = grid_tail_sum + eps ** (-2 * q) * main

    mult = 3.0 if _is_nonnegative(model.marginal) else 6.0
    mean_grid = model.factor_grid(rows, cols) * model.marginal.mean()
    threshold = mult * a_mn * eps

    def one(rep: int) -> float:
        field = sample_field(model, m, n, seed, rep)
        centered = field.values - mean_grid
        table = np.zeros((rows + 1, cols + 1))
        table[1:, 1:] = np.cumsum(np.cumsum(centered, axis=0), axis=1)
        body = np.abs(table[1:-1, 1:-1])
        mx = float(np.max(body)) if body.size else 0.0
        return 1.0 if mx >= threshold else 0.0

    hits = _map_replicates(one, reps, threads)
    return TailBoundReport(
        trunc_mean_excess=excess,
        tail_term=tail_term,
        a_mn=a_mn,
        eps=eps,
        precond_trunc_mean_ok=bool(excess <= eps * a_mn),
        precond_tail_term_ok=bool(tail_term <= eps * a_mn),
        threshold_multiplier=mult,
        lhs_tail_mc=_mean_estimate(hits),
        rhs_bound=rhs,
    )


# ---------------------------------------------------------------------------
# Moment-condition brute force on finite instances
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MonotoneTransform:
    """Built-in nondecreasing transforms: identity, affine (slope >= 0),
    clamp to [lo, hi], and a two-level step at a threshold."""

    kind: str
    slope: float = 1.0
    intercept: float = 0.0
    lo: float = -math.inf
    hi: float = math.inf
    threshold: float = 0.0
    low_value: float = 0.0
    high_value: float = 1.0

    def __post_init__(self) -> None:
        if self.kind not in ("identity", "affine", "clamp", "step"):
            raise SpecError(f"unknown transform kind {self.kind!r}")
        if self.kind == "affine" and self.slope < 0:
            raise SpecError("affine transform requires slope >= 0")
        if self.kind == "clamp" and self.lo > self.hi:
            raise SpecError("clamp transform requires lo <= hi")
        if self.kind == "step" and self.low_value > self.high_value:
            raise SpecError("step transform requires low_value <= high_value")

    @classmethod
    def identity(cls) -> "MonotoneTransform":
        return cls(kind="identity")

    @classmethod
    def affine(cls, slope: float, intercept: float = 0.0) -> "MonotoneTransform":
        return cls(kind="affine", slope=slope, intercept=intercept)

    @classmethod
    def clamp(cls, lo: float, hi: float) -> "MonotoneTransform":
        return cls(kind="clamp", lo=lo, hi=hi)

    @classmethod
    def step(cls, threshold: float, low_value: float = 0.0,
             high_value: float = 1.0) -> "MonotoneTransform":
        return cls(kind="step", threshold=threshold, low_value=low_value,
                   high_value=high_value)

    def apply(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind == "identity":
            return x
        if self.kind == "affine":
            return self.slope * x + self.intercept
        if self.kind == "clamp":
            return np.clip(x, self.lo, self.hi)
        return np.where(x < self.threshold, self.low_value, self.high_value)


@dataclass(frozen=True)
class H2qInstance:
    """Exact joint distribution over at most 12 outcomes of at most 6
    variables, with one monotone transform per variable."""

    outcomes: tuple[tuple[float, tuple[float, ...]], ...]
    transforms: tuple[MonotoneTransform, ...]

    def __post_init__(self) -> None:
        if not self.outcomes:
            raise SpecError("instance requires at least one outcome")
        if len(self.outcomes) > 12:
            raise SpecError("instance support limited to 12 outcomes")
        d = len(self.outcomes[0][1])
        if d < 1 or d > 6:
            raise SpecError("instance limited to 1..6 variables")
        if any(len(vals) != d for _, vals in self.outcomes):
            raise SpecError("all outcomes must list every variable")
        probs = np.array([pr for pr, _ in self.outcomes], dtype=float)
        if np.any(probs < 0) or abs(float(probs.sum()) - 1.0) > 1e-12:
            raise SpecError("outcome probabilities must be nonnegative and sum to 1")
        if len(self.transforms) != d:
            raise SpecError("one transform per variable required")
        # nondecreasing on the support
        mat = np.array([vals for _, vals in self.outcomes], dtype=float)
        for lam, tr in enumerate(self.transforms):
            xs = np.sort(np.unique(mat[:, lam]))
            fx = tr.apply(xs)
            if np.any(np.diff(fx) < -1e-12):
                raise SpecError(f"transform for variable {lam} is not nondecreasing")

    @property
    def dimension(self) -> int:
        return len(self.outcomes[0][1])


def h2q_min_constant(instance: H2qInstance, q: float) -> float:
    """Minimal C with  E|sum (f - Ef)|^(2q) <= C (|I| max E|f|^(2q) +
    |I|^q max (E f^2)^q)  on this instance; exact enumeration."""
    if q < 1:
        raise SpecError("requires q >= 1")
    probs = np.array([pr for pr, _ in instance.outcomes], dtype=float)
    mat = np.array([vals for _, vals in instance.outcomes], dtype=float)
    d = instance.dimension
    f = np.column_stack([instance.transforms[lam].apply(mat[:, lam]) for lam in range(d)])
    ef = probs @ f
    centered_sum = (f - ef).sum(axis=1)
    lhs = float(probs @ np.abs(centered_sum) ** (2 * q))
    e_abs_2q = probs @ np.abs(f) ** (2 * q)
    e_sq = probs @ f**2
    bracket = d * float(np.max(e_abs_2q)) + d**q * float(np.max(e_sq) ** q)
    if lhs <= 1e-300:
        return 0.0
    return lhs / bracket


# ---------------------------------------------------------------------------
# Ledger rows
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class InequalityLedger:
    m: int
    n: int
    q: float
    alpha: float
    a: float
    lhs: MeanEstimate
    rhs: float
    preconditions_met: bool | None = None

    CSV_HEADER = "m,n,q,alpha,a,lhs,lhs_ci_low,lhs_ci_high,rhs,implied_constant,preconditions_met"

    @property
    def implied_constant(self) -> float:
        if self.rhs <= 0:
            return 0.0 if self.lhs.mean <= 0 else math.inf
        return self.lhs.mean / self.rhs

    def csv_row(self) -> str:
        lo, hi = self.lhs.ci
        pre = "" if self.preconditions_met is None else str(self.preconditions_met)
        return (f"{self.m},{self.n},{self.q!r},{self.alpha!r},{self.a!r},"
                f"{self.lhs.mean!r},{lo!r},{hi!r},{self.rhs!r},"
                f"{self.implied_constant!r},{pre}")


# ---------------------------------------------------------------------------
# Shared replicate mapper (threads affect speed only, never values)
# ---------------------------------------------------------------------------


def _map_replicates(fn: Callable[[int], float], reps: int, threads: int) -> np.ndarray:
    if threads <= 1:
        return np.array([fn(rep) for rep in range(reps)])
    from concurrent.futures import ThreadPoolExecutor

    out = np.empty(reps)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        for rep, val in zip(range(reps), pool.map(fn, range(reps))):
            out[rep] = val
    return out
