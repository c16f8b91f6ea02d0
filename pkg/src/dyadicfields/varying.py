"""Slowly varying function toolkit and stochastic-domination checks.

Every logarithm here is ln(arg v 2): the floor-at-2 convention applies at each
stage of the iterated products, which keeps all families positive on [0, inf).
De Bruijn conjugates exist in closed form for the constant and log-power
families only (the conjugate of a log power is its reciprocal).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .models import FieldModel, MarginalSpec, SpecError, TabulatedTail

__all__ = [
    "SlowlyVaryingFamily",
    "DominationReport",
    "UITrace",
    "log_nu",
    "log_nu_sq",
    "debruijn_conjugate",
    "debruijn_residual",
    "domination_check",
    "uniform_integrability_trace",
]

SV_KINDS = ("constant", "log_power", "loglog_power", "iterated_log", "iterated_log_sq")


def _floored_log(x: np.ndarray) -> np.ndarray:
    return np.log(np.maximum(x, 2.0))


def log_nu(x, nu: int) -> np.ndarray | float:
    """Product of nu iterated logarithms, each applied to max(arg, 2)."""
    if nu < 1:
        raise SpecError("log_nu requires nu >= 1")
    x = np.asarray(x, dtype=float)
    cur = x
    prod = np.ones_like(x, dtype=float)
    for _ in range(nu):
        cur = _floored_log(cur)
        prod = prod * cur
    return prod if prod.shape else float(prod)


def log_nu_sq(x, nu: int) -> np.ndarray | float:
    """As log_nu but with the last factor squared."""
    if nu < 1:
        raise SpecError("log_nu_sq requires nu >= 1")
    x = np.asarray(x, dtype=float)
    cur = x
    prod = np.ones_like(x, dtype=float)
    for k in range(nu):
        cur = _floored_log(cur)
        prod = prod * (cur * cur if k == nu - 1 else cur)
    return prod if prod.shape else float(prod)


@dataclass(frozen=True)
class SlowlyVaryingFamily:
    """Closed under evaluation on x >= 0; positive everywhere."""

    kind: str
    gamma: float = 1.0       # log_power / loglog_power exponent
    nu: int = 1              # iterated product depth
    const: float = 1.0       # constant family value

    def __post_init__(self) -> None:
        if self.kind not in SV_KINDS:
            raise SpecError(f"unknown slowly varying kind {self.kind!r}")
        if self.kind == "constant" and self.const <= 0:
            raise SpecError("constant family must be positive")
        if self.kind in ("iterated_log", "iterated_log_sq") and self.nu < 1:
            raise SpecError("iterated log families require nu >= 1")

    @classmethod
    def constant(cls, value: float = 1.0) -> "SlowlyVaryingFamily":
        return cls(kind="constant", const=value)

    @classmethod
    def log_power(cls, gamma: float) -> "SlowlyVaryingFamily":
        return cls(kind="log_power", gamma=gamma)

    @classmethod
    def loglog_power(cls, gamma: float) -> "SlowlyVaryingFamily":
        return cls(kind="loglog_power", gamma=gamma)

    @classmethod
    def iterated_log(cls, nu: int) -> "SlowlyVaryingFamily":
        return cls(kind="iterated_log", nu=nu)

    @classmethod
    def iterated_log_sq(cls, nu: int) -> "SlowlyVaryingFamily":
        return cls(kind="iterated_log_sq", nu=nu)

    def value(self, x) -> np.ndarray | float:
        x = np.asarray(x, dtype=float)
        if self.kind == "constant":
            out = np.full_like(x, self.const, dtype=float)
        elif self.kind == "log_power":
            out = np.power(_floored_log(x), self.gamma)
        elif self.kind == "loglog_power":
            out = np.power(_floored_log(_floored_log(x)), self.gamma)
        elif self.kind == "iterated_log":
            out = np.asarray(log_nu(x, self.nu))
        else:
            out = np.asarray(log_nu_sq(x, self.nu))
        return out if out.shape else float(out)

    @property
    def nondecreasing(self) -> bool:
        if self.kind == "constant":
            return True
        if self.kind in ("log_power", "loglog_power"):
            return self.gamma >= 0
        return True

    def describe(self) -> str:
        if self.kind == "constant":
            return f"constant({self.const:g})"
        if self.kind == "log_power":
            return f"log^{self.gamma:g}"
        if self.kind == "loglog_power":
            return f"loglog^{self.gamma:g}"
        if self.kind == "iterated_log":
            return f"log_{self.nu}"
        return f"log_{self.nu}^(2)"


def debruijn_conjugate(family: SlowlyVaryingFamily) -> SlowlyVaryingFamily:
    """Closed-form de Bruijn conjugate: the reciprocal for log powers, the
    reciprocal constant for constants.  Iterated-log products are unsupported."""
    if family.kind == "constant":
        return SlowlyVaryingFamily.constant(1.0 / family.const)
    if family.kind == "log_power":
        return SlowlyVaryingFamily.log_power(-family.gamma)
    if family.kind == "loglog_power":
        return SlowlyVaryingFamily.loglog_power(-family.gamma)
    raise SpecError(f"no closed-form de Bruijn conjugate for {family.kind}")


def debruijn_residual(family: SlowlyVaryingFamily, x: float) -> float:
    """|L(x) * Lt(x L(x)) - 1| at the point x >= 2."""
    if x < 2:
        raise SpecError("residual is evaluated at x >= 2")
    conj = debruijn_conjugate(family)
    lx = float(family.value(x))
    return abs(lx * float(conj.value(x * lx)) - 1.0)


# ---------------------------------------------------------------------------
# Stochastic domination and uniform integrability
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class UITrace:
    """sup over cells of E(g(|X|) 1(g(|X|) > K)) on a K grid; nonincreasing."""

    k_grid: tuple[float, ...]
    values: tuple[float, ...]
    tends_to_zero: bool
    weight_description: str


@dataclass(frozen=True)
class DominationReport:
    x_grid: np.ndarray
    cell_tails: np.ndarray          # shape (n_cells, n_x)
    dominator_tail: np.ndarray
    candidate_tail: np.ndarray
    max_violation: float            # <= 0 when the candidate dominates on the grid
    ui_trace: UITrace | None = None

    def csv_rows(self) -> list[str]:
        rows = []
        for i, x in enumerate(self.x_grid):
            cells = ",".join(repr(float(c)) for c in self.cell_tails[:, i])
            rows.append(f"{x!r},{cells},{self.dominator_tail[i]!r},{self.candidate_tail[i]!r}")
        return rows


def _as_marginal_like(cell) -> MarginalSpec | TabulatedTail:
    if isinstance(cell, (MarginalSpec, TabulatedTail)):
        return cell
    if isinstance(cell, FieldModel):
        if cell.modulation is not None:
            return cell.marginal.scaled_by(cell.modulation.c_hi)
        return cell.marginal
    raise SpecError(f"cannot treat {type(cell).__name__} as a cell distribution")


def domination_check(cells: Sequence, candidate, x_grid) -> DominationReport:
    """Compare sup of the family's absolute tails against a candidate dominator.

    max_violation > 0 flags a grid point where some cell's tail exceeds the
    candidate's.  The minimal dominator (pointwise sup construction) is
    reported alongside.
    """
    xs = np.asarray(x_grid, dtype=float)
    if xs.ndim != 1 or xs.size == 0:
        raise SpecError("x grid must be a nonempty 1-d array")
    handles = [_as_marginal_like(c) for c in cells]
    if not handles:
        raise SpecError("domination check requires a nonempty cell family")
    cell_tails = np.vstack([np.asarray(h.abs_tail(xs), dtype=float) for h in handles])
    sup = cell_tails.max(axis=0)
    cand = _as_marginal_like(candidate)
    cand_tail = np.asarray(cand.abs_tail(xs), dtype=float)
    violation = float(np.max(sup - cand_tail))
    return DominationReport(
        x_grid=xs,
        cell_tails=cell_tails,
        dominator_tail=sup,
        candidate_tail=cand_tail,
        max_violation=violation,
    )


def _weight_threshold(p: float, family: SlowlyVaryingFamily, K: float) -> float:
    """Smallest x with g(x) > K for g(x) = x^p L(x^p); g must be nondecreasing."""

    def g(x: float) -> float:
        return x**p * float(family.value(x**p))

    if g(0.0) > K:
        return 0.0
    lo, hi = 0.0, 1.0
    while g(hi) <= K:
        hi *= 2.0
        if hi > 1e200:
            return math.inf
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if g(mid) > K:
            hi = mid
        else:
            lo = mid
    return hi


def _excess_weight_mean(dist: MarginalSpec | TabulatedTail, p: float,
                        family: SlowlyVaryingFamily, cut: float) -> float:
    """E(g(|X|) 1(|X| > cut)) with g(x) = x^p L(x^p); may be +inf."""

    def g(x):
        x = np.asarray(x, dtype=float)
        return np.power(x, p) * np.asarray(family.value(np.power(x, p)))

    if isinstance(dist, TabulatedTail):
        if cut == math.inf:
            return 0.0
        tail_at_cut = float(dist.abs_tail(max(cut, dist.xs[0])))
        hi = dist.xs[-1] * 100
        grid = np.geomspace(max(cut, 1e-9), hi, 4000)
        gv = g(grid)
        tv = np.asarray(dist.abs_tail(grid))
        mids = 0.5 * (tv[1:] + tv[:-1])
        return float(g(np.array([cut]))[0] * tail_at_cut + np.sum(np.diff(gv) * mids))

    spec = dist
    if spec.is_discrete:
        v, pr = spec.atoms()
        av = np.abs(v)
        return float(np.sum(np.where(av > cut, pr * g(av), 0.0)))
    if cut == math.inf:
        return 0.0
    # analytic divergence screen for power tails
    if spec.kind in ("pareto", "symmetrized_pareto") and spec.beta <= p:
        return math.inf
    return spec._quad_expect(lambda x: np.where(np.abs(x) > cut, g(np.abs(x)), 0.0))


def uniform_integrability_trace(cells: Sequence, p: float,
                                family: SlowlyVaryingFamily,
                                k_grid: Sequence[float]) -> UITrace:
    """Trace of sup over cells of E(g(|X|) 1(g(|X|) > K)) for g(x)=x^p L(x^p).

    Nonincreasing in K by construction; 'tends to zero' means the final entry
    sits below 1e-8 or below 1e-3 times the initial entry.
    """
    if p <= 0:
        raise SpecError("weight exponent p must be positive")
    if not family.nondecreasing:
        raise SpecError("weight family must make x^p L(x^p) nondecreasing")
    dists = [_as_marginal_like(c) for c in cells]
    if not dists:
        raise SpecError("uniform integrability trace requires cells")
    ks = [float(k) for k in k_grid]
    if any(k < 0 for k in ks) or sorted(ks) != ks:
        raise SpecError("K grid must be nonnegative and sorted")
    values = []
    for K in ks:
        cut = _weight_threshold(p, family, K)
        values.append(max(_excess_weight_mean(d, p, family, cut) for d in dists))
    first = values[0] if values else 0.0
    last = values[-1] if values else 0.0
    tends = bool(last <= 1e-8 or (math.isfinite(first) and first > 0 and last <= 1e-3 * first))
    return UITrace(
        k_grid=tuple(ks),
        values=tuple(values),
        tends_to_zero=tends,
        weight_description=f"x^{p:g} * {family.describe()}(x^{p:g})",
    )
