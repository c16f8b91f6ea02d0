"""Distribution specs, dependence structures, and reproducible field sampling.

A field model is a marginal distribution plus a dependence structure plus an
optional per-cell bounded scale modulation.  Every exact quantity the rest of
the toolkit needs (tail probabilities, truncated/clamped moments, means) is
computed here in closed form where one exists, with an adaptive-quadrature
fallback (absolute tolerance 1e-10) for shifted continuous marginals.

Sampling is a pure function of (model, dims, master seed, replicate index):
each replicate owns a counter-based Philox stream keyed by the seed pair, so
results are independent of execution order and thread count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
from scipy import integrate
from scipy.special import gamma as gamma_fn
from scipy.special import gammainc, ndtr

__all__ = [
    "MarginalSpec",
    "DependenceSpec",
    "Modulation",
    "FieldModel",
    "FieldSample",
    "TabulatedTail",
    "sample_field",
    "tail_prob",
    "truncated_moment",
    "dominator_model",
    "cell_distribution",
    "distinct_cell_distributions",
]

_QUAD_TOL = 1e-10

MARGINAL_KINDS = (
    "rademacher",
    "centered_bernoulli",
    "pareto",
    "exponential",
    "discrete_table",
    "symmetrized_pareto",
)

DEPENDENCE_KINDS = ("iid", "pairwise_walsh", "gaussian_copula_negative", "moving_average")


class SpecError(ValueError):
    """A model specification violates one of its invariants."""


# ---------------------------------------------------------------------------
# Marginal specifications
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MarginalSpec:
    """One-dimensional marginal: a base kind transformed by x -> scale*x + shift.

    Pareto is normalized to support [1, inf) with P(X0 > x) = x**-beta, which
    keeps every tail and truncated moment in closed form.
    """

    kind: str
    prob: float | None = None          # centered_bernoulli
    beta: float | None = None          # pareto / symmetrized_pareto tail index
    rate: float | None = None          # exponential
    values: tuple[float, ...] | None = None   # discrete_table
    probs: tuple[float, ...] | None = None
    shift: float = 0.0
    scale: float = 1.0

    def __post_init__(self) -> None:
        if self.kind not in MARGINAL_KINDS:
            raise SpecError(f"unknown marginal kind {self.kind!r}")
        if self.scale <= 0:
            raise SpecError("marginal scale must be positive")
        if self.kind == "centered_bernoulli":
            if self.prob is None or not 0 < self.prob < 1:
                raise SpecError("centered_bernoulli requires prob in (0, 1)")
        if self.kind in ("pareto", "symmetrized_pareto"):
            if self.beta is None or self.beta <= 0:
                raise SpecError("pareto tail index beta must be > 0")
        if self.kind == "exponential":
            if self.rate is None or self.rate <= 0:
                raise SpecError("exponential rate must be > 0")
        if self.kind == "discrete_table":
            if not self.values or not self.probs or len(self.values) != len(self.probs):
                raise SpecError("discrete_table requires matching values and probs")
            p = np.asarray(self.probs, dtype=float)
            if np.any(p < 0):
                raise SpecError("discrete_table probabilities must be nonnegative")
            if abs(float(p.sum()) - 1.0) > 1e-12:
                raise SpecError("discrete_table probabilities must sum to 1 (tol 1e-12)")
            order = np.argsort(np.asarray(self.values, dtype=float), kind="stable")
            object.__setattr__(self, "values", tuple(float(v) for v in np.asarray(self.values, float)[order]))
            object.__setattr__(self, "probs", tuple(float(q) for q in p[order]))

    # -- constructors ------------------------------------------------------

    @classmethod
    def rademacher(cls, shift: float = 0.0, scale: float = 1.0) -> "MarginalSpec":
        return cls(kind="rademacher", shift=shift, scale=scale)

    @classmethod
    def centered_bernoulli(cls, prob: float, shift: float = 0.0, scale: float = 1.0) -> "MarginalSpec":
        return cls(kind="centered_bernoulli", prob=prob, shift=shift, scale=scale)

    @classmethod
    def pareto(cls, beta: float, shift: float = 0.0, scale: float = 1.0) -> "MarginalSpec":
        return cls(kind="pareto", beta=beta, shift=shift, scale=scale)

    @classmethod
    def exponential(cls, rate: float, shift: float = 0.0, scale: float = 1.0) -> "MarginalSpec":
        return cls(kind="exponential", rate=rate, shift=shift, scale=scale)

    @classmethod
    def discrete_table(cls, values: Sequence[float], probs: Sequence[float],
                       shift: float = 0.0, scale: float = 1.0) -> "MarginalSpec":
        return cls(kind="discrete_table", values=tuple(values), probs=tuple(probs),
                   shift=shift, scale=scale)

    @classmethod
    def symmetrized_pareto(cls, beta: float, shift: float = 0.0, scale: float = 1.0) -> "MarginalSpec":
        return cls(kind="symmetrized_pareto", beta=beta, shift=shift, scale=scale)

    # -- structural helpers --------------------------------------------------

    @property
    def is_discrete(self) -> bool:
        return self.kind in ("rademacher", "centered_bernoulli", "discrete_table")

    def scaled_by(self, factor: float) -> "MarginalSpec":
        """Distribution of factor * X (modulation folds into shift and scale)."""
        if factor <= 0 or not math.isfinite(factor):
            raise SpecError("scale factor must be positive and finite")
        return replace(self, shift=self.shift * factor, scale=self.scale * factor)

    def atoms(self) -> tuple[np.ndarray, np.ndarray]:
        """Support points and probabilities of a discrete marginal (value-sorted)."""
        if self.kind == "rademacher":
            base_v, base_p = np.array([-1.0, 1.0]), np.array([0.5, 0.5])
        elif self.kind == "centered_bernoulli":
            p = float(self.prob)
            base_v, base_p = np.array([-p, 1.0 - p]), np.array([1.0 - p, p])
        elif self.kind == "discrete_table":
            base_v, base_p = np.asarray(self.values, float), np.asarray(self.probs, float)
        else:
            raise SpecError(f"{self.kind} has no atoms")
        v = self.scale * base_v + self.shift
        order = np.argsort(v, kind="stable")
        return v[order], base_p[order]

    def abs_bound(self) -> float:
        """sup |X|, inf for unbounded support."""
        if self.is_discrete:
            v, _ = self.atoms()
            return float(np.max(np.abs(v)))
        return math.inf

    # -- exact probabilities -------------------------------------------------

    def upper_tail(self, x) -> np.ndarray | float:
        """P(X > x), vectorized, nonincreasing and right-continuous in x."""
        x = np.asarray(x, dtype=float)
        if self.is_discrete:
            v, p = self.atoms()
            out = np.sum(np.where(v[:, None] > x[None, ...].reshape(1, -1), p[:, None], 0.0), axis=0)
            return out.reshape(x.shape) if x.shape else float(out[0])
        z = (x - self.shift) / self.scale
        if self.kind == "pareto":
            t = np.where(z < 1.0, 1.0, np.power(np.maximum(z, 1.0), -self.beta))
        elif self.kind == "exponential":
            t = np.exp(-self.rate * np.maximum(z, 0.0))
        else:  # symmetrized_pareto
            t = np.where(
                z < -1.0,
                1.0 - 0.5 * np.power(np.maximum(-z, 1.0), -self.beta),
                np.where(z < 1.0, 0.5, 0.5 * np.power(np.maximum(z, 1.0), -self.beta)),
            )
        return t if t.shape else float(t)

    def lower_tail(self, x) -> np.ndarray | float:
        """P(X < x), vectorized (strict inequality)."""
        x = np.asarray(x, dtype=float)
        if self.is_discrete:
            v, p = self.atoms()
            out = np.sum(np.where(v[:, None] < x[None, ...].reshape(1, -1), p[:, None], 0.0), axis=0)
            return out.reshape(x.shape) if x.shape else float(out[0])
        t = 1.0 - self.upper_tail(x)  # continuous: no atom at x
        return t

    def abs_tail(self, x) -> np.ndarray | float:
        """P(|X| > x), vectorized."""
        x = np.asarray(x, dtype=float)
        if self.is_discrete:
            v, p = self.atoms()
            out = np.sum(np.where(np.abs(v)[:, None] > x[None, ...].reshape(1, -1), p[:, None], 0.0), axis=0)
            return out.reshape(x.shape) if x.shape else float(out[0])
        t = np.asarray(self.upper_tail(x)) + np.asarray(self.lower_tail(-x))
        t = np.where(x < 0, 1.0, np.clip(t, 0.0, 1.0))
        return t if t.shape else float(t)

    def cdf(self, x) -> np.ndarray | float:
        """P(X <= x)."""
        x = np.asarray(x, dtype=float)
        t = 1.0 - np.asarray(self.upper_tail(x))
        return t if t.shape else float(t)

    # -- exact moments ---------------------------------------------------------

    def mean(self) -> float:
        """E X; raises when the mean does not exist or is infinite."""
        if self.is_discrete:
            v, p = self.atoms()
            return float(np.dot(v, p))
        if self.kind == "pareto":
            if self.beta <= 1:
                raise SpecError(f"pareto beta={self.beta} has no finite mean")
            return self.shift + self.scale * self.beta / (self.beta - 1.0)
        if self.kind == "exponential":
            return self.shift + self.scale / self.rate
        # symmetrized_pareto: symmetric about shift, needs E|X| < inf
        if self.beta <= 1:
            raise SpecError(f"symmetrized pareto beta={self.beta} is not integrable")
        return self.shift

    def abs_truncated_moment(self, r: float, a) -> np.ndarray | float:
        """E(|X|^r 1(|X| <= a)) for r > 0, vectorized over a > 0."""
        a = np.asarray(a, dtype=float)
        if r <= 0 or np.any(a <= 0):
            raise SpecError("truncated moment requires r > 0 and a > 0")
        if self.is_discrete:
            v, p = self.atoms()
            av = np.abs(v)
            out = np.sum(np.where(av[:, None] <= a.reshape(1, -1),
                                  (p * av**r)[:, None], 0.0), axis=0)
            return out.reshape(a.shape) if a.shape else float(out[0])
        if self.shift == 0.0:
            s, arg = self.scale, a.reshape(-1) / self.scale
            if self.kind in ("pareto", "symmetrized_pareto"):
                vals = s**r * _pareto_trunc_abs_pow(self.beta, r, arg)
            else:
                vals = s**r * _expon_trunc_pow(self.rate, r, arg)
            return vals.reshape(a.shape) if a.shape else float(vals[0])
        out = np.array([
            self._quad_expect(lambda x, aa=aa: np.abs(x) ** r * (np.abs(x) <= aa))
            for aa in a.reshape(-1)
        ])
        return out.reshape(a.shape) if a.shape else float(out[0])

    def signed_truncated_mean(self, a) -> np.ndarray | float:
        """E(X 1(|X| <= a)), vectorized over a > 0 (truncation-style centering)."""
        a = np.asarray(a, dtype=float)
        if np.any(a <= 0):
            raise SpecError("truncation level must be positive")
        if self.is_discrete:
            v, p = self.atoms()
            out = np.sum(np.where(np.abs(v)[:, None] <= a.reshape(1, -1),
                                  (p * v)[:, None], 0.0), axis=0)
            return out.reshape(a.shape) if a.shape else float(out[0])
        if self.shift == 0.0:
            if self.kind == "symmetrized_pareto":
                out = np.zeros_like(a)
                return out if out.shape else 0.0
            return self.abs_truncated_moment(1.0, a)  # nonnegative support
        out = np.array([
            self._quad_expect(lambda x, aa=aa: x * (np.abs(x) <= aa))
            for aa in a.reshape(-1)
        ])
        return out.reshape(a.shape) if a.shape else float(out[0])

    def pos_clamp_pow(self, r: float, b, sign: int = 1) -> np.ndarray | float:
        """E min((sign*X)^+, b)^r, vectorized over b >= 0.

        This is the r-th moment of the one-sided clamp at level b; the
        nonnegative truncation pipeline consumes it with sign=+1 and the
        negative-part pipeline with sign=-1.
        """
        b = np.asarray(b, dtype=float)
        if np.any(b < 0):
            raise SpecError("clamp level must be nonnegative")
        if self.is_discrete:
            v, p = self.atoms()
            y = np.maximum(sign * v, 0.0)
            out = np.sum(p[:, None] * np.minimum(y[:, None], b.reshape(1, -1)) ** r, axis=0)
            return out.reshape(b.shape) if b.shape else float(out[0])
        if self.shift == 0.0:
            s = self.scale
            arg = b.reshape(-1) / s
            if self.kind == "pareto":
                vals = s**r * _pareto_clamp_pow(self.beta, r, arg) if sign > 0 else np.zeros_like(arg)
            elif self.kind == "exponential":
                vals = s**r * _expon_clamp_pow(self.rate, r, arg) if sign > 0 else np.zeros_like(arg)
            else:  # symmetrized_pareto: X^+ is 0 w.p. 1/2, else Pareto(beta)
                vals = 0.5 * s**r * _pareto_clamp_pow(self.beta, r, arg)
            return vals.reshape(b.shape) if b.shape else float(vals[0])
        out = np.array([
            self._quad_expect(lambda x, bb=bb: np.minimum(np.maximum(sign * x, 0.0), bb) ** r)
            for bb in b.reshape(-1)
        ])
        return out.reshape(b.shape) if b.shape else float(out[0])

    def abs_clamp_pow(self, r: float, b) -> np.ndarray | float:
        """E min(|X|, b)^r, vectorized over b: moment of the three-level clamp's modulus."""
        b = np.asarray(b, dtype=float)
        if self.is_discrete:
            v, p = self.atoms()
            out = np.sum(p[:, None] * np.minimum(np.abs(v)[:, None], b.reshape(1, -1)) ** r, axis=0)
            return out.reshape(b.shape) if b.shape else float(out[0])
        if self.shift == 0.0:
            s = self.scale
            arg = b.reshape(-1) / s
            if self.kind in ("pareto", "symmetrized_pareto"):
                vals = s**r * _pareto_clamp_pow(self.beta, r, arg)
            else:
                vals = s**r * _expon_clamp_pow(self.rate, r, arg)
            return vals.reshape(b.shape) if b.shape else float(vals[0])
        out = np.array([
            self._quad_expect(lambda x, bb=bb: np.minimum(np.abs(x), bb) ** r)
            for bb in b.reshape(-1)
        ])
        return out.reshape(b.shape) if b.shape else float(out[0])

    def excess_abs_mean(self, b: float) -> float:
        """E(|X| 1(|X| > b)); may be math.inf for heavy tails."""
        if self.is_discrete:
            v, p = self.atoms()
            av = np.abs(v)
            return float(np.sum(np.where(av > b, p * av, 0.0)))
        if self.shift == 0.0:
            s = self.scale
            arg = max(b, 0.0) / s
            if self.kind in ("pareto", "symmetrized_pareto"):
                if self.beta <= 1:
                    return math.inf
                full = self.beta / (self.beta - 1.0)
                val = full if arg <= 1.0 else self.beta * arg ** (1.0 - self.beta) / (self.beta - 1.0)
                return s * val
            lam = self.rate
            return s * (arg + 1.0 / lam) * math.exp(-lam * arg)
        return self._quad_expect(lambda x: np.abs(x) * (np.abs(x) > b))

    # -- sampling ----------------------------------------------------------------

    def quantile(self, u) -> np.ndarray:
        """Inverse CDF, vectorized over u in [0, 1)."""
        u = np.asarray(u, dtype=float)
        if self.is_discrete:
            v, p = self.atoms()
            cum = np.cumsum(p)
            idx = np.searchsorted(cum, u, side="right")
            idx = np.clip(idx, 0, len(v) - 1)
            return v[idx] * 1.0
        if self.kind == "pareto":
            base = np.power(1.0 - u, -1.0 / self.beta)
        elif self.kind == "exponential":
            base = -np.log1p(-u) / self.rate
        else:  # symmetrized_pareto
            uu = np.clip(u, 2.0**-64, 1.0 - 2.0**-64)
            base = np.where(
                uu < 0.5,
                -np.power(2.0 * uu, -1.0 / self.beta),
                np.power(2.0 * (1.0 - uu), -1.0 / self.beta),
            )
        return self.scale * base + self.shift

    # -- quadrature fallback -----------------------------------------------------

    def _quad_expect(self, g: Callable[[np.ndarray], np.ndarray]) -> float:
        """Integrate g against the (shifted, scaled) density to 1e-10 abs tol."""
        s, d = self.scale, self.shift
        if self.kind == "pareto":
            dens = lambda x: self.beta * x ** (-self.beta - 1.0)
            pieces = [(1.0, math.inf)]
        elif self.kind == "exponential":
            dens = lambda x: self.rate * np.exp(-self.rate * x)
            pieces = [(0.0, math.inf)]
        elif self.kind == "symmetrized_pareto":
            dens = lambda x: 0.5 * self.beta * np.abs(x) ** (-self.beta - 1.0)
            pieces = [(-math.inf, -1.0), (1.0, math.inf)]
        else:
            raise SpecError("quadrature fallback only applies to continuous kinds")
        total = 0.0
        for lo, hi in pieces:
            val, _ = integrate.quad(
                lambda x: g(s * x + d) * dens(x), lo, hi,
                epsabs=_QUAD_TOL, epsrel=1e-12, limit=400,
            )
            total += val
        return total

    # -- serialization -------------------------------------------------------------

    def to_fragment(self) -> dict:
        frag: dict = {"kind": self.kind}
        for name in ("prob", "beta", "rate"):
            v = getattr(self, name)
            if v is not None:
                frag[name] = v
        if self.values is not None:
            frag["values"] = list(self.values)
            frag["probs"] = list(self.probs)
        if self.shift:
            frag["shift"] = self.shift
        if self.scale != 1.0:
            frag["scale"] = self.scale
        return frag

    @classmethod
    def from_fragment(cls, frag: dict) -> "MarginalSpec":
        known = {"kind", "prob", "beta", "rate", "values", "probs", "shift", "scale"}
        unknown = set(frag) - known
        if unknown:
            raise SpecError(f"unknown marginal fields: {sorted(unknown)}")
        kw = dict(frag)
        if "values" in kw:
            kw["values"] = tuple(kw["values"])
        if "probs" in kw:
            kw["probs"] = tuple(kw["probs"])
        return cls(**kw)


def _pareto_trunc_abs_pow(beta: float, r: float, a) -> np.ndarray:
    """E(X0^r 1(X0 <= a)) for base Pareto on [1, inf); vectorized over a."""
    a = np.asarray(a, dtype=float)
    aa = np.maximum(a, 1.0)
    if abs(r - beta) < 1e-14:
        core = beta * np.log(aa)
    else:
        core = beta * (np.power(aa, r - beta) - 1.0) / (r - beta)
    return np.where(a < 1.0, 0.0, core)


def _pareto_clamp_pow(beta: float, r: float, b) -> np.ndarray:
    """E min(X0, b)^r for base Pareto; vectorized over b >= 0."""
    b = np.asarray(b, dtype=float)
    bb = np.maximum(b, 1.0)
    return np.where(b <= 1.0, np.power(b, r),
                    _pareto_trunc_abs_pow(beta, r, bb) + np.power(bb, r - beta))


def _expon_trunc_pow(rate: float, r: float, a) -> np.ndarray:
    """E(X0^r 1(X0 <= a)) for base exponential; vectorized over a >= 0."""
    a = np.asarray(a, dtype=float)
    return gamma_fn(r + 1.0) * gammainc(r + 1.0, rate * np.maximum(a, 0.0)) / rate**r


def _expon_clamp_pow(rate: float, r: float, b) -> np.ndarray:
    b = np.asarray(b, dtype=float)
    bpos = np.maximum(b, 0.0)
    return _expon_trunc_pow(rate, r, bpos) + np.power(bpos, r) * np.exp(-rate * bpos)


# ---------------------------------------------------------------------------
# Dependence structures
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DependenceSpec:
    """How cells of the field relate: iid, pairwise-independent Walsh tiles,
    a negatively correlated Gaussian copula, or a positively dependent
    moving-average Gaussian copula."""

    kind: str
    generators: int | None = None      # pairwise_walsh
    correlation: float | None = None   # gaussian_copula_negative, <= 0
    radius: int | None = None          # Chebyshev neighborhood radius
    window: int | None = None          # moving_average

    def __post_init__(self) -> None:
        if self.kind not in DEPENDENCE_KINDS:
            raise SpecError(f"unknown dependence kind {self.kind!r}")
        if self.kind == "pairwise_walsh":
            if self.generators is None or self.generators < 1:
                raise SpecError("pairwise_walsh requires generators >= 1")
        if self.kind == "gaussian_copula_negative":
            if self.correlation is None or self.correlation > 0:
                raise SpecError("gaussian_copula_negative requires correlation <= 0")
            if self.radius is None or self.radius < 1:
                raise SpecError("gaussian_copula_negative requires radius >= 1")
            # Spectral-symbol bound: the stationary correlation operator with
            # constant rho on the Chebyshev ball is PSD on every grid iff
            # |rho| <= 1/((2R+1)^2 - 1).
            limit = 1.0 / ((2 * self.radius + 1) ** 2 - 1)
            if -self.correlation > limit + 1e-15:
                raise SpecError(
                    "correlation matrix not positive semidefinite: "
                    f"requires |rho| <= 1/((2*radius+1)^2-1) = {limit:.6g}"
                )
        if self.kind == "moving_average":
            if self.window is None or self.window < 1:
                raise SpecError("moving_average requires window >= 1")

    @classmethod
    def iid(cls) -> "DependenceSpec":
        return cls(kind="iid")

    @classmethod
    def pairwise_walsh(cls, generators: int) -> "DependenceSpec":
        return cls(kind="pairwise_walsh", generators=generators)

    @classmethod
    def gaussian_copula_negative(cls, correlation: float, radius: int = 1) -> "DependenceSpec":
        return cls(kind="gaussian_copula_negative", correlation=correlation, radius=radius)

    @classmethod
    def moving_average(cls, window: int) -> "DependenceSpec":
        return cls(kind="moving_average", window=window)

    def to_fragment(self) -> dict:
        frag: dict = {"kind": self.kind}
        for name in ("generators", "correlation", "radius", "window"):
            v = getattr(self, name)
            if v is not None:
                frag[name] = v
        return frag

    @classmethod
    def from_fragment(cls, frag: dict) -> "DependenceSpec":
        known = {"kind", "generators", "correlation", "radius", "window"}
        unknown = set(frag) - known
        if unknown:
            raise SpecError(f"unknown dependence fields: {sorted(unknown)}")
        return cls(**frag)


# ---------------------------------------------------------------------------
# Modulation presets
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Modulation:
    """Per-cell scale factor (i, j) -> [c_lo, c_hi], 0 < c_lo <= c_hi < inf.

    Presets: "checkerboard" alternates c_lo / c_hi on cell parity (cell (1,1)
    gets c_lo); "radial" ramps from c_lo at the origin toward c_hi with
    distance, never exceeding c_hi.
    """

    preset: str
    c_lo: float
    c_hi: float

    def __post_init__(self) -> None:
        if self.preset not in ("checkerboard", "radial"):
            raise SpecError(f"unknown modulation preset {self.preset!r}")
        if not (0 < self.c_lo <= self.c_hi < math.inf):
            raise SpecError("modulation requires 0 < c_lo <= c_hi < inf")

    def factor_grid(self, rows: int, cols: int) -> np.ndarray:
        i = np.arange(1, rows + 1)[:, None]
        j = np.arange(1, cols + 1)[None, :]
        if self.preset == "checkerboard":
            return np.where((i + j) % 2 == 0, self.c_lo, self.c_hi).astype(float)
        d = np.hypot(i - 1.0, j - 1.0) / 8.0
        return self.c_lo + (self.c_hi - self.c_lo) * d / (1.0 + d)

    def distinct_factors(self, rows: int, cols: int) -> np.ndarray:
        return np.unique(self.factor_grid(rows, cols))

    def to_fragment(self) -> str:
        return f"{self.preset}({self.c_lo:g},{self.c_hi:g})"

    @classmethod
    def from_fragment(cls, text: str) -> "Modulation | None":
        text = text.strip()
        if text == "none":
            return None
        if "(" not in text or not text.endswith(")"):
            raise SpecError(f"malformed modulation {text!r}: expected preset(c_lo,c_hi)")
        name, args = text[:-1].split("(", 1)
        parts = [p.strip() for p in args.split(",")]
        if len(parts) != 2:
            raise SpecError(f"modulation {text!r} needs exactly (c_lo, c_hi)")
        return cls(preset=name.strip(), c_lo=float(parts[0]), c_hi=float(parts[1]))


# ---------------------------------------------------------------------------
# Field model and samples
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FieldModel:
    """Marginal + dependence + optional bounded per-cell scale modulation."""

    marginal: MarginalSpec
    dependence: DependenceSpec = field(default_factory=DependenceSpec.iid)
    modulation: Modulation | None = None

    def __post_init__(self) -> None:
        if self.dependence.kind == "pairwise_walsh" and self.marginal.kind != "rademacher":
            raise SpecError("pairwise_walsh tiles generate Rademacher cells; "
                            "use a rademacher marginal (shift/scale allowed)")

    def factor_grid(self, rows: int, cols: int) -> np.ndarray:
        if self.modulation is None:
            return np.ones((rows, cols))
        return self.modulation.factor_grid(rows, cols)

    def to_fragment(self) -> dict:
        frag = {
            "marginal": self.marginal.to_fragment(),
            "dependence": self.dependence.to_fragment(),
            "modulation": self.modulation.to_fragment() if self.modulation else "none",
        }
        return frag

    @classmethod
    def from_fragment(cls, frag: dict) -> "FieldModel":
        known = {"marginal", "dependence", "modulation"}
        unknown = set(frag) - known
        if unknown:
            raise SpecError(f"unknown model fields: {sorted(unknown)}")
        if "marginal" not in frag:
            raise SpecError("model fragment requires a 'marginal' table")
        marginal = MarginalSpec.from_fragment(frag["marginal"])
        dependence = DependenceSpec.from_fragment(frag.get("dependence", {"kind": "iid"}))
        modulation = Modulation.from_fragment(frag.get("modulation", "none"))
        return cls(marginal=marginal, dependence=dependence, modulation=modulation)


@dataclass(frozen=True)
class FieldSample:
    """One realization on a 2^m_exp x 2^n_exp grid with its seed lineage."""

    m_exp: int
    n_exp: int
    values: np.ndarray
    master_seed: int
    replicate_index: int

    def __post_init__(self) -> None:
        rows, cols = 2**self.m_exp, 2**self.n_exp
        if self.values.shape != (rows, cols):
            raise SpecError(f"values shape {self.values.shape} != ({rows}, {cols})")
        self.values.setflags(write=False)

    @property
    def rows(self) -> int:
        return 2**self.m_exp

    @property
    def cols(self) -> int:
        return 2**self.n_exp


def _replicate_rng(master_seed: int, replicate: int) -> np.random.Generator:
    """Counter-based stream keyed by (seed, replicate): order-insensitive."""
    key = np.array([np.uint64(master_seed & (2**64 - 1)), np.uint64(replicate)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _walsh_values(rng: np.random.Generator, n_cells: int, g: int) -> np.ndarray:
    """Pairwise-independent +-1 cells: row-major tiles of 2^g - 1 Walsh products."""
    tile = 2**g - 1
    n_tiles = -(-n_cells // tile)
    gens = 2 * rng.integers(0, 2, size=(n_tiles, g)) - 1
    pos = np.arange(1, tile + 1)
    bits = (pos[:, None] >> np.arange(g)[None, :]) & 1    # (tile, g)
    prods = np.prod(np.where(bits[None, :, :] == 1, gens[:, None, :], 1), axis=2)
    return prods.reshape(-1)[:n_cells].astype(float)


def _copula_kernel_eigs(rows: int, cols: int, rho: float, radius: int) -> tuple[int, int, np.ndarray]:
    """Torus dims and FFT eigenvalues of the constant-rho Chebyshev-ball kernel."""
    t1 = max(rows + radius, 2 * radius + 1)
    t2 = max(cols + radius, 2 * radius + 1)
    di = np.minimum(np.arange(t1), t1 - np.arange(t1))[:, None]
    dj = np.minimum(np.arange(t2), t2 - np.arange(t2))[None, :]
    dist = np.maximum(di, dj)
    kernel = np.where(dist == 0, 1.0, np.where(dist <= radius, rho, 0.0))
    eigs = np.fft.fft2(kernel).real
    if eigs.min() < -1e-9:
        raise SpecError("circulant embedding produced a negative eigenvalue; "
                        "correlation matrix is not positive semidefinite")
    return t1, t2, np.maximum(eigs, 0.0)


def _gaussian_copula_normals(rng: np.random.Generator, rows: int, cols: int,
                             rho: float, radius: int) -> np.ndarray:
    t1, t2, eigs = _copula_kernel_eigs(rows, cols, rho, radius)
    a = rng.standard_normal((t1, t2))
    b = rng.standard_normal((t1, t2))
    spec = (a + 1j * b) * np.sqrt(eigs * t1 * t2)
    z = np.fft.ifft2(spec).real
    return z[:rows, :cols]


def _moving_average_normals(rng: np.random.Generator, rows: int, cols: int, w: int) -> np.ndarray:
    noise = rng.standard_normal((rows + w - 1, cols + w - 1))
    c = np.cumsum(np.cumsum(noise, axis=0), axis=1)
    c = np.pad(c, ((1, 0), (1, 0)))
    z = c[w:, w:] - c[:-w, w:] - c[w:, :-w] + c[:-w, :-w]
    return z / float(w)


def sample_field(model: FieldModel, m_exp: int, n_exp: int,
                 master_seed: int, replicate: int = 0) -> FieldSample:
    """Draw one field realization; deterministic in all arguments."""
    if m_exp < 0 or n_exp < 0:
        raise SpecError("grid exponents must be nonnegative")
    rows, cols = 2**m_exp, 2**n_exp
    rng = _replicate_rng(master_seed, replicate)
    dep = model.dependence
    if dep.kind == "iid":
        values = model.marginal.quantile(rng.random((rows, cols)))
    elif dep.kind == "pairwise_walsh":
        eps = _walsh_values(rng, rows * cols, dep.generators).reshape(rows, cols)
        values = model.marginal.scale * eps + model.marginal.shift
    elif dep.kind == "gaussian_copula_negative":
        z = _gaussian_copula_normals(rng, rows, cols, dep.correlation, dep.radius)
        values = model.marginal.quantile(np.clip(ndtr(z), 0.0, 1.0 - 2.0**-53))
    else:  # moving_average
        z = _moving_average_normals(rng, rows, cols, dep.window)
        values = model.marginal.quantile(np.clip(ndtr(z), 0.0, 1.0 - 2.0**-53))
    if model.modulation is not None:
        values = values * model.modulation.factor_grid(rows, cols)
    return FieldSample(m_exp=m_exp, n_exp=n_exp, values=np.ascontiguousarray(values),
                       master_seed=master_seed, replicate_index=replicate)


# ---------------------------------------------------------------------------
# Cell-level exact quantities
# ---------------------------------------------------------------------------


def cell_distribution(model: FieldModel, i: int, j: int) -> MarginalSpec:
    """Exact distribution of cell (i, j), 1-based: the marginal scaled by the
    modulation factor at that cell."""
    if model.modulation is None:
        return model.marginal
    if i < 1 or j < 1:
        raise SpecError("cell indices are 1-based")
    factor = float(model.modulation.factor_grid(i, j)[i - 1, j - 1])
    return model.marginal.scaled_by(factor)


def distinct_cell_distributions(model: FieldModel, rows: int, cols: int) -> list[MarginalSpec]:
    """Distinct cell distributions on a rows x cols grid (one element when
    there is no modulation)."""
    if model.modulation is None:
        return [model.marginal]
    return [model.marginal.scaled_by(float(c))
            for c in model.modulation.distinct_factors(rows, cols)]


def tail_prob(model: FieldModel, cell: tuple[int, int], x: float) -> float:
    """Exact P(X_cell > x) for the (possibly modulated) marginal at cell (i, j)."""
    return float(cell_distribution(model, *cell).upper_tail(x))


def truncated_moment(model: FieldModel, cell: tuple[int, int], r: float, a: float) -> float:
    """Exact E(|X_cell|^r 1(|X_cell| <= a)) for r > 0, a > 0."""
    return float(cell_distribution(model, *cell).abs_truncated_moment(r, a))


# ---------------------------------------------------------------------------
# Stochastic domination
# ---------------------------------------------------------------------------


class TabulatedTail:
    """A distribution given by its absolute-tail curve on a monotone x-grid.

    The curve is interpolated linearly in log-log space and extrapolated past
    the last grid point by the fitted power law (or cut to zero when the tail
    already vanished).  Used for the constructed pointwise-sup dominator.
    """

    def __init__(self, xs: np.ndarray, tails: np.ndarray):
        xs = np.asarray(xs, dtype=float)
        tails = np.asarray(tails, dtype=float)
        if xs.ndim != 1 or xs.size < 2 or np.any(np.diff(xs) <= 0) or xs[0] <= 0:
            raise SpecError("tabulated tail requires a strictly increasing positive x-grid")
        if np.any(tails < 0) or np.any(tails > 1):
            raise SpecError("tail values must lie in [0, 1]")
        if np.any(np.diff(tails) > 1e-15):
            raise SpecError("tail values must be nonincreasing")
        self.xs = xs
        self.tails = np.minimum.accumulate(np.clip(tails, 0.0, 1.0))

    def abs_tail(self, x) -> np.ndarray | float:
        x = np.asarray(x, dtype=float)
        flat = np.atleast_1d(x).astype(float)
        out = np.empty_like(flat)
        below = flat <= self.xs[0]
        above = flat >= self.xs[-1]
        mid = ~below & ~above
        out[below] = self.tails[0]
        out[above] = self._extrapolate(flat[above])
        if np.any(mid):
            pos = np.where(self.tails > 0, self.tails, np.nan)
            logt = np.log(pos)
            logx = np.log(self.xs)
            vals = np.interp(np.log(flat[mid]), logx, np.where(np.isnan(logt), -745.0, logt))
            interp = np.exp(vals)
            # past the last strictly positive point the tail is zero
            last_pos = self.xs[np.max(np.nonzero(self.tails > 0))] if np.any(self.tails > 0) else 0.0
            interp = np.where(flat[mid] > last_pos, 0.0, interp)
            out[mid] = interp
        return out.reshape(x.shape) if x.shape else float(out[0])

    def _extrapolate(self, x: np.ndarray) -> np.ndarray:
        pos = np.nonzero(self.tails > 0)[0]
        if pos.size == 0 or pos[-1] < self.tails.size - 1:
            return np.zeros_like(x)
        if pos.size < 2:
            return np.full_like(x, self.tails[-1])
        i0, i1 = pos[-2], pos[-1]
        slope = (math.log(self.tails[i1]) - math.log(self.tails[i0])) / (
            math.log(self.xs[i1]) - math.log(self.xs[i0]))
        slope = min(slope, 0.0)
        return self.tails[i1] * np.power(x / self.xs[i1], slope)

    def moment_of(self, g: Callable[[np.ndarray], np.ndarray], g_origin: float = 0.0,
                  x_max: float = 1e12, n_grid: int = 20000) -> float:
        """E g(|X|) for nondecreasing g with g(0)=g_origin, via the tail formula
        E g(|X|) = g(0) + integral of g'(x) tail(x) dx evaluated numerically."""
        hi = max(x_max, self.xs[-1] * 10)
        grid = np.geomspace(min(self.xs[0], 1e-8), hi, n_grid)
        grid = np.concatenate([[0.0], grid])
        gv = g(grid)
        tv = np.concatenate([[self.tails[0]], np.asarray(self.abs_tail(grid[1:]))])
        mids = 0.5 * (tv[1:] + tv[:-1])
        val = float(g_origin + np.sum(np.diff(gv) * mids))
        return val


def _tail_handle(obj) -> Callable[[np.ndarray], np.ndarray]:
    if isinstance(obj, TabulatedTail):
        return obj.abs_tail
    if isinstance(obj, MarginalSpec):
        return obj.abs_tail
    if isinstance(obj, FieldModel):
        if obj.modulation is not None:
            # the c_hi-scaled marginal dominates every modulated cell
            return obj.marginal.scaled_by(obj.modulation.c_hi).abs_tail
        return obj.marginal.abs_tail
    raise SpecError(f"cannot extract a tail from {type(obj).__name__}")


def _atom_abscissas(obj) -> np.ndarray:
    specs: list[MarginalSpec] = []
    if isinstance(obj, MarginalSpec):
        specs = [obj]
    elif isinstance(obj, FieldModel):
        specs = [obj.marginal if obj.modulation is None
                 else obj.marginal.scaled_by(obj.modulation.c_hi)]
    pts: list[float] = []
    for s in specs:
        if s.is_discrete:
            v, _ = s.atoms()
            pts.extend(float(a) for a in np.abs(v) if a > 0)
    return np.asarray(pts)


def dominator_model(cells: Sequence, n_grid: int = 512,
                    x_min: float = 1e-6, x_max: float = 1e9) -> TabulatedTail:
    """Pointwise-sup dominating distribution of a family of cells.

    Each entry may be a MarginalSpec, a FieldModel (a modulated model counts
    as its c_hi-scaled envelope), or a TabulatedTail.  The result's tail is
    sup over entries of P(|X_cell| > x) on a log-spaced grid augmented with
    the discrete atoms, so it dominates every input tail at every grid point.
    """
    if not cells:
        raise SpecError("dominator requires a nonempty cell family")
    handles = [_tail_handle(c) for c in cells]
    xs = np.geomspace(x_min, x_max, n_grid)
    extra = np.concatenate([_atom_abscissas(c) for c in cells]) if cells else np.array([])
    if extra.size:
        eps = 1e-12
        xs = np.unique(np.concatenate([xs, extra, extra * (1 - eps), extra * (1 + eps)]))
        xs = xs[xs > 0]
    sup = np.zeros_like(xs)
    for h in handles:
        sup = np.maximum(sup, np.asarray(h(xs), dtype=float))
    return TabulatedTail(xs, np.clip(sup, 0.0, 1.0))
