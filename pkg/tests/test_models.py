import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from dyadicfields import (
    DependenceSpec,
    FieldModel,
    FieldSample,
    MarginalSpec,
    Modulation,
    SpecError,
    dominator_model,
    sample_field,
    tail_prob,
    truncated_moment,
)

ALL_MARGINALS = [
    MarginalSpec.rademacher(),
    MarginalSpec.centered_bernoulli(0.3),
    MarginalSpec.pareto(2.0),
    MarginalSpec.exponential(1.5),
    MarginalSpec.discrete_table([-1.0, 0.0, 2.0], [0.2, 0.5, 0.3]),
    MarginalSpec.symmetrized_pareto(2.5),
]


# ---------------------------------------------------------------------------
# Spec validation
# ---------------------------------------------------------------------------


def test_discrete_table_prob_validation():
    with pytest.raises(SpecError):
        MarginalSpec.discrete_table([0.0, 1.0], [0.6, 0.6])
    with pytest.raises(SpecError):
        MarginalSpec.discrete_table([0.0, 1.0], [-0.1, 1.1])


def test_parameter_domain_validation():
    with pytest.raises(SpecError):
        MarginalSpec.pareto(0.0)
    with pytest.raises(SpecError):
        MarginalSpec.exponential(-1.0)
    with pytest.raises(SpecError):
        MarginalSpec.rademacher(scale=0.0)


def test_copula_psd_validation():
    # radius 1 bound: |rho| <= 1/8
    DependenceSpec.gaussian_copula_negative(-0.125, radius=1)
    with pytest.raises(SpecError, match="positive semidefinite"):
        DependenceSpec.gaussian_copula_negative(-0.2, radius=1)
    with pytest.raises(SpecError):
        DependenceSpec.gaussian_copula_negative(0.1, radius=1)


def test_walsh_requires_rademacher():
    with pytest.raises(SpecError, match="rademacher"):
        FieldModel(marginal=MarginalSpec.pareto(2.0),
                   dependence=DependenceSpec.pairwise_walsh(2))


def test_modulation_bounds():
    with pytest.raises(SpecError):
        Modulation(preset="checkerboard", c_lo=0.0, c_hi=1.0)
    with pytest.raises(SpecError):
        Modulation(preset="checkerboard", c_lo=2.0, c_hi=1.0)
    with pytest.raises(SpecError):
        Modulation(preset="spiral", c_lo=1.0, c_hi=2.0)


# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------


def test_single_cell_rademacher_support():
    s = sample_field(FieldModel(marginal=MarginalSpec.rademacher()), 0, 0, 1, 0)
    assert s.values.shape == (1, 1)
    assert s.values[0, 0] in (-1.0, 1.0)


def test_pareto_support(pareto3_model):
    s = sample_field(pareto3_model, 4, 4, 9, 0)
    assert np.all(s.values >= 1.0)


def test_bitwise_determinism(mixed_models):
    for i, model in enumerate(mixed_models):
        a = sample_field(model, 3, 2, 1234, i)
        b = sample_field(model, 3, 2, 1234, i)
        assert np.array_equal(a.values, b.values)
        c = sample_field(model, 3, 2, 1234, i + 1)
        assert not np.array_equal(a.values, c.values)


def test_replicates_order_insensitive(rademacher_model):
    # stream depends on the replicate index, not on sampling order
    later_first = sample_field(rademacher_model, 2, 2, 7, 5).values.copy()
    _ = sample_field(rademacher_model, 2, 2, 7, 0)
    again = sample_field(rademacher_model, 2, 2, 7, 5).values
    assert np.array_equal(later_first, again)


def test_field_sample_shape_invariant():
    with pytest.raises(SpecError):
        FieldSample(m_exp=1, n_exp=1, values=np.zeros((2, 3)),
                    master_seed=0, replicate_index=0)


def test_walsh_triple_structure():
    # 1x3 tile with g=2: cells are (e1, e2, e1*e2); oracle enumerates the
    # four generator outcomes: means 0, pairwise covariances 0
    triples = [(g1, g2, g1 * g2) for g1 in (-1, 1) for g2 in (-1, 1)]
    arr = np.array(triples, dtype=float)
    assert np.allclose(arr.mean(axis=0), 0.0)
    for i, j in itertools.combinations(range(3), 2):
        assert abs(np.mean(arr[:, i] * arr[:, j])) == 0.0

    model = FieldModel(marginal=MarginalSpec.rademacher(),
                       dependence=DependenceSpec.pairwise_walsh(2))
    seen = set()
    for rep in range(400):
        row = sample_field(model, 0, 2, 77, rep).values.reshape(-1)[:3]
        assert set(np.unique(row)).issubset({-1.0, 1.0})
        assert row[2] == row[0] * row[1]
        seen.add(tuple(row[:2]))
    assert seen == {(-1.0, -1.0), (-1.0, 1.0), (1.0, -1.0), (1.0, 1.0)}


def test_walsh_pairwise_frequencies():
    # each pair of distinct cells is jointly uniform over {-1,1}^2
    model = FieldModel(marginal=MarginalSpec.rademacher(),
                       dependence=DependenceSpec.pairwise_walsh(3))
    n = 4000
    vals = np.array([sample_field(model, 0, 3, 5, rep).values.reshape(-1)
                     for rep in range(n)])
    for i, j in itertools.combinations(range(7), 2):
        for si, sj in itertools.product((-1.0, 1.0), repeat=2):
            freq = np.mean((vals[:, i] == si) & (vals[:, j] == sj))
            assert abs(freq - 0.25) < 0.035


def test_copula_negative_neighbor_correlation():
    model = FieldModel(marginal=MarginalSpec.exponential(1.0),
                       dependence=DependenceSpec.gaussian_copula_negative(-0.12, radius=1))
    vals = np.array([sample_field(model, 3, 3, 11, rep).values for rep in range(1500)])
    mean = vals.mean(axis=0)
    horiz = np.mean((vals[:, :, :-1] - mean[:, :-1]) * (vals[:, :, 1:] - mean[:, 1:]))
    assert horiz < 0.0


def test_moving_average_positive_correlation():
    model = FieldModel(marginal=MarginalSpec.rademacher(),
                       dependence=DependenceSpec.moving_average(3))
    vals = np.array([sample_field(model, 3, 3, 11, rep).values for rep in range(800)])
    horiz = np.mean(vals[:, :, :-1] * vals[:, :, 1:])
    assert horiz > 0.1


def _ks_distance(spec: MarginalSpec, samples: np.ndarray) -> float:
    if spec.is_discrete:
        v, _ = spec.atoms()
        dist = 0.0
        n = samples.size
        for x in v:
            dist = max(dist, abs(np.mean(samples <= x) - float(spec.cdf(x))))
            dist = max(dist, abs(np.mean(samples < x) - float(spec.lower_tail(x))))
        return dist
    return float(stats.kstest(samples, lambda x: np.asarray(spec.cdf(x))).statistic)


@pytest.mark.parametrize("spec", ALL_MARGINALS, ids=lambda s: s.kind)
def test_marginal_ks_distance(spec):
    model = FieldModel(marginal=spec)
    samples = sample_field(model, 9, 9, 2024, 0).values.reshape(-1)[:100_000]
    assert _ks_distance(spec, samples) < 0.01


def test_copula_marginal_exactness():
    # the copula transform must leave marginals exact, across replicates
    spec = MarginalSpec.pareto(2.0)
    model = FieldModel(marginal=spec,
                       dependence=DependenceSpec.gaussian_copula_negative(-0.1, 1))
    cell = np.array([sample_field(model, 1, 1, 3, rep).values[0, 0]
                     for rep in range(20_000)])
    assert _ks_distance(spec, cell) < 0.02


# ---------------------------------------------------------------------------
# Exact tails and moments
# ---------------------------------------------------------------------------


def test_tail_prob_examples(pareto3_model):
    pareto2 = FieldModel(marginal=MarginalSpec.pareto(2.0))
    assert tail_prob(pareto2, (1, 1), 10.0) == pytest.approx(0.01, abs=1e-15)
    rad = FieldModel(marginal=MarginalSpec.rademacher())
    assert tail_prob(rad, (1, 1), 0.5) == pytest.approx(0.5, abs=1e-15)
    cb = FieldModel(marginal=MarginalSpec.centered_bernoulli(0.3))
    assert tail_prob(cb, (1, 1), -1e12) == pytest.approx(1.0, abs=1e-15)


@pytest.mark.parametrize("spec", ALL_MARGINALS, ids=lambda s: s.kind)
def test_tail_monotone_and_right_continuous(spec):
    xs = np.linspace(-6.0, 8.0, 200)
    tails = np.asarray(spec.upper_tail(xs))
    assert np.all(np.diff(tails) <= 1e-12)
    assert np.all((tails >= 0) & (tails <= 1))
    if spec.is_discrete:
        v, p = spec.atoms()
        for atom, mass in zip(v, p):
            right = float(spec.upper_tail(atom + 1e-9))
            at = float(spec.upper_tail(atom))
            assert at == pytest.approx(right, abs=1e-9)
            assert float(spec.upper_tail(atom - 1e-9)) == pytest.approx(at + mass, abs=1e-9)


def test_truncated_moment_examples():
    rad = FieldModel(marginal=MarginalSpec.rademacher())
    assert truncated_moment(rad, (1, 1), 2.0, 0.5) == 0.0
    assert truncated_moment(rad, (1, 1), 2.0, 2.0) == 1.0
    par = FieldModel(marginal=MarginalSpec.pareto(3.0))
    assert truncated_moment(par, (1, 1), 2.0, 4.0) == pytest.approx(2.25, abs=1e-12)


@pytest.mark.parametrize("spec", [MarginalSpec.pareto(2.5), MarginalSpec.exponential(0.7),
                                  MarginalSpec.symmetrized_pareto(1.8)],
                         ids=lambda s: s.kind)
@pytest.mark.parametrize("r,a", [(1.0, 2.0), (2.0, 5.0), (1.7, 3.3)])
def test_truncated_moment_quadrature_crosscheck(spec, r, a):
    # closed forms against direct quadrature of |x|^r over {|x| <= a}
    exact = float(spec.abs_truncated_moment(r, a))
    quad = spec._quad_expect(lambda x: np.abs(x) ** r * (np.abs(x) <= a))
    assert exact == pytest.approx(quad, abs=1e-8)


@given(a1=st.floats(0.1, 50.0), a2=st.floats(0.1, 50.0))
@settings(max_examples=60, deadline=None)
def test_truncated_moment_monotone_in_a(a1, a2):
    spec = MarginalSpec.pareto(2.0)
    lo, hi = sorted((a1, a2))
    assert float(spec.abs_truncated_moment(1.5, lo)) <= float(
        spec.abs_truncated_moment(1.5, hi)) + 1e-12


def test_clamp_moment_matches_sampling():
    spec = MarginalSpec.symmetrized_pareto(2.2)
    model = FieldModel(marginal=spec)
    vals = sample_field(model, 8, 8, 5, 0).values.reshape(-1)
    for b in (0.5, 1.5, 4.0):
        emp = np.mean(np.minimum(np.maximum(vals, 0.0), b))
        assert emp == pytest.approx(float(spec.pos_clamp_pow(1.0, b, sign=1)), abs=0.02)
        emp_neg = np.mean(np.minimum(np.maximum(-vals, 0.0), b))
        assert emp_neg == pytest.approx(float(spec.pos_clamp_pow(1.0, b, sign=-1)), abs=0.02)


def test_excess_mean_closed_forms():
    par = MarginalSpec.pareto(3.0)
    # E(X 1(X > b)) = 1.5 b^-2 for b >= 1
    assert par.excess_abs_mean(2.0) == pytest.approx(1.5 * 2.0**-2, abs=1e-12)
    assert MarginalSpec.pareto(0.8).excess_abs_mean(2.0) == math.inf
    expo = MarginalSpec.exponential(2.0)
    val, _ = integrate.quad(lambda x: x * 2.0 * math.exp(-2.0 * x), 1.0, np.inf)
    assert expo.excess_abs_mean(1.0) == pytest.approx(val, abs=1e-10)


def test_shifted_marginal_uses_quadrature():
    spec = MarginalSpec.pareto(3.0, shift=1.0)
    direct, _ = integrate.quad(
        lambda x: abs(x + 1.0) ** 2 * (abs(x + 1.0) <= 4.0) * 3.0 * x**-4.0, 1.0, np.inf)
    assert float(spec.abs_truncated_moment(2.0, 4.0)) == pytest.approx(direct, abs=1e-8)


def test_mean_requirements():
    assert MarginalSpec.pareto(2.0).mean() == pytest.approx(2.0)
    assert MarginalSpec.symmetrized_pareto(1.2).mean() == 0.0
    with pytest.raises(SpecError):
        MarginalSpec.pareto(1.0).mean()
    with pytest.raises(SpecError):
        MarginalSpec.symmetrized_pareto(0.9).mean()


def test_modulated_cell_distribution():
    model = FieldModel(marginal=MarginalSpec.pareto(2.0),
                       modulation=Modulation(preset="checkerboard", c_lo=0.5, c_hi=2.0))
    # (1,1) is a c_lo cell, (1,2) a c_hi cell
    assert tail_prob(model, (1, 1), 1.0) == pytest.approx(
        float(MarginalSpec.pareto(2.0, scale=0.5).upper_tail(1.0)))
    assert tail_prob(model, (1, 2), 3.0) == pytest.approx(
        float(MarginalSpec.pareto(2.0, scale=2.0).upper_tail(3.0)))


def test_modulated_cells_dominated_by_scaled_marginal():
    base = MarginalSpec.pareto(2.0)
    model = FieldModel(marginal=base,
                       modulation=Modulation(preset="radial", c_lo=0.5, c_hi=2.0))
    envelope = base.scaled_by(2.0)
    xs = np.geomspace(0.1, 1e4, 80)
    factors = model.modulation.distinct_factors(8, 8)
    for c in factors:
        cell = base.scaled_by(float(c))
        assert np.all(np.asarray(cell.abs_tail(xs)) <= np.asarray(envelope.abs_tail(xs)) + 1e-12)


# ---------------------------------------------------------------------------
# Dominating distribution
# ---------------------------------------------------------------------------


def test_dominator_single_model():
    spec = MarginalSpec.pareto(2.0)
    dom = dominator_model([spec])
    xs = np.geomspace(1.5, 1e5, 60)
    assert np.allclose(np.asarray(dom.abs_tail(xs)), np.asarray(spec.abs_tail(xs)), atol=1e-12)


def test_dominator_heavier_tail_wins():
    dom = dominator_model([MarginalSpec.pareto(2.0), MarginalSpec.pareto(3.0)])
    xs = np.geomspace(1.2, 1e4, 60)
    assert np.allclose(np.asarray(dom.abs_tail(xs)), xs**-2.0, atol=1e-12)


def test_dominator_modulated_family_is_scaled_tail():
    model = FieldModel(marginal=MarginalSpec.rademacher(),
                       modulation=Modulation(preset="checkerboard", c_lo=1.0, c_hi=2.0))
    dom = dominator_model([model])
    # tail of 2|X| with |X| = 1: one at x < 2, zero past it
    assert float(dom.abs_tail(1.9)) == pytest.approx(1.0, abs=1e-9)
    assert float(dom.abs_tail(2.1)) == pytest.approx(0.0, abs=1e-9)


def test_dominator_covers_every_input(mixed_models):
    cells = [MarginalSpec.pareto(2.0), MarginalSpec.exponential(0.5),
             MarginalSpec.rademacher(scale=3.0)]
    dom = dominator_model(cells)
    for spec in cells:
        tails = np.asarray(spec.abs_tail(dom.xs))
        assert np.all(dom.tails >= tails - 1e-12)


def test_dominator_empty_errors():
    with pytest.raises(SpecError):
        dominator_model([])


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def test_model_fragment_round_trip(mixed_models):
    for model in mixed_models:
        frag = model.to_fragment()
        back = FieldModel.from_fragment(frag)
        assert back == model


def test_fragment_unknown_fields_rejected():
    with pytest.raises(SpecError, match="unknown marginal"):
        MarginalSpec.from_fragment({"kind": "pareto", "beta": 2.0, "zeta": 1})
    with pytest.raises(SpecError, match="unknown"):
        FieldModel.from_fragment({"marginal": {"kind": "zeta"}})


def test_modulation_fragment_parsing():
    mod = Modulation.from_fragment("checkerboard(0.5,2)")
    assert mod == Modulation(preset="checkerboard", c_lo=0.5, c_hi=2.0)
    assert Modulation.from_fragment("none") is None
    with pytest.raises(SpecError):
        Modulation.from_fragment("checkerboard(0.5)")
