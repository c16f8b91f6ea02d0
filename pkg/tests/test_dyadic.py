import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dyadicfields import (
    FieldModel,
    FieldSample,
    MarginalSpec,
    Modulation,
    SlowlyVaryingFamily,
    SpecError,
    TruncationLadder,
    clamp_truncate,
    dyadic_floor,
    ladder_increment,
    max_normalized_sum,
    prefix_sums,
    sample_field,
    telescoping_decompose,
)

LINEAR = TruncationLadder.power(1.0)


def _field(values) -> FieldSample:
    values = np.asarray(values, dtype=float)
    m = int(math.log2(values.shape[0]))
    n = int(math.log2(values.shape[1]))
    return FieldSample(m_exp=m, n_exp=n, values=values, master_seed=0, replicate_index=0)


# ---------------------------------------------------------------------------
# Dyadic floor
# ---------------------------------------------------------------------------


def test_dyadic_floor_examples():
    assert dyadic_floor(5, 1) == 4
    assert dyadic_floor(5, 3) == 0
    assert dyadic_floor(8, 2) == 8


@given(u=st.integers(0, 10**9), s=st.integers(0, 40))
def test_dyadic_floor_properties(u, s):
    f = dyadic_floor(u, s)
    assert f <= u < f + 2**s
    assert f % 2**s == 0
    assert dyadic_floor(f, s) == f


@given(u=st.integers(0, 10**9), s=st.integers(1, 40))
def test_dyadic_floor_nesting(u, s):
    lower = dyadic_floor(u, s - 1)
    upper = dyadic_floor(u, s)
    assert lower in (upper, upper + 2 ** (s - 1))


# ---------------------------------------------------------------------------
# Clamp and ladder increments
# ---------------------------------------------------------------------------


def test_clamp_examples():
    assert clamp_truncate(3.0, 2.0) == 2.0
    assert clamp_truncate(1.5, 2.0) == 1.5
    assert clamp_truncate(-5.0, 2.0, signed=True) == -2.0
    with pytest.raises(SpecError):
        clamp_truncate(-0.5, 2.0)
    with pytest.raises(SpecError):
        clamp_truncate(1.0, 0.0)


def test_ladder_increment_examples():
    assert ladder_increment(1.0, 2, LINEAR) == 0.0
    assert ladder_increment(3.0, 2, LINEAR) == 1.0
    assert ladder_increment(100.0, 2, LINEAR) == 2.0


@given(x=st.floats(0.0, 1e6), top=st.integers(1, 20))
@settings(max_examples=100, deadline=None)
def test_ladder_increment_telescopes(x, top):
    ladder = TruncationLadder.power(0.75)
    total = sum(ladder_increment(x, s, ladder) for s in range(1, top + 1))
    lv = ladder.levels(top)
    assert total + min(x, lv[0]) == pytest.approx(min(x, lv[top]), rel=1e-12, abs=1e-12)


@given(x=st.floats(0.0, 1e6), s=st.integers(1, 20))
@settings(max_examples=100, deadline=None)
def test_ladder_increment_bound(x, s):
    ladder = TruncationLadder.power(2 / 3)
    inc = ladder_increment(x, s, ladder)
    lv = ladder.levels(s)
    assert 0.0 <= inc
    assert inc <= lv[s] * (1.0 if x > lv[s - 1] else 0.0) + 1e-12


def test_power_ladder_exact_levels():
    alpha = 2 / 3
    ladder = TruncationLadder.power(alpha)
    lv = ladder.levels(9)
    assert np.all(np.diff(lv) > 0)
    for s in range(10):
        assert lv[s] == 2.0 ** (s * alpha)
    assert float(ladder.value(27)) == pytest.approx(27**alpha)


def test_conjugate_ladder_envelope_monotone():
    fam = SlowlyVaryingFamily.log_power(1.0)
    ladder = TruncationLadder.power_with_conjugate(0.6, fam)
    lv = ladder.levels(16)
    assert np.all(np.diff(lv) >= 0)
    assert np.all(lv > 0)


# ---------------------------------------------------------------------------
# Prefix sums
# ---------------------------------------------------------------------------


def test_prefix_all_zero():
    table = prefix_sums(np.zeros((4, 4)), np.zeros((4, 4)))
    assert np.all(table.table == 0)


def test_prefix_direct_sum():
    table = prefix_sums(np.array([[1.0, 2.0], [3.0, 4.0]]), 0.0)
    assert table.value(2, 2) == 10.0
    assert table.value(1, 2) == 3.0


def test_prefix_against_double_loop_oracle():
    rng = np.random.default_rng(3)
    vals = rng.normal(size=(8, 8))
    cent = rng.normal(size=(8, 8)) * 0.1
    table = prefix_sums(vals, cent)
    centered = vals - cent
    for u, v in rng.integers(1, 9, size=(20, 2)):
        direct = sum(centered[i, j] for i in range(u) for j in range(v))
        assert table.value(u, v) == pytest.approx(direct, abs=1e-10)


def test_prefix_rectangle_identity():
    rng = np.random.default_rng(4)
    vals = rng.normal(size=(8, 8))
    table = prefix_sums(vals, 0.0)
    t = table.table
    for u in range(1, 9):
        for v in range(1, 9):
            recon = t[u, v] - t[u - 1, v] - t[u, v - 1] + t[u - 1, v - 1]
            assert float(recon) == pytest.approx(vals[u - 1, v - 1], abs=1e-12)


def test_prefix_dimension_mismatch():
    with pytest.raises(SpecError):
        prefix_sums(np.zeros((4, 4)), np.zeros((4, 2)))


# ---------------------------------------------------------------------------
# Max normalized sum
# ---------------------------------------------------------------------------


def test_max_normalized_sum_trivial_cases():
    assert max_normalized_sum(np.zeros((4, 4)), 0.0, 1.0) == 0.0
    single = np.array([[3.0]])
    assert max_normalized_sum(single, 1.0, 2.0) == pytest.approx(1.0)


def test_max_normalized_sum_brute_force():
    rng = np.random.default_rng(5)
    vals = rng.integers(-5, 6, size=(4, 4)).astype(float)
    cent = np.full((4, 4), 0.25)
    fast = max_normalized_sum(vals, cent, 2.0)
    centered = vals - cent
    brute = max(abs(centered[:u, :v].sum()) for u in range(1, 5) for v in range(1, 5))
    assert fast == pytest.approx(brute / 2.0, abs=1e-12)


def test_max_normalized_sum_strict_vs_closed():
    rng = np.random.default_rng(6)
    vals = rng.normal(size=(8, 8))
    closed = max_normalized_sum(vals, 0.0, 1.0, mode="closed")
    strict = max_normalized_sum(vals, 0.0, 1.0, mode="strict")
    assert strict <= closed + 1e-15
    centered = vals
    brute_strict = max(abs(centered[:u, :v].sum()) for u in range(1, 8) for v in range(1, 8))
    assert strict == pytest.approx(brute_strict, abs=1e-10)


# ---------------------------------------------------------------------------
# Telescoping decomposition
# ---------------------------------------------------------------------------


def test_constant_field_report_all_zero():
    model = FieldModel(marginal=MarginalSpec.discrete_table([2.5], [1.0]))
    field = _field(np.full((4, 4), 2.5))
    rep = telescoping_decompose(field, model, LINEAR)
    assert rep.max_abs_centered_sum == 0.0
    assert rep.identity_residual == 0.0
    assert all(t == 0.0 for t in rep.i_terms)
    assert all(t == 0.0 for t in rep.r_terms)
    assert rep.deterministic_tail >= 0.0


def test_hand_decomposition_2x2():
    # frozen oracle: values [[1,2],[3,4]], uniform{1,2,3,4} means, b(n)=n
    # S(1,1) = -1.5, identity terms (0, -0.75, -0.75, 0)
    model = FieldModel(marginal=MarginalSpec.discrete_table([1, 2, 3, 4], [0.25] * 4))
    field = _field([[1.0, 2.0], [3.0, 4.0]])
    rep = telescoping_decompose(field, model, LINEAR)
    assert rep.max_abs_centered_sum == pytest.approx(1.5, abs=1e-12)
    assert rep.i_terms[0] == pytest.approx(0.0, abs=1e-12)
    assert rep.i_terms[1] == pytest.approx(0.75, abs=1e-12)
    assert rep.i_terms[2] == pytest.approx(0.75, abs=1e-12)
    assert rep.i_terms[3] == pytest.approx(0.0, abs=1e-12)
    assert rep.identity_residual <= 1e-12
    assert rep.bound_slack >= 0.0


def test_identity_residual_on_mixed_models(mixed_models):
    ladder = TruncationLadder.power(2 / 3)
    for i, model in enumerate(mixed_models):
        field = sample_field(model, 3, 4, 99, i)
        rep = telescoping_decompose(field, model, ladder)
        assert rep.identity_residual <= 1e-9


def test_pathwise_bound_bernoulli(bernoulli01_model):
    ladder = TruncationLadder.power(2 / 3)
    for rep_idx in range(60):
        field = sample_field(bernoulli01_model, 4, 4, 17, rep_idx)
        rep = telescoping_decompose(field, bernoulli01_model, ladder)
        assert rep.bound_slack >= -1e-9 * rep.bound_scale


def test_pathwise_bound_signed_and_modulated():
    ladder = TruncationLadder.power(0.8)
    models = [
        FieldModel(marginal=MarginalSpec.rademacher()),
        FieldModel(marginal=MarginalSpec.symmetrized_pareto(2.0)),
        FieldModel(marginal=MarginalSpec.pareto(3.0),
                   modulation=Modulation(preset="checkerboard", c_lo=0.5, c_hi=2.0)),
    ]
    for model in models:
        for rep_idx in range(25):
            field = sample_field(model, 3, 3, 23, rep_idx)
            rep = telescoping_decompose(field, model, ladder)
            assert rep.bound_slack >= -1e-9 * rep.bound_scale
            assert rep.identity_residual <= 1e-9


def test_nonnegative_mode_rejects_signed(rademacher_model):
    field = sample_field(rademacher_model, 2, 2, 1, 0)
    with pytest.raises(SpecError, match="negative values"):
        telescoping_decompose(field, rademacher_model, LINEAR, mode="nonnegative")


def test_dims_must_match(bernoulli01_model):
    field = sample_field(bernoulli01_model, 2, 2, 1, 0)
    with pytest.raises(SpecError):
        telescoping_decompose(field, bernoulli01_model, LINEAR, m_exp=3, n_exp=2)


def test_requires_2x2(bernoulli01_model):
    field = sample_field(bernoulli01_model, 0, 3, 1, 0)
    with pytest.raises(SpecError):
        telescoping_decompose(field, bernoulli01_model, LINEAR)


def test_strict_max_below_closed(pareto3_model):
    ladder = TruncationLadder.power(2 / 3)
    field = sample_field(pareto3_model, 3, 3, 2, 0)
    rep = telescoping_decompose(field, pareto3_model, ladder)
    assert rep.max_abs_centered_sum <= rep.max_abs_centered_sum_closed + 1e-12


def test_csv_round_trip_fields(bernoulli01_model):
    from dyadicfields import DecompositionReport

    field = sample_field(bernoulli01_model, 2, 2, 1, 0)
    rep = telescoping_decompose(field, bernoulli01_model, LINEAR)
    row = rep.csv_row(0)
    assert len(row.split(",")) == len(DecompositionReport.CSV_HEADER.split(","))
    d = rep.to_json_dict()
    assert set(d) >= {"max_abs_centered_sum", "i_terms", "r_terms",
                      "deterministic_tail", "identity_residual", "bound_slack"}
