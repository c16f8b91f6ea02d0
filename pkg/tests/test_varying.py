import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dyadicfields import (
    FieldModel,
    MarginalSpec,
    Modulation,
    SlowlyVaryingFamily,
    SpecError,
    debruijn_conjugate,
    debruijn_residual,
    dominator_model,
    domination_check,
    log_nu,
    log_nu_sq,
    uniform_integrability_trace,
)


# ---------------------------------------------------------------------------
# Iterated logarithms
# ---------------------------------------------------------------------------


def test_log_nu_examples():
    assert float(log_nu(math.e, 1)) == pytest.approx(1.0, abs=1e-15)
    assert float(log_nu(0.0, 1)) == pytest.approx(math.log(2.0), abs=1e-15)
    assert float(log_nu(math.exp(math.e), 2)) == pytest.approx(math.e, abs=1e-12)


def test_log_nu_sq_examples():
    assert float(log_nu_sq(math.e, 1)) == pytest.approx(1.0, abs=1e-15)
    assert float(log_nu_sq(math.exp(math.e), 2)) == pytest.approx(math.e, abs=1e-12)


@given(x=st.floats(0.0, 1e12), nu=st.integers(1, 4))
@settings(max_examples=80, deadline=None)
def test_log_nu_sq_ratio_is_last_factor(x, nu):
    base = float(log_nu(x, nu))
    sq = float(log_nu_sq(x, nu))
    cur = x
    for _ in range(nu):
        cur = math.log(max(cur, 2.0))
    assert sq == pytest.approx(base * cur, rel=1e-12)


@given(x=st.floats(2.0, 1e12), nu=st.integers(2, 4))
@settings(max_examples=80, deadline=None)
def test_log_nu_factorization(x, nu):
    cur = x
    for _ in range(nu):
        cur = math.log(max(cur, 2.0))
    assert float(log_nu(x, nu)) == pytest.approx(float(log_nu(x, nu - 1)) * cur, rel=1e-12)


def test_positivity():
    xs = np.array([0.0, 0.5, 1.0, 2.0, 10.0, 1e8])
    for fam in (SlowlyVaryingFamily.constant(2.0), SlowlyVaryingFamily.log_power(1.5),
                SlowlyVaryingFamily.loglog_power(1.0), SlowlyVaryingFamily.iterated_log(3),
                SlowlyVaryingFamily.iterated_log_sq(2)):
        assert np.all(np.asarray(fam.value(xs)) > 0)


# ---------------------------------------------------------------------------
# De Bruijn conjugates
# ---------------------------------------------------------------------------


def test_conjugate_table():
    c = debruijn_conjugate(SlowlyVaryingFamily.constant(4.0))
    assert float(c.value(100.0)) == pytest.approx(0.25)
    lp = debruijn_conjugate(SlowlyVaryingFamily.log_power(2.0))
    x = 123.0
    assert float(lp.value(x)) == pytest.approx(1.0 / math.log(x) ** 2, rel=1e-12)
    ll = debruijn_conjugate(SlowlyVaryingFamily.loglog_power(1.0))
    assert float(ll.value(x)) == pytest.approx(1.0 / math.log(math.log(x)), rel=1e-12)


def test_conjugate_unsupported():
    with pytest.raises(SpecError, match="conjugate"):
        debruijn_conjugate(SlowlyVaryingFamily.iterated_log(2))


def test_residual_constant_identically_zero():
    fam = SlowlyVaryingFamily.constant(1.0)
    for k in range(1, 13):
        assert debruijn_residual(fam, 10.0**k) == 0.0


def test_residual_log_at_1e6():
    # frozen: |ln(1e6)/ln(1e6 ln(1e6)) - 1| = 0.15970704990541307
    fam = SlowlyVaryingFamily.log_power(1.0)
    assert debruijn_residual(fam, 1e6) == pytest.approx(0.15970704990541307, abs=1e-12)


@pytest.mark.parametrize("gamma", [1.0, 2.0])
def test_residual_decreasing_along_powers_of_ten(gamma):
    fam = SlowlyVaryingFamily.log_power(gamma)
    res = [debruijn_residual(fam, 10.0**k) for k in range(3, 13)]
    assert all(res[i + 1] <= res[i] + 1e-15 for i in range(len(res) - 1))


def test_symmetric_residual_decreasing():
    # conjugate played forward: |Lt(x) L(x Lt(x)) - 1| also shrinks
    fam = SlowlyVaryingFamily.log_power(1.0)
    conj = debruijn_conjugate(fam)
    res = []
    for k in range(3, 13):
        x = 10.0**k
        lt = float(conj.value(x))
        res.append(abs(lt * float(fam.value(x * lt)) - 1.0))
    assert all(res[i + 1] <= res[i] + 1e-15 for i in range(len(res) - 1))


def test_residual_requires_x_geq_2():
    with pytest.raises(SpecError):
        debruijn_residual(SlowlyVaryingFamily.log_power(1.0), 1.0)


# ---------------------------------------------------------------------------
# Domination
# ---------------------------------------------------------------------------


def test_domination_identical_cells():
    spec = MarginalSpec.pareto(2.0)
    xs = np.geomspace(0.5, 1e4, 64)
    rep = domination_check([spec, spec], spec, xs)
    assert rep.max_violation <= 0.0


def test_domination_modulated_family_scaled_candidate():
    base = MarginalSpec.pareto(2.0)
    model = FieldModel(marginal=base,
                       modulation=Modulation(preset="checkerboard", c_lo=0.5, c_hi=2.0))
    xs = np.geomspace(0.5, 1e4, 64)
    rep = domination_check([model], base.scaled_by(2.0), xs)
    assert rep.max_violation <= 1e-12


def test_domination_violation_flagged():
    xs = np.geomspace(1.5, 1e4, 64)
    rep = domination_check([MarginalSpec.pareto(1.5)], MarginalSpec.pareto(3.0), xs)
    assert rep.max_violation > 0.0


def test_constructed_dominator_never_violated(mixed_models):
    cells = [MarginalSpec.pareto(2.0), MarginalSpec.exponential(1.0),
             MarginalSpec.symmetrized_pareto(1.5)]
    dom = dominator_model(cells)
    rep = domination_check(cells, dom, dom.xs)
    assert rep.max_violation <= 1e-12


# ---------------------------------------------------------------------------
# Uniform integrability
# ---------------------------------------------------------------------------


def test_ui_bounded_cells_hit_zero():
    cells = [MarginalSpec.rademacher()]
    trace = uniform_integrability_trace(cells, 2.0, SlowlyVaryingFamily.constant(),
                                        [0.5, 1.0, 2.0])
    # g(|X|) = 1; it exceeds K only for K < 1
    assert trace.values[0] == pytest.approx(1.0)
    assert trace.values[1] == 0.0
    assert trace.values[2] == 0.0


def test_ui_pareto3_tends_to_zero():
    cells = [MarginalSpec.pareto(3.0)]
    trace = uniform_integrability_trace(cells, 2.0, SlowlyVaryingFamily.constant(),
                                        [1.0, 1e2, 1e4, 1e6, 1e8])
    vals = np.array(trace.values)
    assert np.all(np.diff(vals) <= 1e-12)
    assert trace.tends_to_zero


def test_ui_pareto2_boundary_diverges():
    cells = [MarginalSpec.pareto(2.0)]
    trace = uniform_integrability_trace(cells, 2.0, SlowlyVaryingFamily.constant(),
                                        [1.0, 1e3, 1e6])
    assert all(v == math.inf for v in trace.values)
    assert not trace.tends_to_zero


def test_ui_monotone_nonincreasing_with_log_weight():
    cells = [MarginalSpec.pareto(3.0), MarginalSpec.exponential(1.0)]
    trace = uniform_integrability_trace(cells, 1.5, SlowlyVaryingFamily.log_power(1.0),
                                        [1.0, 10.0, 100.0, 1000.0])
    vals = np.array(trace.values)
    assert np.all(np.diff(vals) <= 1e-9)


def test_ui_rejects_decreasing_weight():
    with pytest.raises(SpecError):
        uniform_integrability_trace([MarginalSpec.pareto(3.0)], 2.0,
                                    SlowlyVaryingFamily.log_power(-1.0), [1.0])


def test_bounded_moment_pipeline_builds_integrable_dominator():
    # cells with sup E(|X|^p log_nu^(2)|X|) finite produce a dominator with
    # E(|X|^p L(|X|^p)) finite (checked by quadrature against a threshold)
    base = MarginalSpec.pareto(3.0)
    cells = [base.scaled_by(c) for c in (0.5, 1.0, 1.5, 2.0)]
    sup_weighted = max(
        c._quad_expect(lambda x: np.abs(x) ** 2 * np.asarray(log_nu_sq(np.abs(x), 1)))
        for c in cells)
    assert math.isfinite(sup_weighted)
    dom = dominator_model(cells)
    moment = dom.moment_of(lambda x: np.power(x, 2.0))
    # dominator is the 2x-scaled tail: E(2X)^2 = 4 * 3 = 12 for the base
    assert moment == pytest.approx(12.0, rel=0.02)
    assert moment < 50.0
