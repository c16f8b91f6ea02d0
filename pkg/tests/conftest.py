import numpy as np
import pytest

from dyadicfields import DependenceSpec, FieldModel, MarginalSpec, Modulation


@pytest.fixture
def rademacher_model():
    return FieldModel(marginal=MarginalSpec.rademacher())


@pytest.fixture
def bernoulli01_model():
    return FieldModel(marginal=MarginalSpec.discrete_table([0.0, 1.0], [0.5, 0.5]))


@pytest.fixture
def pareto3_model():
    return FieldModel(marginal=MarginalSpec.pareto(3.0))


@pytest.fixture
def constant_zero_model():
    return FieldModel(marginal=MarginalSpec.discrete_table([0.0], [1.0]))


@pytest.fixture
def mixed_models():
    return [
        FieldModel(marginal=MarginalSpec.discrete_table([0.0, 1.0], [0.5, 0.5])),
        FieldModel(marginal=MarginalSpec.pareto(3.0)),
        FieldModel(marginal=MarginalSpec.rademacher()),
        FieldModel(marginal=MarginalSpec.symmetrized_pareto(2.0)),
        FieldModel(marginal=MarginalSpec.exponential(1.0)),
        FieldModel(marginal=MarginalSpec.discrete_table([0.0, 1.0], [0.5, 0.5]),
                   dependence=DependenceSpec.gaussian_copula_negative(-0.1, radius=1)),
        FieldModel(marginal=MarginalSpec.pareto(3.0),
                   dependence=DependenceSpec.moving_average(2)),
        FieldModel(marginal=MarginalSpec.pareto(3.0),
                   modulation=Modulation(preset="checkerboard", c_lo=0.5, c_hi=2.0)),
        FieldModel(marginal=MarginalSpec.exponential(2.0),
                   modulation=Modulation(preset="radial", c_lo=1.0, c_hi=1.5)),
        FieldModel(marginal=MarginalSpec.rademacher(),
                   dependence=DependenceSpec.pairwise_walsh(3)),
    ]
