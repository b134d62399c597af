import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import central_jacobian, rates
from sidyn.errors import AlphaOutOfRange, DegeneratePopulation, FieldOutOfRange, NonFinite
from sidyn.model import (ModelParams, State, jacobian, population, portfolio_at_risk, swap_params,
                         validate_params, vector_field)

SCENARIO_B = (0.34, 0.6, 0.7, 0.2, 0.1, 0.9)
SCENARIO_C = (0.2, 0.29, 0.67, 0.56, 0.8, 0.41)

unit = st.floats(0.0, 1.0)
params_st = st.builds(
    ModelParams,
    alpha=st.floats(0.01, 1.0),
    sigma=unit, beta1=unit, beta2=unit,
    mu1=st.floats(0.0, 2.0), mu2=st.floats(0.0, 2.0),
)
coord = st.floats(-1e5, 1e5, allow_nan=False)
states = st.tuples(coord, coord)


def test_validate_accepts_scenario_c():
    p = validate_params(*SCENARIO_C)
    assert p.as_tuple() == SCENARIO_C
    assert p.k == pytest.approx(4.0)


def test_validate_rejects_zero_alpha():
    with pytest.raises(AlphaOutOfRange) as err:
        validate_params(0.0, 0.5, 0.1, 0.4, 0, 0)
    assert err.value.field == "alpha"


def test_validate_rejects_sigma_above_one():
    with pytest.raises(FieldOutOfRange) as err:
        validate_params(0.1, 1.2, 0.1, 0.4, 0, 0)
    assert err.value.field == "sigma"


@pytest.mark.parametrize("bad", [math.nan, math.inf, -math.inf])
def test_validate_rejects_non_finite(bad):
    with pytest.raises(NonFinite):
        validate_params(0.1, 0.5, bad, 0.4, 0, 0)


@pytest.mark.parametrize("field,value", [("alpha", 1.5), ("beta1", -0.1), ("beta2", 1.01), ("mu1", -1.0)])
def test_validate_names_offending_field(field, value):
    raw = dict(alpha=0.5, sigma=0.5, beta1=0.5, beta2=0.5, mu1=0.5, mu2=0.5)
    raw[field] = value
    with pytest.raises((AlphaOutOfRange, FieldOutOfRange)) as err:
        validate_params(**raw)
    assert err.value.field == field


def test_exit_rates_above_one_need_escape_hatch():
    with pytest.raises(FieldOutOfRange):
        validate_params(0.5, 0.5, 0.1, 0.1, 1.5, 0.2)
    p = validate_params(0.5, 0.5, 0.1, 0.1, 1.5, 0.2, unchecked_rates=True)
    assert p.mu1 == 1.5


def test_scenario_c_spot_value():
    # hand evaluation with k = 4, S = 10000, I = 1865:
    #   ds = 0.29*4*11865 - 0.67*18.65e6 + 0.56*18.65e6 - 0.8*10000 = -2045736.6
    #   di = 0.71*4*11865 + 0.67*18.65e6 - 0.56*18.65e6 - 0.41*1865 = 2084431.95
    ds, di = vector_field(validate_params(*SCENARIO_C), (10000, 1865))
    assert ds == pytest.approx(-2_045_736.6, rel=1e-9)
    assert di == pytest.approx(2_084_431.95, rel=1e-9)
    assert ds + di == pytest.approx(4 * 11865 - 0.8 * 10000 - 0.41 * 1865, rel=1e-12)


@given(params_st)
def test_origin_is_exact_fixed_point(p):
    assert vector_field(p, (0.0, 0.0)) == (0.0, 0.0)


@given(params_st, states)
def test_matches_reference_rates(p, x):
    got = vector_field(p, x)
    want = rates(*p.as_tuple(), *x)
    scale = 1 + abs(x[0] * x[1]) + abs(x[0]) + abs(x[1])
    assert abs(got.ds - want[0]) <= 1e-12 * scale * (1 + p.k)
    assert abs(got.di - want[1]) <= 1e-12 * scale * (1 + p.k)


@given(params_st, unit, unit, states)
def test_interaction_terms_cancel_in_sum(p, b1, b2, x):
    q = p.replace(beta1=b1, beta2=b2)
    s, i = x
    total_p = sum(vector_field(p, x))
    total_q = sum(vector_field(q, x))
    scale = abs(s * i) + p.k * (abs(s) + abs(i)) + p.mu1 * abs(s) + p.mu2 * abs(i) + 1
    assert abs(total_p - total_q) <= 1e-12 * scale


def test_equal_betas_equal_mus_sum_is_linear():
    p = validate_params(0.25, 0.4, 0.3, 0.3, 0.2, 0.2)
    ds, di = vector_field(p, (700.0, 300.0))
    assert ds + di == pytest.approx((p.k - 0.2) * 1000.0, rel=1e-12)


@given(params_st, states)
def test_swap_symmetry(p, x):
    s, i = x
    a = vector_field(swap_params(p), (i, s))
    b = vector_field(p, x)
    scale = abs(s * i) + (p.k + p.mu1 + p.mu2) * (abs(s) + abs(i)) + 1
    assert abs(a.ds - b.di) <= 1e-12 * scale
    assert abs(a.di - b.ds) <= 1e-12 * scale


@pytest.mark.parametrize("c", [2.0, 10.0, 0.5])
@given(p=params_st, x=states)
def test_linear_part_is_homogeneous(c, p, x):
    q = p.replace(beta1=0.0, beta2=0.0)
    a = vector_field(q, (c * x[0], c * x[1]))
    b = vector_field(q, x)
    scale = (q.k + q.mu1 + q.mu2) * (abs(x[0]) + abs(x[1])) * c + 1e-300
    assert abs(a.ds - c * b.ds) <= 1e-12 * scale
    assert abs(a.di - c * b.di) <= 1e-12 * scale


def test_jacobian_scenario_b_origin():
    J = jacobian(validate_params(*SCENARIO_B), (0.0, 0.0))
    np.testing.assert_allclose(J, [[1.064706, 1.164706], [0.776471, -0.123529]], atol=5e-7)


@given(params_st, unit, unit)
def test_origin_jacobian_is_beta_free(p, b1, b2):
    J = jacobian(p, (0.0, 0.0))
    np.testing.assert_array_equal(J, jacobian(p.replace(beta1=b1, beta2=b2), (0.0, 0.0)))
    sk, ik = p.sigma * p.k, (1 - p.sigma) * p.k
    np.testing.assert_allclose(J, [[sk - p.mu1, sk], [ik, ik - p.mu2]], rtol=1e-15, atol=1e-15)


def test_jacobian_matches_finite_differences():
    rng = np.random.default_rng(1)
    for _ in range(1000):
        raw = (rng.uniform(0.05, 1.0), *rng.uniform(0, 1, 3), *rng.uniform(0, 1, 2))
        x = rng.uniform(-1e5, 1e5, 2)
        J = jacobian(ModelParams(*raw), x)
        fd = central_jacobian(raw, x)
        scale = np.max(np.abs(J)) + 1e-300
        assert np.max(np.abs(J - fd)) <= 1e-6 * scale


def test_population_identity():
    assert population(validate_params(0.1, 0.5, 0.1, 0.4, 0, 0), (10000, 2000)) == pytest.approx(120_000)
    p = validate_params(0.3, 0.5, 0.1, 0.4, 0, 0)
    assert population(p, (0, 0)) == 0
    assert population(validate_params(1.0, 0.5, 0.1, 0.4, 0, 0), (123.0, 45.0)) == 168.0


def test_portfolio_at_risk():
    assert portfolio_at_risk(State(10000, 2000)) == pytest.approx(1 / 6)
    assert portfolio_at_risk((10000, 0)) == 0
    with pytest.raises(DegeneratePopulation):
        portfolio_at_risk((0, 0))


def test_params_are_immutable():
    p = validate_params(*SCENARIO_C)
    with pytest.raises(AttributeError):
        p.alpha = 0.3


@pytest.mark.parametrize("v", [math.nan, math.inf, -math.inf])
def test_vector_field_rejects_non_finite_state(v):
    with pytest.raises(NonFinite):
        vector_field(validate_params(*SCENARIO_C), (v, 1.0))
