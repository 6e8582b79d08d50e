import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from helpers import FAMILY_SAMPLES, demand_slope, sample_prices
from netprice import demandkit as dk
from netprice.errors import InputError, OrderUnsupported, OutOfDomain


def test_linear_kernel():
    assert list(dk.g_derivs(dk.Linear(1, 1), 0.5, 2)) == [0.5, -1.0, 0.0]


def test_logit_kernel_at_zero():
    assert dk.g_derivs(dk.Logit(1, 1), 0.0, 0)[0] == pytest.approx(2.0)


def test_power_kernel():
    assert dk.g_derivs(dk.Power(1, 1, 1, 2), 0.5, 0)[0] == pytest.approx(1.0)


def test_linear_weights_are_constant():
    assert np.allclose(dk.gk_table(dk.Linear(1, 1), 0.5, 4).values, 0.5, rtol=0, atol=1e-15)


def test_logit_weights():
    e = math.exp(-1.0)
    vals = dk.gk_table(dk.Logit(1, 1), 1.0, 3).values
    assert vals[0] == pytest.approx(1 + e, rel=1e-14)
    assert vals[1] == pytest.approx((1 + e) * e, rel=1e-14)
    assert vals[2] == pytest.approx((1 + e) * e * (1 + 2 * e), abs=1e-12)


@given(st.floats(0.01, 30.0), st.floats(0.1, 3.0))
def test_logit_third_weight_closed_form(P, alpha):
    e = math.exp(-alpha * P)
    g3 = dk.gk_table(dk.Logit(1, alpha), P, 3).values[2]
    assert g3 == pytest.approx((1 + e) * e * (1 + 2 * e) / alpha, rel=1e-12, abs=1e-300)


def test_power_weights():
    vals = dk.gk_table(dk.Power(1, 1, 1, 0.5), 0.2, 3).values
    assert np.allclose(vals, [0.4, 0.2, 0.1], rtol=1e-14)


@pytest.mark.parametrize("demand", FAMILY_SAMPLES, ids=lambda d: f"{d.family}-{d.params()}")
def test_kernel_matches_definition(demand):
    """g = -D/D' against the family's own derivative formula."""
    for P in sample_prices(demand, 25):
        g = dk.g_derivs(demand, P, 0)[0]
        assert g == pytest.approx(-demand.demand(P) / demand_slope(demand, P), rel=1e-11)


@pytest.mark.parametrize("demand", FAMILY_SAMPLES, ids=lambda d: f"{d.family}-{d.params()}")
def test_kernel_derivatives_match_finite_differences(demand):
    for P in sample_prices(demand, 7)[1:-1]:
        d = dk.g_derivs(demand, P, 3)
        h = 1e-4 * max(1.0, P)
        for k in range(3):
            fd = (dk.g_derivs(demand, P + h, k)[k] - dk.g_derivs(demand, P - h, k)[k]) / (2 * h)
            assert d[k + 1] == pytest.approx(fd, rel=1e-6, abs=1e-8)


@pytest.mark.parametrize("demand", FAMILY_SAMPLES, ids=lambda d: f"{d.family}-{d.params()}")
def test_alternating_sign_pattern(demand):
    for P in sample_prices(demand):
        d = dk.g_derivs(demand, P, 8)
        signs = np.array([(-1) ** k for k in range(9)])
        assert np.all(signs * d >= 0)


@pytest.mark.parametrize("demand", FAMILY_SAMPLES, ids=lambda d: f"{d.family}-{d.params()}")
def test_weights_nonnegative_and_decreasing(demand):
    for P in sample_prices(demand, 40):
        table = dk.gk_table(demand, P, 5, with_derivs=True)
        assert np.all(table.values >= 0)
        assert np.all(table.derivs <= 0)


def test_weights_recursion_by_differencing():
    """g_{k+1} = -g_k' g checked with finite differences of g_k."""
    demand = dk.Exponential(3, 1, 1)
    P, h = 0.4, 1e-5
    up = dk.gk_table(demand, P + h, 4).values
    down = dk.gk_table(demand, P - h, 4).values
    here = dk.gk_table(demand, P, 4).values
    g = here[0]
    for k in range(3):
        assert here[k + 1] == pytest.approx(-(up[k] - down[k]) / (2 * h) * g, rel=1e-7)


def test_logit_scale_cancels_in_kernel():
    for P in np.linspace(0.1, 15, 30):
        a = dk.gk_table(dk.Logit(1, 0.7), P, 5, with_derivs=True)
        b = dk.gk_table(dk.Logit(40, 0.7), P, 5, with_derivs=True)
        assert np.allclose(a.values, b.values, rtol=1e-14, atol=0)
        assert np.allclose(a.derivs, b.derivs, rtol=1e-14, atol=0)


def test_exponential_saturation():
    demand = dk.Exponential(3, 1, 2)
    assert demand.p_bar == pytest.approx(math.log(3) / 2)
    assert demand.demand(demand.p_bar) == 0.0
    assert demand.demand(demand.p_bar * (1 - 1e-9)) > 0


def test_monopoly_dead_weight_loss():
    assert dk.dwl(dk.Linear(1, 1), 0.5, 0.0) == pytest.approx(0.125, abs=1e-15)


@pytest.mark.parametrize("demand", FAMILY_SAMPLES, ids=lambda d: f"{d.family}-{d.params()}")
def test_dwl_at_cost_is_zero(demand):
    C = sample_prices(demand, 5)[1]
    assert dk.dwl(demand, C, C) == pytest.approx(0.0, abs=1e-15)


def test_logit_surplus_against_quadrature():
    demand = dk.Logit(1, 1)
    numeric, _ = integrate.quad(demand.demand, 1.0, np.inf, epsabs=0, epsrel=1e-12)
    assert dk.cs(demand, 1.0) == pytest.approx(math.log1p(math.exp(-1.0)), rel=1e-14)
    assert dk.cs(demand, 1.0) == pytest.approx(numeric, rel=1e-10)


@pytest.mark.parametrize("demand", FAMILY_SAMPLES, ids=lambda d: f"{d.family}-{d.params()}")
def test_closed_form_surplus_against_quadrature(demand):
    for P in sample_prices(demand, 6)[:-1]:
        numeric = dk.Demand.cs(demand, P)  # generic quadrature path
        assert demand.cs(P) == pytest.approx(numeric, rel=1e-9, abs=1e-14)


def test_large_logit_prices_do_not_overflow():
    demand = dk.Logit(1, 1)
    assert demand.demand(800.0) >= 0.0
    assert demand.demand(-800.0) == pytest.approx(1.0)
    assert dk.cs(demand, 800.0) >= 0.0
    assert np.all(np.isfinite(dk.gk_table(demand, 800.0, 4).values))


def test_domain_errors():
    with pytest.raises(OutOfDomain):
        dk.g_derivs(dk.Linear(1, 1), 1.0, 1)
    with pytest.raises(OutOfDomain):
        dk.g_derivs(dk.Logit(1, 1), -0.1, 1)
    with pytest.raises(OutOfDomain):
        dk.dwl(dk.Linear(1, 1), 0.2, 0.3)
    with pytest.raises(OutOfDomain):
        dk.demand(dk.Linear(1, 1), -1)
    with pytest.raises(ValueError):
        dk.gk_table(dk.Linear(1, 1), 0.5, 0)


def test_parameter_constraints():
    with pytest.raises(InputError):
        dk.Linear(-1, 1)
    with pytest.raises(InputError):
        dk.Exponential(1, 2, 1)
    with pytest.raises(InputError):
        dk.Logit(1, 0)


def test_custom_reproduces_linear():
    custom = dk.Custom(lambda P: 1 - P, saturation=1.0)
    for P in (0.1, 0.35, 0.7):
        exact = dk.gk_table(dk.Linear(1, 1), P, 3, with_derivs=True)
        approx = dk.gk_table(custom, P, 3, with_derivs=True)
        assert np.allclose(approx.values, exact.values, atol=1e-6)
        assert np.allclose(approx.derivs, exact.derivs, atol=1e-6)


def test_custom_reproduces_logit():
    logit = dk.Logit(1, 1)
    custom = dk.Custom(logit.demand)
    for P in (0.5, 2.0, 4.0):
        exact = dk.gk_table(logit, P, 3).values
        approx = dk.gk_table(custom, P, 3).values
        assert np.allclose(approx, exact, rtol=1e-5, atol=1e-7)


def test_custom_order_limit():
    custom = dk.Custom(lambda P: 1 - P, max_order=2, saturation=1.0)
    dk.g_derivs(custom, 0.5, 2)
    with pytest.raises(OrderUnsupported):
        dk.g_derivs(custom, 0.5, 3)


def test_from_dict_accepts_rational_strings():
    d = dk.from_dict({"family": "power", "d": 1, "a": 1, "b": 1, "beta": "4/3"})
    assert d.beta == Fraction(4, 3)
    assert dk.to_dict(d) == {"family": "power", "d": 1, "a": 1, "b": 1, "beta": "4/3"}
    assert dk.from_dict(dk.to_dict(d)) == d


@pytest.mark.parametrize("data", [
    {"family": "custom"},
    {"family": "logit", "d": 1, "alpha": 1, "beta": 2},
    {"family": "linear", "a": "one"},
    {"a": 1},
    {"family": "linear", "a": True},
])
def test_from_dict_rejects(data):
    with pytest.raises(InputError):
        dk.from_dict(data)
