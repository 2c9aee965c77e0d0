import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from laxforge.diffpoly import substitute
from laxforge.errors import DepthUnreachableError, TruncationError
from laxforge.dispersionless import (
    LaurentSymbol,
    derivative_weight,
    dl_build_generator,
    dl_conservation_report,
    dl_derive_flow,
    dl_lq_zero,
    dl_projection_identity_residual,
    dl_reciprocal_form,
    dl_theorem3_pushforward,
    dl_theorem3_transform,
    dl_theorem4_check,
    dl_theorem4_pushforward,
    dl_theorem4_transform,
    dl_top_evolution_residual,
    lax_symbol,
    leading_part,
    poisson_bracket,
    poisson_map_residual,
    symbol_coeff,
    symbol_mul,
    symbol_power,
)
from laxforge.hierarchy import LaxModel, LaxSpec, broer_kaup_spec, derive_flow
from laxforge.transform import chi_rings

from .helpers import EBK_T1, EBK_T2, bk_ring, general_n2, generic_n1, generic_n2
from .strategies import polys

RING = bk_ring()
X_RING, Z_RING = chi_rings(["u", "v", "w"], invertible=["u"])


def S(ring, mapping):
    return LaurentSymbol(ring, {i: ring.parse(t) if isinstance(t, str) else t for i, t in mapping.items()})


@st.composite
def symbols(draw, ring, low=-2, high=2):
    return LaurentSymbol(ring, {i: draw(polys(ring, 2)) for i in range(low, high + 1)})


# -- symbols -------------------------------------------------------------------


def test_square_has_no_derivative_term():
    s = S(RING, {1: "1", 0: "v"})
    assert symbol_power(s, 2) == S(RING, {2: "1", 1: "2*v", 0: "v^2"})


def test_multiply_by_one():
    s = S(RING, {1: "u", -1: "w"})
    assert symbol_mul(s, LaurentSymbol.scalar(RING.one)) == s


def test_broer_kaup_square_constant_term():
    s = S(RING, {1: "u", 0: "v", -1: "w"})
    assert symbol_coeff(symbol_power(s, 2), 0) == RING.parse("2*u*w + v^2")


def test_truncated_product_needs_floor():
    s = LaurentSymbol(RING, {0: RING.one}, floor=-2)
    with pytest.raises(DepthUnreachableError):
        symbol_mul(s, s)
    with pytest.raises(TruncationError):
        symbol_coeff(s, -5)


def test_symbol_json():
    data = S(RING, {1: "u", -1: "w"}).to_json()
    assert data["symbol"] == "p" and data["exact"] is True
    assert [c["order"] for c in data["coeffs"]] == [1, -1]


def test_symbol_render():
    assert S(RING, {2: "1", 1: "u", 0: "v+w"}).render() == "p^2 + u*p + (v + w)"


# -- Poisson bracket -------------------------------------------------------------


def test_bracket_with_momentum():
    f = S(RING, {2: "u", 0: "v*w"})
    assert poisson_bracket(LaurentSymbol.p(RING), f) == f.dx()


def test_bracket_self_vanishes():
    f = S(RING, {1: "u", 0: "v", -1: "w"})
    assert poisson_bracket(f, f).is_zero_known()


def test_bracket_first_order():
    assert poisson_bracket(S(RING, {1: "u"}), S(RING, {1: "v"})) == S(RING, {1: "u*v_x - v*u_x"})


@settings(max_examples=30, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(symbols(RING), symbols(RING))
def test_product_commutes(a, b):
    assert symbol_mul(a, b) == symbol_mul(b, a)


@settings(max_examples=30, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(symbols(RING), symbols(RING))
def test_bracket_antisymmetric(f, g):
    assert poisson_bracket(f, g) == -poisson_bracket(g, f)


@settings(max_examples=20, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(symbols(RING, -1, 1), symbols(RING, -1, 1), symbols(RING, -1, 1))
def test_bracket_leibniz(f, g, h):
    lhs = poisson_bracket(f, symbol_mul(g, h))
    rhs = symbol_mul(poisson_bracket(f, g), h) + symbol_mul(g, poisson_bracket(f, h))
    assert lhs == rhs


@settings(max_examples=15, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(symbols(RING, -1, 1), symbols(RING, -1, 1), symbols(RING, -1, 1))
def test_bracket_jacobi(f, g, h):
    floor = -4
    total = (
        poisson_bracket(f, poisson_bracket(g, h), floor)
        + poisson_bracket(g, poisson_bracket(h, f), floor)
        + poisson_bracket(h, poisson_bracket(f, g), floor)
    )
    assert all(c.is_zero for i, c in total.coeffs.items() if i >= floor)


# -- flows ----------------------------------------------------------------------


def P(model, text):
    return model.ring.parse(text)


def test_lax_symbol():
    model = LaxModel(broer_kaup_spec())
    assert lax_symbol(model) == S(model.ring, {1: "u", 0: "v", -1: "w"})


def test_dl_generator_deformed():
    model = LaxModel(broer_kaup_spec())
    assert dl_build_generator(model, 1) == S(model.ring, {1: "u + eps*v"})
    assert dl_lq_zero(model, 2) == P(model, "2*u*w + v^2")


def test_dl_first_flow_equals_reference_rows():
    model = LaxModel(broer_kaup_spec())
    flows = dl_derive_flow(model, 1)
    assert flows.rhs == {n: P(model, t) for n, t in EBK_T1.items()}


def test_dl_second_flow_drops_second_derivative():
    model = LaxModel(broer_kaup_spec())
    assert dl_derive_flow(model, 2).rhs["u"] == P(model, "eps*(u_x*v^2 - 2*u*v*v_x - 2*u^2*w_x)")


def test_dl_translation():
    model = LaxModel(broer_kaup_spec("zero"))
    flows = dl_derive_flow(model, 1)
    bind = {"u": 1}
    assert substitute(flows.rhs["v"], bind) == P(model, "v_x")
    assert substitute(flows.rhs["w"], bind) == P(model, "w_x")


def test_dl_structure_violation():
    from laxforge.errors import StructureViolationError

    spec = LaxSpec(N=1, present_orders={0, -1}, normalized_top=True)
    with pytest.raises(StructureViolationError):
        dl_derive_flow(spec, 1)


def test_derivative_weight():
    m = next(RING.parse("u_x^2*v_xxx*w").monomials())
    assert derivative_weight(m) == 5


@pytest.mark.parametrize("q", [1, 2, 3])
def test_principal_symbol(q):
    model = LaxModel(broer_kaup_spec())
    dispersive = derive_flow(model, q).rhs
    dispersionless = dl_derive_flow(model, q).rhs
    for name, rhs in dispersionless.items():
        assert leading_part(dispersive[name]) == rhs


def test_second_flow_matches_reference_rows_after_weight_filter():
    model = LaxModel(broer_kaup_spec())
    flows = dl_derive_flow(model, 2)
    for name, text in EBK_T2.items():
        assert flows.rhs[name] == leading_part(P(model, text))


@pytest.mark.parametrize("make", [broer_kaup_spec, generic_n1, generic_n2, general_n2])
@pytest.mark.parametrize("q", [1, 2, 3])
def test_dl_top_evolution_and_conservation(make, q):
    assert dl_top_evolution_residual(make(), q).is_zero
    report = dl_conservation_report(make(), q)
    assert report.passed


@pytest.mark.parametrize("make", [broer_kaup_spec, generic_n1, generic_n2])
def test_dl_reciprocal_form_closed(make):
    form = dl_reciprocal_form(make(), 3)
    assert sorted(form.dt_coeffs) == [1, 2, 3]


# -- transformations --------------------------------------------------------------


def test_theorem3_rescaling():
    T = dl_theorem3_transform(broer_kaup_spec())
    x = T.source.ring
    assert T.variable_map == {"u": x.parse("u*c"), "v": x.parse("v"), "r": x.parse("w*c^-1")}


def test_theorem3_trivial_chi():
    T = dl_theorem3_transform(broer_kaup_spec())
    assert [str(substitute(p, {"c": 1})) for p in T.variable_map.values()] == ["u", "v", "w"]


def test_theorem3_second_order():
    T = dl_theorem3_transform(generic_n2())
    assert T.variable_map["v2"] == T.source.ring.parse("u2*c^2")


@pytest.mark.parametrize("make", [broer_kaup_spec, generic_n1, generic_n2, general_n2])
@pytest.mark.parametrize("q", [1, 2])
def test_theorem3_pushforward(make, q):
    assert dl_theorem3_pushforward(make(), q).passed


def test_theorem4_first_flow():
    report = dl_theorem4_pushforward(broer_kaup_spec(), 1)
    assert report.passed
    assert report.transformed == {n: report.new_ring.parse(t) for n, t in {"u": "-eps*v_z", "v": "v_z", "r": "r_z"}.items()}


def test_theorem4_second_flow_top():
    report = dl_theorem4_pushforward(broer_kaup_spec(), 2)
    assert report.passed
    assert report.transformed["u"] == report.new_ring.parse("-eps*(2*r_z + 2*v*v_z)")


def test_theorem4_map():
    T = dl_theorem4_transform(broer_kaup_spec())
    x = T.source.ring
    assert T.variable_map == {"u": x.parse("g^-1"), "r": x.parse("w*g^-1"), "v": x.parse("v")}


def test_theorem4_zero_epsilon_freezes_top():
    report = dl_theorem4_pushforward(broer_kaup_spec("zero"), 2)
    assert report.passed
    assert report.transformed["u"].is_zero


@pytest.mark.parametrize("make", [broer_kaup_spec, generic_n1, generic_n2, general_n2])
@pytest.mark.parametrize("q", [1, 2])
def test_theorem4(make, q):
    assert dl_theorem4_check(make(), q)


@settings(max_examples=20, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(symbols(X_RING, -1, 2), symbols(X_RING, -1, 2))
def test_rescaling_is_poisson_map(f, g):
    assert poisson_map_residual(f, g, Z_RING).is_zero_known()


@settings(max_examples=20, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(symbols(X_RING, -1, 3))
def test_projection_identity_analog(f):
    assert dl_projection_identity_residual(f, Z_RING).is_zero_known()
