import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from laxforge.diffpoly import substitute
from laxforge.errors import NormalizationError
from laxforge.hierarchy import LaxModel, LaxSpec, broer_kaup_spec
from laxforge.psdo import PsdOp, coeff_at, compose, expand_tail, project_geq, substitute_symbol
from laxforge.transform import (
    chi_rings,
    coefficient_invariance_check,
    form_closed_in_times,
    projection_identity_residual,
    pushforward_check,
    reciprocal_form,
    restore_top,
    theorem1_pushforward_check,
    theorem1_transform,
    theorem2_model,
    theorem2_transform,
    verify_projection_identity,
)

from .helpers import EBK1_TAU1, EBK1_U_TAU2, EBK_T2, bk_ring, general_n2, generic_n1, generic_n2
from .strategies import polys

# -- chi substitution-------------------------------------------------------------


def test_theorem1_broer_kaup():
    T = theorem1_transform(broer_kaup_spec())
    x = T.source.ring
    assert T.variable_map == {"u": x.parse("u*c"), "v": x.parse("v"), "r": x.parse("w*c^-1")}
    zr = T.z_model.ring
    expected_tail = expand_tail(zr.parse("w*c^-1"), -4)
    for order in range(-1, -5, -1):
        assert coeff_at(T.new_lax.at(-4), order) == coeff_at(expected_tail, order)


def test_theorem1_trivial_chi():
    T = theorem1_transform(broer_kaup_spec())
    x = T.source.ring
    for name, poly in T.variable_map.items():
        assert substitute(poly, {"c": 1}) == x.jet({"r": "w"}.get(name, name))


def test_theorem1_second_order_against_composition():
    spec = LaxSpec(N=2, present_orders={2, 0}, epsilon_mode="zero", invertible={2})
    T = theorem1_transform(spec)
    zr = T.z_model.ring
    dx = PsdOp(zr, {1: zr.jet("c")})
    oracle = compose(PsdOp(zr, {0: zr.jet("u2")}), compose(dx, dx)) + PsdOp(zr, {0: zr.jet("u0")})
    assert T.new_lax == oracle
    assert T.variable_map_z["v2"] == zr.parse("u2*c^2")
    assert T.variable_map["v1"] == T.source.ring.parse("u2*c_x")


@pytest.mark.parametrize("make", [broer_kaup_spec, generic_n1, generic_n2, general_n2])
@pytest.mark.parametrize("q", [1, 2])
def test_theorem1_pushforward(make, q):
    assert theorem1_pushforward_check(make(), q).passed


# -- projection identity ------------------------------------------------------

X_RING, Z_RING = chi_rings(["u", "v", "w"], invertible=["u"])


def _with_tail(diff: PsdOp, kernel):
    coeffs = dict(diff.coeffs)

    def builder(floor):
        out = dict(coeffs)
        for order, c in expand_tail(kernel, min(floor, -1)).coeffs.items():
            out[order] = out.get(order, X_RING.zero) + c
        return out

    return PsdOp.regenerable(X_RING, builder, -1)


@settings(max_examples=25, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(st.data())
def test_projection_identity_random(data):
    top = data.draw(st.integers(1, 3))
    coeffs = {o: data.draw(polys(X_RING, 2)) for o in range(top, -1, -1)}
    coeffs[top] = coeffs[top] + X_RING.jet("u")
    A = _with_tail(PsdOp(X_RING, coeffs), data.draw(polys(X_RING, 2)) + X_RING.jet("w"))
    assert verify_projection_identity(A, Z_RING, depth=4)


def test_projection_identity_first_order():
    A = PsdOp(X_RING, {1: X_RING.jet("u"), 0: X_RING.jet("v")})
    res = projection_identity_residual(A, Z_RING)
    assert all(c.is_zero for c in res.coeffs.values())


def test_projection_identity_without_positive_part():
    A = _with_tail(PsdOp(X_RING, {0: X_RING.jet("v")}), X_RING.jet("w"))
    assert verify_projection_identity(A, Z_RING, depth=4)


def test_projection_identity_needs_correction():
    # without the (P(A) chi) D_z term the two sides differ
    A = PsdOp(X_RING, {2: X_RING.jet("u")})
    c = Z_RING.jet("c")
    lhs = project_geq(substitute_symbol(A, c, None, Z_RING), 2)
    naive = substitute_symbol(project_geq(A, 1), c, None, Z_RING)
    assert lhs != naive
    assert coeff_at(naive - lhs, 1) == Z_RING.parse("u*c*c_z")


# -- reciprocal transformation-------------------------------------------------------------


def test_theorem2_broer_kaup():
    T = theorem2_transform(broer_kaup_spec())
    zr = T.z_model.ring
    assert coeff_at(T.new_lax, 1) == zr.one
    assert coeff_at(T.new_lax, 0) == zr.jet("v")
    assert T.variable_map_z["r"] == zr.parse("g^-1*w")
    # restore_top builds its own ring, so compare the canonical text
    assert str(restore_top(T.variable_map["r"], T.source)) == "u*w"
    assert str(restore_top(T.variable_map["u"], T.source)) == "u"


def test_theorem2_on_normalized_input_is_identity():
    spec = LaxSpec(N=1, present_orders={0, -1}, normalized_top=True, epsilon_mode="zero", names={0: "v", -1: "w"})
    T = theorem2_transform(spec)
    x = T.source.ring
    assert list(T.variable_map.values()) == [x.jet("v"), x.jet("w")]
    assert T.top_field is None


def test_theorem2_twice_is_identity():
    first = theorem2_transform(broer_kaup_spec())
    again = theorem2_transform(first.new_model)
    x = again.source.ring
    assert list(again.variable_map.values()) == [x.jet("v"), x.jet("r")]


def test_theorem2_general_tail():
    T = theorem2_transform(general_n2())
    x = T.source.ring
    assert coeff_at(T.new_lax, 2) == T.z_model.ring.one
    assert T.variable_map["v2"] == x.parse("g^-1")
    assert T.variable_map["v1"] == x.parse("g*u1 + g^-2*g_x")
    assert T.variable_map["v0"] == x.parse("u0")
    assert T.variable_map["vm1"] == x.parse("g^-1*um1")


def test_theorem2_requires_consistent_elimination():
    model = theorem2_model(broer_kaup_spec())
    assert model.eliminate_top
    bad = LaxModel(broer_kaup_spec())
    from laxforge.transform import _transform

    with pytest.raises(NormalizationError):
        _transform(bad, "u", "theorem2", 4)


# -- reciprocal form ----------------------------------------------------------


def test_reciprocal_form_broer_kaup():
    model = theorem2_model(broer_kaup_spec())
    form = reciprocal_form(model, 2)
    plain = bk_ring()
    expected = {"dx": "u^-1", 1: "eps*v/u", 2: "eps*u^-1*(2*w*u + u*v_x + v^2)"}
    shown = {"dx": form.dx_coeff, **form.dt_coeffs}
    for key, text in expected.items():
        assert str(restore_top(shown[key], model)) == str(plain.parse(text))


def test_reciprocal_form_zero_epsilon():
    form = reciprocal_form(broer_kaup_spec("zero"), 2)
    assert all(c.is_zero for c in form.dt_coeffs.values())
    assert form.render() == "dz = g*dx"


def test_reciprocal_form_generic_first_time():
    form = reciprocal_form(generic_n1(), 1)
    assert form.dt_coeffs[1] == form.dx_coeff.ring.parse("eps*g*u0")


@pytest.mark.parametrize("make", [broer_kaup_spec, generic_n1, generic_n2])
def test_reciprocal_form_closed(make):
    form = reciprocal_form(make(), 3)
    assert sorted(form.dt_coeffs) == [1, 2, 3]
    for i, j in [(1, 2), (1, 3), (2, 3)]:
        assert form_closed_in_times(make(), i, j)


# -- pushforward --------------------------------------------------------------


def _new(report, text):
    return report.new_ring.parse(text)


def test_pushforward_first_flow():
    report = pushforward_check(broer_kaup_spec(), 1)
    assert report.passed
    assert report.transformed == {n: _new(report, t) for n, t in EBK1_TAU1.items()}


def _classical_oracle(field):
    # eps = 0, u = 1 in the reference second flow, then w -> r and x -> z
    ring = bk_ring()
    reduced = substitute(ring.parse(EBK_T2[field]), {"eps": 0, "u": 1})
    return str(reduced).replace("x", "z").replace("w", "r")


def test_pushforward_second_flow():
    report = pushforward_check(broer_kaup_spec(), 2)
    assert report.passed
    assert report.transformed["u"] == _new(report, EBK1_U_TAU2)
    assert report.transformed["v"] == _new(report, _classical_oracle("v"))
    assert report.transformed["r"] == _new(report, _classical_oracle("w"))


def test_linear_extension_structure():
    for q in (1, 2, 3):
        rhs = pushforward_check(broer_kaup_spec(), q).transformed
        for name in ("v", "r"):
            assert not rhs[name].generators_used() & {"eps", "u"}
        assert rhs["u"].degree_in(["u"]) == 0


@pytest.mark.parametrize("make", [broer_kaup_spec, generic_n1, generic_n2, general_n2])
@pytest.mark.parametrize("q", [1, 2, 3])
def test_pushforward_and_invariance_agree(make, q):
    assert pushforward_check(make(), q).passed
    assert coefficient_invariance_check(make(), q)


def test_pushforward_zero_epsilon_top_is_frozen():
    report = pushforward_check(broer_kaup_spec("zero"), 2)
    assert report.passed
    assert report.transformed["u"].is_zero


def test_invariance_second_flow_value():
    T = theorem2_transform(broer_kaup_spec())
    from laxforge.hierarchy import lq_zero

    assert lq_zero(T.new_model, 2) == T.new_model.ring.parse("2*r + v_z + v^2")


def test_transform_json():
    data = theorem2_transform(broer_kaup_spec()).to_json()
    assert data["mode"] == "theorem2"
    assert [e["field"] for e in data["variable_map"]] == ["u", "v", "r"]
