"""Changes of variables that untangle the deformed hierarchy.

Two substitutions ``D_x = phi D_z`` are supported:

* ``phi = chi_x`` with ``z = chi`` an auxiliary eigenfunction of all the flows
  (``chi_t = B_q chi``).  The deformed flows become Harry-Dym type flows
  generated by ``P'_{>=2}(L~^q)``.
* ``phi = g = u_N^(-1/N)`` with ``dz = g dx + sum_q eps g [L^q]_0 dt_q``.  The
  transformed operator is monic and evolves by the undeformed mKdV-type flows
  ``[P'_{>=1}(L~^q), L~]``, while ``v_N = u_N^(1/N)`` obeys the linear equation
  ``(v_N)_tau = -eps ([L~^q]_0)_z``.

Time derivatives change as follows.  If ``z_x = phi`` and ``z_t = F`` then a
function ``f(x, t) = f~(z, tau)`` satisfies ``f~_tau = f_t - (F / phi) f_x``;
for the reciprocal map ``F / phi = eps [L^q]_0``.

New dependent variables are computed twice: in the ``x`` ring by solving
``L = sum v_i (phi^-1 D_x)^i`` from the top down, and in the ``z`` ring by
expanding ``L|_{D_x = phi D_z}``.  Both must agree.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .diffpoly import DiffPoly, Ring, change_variable, evolve, substitute
from .errors import ClosednessViolationError, LaxforgeError, NormalizationError
from .hierarchy import (
    DEFAULT_DEPTH,
    FlowSystem,
    LaxModel,
    LaxSpec,
    as_model,
    derive_flow,
    lq_zero,
)
from .psdo import (
    PsdOp,
    apply,
    coeff_at,
    compose,
    expand_tail,
    power,
    project_geq,
    recognize_tail,
    substitute_symbol,
)


@dataclass
class TransformResult:
    """Outcome of a change of variables.

    ``new_lax`` lives in ``z_model.ring`` (old fields, ``z`` jets).
    ``variable_map`` sends each new field name to its expression in the old
    ``x`` ring; ``variable_map_z`` is the same in ``z`` jets.  ``new_model``
    is the Lax model over the new fields, used for ``z``-side flows.
    """

    mode: str
    source: LaxModel
    z_model: LaxModel
    phi: DiffPoly
    new_lax: PsdOp
    variable_map: dict
    variable_map_z: dict
    new_model: LaxModel
    new_orders: dict
    top_field: str | None = None

    def to_json(self) -> dict:
        return {
            "mode": self.mode,
            "phi": self.phi.to_json(),
            "new_lax": self.new_lax.truncate(-1).to_json() if self.new_lax.floor is not None else self.new_lax.to_json(),
            "variable_map": [
                {"field": name, "order": self.new_orders[name], "poly": poly.to_json()}
                for name, poly in self.variable_map.items()
            ],
        }


def _z_twin(model: LaxModel) -> LaxModel:
    return LaxModel(
        model.spec,
        variable="z",
        eliminate_top=model.eliminate_top,
        with_chi=model.with_chi,
        general_floor=model.general_floor,
        extra_fields=model.extra_fields,
    )


def substitute_lax(model: LaxModel, phi: DiffPoly, target: Ring) -> PsdOp:
    """``L|_{D_x = phi D_z}`` keeping the tail structured and regenerable.

    ``D_x^-1 o w`` becomes ``D_z^-1 o (phi^-1 w)``.
    """
    diff = PsdOp(model.ring, model.differential_part())
    head = substitute_symbol(diff, phi, None, target)
    if model.spec.has_tail:
        kernel = phi.inverse() * change_variable(model.coefficient(-1), target, phi)
        coeffs = dict(head.coeffs)

        def builder(floor, coeffs=coeffs, kernel=kernel):
            out = dict(coeffs)
            out.update(expand_tail(kernel, min(floor, -1)).coeffs)
            return out

        return PsdOp.regenerable(target, builder, -1)
    if model.spec.general_tail:
        return substitute_symbol(model.L.at(-1), phi, -1, target)
    return head


def solve_new_coefficients(L: PsdOp, phi: DiffPoly, lowest: int) -> dict[int, DiffPoly]:
    """Coefficients ``v_i`` (``i >= lowest``) with ``L = sum v_i (phi^-1 D)^i``, same ring."""
    ring = L.ring
    top = L.top
    inv = phi.inverse()
    dz = PsdOp(ring, {1: inv})
    floor = min(lowest, 0)
    remaining = L.at(floor) if L.floor is not None else L
    powers: dict[int, PsdOp] = {0: PsdOp.scalar(ring.one)}
    for i in range(1, top + 1):
        powers[i] = compose(powers[i - 1], dz)
    if lowest < 0:
        neg = expand_tail(phi, floor)
        for i in range(1, -lowest + 1):
            powers[-i] = power(neg, i, floor)
    out = {}
    for i in range(top, lowest - 1, -1):
        c = coeff_at(remaining, i)
        v = c * phi ** i
        out[i] = v
        if v:
            remaining = remaining - powers[i].left_mul(v)
    return out


def _new_model(spec: LaxSpec, mode: str, general_floor: int, top_name: str | None, orders) -> LaxModel:
    """Model of the transformed operator; ``orders`` are its nonzero coefficient orders."""
    names = {i: spec.new_field_name(i) for i in range(spec.N, -2, -1)}
    if spec.general_tail:
        names.update({i: spec.new_field_name(i) for i in range(-1, general_floor - 1, -1)})
    # the substitution can fill orders that were absent from L
    orders = {i for i in orders if 0 <= i <= spec.N} | (set(spec.present_orders) & {-1})
    if mode == "theorem2":
        orders = orders - {spec.N}
        new_spec = LaxSpec(
            N=spec.N,
            present_orders=orders,
            general_tail=spec.general_tail,
            epsilon_mode="zero",
            normalized_top=True,
            names=names,
            name=spec.name + "~",
        )
        extra = {top_name: True} if top_name else {}
        return LaxModel(new_spec, variable="z", general_floor=general_floor, extra_fields=extra)
    # v_N = u_N chi_x^N is never normalized, even when u_N = 1
    new_spec = LaxSpec(
        N=spec.N,
        present_orders=orders | {spec.N},
        general_tail=spec.general_tail,
        epsilon_mode="zero",
        normalized_top=False,
        names=names,
        invertible={spec.N},
        name=spec.name + "~",
    )
    return LaxModel(new_spec, variable="z", general_floor=general_floor)


def _transform(model: LaxModel, phi_name: str | None, mode: str, depth: int) -> TransformResult:
    spec = model.spec
    z_model = _z_twin(model)
    zr = z_model.ring
    phi_x = model.ring.jet(phi_name) if phi_name else model.ring.one
    phi_z = zr.jet(phi_name) if phi_name else zr.one
    new_lax = substitute_lax(model, phi_z, zr)

    if spec.has_tail:
        lowest = -1
    elif spec.general_tail:
        # new field of order m involves old ones of order >= m only
        lowest = model.general_floor
    else:
        lowest = 0
    solved = solve_new_coefficients(model.L, phi_x, lowest)

    top_name = None
    new_orders: dict[str, int] = {}
    variable_map: dict[str, DiffPoly] = {}
    if mode == "theorem2":
        top = coeff_at(new_lax, spec.N)
        if top != zr.one:
            raise NormalizationError(f"top coefficient of the transformed operator is {top}, not 1")
        if solved[spec.N] != model.ring.one:
            raise NormalizationError("x-side solve did not produce a monic operator")
        if not spec.normalized_top:
            top_name = spec.new_field_name(spec.N)
            new_orders[top_name] = spec.N
            # v_N = u_N^(1/N) = g^-1
            variable_map[top_name] = phi_x.inverse()
    new_model = _new_model(spec, mode, model.general_floor, top_name, [i for i, v in solved.items() if v])
    for order in sorted(solved, reverse=True):
        if (mode == "theorem2" and order == spec.N) or not solved[order]:
            continue
        name = new_model.spec.field_name(order)
        new_orders[name] = order
        variable_map[name] = solved[order]

    variable_map_z = {n: change_variable(p, zr, phi_z) for n, p in variable_map.items()}
    for name, order in new_orders.items():
        if mode == "theorem2" and order == spec.N:
            continue
        if coeff_at(new_lax, order) != variable_map_z[name]:
            raise LaxforgeError(
                f"x-side and z-side expressions for {name} disagree: "
                f"{variable_map_z[name]} vs {coeff_at(new_lax, order)}"
            )
    if spec.has_tail:
        recognize_tail(new_lax.at(-1 - depth), depth)

    return TransformResult(
        mode=mode,
        source=model,
        z_model=z_model,
        phi=phi_z,
        new_lax=new_lax,
        variable_map=variable_map,
        variable_map_z=variable_map_z,
        new_model=new_model,
        new_orders=new_orders,
        top_field=top_name,
    )


def theorem1_model(lax) -> LaxModel:
    model = as_model(lax)
    if model.with_chi:
        return model
    return LaxModel(model.spec, with_chi=True, general_floor=model.general_floor)


def theorem2_model(lax) -> LaxModel:
    model = as_model(lax)
    if model.eliminate_top or model.spec.normalized_top:
        return model
    return LaxModel(model.spec, eliminate_top=True, general_floor=model.general_floor)


def theorem1_transform(lax, depth: int = DEFAULT_DEPTH) -> TransformResult:
    """``L~ = L|_{D_x = chi_x D_z}``; ``v_N = u_N chi_x^N``, tail ``u_-1 / chi_x``."""
    return _transform(theorem1_model(lax), "c", "theorem1", depth)


def theorem2_transform(lax, depth: int = DEFAULT_DEPTH) -> TransformResult:
    """``L~ = L|_{D_x = g D_z}`` with ``g = u_N^(-1/N)``; monic in ``D_z``."""
    model = theorem2_model(lax)
    return _transform(model, None if model.spec.normalized_top else "g", "theorem2", depth)


# ---------------------------------------------------------------------------
# Projection identity behind the chi substitution


def projection_identity_residual(a: PsdOp, z_ring: Ring, depth: int = DEFAULT_DEPTH) -> PsdOp:
    """``P'_{>=2}(A~) - (P_{>=1}(A)~ - (P_{>=1}(A) chi) D_z)``.

    ``a`` lives in a ring with ``chi`` (``D chi = c``) and ``c``; ``z_ring``
    has the same generators and ``D_z``.
    """
    phi = z_ring.jet("c")
    if a.floor is not None:
        a = a.at(-depth)
    a_t = substitute_symbol(a, phi, None if a.floor is None and a.is_differential else -depth, z_ring)
    lhs = project_geq(a_t, 2)
    p1 = project_geq(a, 1)
    p1_t = substitute_symbol(p1, phi, None, z_ring)
    acting = change_variable(apply(p1, a.ring.jet("chi")), z_ring, phi)
    rhs = p1_t - PsdOp(z_ring, {1: acting})
    return lhs - rhs


def verify_projection_identity(a: PsdOp, z_ring: Ring, depth: int = DEFAULT_DEPTH) -> bool:
    res = projection_identity_residual(a, z_ring, depth)
    return all(c.is_zero for c in res.coeffs.values())


def chi_rings(fields: list[str], invertible=()) -> tuple[Ring, Ring]:
    """Matching ``x`` and ``z`` rings with ``eps``, the given fields, ``c`` and ``chi``."""
    rings = []
    for var in ("x", "z"):
        ring = Ring(var)
        ring.declare("eps", rule="constant")
        for name in fields:
            ring.declare(name, invertible=name in invertible)
        ring.declare("c", invertible=True, latex=r"\chi_{x}")
        ring.declare("chi", rule="defined", derivative=ring.jet("c") if var == "x" else ring.one)
        rings.append(ring)
    return rings[0], rings[1]


# ---------------------------------------------------------------------------
# Reciprocal 1-form


@dataclass(frozen=True)
class ReciprocalForm:
    """``dz = dx_coeff dx + sum_q dt_coeffs[q] dt_q``."""

    dx_coeff: DiffPoly
    dt_coeffs: dict

    def render(self, fmt: str = "text") -> str:
        parts = [_form_term(self.dx_coeff, "dx", fmt)]
        for q, c in self.dt_coeffs.items():
            parts.append(_form_term(c, f"dt{q}" if fmt == "text" else f"dt_{{{q}}}", fmt))
        return "dz = " + (" + ".join(p for p in parts if p) or "0")

    def to_json(self) -> dict:
        return {
            "dx": self.dx_coeff.to_json(),
            "dt": [{"q": q, "poly": c.to_json()} for q, c in self.dt_coeffs.items()],
        }


def _form_term(c: DiffPoly, d: str, fmt: str) -> str:
    if c.is_zero:
        return ""
    body = c.render(fmt)
    if len(c) > 1:
        body = f"({body})"
    return f"{body}*{d}" if fmt == "text" else rf"{body}\,{d}"


def reciprocal_form(lax, q_max: int) -> ReciprocalForm:
    """The 1-form ``dz = g dx + eps sum_q g [L^q]_0 dt_q``, checked to be closed."""
    model = theorem2_model(lax)
    ring = model.ring
    g = ring.jet("g") if model.eliminate_top else ring.one
    dt = {}
    for q in range(1, q_max + 1):
        coeff = model.eps * g * lq_zero(model, q)
        flows = derive_flow(model, q, depth=2)
        g_t = evolve(g, flows.rhs)
        if g_t != coeff.D():
            raise ClosednessViolationError(f"d_t{q}(g) - D(flux) = {g_t - coeff.D()}")
        dt[q] = coeff
    return ReciprocalForm(g, dt)


def form_closed_in_times(lax, i: int, j: int) -> bool:
    """``d_{t_i}`` of the ``dt_j`` coefficient equals ``d_{t_j}`` of the ``dt_i`` one."""
    model = theorem2_model(lax)
    g = model.ring.jet("g") if model.eliminate_top else model.ring.one
    ci = model.eps * g * lq_zero(model, i)
    cj = model.eps * g * lq_zero(model, j)
    fi = derive_flow(model, i, depth=2)
    fj = derive_flow(model, j, depth=2)
    return evolve(cj, fi.rhs) == evolve(ci, fj.rhs)


# ---------------------------------------------------------------------------
# Pushforward of flows


@dataclass
class PushforwardReport:
    q: int
    mode: str
    transformed: dict      # new field -> rhs over new fields (z-side flow)
    pushed: dict           # new field -> chain-rule image of the x-side flow, in z jets
    residuals: dict        # new field -> pushed - transformed(bound to old fields)
    new_ring: Ring

    @property
    def passed(self) -> bool:
        return all(r.is_zero for r in self.residuals.values())

    def flow_system(self) -> FlowSystem:
        from .hierarchy import FlowDiagnostics

        return FlowSystem(
            q=self.q,
            ring=self.new_ring,
            rhs=dict(self.transformed),
            coefficient_flows={},
            tail_kernel_flow=None,
            diagnostics=FlowDiagnostics(True, 0),
            k=2 if self.mode in ("theorem1", "theorem3") else 1,
            deformed=False,
            time="tau",
        )


def pushforward_check(lax, q: int, depth: int = DEFAULT_DEPTH, result: TransformResult | None = None) -> PushforwardReport:
    """Push the deformed ``t_q`` flow through the reciprocal transformation.

    Compares, field by field, ``f_t - eps [L^q]_0 f_x`` (rewritten in ``z``
    jets) with the undeformed flow of the monic ``L~`` and, for ``v_N``,
    with ``-eps D_z([L~^q]_0)``.
    """
    T = result or theorem2_transform(lax, depth)
    model = T.source
    x_flows = derive_flow(model, q, k=1, deformed=True, depth=depth)
    speed = model.eps * lq_zero(model, q)
    z_flows = derive_flow(T.new_model, q, k=1, deformed=False, depth=depth, time="tau")
    transformed = {n: p for n, p in z_flows.rhs.items() if n in T.new_orders}
    if T.top_field:
        # the new model is undeformed (eps = 0 inside L~); v_N still carries eps
        eps = T.new_model.ring.jet("eps") if model.spec.epsilon_mode == "symbolic" else 0
        transformed[T.top_field] = -eps * lq_zero(T.new_model, q).D()
    return _compare(T, q, x_flows, speed, transformed, "theorem2")


def theorem1_pushforward_check(lax, q: int, depth: int = DEFAULT_DEPTH, result: TransformResult | None = None) -> PushforwardReport:
    """Same as :func:`pushforward_check` for ``z = chi`` and Harry-Dym flows.

    Here ``chi_t = B_q chi`` so ``f~_tau = f_t - (B_q chi / chi_x) f_x``.
    """
    T = result or theorem1_transform(lax, depth)
    model = T.source
    x_flows = derive_flow(model, q, k=1, deformed=True, depth=depth)
    speed = x_flows.rhs["chi"] * model.ring.jet("c").inverse()
    z_flows = derive_flow(T.new_model, q, k=2, deformed=False, depth=depth, time="tau")
    transformed = {n: p for n, p in z_flows.rhs.items() if n in T.new_orders}
    return _compare(T, q, x_flows, speed, transformed, "theorem1")


def _compare(T: TransformResult, q: int, x_flows: FlowSystem, speed: DiffPoly, transformed: dict, mode: str) -> PushforwardReport:
    zr = T.z_model.ring
    pushed = {}
    residuals = {}
    lowest = min(x_flows.coefficient_flows)
    for name, f in T.variable_map.items():
        if T.new_orders[name] < lowest or name not in transformed:
            continue
        f_tau = evolve(f, x_flows.rhs) - speed * f.D()
        pushed[name] = change_variable(f_tau, zr, T.phi)
        bound = substitute(transformed[name], T.variable_map_z, target=zr)
        residuals[name] = pushed[name] - bound
    ordered = {n: transformed[n] for n in T.variable_map if n in transformed}
    ordered.update(transformed)
    return PushforwardReport(q, mode, ordered, pushed, residuals, T.new_model.ring)


def coefficient_invariance_check(lax, q: int, depth: int = DEFAULT_DEPTH, result: TransformResult | None = None) -> bool:
    """``P_{>=1}(L^q)~ = P'_{>=1}(L~^q)`` and ``[L^q]_0 = [L~^q]_0``, exactly."""
    T = result or theorem2_transform(lax, depth)
    model = T.source
    zr = T.z_model.ring
    L = model.L
    lq = power(L, q, 0) if L.floor is not None else power(L, q)
    lt = T.new_lax
    ltq = power(lt, q, 0) if lt.floor is not None else power(lt, q)
    lhs = substitute_symbol(project_geq(lq, 1), T.phi, None, zr)
    if not lhs.agrees_with(project_geq(ltq, 1)):
        return False
    x0 = change_variable(coeff_at(lq, 0), zr, T.phi)
    if x0 != coeff_at(ltq, 0):
        return False
    # once more through the new fields and the variable map
    via_map = substitute(lq_zero(T.new_model, q), T.variable_map_z, target=zr)
    return via_map == x0


def restore_top(poly: DiffPoly, model: LaxModel) -> DiffPoly:
    """Rewrite ``g`` as ``u_N^-1`` when ``N = 1``; otherwise ``poly`` is returned as is.

    For ``N > 1`` the root ``u_N^(-1/N)`` has no polynomial form, so ``g`` stays.
    """
    if not model.eliminate_top or model.spec.N != 1 or poly.ring is not model.ring:
        return poly
    spec = replace(model.spec, invertible=model.spec.invertible | {1})
    plain = LaxModel(spec, variable=model.variable, general_floor=model.general_floor,
                     extra_fields=model.extra_fields, with_chi=model.with_chi)
    return substitute(poly, {"g": plain.top.inverse()}, target=plain.ring)
