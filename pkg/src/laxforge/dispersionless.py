"""Dispersionless counterpart: Laurent symbols in ``p`` and Poisson-bracket flows.

``D_x`` becomes a commuting symbol ``p``, composition becomes multiplication
and the commutator becomes

    {f, g} = f_p D_x(g) - g_p D_x(f)

with ``D_x`` acting on coefficients.  The hierarchy reads

    Lc_t = {P_{>=k}(Lc^q) + eps [Lc^q]_0 p, Lc}

(the deformation is written with ``p``, not ``D_x``, so that both slots of the
bracket are symbols).  The substitution ``p = phi p~`` is plain rescaling of
each coefficient, ``a_i -> a_i phi^i``, and for ``z = chi``, ``phi = chi_x``
it is a canonical transformation: ``{f, g}~ = {f~, g~}_z`` with no correction.
"""

from __future__ import annotations

from fractions import Fraction
from functools import partial
from typing import Callable, Mapping

from .diffpoly import DiffPoly, Monomial, Ring, change_variable
from .errors import (
    ClosednessViolationError,
    DepthUnreachableError,
    LaxforgeError,
    RingMismatchError,
    StructureViolationError,
    TailInconsistentError,
    TruncationError,
)
from .hierarchy import (
    DEFAULT_DEPTH,
    ConservationReport,
    FlowDiagnostics,
    FlowSystem,
    LaxModel,
    as_model,
)
from .psdo import _acc, _finish
from .transform import (
    PushforwardReport,
    ReciprocalForm,
    TransformResult,
    _compare,
    _new_model,
    _z_twin,
    theorem1_model,
    theorem2_model,
)


class LaurentSymbol:
    """``sum a_i p^i`` with the same floor/regen contract as ``PsdOp``."""

    __slots__ = ("ring", "coeffs", "floor", "regen")

    def __init__(self, ring: Ring, coeffs: Mapping[int, DiffPoly] | None = None, floor: int | None = None,
                 regen: Callable[[int], "LaurentSymbol"] | None = None):
        clean = {}
        for i, c in (coeffs or {}).items():
            c = ring.coerce(c)
            if floor is not None and i < floor:
                continue
            if c:
                clean[int(i)] = c
        self.ring = ring
        self.coeffs = dict(sorted(clean.items(), reverse=True))
        self.floor = floor
        self.regen = regen

    @classmethod
    def p(cls, ring: Ring, n: int = 1) -> "LaurentSymbol":
        return cls(ring, {n: ring.one})

    @classmethod
    def scalar(cls, f: DiffPoly) -> "LaurentSymbol":
        return cls(f.ring, {0: f})

    @classmethod
    def regenerable(cls, ring: Ring, builder, floor: int) -> "LaurentSymbol":
        return cls(ring, builder(floor), floor, partial(cls.regenerable, ring, builder))

    @property
    def top(self) -> int | None:
        return next(iter(self.coeffs), None)

    def top_bound(self) -> int | None:
        t = self.top
        if self.floor is not None:
            t = self.floor - 1 if t is None else max(t, self.floor - 1)
        return t

    def at(self, floor: int) -> "LaurentSymbol":
        if self.floor is None or self.floor <= floor:
            return self
        if self.regen is None:
            raise DepthUnreachableError(f"symbol is a frozen truncation at floor {self.floor}")
        return self.regen(floor)

    def __add__(self, other: "LaurentSymbol") -> "LaurentSymbol":
        if not isinstance(other, LaurentSymbol):
            return NotImplemented
        if other.ring is not self.ring:
            raise RingMismatchError("symbols over different rings")
        floors = [f for f in (self.floor, other.floor) if f is not None]
        floor = max(floors) if floors else None
        out = dict(self.coeffs)
        for i, c in other.coeffs.items():
            out[i] = out[i] + c if i in out else c
        regen = None
        if floor is not None and _regenerable(self) and _regenerable(other):
            regen = partial(_sum_regen, self, other)
        return LaurentSymbol(self.ring, out, floor, regen)

    def __neg__(self) -> "LaurentSymbol":
        regen = partial(_neg_regen, self) if self.regen else None
        return LaurentSymbol(self.ring, {i: -c for i, c in self.coeffs.items()}, self.floor, regen)

    def __sub__(self, other):
        return self + (-other)

    def __eq__(self, other):
        if not isinstance(other, LaurentSymbol):
            return NotImplemented
        return self.ring is other.ring and self.floor == other.floor and self.coeffs == other.coeffs

    __hash__ = None

    def agrees_with(self, other: "LaurentSymbol") -> bool:
        low = max([f for f in (self.floor, other.floor) if f is not None], default=None)
        for i in set(self.coeffs) | set(other.coeffs):
            if low is not None and i < low:
                continue
            if self.coeffs.get(i, self.ring.zero) != other.coeffs.get(i, self.ring.zero):
                return False
        return True

    def is_zero_known(self) -> bool:
        return all(c.is_zero for c in self.coeffs.values())

    def truncate(self, floor: int) -> "LaurentSymbol":
        """Frozen copy keeping orders ``>= floor``."""
        return LaurentSymbol(self.ring, self.at(floor).coeffs, floor)

    def dp(self) -> "LaurentSymbol":
        """``d/dp``; a truncation at floor ``f`` stays known down to ``f - 1``."""
        floor = None if self.floor is None else self.floor - 1
        regen = partial(_dp_regen, self) if self.regen else None
        return LaurentSymbol(self.ring, {i - 1: i * c for i, c in self.coeffs.items() if i}, floor, regen)

    def dx(self) -> "LaurentSymbol":
        """Total derivative of every coefficient."""
        regen = partial(_dx_regen, self) if self.regen else None
        return LaurentSymbol(self.ring, {i: c.D() for i, c in self.coeffs.items()}, self.floor, regen)

    def scale(self, f: DiffPoly) -> "LaurentSymbol":
        return LaurentSymbol(self.ring, {i: f * c for i, c in self.coeffs.items()}, self.floor)

    def render(self, fmt: str = "text") -> str:
        parts = []
        for i, c in self.coeffs.items():
            body = c.render(fmt)
            if len(c) > 1:
                body = f"({body})"
            if i == 0:
                parts.append(body)
                continue
            ppow = "p" if i == 1 else (f"p^{i}" if fmt == "text" else f"p^{{{i}}}")
            parts.append(ppow if body == "1" else (f"{body}*{ppow}" if fmt == "text" else f"{body} {ppow}"))
        if self.floor is not None:
            parts.append(f"O(p^{self.floor - 1})" if fmt == "text" else f"O(p^{{{self.floor - 1}}})")
        return " + ".join(parts).replace("+ -", "- ") if parts else "0"

    def __repr__(self):
        return f"LaurentSymbol({self.render()})"

    def to_json(self) -> dict:
        floor = self.floor
        if floor is None:
            floor = min(self.coeffs) if self.coeffs else 0
        return {
            "symbol": "p",
            "floor": floor,
            "exact": self.floor is None,
            "coeffs": [{"order": i, "poly": c.to_json()} for i, c in self.coeffs.items()],
        }


def _regenerable(s: LaurentSymbol) -> bool:
    return s.floor is None or s.regen is not None


def _sum_regen(a, b, floor):
    return a.at(floor) + b.at(floor)


def _neg_regen(a, floor):
    return -(a.at(floor))


def _dp_regen(a, floor):
    return a.at(floor + 1).dp()


def _dx_regen(a, floor):
    return a.at(floor).dx()


def symbol_mul(a: LaurentSymbol, b: LaurentSymbol, floor: int | None = None) -> LaurentSymbol:
    """Commutative product, exact at every order ``>= floor``."""
    if a.ring is not b.ring:
        raise RingMismatchError("symbols over different rings")
    exact = a.floor is None and b.floor is None
    if floor is None and not exact:
        raise DepthUnreachableError("product of truncated symbols needs a floor")
    ta, tb = a.top_bound(), b.top_bound()
    if ta is None or tb is None:
        return LaurentSymbol(a.ring, {}, None if exact else floor)
    if not exact:
        a = a.at(floor - tb)
        b = b.at(floor - ta)
    out: dict = {}
    for i, ai in a.coeffs.items():
        for j, bj in b.coeffs.items():
            if not exact and i + j < floor:
                continue
            _acc(out, i + j, ai, bj, 1)
    coeffs = _finish(a.ring, out)
    if exact:
        return LaurentSymbol(a.ring, coeffs)
    regen = partial(_mul_regen, a, b) if _regenerable(a) and _regenerable(b) else None
    return LaurentSymbol(a.ring, coeffs, floor, regen)


def _mul_regen(a, b, floor):
    return symbol_mul(a, b, floor)


def symbol_power(s: LaurentSymbol, q: int, floor: int | None = None) -> LaurentSymbol:
    if q < 1:
        raise ValueError("power needs q >= 1")
    if q == 1:
        return s if floor is None else s.at(floor)
    t = s.top_bound()
    prev = symbol_power(s, q - 1, None if floor is None or t is None else floor - t)
    out = symbol_mul(prev, s, floor)
    if out.floor is not None and _regenerable(s):
        out = LaurentSymbol(out.ring, out.coeffs, out.floor, partial(_power_regen, s, q))
    return out


def _power_regen(s, q, floor):
    return symbol_power(s, q, floor)


def poisson_bracket(f: LaurentSymbol, g: LaurentSymbol, floor: int | None = None) -> LaurentSymbol:
    """``{f, g} = f_p D_x(g) - g_p D_x(f)``."""
    return symbol_mul(f.dp(), g.dx(), floor) - symbol_mul(g.dp(), f.dx(), floor)


def symbol_project_geq(s: LaurentSymbol, k: int) -> LaurentSymbol:
    if s.floor is not None and k < s.floor:
        s = s.at(k)
    return LaurentSymbol(s.ring, {i: c for i, c in s.coeffs.items() if i >= k})


def symbol_coeff(s: LaurentSymbol, i: int) -> DiffPoly:
    if s.floor is not None and i < s.floor:
        try:
            s = s.at(i)
        except DepthUnreachableError:
            raise TruncationError(f"order {i} is below the known floor {s.floor}") from None
    return s.coeffs.get(i, s.ring.zero)


def substitute_momentum(s: LaurentSymbol, phi: DiffPoly, target: Ring) -> LaurentSymbol:
    """``s|_{p = phi p~}`` with coefficients moved to ``target`` (``D_x = phi D_z``)."""
    phi = target.coerce(phi)
    out = {}
    for i, c in s.coeffs.items():
        out[i] = change_variable(c, target, phi) * phi ** i
    regen = partial(_subst_regen, s, phi, target) if s.regen else None
    return LaurentSymbol(target, out, s.floor, regen)


def _subst_regen(s, phi, target, floor):
    return substitute_momentum(s.at(floor), phi, target)


def derivative_weight(m: Monomial) -> int:
    """Total number of x-derivatives in a monomial, ``sum order * exponent``."""
    return sum(order * e for _, order, e in m.factors)


def leading_part(f: DiffPoly, max_weight: int = 1) -> DiffPoly:
    """Drop monomials carrying more than ``max_weight`` derivatives.

    Dispersionless flows are homogeneous of weight 1, so this is the part of a
    dispersive flow that survives the limit.
    """
    return f.filter(lambda m: derivative_weight(m) <= max_weight)


# ---------------------------------------------------------------------------
# Hierarchy


def lax_symbol(lax) -> LaurentSymbol:
    """``Lc = sum u_i p^i + p^-1 u_-1`` (or the infinite general form)."""
    model = as_model(lax)
    coeffs = model.differential_part()
    if model.spec.general_tail:
        def builder(floor, model=model):
            out = model.differential_part()
            for i in range(-1, floor - 1, -1):
                out[i] = model.coefficient(i)
            return out
        return LaurentSymbol.regenerable(model.ring, builder, -1)
    if model.spec.has_tail:
        coeffs[-1] = model.coefficient(-1)
    return LaurentSymbol(model.ring, coeffs)


def _symbol_lq(model: LaxModel, q: int) -> LaurentSymbol:
    s = lax_symbol(model)
    if q == 0:
        return LaurentSymbol.scalar(model.ring.one)
    return symbol_power(s, q, 0 if s.floor is not None else None)


def dl_lq_zero(lax, q: int) -> DiffPoly:
    model = as_model(lax)
    return symbol_coeff(_symbol_lq(model, q), 0)


def dl_build_generator(lax, q: int, k: int = 1, deformed: bool = True) -> LaurentSymbol:
    model = as_model(lax)
    lq = _symbol_lq(model, q)
    gen = symbol_project_geq(lq, k)
    if deformed and model.eps:
        gen = gen + LaurentSymbol(model.ring, {1: model.eps * symbol_coeff(lq, 0)})
    return gen


def dl_derive_flow(lax, q: int, k: int = 1, deformed: bool = True, depth: int = DEFAULT_DEPTH, time: str = "t") -> FlowSystem:
    """``Lc_t = {B, Lc}`` split into field equations, same contract as ``derive_flow``."""
    if depth < 2:
        raise ValueError("depth must be >= 2")
    model = as_model(lax)
    spec = model.spec
    ring = model.ring
    B = dl_build_generator(model, q, k, deformed)
    Lc = lax_symbol(model)
    floor = None
    if spec.general_tail:
        floor = max(-depth, model.general_floor + (B.top or 0))
    R = poisson_bracket(B, Lc, floor)

    excess = [i for i, c in R.coeffs.items() if i > spec.N and c]
    if spec.normalized_top and R.coeffs.get(spec.N):
        excess.append(spec.N)
    if excess:
        raise StructureViolationError(f"{{B_{q}, L}} has nonzero coefficients at powers {sorted(excess, reverse=True)}")
    if not spec.general_tail:
        lowest = -1 if spec.has_tail else 0
        below = [i for i, c in R.coeffs.items() if i < lowest and c]
        if below:
            raise TailInconsistentError(f"{{B_{q}, L}} has nonzero coefficients at powers {below}")

    coefficient_flows = {}
    rhs = {}
    for order in range(spec.N, -1, -1):
        c = model.coefficient(order)
        if not c or c.is_constant:
            if order < spec.N and symbol_coeff(R, order):
                raise StructureViolationError(f"{{B_{q}, L}} is nonzero at order {order}, which carries no field")
            continue
        flow = symbol_coeff(R, order)
        coefficient_flows[order] = flow
        if order == spec.N and model.eliminate_top:
            g = ring.jet("g")
            rhs["g"] = Fraction(-1, spec.N) * g ** (spec.N + 1) * flow
        else:
            rhs[spec.field_name(order)] = flow
    tail_flow = None
    if spec.has_tail:
        tail_flow = symbol_coeff(R, -1)
        coefficient_flows[-1] = tail_flow
        rhs[spec.field_name(-1)] = tail_flow
    elif spec.general_tail:
        for order in range(-1, R.floor - 1, -1):
            flow = symbol_coeff(R, order)
            coefficient_flows[order] = flow
            rhs[spec.field_name(order)] = flow
    for name in model.extra_fields:
        rhs.setdefault(name, ring.zero)
    if model.with_chi:
        # leading order of chi_t = B chi: only the p^1 coefficient survives
        flux = symbol_coeff(B, 1) * ring.jet("c")
        rhs["chi"] = flux
        rhs["c"] = flux.D()
    return FlowSystem(
        q=q, ring=ring, rhs=rhs, coefficient_flows=coefficient_flows, tail_kernel_flow=tail_flow,
        diagnostics=FlowDiagnostics(True, 1 if spec.has_tail else 0), k=k, deformed=deformed, time=time,
    )


def dl_top_evolution_residual(lax, q: int) -> DiffPoly:
    model = as_model(lax)
    spec = model.spec
    flows = dl_derive_flow(model, q)
    un = model.top
    x = dl_lq_zero(model, q)
    eps = model.eps
    return flows.coefficient_flows[spec.N] - (eps * un.D() * x - eps * spec.N * un * x.D())


def dl_conservation_report(lax, q: int) -> ConservationReport:
    model = theorem2_model(lax)
    spec = model.spec
    g = model.ring.jet("g")
    un = model.top
    x = dl_lq_zero(model, q)
    eps = model.eps
    g_t = dl_derive_flow(model, q).rhs["g"]
    stated = eps * un.D() * x - eps * spec.N * un * x.D()
    corrected = eps * (g * x).D()
    return ConservationReport(
        q=q,
        corrected_residual=g_t - corrected,
        plain_flux_residual=g_t - eps * (un * x).D(),
        equivalence_residual=Fraction(-1, spec.N) * g ** (spec.N + 1) * stated - corrected,
    )


# ---------------------------------------------------------------------------
# Transformations


def _dl_transform(model: LaxModel, phi_name: str | None, mode: str) -> TransformResult:
    spec = model.spec
    z_model = _z_twin(model)
    zr = z_model.ring
    phi_x = model.ring.jet(phi_name) if phi_name else model.ring.one
    phi_z = zr.jet(phi_name) if phi_name else zr.one
    Lc = lax_symbol(model)
    if Lc.floor is not None:
        Lc = Lc.at(model.general_floor)
    new_symbol = substitute_momentum(Lc, phi_z, zr)
    top_name = None
    variable_map = {}
    new_orders = {}
    if mode == "theorem4":
        if symbol_coeff(new_symbol, spec.N) != zr.one:
            raise LaxforgeError("transformed symbol is not monic")
        if not spec.normalized_top:
            top_name = spec.new_field_name(spec.N)
            variable_map[top_name] = phi_x.inverse()
            new_orders[top_name] = spec.N
    new_model = _new_model(spec, "theorem2" if mode == "theorem4" else "theorem1", model.general_floor, top_name, Lc.coeffs)
    for order, c in Lc.coeffs.items():
        if mode == "theorem4" and order == spec.N:
            continue
        name = new_model.spec.field_name(order)
        variable_map[name] = c * phi_x ** order
        new_orders[name] = order
    variable_map_z = {n: change_variable(p, zr, phi_z) for n, p in variable_map.items()}
    return TransformResult(
        mode=mode, source=model, z_model=z_model, phi=phi_z, new_lax=new_symbol,
        variable_map=variable_map, variable_map_z=variable_map_z, new_model=new_model,
        new_orders=new_orders, top_field=top_name,
    )


def dl_theorem3_transform(lax) -> TransformResult:
    """``p = chi_x p~``: ``v_i = u_i chi_x^i``."""
    return _dl_transform(theorem1_model(lax), "c", "theorem3")


def dl_theorem4_transform(lax) -> TransformResult:
    """``p = g p~`` with ``g = u_N^(-1/N)``: monic symbol, ``v_N = g^-1``."""
    model = theorem2_model(lax)
    return _dl_transform(model, None if model.spec.normalized_top else "g", "theorem4")


def dl_theorem4_pushforward(lax, q: int, depth: int = DEFAULT_DEPTH, result: TransformResult | None = None) -> PushforwardReport:
    T = result or dl_theorem4_transform(lax)
    model = T.source
    x_flows = dl_derive_flow(model, q, depth=depth)
    speed = model.eps * dl_lq_zero(model, q)
    z_flows = dl_derive_flow(T.new_model, q, k=1, deformed=False, depth=depth, time="tau")
    transformed = {n: p for n, p in z_flows.rhs.items() if n in T.new_orders}
    if T.top_field:
        eps = T.new_model.ring.jet("eps") if model.spec.epsilon_mode == "symbolic" else 0
        transformed[T.top_field] = -eps * dl_lq_zero(T.new_model, q).D()
    return _compare(T, q, x_flows, speed, transformed, "theorem4")


def dl_theorem4_check(lax, q: int, depth: int = DEFAULT_DEPTH) -> bool:
    return dl_theorem4_pushforward(lax, q, depth).passed


def dl_theorem3_pushforward(lax, q: int, depth: int = DEFAULT_DEPTH, result: TransformResult | None = None) -> PushforwardReport:
    """Deformed flows pushed through ``z = chi`` against dispersionless Harry-Dym flows."""
    T = result or dl_theorem3_transform(lax)
    model = T.source
    x_flows = dl_derive_flow(model, q, depth=depth)
    speed = x_flows.rhs["chi"] * model.ring.jet("c").inverse()
    z_flows = dl_derive_flow(T.new_model, q, k=2, deformed=False, depth=depth, time="tau")
    transformed = {n: p for n, p in z_flows.rhs.items() if n in T.new_orders}
    return _compare(T, q, x_flows, speed, transformed, "theorem3")


def poisson_map_residual(f: LaurentSymbol, g: LaurentSymbol, z_ring: Ring, floor: int | None = None) -> LaurentSymbol:
    """``{f, g}~ - {f~, g~}`` under ``p = chi_x p~``; identically zero."""
    phi = z_ring.jet("c")
    lhs = substitute_momentum(poisson_bracket(f, g, floor), phi, z_ring)
    rhs = poisson_bracket(substitute_momentum(f, phi, z_ring), substitute_momentum(g, phi, z_ring), floor)
    return lhs - rhs


def dl_projection_identity_residual(f: LaurentSymbol, z_ring: Ring) -> LaurentSymbol:
    """``P'_{>=2}(f~) - (P_{>=1}(f)~ - [f]_1 chi_x p~)``."""
    phi = z_ring.jet("c")
    lhs = symbol_project_geq(substitute_momentum(f, phi, z_ring), 2)
    p1 = symbol_project_geq(f, 1)
    lin = change_variable(symbol_coeff(f, 1), z_ring, phi) * phi
    rhs = substitute_momentum(p1, phi, z_ring) - LaurentSymbol(z_ring, {1: lin})
    return lhs - rhs


def dl_reciprocal_form(lax, q_max: int) -> ReciprocalForm:
    """``dz = g dx + eps sum_q g [Lc^q]_0 dt_q``, checked to be closed."""
    model = theorem2_model(lax)
    ring = model.ring
    g = ring.jet("g") if model.eliminate_top else ring.one
    dt = {}
    for q in range(1, q_max + 1):
        coeff = model.eps * g * dl_lq_zero(model, q)
        g_t = dl_derive_flow(model, q, depth=2).rhs.get("g", ring.zero)
        if g_t != coeff.D():
            raise ClosednessViolationError(f"d_t{q}(g) - D(flux) = {g_t - coeff.D()}")
        dt[q] = coeff
    return ReciprocalForm(g, dt)
