"""Deformed Lax hierarchies: generators, flows and their consistency checks.

For a Lax operator ``L = sum_{i<=N} u_i D^i (+ D^-1 o u_-1)`` the q-th flow is

    L_t = [P_{>=k}(L^q) + eps [L^q]_0 D, L]

with ``k = 1`` for the deformed hierarchy, ``k = 1`` and no ``eps`` term for the
undeformed one, and ``k = 2`` for Harry-Dym type flows.  The right-hand side
of each field equation is read off the commutator coefficient by coefficient;
the negative part is checked to keep the ``D^-1 o w`` shape and ``w_t`` is
its kernel.

When the top coefficient is eliminated through an invertible generator
``g`` with ``u_N = g^-N`` (standing for ``u_N^(-1/N)``) the engine evolves ``g``
instead:  ``g_t = -(1/N) g^(N+1) (u_N)_t``, a Laurent polynomial.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

from .diffpoly import CONSTANT, DEFINED, DiffPoly, Ring, evolve
from .errors import DepthUnreachableError, LaxforgeError, StructureViolationError
from .psdo import (
    PsdOp,
    apply,
    coeff_at,
    commutator,
    expand_tail,
    power,
    project_geq,
    recognize_tail,
)

DEFAULT_DEPTH = 4


def default_name(order: int) -> str:
    return f"u{order}" if order >= 0 else f"um{-order}"


@dataclass(frozen=True)
class LaxSpec:
    """Declarative description of a scalar Lax operator.

    ``present_orders`` lists the orders carrying a field; ``-1`` stands for the
    ``D^-1 o u_-1`` tail.  With ``general_tail`` every order below ``N`` carries
    its own field (the infinite form), materialized as deep as needed.
    """

    N: int
    present_orders: frozenset = frozenset()
    general_tail: bool = False
    epsilon_mode: str = "symbolic"
    normalized_top: bool = False
    names: Mapping[int, str] = field(default_factory=dict)
    invertible: frozenset = frozenset()
    new_names: Mapping[int, str] = field(default_factory=dict)
    name: str = "lax"

    def __post_init__(self):
        object.__setattr__(self, "present_orders", frozenset(self.present_orders))
        object.__setattr__(self, "invertible", frozenset(self.invertible))
        object.__setattr__(self, "names", dict(self.names))
        object.__setattr__(self, "new_names", dict(self.new_names))
        if self.N < 1:
            raise ValueError("N must be positive")
        if self.epsilon_mode not in ("symbolic", "zero"):
            raise ValueError(f"epsilon_mode must be 'symbolic' or 'zero', got {self.epsilon_mode!r}")
        bad = [i for i in self.present_orders if i < -1 or i > self.N]
        if bad:
            raise ValueError(f"orders {sorted(bad)} outside -1..N")
        if self.normalized_top and self.N in self.present_orders:
            raise ValueError("a normalized top coefficient is not a field")
        if not self.normalized_top and self.N not in self.present_orders:
            raise ValueError("the top order N must carry a field unless normalized")
        if self.general_tail and -1 in self.present_orders:
            raise ValueError("the general tail form has no D^-1 o u_-1 term")

    @property
    def has_tail(self) -> bool:
        return -1 in self.present_orders

    def field_name(self, order: int) -> str:
        return self.names.get(order, default_name(order))

    def new_field_name(self, order: int) -> str:
        if order in self.new_names:
            return self.new_names[order]
        return f"v{order}" if order >= 0 else f"vm{-order}"

    def with_epsilon(self, mode: str) -> "LaxSpec":
        return LaxSpec(
            self.N, self.present_orders, self.general_tail, mode, self.normalized_top,
            self.names, self.invertible, self.new_names, self.name,
        )


def broer_kaup_spec(epsilon_mode: str = "symbolic") -> LaxSpec:
    """``L = u D + v + D^-1 o w`` (the extended Broer-Kaup operator)."""
    return LaxSpec(
        N=1,
        present_orders={1, 0, -1},
        epsilon_mode=epsilon_mode,
        names={1: "u", 0: "v", -1: "w"},
        invertible={1},
        new_names={1: "u", 0: "v", -1: "r"},
        name="broer-kaup",
    )


class LaxModel:
    """A LaxSpec realized in a ring: generators, coefficients and ``L`` itself.

    ``eliminate_top`` replaces ``u_N`` by ``g^-N``.  ``with_chi`` adds an
    invertible jet generator ``c`` and a generator ``chi`` with ``D chi = c``
    (in the ``z`` twin ring ``D_z chi = 1`` instead, since there ``z = chi``).
    """

    def __init__(
        self,
        spec: LaxSpec,
        *,
        variable: str = "x",
        eliminate_top: bool = False,
        with_chi: bool = False,
        general_floor: int = -12,
        extra_fields: Mapping[str, bool] | None = None,
    ):
        if eliminate_top and spec.normalized_top:
            raise ValueError("nothing to eliminate: the top coefficient is normalized")
        self.spec = spec
        self.variable = variable
        self.eliminate_top = eliminate_top
        self.with_chi = with_chi
        self.general_floor = general_floor
        self.extra_fields = dict(extra_fields or {})
        self.ring = self.make_ring(variable)
        self.eps = self.ring.jet("eps") if spec.epsilon_mode == "symbolic" else self.ring.zero
        self.L = PsdOp.regenerable(self.ring, self._coefficients, -1 if self.is_infinite else 0)
        if not self.is_infinite:
            self.L = PsdOp(self.ring, self._coefficients(0))

    # -- ring and coefficients -------------------------------------------

    @property
    def is_infinite(self) -> bool:
        return self.spec.has_tail or self.spec.general_tail

    def field_orders(self) -> list[int]:
        """Orders that carry a ring generator, highest first."""
        spec = self.spec
        if spec.general_tail:
            top = spec.N - 1 if (spec.normalized_top or self.eliminate_top) else spec.N
            return list(range(top, self.general_floor - 1, -1))
        orders = sorted(spec.present_orders, reverse=True)
        if self.eliminate_top:
            orders.remove(spec.N)
        return orders

    def make_ring(self, variable: str) -> Ring:
        spec = self.spec
        ring = Ring(variable)
        ring.declare("eps", rule=CONSTANT)
        if self.eliminate_top:
            ring.declare("g", invertible=True)
        for order in self.field_orders():
            ring.declare(spec.field_name(order), invertible=order in spec.invertible)
        for name, inv in self.extra_fields.items():
            ring.declare(name, invertible=inv)
        if self.with_chi:
            ring.declare("c", invertible=True, latex=r"\chi_{x}")
            ring.declare("chi", rule=DEFINED, derivative=ring.jet("c") if variable == "x" else ring.one)
        return ring

    def generator_for(self, order: int) -> str:
        if order == self.spec.N and self.eliminate_top:
            return "g"
        return self.spec.field_name(order)

    def coefficient(self, order: int) -> DiffPoly:
        """The function multiplying ``D^order`` in L (the kernel for order -1 tails)."""
        spec = self.spec
        ring = self.ring
        if order == spec.N:
            if spec.normalized_top:
                return ring.one
            if self.eliminate_top:
                return ring.jet("g") ** (-spec.N)
        if spec.general_tail and order < spec.N:
            if order < self.general_floor:
                raise DepthUnreachableError(
                    f"general tail materialized only down to order {self.general_floor}"
                )
            return ring.jet(spec.field_name(order))
        if order in spec.present_orders:
            return ring.jet(spec.field_name(order))
        return ring.zero

    def differential_part(self) -> dict[int, DiffPoly]:
        spec = self.spec
        top = self.coefficient(spec.N)
        coeffs = {spec.N: top}
        for order in range(spec.N - 1, -1, -1):
            c = self.coefficient(order)
            if c:
                coeffs[order] = c
        return coeffs

    def _coefficients(self, floor: int) -> dict[int, DiffPoly]:
        coeffs = self.differential_part()
        if self.spec.general_tail:
            for order in range(-1, floor - 1, -1):
                coeffs[order] = self.coefficient(order)
        elif self.spec.has_tail:
            tail = expand_tail(self.coefficient(-1), min(floor, -1))
            coeffs.update(tail.coeffs)
        return coeffs

    @property
    def top(self) -> DiffPoly:
        return self.coefficient(self.spec.N)

    def lax_at(self, floor: int) -> PsdOp:
        return self.L.at(floor) if self.L.floor is not None else self.L


def as_model(lax) -> LaxModel:
    return lax if isinstance(lax, LaxModel) else LaxModel(lax)


# ---------------------------------------------------------------------------
# Flows


@dataclass(frozen=True)
class FlowDiagnostics:
    top_excess_zero: bool
    tail_depth_checked: int


@dataclass(frozen=True)
class FlowSystem:
    """Evolution equations of one time ``t_q``.

    ``coefficient_flows[i]`` is the coefficient of ``D^i`` in ``L_t``;
    ``rhs`` gives the evolution of each ring generator (``g`` instead of ``u_N``
    under elimination, the tail kernel under its own name).
    """

    q: int
    ring: Ring
    rhs: dict
    coefficient_flows: dict
    tail_kernel_flow: DiffPoly | None
    diagnostics: FlowDiagnostics
    k: int = 1
    deformed: bool = True
    time: str = "t"

    def fields(self) -> list[str]:
        return list(self.rhs)

    def to_json(self) -> dict:
        return {
            "q": self.q,
            "time": self.time,
            "rhs": [{"field": name, "poly": poly.to_json()} for name, poly in self.rhs.items()],
            "tail": None if self.tail_kernel_flow is None else self.tail_kernel_flow.to_json(),
            "diagnostics": {
                "top_excess_zero": self.diagnostics.top_excess_zero,
                "tail_depth_checked": self.diagnostics.tail_depth_checked,
            },
        }


def build_generator(lax, q: int, k: int = 1, deformed: bool = True) -> PsdOp:
    """``P_{>=k}(L^q) + eps [L^q]_0 D`` (the eps term only when ``deformed``)."""
    model = as_model(lax)
    if q < 0:
        raise ValueError("q must be >= 0")
    if k not in (1, 2):
        raise ValueError("k must be 1 or 2")
    ring = model.ring
    if q == 0:
        lq = PsdOp.scalar(ring.one)
    else:
        lq = power(model.L, q, 0) if model.L.floor is not None else power(model.L, q)
    gen = project_geq(lq, k)
    if deformed and model.eps:
        gen = gen + PsdOp(ring, {1: model.eps * coeff_at(lq, 0)})
    return gen


def lq_zero(lax, q: int) -> DiffPoly:
    """``[L^q]_0``."""
    model = as_model(lax)
    if q == 0:
        return model.ring.one
    lq = power(model.L, q, 0) if model.L.floor is not None else power(model.L, q)
    return coeff_at(lq, 0)


def derive_flow(lax, q: int, k: int = 1, deformed: bool = True, depth: int = DEFAULT_DEPTH, time: str = "t") -> FlowSystem:
    """Component equations of ``L_t = [B, L]`` with ``B = build_generator(...)``."""
    if depth < 2:
        raise ValueError("depth must be >= 2")
    model = as_model(lax)
    spec = model.spec
    ring = model.ring
    B = build_generator(model, q, k, deformed)
    if spec.general_tail:
        floor = max(-depth, model.general_floor + (B.top or 0))
    elif spec.has_tail:
        floor = -1 - depth
    else:
        floor = None
    R = commutator(B, model.L, floor)

    excess = [i for i, c in R.coeffs.items() if i > spec.N and c]
    if spec.normalized_top and R.coeffs.get(spec.N):
        excess.append(spec.N)
    if excess:
        raise StructureViolationError(
            f"[B_{q}, L] has nonzero coefficients at orders {sorted(excess, reverse=True)}"
        )

    coefficient_flows: dict[int, DiffPoly] = {}
    rhs: dict[str, DiffPoly] = {}
    for order in range(spec.N, -1, -1):
        c = model.coefficient(order)
        if not c or c.is_constant:
            if order < spec.N and coeff_at(R, order):
                raise StructureViolationError(f"[B_{q}, L] is nonzero at order {order}, which carries no field")
            continue
        flow = coeff_at(R, order)
        coefficient_flows[order] = flow
        if order == spec.N and model.eliminate_top:
            g = ring.jet("g")
            rhs["g"] = Fraction(-1, spec.N) * g ** (spec.N + 1) * flow
        else:
            rhs[spec.field_name(order)] = flow

    tail_flow = None
    tail_depth = 0
    if spec.has_tail:
        negative = PsdOp(ring, {i: c for i, c in R.coeffs.items() if i < 0}, R.floor)
        tail_flow = recognize_tail(negative, depth).kernel
        tail_depth = depth
        coefficient_flows[-1] = tail_flow
        rhs[spec.field_name(-1)] = tail_flow
    elif spec.general_tail:
        for order in range(-1, R.floor - 1, -1):
            flow = coeff_at(R, order)
            coefficient_flows[order] = flow
            rhs[spec.field_name(order)] = flow
    elif R.coeffs and min(R.coeffs) < 0:
        raise StructureViolationError("a differential Lax operator produced negative orders")

    for name in model.extra_fields:
        rhs.setdefault(name, ring.zero)
    if model.with_chi:
        flux = apply(B, ring.jet("chi"))
        rhs["chi"] = flux
        rhs["c"] = flux.D()

    return FlowSystem(
        q=q,
        ring=ring,
        rhs=rhs,
        coefficient_flows=coefficient_flows,
        tail_kernel_flow=tail_flow,
        diagnostics=FlowDiagnostics(top_excess_zero=True, tail_depth_checked=tail_depth),
        k=k,
        deformed=deformed,
        time=time,
    )


# ---------------------------------------------------------------------------
# Verifiers


def top_evolution_residual(lax, q: int) -> DiffPoly:
    """``(u_N)_t - (eps D(u_N) [L^q]_0 - eps N u_N D([L^q]_0))``."""
    model = as_model(lax)
    spec = model.spec
    if spec.normalized_top:
        raise LaxforgeError("the top coefficient is normalized; it does not evolve")
    flows = derive_flow(model, q, depth=2)
    un = model.top
    x = lq_zero(model, q)
    eps = model.eps
    expected = eps * un.D() * x - eps * spec.N * un * x.D()
    return flows.coefficient_flows[spec.N] - expected


def verify_top_evolution(lax, q: int) -> bool:
    return top_evolution_residual(lax, q).is_zero


@dataclass(frozen=True)
class ConservationReport:
    q: int
    corrected_residual: DiffPoly    # g_t - eps D(g [L^q]_0)
    plain_flux_residual: DiffPoly   # g_t - eps D(u_N [L^q]_0)
    equivalence_residual: DiffPoly  # chain-rule image of the u_N relation minus the corrected law

    @property
    def passed(self) -> bool:
        return self.corrected_residual.is_zero and self.equivalence_residual.is_zero


def conservation_report(lax, q: int) -> ConservationReport:
    """Check ``(u_N^(-1/N))_t = eps D(u_N^(-1/N) [L^q]_0)`` with ``g = u_N^(-1/N)``."""
    model = as_model(lax)
    if not model.eliminate_top:
        model = LaxModel(model.spec, eliminate_top=True, general_floor=model.general_floor)
    spec = model.spec
    ring = model.ring
    g = ring.jet("g")
    un = model.top
    flows = derive_flow(model, q, depth=2)
    x = lq_zero(model, q)
    eps = model.eps
    g_t = flows.rhs["g"]
    stated = eps * un.D() * x - eps * spec.N * un * x.D()
    image = Fraction(-1, spec.N) * g ** (spec.N + 1) * stated
    corrected = eps * (g * x).D()
    return ConservationReport(
        q=q,
        corrected_residual=g_t - corrected,
        plain_flux_residual=g_t - eps * (un * x).D(),
        equivalence_residual=image - corrected,
    )


def verify_conservation(lax, q: int) -> bool:
    return conservation_report(lax, q).passed


def evolve_operator(op: PsdOp, flows: FlowSystem) -> PsdOp:
    """Coefficient-wise time derivative of a differential operator."""
    return PsdOp(op.ring, {i: evolve(c, flows.rhs) for i, c in op.coeffs.items()}, op.floor)


def zero_curvature_residual(lax, i: int, j: int, k: int = 1, deformed: bool = True) -> PsdOp:
    """``d_{t_i} B_j - d_{t_j} B_i - [B_i, B_j]``."""
    model = as_model(lax)
    bi = build_generator(model, i, k, deformed)
    bj = build_generator(model, j, k, deformed)
    dbj = evolve_operator(bj, derive_flow(model, i, k, deformed, depth=2))
    dbi = evolve_operator(bi, derive_flow(model, j, k, deformed, depth=2))
    return dbj - dbi - commutator(bi, bj)


def verify_zero_curvature(lax, i: int, j: int, k: int = 1, deformed: bool = True) -> bool:
    res = zero_curvature_residual(lax, i, j, k, deformed)
    return all(c.is_zero for c in res.coeffs.values())
