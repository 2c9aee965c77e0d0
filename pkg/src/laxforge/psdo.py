"""Formal pseudodifferential operators ``sum a_i D^i`` with DiffPoly coefficients.

Operators are kept in left normal form (coefficients to the left of powers of
``D``).  A series that is infinite downwards is stored truncated: ``floor`` is
the lowest order whose coefficient is known, everything below it is unknown.
``floor is None`` means the stored coefficients are the whole operator.

Truncated operators may carry ``regen``, a callable that rebuilds the same
operator to any deeper floor.  Lax operators, ``D^-1 o w`` tails and powers are
built this way, so composition can pull its operands as deep as the requested
result floor requires instead of failing.

Composition uses the generalized Leibniz rule

    D^n o f = sum_k C(n, k) f^(k) D^(n-k)

with ``C(n, k) = n (n-1) ... (n-k+1) / k!``, valid for negative ``n`` as well.
Unknown coefficients of ``a`` below ``floor_a`` can only reach result orders
below ``floor_a + top(b)``, which fixes how deep each operand has to be.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import partial
from typing import Callable, Mapping

from .diffpoly import DiffPoly, Ring, _merge, _norm, change_variable
from .errors import (
    DepthUnreachableError,
    InvertibilityError,
    LaxforgeError,
    RingMismatchError,
    TailInconsistentError,
    TruncationError,
)


def binomial(n: int, k: int) -> int:
    """Generalized binomial coefficient; ``n`` may be negative."""
    if k < 0:
        return 0
    if n >= 0:
        return math.comb(n, k)
    return (-1) ** k * math.comb(k - n - 1, k)


class PsdOp:
    """Immutable pseudodifferential operator over one ring."""

    __slots__ = ("ring", "coeffs", "floor", "regen")

    def __init__(
        self,
        ring: Ring,
        coeffs: Mapping[int, DiffPoly] | None = None,
        floor: int | None = None,
        regen: Callable[[int], "PsdOp"] | None = None,
    ):
        clean = {}
        for order, c in (coeffs or {}).items():
            c = ring.coerce(c)
            if floor is not None and order < floor:
                continue
            if c:
                clean[int(order)] = c
        self.ring = ring
        self.coeffs = dict(sorted(clean.items(), reverse=True))
        self.floor = floor
        self.regen = regen

    # -- constructors ----------------------------------------------------

    @classmethod
    def zero(cls, ring: Ring) -> "PsdOp":
        return cls(ring)

    @classmethod
    def scalar(cls, f: DiffPoly) -> "PsdOp":
        return cls(f.ring, {0: f})

    @classmethod
    def D(cls, ring: Ring, n: int = 1) -> "PsdOp":
        """``D^n``; exact even for negative ``n`` since it is a single term."""
        return cls(ring, {n: ring.one})

    @classmethod
    def regenerable(cls, ring: Ring, builder: Callable[[int], Mapping[int, DiffPoly]], floor: int) -> "PsdOp":
        """Operator whose coefficients above any floor come from ``builder(floor)``."""
        return cls(ring, builder(floor), floor, partial(cls.regenerable, ring, builder))

    # -- basic properties ------------------------------------------------

    @property
    def is_exact(self) -> bool:
        return self.floor is None

    @property
    def top(self) -> int | None:
        """Highest order with a nonzero coefficient (None for the zero operator)."""
        return next(iter(self.coeffs), None)

    def top_bound(self) -> int | None:
        """Upper bound for orders that may be nonzero, counting unknown ones."""
        t = self.top
        if self.floor is not None:
            t = self.floor - 1 if t is None else max(t, self.floor - 1)
        return t

    @property
    def min_order(self) -> int | None:
        return next(reversed(self.coeffs), None) if self.coeffs else None

    @property
    def is_differential(self) -> bool:
        """Known to have no negative-order part."""
        if self.floor is not None and self.floor > 0:
            return False
        return all(i >= 0 for i in self.coeffs)

    def at(self, floor: int) -> "PsdOp":
        """This operator known at least down to ``floor``."""
        if self.floor is None or self.floor <= floor:
            return self
        if self.regen is None:
            raise DepthUnreachableError(
                f"operator is a frozen truncation at floor {self.floor}; floor {floor} is needed"
            )
        return self.regen(floor)

    def truncate(self, floor: int) -> "PsdOp":
        """Forget everything below ``floor`` (keeps the regenerator)."""
        op = self.at(floor)
        return PsdOp(self.ring, op.coeffs, floor, op.regen if op.regen else (partial(_exact_regen, op) if op.floor is None else None))

    def __getitem__(self, order: int) -> DiffPoly:
        return coeff_at(self, order)

    def items(self):
        return self.coeffs.items()

    # -- arithmetic ------------------------------------------------------

    def _check(self, other: "PsdOp"):
        if other.ring is not self.ring:
            raise RingMismatchError(f"{other.ring!r} is not {self.ring!r}")

    def __add__(self, other: "PsdOp") -> "PsdOp":
        if not isinstance(other, PsdOp):
            return NotImplemented
        self._check(other)
        floors = [f for f in (self.floor, other.floor) if f is not None]
        floor = max(floors) if floors else None
        out = dict(self.coeffs)
        for i, c in other.coeffs.items():
            out[i] = out[i] + c if i in out else c
        regen = None
        if floor is not None and _regenerable(self) and _regenerable(other):
            regen = partial(_sum_regen, self, other)
        return PsdOp(self.ring, out, floor, regen)

    def __neg__(self) -> "PsdOp":
        neg_regen = partial(_neg_regen, self) if self.regen else None
        return PsdOp(self.ring, {i: -c for i, c in self.coeffs.items()}, self.floor, neg_regen)

    def __sub__(self, other: "PsdOp") -> "PsdOp":
        if not isinstance(other, PsdOp):
            return NotImplemented
        return self + (-other)

    def left_mul(self, f: DiffPoly) -> "PsdOp":
        """``f * A`` with ``f`` a function (multiplication operator) on the left."""
        f = self.ring.coerce(f)
        regen = partial(_left_mul_regen, self, f) if self.regen else None
        return PsdOp(self.ring, {i: f * c for i, c in self.coeffs.items()}, self.floor, regen)

    def map_coeffs(self, fn: Callable[[DiffPoly], DiffPoly], ring: Ring | None = None) -> "PsdOp":
        """Coefficient-wise map; the result is a frozen truncation."""
        ring = ring or self.ring
        return PsdOp(ring, {i: fn(c) for i, c in self.coeffs.items()}, self.floor)

    def coeff_derivative(self) -> "PsdOp":
        """Coefficient-wise total derivative, i.e. ``[D, A]``."""
        return self.map_coeffs(lambda c: c.D())

    # -- comparison ------------------------------------------------------

    def __eq__(self, other):
        if not isinstance(other, PsdOp):
            return NotImplemented
        return self.ring is other.ring and self.floor == other.floor and self.coeffs == other.coeffs

    __hash__ = None

    def agrees_with(self, other: "PsdOp", floor: int | None = None) -> bool:
        """Coefficients agree at every order both operators know (and ``>= floor``)."""
        self._check(other)
        lows = [f for f in (self.floor, other.floor, floor) if f is not None]
        low = max(lows) if lows else None
        orders = set(self.coeffs) | set(other.coeffs)
        for i in orders:
            if low is not None and i < low:
                continue
            if self.coeffs.get(i, self.ring.zero) != other.coeffs.get(i, self.ring.zero):
                return False
        return True

    def difference_orders(self, other: "PsdOp") -> list[int]:
        low = max([f for f in (self.floor, other.floor) if f is not None], default=None)
        bad = []
        for i in sorted(set(self.coeffs) | set(other.coeffs), reverse=True):
            if low is not None and i < low:
                continue
            if self.coeffs.get(i, self.ring.zero) != other.coeffs.get(i, self.ring.zero):
                bad.append(i)
        return bad

    # -- output ----------------------------------------------------------

    def render(self, fmt: str = "text") -> str:
        v = self.ring.variable
        parts = []
        for i, c in self.coeffs.items():
            body = c.render(fmt)
            if len(c) > 1:
                body = f"({body})"
            if i == 0:
                parts.append(body)
                continue
            if fmt == "text":
                dpow = "D" if i == 1 else f"D^{i}"
                parts.append(dpow if body == "1" else f"{body}*{dpow}")
            else:
                dpow = f"D_{{{v}}}" if i == 1 else f"D_{{{v}}}^{{{i}}}"
                parts.append(dpow if body == "1" else f"{body} {dpow}")
        if self.floor is not None:
            parts.append(f"O(D^{self.floor - 1})" if fmt == "text" else f"O(D_{{{v}}}^{{{self.floor - 1}}})")
        if not parts:
            return "0"
        text = " + ".join(parts)
        return text.replace("+ -", "- ")

    def __repr__(self):
        return f"PsdOp({self.render()})"

    def to_json(self) -> dict:
        floor = self.floor
        if floor is None:
            floor = self.min_order if self.coeffs else 0
        return {
            "floor": floor,
            "exact": self.floor is None,
            "coeffs": [{"order": i, "poly": c.to_json()} for i, c in self.coeffs.items()],
        }


def _regenerable(op: PsdOp) -> bool:
    return op.floor is None or op.regen is not None


def _exact_regen(op: PsdOp, floor: int) -> PsdOp:
    return op


def _sum_regen(a: PsdOp, b: PsdOp, floor: int) -> PsdOp:
    return a.at(floor) + b.at(floor)


def _neg_regen(a: PsdOp, floor: int) -> PsdOp:
    return -(a.at(floor))


def _left_mul_regen(a: PsdOp, f: DiffPoly, floor: int) -> PsdOp:
    return a.at(floor).left_mul(f)


def _acc(out: dict, order: int, a: DiffPoly, b: DiffPoly, scale: int):
    """``out[order] += scale * a * b`` on raw term dicts."""
    target = out.setdefault(order, {})
    get = target.get
    for kb, cb in b._terms.items():
        cbs = cb * scale
        for ka, ca in a._terms.items():
            k = _merge(ka, kb)
            target[k] = get(k, 0) + ca * cbs


def _finish(ring: Ring, out: dict) -> dict:
    result = {}
    for order, terms in out.items():
        clean = {k: _norm(c) for k, c in terms.items() if c}
        if clean:
            result[order] = DiffPoly._make(ring, clean)
    return result


# ---------------------------------------------------------------------------
# Operations


def expand_tail(w: DiffPoly, floor: int) -> PsdOp:
    """Left normal form of ``D^-1 o w``: ``sum_k (-1)^k D^k(w) D^(-1-k)``."""
    if floor > -1:
        raise ValueError(f"tail expansion needs floor <= -1, got {floor}")
    coeffs = {}
    d = w
    for k in range(-1 - floor + 1):
        coeffs[-1 - k] = d if k % 2 == 0 else -d
        d = d.D()
    return PsdOp(w.ring, coeffs, floor, partial(expand_tail, w))


@dataclass(frozen=True)
class IntegralTail:
    """The term ``D^-1 o kernel``."""

    kernel: DiffPoly

    def expand(self, floor: int) -> PsdOp:
        return expand_tail(self.kernel, floor)


def compose(a: PsdOp, b: PsdOp, floor: int | None = None) -> PsdOp:
    """``a o b`` known at every order ``>= floor``.

    With ``floor=None`` the product must be finite: both operands exact and
    ``a`` purely differential.
    """
    if a.ring is not b.ring:
        raise RingMismatchError("compose across ring contexts")
    ring = a.ring
    exact = a.floor is None and b.floor is None and a.is_differential
    if floor is None and not exact:
        raise DepthUnreachableError("composition is an infinite series; a floor is required")
    ta, tb = a.top_bound(), b.top_bound()
    if ta is None or tb is None:
        return PsdOp(ring, {}, None if exact else floor, None if exact else partial(_zero_regen, ring))
    if not exact:
        a = a.at(floor - tb)
        b = b.at(floor - ta)
    out: dict = {}
    derivs: dict[int, list[DiffPoly]] = {j: [bj] for j, bj in b.coeffs.items()}
    for i, ai in a.coeffs.items():
        for j in b.coeffs:
            chain = derivs[j]
            k = 0
            while True:
                m = i + j - k
                if not exact and m < floor:
                    break
                if i >= 0 and k > i:
                    break
                while len(chain) <= k:
                    chain.append(chain[-1].D())
                dk = chain[k]
                if not dk:
                    break
                _acc(out, m, ai, dk, binomial(i, k))
                k += 1
    coeffs = _finish(ring, out)
    if exact:
        return PsdOp(ring, coeffs)
    regen = None
    if _regenerable(a) and _regenerable(b):
        regen = partial(_compose_regen, a, b)
    return PsdOp(ring, coeffs, floor, regen)


def _zero_regen(ring: Ring, floor: int) -> PsdOp:
    return PsdOp(ring, {}, floor, partial(_zero_regen, ring))


def _compose_regen(a: PsdOp, b: PsdOp, floor: int) -> PsdOp:
    return compose(a, b, floor)


def project_geq(a: PsdOp, s: int) -> PsdOp:
    """``P_{>=s}``: the part of ``a`` at orders ``>= s``; always exact."""
    if a.floor is not None and s < a.floor:
        a = _deepen(a, s)
    return PsdOp(a.ring, {i: c for i, c in a.coeffs.items() if i >= s})


def project_lt(a: PsdOp, s: int) -> PsdOp:
    """The complement of :func:`project_geq`; keeps ``a``'s floor."""
    return PsdOp(a.ring, {i: c for i, c in a.coeffs.items() if i < s}, a.floor)


def _deepen(a: PsdOp, floor: int) -> PsdOp:
    try:
        return a.at(floor)
    except DepthUnreachableError:
        raise TruncationError(f"order {floor} is below the known floor {a.floor}") from None


def coeff_at(a: PsdOp, i: int) -> DiffPoly:
    """``[a]_i``: the exact coefficient of ``D^i``."""
    if a.floor is not None and i < a.floor:
        a = _deepen(a, i)
    return a.coeffs.get(i, a.ring.zero)


def commutator(a: PsdOp, b: PsdOp, floor: int | None = None) -> PsdOp:
    return compose(a, b, floor) - compose(b, a, floor)


def power(l: PsdOp, q: int, floor: int | None = None) -> PsdOp:
    """``l^q`` for ``q >= 1``, exact at every order ``>= floor``."""
    if q < 1:
        raise ValueError("power needs q >= 1")
    if q == 1:
        return l if floor is None else l.at(floor)
    t = l.top_bound()
    if t is None:
        return compose(l, l, floor)
    prev = power(l, q - 1, None if floor is None else floor - t)
    result = compose(prev, l, floor)
    if result.floor is not None and _regenerable(l):
        result = PsdOp(result.ring, result.coeffs, result.floor, partial(_power_regen, l, q))
    return result


def _power_regen(l: PsdOp, q: int, floor: int) -> PsdOp:
    return power(l, q, floor)


def apply(a: PsdOp, f: DiffPoly) -> DiffPoly:
    """Apply a differential operator to a function: ``sum a_i D^i(f)``."""
    if not a.is_differential:
        raise LaxforgeError("cannot apply an operator with negative-order terms")
    f = a.ring.coerce(f)
    total = a.ring.zero
    for i, c in a.coeffs.items():
        total = total + c * f.D(i)
    return total


def recognize_tail(a: PsdOp, depth: int) -> IntegralTail:
    """Read ``w`` off a negative part equal to ``D^-1 o w`` down to order ``-1-depth``."""
    if depth < 0:
        raise ValueError("depth must be >= 0")
    need = -1 - depth
    if a.floor is not None and a.floor > need:
        a = _deepen(a, need)
    w = a.coeffs.get(-1, a.ring.zero)
    d = w
    for k in range(1, depth + 1):
        d = d.D()
        expected = d if k % 2 == 0 else -d
        got = a.coeffs.get(-1 - k, a.ring.zero)
        if got != expected:
            raise TailInconsistentError(
                f"coefficient of D^{-1 - k} is {got}, expected {expected} for a D^-1 o ({w}) tail"
            )
    return IntegralTail(w)


def symbol_operator(phi: DiffPoly, n: int, floor: int | None) -> PsdOp:
    """``(phi D)^n`` in phi's ring; for ``n < 0`` this is ``(D^-1 o phi^-1)^|n|``."""
    if n == 0:
        return PsdOp.scalar(phi.ring.one)
    if n > 0:
        return power(PsdOp(phi.ring, {1: phi}), n)
    if not phi.is_invertible:
        raise InvertibilityError(f"{phi} is not invertible")
    inv = expand_tail(phi.inverse(), min(floor, -1))
    return power(inv, -n, floor)


def substitute_symbol(a: PsdOp, phi: DiffPoly, floor: int | None, target: Ring) -> PsdOp:
    """Replace ``D_x`` by ``phi D_z`` and re-expand in the ring ``target``.

    Coefficients move to ``target`` by :func:`change_variable` (``D_x = phi D_z``
    on generator jets); each power ``(phi D_z)^i`` is expanded by composition.
    """
    phi = target.coerce(phi)
    if not phi.is_invertible:
        raise InvertibilityError(f"symbol substitution needs an invertible phi, got {phi}")
    if floor is None:
        if a.floor is not None or not a.is_differential:
            raise DepthUnreachableError("substitution into an infinite series needs a floor")
    else:
        a = a.at(floor)
    out = PsdOp(target, {}, None if floor is None or a.is_differential and a.floor is None else floor)
    cache_pos = [PsdOp.scalar(target.one)]
    step = PsdOp(target, {1: phi})
    total: dict[int, DiffPoly] = {}
    for i, c in a.coeffs.items():
        ct = change_variable(c, target, phi)
        if i >= 0:
            while len(cache_pos) <= i:
                cache_pos.append(compose(cache_pos[-1], step))
            op = cache_pos[i]
        else:
            op = symbol_operator(phi, i, floor)
        for j, cj in op.coeffs.items():
            if out.floor is not None and j < out.floor:
                continue
            total[j] = total[j] + ct * cj if j in total else ct * cj
    regen = None
    if out.floor is not None and _regenerable(a):
        regen = partial(_subst_regen, a, phi, target)
    return PsdOp(target, total, out.floor, regen)


def _subst_regen(a: PsdOp, phi: DiffPoly, target: Ring, floor: int) -> PsdOp:
    return substitute_symbol(a, phi, floor, target)
