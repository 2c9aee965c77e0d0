"""Exact arithmetic in a differential polynomial ring.

A :class:`Ring` is an append-only list of generators.  Each generator has a
derivative rule:

  jet       D(u^(k)) = u^(k+1)
  constant  D(eps) = 0, no jets above order 0
  defined   D(chi) = a stored polynomial over earlier generators

A :class:`DiffPoly` is a finite sum of rational multiples of monomials in jet
variables.  Jet ``(gen, k)`` is packed into one int ``gen << 12 | k`` and a
monomial key is a tuple of ``(jet, exponent)`` pairs sorted by jet, so two
polynomials are equal iff their term dicts are equal.  Negative exponents are
only allowed on order-0 jets of invertible generators; everything stays a
Laurent polynomial, there are no radicals.

Coefficients are Python ints where integral and ``Fraction`` otherwise.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Iterator, Mapping, Union

from .errors import InvertibilityError, LaxforgeError, RingMismatchError

JET = "jet"
CONSTANT = "constant"
DEFINED = "defined"

_SHIFT = 12
_ORDER_MASK = (1 << _SHIFT) - 1
_NAME_RE = re.compile(r"[A-Za-z][A-Za-z0-9]*\Z")

LATEX_NAMES = {
    "eps": r"\epsilon",
    "epsilon": r"\epsilon",
    "chi": r"\chi",
    "lam": r"\lambda",
    "psi": r"\psi",
}

Number = Union[int, Fraction]
Key = tuple


def _norm(c):
    if type(c) is Fraction and c.denominator == 1:
        return c.numerator
    return c


def _merge(a: Key, b: Key) -> Key:
    """Product of two monomial keys."""
    if not a:
        return b
    if not b:
        return a
    out = []
    i = j = 0
    la, lb = len(a), len(b)
    while i < la and j < lb:
        x = a[i]
        y = b[j]
        if x[0] == y[0]:
            e = x[1] + y[1]
            if e:
                out.append((x[0], e))
            i += 1
            j += 1
        elif x[0] < y[0]:
            out.append(x)
            i += 1
        else:
            out.append(y)
            j += 1
    if i < la:
        out.extend(a[i:])
    if j < lb:
        out.extend(b[j:])
    return tuple(out)


def _lower(key: Key, idx: int) -> Key:
    var, e = key[idx]
    if e == 1:
        return key[:idx] + key[idx + 1:]
    return key[:idx] + ((var, e - 1),) + key[idx + 1:]


@dataclass(frozen=True)
class Generator:
    name: str
    invertible: bool = False
    rule: str = JET
    derivative: "DiffPoly | None" = None
    latex: str | None = None

    @property
    def latex_name(self) -> str:
        if self.latex:
            return self.latex
        if self.name in LATEX_NAMES:
            return LATEX_NAMES[self.name]
        m = re.fullmatch(r"([A-Za-z]+)(m?)(\d+)", self.name)
        if m:
            sign = "-" if m.group(2) else ""
            return f"{m.group(1)}_{{{sign}{m.group(3)}}}"
        return self.name


@dataclass(frozen=True)
class Monomial:
    coeff: Fraction
    factors: tuple  # ((generator name, jet order, exponent), ...)


class Ring:
    """Ring context: an ordered, append-only set of generators.

    ``variable`` names the independent variable that ``D`` differentiates by;
    it only affects rendering and parsing of jet suffixes.
    """

    def __init__(self, variable: str = "x"):
        if not re.fullmatch(r"[a-z]", variable):
            raise ValueError(f"independent variable must be one letter, got {variable!r}")
        self.variable = variable
        self._gens: list[Generator] = []
        self._index: dict[str, int] = {}
        self._dcache: dict[Key, dict] = {}

    def __repr__(self):
        names = ", ".join(g.name for g in self._gens)
        return f"Ring({self.variable}; {names})"

    @property
    def generators(self) -> tuple[Generator, ...]:
        return tuple(self._gens)

    def __contains__(self, name: str) -> bool:
        return name in self._index

    def generator(self, name: str) -> Generator:
        try:
            return self._gens[self._index[name]]
        except KeyError:
            raise KeyError(f"no generator {name!r} in {self!r}") from None

    def declare(
        self,
        name: str,
        *,
        invertible: bool = False,
        rule: str = JET,
        derivative=None,
        latex: str | None = None,
    ) -> "DiffPoly":
        if not _NAME_RE.match(name):
            raise ValueError(f"bad generator name {name!r}")
        if name in self._index:
            raise ValueError(f"generator {name!r} already declared")
        if rule not in (JET, CONSTANT, DEFINED):
            raise ValueError(f"unknown derivative rule {rule!r}")
        if rule == DEFINED:
            if derivative is None:
                raise ValueError("a defined generator needs its derivative")
            derivative = self.coerce(derivative)
        elif derivative is not None:
            raise ValueError("only defined generators carry a derivative")
        if len(self._gens) >= 1 << 20:
            raise ValueError("too many generators")
        self._index[name] = len(self._gens)
        self._gens.append(Generator(name, invertible, rule, derivative, latex))
        return self.jet(name)

    def jet(self, name: str, order: int = 0) -> "DiffPoly":
        gi = self._index.get(name)
        if gi is None:
            raise KeyError(f"no generator {name!r} in {self!r}")
        gen = self._gens[gi]
        if order < 0 or order > _ORDER_MASK:
            raise ValueError(f"bad jet order {order}")
        if order > 0 and gen.rule != JET:
            if gen.rule == CONSTANT:
                return self.zero
            return self.jet(name).D(order)
        return DiffPoly._make(self, {((gi << _SHIFT | order, 1),): 1})

    def const(self, value: Number) -> "DiffPoly":
        value = _norm(Fraction(value))
        return DiffPoly._make(self, {(): value} if value else {})

    @property
    def zero(self) -> "DiffPoly":
        return DiffPoly._make(self, {})

    @property
    def one(self) -> "DiffPoly":
        return DiffPoly._make(self, {(): 1})

    def coerce(self, value) -> "DiffPoly":
        if isinstance(value, DiffPoly):
            if value.ring is not self:
                raise RingMismatchError(f"{value.ring!r} is not {self!r}")
            return value
        if isinstance(value, str):
            return parse_poly(self, value)
        if isinstance(value, (int, Fraction)):
            return self.const(value)
        raise TypeError(f"cannot use {type(value).__name__} as a polynomial")

    def parse(self, text: str) -> "DiffPoly":
        return parse_poly(self, text)

    # -- internals -------------------------------------------------------

    def _unpack(self, var: int) -> tuple[Generator, int]:
        return self._gens[var >> _SHIFT], var & _ORDER_MASK

    def _d_key(self, key: Key) -> dict:
        cached = self._dcache.get(key)
        if cached is not None:
            return cached
        out: dict = {}
        for idx, (var, e) in enumerate(key):
            gen = self._gens[var >> _SHIFT]
            if gen.rule == CONSTANT:
                continue
            rest = _lower(key, idx)
            if gen.rule == JET:
                k = _merge(rest, ((var + 1, 1),))
                c = out.get(k, 0) + e
                if c:
                    out[k] = c
                else:
                    out.pop(k, None)
            else:
                for tk, tc in gen.derivative._terms.items():
                    k = _merge(rest, tk)
                    c = out.get(k, 0) + e * tc
                    if c:
                        out[k] = _norm(c)
                    else:
                        out.pop(k, None)
        self._dcache[key] = out
        return out


class DiffPoly:
    """Immutable element of a :class:`Ring`."""

    __slots__ = ("ring", "_terms", "_hash")

    def __init__(self, ring: Ring, terms: Mapping[Key, Number] | None = None):
        clean = {}
        for k, c in (terms or {}).items():
            c = _norm(Fraction(c))
            if c:
                clean[tuple(k)] = c
        self.ring = ring
        self._terms = clean
        self._hash = None

    @classmethod
    def _make(cls, ring: Ring, terms: dict) -> "DiffPoly":
        obj = cls.__new__(cls)
        obj.ring = ring
        obj._terms = terms
        obj._hash = None
        return obj

    # -- coercion and comparison -----------------------------------------

    def _other(self, other) -> "DiffPoly | None":
        if isinstance(other, DiffPoly):
            if other.ring is not self.ring:
                raise RingMismatchError(f"{other.ring!r} is not {self.ring!r}")
            return other
        if isinstance(other, (int, Fraction)):
            return self.ring.const(other)
        return None

    def __eq__(self, other):
        o = self._other(other) if isinstance(other, (int, Fraction)) else other
        if not isinstance(o, DiffPoly):
            return NotImplemented
        return o.ring is self.ring and o._terms == self._terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self._terms.items()))
        return self._hash

    def __bool__(self):
        return bool(self._terms)

    def __len__(self):
        return len(self._terms)

    @property
    def is_zero(self) -> bool:
        return not self._terms

    @property
    def is_constant(self) -> bool:
        return all(not k for k in self._terms)

    def constant_value(self) -> Fraction:
        return Fraction(self._terms.get((), 0))

    # -- arithmetic ------------------------------------------------------

    def __add__(self, other):
        o = self._other(other)
        if o is None:
            return NotImplemented
        if not o._terms:
            return self
        if not self._terms:
            return o
        out = dict(self._terms)
        for k, c in o._terms.items():
            s = out.get(k, 0) + c
            if s:
                out[k] = _norm(s)
            else:
                del out[k]
        return DiffPoly._make(self.ring, out)

    __radd__ = __add__

    def __neg__(self):
        return DiffPoly._make(self.ring, {k: -c for k, c in self._terms.items()})

    def __sub__(self, other):
        o = self._other(other)
        if o is None:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        o = self._other(other)
        if o is None:
            return NotImplemented
        return o + (-self)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            other = _norm(Fraction(other))
            if not other:
                return self.ring.zero
            return DiffPoly._make(self.ring, {k: _norm(c * other) for k, c in self._terms.items()})
        o = self._other(other)
        if o is None:
            return NotImplemented
        return DiffPoly._make(self.ring, _mul_terms(self._terms, o._terms))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            return self * (1 / Fraction(other))
        o = self._other(other)
        if o is None:
            return NotImplemented
        return self * o.inverse()

    def __pow__(self, n: int):
        if not isinstance(n, int):
            return NotImplemented
        if n < 0:
            return self.inverse() ** (-n)
        result = self.ring.one
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    @property
    def is_invertible(self) -> bool:
        if len(self._terms) != 1:
            return False
        (key,) = self._terms
        gens = self.ring._gens
        return all((var & _ORDER_MASK) == 0 and gens[var >> _SHIFT].invertible for var, _ in key)

    def inverse(self) -> "DiffPoly":
        if not self.is_invertible:
            raise InvertibilityError(f"{self} is not an invertible monomial")
        ((key, c),) = self._terms.items()
        return DiffPoly._make(
            self.ring, {tuple((var, -e) for var, e in key): _norm(1 / Fraction(c))}
        )

    def D(self, times: int = 1) -> "DiffPoly":
        """Total derivative, applied ``times`` times."""
        p = self
        for _ in range(times):
            out: dict = {}
            dk = p.ring._d_key
            for key, c in p._terms.items():
                for k2, c2 in dk(key).items():
                    s = out.get(k2, 0) + c * c2
                    if s:
                        out[k2] = s
                    else:
                        del out[k2]
            p = DiffPoly._make(p.ring, {k: _norm(c) for k, c in out.items()})
        return p

    # -- inspection ------------------------------------------------------

    def _sort_key(self, key: Key):
        return (sum(e for _, e in key), key)

    def monomials(self) -> Iterator[Monomial]:
        """Terms in canonical (graded lexicographic) order."""
        for key in sorted(self._terms, key=self._sort_key):
            factors = tuple(
                (self.ring._gens[var >> _SHIFT].name, var & _ORDER_MASK, e) for var, e in key
            )
            yield Monomial(Fraction(self._terms[key]), factors)

    def jets(self) -> set[tuple[str, int]]:
        gens = self.ring._gens
        return {(gens[var >> _SHIFT].name, var & _ORDER_MASK) for key in self._terms for var, _ in key}

    def generators_used(self) -> set[str]:
        return {name for name, _ in self.jets()}

    def degree_in(self, names: Iterable[str]) -> int:
        """Max total degree in all jets of the named generators (0 for the zero poly)."""
        names = set(names)
        gens = self.ring._gens
        best = 0
        for key in self._terms:
            d = sum(e for var, e in key if gens[var >> _SHIFT].name in names)
            best = max(best, d)
        return best

    def filter(self, keep: Callable[[Monomial], bool]) -> "DiffPoly":
        kept = {}
        gens = self.ring._gens
        for key, c in self._terms.items():
            mono = Monomial(
                Fraction(c), tuple((gens[var >> _SHIFT].name, var & _ORDER_MASK, e) for var, e in key)
            )
            if keep(mono):
                kept[key] = c
        return DiffPoly._make(self.ring, kept)

    def max_jet_order(self) -> int:
        return max((var & _ORDER_MASK for key in self._terms for var, _ in key), default=0)

    # -- output ----------------------------------------------------------

    def to_json(self) -> list:
        out = []
        for m in self.monomials():
            out.append(
                {
                    "coeff": f"{m.coeff.numerator}/{m.coeff.denominator}",
                    "factors": [{"gen": g, "jet": k, "exp": e} for g, k, e in m.factors],
                }
            )
        return out

    def render(self, fmt: str = "text") -> str:
        if fmt not in ("text", "latex"):
            raise ValueError(f"unknown format {fmt!r}")
        if not self._terms:
            return "0"
        pieces = []
        for i, m in enumerate(self.monomials()):
            body = _render_factors(self.ring, m.factors, fmt)
            c = m.coeff
            mag = abs(c)
            if fmt == "text":
                if mag == 1 and body:
                    text = body
                elif body:
                    text = f"{mag}*{body}"
                else:
                    text = str(mag)
            else:
                if mag == 1 and body:
                    text = body
                elif mag.denominator != 1:
                    num = rf"\frac{{{mag.numerator}}}{{{mag.denominator}}}"
                    text = f"{num} {body}" if body else num
                else:
                    text = f"{mag} {body}" if body else str(mag)
            if i == 0:
                pieces.append("-" + text if c < 0 else text)
            else:
                pieces.append((" - " if c < 0 else " + ") + text)
        return "".join(pieces)

    def __str__(self):
        return self.render("text")

    def __repr__(self):
        return f"DiffPoly({self.render('text')})"

    # -- ring maps -------------------------------------------------------

    def substitute(self, bindings, target: Ring | None = None) -> "DiffPoly":
        return substitute(self, bindings, target)

    def evolve(self, flows: Mapping[str, "DiffPoly"]) -> "DiffPoly":
        return evolve(self, flows)


def _mul_terms(a: dict, b: dict) -> dict:
    if not a or not b:
        return {}
    if len(a) < len(b):
        a, b = b, a
    out: dict = {}
    get = out.get
    for kb, cb in b.items():
        for ka, ca in a.items():
            k = _merge(ka, kb)
            out[k] = get(k, 0) + ca * cb
    return {k: _norm(c) for k, c in out.items() if c}


def jet_label(ring: Ring, name: str, order: int, fmt: str = "text") -> str:
    gen = ring.generator(name)
    v = ring.variable
    if fmt == "text":
        if order == 0:
            return name
        if order <= 3:
            return f"{name}_{v * order}"
        return f"{name}^({order})"
    base = gen.latex_name
    if order == 0:
        return base
    if order <= 3:
        return f"({base})_{{{v * order}}}" if "_" in base else f"{base}_{{{v * order}}}"
    return f"({base})^{{({order})}}" if "^" in base else f"{base}^{{({order})}}"


def _render_factors(ring: Ring, factors, fmt: str) -> str:
    parts = []
    for name, k, e in factors:
        label = jet_label(ring, name, k, fmt)
        if e != 1:
            if fmt == "text":
                label = f"{label}^{e}"
            else:
                if "^" in label:
                    label = f"({label})"
                label = f"{label}^{{{e}}}"
        parts.append(label)
    return ("*" if fmt == "text" else " ").join(parts)


# ---------------------------------------------------------------------------
# Spec-level operations


def poly_add(a: DiffPoly, b: DiffPoly) -> DiffPoly:
    if a.ring is not b.ring:
        raise RingMismatchError("poly_add across ring contexts")
    return a + b


def poly_mul(a: DiffPoly, b: DiffPoly) -> DiffPoly:
    if a.ring is not b.ring:
        raise RingMismatchError("poly_mul across ring contexts")
    return a * b


def total_derivative(a: DiffPoly) -> DiffPoly:
    return a.D()


def _map_terms(a: DiffPoly, target: Ring, image: Callable[[int], DiffPoly]) -> DiffPoly:
    """Apply the ring map sending packed jet ``var`` to ``image(var)``."""
    powers: dict = {}

    def power(var, e):
        p = powers.get((var, e))
        if p is None:
            base = image(var)
            if e < 0:
                gen, k = a.ring._unpack(var)
                if not base.is_invertible:
                    raise InvertibilityError(
                        f"{jet_label(a.ring, gen.name, k)} appears with negative exponent "
                        f"but its image {base} is not invertible"
                    )
            p = base ** e
            powers[(var, e)] = p
        return p

    out: dict = {}
    for key, c in a._terms.items():
        term = {(): c}
        for var, e in key:
            term = _mul_terms(term, power(var, e)._terms)
            if not term:
                break
        for k, v in term.items():
            s = out.get(k, 0) + v
            if s:
                out[k] = s
            else:
                del out[k]
    return DiffPoly._make(target, {k: _norm(c) for k, c in out.items()})


def substitute(a: DiffPoly, bindings, target: Ring | None = None) -> DiffPoly:
    """Simultaneous substitution of jets.

    ``bindings`` maps a generator name (meaning its order-0 jet) or a
    ``(name, order)`` pair to a value in ``target`` (default: ``a.ring``).  Higher
    jets of a bound generator are bound to total derivatives of the nearest
    bound lower jet, so the map commutes with ``D``.  Unbound generators map to
    the generator of the same name in ``target``.
    """
    target = target or a.ring
    bound: dict[tuple[str, int], DiffPoly] = {}
    for k, v in bindings.items():
        name, order = (k, 0) if isinstance(k, str) else k
        bound[(name, order)] = target.coerce(v)
    cache: dict[int, DiffPoly] = {}

    def image(var):
        got = cache.get(var)
        if got is not None:
            return got
        gen, k = a.ring._unpack(var)
        if (gen.name, k) in bound:
            val = bound[(gen.name, k)]
        else:
            lower = [j for (n, j) in bound if n == gen.name and j < k]
            if lower:
                j = max(lower)
                val = bound[(gen.name, j)].D(k - j)
            else:
                val = target.jet(gen.name, k)
        cache[var] = val
        return val

    return _map_terms(a, target, image)


def change_variable(a: DiffPoly, target: Ring, phi: DiffPoly) -> DiffPoly:
    """Rewrite ``a`` in the ring of another independent variable.

    ``target`` differentiates by ``z`` with ``D_x = phi * D_z``; a jet of order
    ``k`` in ``a.ring`` goes to ``(phi D_z)^k`` applied to the same-named
    generator in ``target``.
    """
    phi = target.coerce(phi)
    chains: dict[str, list[DiffPoly]] = {}

    def image(var):
        gen, k = a.ring._unpack(var)
        if gen.rule != JET:
            return target.jet(gen.name)
        chain = chains.setdefault(gen.name, [target.jet(gen.name)])
        while len(chain) <= k:
            chain.append(phi * chain[-1].D())
        return chain[k]

    return _map_terms(a, target, image)


def evolve(a: DiffPoly, flows: Mapping[str, DiffPoly]) -> DiffPoly:
    """Time derivative of ``a`` along an evolution system.

    ``flows[name]`` is the right-hand side for generator ``name``; the jet of
    order k evolves by ``D^k(flows[name])``.  Constant generators do not evolve.
    """
    ring = a.ring
    rates: dict[int, DiffPoly] = {}

    def rate(var):
        r = rates.get(var)
        if r is None:
            gen, k = ring._unpack(var)
            if gen.name not in flows:
                raise LaxforgeError(f"no evolution given for generator {gen.name!r}")
            r = ring.coerce(flows[gen.name]).D(k)
            rates[var] = r
        return r

    out: dict = {}
    gens = ring._gens
    for key, c in a._terms.items():
        for idx, (var, e) in enumerate(key):
            if gens[var >> _SHIFT].rule == CONSTANT:
                continue
            r = rate(var)
            if not r._terms:
                continue
            rest = _lower(key, idx)
            ce = c * e
            for rk, rc in r._terms.items():
                k = _merge(rest, rk)
                s = out.get(k, 0) + ce * rc
                if s:
                    out[k] = s
                else:
                    del out[k]
    return DiffPoly._make(ring, {k: _norm(c) for k, c in out.items()})


def partial(a: DiffPoly, name: str, order: int = 0) -> DiffPoly:
    """Partial derivative with respect to one jet variable."""
    ring = a.ring
    target = ring._index[name] << _SHIFT | order
    out: dict = {}
    for key, c in a._terms.items():
        for idx, (var, e) in enumerate(key):
            if var == target:
                k = _lower(key, idx)
                out[k] = _norm(out.get(k, 0) + c * e)
    return DiffPoly._make(ring, {k: c for k, c in out.items() if c})


def from_json(ring: Ring, data: list) -> DiffPoly:
    total = ring.zero
    for term in data:
        mono = ring.const(Fraction(term["coeff"]))
        for f in term["factors"]:
            mono = mono * ring.jet(f["gen"], f["jet"]) ** f["exp"]
        total = total + mono
    return total


# ---------------------------------------------------------------------------
# Text parser: sums of products, implicit multiplication, u_x / u_xx jets,
# u^(4) for jet order 4, integer powers written u^2 or u^-1.

_TOKEN_RE = re.compile(r"\s*(?:(\d+)|([A-Za-z][A-Za-z0-9]*)(?:_([A-Za-z]+))?|(\S))")


class PolyParseError(LaxforgeError, ValueError):
    def __init__(self, message: str, position: int):
        super().__init__(f"at column {position + 1}: {message}")
        self.position = position


class _PolyParser:
    def __init__(self, ring: Ring, text: str):
        self.ring = ring
        self.text = text
        self.tokens = []
        pos = 0
        while True:
            m = _TOKEN_RE.match(text, pos)
            if not m or m.end() == pos:
                break
            num, name, suffix, sym = m.groups()
            start = m.start(m.lastindex)
            if num is not None:
                self.tokens.append(("num", int(num), start))
            elif name is not None:
                self.tokens.append(("name", (name, suffix), start))
            else:
                self.tokens.append(("sym", sym, start))
            pos = m.end()
        self.tokens.append(("end", None, len(text)))
        self.i = 0

    def peek(self, offset=0):
        return self.tokens[min(self.i + offset, len(self.tokens) - 1)]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def fail(self, message, tok=None):
        tok = tok or self.peek()
        raise PolyParseError(message, tok[2])

    def expect(self, sym):
        tok = self.take()
        if tok[0] != "sym" or tok[1] != sym:
            self.fail(f"expected {sym!r}", tok)

    def parse(self) -> DiffPoly:
        if self.peek()[0] == "end":
            self.fail("empty expression")
        p = self.expr()
        if self.peek()[0] != "end":
            self.fail("unexpected input")
        return p

    def expr(self):
        sign = 1
        tok = self.peek()
        if tok[0] == "sym" and tok[1] in "+-":
            self.take()
            sign = -1 if tok[1] == "-" else 1
        total = self.term() * sign
        while True:
            tok = self.peek()
            if tok[0] == "sym" and tok[1] in "+-":
                self.take()
                t = self.term()
                total = total + t if tok[1] == "+" else total - t
            else:
                return total

    def term(self):
        value = self.factor()
        while True:
            tok = self.peek()
            if tok[0] == "sym" and tok[1] == "*":
                self.take()
                value = value * self.factor()
            elif tok[0] == "sym" and tok[1] == "/":
                self.take()
                tok = self.peek()
                denom = self.factor()
                if not denom.is_invertible:
                    self.fail("can only divide by an invertible monomial", tok)
                value = value * denom.inverse()
            elif tok[0] in ("num", "name") or (tok[0] == "sym" and tok[1] == "("):
                value = value * self.factor()
            else:
                return value

    def factor(self):
        base = self.atom()
        tok = self.peek()
        if tok[0] == "sym" and tok[1] == "^":
            self.take()
            sign = 1
            tok = self.peek()
            if tok[0] == "sym" and tok[1] == "-":
                self.take()
                sign = -1
            tok = self.take()
            if tok[0] != "num":
                self.fail("expected an integer exponent", tok)
            try:
                base = base ** (sign * tok[1])
            except InvertibilityError as exc:
                self.fail(str(exc), tok)
        return base

    def atom(self):
        tok = self.take()
        if tok[0] == "num":
            return self.ring.const(tok[1])
        if tok[0] == "sym" and tok[1] == "(":
            p = self.expr()
            self.expect(")")
            return p
        if tok[0] == "name":
            name, suffix = tok[1]
            if name not in self.ring:
                self.fail(f"unknown generator {name!r}", tok)
            order = 0
            if suffix is not None:
                if set(suffix) != {self.ring.variable}:
                    self.fail(f"jet suffix must repeat {self.ring.variable!r}", tok)
                order = len(suffix)
            elif (
                self.peek()[0] == "sym"
                and self.peek()[1] == "^"
                and self.peek(1)[0] == "sym"
                and self.peek(1)[1] == "("
            ):
                self.take()
                self.take()
                num = self.take()
                if num[0] != "num":
                    self.fail("expected a jet order", num)
                self.expect(")")
                order = num[1]
            return self.ring.jet(name, order)
        self.fail("unexpected token", tok)


def parse_poly(ring: Ring, text: str) -> DiffPoly:
    """Parse text such as ``"eps*u_x*v^2 - 2 eps u v v_x"`` into ``ring``."""
    return _PolyParser(ring, text).parse()
