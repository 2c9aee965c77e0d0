"""Line-oriented Lax specification files.

A file is a list of ``key = value`` lines; ``#`` starts a comment::

    name = broer-kaup
    N = 1
    coeff 1 = u invertible
    coeff 0 = v
    tail = w
    epsilon = symbolic

``coeff <order> = <name> [unit|invertible]`` declares the field at ``D^order``
(``unit`` at order ``N`` means the top coefficient is the constant 1 and the
name is only a label).  ``tail = <name>`` adds ``D^-1 o <name>``;
``general_tail = true`` instead gives the infinite form with a field at every
negative order.  ``new <order> = <name>`` names the transformed fields.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import SpecSemanticError, SpecSyntaxError
from .hierarchy import LaxSpec

RESERVED = frozenset({"eps", "g", "c", "chi", "p"})

_IDENT = re.compile(r"[A-Za-z][A-Za-z0-9]*")
_SPEC_NAME = re.compile(r"[A-Za-z0-9][A-Za-z0-9_.~-]*")
_INT = re.compile(r"[+-]?\d+")
_SIMPLE_KEYS = ("name", "N", "tail", "general_tail", "epsilon", "q_max", "depth", "dispersionless")
_BOOLS = {"true": True, "false": False}


@dataclass(frozen=True)
class SpecFile:
    name: str
    lax: LaxSpec
    q_max: int = 2
    depth: int | None = None
    dispersionless: bool = False

    def default_depth(self) -> int:
        return self.q_max * self.lax.N + 6


@dataclass
class _Entry:
    key: str
    arg: int | None
    value: str
    line: int
    value_col: int


def _tokenize(text: str) -> list[_Entry]:
    entries = []
    significant = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        significant = True
        eq = line.find("=")
        if eq < 0:
            col = len(line) - len(line.lstrip()) + 1
            raise SpecSyntaxError("expected 'key = value'", lineno, col)
        lhs = line[:eq]
        words = lhs.split()
        key_col = len(lhs) - len(lhs.lstrip()) + 1
        if not words:
            raise SpecSyntaxError("missing key before '='", lineno, eq + 1)
        key = words[0]
        arg = None
        if key in ("coeff", "new"):
            if len(words) != 2:
                raise SpecSyntaxError(f"'{key}' needs exactly one order, as in '{key} 0 = name'", lineno, key_col)
            arg_col = lhs.index(words[1], key_col - 1 + len(key)) + 1
            if not _INT.fullmatch(words[1]):
                raise SpecSyntaxError(f"order must be an integer, got {words[1]!r}", lineno, arg_col)
            arg = int(words[1])
        elif key in _SIMPLE_KEYS:
            if len(words) != 1:
                raise SpecSyntaxError(f"unexpected text after key '{key}'", lineno, key_col + len(key) + 1)
        else:
            raise SpecSyntaxError(f"unknown key {key!r}", lineno, key_col)
        rest = line[eq + 1:]
        value = rest.strip()
        value_col = eq + 2 + (len(rest) - len(rest.lstrip()))
        if not value:
            raise SpecSyntaxError(f"missing value for '{key}'", lineno, eq + 2)
        entries.append(_Entry(key, arg, value, lineno, value_col))
    if not significant:
        raise SpecSyntaxError("empty specification", 1, 1)
    return entries


def _int_value(e: _Entry) -> int:
    if not _INT.fullmatch(e.value):
        raise SpecSyntaxError(f"'{e.key}' must be an integer, got {e.value!r}", e.line, e.value_col)
    return int(e.value)


def _bool_value(e: _Entry) -> bool:
    if e.value not in _BOOLS:
        raise SpecSyntaxError(f"'{e.key}' must be true or false, got {e.value!r}", e.line, e.value_col)
    return _BOOLS[e.value]


def _ident(e: _Entry, text: str, col: int) -> str:
    if not _IDENT.fullmatch(text):
        raise SpecSyntaxError(f"invalid field name {text!r}", e.line, col)
    if text in RESERVED:
        raise SpecSemanticError(f"line {e.line}: field name {text!r} is reserved")
    return text


def _key_label(e: _Entry) -> str:
    return e.key if e.arg is None else f"{e.key} {e.arg}"


def parse_spec(text: str) -> SpecFile:
    """Parse spec text; raises ``SpecSyntaxError`` (with position) or ``SpecSemanticError``."""
    entries = _tokenize(text)
    seen: dict[str, int] = {}
    for e in entries:
        label = _key_label(e)
        if label in seen:
            raise SpecSemanticError(f"duplicate key '{label}' (lines {seen[label]} and {e.line})")
        seen[label] = e.line

    values: dict = {}
    coeffs: dict[int, tuple[str, str | None, _Entry]] = {}
    new_names: dict[int, str] = {}
    for e in entries:
        if e.key == "coeff":
            words = e.value.split()
            if len(words) > 2:
                col = e.value_col + e.value.index(words[2])
                raise SpecSyntaxError("expected '<name> [unit|invertible]'", e.line, col)
            name = _ident(e, words[0], e.value_col)
            flag = None
            if len(words) == 2:
                flag = words[1]
                if flag not in ("unit", "invertible"):
                    col = e.value_col + e.value.index(flag, len(words[0]))
                    raise SpecSyntaxError(f"unknown flag {flag!r}; expected 'unit' or 'invertible'", e.line, col)
            coeffs[e.arg] = (name, flag, e)
        elif e.key == "new":
            new_names[e.arg] = _ident(e, e.value, e.value_col)
        elif e.key in ("N", "q_max", "depth"):
            values[e.key] = _int_value(e)
        elif e.key in ("general_tail", "dispersionless"):
            values[e.key] = _bool_value(e)
        elif e.key == "epsilon":
            if e.value not in ("symbolic", "0"):
                raise SpecSyntaxError(f"epsilon must be 'symbolic' or '0', got {e.value!r}", e.line, e.value_col)
            values[e.key] = "symbolic" if e.value == "symbolic" else "zero"
        elif e.key == "tail":
            values["tail"] = _ident(e, e.value, e.value_col)
        elif e.key == "name":
            if not _SPEC_NAME.fullmatch(e.value):
                raise SpecSyntaxError(f"invalid spec name {e.value!r}", e.line, e.value_col)
            values["name"] = e.value

    if "N" not in values:
        raise SpecSemanticError("missing required key 'N'")
    N = values["N"]
    if N < 1:
        raise SpecSemanticError(f"N must be positive, got {N}")
    general = values.get("general_tail", False)
    if general and "tail" in values:
        raise SpecSemanticError("'tail' and 'general_tail = true' exclude each other")
    q_max = values.get("q_max", 2)
    if q_max < 1:
        raise SpecSemanticError(f"q_max must be at least 1, got {q_max}")
    depth = values.get("depth")
    if depth is not None and depth < 2:
        raise SpecSemanticError(f"depth must be at least 2, got {depth}")

    names: dict[int, str] = {}
    invertible = set()
    present = set()
    normalized = False
    for order, (name, flag, e) in coeffs.items():
        if not 0 <= order <= N:
            raise SpecSemanticError(f"line {e.line}: 'coeff {order}' outside 0..N (use 'tail' for order -1)")
        names[order] = name
        if flag == "unit":
            if order != N:
                raise SpecSemanticError(f"line {e.line}: 'unit' is only allowed on the top order {N}")
            normalized = True
            continue
        present.add(order)
        if flag == "invertible":
            invertible.add(order)
    if N not in coeffs:
        raise SpecSemanticError(f"missing 'coeff {N}' for the top order")
    if "tail" in values:
        names[-1] = values["tail"]
        present.add(-1)
    for order in new_names:
        if order > N or (order < -1 and not general):
            raise SpecSemanticError(f"'new {order}' refers to an order the operator does not have")
    fields = [names[o] for o in present]
    if len(set(fields)) != len(fields):
        raise SpecSemanticError("field names must be distinct")
    if len(set(new_names.values())) != len(new_names):
        raise SpecSemanticError("new field names must be distinct")

    lax = LaxSpec(
        N=N,
        present_orders=present,
        general_tail=general,
        epsilon_mode=values.get("epsilon", "symbolic"),
        normalized_top=normalized,
        names=names,
        invertible=invertible,
        new_names=new_names,
        name=values.get("name", "lax"),
    )
    return SpecFile(
        name=lax.name,
        lax=lax,
        q_max=q_max,
        depth=depth,
        dispersionless=values.get("dispersionless", False),
    )


def render_spec(spec: SpecFile) -> str:
    """Canonical text; ``parse_spec(render_spec(s))`` renders back byte-identically."""
    lax = spec.lax
    lines = [f"name = {spec.name}", f"N = {lax.N}"]
    for order in range(lax.N, -1, -1):
        if order == lax.N and lax.normalized_top:
            lines.append(f"coeff {order} = {lax.field_name(order)} unit")
        elif order in lax.present_orders:
            flag = " invertible" if order in lax.invertible else ""
            lines.append(f"coeff {order} = {lax.field_name(order)}{flag}")
    if lax.has_tail:
        lines.append(f"tail = {lax.field_name(-1)}")
    if lax.general_tail:
        lines.append("general_tail = true")
    lines.append(f"epsilon = {'symbolic' if lax.epsilon_mode == 'symbolic' else '0'}")
    lines.append(f"q_max = {spec.q_max}")
    if spec.depth is not None:
        lines.append(f"depth = {spec.depth}")
    lines.append(f"dispersionless = {'true' if spec.dispersionless else 'false'}")
    for order in sorted(lax.new_names, reverse=True):
        lines.append(f"new {order} = {lax.new_names[order]}")
    return "\n".join(lines) + "\n"
