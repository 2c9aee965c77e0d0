"""Command-line front end.

Exit codes: 0 success, 1 a verification failed, 2 bad input, 3 engine error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field, replace
from typing import Callable

from . import dispersionless as dl
from .diffpoly import DiffPoly
from .errors import (
    ClosednessViolationError,
    LaxforgeError,
    NormalizationError,
    SpecError,
    StructureViolationError,
    TailInconsistentError,
)
from .hierarchy import (
    FlowSystem,
    LaxModel,
    conservation_report,
    derive_flow,
    top_evolution_residual,
    zero_curvature_residual,
)
from .specfile import SpecFile, parse_spec
from .transform import (
    PushforwardReport,
    ReciprocalForm,
    TransformResult,
    coefficient_invariance_check,
    pushforward_check,
    reciprocal_form,
    restore_top,
    theorem1_pushforward_check,
    theorem1_transform,
    theorem2_model,
    theorem2_transform,
)

EXIT_OK = 0
EXIT_VERIFICATION = 1
EXIT_INPUT = 2
EXIT_ENGINE = 3

DEPTH_ENV = "LAXFORGE_DEPTH"
SCHEMA_ID = "laxforge.report/1"

# outcomes of a check rather than failures of the engine
_CHECK_ERRORS = (StructureViolationError, TailInconsistentError, ClosednessViolationError, NormalizationError)


class InputError(Exception):
    """Bad command-line input (exit code 2)."""


@dataclass
class Check:
    passed: bool
    residual: DiffPoly | None = None
    detail: str | None = None

    def to_json(self) -> dict:
        return {
            "pass": self.passed,
            "residual": None if self.residual is None else self.residual.to_json(),
            "detail": self.detail,
        }


@dataclass
class ReportBundle:
    command: str
    spec: SpecFile
    symbol: str
    depth: int
    epsilon: str
    flows: list = field(default_factory=list)
    transform: TransformResult | None = None
    variable_map: dict = field(default_factory=dict)
    form: ReciprocalForm | None = None
    verifications: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.verifications.values())

    def to_json(self) -> dict:
        return {
            "schema": SCHEMA_ID,
            "command": self.command,
            "spec": self.spec.name,
            "symbol": self.symbol,
            "epsilon": self.epsilon,
            "depth": self.depth,
            "flows": [f.to_json() for f in self.flows],
            "transform": None if self.transform is None else {
                **self.transform.to_json(),
                "display_map": [{"field": n, "poly": p.to_json()} for n, p in self.variable_map.items()],
            },
            "reciprocal_form": None if self.form is None else self.form.to_json(),
            "verifications": {name: c.to_json() for name, c in self.verifications.items()},
        }


@dataclass(frozen=True)
class RunOptions:
    q: int | None = None
    depth: int | None = None
    epsilon: str | None = None
    theorem: int = 2
    dispersionless: bool = False


def resolve_depth(spec: SpecFile, flag: int | None, environ=os.environ) -> int:
    """``--depth`` beats the spec file, which beats ``LAXFORGE_DEPTH``, which beats ``q_max N + 6``."""
    if flag is not None:
        depth = flag
    elif spec.depth is not None:
        depth = spec.depth
    elif environ.get(DEPTH_ENV):
        raw = environ[DEPTH_ENV]
        try:
            depth = int(raw)
        except ValueError:
            raise InputError(f"{DEPTH_ENV} must be an integer, got {raw!r}") from None
    else:
        depth = spec.default_depth()
    if depth < 2:
        raise InputError(f"depth must be at least 2, got {depth}")
    return depth


def _effective(spec: SpecFile, options: RunOptions) -> tuple[SpecFile, int]:
    lax = spec.lax
    if options.epsilon is not None:
        lax = lax.with_epsilon("symbolic" if options.epsilon == "symbolic" else "zero")
    q_max = spec.q_max if options.q is None else options.q
    if q_max < 1:
        raise InputError(f"--q must be at least 1, got {q_max}")
    return replace(spec, lax=lax, q_max=q_max), q_max


def _first_nonzero(residuals) -> DiffPoly | None:
    for r in residuals:
        if not r.is_zero:
            return r
    return None


def _guard(fn: Callable[[], Check]) -> Check:
    try:
        return fn()
    except _CHECK_ERRORS as exc:
        return Check(False, detail=f"{type(exc).__name__}: {exc}")


def _poly_check(r: DiffPoly) -> Check:
    return Check(r.is_zero, None if r.is_zero else r)


def _report_check(rep: PushforwardReport) -> Check:
    bad = _first_nonzero(rep.residuals.values())
    return Check(bad is None, bad)


def _structure(fn) -> Check:
    fn()
    return Check(True)


def verification_suite(spec: SpecFile, q_max: int, depth: int, dispersionless: bool) -> dict[str, Callable[[], Check]]:
    """Named checks for ``verify``; each returns a ``Check`` when called."""
    lax = spec.lax
    model = LaxModel(lax)
    checks: dict[str, Callable[[], Check]] = {}
    qs = range(1, q_max + 1)
    for q in qs:
        checks[f"structure[q={q}]"] = lambda q=q: _structure(lambda: derive_flow(model, q, depth=depth))
    if not lax.normalized_top:
        for q in qs:
            checks[f"top_evolution[q={q}]"] = lambda q=q: _poly_check(top_evolution_residual(model, q))
        for q in qs:
            checks[f"conservation[q={q}]"] = lambda q=q: _poly_check(conservation_report(model, q).corrected_residual)
        checks[f"reciprocal_form[q<={q_max}]"] = lambda: _structure(lambda: reciprocal_form(model, q_max))
    if q_max >= 2:
        def zc():
            bad = _first_nonzero(zero_curvature_residual(model, 1, 2).coeffs.values())
            return Check(bad is None, bad)
        checks["zero_curvature[1,2]"] = zc

    t2 = {}
    t1 = {}

    def cached(store, build):
        if "T" not in store:
            store["T"] = build()
        return store["T"]

    for q in qs:
        checks[f"theorem2_pushforward[q={q}]"] = lambda q=q: _report_check(
            pushforward_check(lax, q, depth, cached(t2, lambda: theorem2_transform(lax, depth))))
        checks[f"coefficient_invariance[q={q}]"] = lambda q=q: Check(
            coefficient_invariance_check(lax, q, depth, cached(t2, lambda: theorem2_transform(lax, depth))))
        checks[f"theorem1_pushforward[q={q}]"] = lambda q=q: _report_check(
            theorem1_pushforward_check(lax, q, depth, cached(t1, lambda: theorem1_transform(lax, depth))))

    if dispersionless:
        t4 = {}
        t3 = {}
        for q in qs:
            checks[f"dl_structure[q={q}]"] = lambda q=q: _structure(lambda: dl.dl_derive_flow(model, q, depth=depth))
            checks[f"principal_symbol[q={q}]"] = lambda q=q: _principal_symbol(model, q, depth)
            if not lax.normalized_top:
                checks[f"dl_top_evolution[q={q}]"] = lambda q=q: _poly_check(dl.dl_top_evolution_residual(model, q))
                checks[f"dl_conservation[q={q}]"] = lambda q=q: _poly_check(dl.dl_conservation_report(model, q).corrected_residual)
            checks[f"theorem4_pushforward[q={q}]"] = lambda q=q: _report_check(
                dl.dl_theorem4_pushforward(lax, q, depth, cached(t4, lambda: dl.dl_theorem4_transform(lax))))
            checks[f"theorem3_pushforward[q={q}]"] = lambda q=q: _report_check(
                dl.dl_theorem3_pushforward(lax, q, depth, cached(t3, lambda: dl.dl_theorem3_transform(lax))))
    return checks


def _principal_symbol(model: LaxModel, q: int, depth: int) -> Check:
    full = derive_flow(model, q, depth=depth).rhs
    limit = dl.dl_derive_flow(model, q, depth=depth).rhs
    diffs = [dl.leading_part(full[name]) - limit[name] for name in full]
    bad = _first_nonzero(diffs)
    return Check(bad is None, bad)


def run(command: str, spec: SpecFile, options: RunOptions = RunOptions(), environ=os.environ) -> ReportBundle:
    """Execute one command; engine errors propagate as ``LaxforgeError``."""
    spec, q_max = _effective(spec, options)
    depth = resolve_depth(spec, options.depth, environ)
    use_dl = options.dispersionless or spec.dispersionless or command == "dispersionless-derive"
    bundle = ReportBundle(
        command=command, spec=spec, symbol="p" if use_dl else "D", depth=depth,
        epsilon="symbolic" if spec.lax.epsilon_mode == "symbolic" else "0",
    )
    lax = spec.lax
    if command in ("derive", "dispersionless-derive"):
        model = LaxModel(lax)
        derive = dl.dl_derive_flow if use_dl else derive_flow
        bundle.flows = [derive(model, q, depth=depth) for q in range(1, q_max + 1)]
    elif command == "transform":
        _run_transform(bundle, lax, q_max, depth, options.theorem, use_dl)
    elif command == "verify":
        for name, check in verification_suite(spec, q_max, depth, use_dl).items():
            bundle.verifications[name] = _guard(check)
    else:
        raise InputError(f"unknown command {command!r}")
    return bundle


def _run_transform(bundle: ReportBundle, lax, q_max: int, depth: int, theorem: int, use_dl: bool):
    if theorem not in (1, 2):
        raise InputError(f"--theorem must be 1 or 2, got {theorem}")
    if theorem == 2:
        T = dl.dl_theorem4_transform(lax) if use_dl else theorem2_transform(lax, depth)
        push = dl.dl_theorem4_pushforward if use_dl else pushforward_check
        model = theorem2_model(lax)
        form = (dl.dl_reciprocal_form if use_dl else reciprocal_form)(model, q_max)
        bundle.form = ReciprocalForm(
            restore_top(form.dx_coeff, model), {q: restore_top(c, model) for q, c in form.dt_coeffs.items()}
        )
    else:
        T = dl.dl_theorem3_transform(lax) if use_dl else theorem1_transform(lax, depth)
        push = dl.dl_theorem3_pushforward if use_dl else theorem1_pushforward_check
    bundle.transform = T
    bundle.variable_map = {name: restore_top(p, T.source) for name, p in T.variable_map.items()}
    for q in range(1, q_max + 1):
        rep = push(lax, q, depth, T)
        bundle.flows.append(rep.flow_system())
        bundle.verifications[f"pushforward[q={q}]"] = _report_check(rep)


# ---------------------------------------------------------------------------
# Rendering


def _lhs(flows: FlowSystem, name: str, fmt: str) -> str:
    if fmt == "text":
        return f"{name}_{flows.time}{flows.q}"
    base = flows.ring.generator(name).latex_name
    t = r"\tau" if flows.time == "tau" else flows.time
    return f"{base}_{{{t}_{{{flows.q}}}}}"


def _header(bundle: ReportBundle, fmt: str) -> str:
    what = bundle.command
    if bundle.command == "transform" and bundle.transform is not None:
        what = f"transform ({bundle.transform.mode})"
    mode = "dispersionless" if bundle.symbol == "p" else "dispersive"
    text = f"{bundle.spec.name}: {what}, {mode}, epsilon {bundle.epsilon}, depth {bundle.depth}"
    return ("# " if fmt == "text" else "% ") + text


def render_report(bundle: ReportBundle, fmt: str = "text") -> str:
    if fmt == "json":
        return json.dumps(bundle.to_json(), indent=2) + "\n"
    if fmt not in ("text", "latex"):
        raise InputError(f"unknown format {fmt!r}")
    comment = "# " if fmt == "text" else "% "
    eol = "" if fmt == "text" else r" \\"
    lines = [_header(bundle, fmt)]
    if bundle.transform is not None:
        for name, poly in bundle.variable_map.items():
            lhs = name if fmt == "text" else bundle.transform.new_model.ring.generator(name).latex_name
            lines.append(f"{lhs} = {poly.render(fmt)}{eol}")
        if bundle.form is not None:
            lines.append(bundle.form.render(fmt) + eol)
    for flows in bundle.flows:
        lines.append(f"{comment}{flows.time}{flows.q}")
        for name, poly in flows.rhs.items():
            lines.append(f"{_lhs(flows, name, fmt)} = {poly.render(fmt)}{eol}")
    for name, check in bundle.verifications.items():
        status = "pass" if check.passed else "FAIL"
        line = f"{comment}{status} {name}"
        if check.residual is not None:
            line += f": residual {check.residual.render('text')}"
        if check.detail:
            line += f": {check.detail}"
        lines.append(line)
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Entry point


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="laxforge", description="Deformed Lax hierarchies and their reciprocal transformations.")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("spec", help="spec file path, or - for stdin")
    common.add_argument("--q", type=int, default=None, help="derive times t_1 .. t_q (default: q_max of the spec)")
    common.add_argument("--depth", type=int, default=None, help=f"tail depth (default: spec, then ${DEPTH_ENV}, then q_max*N+6)")
    common.add_argument("--format", choices=("text", "latex", "json"), default="text")
    common.add_argument("--epsilon", choices=("symbolic", "0"), default=None, help="override the spec's epsilon")
    common.add_argument("--dispersionless", action="store_true", help="use the symbol p and the Poisson bracket")

    sub.add_parser("derive", parents=[common], help="print the deformed flows")
    sub.add_parser("dispersionless-derive", parents=[common], help="print the dispersionless flows")
    t = sub.add_parser("transform", parents=[common], help="apply a change of variables and push the flows forward")
    t.add_argument("--theorem", type=int, choices=(1, 2), default=2, help="1: z = chi (Harry-Dym type); 2: reciprocal (mKdV type)")
    v = sub.add_parser("verify", parents=[common], help="run the verification suite")
    v.add_argument("--all", action="store_true", help="run every check (the default)")
    return parser


def _read_spec(path: str) -> SpecFile:
    if path == "-":
        text = sys.stdin.read()
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    return parse_spec(text)


def main(argv: list[str] | None = None, environ=os.environ) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = _read_spec(args.spec)
        options = RunOptions(
            q=args.q, depth=args.depth, epsilon=args.epsilon,
            theorem=getattr(args, "theorem", 2), dispersionless=args.dispersionless,
        )
        bundle = run(args.command, spec, options, environ)
    except (SpecError, InputError, OSError, UnicodeDecodeError) as exc:
        print(f"laxforge: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (LaxforgeError, ValueError) as exc:
        print(f"laxforge: engine error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ENGINE
    sys.stdout.write(render_report(bundle, args.format))
    return EXIT_OK if bundle.passed else EXIT_VERIFICATION


if __name__ == "__main__":
    sys.exit(main())
