"""Command-line entry point.

One invocation, one report: deterministic ``key: value`` lines on
stdout with wall-clock time quarantined to a trailing comment, so
identical inputs diff byte-for-byte.  Exit codes: 0 for a completed run
(whatever the verdict), 1 for usage, parse, or file problems, 2 for
validation and domain failures, 3 when an internal invariant breaks
(a certificate that does not verify, an oracle disagreement, a split
that corrupts its output).
"""

from __future__ import annotations

import argparse
import hashlib
import os
import sys
import time
from fractions import Fraction
from pathlib import Path
from typing import Optional

from . import __version__
from .assembly import assemble
from .charts import (
    INNER_CONTACT,
    OUTER_CONTACT,
    check_box,
    check_cylinder,
    contact_oracle_box,
    extend_cell,
    holonomy_map,
    parse_grid,
    print_grid,
    purify_box,
    purify_cylinder,
    sample_annulus,
    sample_box,
)
from .errors import (
    BadMove,
    ChartError,
    InvalidLocus,
    InvariantViolation,
    MalformedSystem,
    ParseError,
    PreconditionFailed,
    TracingInconsistency,
    WeightsNotSatisfying,
)
from .gen import random_complex
from .parser import parse_complex, parse_weights, print_complex
from .splitting import (
    CHOICES,
    locus_from_strings,
    run_plan,
    safe_split,
    split,
)
from .surface import validate
from .weights import (
    KINDS,
    brute_force,
    build_system,
    criterion,
    feasible,
    verify_certificate,
)

_DOMAIN_ERRORS = (WeightsNotSatisfying, MalformedSystem, InvalidLocus,
                  BadMove, PreconditionFailed, ChartError)
_INTERNAL_ERRORS = (InvariantViolation, TracingInconsistency)


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; the report contract
    # reserves 2 for validation failures, so reroute to exit code 1
    def error(self, message):
        raise _UsageError(message)


class _OracleDisagreement(Exception):
    pass


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _read(path_str: str) -> tuple[str, str]:
    path = Path(path_str)
    try:
        text = path.read_text()
    except OSError as exc:
        raise _UsageError(f"cannot read {path_str}: {exc.strerror}")
    return text, _sha256(path)


def _error_code(exc: Exception) -> str:
    name = type(exc).__name__
    out = [name[0].lower()]
    for ch in name[1:]:
        if ch.isupper():
            out.append("-")
            out.append(ch.lower())
        else:
            out.append(ch)
    return "".join(out)


def _frac(q: Fraction) -> str:
    return f"{q.numerator}/{q.denominator}"


def _trace_str(trace: tuple) -> str:
    parts = []
    for entry in trace:
        if entry[0] == "run":
            parts.append(f"run:{entry[1]}:{entry[2]}")
        elif entry[0] == "free":
            parts.append(f"free:{entry[1]}")
        else:
            sign = "+" if entry[3] > 0 else "-"
            parts.append(f"corner:{entry[1]}:{entry[2]}:{sign}")
    return " ".join(parts) if parts else "(closed)"


def _emit_certificate(lines: list[str], system, cert) -> None:
    if not verify_certificate(system, cert):
        raise InvariantViolation(
            f"emitted certificate for {system.kind} fails verification")
    lines.append(f"feasible: {'true' if cert.feasible else 'false'}")
    if cert.feasible:
        for sid in sorted(cert.witness):
            lines.append(f"w {sid} {cert.witness[sid]}")
        for tag in sorted(t for t, s in cert.slacks.items() if s == 0):
            lines.append(f"tight: {tag}")
    else:
        for tag in sorted(cert.multipliers):
            lines.append(f"multiplier {tag} {_frac(cert.multipliers[tag])}")


# -- subcommand bodies ---------------------------------------------------


def _cmd_validate(args, lines) -> int:
    text, digest = _read(args.input)
    lines.append(f"input-sha256: {digest}")
    cx = parse_complex(text)
    report = validate(cx)
    lines.append(f"name: {cx.name}")
    lines.append(f"sectors: {len(cx.sectors)}")
    lines.append(f"segments: {len(cx.segments)}")
    lines.append(f"double-points: {len(cx.dps)}")
    lines.append(f"violations: {len(report.violations)}")
    for v in report.violations:
        lines.append(f"violation: {v}")
    return 0 if report.ok() else 2


def _cmd_detect(args, lines) -> int:
    text, digest = _read(args.input)
    lines.append(f"input-sha256: {digest}")
    lines.append(f"kind: {args.kind}")
    cx = parse_complex(text)
    validation = validate(cx)
    if not validation.ok():
        lines.append(f"violation: {validation.violations[0]}")
        return 2
    if args.kind == "criterion":
        verdict = criterion(cx)
        lines.append(f"passes: {'true' if verdict.passes else 'false'}")
        for label, cert, kind in (("neg-tisc", verdict.neg_tisc, KINDS[0]),
                                  ("isc", verdict.isc, KINDS[2])):
            lines.append(f"{label}: "
                         f"{'feasible' if cert.feasible else 'infeasible'}")
            if cert.feasible:
                for sid in sorted(cert.witness):
                    lines.append(f"w {sid} {cert.witness[sid]}")
        if verdict.passes:
            lines.append(f"conclusion: {verdict.conclusion}")
        return 0
    system = build_system(cx, args.kind)
    cert = feasible(system)
    _emit_certificate(lines, system, cert)
    if args.oracle_bound is not None:
        lines.append(f"oracle-bound: {args.oracle_bound}")
        found = brute_force(system, args.oracle_bound)
        lines.append(f"oracle-witness: {'found' if found else 'none'}")
        if found and not cert.feasible:
            lines.append("oracle-agreement: fail")
            raise _OracleDisagreement(
                f"brute force found {found} but the solver said infeasible")
        lines.append("oracle-agreement: ok")
    return 0


def _cmd_assemble(args, lines) -> int:
    text, digest = _read(args.input)
    wtext, wdigest = _read(args.weights)
    lines.append(f"input-sha256: {digest}")
    lines.append(f"weights-sha256: {wdigest}")
    cx = parse_complex(text)
    validation = validate(cx)
    if not validation.ok():
        lines.append(f"violation: {validation.violations[0]}")
        return 2
    weights = parse_weights(wtext, cx)
    asm = assemble(cx, weights, args.kind)
    lines.append(f"kind: {args.kind}")
    lines.append(f"components: {len(asm.components)}")
    for i, comp in enumerate(asm.components):
        lines.append(f"component {i} faces {len(comp.faces)} euler "
                     f"{comp.euler} class {comp.classification}")
        for trace in comp.boundaries:
            lines.append(f"component {i} boundary {_trace_str(trace)}")
    return 0


def _describe_split(lines, res) -> None:
    lines.append(f"choice: {res.record.choice}")
    lines.append(f"sectors: {len(res.complex.sectors)}")
    lines.append(f"double-points: {len(res.complex.dps)}")
    if res.dp_left is not None:
        left = res.complex.dp_by_id[res.dp_left]
        right = res.complex.dp_by_id[res.dp_right]
        lines.append(f"dp-left: {left.id} {'+' if left.sign > 0 else '-'}")
        lines.append(f"dp-right: {right.id} "
                     f"{'+' if right.sign > 0 else '-'}")
        # the left/right sign pattern is a declared convention; a global
        # mirror reflection swaps it coherently
        lines.append("convention: over makes the left crossing negative, "
                     "under the right (mirror-dependent)")
    for old, new in res.record.sector_images:
        lines.append(f"image {old} {new}")


def _cmd_split(args, lines) -> int:
    text, digest = _read(args.input)
    lines.append(f"input-sha256: {digest}")
    cx = parse_complex(text)
    validation = validate(cx)
    if not validation.ok():
        lines.append(f"violation: {validation.violations[0]}")
        return 2
    locus = locus_from_strings(cx, args.sector, args.entry, args.exit)
    if args.choice == "safe":
        safe = safe_split(cx, locus)
        res = safe.split
        lines.append("criterion-preserved: true")
    else:
        res = split(cx, locus, args.choice)
    _describe_split(lines, res)
    if args.out:
        Path(args.out).write_text(print_complex(res.complex))
        lines.append(f"out: {args.out}")
    return 0


def _cmd_schedule(args, lines) -> int:
    text, digest = _read(args.input)
    ptext, pdigest = _read(args.plan)
    lines.append(f"input-sha256: {digest}")
    lines.append(f"plan-sha256: {pdigest}")
    cx = parse_complex(text)
    validation = validate(cx)
    if not validation.ok():
        lines.append(f"violation: {validation.violations[0]}")
        return 2
    rows = []
    for lno, raw in enumerate(ptext.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        if len(fields) != 3:
            raise ParseError("plan rows need <sector> <entry> <exit>",
                             line=lno)
        rows.append(tuple(fields))
    result = run_plan(cx, rows)
    lines.append(f"steps: {len(result.steps)}")
    for step in result.steps:
        lines.append(f"step {step.index} sector {step.locus.sector} "
                     f"choice {step.choice}")
    lines.append(f"final-sectors: {len(result.complex.sectors)}")
    lines.append(f"final-double-points: {len(result.complex.dps)}")
    verdict = criterion(result.complex)
    lines.append(f"criterion: {'passes' if verdict.passes else 'fails'}")
    if args.out:
        Path(args.out).write_text(print_complex(result.complex))
        lines.append(f"out: {args.out}")
    return 0


def _load_grid(args, lines, check_shape: bool = True):
    text, digest = _read(args.input)
    lines.append(f"input-sha256: {digest}")
    grid = parse_grid(text)
    if check_shape and args.grid is not None:
        want = tuple(int(n) for n in args.grid.split(","))
        if want != grid.shape:
            raise ChartError(f"grid shape {grid.shape} does not match "
                             f"--grid {want}")
    return grid


def _report_chart_check(lines, report) -> None:
    lines.append("confoliation: "
                 f"{'true' if report.is_confoliation else 'false'}")
    lines.append(f"contact-cells: {int(report.contact_mask.sum())}"
                 f"/{report.contact_mask.size}")
    lines.append("max-violation: %.17g" % report.max_violation)
    lines.append("tol: %.17g" % report.tol)


def _write_grid(args, lines, grid) -> None:
    if args.out:
        Path(args.out).write_text(print_grid(grid))
        lines.append(f"out: {args.out}")


def _cmd_chart(args, lines) -> int:
    sub = args.chart_cmd
    if sub == "check-box":
        _report_chart_check(lines, check_box(_load_grid(args, lines),
                                             args.tol))
    elif sub == "check-cyl":
        _report_chart_check(lines, check_cylinder(_load_grid(args, lines),
                                                  args.tol))
    elif sub == "purify-box":
        grid = _load_grid(args, lines)
        out = purify_box(grid, args.y0, args.y1, args.delta, args.tol)
        rep = check_box(out, args.tol)
        _report_chart_check(lines, rep)
        _write_grid(args, lines, out)
    elif sub == "purify-cyl":
        grid = _load_grid(args, lines)
        out = purify_cylinder(grid, args.r0, args.mode, args.tol)
        rep = check_cylinder(out, args.tol)
        _report_chart_check(lines, rep)
        _write_grid(args, lines, out)
    elif sub == "extend":
        # --grid sizes the OUTPUT here: NX is the new radial sample
        # count; NY,NZ (when given) must match the boundary data
        grid = _load_grid(args, lines, check_shape=False)
        want = tuple(int(n) for n in args.grid.split(",")) if args.grid \
            else (65,)
        nr = want[0]
        if len(want) == 3 and want[1:] != grid.shape:
            raise ChartError(f"boundary shape {grid.shape} does not match "
                             f"--grid {want}")
        out = extend_cell(grid, args.r0, args.radius, nr, args.tol)
        rep = check_cylinder(out, args.tol)
        _report_chart_check(lines, rep)
        _write_grid(args, lines, out)
    else:  # holonomy
        grid = _load_grid(args, lines)
        z1 = holonomy_map(grid, args.z0, args.step)
        lines.append("convention: leaves follow dz/dtheta = f with "
                     "increasing theta")
        lines.append("z1: %.17g" % z1)
        lines.append("displacement: %.17g" % (z1 - args.z0))
    return 0


def _cmd_selftest(args, lines) -> int:
    base = int(os.environ.get("BSGATE_SEED", "0"))
    lines.append(f"seed-base: {base}")
    solver_runs = 0
    for seed in range(base, base + args.seeds):
        cx = random_complex(seed)
        for kind in KINDS:
            system = build_system(cx, kind)
            cert = feasible(system)
            if not verify_certificate(system, cert):
                raise InvariantViolation(
                    f"seed {seed} kind {kind}: certificate fails")
            found = brute_force(system, 3)
            if found is not None and not cert.feasible:
                raise _OracleDisagreement(
                    f"seed {seed} kind {kind}: oracle disagrees")
            solver_runs += 1
    lines.append(f"solver-runs: {solver_runs}")
    box = sample_box(lambda x, y, z: -1.0 - y, (9, 9, 9))
    if not check_box(box).is_contact:
        raise InvariantViolation("selftest chart check failed")
    if float(abs(contact_oracle_box(box) - 1.0).max()) > 1e-12:
        raise InvariantViolation("selftest oracle check failed")
    ann = sample_annulus(lambda t, z: -0.05 + 0 * t, (8, 9))
    z1 = holonomy_map(ann, 0.0, 1e-2)
    if abs(z1 + 0.1 * 3.141592653589793) > 1e-9:
        raise InvariantViolation("selftest holonomy check failed")
    lines.append("selftest: ok")
    return 0


# -- parser and dispatch -------------------------------------------------


def _build_parser() -> _Parser:
    parser = _Parser(prog="bsgate", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("validate", help="structural checks on a complex")
    p.add_argument("input")

    p = sub.add_parser("detect", help="decide a weight-system kind")
    p.add_argument("--kind", required=True, choices=KINDS + ("criterion",))
    p.add_argument("--oracle-bound", type=int, default=None)
    p.add_argument("input")

    p = sub.add_parser("assemble", help="glue a carried surface")
    p.add_argument("--kind", required=True, choices=KINDS)
    p.add_argument("--weights", required=True)
    p.add_argument("input")

    p = sub.add_parser("split", help="one splitting move")
    p.add_argument("--sector", required=True)
    p.add_argument("--entry", required=True, metavar="W:K:SIDE")
    p.add_argument("--exit", required=True, metavar="W:K:SIDE")
    p.add_argument("--choice", required=True, choices=CHOICES + ("safe",))
    p.add_argument("--out", default=None)
    p.add_argument("input")

    p = sub.add_parser("schedule", help="run a splitting plan")
    p.add_argument("--plan", required=True)
    p.add_argument("--out", default=None)
    p.add_argument("input")

    p = sub.add_parser("chart", help="slope-function checks")
    csub = p.add_subparsers(dest="chart_cmd", required=True)
    for name in ("check-box", "check-cyl", "purify-box", "purify-cyl",
                 "extend", "holonomy"):
        cp = csub.add_parser(name)
        cp.add_argument("input")
        cp.add_argument("--grid", default=None, metavar="NX,NY,NZ")
        cp.add_argument("--tol", type=float, default=1e-9)
        cp.add_argument("--out", default=None)
        if name == "purify-box":
            cp.add_argument("--y0", type=float, required=True)
            cp.add_argument("--y1", type=float, required=True)
            cp.add_argument("--delta", type=float, required=True)
        elif name == "purify-cyl":
            cp.add_argument("--r0", type=float, required=True)
            cp.add_argument("--mode", required=True,
                            choices=(INNER_CONTACT, OUTER_CONTACT))
        elif name == "extend":
            cp.add_argument("--r0", type=float, required=True)
            cp.add_argument("--radius", type=float, default=1.0)
        elif name == "holonomy":
            cp.add_argument("--z0", type=float, required=True)
            cp.add_argument("--step", type=float, default=1e-3)

    p = sub.add_parser("selftest", help="seeded end-to-end checks")
    p.add_argument("--seeds", type=int, default=10)
    return parser


_HANDLERS = {
    "validate": _cmd_validate,
    "detect": _cmd_detect,
    "assemble": _cmd_assemble,
    "split": _cmd_split,
    "schedule": _cmd_schedule,
    "chart": _cmd_chart,
    "selftest": _cmd_selftest,
}


def main(argv: Optional[list[str]] = None) -> int:
    started = time.monotonic()
    try:
        args = _build_parser().parse_args(argv)
    except _UsageError as exc:
        print(f"error: usage-error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    lines = [f"bsgate-report {args.cmd}", f"version: {__version__}"]
    try:
        code = _HANDLERS[args.cmd](args, lines)
    except _UsageError as exc:
        lines.append(f"error: usage-error: {exc}")
        code = 1
    except ParseError as exc:
        lines.append(f"error: parse-error: {exc}")
        code = 1
    except _DOMAIN_ERRORS as exc:
        lines.append(f"error: {_error_code(exc)}: {exc}")
        code = 2
    except _OracleDisagreement as exc:
        lines.append(f"error: oracle-disagreement: {exc}")
        code = 3
    except _INTERNAL_ERRORS as exc:
        lines.append(f"error: {_error_code(exc)}: {exc}")
        code = 3
    print("\n".join(lines))
    print(f"# duration-ms {int((time.monotonic() - started) * 1000)}")
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
