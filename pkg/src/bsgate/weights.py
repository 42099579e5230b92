"""Weight-space constraint systems and exact feasibility certificates.

Three families of integer weight systems live on a validated complex.
All share one inequality per branch segment, ``w(merged) - w(upper) -
w(lower) >= 0``; they differ in how the corner form ``z + u - x - v`` at
each double point is constrained and in which slacks must be strictly
positive somewhere:

* ``neg-tisc``: corner form pinned to 0 at positive double points, ``>= 0``
  at negative ones, and at least one negative corner strictly positive.
* ``pos-tisc``: the mirror image.
* ``isc``: corner form pinned to 0 everywhere, at least one segment
  inequality strict.

Everything is decided in exact rational arithmetic; homogeneity makes
integer and rational feasibility coincide once strictness is written as
an aggregate slack ``>= 1``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd, lcm
from typing import Optional

import numpy as np

from .errors import MalformedSystem
from .simplex import phase_one
from .surface import BranchedSurfaceComplex, derive_roles

NEG_TISC = "neg-tisc"
POS_TISC = "pos-tisc"
ISC = "isc"
KINDS = (NEG_TISC, POS_TISC, ISC)


@dataclass(frozen=True)
class LinForm:
    """Homogeneous integer-coefficient form over sector weights."""

    coeffs: tuple[tuple[str, int], ...]  # sorted by sector id, zero-free
    tag: str

    @staticmethod
    def make(coeffs: dict[str, int], tag: str) -> "LinForm":
        return LinForm(tuple(sorted((s, c) for s, c in coeffs.items() if c)), tag)

    def dot(self, weights) -> object:
        return sum(weights.get(s, 0) * c for s, c in self.coeffs)


@dataclass(frozen=True)
class ConstraintSystem:
    variables: tuple[str, ...]
    equalities: tuple[LinForm, ...]  # each required = 0
    inequalities: tuple[LinForm, ...]  # each required >= 0
    strict_group: tuple[int, ...]  # inequality indices; slacks must sum >= 1
    kind: str


@dataclass(frozen=True)
class Certificate:
    verdict: str  # 'Feasible' | 'Infeasible'
    witness: Optional[dict[str, int]] = None
    slacks: Optional[dict[str, int]] = None  # tag -> inequality slack
    multipliers: Optional[dict[str, Fraction]] = None

    @property
    def feasible(self) -> bool:
        return self.verdict == "Feasible"


def _check_system(system: ConstraintSystem) -> None:
    vars_ = set(system.variables)
    if len(vars_) != len(system.variables):
        raise MalformedSystem("duplicate variable")
    for form in system.equalities + system.inequalities:
        for s, _c in form.coeffs:
            if s not in vars_:
                raise MalformedSystem(f"form {form.tag} uses unknown "
                                      f"variable {s}")
    n = len(system.inequalities)
    if len(set(system.strict_group)) != len(system.strict_group):
        raise MalformedSystem("duplicate strict_group index")
    for i in system.strict_group:
        if not 0 <= i < n:
            raise MalformedSystem(f"strict_group index {i} out of range")


def corner_form(cx: BranchedSurfaceComplex, did: str) -> LinForm:
    return LinForm.make(derive_roles(cx, did).corner_coeffs(), f"corner:{did}")


def segment_form(cx: BranchedSurfaceComplex, gid: str) -> LinForm:
    g = cx.segment_by_id[gid]
    coeffs: dict[str, int] = {}
    for s, c in ((g.one, 1), (g.up, -1), (g.lo, -1)):
        coeffs[s] = coeffs.get(s, 0) + c
    return LinForm.make(coeffs, f"seg:{gid}")


def build_system(cx: BranchedSurfaceComplex, kind: str) -> ConstraintSystem:
    """Constraint system for ``kind`` over all sectors of ``cx``."""
    if kind not in KINDS:
        raise MalformedSystem(f"unknown system kind {kind!r}")
    variables = tuple(s.id for s in cx.sectors)
    inequalities = [segment_form(cx, g.id) for g in cx.segments]
    equalities: list[LinForm] = []
    strict: list[int] = []
    if kind == ISC:
        strict = list(range(len(inequalities)))
    for d in cx.dps:
        form = corner_form(cx, d.id)
        pinned = (d.sign > 0) if kind == NEG_TISC else (d.sign < 0)
        if kind == ISC or pinned:
            equalities.append(form)
        else:
            strict.append(len(inequalities))
            inequalities.append(form)
    return ConstraintSystem(variables, tuple(equalities), tuple(inequalities),
                            tuple(strict), kind)


def strict_aggregate(system: ConstraintSystem) -> LinForm:
    """Sum of the strict-group inequality forms (must reach >= 1)."""
    coeffs: dict[str, int] = {}
    for i in system.strict_group:
        for s, c in system.inequalities[i].coeffs:
            coeffs[s] = coeffs.get(s, 0) + c
    return LinForm.make(coeffs, "aggregate")


def _primitive(vec: list[Fraction]) -> list[int]:
    denom = lcm(*(f.denominator for f in vec)) if vec else 1
    ints = [int(f * denom) for f in vec]
    g = gcd(*ints) if any(ints) else 1
    return [v // max(g, 1) for v in ints]


def feasible(system: ConstraintSystem) -> Certificate:
    """Exact feasibility decision with a checkable certificate.

    Feasible yields the primitive integer witness of the solved vertex;
    Infeasible yields rational multipliers combining the constraints into
    a componentwise-nonpositive form that the strictness aggregate
    contradicts.
    """
    _check_system(system)
    variables = system.variables
    col = {s: j for j, s in enumerate(variables)}
    n = len(variables)
    sigma = strict_aggregate(system)

    # rows: equalities = 0; inequalities - slack = 0; aggregate - surplus = 1
    nslack = len(system.inequalities)
    width = n + nslack + 1
    rows: list[list[Fraction]] = []
    rhs: list[Fraction] = []

    def expand(form: LinForm) -> list[Fraction]:
        row = [Fraction(0)] * width
        for s, c in form.coeffs:
            row[col[s]] = Fraction(c)
        return row

    for form in system.equalities:
        rows.append(expand(form))
        rhs.append(Fraction(0))
    for i, form in enumerate(system.inequalities):
        row = expand(form)
        row[n + i] = Fraction(-1)
        rows.append(row)
        rhs.append(Fraction(0))
    agg = expand(sigma)
    agg[n + nslack] = Fraction(-1)
    rows.append(agg)
    rhs.append(Fraction(1))

    res = phase_one(rows, rhs)
    if res.optimum == 0:
        witness_vec = _primitive(list(res.x[:n]))
        witness = dict(zip(variables, witness_vec))
        slacks = {f.tag: int(f.dot(witness)) for f in system.inequalities}
        return Certificate("Feasible", witness=witness, slacks=slacks)

    y = res.duals
    y_sigma = y[-1]
    mult: dict[str, Fraction] = {}
    if y_sigma > 0:
        neq = len(system.equalities)
        for r, form in enumerate(system.equalities):
            v = y[r] / y_sigma
            if v:
                mult[form.tag] = v
        for i, form in enumerate(system.inequalities):
            v = y[neq + i] / y_sigma
            if v:
                mult[form.tag] = v
    return Certificate("Infeasible", multipliers=mult)


def verify_certificate(system: ConstraintSystem, cert: Certificate) -> bool:
    """Re-check a certificate by direct arithmetic, solver-independently."""
    try:
        _check_system(system)
    except MalformedSystem:
        return False
    sigma = strict_aggregate(system)

    if cert.verdict == "Feasible":
        w = cert.witness
        if w is None:
            return False
        if any(not isinstance(v, int) or v < 0 for v in w.values()):
            return False
        if set(w) - set(system.variables):
            return False
        if any(f.dot(w) != 0 for f in system.equalities):
            return False
        if any(f.dot(w) < 0 for f in system.inequalities):
            return False
        return sigma.dot(w) >= 1

    if cert.verdict == "Infeasible":
        mult = cert.multipliers
        if mult is None:
            return False
        tags = {f.tag: ("eq", f) for f in system.equalities}
        tags.update({f.tag: ("ineq", f) for f in system.inequalities})
        combo: dict[str, Fraction] = {}
        for s, c in sigma.coeffs:
            combo[s] = combo.get(s, 0) + c
        for tag, v in mult.items():
            if tag not in tags:
                return False
            role, form = tags[tag]
            if role == "ineq" and v < 0:
                return False
            for s, c in form.coeffs:
                combo[s] = combo.get(s, 0) + v * c
        return all(v <= 0 for v in combo.values())

    return False


def brute_force(system: ConstraintSystem, bound: int) -> Optional[dict[str, int]]:
    """Lexicographically least satisfying vector with entries in [0, bound].

    Exhaustive; a miss does not prove infeasibility.  Serves as the
    independent oracle for :func:`feasible`.
    """
    if bound < 1:
        raise MalformedSystem("bound must be >= 1")
    _check_system(system)
    variables = system.variables
    n = len(variables)
    col = {s: j for j, s in enumerate(variables)}

    def as_row(form: LinForm) -> np.ndarray:
        row = np.zeros(n, dtype=np.int64)
        for s, c in form.coeffs:
            row[col[s]] = c
        return row

    eq = np.array([as_row(f) for f in system.equalities], dtype=np.int64)
    ineq = np.array([as_row(f) for f in system.inequalities], dtype=np.int64)
    sig = as_row(strict_aggregate(system))

    base = bound + 1
    total = base ** n
    chunk = 1 << 20
    powers = np.array([base ** (n - 1 - k) for k in range(n)], dtype=np.int64)
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total), dtype=np.int64)
        if n:
            grid = (idx[:, None] // powers[None, :]) % base
        else:
            grid = np.zeros((len(idx), 0), dtype=np.int64)
        ok = np.ones(len(idx), dtype=bool)
        if len(eq):
            ok &= (grid @ eq.T == 0).all(axis=1)
        if len(ineq):
            ok &= (grid @ ineq.T >= 0).all(axis=1)
        ok &= grid @ sig >= 1
        hits = np.flatnonzero(ok)
        if len(hits):
            vec = grid[hits[0]]
            return {s: int(v) for s, v in zip(variables, vec)}
    return None


@dataclass(frozen=True)
class Verdict:
    passes: bool
    neg_tisc: Certificate
    isc: Certificate
    conclusion: Optional[str] = None


CONCLUSION = "fully carries a pure positive contamination"


def criterion(cx: BranchedSurfaceComplex) -> Verdict:
    """Both obstruction systems must be infeasible for a pass."""
    neg = feasible(build_system(cx, NEG_TISC))
    isc = feasible(build_system(cx, ISC))
    passes = (not neg.feasible) and (not isc.feasible)
    return Verdict(passes, neg, isc, CONCLUSION if passes else None)
