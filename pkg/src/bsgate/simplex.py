"""Exact phase-one simplex over rationals.

Decides feasibility of ``A x = b, x >= 0`` by minimizing the sum of
artificial variables, with Bland's least-index anti-cycling rule so runs
are reproducible.  Returns the optimum together with a primal point and
the dual row multipliers, which callers turn into Farkas certificates.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import InvariantViolation

ZERO = Fraction(0)
ONE = Fraction(1)


@dataclass(frozen=True)
class PhaseOneResult:
    optimum: Fraction
    x: tuple[Fraction, ...]  # primal point (real variables only)
    duals: tuple[Fraction, ...]  # one multiplier per row


def phase_one(rows: list[list[Fraction]], rhs: list[Fraction]) -> PhaseOneResult:
    """Minimize the artificial sum for ``rows . x = rhs``, ``x >= 0``.

    ``rhs`` entries must be nonnegative (callers pre-negate rows).
    Optimum 0 means the system is feasible and ``x`` is a solution;
    a positive optimum certifies infeasibility via ``duals``:
    ``duals . rows <= 0`` componentwise while ``duals . rhs > 0``.
    """
    m = len(rows)
    n = len(rows[0]) if m else 0
    if any(b < 0 for b in rhs):
        raise InvariantViolation("phase_one requires nonnegative rhs")

    ncols = n + m  # real columns then one artificial per row
    tab = []
    for r in range(m):
        row = [Fraction(c) for c in rows[r]] + [ZERO] * m + [Fraction(rhs[r])]
        row[n + r] = ONE
        tab.append(row)
    basis = [n + r for r in range(m)]

    # reduced costs for cost vector (0..0, 1..1); all basic costs are 1
    red = [-sum(tab[r][j] for r in range(m)) for j in range(ncols)]
    for r in range(m):
        red[n + r] += ONE

    while True:
        pc = next((j for j in range(ncols) if red[j] < 0), None)
        if pc is None:
            break
        pr = None
        best = None
        for r in range(m):
            a = tab[r][pc]
            if a > 0:
                ratio = tab[r][-1] / a
                key = (ratio, basis[r])
                if best is None or key < best:
                    best = key
                    pr = r
        if pr is None:
            raise InvariantViolation("phase-one objective unbounded")
        piv = tab[pr][pc]
        tab[pr] = [v / piv for v in tab[pr]]
        for r in range(m):
            if r != pr and tab[r][pc] != 0:
                f = tab[r][pc]
                tab[r] = [v - f * p for v, p in zip(tab[r], tab[pr])]
        if red[pc] != 0:
            f = red[pc]
            for j in range(ncols):
                red[j] -= f * tab[pr][j]
        basis[pr] = pc

    optimum = sum((tab[r][-1] for r in range(m) if basis[r] >= n), ZERO)
    x = [ZERO] * n
    for r in range(m):
        if basis[r] < n:
            x[basis[r]] = tab[r][-1]
    duals = tuple(ONE - red[n + r] for r in range(m))
    return PhaseOneResult(optimum, tuple(x), duals)
