"""Equality-form LP feasibility: find x >= 0 with A x = b, or refute it.

Phase-1 simplex with Bland's rule.  On exact rationals (the reference
mode) Bland's rule excludes cycling, so the answer is a theorem: either a
basic feasible point or a Farkas certificate y with yA <= 0 componentwise
and y.b > 0, which no nonnegative solution can coexist with.  Float mode
uses the same pivoting with an epsilon and a bounded iteration count and
raises NumericalInstability when it cannot finish or cannot verify its own
answer; rerunning in rational mode is the fix.

Certificates and witnesses are verified by the caller-facing helpers
below; nothing is reported unchecked.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from .arith import Num, is_exact
from .errors import NumericalInstability


@dataclass(frozen=True, eq=False)
class FeasibilityResult:
    feasible: bool
    x: Optional[list]
    certificate: Optional[list]
    objective: Num
    iterations: int


def solve_equality_feasibility(
    rows: Sequence[Sequence[Num]],
    rhs: Sequence[Num],
    eps: float = 0.0,
    max_iter: Optional[int] = None,
) -> FeasibilityResult:
    """Decide {x >= 0 : A x = b}.  eps=0 demands exact arithmetic."""
    m = len(rows)
    n = len(rows[0]) if m else 0
    exact = eps == 0
    if exact:
        T = [[Fraction(v) for v in row] for row in rows]
        b = [Fraction(v) for v in rhs]
    else:
        T = [[float(v) for v in row] for row in rows]
        b = [float(v) for v in rhs]
    signs = [1] * m
    for i in range(m):
        if b[i] < 0:
            signs[i] = -1
            b[i] = -b[i]
            T[i] = [-v for v in T[i]]
    one = Fraction(1) if exact else 1.0
    zero = Fraction(0) if exact else 0.0
    # artificial columns n..n+m-1 form the starting identity basis
    for i in range(m):
        T[i].extend(one if k == i else zero for k in range(m))
    ncols = n + m
    basis = list(range(n, n + m))
    # reduced costs c_j - z_j for phase-1 cost (1 on artificials)
    obj = [zero] * ncols
    for j in range(n):
        obj[j] = -sum(T[i][j] for i in range(m))

    if max_iter is None:
        max_iter = 50_000 if exact else 20_000
    iterations = 0
    while True:
        enter = -1
        for j in range(ncols):
            if obj[j] < -eps:
                enter = j
                break
        if enter < 0:
            break
        leave = -1
        best = None
        for i in range(m):
            a = T[i][enter]
            if a > eps:
                ratio = b[i] / a
                if best is None or ratio < best or (ratio == best and basis[i] < basis[leave]):
                    best = ratio
                    leave = i
        if leave < 0:
            raise NumericalInstability("phase-1 objective unbounded; numeric trouble")
        iterations += 1
        if iterations > max_iter:
            hint = "" if exact else "; rerun with rational arithmetic"
            raise NumericalInstability(f"no convergence after {max_iter} pivots{hint}")
        piv = T[leave][enter]
        row = T[leave]
        if piv != 1:
            inv = one / piv
            T[leave] = row = [v * inv for v in row]
            b[leave] = b[leave] * inv
        for i in range(m):
            if i == leave:
                continue
            f = T[i][enter]
            if f != 0:
                ti = T[i]
                T[i] = [ti[j] - f * row[j] for j in range(ncols)]
                b[i] = b[i] - f * b[leave]
        f = obj[enter]
        if f != 0:
            obj = [obj[j] - f * row[j] for j in range(ncols)]
        basis[leave] = enter

    objective = sum(b[i] for i in range(m) if basis[i] >= n)
    feasible = objective == 0 if exact else objective <= eps
    if feasible:
        x = [zero] * n
        for i, var in enumerate(basis):
            if var < n:
                x[var] = b[i]
        return FeasibilityResult(True, x, None, objective, iterations)
    # Farkas certificate from the phase-1 duals: y_i = 1 - reduced cost of
    # artificial i, flipped back to the original row orientation.
    y = [(one - obj[n + i]) * signs[i] for i in range(m)]
    return FeasibilityResult(False, None, y, objective, iterations)


def verify_solution(rows, rhs, x, eps: float = 0.0) -> bool:
    """x >= 0 and A x = b, exactly or within eps per constraint."""
    for v in x:
        if (v < 0) if is_exact(v) else (v < -eps):
            return False
    for row, target in zip(rows, rhs):
        total = sum(c * v for c, v in zip(row, x) if v != 0)
        diff = total - target
        ok = diff == 0 if (is_exact(diff) and eps == 0) else abs(diff) <= eps
        if not ok:
            return False
    return True


def verify_certificate(rows, rhs, y, eps: float = 0.0) -> bool:
    """y refutes {x >= 0 : A x = b}: y.A <= 0 componentwise and y.b > 0."""
    n = len(rows[0]) if rows else 0
    for j in range(n):
        col = sum(y[i] * rows[i][j] for i in range(len(rows)))
        ok = col <= 0 if (is_exact(col) and eps == 0) else col <= eps
        if not ok:
            return False
    dot = sum(yi * bi for yi, bi in zip(y, rhs))
    return dot > 0 if (is_exact(dot) and eps == 0) else dot > eps
