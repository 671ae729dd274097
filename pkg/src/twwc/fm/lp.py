"""Small exact linear programs over :class:`fractions.Fraction`.

Two-phase tableau simplex with Bland's rule. Sized for redundancy
certificates (tens of rows and columns), not for general use.
"""

from __future__ import annotations

from fractions import Fraction

ZERO = Fraction(0)
ONE = Fraction(1)


def _pivot(T, basis, r, c):
    piv = T[r][c]
    row = T[r]
    if piv != ONE:
        T[r] = row = [v / piv for v in row]
    for i, other in enumerate(T):
        if i != r:
            f = other[c]
            if f:
                T[i] = [a - f * b for a, b in zip(other, row)]
    basis[r] = c


def _run(T, basis, ncols, allowed):
    """Maximise the objective stored in the last row (as reduced costs)."""
    m = len(T) - 1
    while True:
        obj = T[-1]
        enter = next((j for j in range(ncols) if j in allowed and obj[j] < 0), None)
        if enter is None:
            return "optimal"
        leave, best = None, None
        for i in range(m):
            a = T[i][enter]
            if a > 0:
                ratio = T[i][-1] / a
                if best is None or ratio < best or (ratio == best and basis[i] < basis[leave]):
                    leave, best = i, ratio
        if leave is None:
            return "unbounded"
        _pivot(T, basis, leave, enter)


def lp_max(A, b, c):
    """Maximise ``c.x`` subject to ``A x = b`` and ``x >= 0``.

    Returns ``(status, value, x)`` with status ``"optimal"``,
    ``"infeasible"`` or ``"unbounded"``.
    """
    m = len(A)
    n = len(c)
    A = [[Fraction(v) for v in row] for row in A]
    b = [Fraction(v) for v in b]
    for i in range(m):
        if b[i] < 0:
            A[i] = [-v for v in A[i]]
            b[i] = -b[i]
    # phase 1: artificial columns n..n+m-1
    T = [A[i] + [ONE if k == i else ZERO for k in range(m)] + [b[i]] for i in range(m)]
    # objective row holds reduced costs of "maximise -sum(artificials)"
    obj = [ZERO] * (n + m + 1)
    for i in range(m):
        for j in range(n):
            obj[j] -= T[i][j]
        obj[-1] -= T[i][-1]
    T.append(obj)
    basis = [n + i for i in range(m)]
    _run(T, basis, n + m, set(range(n + m)))
    if T[-1][-1] != 0:
        return "infeasible", None, None
    # drive remaining artificials out of the basis
    for i in range(m):
        if basis[i] >= n:
            j = next((j for j in range(n) if T[i][j] != 0), None)
            if j is not None:
                _pivot(T, basis, i, j)
    keep = [i for i in range(m) if basis[i] < n]
    T = [T[i][:n] + [T[i][-1]] for i in keep]
    basis = [basis[i] for i in keep]
    # phase 2 objective row: -c, then eliminate basic columns
    obj = [-Fraction(v) for v in c] + [ZERO]
    for i, bj in enumerate(basis):
        f = obj[bj]
        if f:
            obj = [a - f * r for a, r in zip(obj, T[i])]
    T.append(obj)
    status = _run(T, basis, n, set(range(n)))
    if status == "unbounded":
        return status, None, None
    x = [ZERO] * n
    for i, bj in enumerate(basis):
        x[bj] = T[i][-1]
    return "optimal", T[-1][-1], x


def feasible(A, b):
    status, _, x = lp_max(A, b, [0] * (len(A[0]) if A else 0))
    return status != "infeasible", x
