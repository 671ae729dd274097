"""Exact linear inequalities over rate variables and opaque symbols.

Every inequality is stored as ``f (< | <=) 0`` where ``f`` is a
:class:`LinearForm`: rational coefficients over rate variables, rational
coefficients over symbol atoms such as ``I(Z;V1)``, and a rational constant.
A single ``min``/``max`` term may be attached until :func:`expand_minmax`
removes it.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction

from ..errors import UnsupportedMinMaxDirection
from .lp import lp_max


def var_key(name: str):
    """R1 < R2 < everything else (lexicographic)."""
    return ({"R1": 0, "R2": 1}.get(name, 2), name)


def _items(d, key=None):
    return tuple(sorted(((k, Fraction(v)) for k, v in d.items() if v != 0), key=lambda kv: key(kv[0]) if key else kv[0]))


@dataclass(frozen=True)
class LinearForm:
    vars: tuple = ()  # ((name, Fraction), ...) sorted by var_key
    syms: tuple = ()  # ((atom, Fraction), ...) sorted by name
    const: Fraction = Fraction(0)

    @classmethod
    def make(cls, vars=None, syms=None, const=0) -> "LinearForm":
        return cls(_items(vars or {}, var_key), _items(syms or {}), Fraction(const))

    @classmethod
    def var(cls, name, coef=1):
        return cls.make({name: coef})

    @classmethod
    def sym(cls, name, coef=1):
        return cls.make(syms={name: coef})

    def vdict(self):
        return dict(self.vars)

    def sdict(self):
        return dict(self.syms)

    def coef(self, name) -> Fraction:
        return dict(self.vars).get(name, Fraction(0))

    def __add__(self, other: "LinearForm") -> "LinearForm":
        v = self.vdict()
        for k, c in other.vars:
            v[k] = v.get(k, 0) + c
        s = self.sdict()
        for k, c in other.syms:
            s[k] = s.get(k, 0) + c
        return LinearForm.make(v, s, self.const + other.const)

    def __neg__(self):
        return self.scale(-1)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, k) -> "LinearForm":
        k = Fraction(k)
        return LinearForm(
            tuple((n, c * k) for n, c in self.vars if c * k != 0),
            tuple((n, c * k) for n, c in self.syms if c * k != 0),
            self.const * k,
        )

    def without(self, name) -> "LinearForm":
        return LinearForm(tuple(kv for kv in self.vars if kv[0] != name), self.syms, self.const)

    @property
    def is_zero(self):
        return not self.vars and not self.syms and self.const == 0

    def canonical(self) -> "LinearForm":
        """Positive rescaling to coprime integer coefficients."""
        coeffs = [c for _, c in self.vars] + [c for _, c in self.syms] + ([self.const] if self.const else [])
        if not coeffs:
            return self
        den = math.lcm(*(c.denominator for c in coeffs))
        nums = [abs(c.numerator * (den // c.denominator)) for c in coeffs]
        g = math.gcd(*nums)
        return self.scale(Fraction(den, g))

    def evaluate(self, values: dict) -> Fraction:
        total = self.const
        for k, c in self.vars + self.syms:
            total += c * values[k]
        return total

    def substitute_syms(self, values: dict) -> "LinearForm":
        const = self.const + sum((c * Fraction(values[k]) for k, c in self.syms), Fraction(0))
        return LinearForm(self.vars, (), const)

    def __str__(self):
        return _fmt_terms(list(self.vars) + list(self.syms), self.const) or "0"


def _fmt_coef(c, name):
    if c == 1:
        return name
    return f"{c}*{name}" if c.denominator != 1 else f"{c}{'*' if not name[0].isalpha() else ' '}{name}".replace(" ", "")


def _fmt_terms(terms, const):
    out = []
    for name, c in terms:
        shown = name if not name.startswith("I(") and not name.startswith("H(") else name
        mag = abs(c)
        piece = shown if mag == 1 else f"{mag}*{shown}" if mag.denominator != 1 else f"{mag}{shown}"
        out.append(("-" if c < 0 else "+", piece))
    if const:
        out.append(("-" if const < 0 else "+", str(abs(const))))
    if not out:
        return ""
    s = ("-" if out[0][0] == "-" else "") + out[0][1]
    for sign, piece in out[1:]:
        s += f" {sign} {piece}"
    return s


@dataclass(frozen=True)
class MinMax:
    kind: str  # "min" or "max"
    args: tuple  # LinearForms

    def negated(self) -> "MinMax":
        return MinMax("max" if self.kind == "min" else "min", tuple(-a for a in self.args))

    def scaled(self, k) -> "MinMax":
        k = Fraction(k)
        if k < 0:
            return MinMax("max" if self.kind == "min" else "min", tuple(a.scale(k) for a in self.args))
        return MinMax(self.kind, tuple(a.scale(k) for a in self.args))


@dataclass(frozen=True)
class Inequality:
    """``form (+ minmax) < 0`` when strict, else ``<= 0``."""

    form: LinearForm
    strict: bool = False
    minmax: MinMax | None = None
    label: str | None = field(default=None, compare=False)

    def canonical(self) -> "Inequality":
        if self.minmax is not None:
            return self
        return replace(self, form=self.form.canonical())

    def key(self, ignore_strict=False):
        c = self.canonical()
        return (c.form, None if ignore_strict else c.strict, c.minmax)

    @property
    def is_var_free(self):
        return not self.form.vars and self.minmax is None

    def holds(self, values: dict) -> bool:
        v = self.form.evaluate(values)
        if self.minmax is not None:
            vals = [a.evaluate(values) for a in self.minmax.args]
            v += min(vals) if self.minmax.kind == "min" else max(vals)
        return v < 0 if self.strict else v <= 0

    def substitute_syms(self, values: dict) -> "Inequality":
        mm = None
        if self.minmax is not None:
            mm = MinMax(self.minmax.kind, tuple(a.substitute_syms(values) for a in self.minmax.args))
        return replace(self, form=self.form.substitute_syms(values), minmax=mm)

    def pretty(self) -> str:
        """Rate variables on the left, symbols and constants on the right."""
        lhs_terms = list(self.form.vars)
        rhs_terms = [(k, -c) for k, c in self.form.syms]
        left = _fmt_terms(lhs_terms, Fraction(0))
        if self.minmax is not None:
            inner = ", ".join(str(a) for a in self.minmax.args)
            mm = f"{self.minmax.kind}({inner})"
            left = f"{left} + {mm}" if left else mm
        right = _fmt_terms(rhs_terms, -self.form.const) or "0"
        return f"{left or '0'} {'<' if self.strict else '<='} {right}"

    def __str__(self):
        return self.pretty()


@dataclass
class SymbolicSystem:
    inequalities: list
    assumptions: list = field(default_factory=list)
    eliminate_order: list = field(default_factory=list)
    expected: list = field(default_factory=list)
    name: str = ""

    def variables(self):
        names = set()
        for q in self.inequalities:
            names.update(k for k, _ in q.form.vars)
            if q.minmax:
                for a in q.minmax.args:
                    names.update(k for k, _ in a.vars)
        return sorted(names, key=var_key)

    def symbols(self):
        names = set()
        for q in self.inequalities + self.assumptions:
            names.update(k for k, _ in q.form.syms)
        return sorted(names)

    def copy(self, inequalities=None) -> "SymbolicSystem":
        return SymbolicSystem(
            list(self.inequalities if inequalities is None else inequalities),
            list(self.assumptions), list(self.eliminate_order), list(self.expected), self.name,
        )

    def rate_part(self):
        """Inequalities that constrain rates, excluding plain nonnegativity."""
        out = []
        for q in self.inequalities:
            if q.is_var_free:
                continue
            c = q.canonical()
            if not c.form.syms and c.form.const == 0 and len(c.form.vars) == 1 and c.form.vars[0][1] == -1:
                continue
            out.append(q)
        return out

    def conditions(self):
        """Var-free inequalities: constraints on the symbols alone."""
        return [q for q in self.inequalities if q.is_var_free]

    def pretty(self):
        return "\n".join(q.pretty() for q in self.inequalities)


# ---------------------------------------------------------------------------
# operations


def dedupe(ineqs):
    """Drop exact duplicates and weaker non-strict copies of strict ones."""
    seen = {}
    for q in ineqs:
        c = q.canonical()
        k = (c.form, c.minmax)
        if k in seen:
            if c.strict and not seen[k].strict:
                seen[k] = replace(seen[k], strict=True)
            continue
        seen[k] = c
    return list(seen.values())


def _trivial(q):
    """True when a var-free, symbol-free inequality holds identically."""
    if q.form.vars or q.form.syms or q.minmax is not None:
        return False
    return q.form.const < 0 or (q.form.const == 0 and not q.strict)


def expand_minmax(sys: SymbolicSystem, conjunctive_only: bool = True):
    """Replace ``f + max(A, B) <= 0`` by ``f + A <= 0`` and ``f + B <= 0``.

    A ``min`` term on the bounded side is a disjunction. With
    ``conjunctive_only`` it raises :class:`UnsupportedMinMaxDirection`;
    otherwise a list of case-split systems (one per branch choice) is
    returned.
    """
    conj, disj = [], []
    for q in sys.inequalities:
        if q.minmax is None:
            conj.append(q)
        elif q.minmax.kind == "max":
            conj.extend(Inequality(q.form + a, q.strict, None, q.label) for a in q.minmax.args)
        else:
            disj.append([Inequality(q.form + a, q.strict, None, q.label) for a in q.minmax.args])
    if not disj:
        return sys.copy(conj)
    if conjunctive_only:
        labels = ", ".join(str(branches[0].label or "?") for branches in disj)
        raise UnsupportedMinMaxDirection(f"min on the bounded side needs a case split ({labels})")
    return [sys.copy(conj + list(choice)) for choice in itertools.product(*disj)]


def eliminate(sys: SymbolicSystem, var: str) -> SymbolicSystem:
    """One Fourier-Motzkin step projecting out ``var``.

    Every upper bound on ``var`` is paired with every lower bound; the
    result is strict iff either parent is strict.
    """
    if any(q.minmax is not None for q in sys.inequalities):
        raise ValueError("expand min/max terms before eliminating")
    upper, lower, rest = [], [], []
    for q in sys.inequalities:
        c = q.form.coef(var)
        if c > 0:
            upper.append((q, c))
        elif c < 0:
            lower.append((q, -c))
        else:
            rest.append(q)
    if not upper and not lower:
        return sys.copy()
    new = list(rest)
    for (p, cp), (m, cm) in itertools.product(upper, lower):
        form = p.form.scale(1 / cp) + m.form.scale(1 / cm)
        form = form.without(var)
        new.append(Inequality(form, p.strict or m.strict).canonical())
    new = [q for q in dedupe(new) if not _trivial(q)]
    return sys.copy(new)


# ---------------------------------------------------------------------------
# redundancy


def implied_by(target: Inequality, others, assumptions) -> bool:
    """Exact Farkas certificate that ``others`` and ``assumptions`` imply ``target``.

    Looks for ``lam, mu, delta >= 0`` with
    ``target = sum lam_j others_j + sum mu_k assumptions_k - delta``
    coefficientwise. A strict target additionally needs positive weight on
    a strict parent or ``delta > 0``.
    """
    parents = list(others) + list(assumptions)
    if not parents and not (target.form.vars or target.form.syms):
        return _trivial(target)
    # sign filter: each target coefficient needs a parent with the same sign
    for k, c in target.form.vars + target.form.syms:
        if not any(dict(p.form.vars + p.form.syms).get(k, 0) * c > 0 for p in parents):
            return False
    coords = set(k for k, _ in target.form.vars + target.form.syms)
    for p in parents:
        coords.update(k for k, _ in p.form.vars + p.form.syms)
    coords = sorted(coords)
    cols = [p.form for p in parents]
    ncol = len(cols) + 1  # + delta
    A, b = [], []
    for k in coords:
        A.append([dict(f.vars + f.syms).get(k, 0) for f in cols] + [0])
        b.append(dict(target.form.vars + target.form.syms).get(k, 0))
    A.append([f.const for f in cols] + [-1])
    b.append(target.form.const)
    if not target.strict:
        status, _, _ = lp_max(A, b, [0] * ncol)
        return status != "infeasible"
    # the target fixes the scale, so the strict weight is bounded unless the
    # parents are jointly infeasible (then anything follows)
    weights = [1 if p.strict else 0 for p in parents] + [1]
    status, val, _ = lp_max(A, b, weights)
    return status == "unbounded" or (status == "optimal" and val > 0)


def prune_redundant(sys: SymbolicSystem) -> SymbolicSystem:
    """Remove inequalities implied by the rest of the system and the assumptions.

    Candidates are tried in a fixed order (most variables first, then
    canonical text); each removal is certified against the current system,
    so the surviving set implies every removed inequality.
    """
    ineqs = dedupe(sys.inequalities)
    order = sorted(range(len(ineqs)), key=lambda i: (-len(ineqs[i].form.vars), -len(ineqs[i].form.syms), ineqs[i].pretty()))
    alive = [True] * len(ineqs)
    for i in order:
        others = [ineqs[j] for j in range(len(ineqs)) if alive[j] and j != i]
        if implied_by(ineqs[i], others, sys.assumptions):
            alive[i] = False
    return sys.copy([q for q, a in zip(ineqs, alive) if a])


def run_pipeline(sys: SymbolicSystem, order=None, prune_between=True) -> SymbolicSystem:
    """Expand min/max, eliminate in ``order`` (default: the system's own), prune.

    Pruning after every step keeps the intermediate systems small; without
    it the pair count grows quadratically per elimination.
    """
    order = list(sys.eliminate_order if order is None else order)
    cur = expand_minmax(sys, conjunctive_only=True)
    for v in order:
        cur = eliminate(cur, v)
        if prune_between:
            cur = prune_redundant(cur)
    return prune_redundant(cur)


def same_inequalities(a, b, ignore_strict=True) -> bool:
    ka = {q.key(ignore_strict) for q in a}
    kb = {q.key(ignore_strict) for q in b}
    return ka == kb


def implies(sys: SymbolicSystem, target: Inequality) -> bool:
    """Whether the system (with its assumptions) implies ``target``."""
    return implied_by(target, sys.inequalities, sys.assumptions)


def recover_min_sum(sys: SymbolicSystem, lhs: LinearForm, first, second) -> dict:
    """Check a bound ``lhs <= min(first) + min(second)`` against a system.

    ``first`` and ``second`` are lists of symbol-only forms. The bound is the
    conjunction of the cross sums ``lhs <= a + b``; each is reported as
    ``"explicit"`` (present after canonicalisation), ``"implied"`` or
    ``None`` (not implied).
    """
    present = {q.key(ignore_strict=True) for q in sys.inequalities}
    out = {}
    for i, a in enumerate(first):
        for j, b in enumerate(second):
            cand = Inequality(lhs - a - b, strict=False).canonical()
            if cand.key(ignore_strict=True) in present:
                out[(i, j)] = "explicit"
            elif implies(sys, cand):
                out[(i, j)] = "implied"
            else:
                out[(i, j)] = None
    return out


def lift_feasible(sys: SymbolicSystem, values: dict) -> bool:
    """Exact test whether fixing ``values`` (symbols and some variables)
    leaves the system feasible in the remaining variables.

    Strict inequalities are honoured by maximising a common margin.
    """
    rows = []
    for q in expand_minmax(sys).inequalities:
        f = q.form.substitute_syms(values)
        fixed = {k: c for k, c in f.vars if k in values}
        const = f.const + sum((c * Fraction(values[k]) for k, c in fixed.items()), Fraction(0))
        free = {k: c for k, c in f.vars if k not in values}
        rows.append((free, const, q.strict))
    names = sorted({k for free, _, _ in rows for k in free}, key=var_key)
    nv = len(names)
    # columns: x+ (nv), x- (nv), eps, slacks (one per row + cap)
    m = len(rows) + 1
    A, b = [], []
    for i, (free, const, strict) in enumerate(rows):
        row = [free.get(k, 0) for k in names] + [-free.get(k, 0) for k in names] + [1 if strict else 0]
        row += [1 if r == i else 0 for r in range(m)]
        A.append(row)
        b.append(-const)
    A.append([0] * (2 * nv) + [1] + [1 if r == m - 1 else 0 for r in range(m)])
    b.append(1)
    c = [0] * (2 * nv) + [1] + [0] * m
    status, val, _ = lp_max(A, b, c)
    if status == "infeasible":
        return False
    if not any(strict for _, _, strict in rows):
        return True
    return val > 0
