"""Line-oriented input language for symbolic inequality systems.

One inequality per line::

    label: R1o + R1e > I(Z;V1)
    R1 = R1s + R1e
    R1k + R2k + max(R1s, R2s) < 'I(Y1;V2|X1)' + 2*I(Y2;V1|X2)

Terms are rate identifiers, rational literals (``3/2``), ``min(...)`` and
``max(...)`` over linear expressions, and symbol atoms. An atom is either
quoted, or an identifier immediately followed by a parenthesised argument
list (``I(Z;V1,V2)``; whitespace inside is dropped).

Directives::

    #assume  <inequality over atoms only>
    #eliminate R1o, R2o, ...
    #nonneg  R1s, R2s, 'I(Z;V1)', ...
    #expect  <inequality>          (reference result for verification)

Any other line starting with ``#`` is a comment.
"""

from __future__ import annotations

import re
from fractions import Fraction

from ..errors import DuplicateSymbol, ParseError
from .core import Inequality, LinearForm, MinMax, SymbolicSystem

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>\d+(?:\.\d+)?(?:/\d+)?)
  | (?P<quoted>'[^']*'|"[^"]*")
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<rel><=|>=|≤|≥|<|>|=)
  | (?P<op>[-+*(),])
    """,
    re.VERBOSE,
)

_REL = {"≤": "<=", "≥": ">="}


class _Tok:
    __slots__ = ("kind", "text", "col")

    def __init__(self, kind, text, col):
        self.kind, self.text, self.col = kind, text, col

    def __repr__(self):
        return f"{self.kind}:{self.text}@{self.col}"


def _tokenize(text, line, col0):
    toks = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", line, col0 + pos)
        kind = m.lastgroup
        if kind == "ident" and m.group("ident") not in ("min", "max") and m.end() < len(text) and text[m.end()] == "(":
            # bare atom such as I(Z;V1,V2): swallow the balanced argument list
            depth, j = 0, m.end()
            while j < len(text):
                depth += {"(": 1, ")": -1}.get(text[j], 0)
                if depth == 0:
                    break
                j += 1
            if depth != 0:
                raise ParseError("unbalanced parenthesis in atom", line, col0 + m.end())
            toks.append(_Tok("atom", re.sub(r"\s+", "", text[pos:j + 1]), col0 + pos))
            pos = j + 1
            continue
        if kind != "ws":
            val = m.group(kind)
            if kind == "quoted":
                kind, val = "atom", re.sub(r"\s+", "", val[1:-1])
                if not val:
                    raise ParseError("empty quoted atom", line, col0 + pos)
            toks.append(_Tok(kind, _REL.get(val, val), col0 + pos))
        pos = m.end()
    return toks


def _number(text):
    return Fraction(text)


class _Parser:
    def __init__(self, toks, line, end_col):
        self.toks, self.i, self.line, self.end_col = toks, 0, line, end_col
        self.minmax = []  # (coef, MinMax, column)

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else None

    def error(self, msg, tok=None):
        tok = tok or self.peek()
        raise ParseError(msg, self.line, tok.col if tok else self.end_col)

    def take(self, kind=None, text=None):
        t = self.peek()
        if t is None or (kind and t.kind != kind) or (text and t.text != text):
            want = text or kind or "token"
            self.error(f"expected {want}" + (f", found {t.text!r}" if t else " before end of line"))
        self.i += 1
        return t

    def expr(self, allow_minmax=True) -> LinearForm:
        form = LinearForm()
        sign = 1
        t = self.peek()
        if t is not None and t.kind == "op" and t.text in "+-":
            sign = -1 if t.text == "-" else 1
            self.i += 1
        form = form + self.term(sign, allow_minmax)
        while True:
            t = self.peek()
            if t is None or not (t.kind == "op" and t.text in "+-"):
                return form
            self.i += 1
            form = form + self.term(-1 if t.text == "-" else 1, allow_minmax)

    def term(self, sign, allow_minmax) -> LinearForm:
        t = self.peek()
        if t is None:
            self.error("expected a term before end of line")
        coef = Fraction(sign)
        if t.kind == "num":
            self.i += 1
            coef *= _number(t.text)
            nxt = self.peek()
            if nxt is not None and nxt.kind == "op" and nxt.text == "*":
                self.i += 1
                nxt = self.peek()
                if nxt is None or nxt.kind not in ("ident", "atom"):
                    self.error("expected a variable or atom after '*'")
            if nxt is None or nxt.kind not in ("ident", "atom"):
                return LinearForm.make(const=coef)
            t = nxt
        if t.kind == "atom":
            self.i += 1
            return LinearForm.sym(t.text, coef)
        if t.kind == "ident" and t.text in ("min", "max"):
            if not allow_minmax:
                self.error("nested min/max is not supported", t)
            self.i += 1
            self.take("op", "(")
            args = [self.expr(False)]
            while self.peek() is not None and self.peek().text == ",":
                self.i += 1
                args.append(self.expr(False))
            self.take("op", ")")
            if len(args) < 2:
                self.error(f"{t.text} needs at least two arguments", t)
            self.minmax.append((coef, MinMax(t.text, tuple(args)), t))
            return LinearForm()
        if t.kind == "ident":
            self.i += 1
            return LinearForm.var(t.text, coef)
        self.error(f"unexpected {t.text!r}", t)


def _split_top(text):
    """Split on commas outside parentheses and quotes."""
    out, depth, quote, cur = [], 0, None, ""
    for ch in text:
        if quote:
            quote = None if ch == quote else quote
        elif ch in "'\"":
            quote = ch
        elif ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        elif ch == "," and depth == 0:
            out.append(cur.strip())
            cur = ""
            continue
        cur += ch
    if cur.strip():
        out.append(cur.strip())
    return out


def parse_inequalities(text, line=1, col0=1, label=None):
    """Parse one relation; returns a list (two items for ``=``)."""
    toks = _tokenize(text, line, col0)
    if not toks:
        raise ParseError("empty inequality", line, col0)
    p = _Parser(toks, line, col0 + len(text))
    lhs = p.expr()
    rel_tok = p.peek()
    if rel_tok is None or rel_tok.kind != "rel":
        p.error("expected a relation (<, <=, =, >, >=)")
    p.i += 1
    n_left = len(p.minmax)
    rhs = p.expr()
    if p.peek() is not None:
        p.error(f"unexpected {p.peek().text!r} after right-hand side")
    if len(p.minmax) > 1:
        raise ParseError("at most one min/max term per inequality", line, p.minmax[1][2].col)
    mm_side = None
    if p.minmax:
        coef, mm, _ = p.minmax[0]
        # move to the "lhs - rhs" orientation
        mm_side = mm.scaled(coef if n_left else -coef)
    rel = rel_tok.text
    diff = lhs - rhs
    out = []
    if rel in ("<", "<=", "="):
        out.append(Inequality(diff, rel == "<", mm_side, label))
    if rel in (">", ">=", "="):
        out.append(Inequality(-diff, rel == ">", mm_side.negated() if mm_side else None, label))
    return [q.canonical() for q in out]


_LABEL = re.compile(r"^\s*([A-Za-z_][A-Za-z0-9_.\-]*)\s*:(?!=)")


def parse_system(text: str, name: str = "") -> SymbolicSystem:
    """Parse a whole system; see the module docstring for the grammar."""
    ineqs, assumptions, order, expected = [], [], [], []
    labels = set()
    var_names, atom_names = {}, {}

    def record(qs, line):
        for q in qs:
            for k, _ in q.form.vars:
                var_names.setdefault(k, line)
            for k, _ in q.form.syms:
                atom_names.setdefault(k, line)
            if q.minmax:
                for a in q.minmax.args:
                    for k, _ in a.vars:
                        var_names.setdefault(k, line)
                    for k, _ in a.syms:
                        atom_names.setdefault(k, line)

    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped:
            continue
        col0 = raw.index(stripped[0]) + 1
        if stripped.startswith("#"):
            m = re.match(r"#(assume|eliminate|nonneg|expect)\b", stripped)
            if not m:
                continue
            directive = m.group(1)
            body = stripped[m.end():]
            bcol = col0 + m.end() + (len(body) - len(body.lstrip()))
            body = body.strip()
            if directive == "eliminate":
                order.extend(v.strip() for v in body.split(",") if v.strip())
            elif directive == "nonneg":
                for item in _split_top(body):
                    toks = _tokenize(item, lineno, bcol)
                    if len(toks) != 1 or toks[0].kind not in ("ident", "atom"):
                        raise ParseError(f"#nonneg expects names, got {item!r}", lineno, bcol)
                    tok = toks[0]
                    if tok.kind == "ident":
                        q = Inequality(LinearForm.var(tok.text, -1))
                        ineqs.append(q)
                    else:
                        q = Inequality(LinearForm.sym(tok.text, -1))
                        assumptions.append(q)
                    record([q], lineno)
            else:
                qs = parse_inequalities(body, lineno, bcol)
                if directive == "assume":
                    for q in qs:
                        if q.form.vars or q.minmax:
                            raise ParseError("assumptions may only mention symbol atoms", lineno, bcol)
                    assumptions.extend(qs)
                    record(qs, lineno)
                else:
                    expected.extend(qs)
            continue
        label = None
        m = _LABEL.match(stripped)
        if m:
            label = m.group(1)
            if label in labels:
                raise DuplicateSymbol(f"line {lineno}: label {label!r} used twice")
            labels.add(label)
            rest = stripped[m.end():]
            col0 += m.end() + (len(rest) - len(rest.lstrip()))
            stripped = rest.strip()
        qs = parse_inequalities(stripped, lineno, col0, label)
        ineqs.extend(qs)
        record(qs, lineno)

    clash = sorted(set(var_names) & set(atom_names))
    if clash:
        raise DuplicateSymbol(f"name(s) used both as rate variable and symbol atom: {clash}")
    return SymbolicSystem(ineqs, assumptions, order, expected, name)


def parse_inequality(text: str) -> Inequality:
    """Single non-equality relation, e.g. for tests and CLI queries."""
    qs = parse_inequalities(text)
    if len(qs) != 1:
        raise ParseError("expected a single inequality, got an equality")
    return qs[0]
