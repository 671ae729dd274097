"""Shannon and Rényi information quantities (natural log throughout).

Conventions: ``0 log 0 = 0``, ``0^a = 0`` for ``a > 0``, and conditioning
events of probability zero are skipped.

The order offset ``s`` lies in ``(0, 1]``. The "up" measure is the order
``1+s`` divergence against the product of marginals; the "down" measure is
the conditional order ``1/(1+s)`` quantity optimised over the output law.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .errors import DegenerateSupport, ParseError, UnknownCoordinate

PMF_TOL = 1e-12


def _log(a):
    with np.errstate(divide="ignore"):
        return np.log(a)


def _check_s(s):
    if not (0 < s <= 1):
        raise ValueError(f"order offset s must lie in (0, 1], got {s}")


def entropy(p) -> float:
    p = np.asarray(p, dtype=float).ravel()
    p = p[p > 0]
    return float(-np.sum(p * np.log(p)))


def mutual_information(pab) -> float:
    """``I(A;B)`` for a 2-D joint pmf ``pab[a, b]``."""
    pab = np.asarray(pab, dtype=float)
    return entropy(pab.sum(1)) + entropy(pab.sum(0)) - entropy(pab)


def cond_mutual_information(pabc) -> float:
    """``I(A;B|C)`` for a 3-D joint pmf ``pabc[a, b, c]``."""
    pabc = np.asarray(pabc, dtype=float)
    return (
        entropy(pabc.sum(1))
        + entropy(pabc.sum(0))
        - entropy(pabc)
        - entropy(pabc.sum((0, 1)))
    )


# ---------------------------------------------------------------------------
# Rényi measures


def renyi_divergence(p, q, s: float) -> float:
    """Order ``1+s`` divergence ``(1/s) log sum p^(1+s) q^(-s)``.

    Entries with ``p = 0`` contribute nothing; ``q = 0`` where ``p > 0``
    raises :class:`DegenerateSupport` rather than returning infinity.
    """
    _check_s(s)
    p = np.asarray(p, dtype=float).ravel()
    q = np.asarray(q, dtype=float).ravel()
    on = p > 0
    if np.any(q[on] <= 0):
        raise DegenerateSupport("reference measure vanishes on the support of p")
    terms = (1 + s) * np.log(p[on]) - s * np.log(q[on])
    return float(logsumexp(terms) / s)


def renyi_mi_up(pzx, s: float) -> float:
    """Order ``1+s`` mutual information ``D_{1+s}(P_ZX || P_Z x P_X)``.

    ``pzx`` is a 2-D array indexed ``[z, x]``.
    """
    pzx = np.asarray(pzx, dtype=float)
    prod = np.outer(pzx.sum(1), pzx.sum(0))
    return renyi_divergence(pzx, prod, s)


def _conditional_parts(pzxy):
    """Split ``P[z,x,y]`` into ``P_Y``, ``log P_{X|Y}`` and ``log P_{Z|XY}``."""
    pzxy = np.asarray(pzxy, dtype=float)
    if pzxy.ndim != 3:
        raise ValueError("expected a 3-D pmf indexed [z, x, y]")
    pxy = pzxy.sum(0)
    py = pxy.sum(0)
    with np.errstate(divide="ignore", invalid="ignore"):
        px_y = np.where(py > 0, pxy / np.where(py > 0, py, 1), 0.0)
        pz_xy = np.where(pxy > 0, pzxy / np.where(pxy > 0, pxy, 1), 0.0)
    return py, _log(px_y), _log(pz_xy)


def _log_tilted(pzxy, s):
    """``log sum_x P(x|y) P(z|x,y)^(1/(1+s))`` indexed ``[z, y]``."""
    py, lpx_y, lpz_xy = _conditional_parts(pzxy)
    alpha = 1.0 / (1.0 + s)
    with np.errstate(invalid="ignore"):
        t = lpx_y[None, :, :] + alpha * lpz_xy
    t = np.where(np.isnan(t), -np.inf, t)
    return py, logsumexp(t, axis=1)


def cond_renyi_mi_down(pzxy, s: float) -> float:
    """Conditional order ``1/(1+s)`` mutual information ``I(Z;X|Y)``.

    ``pzxy`` is indexed ``[z, x, y]``. Evaluated in the log domain as
    ``-(1/s) log sum_y P(y) sum_z (sum_x P(x|y) P(z|x,y)^(1/(1+s)))^(1+s)``.
    """
    _check_s(s)
    py, lt = _log_tilted(pzxy, s)
    on = py > 0
    terms = np.log(py[on])[None, :] + (1 + s) * lt[:, on]
    return float(-logsumexp(terms) / s)


def minimizer_q(pzxy, s: float, mode: str = "conditional") -> np.ndarray:
    """Closed-form optimal output law for the down measure.

    ``mode="conditional"`` returns ``Q[z, y]`` with columns ``Q(.|y)``;
    ``mode="joint"`` returns the joint ``Q[z, y]`` minimising
    ``D_{1/(1+s)}(P_ZYX || Q_ZY x P_X)``.

    Both are tilted laws ``Q ∝ (sum_x w(x) P(z..|x..)^(1/(1+s)))^(1+s)``.
    """
    _check_s(s)
    pzxy = np.asarray(pzxy, dtype=float)
    if mode == "conditional":
        py, lt = _log_tilted(pzxy, s)
        la = (1 + s) * lt
        q = np.empty_like(la)
        nz = pzxy.shape[0]
        for y in range(la.shape[1]):
            if py[y] > 0:
                q[:, y] = np.exp(la[:, y] - logsumexp(la[:, y]))
            else:
                q[:, y] = 1.0 / nz
        return q
    if mode == "joint":
        px = pzxy.sum((0, 2))
        alpha = 1.0 / (1.0 + s)
        with np.errstate(divide="ignore", invalid="ignore"):
            pzy_x = np.where(px[None, :, None] > 0, pzxy / np.where(px > 0, px, 1)[None, :, None], 0.0)
            t = _log(px)[None, :, None] + alpha * _log(pzy_x)
        t = np.where(np.isnan(t), -np.inf, t)
        la = (1 + s) * logsumexp(t, axis=1)
        return np.exp(la - logsumexp(la))
    raise ValueError(f"unknown mode {mode!r}")


def _renyi_down_divergence(p, r, s):
    """``D_{1/(1+s)}(p || r)`` for arrays of equal shape."""
    alpha = 1.0 / (1.0 + s)
    on = p > 0
    if np.any(r[on] <= 0):
        return np.inf
    terms = alpha * np.log(p[on]) + (1 - alpha) * np.log(r[on])
    return float(logsumexp(terms) / (alpha - 1))


def renyi_objective(pzxy, q, s: float, mode: str = "conditional") -> float:
    """Objective minimised by :func:`minimizer_q`, evaluated at ``q``."""
    _check_s(s)
    pzxy = np.asarray(pzxy, dtype=float)
    q = np.asarray(q, dtype=float)
    if mode == "joint":
        px = pzxy.sum((0, 2))
        ref = q[:, None, :] * px[None, :, None]
        return _renyi_down_divergence(pzxy, ref, s)
    pxy = pzxy.sum(0)
    py = pxy.sum(0)
    terms = []
    for y in np.flatnonzero(py > 0):
        p_cond = pzxy[:, :, y] / py[y]
        ref = q[:, y][:, None] * (pxy[:, y] / py[y])[None, :]
        d = _renyi_down_divergence(p_cond, ref, s)
        terms.append(np.log(py[y]) - s * d)
    return float(-logsumexp(terms) / s)


# ---------------------------------------------------------------------------
# named joint pmfs and the query language


@dataclass(frozen=True, eq=False)
class JointPmf:
    """Joint pmf with one named axis per coordinate."""

    p: np.ndarray
    names: tuple

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float)
        names = tuple(self.names)
        if p.ndim != len(names):
            raise ValueError("one name per axis required")
        if len(set(names)) != len(names):
            raise ValueError("coordinate names must be unique")
        if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
            raise ValueError("not a probability tensor")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "names", names)

    def _axes(self, group):
        try:
            return [self.names.index(g) for g in group]
        except ValueError:
            missing = [g for g in group if g not in self.names]
            raise UnknownCoordinate(f"unknown coordinate(s) {missing}; have {list(self.names)}") from None

    def marginal(self, group) -> np.ndarray:
        """Marginal over ``group`` with axes in the order given."""
        axes = self._axes(group)
        drop = tuple(i for i in range(self.p.ndim) if i not in axes)
        m = self.p.sum(axis=drop)
        kept = sorted(axes)
        return np.transpose(m, [kept.index(a) for a in axes])

    def flat(self, *groups) -> np.ndarray:
        """Marginal over the union of ``groups``, each group flattened to one axis."""
        allnames = [n for g in groups for n in g]
        if len(set(allnames)) != len(allnames):
            raise ValueError("coordinate groups overlap")
        m = self.marginal(allnames)
        shape = []
        i = 0
        for g in groups:
            shape.append(int(np.prod(m.shape[i:i + len(g)])) if g else 1)
            i += len(g)
        return m.reshape(shape)

    def H(self, a, given=()) -> float:
        a, given = tuple(a), tuple(given)
        h = entropy(self.marginal(a + given))
        return h - entropy(self.marginal(given)) if given else h

    def I(self, a, b, given=()) -> float:
        a, b, given = tuple(a), tuple(b), tuple(given)
        self._axes(a + b + given)
        return self.H(a, given) + self.H(b, given) - self.H(a + b, given)

    def evaluate(self, query: str) -> float:
        return shannon_quantities(self, query)


_TERM = re.compile(
    r"\s*(?P<sign>[+-])?\s*(?:(?P<coef>\d+(?:\.\d*)?(?:/\d+)?)\s*\*?\s*)?"
    r"(?:(?P<fn>[HI])\((?P<args>[^()]*)\)|(?P<const>\d+(?:\.\d*)?))\s*"
)


def _group(text):
    names = tuple(t.strip() for t in text.split(",") if t.strip())
    if not names:
        raise ParseError(f"empty coordinate group in {text!r}")
    return names


def shannon_quantities(p: JointPmf, query: str) -> float:
    """Evaluate a linear combination of ``H(.)``/``I(.;.)`` terms in nats.

    Examples: ``"H(X)"``, ``"I(Z;X|Y)"``, ``"I(Y2;V1|X2) - I(Z;V1,V2)"``.
    """
    pos = 0
    total = 0.0
    first = True
    query = query.strip()
    if not query:
        raise ParseError("empty query")
    while pos < len(query):
        m = _TERM.match(query, pos)
        if not m or m.end() == pos:
            raise ParseError(f"cannot parse query at {query[pos:]!r}", 1, pos + 1)
        if not first and not m.group("sign"):
            raise ParseError(f"missing operator before {query[pos:]!r}", 1, pos + 1)
        first = False
        sign = -1.0 if m.group("sign") == "-" else 1.0
        coef = 1.0
        if m.group("coef"):
            num, _, den = m.group("coef").partition("/")
            coef = float(num) / (float(den) if den else 1.0)
        if m.group("const"):
            value = float(m.group("const"))
        else:
            args = m.group("args")
            body, _, given = args.partition("|")
            given_g = _group(given) if given.strip() else ()
            if m.group("fn") == "H":
                value = p.H(_group(body), given_g)
            else:
                if ";" not in body:
                    raise ParseError(f"mutual information needs 'A;B': {args!r}")
                a, b = body.split(";", 1)
                value = p.I(_group(a), _group(b), given_g)
        total += sign * coef * value
        pos = m.end()
    return total


def channel_joint(ch, d) -> JointPmf:
    """Named joint of ``(V1, V2, X1, X2, Y1, Y2, Z)`` for a channel and input law."""
    from .channel import joint_pmf

    return JointPmf(joint_pmf(ch, d), ("V1", "V2", "X1", "X2", "Y1", "Y2", "Z"))
