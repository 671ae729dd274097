"""Secrecy from output correlation: additive channels and the masked exchange.

Users first run the channel with i.i.d. inputs, then publish their
observations masked by a fresh value of their own choosing. Seen from the
masks, this is a new multiple-access channel (the "virtual" channel); a
code for it becomes a code for the original channel once the masked values
are conveyed by a second, reliable code.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass

import numpy as np

from .channel import Channel, InputDistribution, is_conditionally_independent
from .errors import AlphabetMismatch, NonPrimeField, ZeroCoefficient
from .info import JointPmf, entropy
from .kernels import ml_decode
from .protocol import SimulationReport, _map, _spawn

VIRTUAL_MAC_MAX_ENTRIES = 5_000_000


def is_prime(q: int) -> bool:
    if q < 2:
        return False
    return all(q % k for k in range(2, int(math.isqrt(q)) + 1))


def field_inverse(a: int, q: int) -> int:
    return pow(int(a), -1, q)


@dataclass(frozen=True, eq=False)
class AdditiveSpec:
    """``Y1 = a1 X1 + b1 X2 + N1``, ``Y2 = a2 X1 + b2 X2 + N2``, ``Z = a3 X1 + b3 X2 + N3`` over ``F_q``."""

    q: int
    a: tuple
    b: tuple
    n1: np.ndarray
    n2: np.ndarray
    n3: np.ndarray

    def __post_init__(self):
        if not is_prime(self.q):
            raise NonPrimeField(f"field size {self.q} is not prime")
        a = tuple(int(v) % self.q for v in self.a)
        b = tuple(int(v) % self.q for v in self.b)
        if len(a) != 3 or len(b) != 3:
            raise ValueError("need three coefficients a and three coefficients b")
        if 0 in a or 0 in b:
            raise ZeroCoefficient(f"coefficients must be nonzero in F_{self.q}: a={self.a}, b={self.b}")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        for name in ("n1", "n2", "n3"):
            p = np.asarray(getattr(self, name), dtype=float)
            if p.shape != (self.q,) or np.any(p < 0) or abs(p.sum() - 1) > 1e-9:
                raise ValueError(f"{name} must be a pmf over F_{self.q}")
            object.__setattr__(self, name, p)

    @classmethod
    def from_dict(cls, doc: dict) -> "AdditiveSpec":
        return cls(int(doc["q"]), tuple(doc["a"]), tuple(doc["b"]), doc["n1"], doc["n2"], doc["n3"])

    def to_dict(self) -> dict:
        return {"q": self.q, "a": list(self.a), "b": list(self.b),
                "n1": self.n1.tolist(), "n2": self.n2.tolist(), "n3": self.n3.tolist()}


def build_additive(spec: AdditiveSpec) -> Channel:
    """Dense channel tensor of an additive spec; conditionally independent by construction."""
    q = spec.q
    (a1, a2, a3), (b1, b2, b3) = spec.a, spec.b
    x1 = np.arange(q)[:, None, None]
    x2 = np.arange(q)[None, :, None]
    y = np.arange(q)[None, None, :]
    p1 = spec.n1[(y - a1 * x1 - b1 * x2) % q]  # [x1, x2, y1]
    p2 = spec.n2[(y - a2 * x1 - b2 * x2) % q]
    p3 = spec.n3[(y - a3 * x1 - b3 * x2) % q]
    p = p1[:, :, :, None, None] * p2[:, :, None, :, None] * p3[:, :, None, None, :]
    return Channel(p)


def scaled_difference_pmf(pa, pb, c: int, q: int) -> np.ndarray:
    """Law of ``A - c B`` over ``F_q`` for independent ``A ~ pa``, ``B ~ pb``."""
    out = np.zeros(q)
    for u in range(q):
        for v in range(q):
            out[(u - c * v) % q] += pa[u] * pb[v]
    return out


@dataclass
class ClosedFormReport:
    """Each field is ``(closed_form, generic)`` in nats."""

    i_y2_x1_given_x2: tuple
    i_y1_x2_given_x1: tuple
    i_z_x1: tuple
    i_z_x2: tuple
    i_x1x2_z: tuple
    i_y1_z_given_x1: tuple
    i_y2_z_given_x2: tuple

    def max_abs_gap(self) -> float:
        return max(abs(c - g) for c, g in asdict(self).values())

    def to_dict(self) -> dict:
        d = {k: {"closed_form": v[0], "generic": v[1]} for k, v in asdict(self).items()}
        d["units"] = "nats"
        return d


def _joint_xyz(ch: Channel, pX1, pX2) -> JointPmf:
    pX1 = np.asarray(pX1, dtype=float)
    pX2 = np.asarray(pX2, dtype=float)
    if pX1.shape != (ch.x1,) or pX2.shape != (ch.x2,):
        raise AlphabetMismatch("input laws do not match the channel's input alphabets")
    p = pX1[:, None, None, None, None] * pX2[None, :, None, None, None] * ch.p
    return JointPmf(p, ("X1", "X2", "Y1", "Y2", "Z"))


def closed_form_report(spec: AdditiveSpec) -> ClosedFormReport:
    """Closed forms under uniform independent inputs next to generic evaluation."""
    q = spec.q
    (_, a2, a3), (b1, _, b3) = spec.a, spec.b
    u = np.full(q, 1 / q)
    J = _joint_xyz(build_additive(spec), u, u)
    lq = math.log(q)
    c1 = b1 * field_inverse(b3, q) % q
    c2 = a2 * field_inverse(a3, q) % q
    return ClosedFormReport(
        i_y2_x1_given_x2=(lq - entropy(spec.n2), J.I(("Y2",), ("X1",), ("X2",))),
        i_y1_x2_given_x1=(lq - entropy(spec.n1), J.I(("Y1",), ("X2",), ("X1",))),
        i_z_x1=(0.0, J.I(("Z",), ("X1",))),
        i_z_x2=(0.0, J.I(("Z",), ("X2",))),
        i_x1x2_z=(lq - entropy(spec.n3), J.I(("X1", "X2"), ("Z",))),
        i_y1_z_given_x1=(lq - entropy(scaled_difference_pmf(spec.n1, spec.n3, c1, q)), J.I(("Y1",), ("Z",), ("X1",))),
        i_y2_z_given_x2=(lq - entropy(scaled_difference_pmf(spec.n2, spec.n3, c2, q)), J.I(("Y2",), ("Z",), ("X2",))),
    )


@dataclass
class AdvantageReport:
    adv1: float  # I(Y1;X2|X1) - I(Y1;Z|X1)
    adv2: float  # I(Y2;X1|X2) - I(Y2;Z|X2)
    conditionally_independent: bool = True

    def to_dict(self) -> dict:
        d = asdict(self)
        d["units"] = "nats"
        return d

    def to_csv(self) -> str:
        return f"adv1,adv2,conditionally_independent\n{self.adv1:.17g},{self.adv2:.17g},{int(self.conditionally_independent)}\n"


def secrecy_advantage(ch: Channel, pX1, pX2) -> AdvantageReport:
    """Per-direction advantage of the legitimate receiver over the eavesdropper.

    Warns when the channel outputs are not conditionally independent given
    the inputs; the advantage may then be zero or negative.
    """
    ci = is_conditionally_independent(ch)
    if not ci:
        warnings.warn("channel outputs are not conditionally independent given the inputs", RuntimeWarning,
                      stacklevel=2)
    J = _joint_xyz(ch, pX1, pX2)
    adv1 = J.I(("Y1",), ("X2",), ("X1",)) - J.I(("Y1",), ("Z",), ("X1",))
    adv2 = J.I(("Y2",), ("X1",), ("X2",)) - J.I(("Y2",), ("Z",), ("X2",))
    return AdvantageReport(adv1, adv2, ci)


# ---------------------------------------------------------------------------
# the virtual channel


def _check_field_alphabets(ch: Channel):
    for name in ("x1", "x2", "y1", "y2"):
        size = getattr(ch, name)
        if not is_prime(size):
            raise AlphabetMismatch(f"alphabet {name} has size {size}; masking needs a prime field")


def induced_virtual_mac(ch: Channel, pX1, pX2) -> Channel:
    """Channel from the masks ``((X1', Y1'), (X2', Y2'))`` to the three views.

    Input of user ``i`` is encoded as ``x' * |Yi| + y'``. Outputs, each
    flattened in the order listed:

    * user 1: ``(X1, Y1, X2'', Y2'')``
    * user 2: ``(X2, Y2, X1'', Y1'')``
    * eavesdropper: ``(Z, X1'', Y1'', X2'', Y2'')``

    with ``X'' = X + X'`` and ``Y'' = Y + Y'`` modulo the alphabet size.
    """
    _check_field_alphabets(ch)
    J = _joint_xyz(ch, pX1, pX2).p  # [x1, x2, y1, y2, z]
    X1, X2, Y1, Y2, Z = J.shape
    o1 = X1 * Y1 * X2 * Y2
    o2 = X2 * Y2 * X1 * Y1
    oz = Z * X1 * Y1 * X2 * Y2
    total = (X1 * Y1) * (X2 * Y2) * o1 * o2 * oz
    if total > VIRTUAL_MAC_MAX_ENTRIES:
        raise AlphabetMismatch(f"virtual channel tensor would have {total} entries; use virtual_mac_difference")
    p = np.zeros((X1 * Y1, X2 * Y2, o1, o2, oz))
    for x1, x2, y1, y2, z in zip(*np.nonzero(J)):
        w = J[x1, x2, y1, y2, z]
        for x1p in range(X1):
            for y1p in range(Y1):
                for x2p in range(X2):
                    for y2p in range(Y2):
                        x1m, y1m = (x1 + x1p) % X1, (y1 + y1p) % Y1
                        x2m, y2m = (x2 + x2p) % X2, (y2 + y2p) % Y2
                        u1 = np.ravel_multi_index((x1, y1, x2m, y2m), (X1, Y1, X2, Y2))
                        u2 = np.ravel_multi_index((x2, y2, x1m, y1m), (X2, Y2, X1, Y1))
                        e = np.ravel_multi_index((z, x1m, y1m, x2m, y2m), (Z, X1, Y1, X2, Y2))
                        p[x1p * Y1 + y1p, x2p * Y2 + y2p, u1, u2, e] += w
    return Channel(p)


def masking_distribution(ch: Channel) -> InputDistribution:
    """Auxiliary law on the virtual channel: ``V1 = Y1'`` uniform with ``X1' = 0``;
    ``V2`` constant with uniform ``(X2', Y2')``."""
    Y1, X2, Y2 = ch.y1, ch.x2, ch.y2
    pv1 = np.full(Y1, 1 / Y1)
    m1 = np.zeros((Y1, ch.x1 * Y1))
    for v in range(Y1):
        m1[v, 0 * Y1 + v] = 1.0
    m2 = np.full((1, X2 * Y2), 1 / (X2 * Y2))
    return InputDistribution(pv1, m1, np.ones(1), m2)


@dataclass
class VirtualMacReport:
    legit_term: float  # I(V1; X2, Y2, X1'', Y1'' | X2', Y2')
    eve_term: float  # I(V1, V2; Z, X1'', Y1'', X2'', Y2'')
    difference: float
    reverse_term: float  # I(V2; X1, Y1, X2'', Y2'' | X1', Y1'), zero for constant V2
    masking_dependence: float  # I(X2'', Y2''; Y1', Z, X1'', Y1'')

    def to_dict(self) -> dict:
        d = asdict(self)
        d["units"] = "nats"
        return d


def virtual_mac_difference(ch: Channel, pX1, pX2) -> VirtualMacReport:
    """Legitimate-minus-eavesdropper quantity of the virtual channel.

    Evaluated from the explicit joint of masks, channel variables and masked
    values (no tensor of the whole virtual channel is built), with
    ``V1 = Y1'`` uniform, ``X1' = 0`` and uniform ``(X2', Y2')``.
    """
    _check_field_alphabets(ch)
    J = _joint_xyz(ch, pX1, pX2).p  # [x1, x2, y1, y2, z]
    X1, X2, Y1, Y2, Z = J.shape
    # T[v, x2p, y2p, x1, x2m, y1m, y2m, z]; X1'' = X1 since X1' = 0
    T = np.zeros((Y1, X2, Y2, X1, X2, Y1, Y2, Z))
    w = 1.0 / (Y1 * X2 * Y2)
    for v in range(Y1):
        Jv = np.roll(J, v, axis=2)  # Y1'' = Y1 + v
        for x2p in range(X2):
            Jx = np.roll(Jv, x2p, axis=1)
            for y2p in range(Y2):
                T[v, x2p, y2p] = w * np.roll(Jx, y2p, axis=3)
    # legitimate view: (X2, Y2, X1'', Y1'') given (X2', Y2'); X2, Y2 unmasked
    L = np.zeros((Y1, X2, Y2, X1, X2, Y1, Y2))
    Jxy = J.sum(axis=4)  # [x1, x2, y1, y2]
    for v in range(Y1):
        base = np.roll(Jxy, v, axis=2) / Y1  # [x1, x2, y1m, y2]
        for x2p in range(X2):
            for y2p in range(Y2):
                L[v, x2p, y2p] = base / (X2 * Y2)
    JL = JointPmf(L, ("V1", "X2p", "Y2p", "X1", "X2", "Y1m", "Y2"))
    legit = JL.I(("V1",), ("X2", "Y2", "X1", "Y1m"), ("X2p", "Y2p"))
    JT = JointPmf(T, ("V1", "X2p", "Y2p", "X1", "X2m", "Y1m", "Y2m", "Z"))
    eve = JT.I(("V1",), ("Z", "X1", "Y1m", "X2m", "Y2m"))
    masking = JT.I(("X2m", "Y2m"), ("V1", "Z", "X1", "Y1m"))
    return VirtualMacReport(legit, eve, legit - eve, 0.0, masking)


# ---------------------------------------------------------------------------
# two-stage conversion


def swap_users(ch: Channel) -> Channel:
    """Exchange the roles of the two users."""
    return Channel(np.transpose(ch.p, (1, 0, 3, 2, 4)))


@dataclass(frozen=True)
class InnerCode:
    """Second-stage code conveying the masked values.

    ``kind="ideal"`` is a lossless public channel; ``kind="repetition"``
    sends every symbol ``r`` times over the real channel.
    """

    kind: str = "ideal"
    r: int = 3

    def __post_init__(self):
        if self.kind not in ("ideal", "repetition"):
            raise ValueError(f"unknown inner code {self.kind!r}")
        if self.r < 1:
            raise ValueError("repetition factor must be positive")


def _stage_one(ch, pX1, pX2, size, n1, rng):
    x1 = rng.choice(ch.x1, size=(size, n1), p=pX1)
    x2 = rng.choice(ch.x2, size=(size, n1), p=pX2)
    flat = ch.p.reshape(ch.x1, ch.x2, -1)
    cdf = np.cumsum(flat, axis=-1)
    u = rng.random((size, n1))
    out = np.minimum((u[..., None] >= cdf[x1, x2]).sum(-1), flat.shape[-1] - 1)
    y1, y2, z = np.unravel_index(out, (ch.y1, ch.y2, ch.z))
    return x1, x2, y1, y2, z


def _repetition(ch, sym1, sym2, r, rng):
    """Both users send their symbol sequences ``r`` times each; user 2
    returns per-symbol ML estimates of user 1's symbols."""
    size, k = sym1.shape
    x1 = np.repeat(sym1, r, axis=1)
    x2 = np.repeat(sym2, r, axis=1)
    flat = ch.p.reshape(ch.x1, ch.x2, -1)
    cdf = np.cumsum(flat, axis=-1)
    u = rng.random(x1.shape)
    out = np.minimum((u[..., None] >= cdf[x1, x2]).sum(-1), flat.shape[-1] - 1)
    _, y2, _ = np.unravel_index(out, (ch.y1, ch.y2, ch.z))
    with np.errstate(divide="ignore"):
        lw = np.log(ch.marginal("y2"))  # [x1, x2, y2]
    # score[trial, position, candidate]
    scores = lw[:, x2, y2].transpose(1, 2, 0).reshape(size, k, r, ch.x1).sum(axis=2)
    return np.argmax(scores, axis=2)


def _two_stage_chunk(job):
    ch, pX1, pX2, codebook, inner, size, seq = job
    rng = np.random.default_rng(seq)
    M, n1 = codebook.shape
    X1, Y1, Y2 = ch.x1, ch.y1, ch.y2
    m = rng.integers(0, M, size)
    v = codebook[m]  # Y1' = codeword, X1' = 0
    x1, x2, y1, y2, _ = _stage_one(ch, pX1, pX2, size, n1, rng)
    y1m = (y1 + v) % Y1
    # user 2 masks its own pair; the values never matter for this direction
    x2m = (x2 + rng.integers(0, ch.x2, x2.shape)) % ch.x2
    y2m = (y2 + rng.integers(0, Y2, y2.shape)) % Y2
    if inner.kind == "ideal":
        got_x1, got_y1m = x1, y1m
    else:
        if Y1 > X1 or Y2 > ch.x2:
            raise AlphabetMismatch("repetition code needs output symbols to fit the input alphabet")
        sent1 = np.concatenate([x1, y1m], axis=1)
        sent2 = np.concatenate([x2m, y2m], axis=1)
        est = _repetition(ch, sent1, sent2, inner.r, rng)
        got_x1, got_y1m = est[:, :n1], est[:, n1:]
    inner_fail = np.any((got_x1 != x1) | (got_y1m != y1m), axis=1)
    # virtual decoder at user 2: log P(x1'', y1'' - v, y2 | x2) per letter
    with np.errstate(divide="ignore"):
        lpx1 = np.log(pX1)
        lyy = np.log(ch.marginal("y1", "y2"))  # [x1, x2, y1, y2]

    # logw[side, v, obs] with side = (x2, y2, x1'') and obs = y1''
    logw = np.empty((ch.x2 * Y2 * X1, Y1, Y1))
    for a in range(ch.x2):
        for b in range(Y2):
            for c in range(X1):
                s = (a * Y2 + b) * X1 + c
                for vv in range(Y1):
                    logw[s, vv] = lpx1[c] + lyy[c, a, (np.arange(Y1) - vv) % Y1, b]

    def decode(gx1, gy1m):
        return ml_decode(logw, codebook, (x2 * Y2 + y2) * X1 + gx1, gy1m)

    virtual_err = decode(x1, y1m) != m
    err = decode(got_x1, got_y1m) != m if inner.kind != "ideal" else virtual_err
    return int(err.sum()), int(virtual_err.sum()), int(inner_fail.sum())


def simulate_two_stage(ch: Channel, pX1, pX2, n1: int, M: int = 4, inner: InnerCode | None = None,
                       trials: int = 1000, seed: int = 0, direction: int = 1, workers: int = 1) -> SimulationReport:
    """End-to-end error of the converted protocol in one direction.

    Stage one makes ``n1`` channel uses with i.i.d. inputs. The sender's
    message picks a uniformly drawn codeword of mask values ``Y'`` (``M``
    codewords of length ``n1``); the masked pair ``(X'', Y'')`` is then
    conveyed by ``inner``. The receiver decodes by maximum likelihood.

    ``extra`` records the error of the same decoder fed the true masked
    values (``virtual_error``), the number of trials in which the inner code
    corrupted them (``inner_failures``) and the channel-use overhead
    ``n2 / n1``.
    """
    inner = inner or InnerCode()
    if direction == 2:
        ch, pX1, pX2 = swap_users(ch), pX2, pX1
    elif direction != 1:
        raise ValueError("direction must be 1 or 2")
    _check_field_alphabets(ch)
    pX1 = np.asarray(pX1, dtype=float)
    pX2 = np.asarray(pX2, dtype=float)
    cb_rng = np.random.default_rng(np.random.SeedSequence([seed, 1]))
    codebook = cb_rng.integers(0, ch.y1, size=(M, n1))
    jobs = [(ch, pX1, pX2, codebook, inner, size, seq) for size, seq in _spawn(seed, trials)]
    res = _map(_two_stage_chunk, jobs, workers)
    errors = sum(r[0] for r in res)
    n2 = 0 if inner.kind == "ideal" else 2 * n1 * inner.r
    rep = SimulationReport.from_counts(errors, trials, seed)
    rep.extra = {
        "direction": direction,
        "n1": n1,
        "n2": n2,
        "overhead": n2 / n1,
        "public_nats": n1 * math.log(ch.x1 * ch.y1) if inner.kind == "ideal" else 0.0,
        "inner_code": inner.kind if inner.kind == "ideal" else f"repetition-{inner.r}",
        "virtual_error": sum(r[1] for r in res) / trials,
        "inner_failures": sum(r[2] for r in res),
        "inner_failure_rate": sum(r[2] for r in res) / trials,
    }
    return rep
