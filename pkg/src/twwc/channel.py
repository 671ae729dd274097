"""Finite-alphabet two-way wiretap channels.

A channel is stored as a dense tensor ``p[x1, x2, y1, y2, z]`` holding
``P(y1, y2, z | x1, x2)``. Symbols are the integers ``0..size-1``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DimensionError, ParseError, StochasticityError

ROW_TOL = 1e-9
AXES = ("x1", "x2", "y1", "y2", "z")


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


def _check_pmf(p, what, tol=ROW_TOL):
    p = np.asarray(p, dtype=float)
    if np.any(p < 0) or not np.all(np.isfinite(p)):
        raise StochasticityError(f"{what}: negative or non-finite entry")
    sums = p.sum(axis=-1)
    bad = np.abs(sums - 1.0) > tol
    if np.any(bad):
        idx = tuple(int(i) for i in np.argwhere(bad)[0])
        raise StochasticityError(f"{what}: row {idx} sums to {float(sums[idx])!r}")


@dataclass(frozen=True, eq=False)
class Channel:
    """Discrete memoryless two-way wiretap channel ``P(y1, y2, z | x1, x2)``."""

    p: np.ndarray
    labels: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float)
        if p.ndim != 5:
            raise DimensionError(f"channel tensor must be 5-dimensional, got {p.ndim}")
        if min(p.shape) < 1:
            raise DimensionError("alphabet sizes must be >= 1")
        flat = p.reshape(p.shape[0], p.shape[1], -1)
        _check_pmf(flat, "channel")
        object.__setattr__(self, "p", _frozen(p))

    @property
    def sizes(self) -> dict:
        return dict(zip(AXES, self.p.shape))

    @property
    def x1(self):
        return self.p.shape[0]

    @property
    def x2(self):
        return self.p.shape[1]

    @property
    def y1(self):
        return self.p.shape[2]

    @property
    def y2(self):
        return self.p.shape[3]

    @property
    def z(self):
        return self.p.shape[4]

    def marginal(self, *outputs: str) -> np.ndarray:
        """Conditional law of the named outputs given ``(x1, x2)``.

        ``ch.marginal("y1")`` has shape ``(|X1|, |X2|, |Y1|)``; several names
        keep their relative order, e.g. ``ch.marginal("y1", "z")``.
        """
        keep = [AXES.index(o) for o in outputs]
        if any(k < 2 for k in keep):
            raise KeyError("only output coordinates y1, y2, z can be kept")
        drop = tuple(k for k in (2, 3, 4) if k not in keep)
        m = self.p.sum(axis=drop)
        order = sorted(keep)
        perm = [0, 1] + [2 + order.index(k) for k in keep]
        return np.transpose(m, perm)

    def __eq__(self, other):
        return isinstance(other, Channel) and self.p.shape == other.p.shape and np.array_equal(self.p, other.p)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class InputDistribution:
    """Product-form input law ``P(v1) P(x1|v1) P(v2) P(x2|v2)``."""

    pV1: np.ndarray
    pX1givenV1: np.ndarray
    pV2: np.ndarray
    pX2givenV2: np.ndarray

    def __post_init__(self):
        for name in ("pV1", "pV2"):
            v = np.asarray(getattr(self, name), dtype=float)
            if v.ndim != 1:
                raise DimensionError(f"{name} must be a vector")
            _check_pmf(v, name)
            object.__setattr__(self, name, _frozen(v))
        for name, pv in (("pX1givenV1", self.pV1), ("pX2givenV2", self.pV2)):
            m = np.asarray(getattr(self, name), dtype=float)
            if m.ndim != 2 or m.shape[0] != pv.shape[0]:
                raise DimensionError(f"{name} must have shape (|V|, |X|)")
            _check_pmf(m, name)
            object.__setattr__(self, name, _frozen(m))

    @classmethod
    def identity(cls, pX1, pX2) -> "InputDistribution":
        """``V_i = X_i`` with the given input marginals."""
        pX1 = np.asarray(pX1, dtype=float)
        pX2 = np.asarray(pX2, dtype=float)
        return cls(pX1, np.eye(len(pX1)), pX2, np.eye(len(pX2)))

    @classmethod
    def uniform_identity(cls, ch: Channel) -> "InputDistribution":
        return cls.identity(np.full(ch.x1, 1 / ch.x1), np.full(ch.x2, 1 / ch.x2))

    @property
    def pX1(self):
        return self.pV1 @ self.pX1givenV1

    @property
    def pX2(self):
        return self.pV2 @ self.pX2givenV2

    def check_against(self, ch: Channel):
        if self.pX1givenV1.shape[1] != ch.x1 or self.pX2givenV2.shape[1] != ch.x2:
            raise DimensionError(
                f"distribution inputs {self.pX1givenV1.shape[1]}x{self.pX2givenV2.shape[1]} "
                f"do not match channel inputs {ch.x1}x{ch.x2}"
            )


def joint_pmf(ch: Channel, d: InputDistribution) -> np.ndarray:
    """Joint pmf over ``(V1, V2, X1, X2, Y1, Y2, Z)``."""
    d.check_against(ch)
    a1 = d.pV1[:, None] * d.pX1givenV1
    a2 = d.pV2[:, None] * d.pX2givenV2
    return np.einsum("ac,bd,cdefg->abcdefg", a1, a2, ch.p)


def prefix_channel(ch: Channel, d: InputDistribution, augment: bool = False) -> Channel:
    """Effective channel seen from the auxiliary inputs ``(v1, v2)``.

    With ``augment=True`` each user's output becomes the pair
    ``(x_i, y_i)`` encoded as ``x_i * |Y_i| + y_i``, so the sampled input
    remains available to that user's decoder as side information.
    """
    d.check_against(ch)
    if not augment:
        p = np.einsum("ac,bd,cdefg->abefg", d.pX1givenV1, d.pX2givenV2, ch.p)
        return Channel(p)
    # p[v1, v2, x1, y1, x2, y2, z]
    p = np.einsum("ac,bd,cdefg->abcedfg", d.pX1givenV1, d.pX2givenV2, ch.p)
    v1, v2 = p.shape[:2]
    p = p.reshape(v1, v2, ch.x1 * ch.y1, ch.x2 * ch.y2, ch.z)
    return Channel(p)


def is_conditionally_independent(ch: Channel, tol: float = 1e-9) -> bool:
    """True when ``p(y1,y2,z|x) = p(y1|x) p(y2|x) p(z|x)`` entrywise within ``tol``."""
    py1 = ch.marginal("y1")
    py2 = ch.marginal("y2")
    pz = ch.marginal("z")
    prod = py1[:, :, :, None, None] * py2[:, :, None, :, None] * pz[:, :, None, None, :]
    return bool(np.max(np.abs(prod - ch.p)) <= tol)


# ---------------------------------------------------------------------------
# document format


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _nested(a) -> str:
    if a.ndim == 1:
        return "[" + ", ".join(_fmt(v) for v in a) + "]"
    return "[" + ", ".join(_nested(sub) for sub in a) + "]"


def dumps_channel(ch: Channel) -> str:
    """Serialize to the JSON channel document (17 significant digits)."""
    head = {k: int(v) for k, v in ch.sizes.items()}
    parts = [f'  "{k}": {v}' for k, v in head.items()]
    if ch.labels:
        parts.append(f'  "labels": {json.dumps(ch.labels, sort_keys=True)}')
    parts.append(f'  "p": {_nested(ch.p)}')
    return "{\n" + ",\n".join(parts) + "\n}\n"


def loads_channel(text: str) -> Channel:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.lineno, exc.colno) from None
    if not isinstance(doc, dict):
        raise ParseError("channel document must be an object")
    return channel_from_dict(doc)


def channel_from_dict(doc: dict) -> Channel:
    missing = [k for k in (*AXES, "p") if k not in doc]
    if missing:
        raise ParseError(f"missing fields: {', '.join(missing)}")
    try:
        sizes = tuple(int(doc[k]) for k in AXES)
        p = np.asarray(doc["p"], dtype=float)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"bad channel field: {exc}") from None
    if any(s < 1 for s in sizes):
        raise DimensionError("alphabet sizes must be >= 1")
    if p.shape != sizes:
        raise DimensionError(f"declared sizes {sizes} do not match tensor shape {p.shape}")
    return Channel(p, labels=dict(doc.get("labels", {})))


def load_channel(path) -> Channel:
    return loads_channel(Path(path).read_text())


def save_channel(ch: Channel, path) -> None:
    Path(path).write_text(dumps_channel(ch))


def dist_from_dict(doc: dict) -> InputDistribution:
    try:
        return InputDistribution(
            np.asarray(doc["pV1"], dtype=float),
            np.asarray(doc["pX1givenV1"], dtype=float),
            np.asarray(doc["pV2"], dtype=float),
            np.asarray(doc["pX2givenV2"], dtype=float),
        )
    except KeyError as exc:
        raise ParseError(f"missing distribution field {exc}") from None


def load_distribution(path) -> InputDistribution:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.lineno, exc.colno) from None
    return dist_from_dict(doc)


def dist_to_dict(d: InputDistribution) -> dict:
    return {
        "pV1": d.pV1.tolist(),
        "pX1givenV1": d.pX1givenV1.tolist(),
        "pV2": d.pV2.tolist(),
        "pX2givenV2": d.pX2givenV2.tolist(),
    }


# ---------------------------------------------------------------------------
# small constructors used by tests, the CLI and the additive module


def from_function(sizes, fn) -> Channel:
    """Build a channel from ``fn(x1, x2) -> array[y1, y2, z]``."""
    x1, x2, y1, y2, z = sizes
    p = np.zeros(sizes)
    for a in range(x1):
        for b in range(x2):
            p[a, b] = fn(a, b)
    return Channel(p)


def noiseless_exchange(q: int = 2) -> Channel:
    """``y1 = x2``, ``y2 = x1`` and a constant eavesdropper output."""

    def row(a, b):
        out = np.zeros((q, q, 1))
        out[b, a, 0] = 1.0
        return out

    return from_function((q, q, q, q, 1), row)


def random_channel(rng, sizes=(2, 2, 2, 2, 2), concentration=1.0) -> Channel:
    x1, x2, y1, y2, z = sizes
    p = rng.dirichlet(np.full(y1 * y2 * z, concentration), size=(x1, x2))
    return Channel(p.reshape(sizes))


def random_distribution(rng, ch: Channel, v1=None, v2=None) -> InputDistribution:
    v1 = ch.x1 if v1 is None else v1
    v2 = ch.x2 if v2 is None else v2
    return InputDistribution(
        rng.dirichlet(np.ones(v1)),
        rng.dirichlet(np.ones(ch.x1), size=v1),
        rng.dirichlet(np.ones(v2)),
        rng.dirichlet(np.ones(ch.x2), size=v2),
    )
