"""Finite-blocklength error and leakage bounds for the two coding schemes.

All bounds are absolute numbers (probabilities or nats), obtained from
single-letter Rényi quantities of the input law and blocklength ``n``.
Rates are in nats per channel use. The free order ``s`` is chosen by grid
search in :func:`optimize_order`.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from functools import lru_cache

import numpy as np

from .channel import Channel, InputDistribution, joint_pmf
from .errors import EmptyGrid, SplitInfeasible
from .info import JointPmf, cond_renyi_mi_down, renyi_mi_up

EXP_CAP = 700.0


def default_grid():
    """0.01, 0.02, ..., 0.99 followed by 1.0."""
    return [round(k / 100, 2) for k in range(1, 100)] + [1.0]


@dataclass(frozen=True)
class NonAdaptiveRates:
    R1: float
    R2: float
    R1r: float
    R2r: float

    def __post_init__(self):
        if min(self.R1, self.R2, self.R1r, self.R2r) < 0:
            raise ValueError("rates must be nonnegative")


@dataclass(frozen=True)
class RateSplit:
    """Per-user split into secret, key, encrypted and open parts."""

    R1s: float
    R1k: float
    R1e: float
    R1o: float
    R2s: float
    R2k: float
    R2e: float
    R2o: float

    def __post_init__(self):
        if min(asdict(self).values()) < 0:
            raise SplitInfeasible("split rates must be nonnegative")
        if self.R1e > self.R2k + 1e-12 or self.R2e > self.R1k + 1e-12:
            raise SplitInfeasible(
                "encrypted rate exceeds the peer's key rate "
                f"(R1e={self.R1e}, R2k={self.R2k}, R2e={self.R2e}, R1k={self.R1k})"
            )

    @property
    def R1(self):
        return self.R1s + self.R1e

    @property
    def R2(self):
        return self.R2s + self.R2e

    @property
    def R1_tilde(self):
        return self.R1s + self.R1k

    @property
    def R2_tilde(self):
        return self.R2s + self.R2k

    @property
    def R1r_tilde(self):
        return self.R1o + self.R1e

    @property
    def R2r_tilde(self):
        return self.R2o + self.R2e


def effective_rate(t: int, R_s: float, R: float) -> float:
    """Overall per-use rate of a ``t``-round session, ``(R_s + (t-1) R) / t``."""
    return (R_s + (t - 1) * R) / t


@dataclass
class BoundReport:
    n: int
    t: int
    s_used: float
    error_bound: float
    joint_leak_bound: float
    ind_leak_bound_1: float
    ind_leak_bound_2: float
    # the individual-secrecy family carries factor 3 on the error term too
    error_bound_individual: float = float("nan")
    exponents: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = {k: v for k, v in asdict(self).items() if k != "exponents"}
        for k, v in self.exponents.items():
            d[f"exp_{k}"] = v
        return d


@dataclass(frozen=True)
class RenyiMeasures:
    down1: float  # I_down(Y2; V1 | X2)
    down2: float  # I_down(Y1; V2 | X1)
    up1: float  # I_up(Z; V1)
    up2: float  # I_up(Z; V2)
    up12: float  # I_up(Z; V1 V2)


def renyi_measures(ch: Channel, d: InputDistribution, s: float) -> RenyiMeasures:
    """Single-letter Rényi quantities entering both bound families."""
    return _renyi_measures_cached(_Key(ch, d), float(s))


class _Key:
    """Hashable wrapper so repeated s-grid sweeps reuse the joint pmf."""

    def __init__(self, ch, d):
        self.ch, self.d = ch, d
        self._h = hash((ch.p.tobytes(), d.pV1.tobytes(), d.pX1givenV1.tobytes(),
                        d.pV2.tobytes(), d.pX2givenV2.tobytes(), ch.p.shape,
                        d.pX1givenV1.shape, d.pX2givenV2.shape))

    def __hash__(self):
        return self._h

    def __eq__(self, other):
        return (self.ch == other.ch and all(
            np.array_equal(getattr(self.d, f), getattr(other.d, f))
            for f in ("pV1", "pX1givenV1", "pV2", "pX2givenV2")))


@lru_cache(maxsize=64)
def _joint(key):
    return JointPmf(joint_pmf(key.ch, key.d), ("V1", "V2", "X1", "X2", "Y1", "Y2", "Z"))


@lru_cache(maxsize=4096)
def _renyi_measures_cached(key, s):
    J = _joint(key)
    return RenyiMeasures(
        down1=cond_renyi_mi_down(J.flat(("Y2",), ("V1",), ("X2",)), s),
        down2=cond_renyi_mi_down(J.flat(("Y1",), ("V2",), ("X1",)), s),
        up1=renyi_mi_up(J.flat(("Z",), ("V1",)), s),
        up2=renyi_mi_up(J.flat(("Z",), ("V2",)), s),
        up12=renyi_mi_up(J.flat(("Z",), ("V1", "V2")), s),
    )


def _e(n, coeff):
    return math.exp(min(n * coeff, EXP_CAP))


def _bounds(m: RenyiMeasures, s, n, t, R1, R2, R1r, R2r, S1, S2):
    """Shared evaluation. ``S1``/``S2`` are the extra rates appearing in the
    individual bounds (the peer's message rate, or its secret-part rate)."""
    ex = {
        "err1": s * (R1 + R1r - m.down1),
        "err2": s * (R2 + R2r - m.down2),
        "leak_1": s * (m.up1 - R1r),
        "leak_2": s * (m.up2 - R2r),
        "leak_12": s * (m.up12 - R1r - R2r),
        "ind1_12": s * (m.up12 - (R1r + R2r + S2)),
        "ind1_1": s * (m.up1 - R1r),
        "ind1_2": s * (m.up2 - (R2r + S2)),
        "ind2_12": s * (m.up12 - (R1r + R2r + S1)),
        "ind2_2": s * (m.up2 - R2r),
        "ind2_1": s * (m.up1 - (R1r + S1)),
    }
    err = _e(n, ex["err1"]) + _e(n, ex["err2"])
    return BoundReport(
        n=n,
        t=t,
        s_used=s,
        error_bound=2 * t * err,
        joint_leak_bound=2 * t * (_e(n, ex["leak_1"]) + _e(n, ex["leak_2"]) + _e(n, ex["leak_12"])),
        ind_leak_bound_1=3 * t * (_e(n, ex["ind1_12"]) + _e(n, ex["ind1_1"]) + _e(n, ex["ind1_2"])),
        ind_leak_bound_2=3 * t * (_e(n, ex["ind2_12"]) + _e(n, ex["ind2_2"]) + _e(n, ex["ind2_1"])),
        error_bound_individual=3 * t * err,
        exponents=ex,
    )


def nonadaptive_bounds(ch: Channel, d: InputDistribution, rates: NonAdaptiveRates, n: int, s: float) -> BoundReport:
    """Error and leakage bounds for the single-round randomised code.

    ``error_bound`` and ``joint_leak_bound`` belong to the factor-2 code
    family; ``error_bound_individual`` and the two ``ind_leak_bound_*``
    belong to the factor-3 family.
    """
    if n < 1:
        raise ValueError("blocklength must be >= 1")
    m = renyi_measures(ch, d, s)
    return _bounds(m, s, n, 1, rates.R1, rates.R2, rates.R1r, rates.R2r, S1=rates.R1, S2=rates.R2)


def adaptive_bounds(ch: Channel, d: InputDistribution, split: RateSplit, n: int, t: int, s: float) -> BoundReport:
    """Bounds for ``t`` rounds of the key-exchange code.

    Each round is the non-adaptive code at the combined rates
    ``(R_s + R_k, R_o + R_e)``; all bounds scale linearly in ``t``.
    """
    if t < 1:
        raise ValueError("number of rounds must be >= 1")
    if n < 1:
        raise ValueError("blocklength must be >= 1")
    RateSplit(**asdict(split))  # re-validate
    m = renyi_measures(ch, d, s)
    return _bounds(
        m, s, n, t,
        split.R1_tilde, split.R2_tilde, split.R1r_tilde, split.R2r_tilde,
        S1=split.R1s, S2=split.R2s,
    )


def optimize_order(bound_fn, grid=None):
    """Grid minimiser of ``bound_fn(s)``; ties go to the smaller ``s``."""
    grid = default_grid() if grid is None else list(grid)
    if not grid:
        raise EmptyGrid("empty s-grid")
    if any(not (0 < s <= 1) for s in grid):
        raise ValueError("grid points must lie in (0, 1]")
    best_s, best_v = None, math.inf
    for s in sorted(grid):
        v = float(bound_fn(s))
        if v < best_v or best_s is None:
            best_s, best_v = s, v
    return best_s, best_v


def best_report(make_report, field_name: str, grid=None) -> BoundReport:
    """Report at the ``s`` minimising one field of ``make_report(s)``."""
    s_star, _ = optimize_order(lambda s: getattr(make_report(s), field_name), grid)
    return make_report(s_star)


def threshold_blocklength(make_report, fields=("error_bound", "joint_leak_bound", "ind_leak_bound_1",
                                               "ind_leak_bound_2"), n_max=100000, grid=None):
    """Smallest ``n`` at which every listed bound, optimised over ``s``, is below 1.

    ``make_report(n, s)`` builds a :class:`BoundReport`. Returns ``None`` if
    no such ``n <= n_max`` exists.
    """
    grid = default_grid() if grid is None else grid

    def ok(n):
        return all(optimize_order(lambda s: getattr(make_report(n, s), f), grid)[1] < 1 for f in fields)

    # bounds are eventually monotone in n once every exponent is negative
    lo, hi = 1, 1
    while not ok(hi):
        if hi >= n_max:
            return None
        lo, hi = hi, min(2 * hi, n_max)
    while lo < hi:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid + 1
    return hi
