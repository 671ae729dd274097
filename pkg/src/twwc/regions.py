"""Single-letter secrecy rate regions and their sampled unions.

Regions live in the nonnegative quadrant of ``(R1, R2)`` and are stored as
halfspaces ``a1 R1 + a2 R2 <= b`` together with their vertex list.

Four kinds are supported, named ``"<secrecy>-<coding>"`` with secrecy in
``{joint, individual}`` and coding in ``{adaptive, nonadaptive}``.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .channel import Channel, InputDistribution, random_distribution
from .errors import BudgetExceeded, InfeasibleBundle
from .info import JointPmf

TOL = 1e-9
KINDS = ("joint-adaptive", "individual-adaptive", "joint-nonadaptive", "individual-nonadaptive")


@dataclass(frozen=True)
class MeasureBundle:
    i_y2v1_x2: float
    i_y1v2_x1: float
    i_z_v1: float
    i_z_v2: float
    i_z_v1v2: float

    def as_tuple(self):
        return (self.i_y2v1_x2, self.i_y1v2_x1, self.i_z_v1, self.i_z_v2, self.i_z_v1v2)

    def swapped(self) -> "MeasureBundle":
        return MeasureBundle(self.i_y1v2_x1, self.i_y2v1_x2, self.i_z_v2, self.i_z_v1, self.i_z_v1v2)


@dataclass(frozen=True)
class RatePair:
    R1: float
    R2: float


@dataclass
class RateRegion:
    halfspaces: list  # (a1, a2, b)
    vertices: list  # RatePair
    flags: list = field(default_factory=list)

    def to_dict(self, bits=False) -> dict:
        scale = 1 / math.log(2) if bits else 1.0
        return {
            "units": "bits" if bits else "nats",
            "halfspaces": [{"a1": a1, "a2": a2, "b": b * scale} for a1, a2, b in self.halfspaces],
            "vertices": [[v.R1 * scale, v.R2 * scale] for v in self.vertices],
            "flags": list(self.flags),
        }

    def to_json(self, bits=False) -> str:
        return json.dumps(self.to_dict(bits), indent=2, sort_keys=True)

    def vertices_csv(self, bits=False) -> str:
        scale = 1 / math.log(2) if bits else 1.0
        lines = ["R1,R2"]
        lines += [f"{v.R1 * scale:.17g},{v.R2 * scale:.17g}" for v in self.vertices]
        return "\n".join(lines) + "\n"


def measure_bundle(ch: Channel, d: InputDistribution) -> MeasureBundle:
    """The five Shannon quantities from the joint of ``(V1, V2, X1, X2, Y1, Y2, Z)``."""
    from .channel import joint_pmf

    J = JointPmf(joint_pmf(ch, d), ("V1", "V2", "X1", "X2", "Y1", "Y2", "Z"))
    return MeasureBundle(
        i_y2v1_x2=J.I(("Y2",), ("V1",), ("X2",)),
        i_y1v2_x1=J.I(("Y1",), ("V2",), ("X1",)),
        i_z_v1=J.I(("Z",), ("V1",)),
        i_z_v2=J.I(("Z",), ("V2",)),
        i_z_v1v2=J.I(("Z",), ("V1", "V2")),
    )


def _raw_constraints(m: MeasureBundle, kind: str):
    """Inequalities (a1, a2, b) of the requested region, before clamping."""
    I1, I2, Z1, Z2, Z12 = m.as_tuple()
    S = I1 + I2 - Z12
    if kind == "joint-adaptive":
        return [(1, 0, I1), (0, 1, I2), (1, 1, S)]
    if kind == "joint-nonadaptive":
        return [(1, 0, I1 - Z1), (0, 1, I2 - Z2), (1, 1, S)]
    if kind == "individual-nonadaptive":
        return [(1, 0, I1 - Z1), (0, 1, I2 - Z2), (1, 0, S), (0, 1, S)]
    if kind == "individual-adaptive":
        return [(1, 0, I1), (0, 1, I2), (1, 0, S), (0, 1, S),
                (1, 1, min(I1 - Z1, S) + min(I2 - Z2, S))]
    raise ValueError(f"unknown region kind {kind!r}; expected one of {KINDS}")


def region_from_measures(m: MeasureBundle, kind: str) -> RateRegion:
    """Region of the given kind for one input law.

    The inequality systems behind every kind are feasible only when
    ``I(Y2;V1|X2) >= I(Z;V1)``, ``I(Y1;V2|X1) >= I(Z;V2)`` and the sum bound
    is nonnegative. When one of these fails the region collapses to the
    origin and carries the flag ``"rate-conditions-violated"``. Tiny negative
    bounds within tolerance are clamped to zero and flagged ``"clamped"``.
    """
    if min(m.as_tuple()) < -TOL:
        raise InfeasibleBundle(f"negative information measure in {m}")
    I1, I2, Z1, Z2, Z12 = m.as_tuple()
    flags = []
    cons = _raw_constraints(m, kind)
    if I1 - Z1 < -TOL or I2 - Z2 < -TOL or I1 + I2 - Z12 < -TOL:
        flags.append("rate-conditions-violated")
        cons = [(a1, a2, 0.0) for a1, a2, _ in cons]
    elif any(b < 0 for _, _, b in cons):
        flags.append("clamped")
        cons = [(a1, a2, max(b, 0.0)) for a1, a2, b in cons]
    cons = [(float(a1), float(a2), float(b)) for a1, a2, b in cons]
    return RateRegion(cons, polygon_vertices(cons), flags)


def polygon_vertices(halfspaces):
    """Vertices of ``{R >= 0} ∩ halfspaces`` in counter-clockwise order from the origin."""
    lines = list(halfspaces) + [(-1.0, 0.0, 0.0), (0.0, -1.0, 0.0)]
    pts = []
    for i in range(len(lines)):
        for j in range(i + 1, len(lines)):
            a1, a2, b = lines[i]
            c1, c2, e = lines[j]
            det = a1 * c2 - a2 * c1
            if abs(det) < 1e-15:
                continue
            x = (b * c2 - a2 * e) / det
            y = (a1 * e - b * c1) / det
            if all(p1 * x + p2 * y <= q + TOL for p1, p2, q in lines):
                pts.append((max(x, 0.0), max(y, 0.0)))
    hull = convex_hull(pts)
    return [RatePair(x, y) for x, y in hull]


def convex_hull(points):
    """Monotone-chain hull, counter-clockwise, starting at the lexicographic minimum."""
    # snap to a 1e-12 lattice: near-ties in x otherwise let the chain drop true corners
    pts = sorted(set((round(float(x), 12) + 0.0, round(float(y), 12) + 0.0) for x, y in points))
    if len(pts) <= 2:
        return pts

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower, upper = [], []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 1e-15:
            lower.pop()
        lower.append(p)
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 1e-15:
            upper.pop()
        upper.append(p)
    return lower[:-1] + upper[:-1]


def hull_region(points, flags=()) -> RateRegion:
    """Region spanned by a point cloud in the quadrant plus the origin."""
    pts = [(0.0, 0.0)] + [(max(x, 0.0), max(y, 0.0)) for x, y in points]
    # downward closure: axis projections of every point
    pts += [(x, 0.0) for x, _ in pts] + [(0.0, y) for _, y in pts]
    hull = convex_hull(pts)
    hs = []
    k = len(hull)
    if k >= 3:
        for i in range(k):
            (x0, y0), (x1, y1) = hull[i], hull[(i + 1) % k]
            a1, a2 = y1 - y0, x0 - x1
            # ccw orientation: interior is on the left, so outward normal is (dy, -dx)
            norm = math.hypot(a1, a2)
            a1, a2 = a1 / norm, a2 / norm
            hs.append((a1, a2, a1 * x0 + a2 * y0))
    else:
        xs = [p[0] for p in hull]
        ys = [p[1] for p in hull]
        hs = [(1.0, 0.0, max(xs)), (0.0, 1.0, max(ys)), (-1.0, 0.0, 0.0), (0.0, -1.0, 0.0)]
    return RateRegion(hs, [RatePair(x, y) for x, y in hull], list(flags))


def contains(r: RateRegion, p: RatePair, tol: float = TOL) -> bool:
    if p.R1 < -tol or p.R2 < -tol:
        return False
    return all(a1 * p.R1 + a2 * p.R2 <= b + tol for a1, a2, b in r.halfspaces)


def region_contains_region(outer: RateRegion, inner: RateRegion, tol: float = TOL) -> bool:
    """Every vertex of ``inner`` lies in ``outer`` (both are convex)."""
    return all(contains(outer, v, tol) for v in inner.vertices)


# ---------------------------------------------------------------------------
# union over input laws


@dataclass
class SearchConfig:
    mode: str = "random"  # "random" or "grid"
    samples: int = 200
    resolution: int = 8
    seed: int = 20240601
    v_extra: bool = False  # |V_i| = |X_i| + 1 instead of |X_i|
    refine_steps: int = 0
    max_samples: int = 100000


def _simplex_grid(k, res):
    if k == 1:
        yield np.array([1.0])
        return

    def rec(left, parts):
        if parts == 1:
            yield (left,)
            return
        for i in range(left + 1):
            for rest in rec(left - i, parts - 1):
                yield (i,) + rest

    for c in rec(res, k):
        yield np.array(c, dtype=float) / res


def _candidate_laws(ch: Channel, cfg: SearchConfig):
    if cfg.mode == "grid":
        g1 = list(_simplex_grid(ch.x1, cfg.resolution))
        g2 = list(_simplex_grid(ch.x2, cfg.resolution))
        if len(g1) * len(g2) > cfg.max_samples:
            raise BudgetExceeded(f"grid of {len(g1) * len(g2)} laws exceeds cap {cfg.max_samples}")
        for a in g1:
            for b in g2:
                yield InputDistribution.identity(a, b)
        return
    if cfg.mode != "random":
        raise ValueError(f"unknown search mode {cfg.mode!r}")
    if cfg.samples > cfg.max_samples:
        raise BudgetExceeded(f"{cfg.samples} samples exceed cap {cfg.max_samples}")
    rng = np.random.default_rng(cfg.seed)
    v1 = ch.x1 + (1 if cfg.v_extra else 0)
    v2 = ch.x2 + (1 if cfg.v_extra else 0)
    for _ in range(cfg.samples):
        yield random_distribution(rng, ch, v1, v2)


def _refine(ch, d, kind, weights, steps, rng):
    """Coordinate ascent on the weighted sum rate over region vertices."""

    def score(dist):
        reg = region_from_measures(measure_bundle(ch, dist), kind)
        return max(weights[0] * v.R1 + weights[1] * v.R2 for v in reg.vertices), reg

    best, best_reg = score(d)
    fields = ("pV1", "pX1givenV1", "pV2", "pX2givenV2")
    step = 0.3
    for _ in range(steps):
        improved = False
        for f in fields:
            arr = np.array(getattr(d, f))
            trial = np.abs(arr * np.exp(step * rng.standard_normal(arr.shape))) + 1e-12
            trial /= trial.sum(axis=-1, keepdims=True)
            cand = InputDistribution(**{**{g: getattr(d, g) for g in fields}, f: trial})
            val, reg = score(cand)
            if val > best:
                best, best_reg, d, improved = val, reg, cand, True
        if not improved:
            step *= 0.5
    return best_reg


def search_union(ch: Channel, kind: str, search: SearchConfig | None = None) -> RateRegion:
    """Sampled inner approximation of the closed convex hull of the union.

    Samples are drawn sequentially from one seeded stream, so a larger
    sample budget with the same seed yields a superset of the smaller one.
    """
    cfg = search or SearchConfig()
    pts = []
    flags = set()
    rng = np.random.default_rng([cfg.seed, 1])
    weight_dirs = [(1.0, 0.0), (0.0, 1.0), (1.0, 1.0), (1.0, 2.0), (2.0, 1.0)]
    for i, d in enumerate(_candidate_laws(ch, cfg)):
        reg = region_from_measures(measure_bundle(ch, d), kind)
        pts += [(v.R1, v.R2) for v in reg.vertices]
        if cfg.refine_steps:
            w = weight_dirs[i % len(weight_dirs)]
            reg2 = _refine(ch, d, kind, w, cfg.refine_steps, rng)
            pts += [(v.R1, v.R2) for v in reg2.vertices]
        flags.update(reg.flags)
    out = hull_region(pts)
    out.flags = sorted(flags)
    return out


def warn_flags(r: RateRegion):
    for f in r.flags:
        warnings.warn(f"region flag: {f}", stacklevel=2)
