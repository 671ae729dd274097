"""Desk-scale simulation of the random codes: one-round and key-exchange.

Codewords are rows of explicit integer tables. Messages, randomisation
indices, keys and one-time-pad ciphertexts are plain integers; the
composite codeword index of a user is ``m * L + l``.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .channel import Channel, InputDistribution
from .errors import BudgetExceeded, SplitInfeasible
from .exponents import effective_rate
from .info import mutual_information
from .kernels import ml_decode, z_likelihoods

DEFAULT_BUDGET = 10**7
CHUNK = 1000  # trials per independently seeded chunk
Z95 = 1.959963984540054


@dataclass(frozen=True)
class CodeParams:
    n: int
    M1: int
    L1: int
    M2: int
    L2: int
    seed: int = 0

    def __post_init__(self):
        if self.n < 1 or min(self.M1, self.L1, self.M2, self.L2) < 1:
            raise ValueError("blocklength and all message-set sizes must be positive")


@dataclass(frozen=True, eq=False)
class Codebook:
    """``cb1[m * L1 + l]`` is user 1's codeword for message ``m`` and index ``l``."""

    params: CodeParams
    cb1: np.ndarray
    cb2: np.ndarray

    def codeword(self, user: int, m: int, l: int) -> np.ndarray:
        if user == 1:
            return self.cb1[m * self.params.L1 + l]
        return self.cb2[m * self.params.L2 + l]

    def table(self, user: int) -> np.ndarray:
        """View as ``[m, l, t]``."""
        p = self.params
        return (self.cb1.reshape(p.M1, p.L1, p.n) if user == 1 else self.cb2.reshape(p.M2, p.L2, p.n))


def build_code(ch: Channel, d: InputDistribution, p: CodeParams) -> Codebook:
    """Draw every codeword symbol i.i.d. from ``P_V``; deterministic in ``p.seed``."""
    d.check_against(ch)
    rng = np.random.default_rng(p.seed)
    cb1 = rng.choice(len(d.pV1), size=(p.M1 * p.L1, p.n), p=d.pV1).astype(np.int64)
    cb2 = rng.choice(len(d.pV2), size=(p.M2 * p.L2, p.n), p=d.pV2).astype(np.int64)
    cb1.setflags(write=False)
    cb2.setflags(write=False)
    return Codebook(p, cb1, cb2)


def wilson_interval(errors: int, trials: int, z: float = Z95):
    """Wilson score interval ``(low, high, halfwidth)`` for a binomial rate."""
    if trials <= 0:
        return 0.0, 1.0, 0.5
    p = errors / trials
    den = 1 + z * z / trials
    centre = (p + z * z / (2 * trials)) / den
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / den
    return max(0.0, centre - half), min(1.0, centre + half), half


@dataclass
class SimulationReport:
    trials: int
    errors: int
    error_estimate: float
    ci95_halfwidth: float
    ci95_low: float
    ci95_high: float
    seed: int
    exact_leakage_nats: float | None = None
    bound_comparison: dict | None = None
    extra: dict = field(default_factory=dict)

    @classmethod
    def from_counts(cls, errors, trials, seed, **kw):
        lo, hi, half = wilson_interval(errors, trials)
        return cls(trials, errors, errors / trials if trials else 0.0, half, lo, hi, seed, **kw)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["units"] = "nats"
        return d


# ---------------------------------------------------------------------------
# channel pieces seen by the decoders and the eavesdropper


def decoder_logw(ch: Channel, d: InputDistribution):
    """``(logW1, logW2)`` with ``W2[x2, v1, y2] = sum_x1 P(x1|v1) P(y2|x1, x2)``
    and symmetrically ``W1[x1, v2, y1]``."""
    py2 = ch.marginal("y2")  # [x1, x2, y2]
    py1 = ch.marginal("y1")
    w2 = np.einsum("vx,xay->avy", d.pX1givenV1, py2)
    w1 = np.einsum("vb,aby->avy", d.pX2givenV2, py1)
    with np.errstate(divide="ignore"):
        return np.log(w1), np.log(w2)


def eavesdropper_law(ch: Channel, d: InputDistribution) -> np.ndarray:
    """``W_Z[v1, v2, z]`` with the channel inputs marginalised out."""
    return np.einsum("ac,bd,cdz->abz", d.pX1givenV1, d.pX2givenV2, ch.marginal("z"))


def _sample_rows(rng, cdf, rows):
    """One categorical draw per entry of ``rows`` from the laws ``cdf[rows]``."""
    u = rng.random(rows.shape)
    out = (u[..., None] >= cdf[rows]).sum(-1)
    return np.minimum(out, cdf.shape[-1] - 1)


def transmit(ch: Channel, d: InputDistribution, v1, v2, rng):
    """Stochastic prefix then one channel use per letter. Returns x1, x2, y1, y2, z."""
    x1 = _sample_rows(rng, np.cumsum(d.pX1givenV1, axis=1), v1)
    x2 = _sample_rows(rng, np.cumsum(d.pX2givenV2, axis=1), v2)
    flat = ch.p.reshape(ch.x1, ch.x2, -1)
    cdf = np.cumsum(flat, axis=-1)
    u = rng.random(x1.shape)
    out = (u[..., None] >= cdf[x1, x2]).sum(-1)
    out = np.minimum(out, flat.shape[-1] - 1)
    y1, y2, z = np.unravel_index(out, (ch.y1, ch.y2, ch.z))
    return x1, x2, y1, y2, z


def _spawn(seed, trials):
    """Fixed chunking so results do not depend on the worker count."""
    sizes = [CHUNK] * (trials // CHUNK) + ([trials % CHUNK] if trials % CHUNK else [])
    seqs = np.random.SeedSequence(seed).spawn(len(sizes))
    return list(zip(sizes, seqs))


def _map(fn, jobs, workers):
    if workers and workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(fn, jobs))
    return [fn(j) for j in jobs]


def _nonadaptive_chunk(job):
    ch, d, cb, size, seq = job
    rng = np.random.default_rng(seq)
    lw1, lw2 = decoder_logw(ch, d)
    idx1 = rng.integers(0, cb.cb1.shape[0], size)
    idx2 = rng.integers(0, cb.cb2.shape[0], size)
    x1, x2, y1, y2, _ = transmit(ch, d, cb.cb1[idx1], cb.cb2[idx2], rng)
    hat1 = ml_decode(lw2, cb.cb1, x2, y2)  # user 2 decodes user 1
    hat2 = ml_decode(lw1, cb.cb2, x1, y1)
    return int(np.count_nonzero((hat1 != idx1) | (hat2 != idx2)))


def simulate_nonadaptive(ch: Channel, d: InputDistribution, cb: Codebook, trials: int, seed: int = 0,
                         workers: int = 1) -> SimulationReport:
    """Monte Carlo error rate of the one-round code under ML decoding.

    A trial fails if either user decodes the wrong ``(m, l)`` pair.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    jobs = [(ch, d, cb, size, seq) for size, seq in _spawn(seed, trials)]
    errors = sum(_map(_nonadaptive_chunk, jobs, workers))
    return SimulationReport.from_counts(errors, trials, seed)


# ---------------------------------------------------------------------------
# exact leakage

_COMPONENTS = ("m1", "l1", "m2", "l2")


def _mi_of(joint, secret_axes):
    """``I(S; Z)`` for ``joint[..., z]`` with ``secret_axes`` among the leading axes."""
    lead = joint.ndim - 1
    drop = tuple(a for a in range(lead) if a not in secret_axes)
    m = joint.sum(axis=drop) if drop else joint
    return max(0.0, mutual_information(m.reshape(-1, m.shape[-1])))


def exact_leakage(ch: Channel, d: InputDistribution, cb: Codebook, secret=("m1", "m2"),
                  budget: int = DEFAULT_BUDGET) -> float:
    """``I(secret; Z^n)`` in nats for a fixed codebook, by enumerating ``Z^n``.

    ``secret`` is a subset of ``("m1", "l1", "m2", "l2")``; all indices are
    uniform and independent.
    """
    bad = [s for s in secret if s not in _COMPONENTS]
    if bad:
        raise ValueError(f"unknown secret component(s) {bad}")
    p = cb.params
    terms = ch.z ** p.n * p.M1 * p.L1 * p.M2 * p.L2
    if terms > budget:
        raise BudgetExceeded(f"enumeration needs {terms} terms, budget is {budget}")
    pz = z_likelihoods(eavesdropper_law(ch, d), cb.cb1, cb.cb2, ch.z)
    joint = pz.reshape(p.M1, p.L1, p.M2, p.L2, -1) / (p.M1 * p.L1 * p.M2 * p.L2)
    return _mi_of(joint, [_COMPONENTS.index(s) for s in secret])


def otp_leakage(modulus: int, p_msg=None) -> float:
    """Exact ``I(M; M + K mod q)`` for a uniform key ``K``; zero up to rounding."""
    p_msg = np.full(modulus, 1 / modulus) if p_msg is None else np.asarray(p_msg, dtype=float)
    joint = np.zeros((modulus, modulus))
    for m in range(modulus):
        for k in range(modulus):
            joint[m, (m + k) % modulus] += p_msg[m] / modulus
    return mutual_information(joint)


# ---------------------------------------------------------------------------
# key-exchange sessions


@dataclass(frozen=True)
class UserSplit:
    """Integer message-space sizes: secret, key, encrypted, open."""

    Ms: int
    Mk: int
    Me: int
    Mo: int

    @property
    def main(self):
        return self.Ms * self.Mk

    @property
    def rand(self):
        return self.Me * self.Mo

    def index(self, s, k, e, o):
        return (s * self.Mk + k) * self.rand + e * self.Mo + o

    def unpack(self, idx):
        main, rnd = np.divmod(idx, self.rand)
        s, k = np.divmod(main, self.Mk)
        e, o = np.divmod(rnd, self.Mo)
        return s, k, e, o


@dataclass(frozen=True)
class AdaptiveSession:
    t: int
    user1: UserSplit
    user2: UserSplit

    def __post_init__(self):
        if self.t < 1:
            raise ValueError("need at least one round")
        for u in (self.user1, self.user2):
            if min(u.Ms, u.Mk, u.Me, u.Mo) < 1:
                raise SplitInfeasible("all message-space sizes must be positive")
        if self.user1.Me > self.user2.Mk or self.user2.Me > self.user1.Mk:
            raise SplitInfeasible(
                f"encrypted space exceeds the peer's key space "
                f"(Me1={self.user1.Me}, Mk2={self.user2.Mk}, Me2={self.user2.Me}, Mk1={self.user1.Mk})"
            )

    def code_params(self, n: int, seed: int) -> CodeParams:
        return CodeParams(n, self.user1.main, self.user1.rand, self.user2.main, self.user2.rand, seed)

    def rates(self, n: int) -> dict:
        """Per-use rates in nats, with the overall rate of the session."""
        out = {}
        for i, u in ((1, self.user1), (2, self.user2)):
            rs, re = math.log(u.Ms) / n, math.log(u.Me) / n
            out[f"R{i}s"], out[f"R{i}k"], out[f"R{i}e"], out[f"R{i}o"] = rs, math.log(u.Mk) / n, re, math.log(u.Mo) / n
            out[f"R{i}"] = rs + re
            out[f"effective_rate_{i}"] = effective_rate(self.t, rs, rs + re)
            # round 1 carries a fixed message
            out[f"delivered_rate_{i}"] = (self.t - 1) * (rs + re) / self.t
        return out

    def rate_split(self, n: int):
        from .exponents import RateSplit

        r = self.rates(n)
        return RateSplit(*(r[k] for k in ("R1s", "R1k", "R1e", "R1o", "R2s", "R2k", "R2e", "R2o")))


def _adaptive_chunk(job):
    ch, d, cb, sess, size, seq = job
    rng = np.random.default_rng(seq)
    lw1, lw2 = decoder_logw(ch, d)
    u = {1: sess.user1, 2: sess.user2}
    failed = np.zeros(size, dtype=bool)
    true_key = {}  # own key from the previous round
    est_key = {}  # peer's key as decoded in the previous round
    key_mismatch = 0
    for r in range(1, sess.t + 1):
        parts, idx = {}, {}
        for i in (1, 2):
            s = rng.integers(0, u[i].Ms, size)
            k = rng.integers(0, u[i].Mk, size)
            e = rng.integers(0, u[i].Me, size)
            o = rng.integers(0, u[i].Mo, size)
            if r == 1:
                s = np.zeros(size, dtype=np.int64)
                e = np.zeros(size, dtype=np.int64)
                cipher = e
            else:
                cipher = (e + est_key[i]) % u[i].Me  # encrypt with the decoded peer key
            parts[i] = (s, k, e, o)
            idx[i] = u[i].index(s, k, cipher, o)
        x1, x2, y1, y2, _ = transmit(ch, d, cb.cb1[idx[1]], cb.cb2[idx[2]], rng)
        hat = {1: ml_decode(lw2, cb.cb1, x2, y2), 2: ml_decode(lw1, cb.cb2, x1, y1)}
        new_true, new_est = {}, {}
        for i in (1, 2):
            j = 3 - i
            s, k, e, o = parts[i]
            hs, hk, hc, ho = u[i].unpack(hat[i])
            bad = (hs != s) | (hk != k) | (ho != o)
            if r > 1:
                # the receiver decrypts with its own previous key
                he = (hc - true_key[j]) % u[i].Me
                bad |= he != e
            failed |= bad
            new_true[i] = k
            new_est[j] = hk  # user j now holds an estimate of user i's key
            if r < sess.t:
                key_mismatch += int(np.count_nonzero(hk != k))
        true_key, est_key = new_true, new_est
    return int(np.count_nonzero(failed)), key_mismatch


def run_adaptive_session(ch: Channel, d: InputDistribution, cb: Codebook, session: AdaptiveSession,
                         trials: int, seed: int = 0, workers: int = 1) -> SimulationReport:
    """Run ``session.t`` rounds of the key-exchange code, ``trials`` times.

    A session fails if any component of any round is decoded wrongly,
    including the decrypted message part.
    """
    p = cb.params
    if (p.M1, p.L1, p.M2, p.L2) != (session.user1.main, session.user1.rand, session.user2.main, session.user2.rand):
        raise SplitInfeasible("codebook sizes do not match the session's index spaces")
    jobs = [(ch, d, cb, session, size, seq) for size, seq in _spawn(seed, trials)]
    res = _map(_adaptive_chunk, jobs, workers)
    errors = sum(r[0] for r in res)
    rep = SimulationReport.from_counts(errors, trials, seed)
    rep.extra = dict(session.rates(p.n), rounds=session.t, key_mismatches=sum(r[1] for r in res))
    return rep


@dataclass
class AdaptiveLeakage:
    joint: float
    user1: float
    user2: float
    per_round_bound: float
    per_round: list

    def to_dict(self):
        d = asdict(self)
        d["units"] = "nats"
        return d


def adaptive_exact_leakage(ch: Channel, d: InputDistribution, cb: Codebook, session: AdaptiveSession,
                           budget: int = DEFAULT_BUDGET) -> AdaptiveLeakage:
    """Exact leakage of a session with ``t <= 2`` rounds over the whole transcript.

    Encryption uses the true peer key, the setting of the secrecy analysis.
    The messages are the round-two ``(s, e)`` pairs (round one carries a
    fixed message). Also returns the per-round upper bound
    ``sum_r I(main indices of round r; Z^n of round r)``.
    """
    if session.t > 2:
        raise BudgetExceeded("exact transcript enumeration is limited to two rounds")
    u1, u2 = session.user1, session.user2
    n = cb.params.n
    nzn = ch.z ** n
    terms = nzn ** session.t * cb.cb1.shape[0] * cb.cb2.shape[0] * u1.Mk * u2.Mk
    if terms > budget:
        raise BudgetExceeded(f"enumeration needs {terms} terms, budget is {budget}")
    pz = z_likelihoods(eavesdropper_law(ch, d), cb.cb1, cb.cb2, ch.z)
    # [s1, k1, e1, o1, s2, k2, e2, o2, z]
    P = pz.reshape(u1.Ms, u1.Mk, u1.Me, u1.Mo, u2.Ms, u2.Mk, u2.Me, u2.Mo, nzn)

    # round 1: s = 0, ciphertext 0; A[k1, k2, z1]
    A = P[0, :, 0, :, 0, :, 0, :, :].mean(axis=(1, 3))
    per_round = [_mi_of(A / (u1.Mk * u2.Mk), [0, 1])]
    if session.t == 1:
        return AdaptiveLeakage(0.0, 0.0, 0.0, per_round[0], per_round)

    # round 2 with fresh keys/open parts averaged out; ciphertext c_i = e_i + key_j
    Q = P.mean(axis=(1, 3, 5, 7))  # [s1, c1, s2, c2, z]
    B = np.zeros((u1.Ms, u1.Me, u2.Ms, u2.Me, u1.Mk, u2.Mk, nzn))
    for e1 in range(u1.Me):
        for e2 in range(u2.Me):
            for k1 in range(u1.Mk):
                for k2 in range(u2.Mk):
                    B[:, e1, :, e2, k1, k2] = Q[:, (e1 + k2) % u1.Me, :, (e2 + k1) % u2.Me]
    # P(z1, z2 | m) averaged over the round-one keys
    joint = np.einsum("abz,pqrsabw->pqrszw", A, B) / (u1.Mk * u2.Mk)
    joint = joint.reshape(u1.Ms, u1.Me, u2.Ms, u2.Me, -1) / (u1.Ms * u1.Me * u2.Ms * u2.Me)
    m1 = _mi_of(joint, [0, 1])
    m2 = _mi_of(joint, [2, 3])
    mj = _mi_of(joint, [0, 1, 2, 3])
    # round 2 main indices (s, k) against Z^n with everything uniform
    R2 = P.reshape(u1.Ms * u1.Mk, u1.Me * u1.Mo, u2.Ms * u2.Mk, u2.Me * u2.Mo, nzn)
    R2 = R2.sum(axis=(1, 3)) / (R2.shape[0] * R2.shape[1] * R2.shape[2] * R2.shape[3])
    per_round.append(_mi_of(R2, [0, 1]))
    return AdaptiveLeakage(mj, m1, m2, float(sum(per_round)), per_round)
