import itertools
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from twwc.errors import DegenerateSupport, ParseError, UnknownCoordinate
from twwc.info import (
    JointPmf,
    cond_mutual_information,
    cond_renyi_mi_down,
    minimizer_q,
    mutual_information,
    renyi_divergence,
    renyi_mi_up,
    renyi_objective,
    shannon_quantities,
)


def h(p):
    return -p * math.log(p) - (1 - p) * math.log(1 - p)


def bsc_joint(eps, px=(0.5, 0.5)):
    """p[z, x] for Z = X xor N."""
    return np.array([[px[0] * (1 - eps), px[1] * eps], [px[0] * eps, px[1] * (1 - eps)]])


def random_joint(seed, shape):
    rng = np.random.default_rng(seed)
    return rng.dirichlet(np.ones(int(np.prod(shape)))).reshape(shape)


def down_oracle(pzxy, s):
    """Loop evaluation of the conditional down measure."""
    nz, nx, ny = pzxy.shape
    total = 0.0
    for y in range(ny):
        py = pzxy[:, :, y].sum()
        if py == 0:
            continue
        inner_sum = 0.0
        for z in range(nz):
            acc = 0.0
            for x in range(nx):
                pxy = pzxy[:, x, y].sum()
                if pxy == 0:
                    continue
                acc += (pxy / py) * (pzxy[z, x, y] / pxy) ** (1 / (1 + s))
            inner_sum += acc ** (1 + s)
        total += py * inner_sum
    return -math.log(total) / s


# ---------------------------------------------------------------------------
# Shannon


def test_uniform_binary_entropy():
    p = JointPmf(np.array([0.5, 0.5]), ("X",))
    assert shannon_quantities(p, "H(X)") == pytest.approx(math.log(2), abs=1e-15)


def test_bsc_mutual_information():
    p = JointPmf(bsc_joint(0.1), ("Z", "X"))
    assert shannon_quantities(p, "I(Z;X)") == pytest.approx(math.log(2) - h(0.1), abs=1e-14)
    assert math.log(2) - h(0.1) == pytest.approx(0.368064, abs=1e-6)


def test_independent_mi_zero():
    p = JointPmf(np.outer([0.3, 0.7], [0.2, 0.5, 0.3]), ("Z", "X"))
    assert abs(p.I(("Z",), ("X",))) < 1e-15


def test_query_linear_combination():
    pj = random_joint(0, (2, 3, 2))
    p = JointPmf(pj, ("Z", "X", "Y"))
    val = shannon_quantities(p, "I(Z;X|Y) - 2*H(Z) + 1/2 I(X,Y;Z)")
    expect = cond_mutual_information(pj) - 2 * p.H(("Z",)) + 0.5 * mutual_information(pj.reshape(2, 6))
    assert val == pytest.approx(expect, abs=1e-12)


def test_unknown_coordinate():
    p = JointPmf(bsc_joint(0.1), ("Z", "X"))
    with pytest.raises(UnknownCoordinate):
        shannon_quantities(p, "I(Z;W)")
    with pytest.raises(ParseError):
        shannon_quantities(p, "I(Z X)")


def test_zero_log_zero():
    p = JointPmf(np.array([[0.5, 0.0], [0.0, 0.5]]), ("Z", "X"))
    assert p.I(("Z",), ("X",)) == pytest.approx(math.log(2))


# ---------------------------------------------------------------------------
# Renyi up


@pytest.mark.parametrize("s", [0.1, 0.5, 1.0])
def test_up_independent_is_zero(s):
    assert abs(renyi_mi_up(np.outer([0.3, 0.7], [0.6, 0.4]), s)) < 1e-14


def test_up_at_one_matches_extended_precision():
    pj = bsc_joint(0.1)
    with mpmath.workdps(40):
        pz, px = pj.sum(1), pj.sum(0)
        acc = mpmath.fsum(mpmath.mpf(pj[z, x]) ** 2 / (mpmath.mpf(pz[z]) * px[x]) for z in range(2) for x in range(2))
        oracle = float(mpmath.log(acc))
    assert renyi_mi_up(pj, 1.0) == pytest.approx(oracle, abs=1e-14)


@pytest.mark.parametrize("seed", range(5))
def test_up_monotone_sample(seed):
    pj = random_joint(seed, (3, 3))
    assert renyi_mi_up(pj, 0.25) <= renyi_mi_up(pj, 0.75)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 4), st.integers(2, 4))
def test_up_nondecreasing_on_grid(seed, nz, nx):
    pj = random_joint(seed, (nz, nx))
    vals = [renyi_mi_up(pj, s / 10) for s in range(1, 11)]
    assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_up_small_s_limit(seed):
    pj = random_joint(seed, (3, 2))
    assert abs(renyi_mi_up(pj, 1e-4) - mutual_information(pj)) <= 1e-3


def test_divergence_rejects_support_gap():
    with pytest.raises(DegenerateSupport):
        renyi_divergence([0.5, 0.5], [1.0, 0.0], 0.5)


@pytest.mark.parametrize("s", [0.0, -0.1, 1.5])
def test_order_out_of_range(s):
    with pytest.raises(ValueError):
        renyi_mi_up(bsc_joint(0.1), s)


# ---------------------------------------------------------------------------
# Renyi down (conditional)


@pytest.mark.parametrize("seed", range(4))
@pytest.mark.parametrize("s", [0.05, 0.5, 1.0])
def test_down_matches_loop_oracle(seed, s):
    pj = random_joint(seed, (2, 3, 2))
    assert cond_renyi_mi_down(pj, s) == pytest.approx(down_oracle(pj, s), abs=1e-12)


def test_down_conditionally_independent_is_zero():
    rng = np.random.default_rng(11)
    pxy = rng.dirichlet(np.ones(6)).reshape(3, 2)
    pz_y = rng.dirichlet(np.ones(2), size=2).T  # [z, y]
    pj = pz_y[:, None, :] * pxy[None, :, :]
    assert abs(cond_renyi_mi_down(pj, 0.7)) < 1e-14


@pytest.mark.parametrize("s", [0.2, 0.9])
def test_down_product_inputs_equals_unconditional(s):
    rng = np.random.default_rng(12)
    px = rng.dirichlet(np.ones(3))
    py = rng.dirichlet(np.ones(2))
    pz_xy = rng.dirichlet(np.ones(2), size=(3, 2))  # [x, y, z]
    pj = np.einsum("x,y,xyz->zxy", px, py, pz_xy)
    # unconditional down measure of the pair (Z, Y) against X
    total = 0.0
    for z, y in itertools.product(range(2), range(2)):
        inner = sum(px[x] * (py[y] * pz_xy[x, y, z]) ** (1 / (1 + s)) for x in range(3))
        total += inner ** (1 + s)
    assert cond_renyi_mi_down(pj, s) == pytest.approx(-math.log(total) / s, abs=1e-12)


def test_down_small_s_limit_bsc():
    pj = np.einsum("zx,y->zxy", bsc_joint(0.1), [0.4, 0.6])
    assert abs(cond_renyi_mi_down(pj, 1e-4) - cond_mutual_information(pj)) <= 1e-3


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.01, 1.0))
def test_down_nonnegative(seed, s):
    assert cond_renyi_mi_down(random_joint(seed, (2, 2, 3)), s) >= -1e-12


def test_down_skips_empty_conditioning():
    pj = random_joint(13, (2, 2, 3))
    pj[:, :, 2] = 0
    pj /= pj.sum()
    assert cond_renyi_mi_down(pj, 0.5) == pytest.approx(cond_renyi_mi_down(pj[:, :, :2] / pj[:, :, :2].sum(), 0.5))


# ---------------------------------------------------------------------------
# minimizers


@pytest.mark.parametrize("seed", range(4))
def test_minimizer_reproduces_down(seed):
    pj = random_joint(seed, (3, 2, 2))
    for s in (0.1, 0.6, 1.0):
        q = minimizer_q(pj, s)
        assert renyi_objective(pj, q, s) == pytest.approx(cond_renyi_mi_down(pj, s), abs=1e-10)


def test_minimizer_small_s_is_true_conditional():
    pj = random_joint(5, (3, 2, 2))
    pzy = pj.sum(1)
    np.testing.assert_allclose(minimizer_q(pj, 1e-5).sum(0), 1.0)
    assert np.abs(minimizer_q(pj, 1e-5) - pzy / pzy.sum(0)).sum() <= 1e-3


@pytest.mark.parametrize("mode", ["conditional", "joint"])
def test_minimizer_beats_random_alternatives(mode):
    rng = np.random.default_rng(21)
    pj = random_joint(21, (2, 2, 2))
    s = 0.4
    best = renyi_objective(pj, minimizer_q(pj, s, mode), s, mode)
    for _ in range(200):
        if mode == "conditional":
            alt = rng.dirichlet(np.ones(2), size=2).T
        else:
            alt = rng.dirichlet(np.ones(4)).reshape(2, 2)
        assert best <= renyi_objective(pj, alt, s, mode) + 1e-12


def test_minimizer_deterministic_function():
    # Z = X mod 2 with X on three symbols, independent of Y
    px = np.array([0.5, 0.3, 0.2])
    py = np.array([0.6, 0.4])
    pj = np.zeros((2, 3, 2))
    for x in range(3):
        pj[x % 2, x, :] = px[x] * py
    s = 0.5
    # each z collects the inputs mapped to it; the tilt of a point mass is the mass itself
    direct = np.array([(px[0] + px[2]) ** (1 + s), px[1] ** (1 + s)])
    direct /= direct.sum()
    q = minimizer_q(pj, s)
    for y in range(2):
        np.testing.assert_allclose(q[:, y], direct, atol=1e-14)


def test_minimizer_unknown_mode():
    with pytest.raises(ValueError):
        minimizer_q(random_joint(0, (2, 2, 2)), 0.5, "other")
