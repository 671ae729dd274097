import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from twwc.channel import from_function, is_conditionally_independent, random_channel
from twwc.correlation import (
    AdditiveSpec,
    InnerCode,
    build_additive,
    closed_form_report,
    field_inverse,
    induced_virtual_mac,
    is_prime,
    masking_distribution,
    scaled_difference_pmf,
    secrecy_advantage,
    simulate_two_stage,
    swap_users,
    virtual_mac_difference,
)
from twwc.errors import AlphabetMismatch, NonPrimeField, ZeroCoefficient
from twwc.regions import measure_bundle


def h(p):
    return -p * math.log(p) - (1 - p) * math.log(1 - p)


def binary_spec(e1=0.1, e2=0.15, e3=0.2):
    return AdditiveSpec(2, (1, 1, 1), (1, 1, 1), [1 - e1, e1], [1 - e2, e2], [1 - e3, e3])


def random_spec(rng, q):
    a = tuple(int(v) for v in rng.integers(1, q, 3))
    b = tuple(int(v) for v in rng.integers(1, q, 3))
    noise = [rng.dirichlet(np.ones(q) * 0.7) for _ in range(3)]
    return AdditiveSpec(q, a, b, *noise)


def test_field_helpers():
    assert [k for k in range(12) if is_prime(k)] == [2, 3, 5, 7, 11]
    for q in (3, 5, 7):
        for a in range(1, q):
            assert a * field_inverse(a, q) % q == 1


def test_spec_validation():
    with pytest.raises(NonPrimeField):
        AdditiveSpec(4, (1, 1, 1), (1, 1, 1), [0.25] * 4, [0.25] * 4, [0.25] * 4)
    with pytest.raises(ZeroCoefficient):
        AdditiveSpec(3, (1, 3, 1), (1, 1, 1), [1 / 3] * 3, [1 / 3] * 3, [1 / 3] * 3)
    with pytest.raises(ValueError):
        AdditiveSpec(2, (1, 1, 1), (1, 1, 1), [0.5, 0.6], [0.5, 0.5], [0.5, 0.5])
    spec = random_spec(np.random.default_rng(0), 5)
    back = AdditiveSpec.from_dict(spec.to_dict())
    assert back.a == spec.a and np.array_equal(back.n3, spec.n3)


def test_additive_tensor_by_hand():
    spec = AdditiveSpec(3, (1, 2, 1), (2, 1, 1), [0.7, 0.2, 0.1], [0.6, 0.3, 0.1], [0.5, 0.3, 0.2])
    p = build_additive(spec).p
    x1, x2 = 2, 1
    y1, y2, z = (x1 + 2 * x2) % 3, (2 * x1 + x2) % 3, (x1 + x2) % 3
    assert p[x1, x2, y1, y2, z] == pytest.approx(0.7 * 0.6 * 0.5)
    assert p[x1, x2, (y1 + 1) % 3, y2, (z + 2) % 3] == pytest.approx(0.2 * 0.6 * 0.2)


def test_scaled_difference_binary():
    pa, pb = np.array([0.9, 0.1]), np.array([0.8, 0.2])
    np.testing.assert_allclose(scaled_difference_pmf(pa, pb, 1, 2), [0.74, 0.26])


def test_scaled_difference_by_sampling():
    rng = np.random.default_rng(1)
    pa, pb = rng.dirichlet(np.ones(5)), rng.dirichlet(np.ones(5))
    a = rng.choice(5, 200000, p=pa)
    b = rng.choice(5, 200000, p=pb)
    emp = np.bincount((a - 3 * b) % 5, minlength=5) / 200000
    np.testing.assert_allclose(scaled_difference_pmf(pa, pb, 3, 5), emp, atol=5e-3)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([2, 3, 5]))
def test_closed_forms_match_generic(seed, q):
    rep = closed_form_report(random_spec(np.random.default_rng(seed), q))
    assert rep.max_abs_gap() <= 1e-10
    assert rep.to_dict()["units"] == "nats"


def test_binary_advantage_value():
    adv = secrecy_advantage(build_additive(binary_spec(e3=0.2)), [0.5, 0.5], [0.5, 0.5])
    assert adv.adv1 == pytest.approx(h(0.26) - h(0.1), abs=1e-12)
    assert adv.adv1 == pytest.approx(0.247974, abs=1e-6)
    assert adv.adv2 == pytest.approx(h(0.15 * 0.8 + 0.85 * 0.2) - h(0.15), abs=1e-12)
    assert adv.to_csv().startswith("adv1,adv2")


def test_advantage_warns_without_independence():
    # Z copies Y1's noise: the eavesdropper learns as much as user 1
    def row(a, b):
        out = np.zeros((2, 2, 2))
        for nse, w in ((0, 0.9), (1, 0.1)):
            out[b ^ nse, a, b ^ nse] += w
        return out

    ch = from_function((2, 2, 2, 2, 2), row)
    assert not is_conditionally_independent(ch)
    with pytest.warns(RuntimeWarning):
        adv = secrecy_advantage(ch, [0.5, 0.5], [0.5, 0.5])
    assert adv.adv1 <= 1e-12 and not adv.conditionally_independent


def test_noisier_eavesdropper_helps():
    vals = [secrecy_advantage(build_additive(binary_spec(e3=e)), [0.5, 0.5], [0.5, 0.5]).adv1
            for e in (0.05, 0.2, 0.4)]
    assert 0 < vals[0] < vals[1] < vals[2]


@pytest.mark.parametrize("q", [2, 3, 5])
def test_virtual_difference_equals_advantage(q):
    spec = random_spec(np.random.default_rng(q), q)
    ch = build_additive(spec)
    u = np.full(q, 1 / q)
    rep = virtual_mac_difference(ch, u, u)
    adv = secrecy_advantage(ch, u, u)
    assert rep.difference == pytest.approx(adv.adv1, abs=1e-9)
    assert abs(rep.masking_dependence) <= 1e-12
    assert rep.to_dict()["units"] == "nats"


def test_virtual_channel_bundle_agrees():
    ch = build_additive(binary_spec())
    u = [0.5, 0.5]
    v = induced_virtual_mac(ch, u, u)
    assert v.sizes == {"x1": 4, "x2": 4, "y1": 16, "y2": 16, "z": 32}
    m = measure_bundle(v, masking_distribution(ch))
    rep = virtual_mac_difference(ch, u, u)
    assert m.i_y2v1_x2 == pytest.approx(rep.legit_term, abs=1e-12)
    assert m.i_z_v1v2 == pytest.approx(rep.eve_term, abs=1e-12)
    assert m.i_y1v2_x1 == pytest.approx(0, abs=1e-12)


def test_virtual_channel_needs_prime_alphabets():
    ch = random_channel(np.random.default_rng(2), (2, 2, 4, 2, 2))
    with pytest.raises(AlphabetMismatch):
        virtual_mac_difference(ch, [0.5, 0.5], [0.5, 0.5])
    with pytest.raises(AlphabetMismatch):
        induced_virtual_mac(ch, [0.5, 0.5], [0.5, 0.5])


def test_swap_is_involution():
    ch = random_channel(np.random.default_rng(3), (2, 3, 2, 3, 2))
    assert swap_users(swap_users(ch)) == ch
    assert swap_users(ch).sizes == {"x1": 3, "x2": 2, "y1": 3, "y2": 2, "z": 2}


# ---------------------------------------------------------------------------
# two-stage conversion


def test_two_stage_ideal_matches_virtual():
    ch = build_additive(binary_spec())
    rep = simulate_two_stage(ch, [0.5, 0.5], [0.5, 0.5], n1=8, M=4, trials=2000, seed=1)
    assert rep.error_estimate == rep.extra["virtual_error"]
    assert rep.extra["n2"] == 0 and rep.extra["inner_failures"] == 0
    assert rep.extra["public_nats"] == pytest.approx(8 * math.log(4))


def test_two_stage_longer_code_errs_less():
    ch = build_additive(binary_spec(0.05, 0.05, 0.3))
    short = simulate_two_stage(ch, [0.5, 0.5], [0.5, 0.5], n1=2, M=4, trials=3000, seed=2)
    long = simulate_two_stage(ch, [0.5, 0.5], [0.5, 0.5], n1=12, M=4, trials=3000, seed=2)
    assert long.error_estimate < short.error_estimate


@pytest.mark.parametrize("r", [1, 3])
def test_two_stage_repetition_bracketed(r):
    ch = build_additive(binary_spec(0.1, 0.1, 0.2))
    rep = simulate_two_stage(ch, [0.5, 0.5], [0.5, 0.5], n1=6, M=4, inner=InnerCode("repetition", r),
                             trials=4000, seed=3)
    p1 = rep.extra["virtual_error"]
    p2 = rep.extra["inner_failure_rate"]
    ci = 3 * rep.ci95_halfwidth
    assert p1 * (1 - p2) - ci <= rep.error_estimate <= p1 + p2 + ci
    assert rep.extra["n2"] == 2 * 6 * r and rep.extra["overhead"] == 2 * r


def test_two_stage_repetition_improves_inner_code():
    ch = build_additive(binary_spec(0.1, 0.1, 0.2))
    f = [simulate_two_stage(ch, [0.5, 0.5], [0.5, 0.5], n1=4, inner=InnerCode("repetition", r), trials=2000,
                            seed=4).extra["inner_failure_rate"] for r in (1, 5)]
    assert f[1] < f[0]


def test_two_stage_direction_two_and_reproducible():
    ch = build_additive(binary_spec(0.1, 0.3, 0.2))
    a = simulate_two_stage(ch, [0.5, 0.5], [0.5, 0.5], n1=6, trials=1500, seed=5, direction=2)
    b = simulate_two_stage(ch, [0.5, 0.5], [0.5, 0.5], n1=6, trials=1500, seed=5, direction=2, workers=2)
    assert a.to_dict() == b.to_dict()
    assert a.extra["direction"] == 2
    with pytest.raises(ValueError):
        simulate_two_stage(ch, [0.5, 0.5], [0.5, 0.5], n1=6, direction=3)


def test_inner_code_validation():
    with pytest.raises(ValueError):
        InnerCode("turbo")
    with pytest.raises(ValueError):
        InnerCode("repetition", 0)
