import random
import time
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from twwc.errors import DuplicateSymbol, ParseError, UnsupportedMinMaxDirection
from twwc.fm import (
    FIXTURES,
    LinearForm,
    eliminate,
    expand_minmax,
    fixture_text,
    implied_by,
    load_fixture,
    parse_inequality,
    parse_system,
    prune_redundant,
    run_pipeline,
    same_inequalities,
)
from twwc.fm.core import lift_feasible, recover_min_sum
from twwc.fm.parser import parse_inequalities

I1, I2, Z1, Z2, Z12 = "I(Y2;V1|X2)", "I(Y1;V2|X1)", "I(Z;V1)", "I(Z;V2)", "I(Z;V1,V2)"
SYMS = (I1, I2, Z1, Z2, Z12)
SPLITS = ("R1s", "R1k", "R1e", "R1o", "R2s", "R2k", "R2e", "R2o")


def forms(text):
    return parse_system(text).inequalities


def random_symbols(rng):
    """Random rational instantiation meeting the nonnegativity and independence assumptions."""
    vals = {s: Fraction(rng.randint(0, 40), 10) for s in (I1, I2, Z1, Z2)}
    vals[Z12] = vals[Z1] + vals[Z2] + Fraction(rng.randint(0, 20), 10)
    return vals


def interval_feasible(ineqs, var, values):
    """Whether some real ``var`` satisfies every inequality at ``values``."""
    lo, lo_strict, hi, hi_strict = None, False, None, False
    for q in ineqs:
        c = q.form.coef(var)
        rest = q.form.without(var).evaluate(values)
        if c == 0:
            if not (rest < 0 if q.strict else rest <= 0):
                return False
            continue
        bound = -rest / c
        if c > 0 and (hi is None or bound < hi or (bound == hi and q.strict)):
            hi, hi_strict = bound, q.strict
        if c < 0 and (lo is None or bound > lo or (bound == lo and q.strict)):
            lo, lo_strict = bound, q.strict
    if lo is None or hi is None:
        return True
    return lo < hi or (lo == hi and not lo_strict and not hi_strict)


def all_hold(ineqs, values):
    return all(q.holds(values) for q in ineqs)


# ---------------------------------------------------------------------------
# parser


def test_equality_splits_in_two():
    qs = parse_inequalities("R1 = R1s + R1e")
    assert len(qs) == 2
    assert {q.strict for q in qs} == {False}
    assert qs[0].form == -qs[1].form
    assert qs[0].form.coef("R1") in (1, -1) and qs[0].form.coef("R1s") == -qs[0].form.coef("R1")


def test_strict_with_atom():
    q = parse_inequality("R1o + R1e > I(Z;V1)")
    assert q.strict
    assert q.form.syms == ((Z1, Fraction(1)),)
    assert q.form.coef("R1o") == -1


def test_malformed_operator_column():
    with pytest.raises(ParseError) as err:
        parse_inequality("R1 + > 3")
    assert err.value.column == 6 and err.value.line == 1


def test_error_line_in_system():
    with pytest.raises(ParseError) as err:
        parse_system("R1 <= 3\n\nR2 <= * 2\n")
    assert err.value.line == 3 and err.value.column == 7


@pytest.mark.parametrize("text", ["R1 <= 3 4", "R1 R2 <", "min(R1) < 2", "R1 < max(R1, min(R2, 3))",
                                  "R1 + min(R1, R2) < 3 + max(R1, R2)", "R1 <= I(Z;V1", "R1 ~ 3", ""])
def test_parser_rejects(text):
    with pytest.raises(ParseError):
        parse_inequality(text)


def test_rationals_and_implicit_products():
    q = parse_inequality("3/2 R1 + 2*R2 - 0.5 <= 2I(Z;V1) + 'I(Y1 ; V2|X1)'")
    # canonical form clears denominators
    expect = LinearForm.make({"R1": Fraction(3, 2), "R2": 2}, {Z1: -2, I2: -1}, Fraction(-1, 2))
    assert q.form == expect.canonical()
    assert q.form.coef("R1") == 3 and q.form.const == -1


def test_unicode_relations():
    assert parse_inequality("R1 ≤ 2").form == parse_inequality("R1 <= 2").form
    q = parse_inequality("R1 ≥ 2")
    assert q.form.coef("R1") == -1 and not q.strict


def test_duplicate_label_and_symbol():
    with pytest.raises(DuplicateSymbol):
        parse_system("a: R1 < 1\na: R2 < 1\n")
    with pytest.raises(DuplicateSymbol):
        parse_system("R1 + 'R1' < 1\n")


def test_directives():
    sys_ = parse_system(
        "# comment line\n"
        "c1: R1 + R2 < I(Z;V1)\n"
        "#nonneg R1, R2, I(Z;V1)\n"
        "#assume I(Z;V1) >= 0\n"
        "#eliminate R2\n"
        "#expect R1 < I(Z;V1)\n"
    )
    assert len(sys_.inequalities) == 3
    assert len(sys_.assumptions) == 2
    assert sys_.eliminate_order == ["R2"]
    assert len(sys_.expected) == 1
    assert sys_.inequalities[0].label == "c1"


def test_assume_rejects_rates():
    with pytest.raises(ParseError):
        parse_system("#assume R1 >= 0\n")


def test_fixtures_ship():
    assert set(FIXTURES) == {"appendix-a", "appendix-b"}
    assert "#eliminate" in fixture_text("appendix-a")
    with pytest.raises(KeyError):
        fixture_text("appendix-c")


# ---------------------------------------------------------------------------
# forms


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(-9, 9), min_size=3, max_size=3), st.integers(-9, 9),
       st.fractions(min_value=Fraction(1, 50), max_value=50))
def test_canonical_scale_invariant(coefs, const, k):
    f = LinearForm.make({"R1": coefs[0], "R2": coefs[1]}, {Z1: coefs[2]}, const)
    assert f.scale(k).canonical() == f.canonical()
    c = f.canonical()
    if not c.is_zero:
        nums = [v for _, v in c.vars + c.syms] + ([c.const] if c.const else [])
        assert all(v.denominator == 1 for v in nums)


def test_variable_order():
    f = LinearForm.make({"R2o": 1, "R1": 1, "R1e": 1, "R2": 1})
    assert [k for k, _ in f.vars][:2] == ["R1", "R2"]


# ---------------------------------------------------------------------------
# min/max expansion


@settings(max_examples=80, deadline=None)
@given(st.fractions(-5, 5), st.fractions(-5, 5), st.fractions(-5, 5))
def test_min_on_greater_side_truth_table(a, b, c):
    q = parse_inequality("min(R1s, R2s) > c0")
    sys_ = parse_system("min(R1s, R2s) > c0")
    parts = expand_minmax(sys_).inequalities
    assert len(parts) == 2
    vals = {"R1s": a, "R2s": b, "c0": c}
    assert q.holds(vals) == (min(a, b) > c) == all_hold(parts, vals)


def test_max_upper_bound_is_conjunction():
    parts = expand_minmax(parse_system("max(R1, R2) <= I(Z;V1)")).inequalities
    expect = forms("R1 <= I(Z;V1)\nR2 <= I(Z;V1)")
    assert same_inequalities(parts, expect, ignore_strict=False)


def test_no_minmax_unchanged():
    sys_ = parse_system("R1 < 2\nR2 <= R1")
    assert expand_minmax(sys_).inequalities == sys_.inequalities


def test_disjunctive_direction():
    sys_ = parse_system("max(R1, R2) >= 1\nR1 <= 3")
    with pytest.raises(UnsupportedMinMaxDirection):
        expand_minmax(sys_)
    cases = expand_minmax(sys_, conjunctive_only=False)
    assert len(cases) == 2
    assert all(len(c.inequalities) == 2 for c in cases)


def test_eliminate_refuses_minmax():
    with pytest.raises(ValueError):
        eliminate(parse_system("R1 + min(R2, 1) < 3"), "R1")


# ---------------------------------------------------------------------------
# elimination


def test_first_appendix_step():
    before = parse_system(
        f"R1s + R1k + R1o + R1e < {I1}\n"
        f"R1o + R1e > {Z1}\n"
        f"R1o + R1e + R2o + R2e > {Z12}\n"
        "#nonneg R1o\n"
    )
    after = eliminate(before, "R1o").inequalities
    expect = forms(
        f"R1s + R1k < {I1} - {Z1}\n"
        f"R2o + R2e - R1s - R1k > {Z12} - {I1}\n"
        f"R1s + R1k + R1e < {I1}\n"
    )
    assert same_inequalities(after, expect, ignore_strict=False)


def test_eliminate_absent_is_identity():
    sys_ = parse_system("R1 < 2\nR2 <= R1")
    assert eliminate(sys_, "R9").inequalities == sys_.inequalities


def test_single_pairing():
    out = eliminate(parse_system("x <= a0\nx >= b0"), "x").inequalities
    assert same_inequalities(out, forms("b0 <= a0"), ignore_strict=False)


def test_strictness_propagates():
    out = eliminate(parse_system("x < a0\nx >= b0"), "x").inequalities
    assert out[0].strict
    out = eliminate(parse_system("x <= a0\nx >= b0"), "x").inequalities
    assert not out[0].strict


def split_sample(rng, names):
    """Instantiation biased toward the interior of the appendix systems."""
    vals = {s: Fraction(rng.randint(0, 20), 10) for s in (Z1, Z2)}
    vals[Z12] = vals[Z1] + vals[Z2] + Fraction(rng.randint(0, 10), 10)
    vals.update({s: vals[Z12] + Fraction(rng.randint(0, 40), 10) for s in (I1, I2)})
    r = {v: Fraction(rng.randint(0, 12), 10) for v in SPLITS}
    r["R1"], r["R2"] = r["R1s"] + r["R1e"], r["R2s"] + r["R2e"]
    vals.update({v: r[v] for v in names})
    return vals


@pytest.mark.parametrize("seed", range(3))
def test_elimination_soundness_interval(seed):
    """Pre-system feasible in the eliminated variable iff post-system holds."""
    rng = random.Random(seed)
    sys_ = expand_minmax(load_fixture("appendix-a" if seed % 2 == 0 else "appendix-b"))
    remaining = list(sys_.eliminate_order) + ["R1", "R2"]
    for var in sys_.eliminate_order:
        post = eliminate(sys_, var)
        remaining.remove(var)
        hits = 0
        for _ in range(100):
            vals = split_sample(rng, remaining)
            pre_ok = interval_feasible(sys_.inequalities, var, vals)
            hits += pre_ok
            assert pre_ok == all_hold(post.inequalities, vals)
        assert hits >= 5
        sys_ = post


def test_pruning_keeps_feasible_set():
    rng = random.Random(7)
    sys_ = expand_minmax(load_fixture("appendix-b"))
    for var in sys_.eliminate_order[:3]:
        sys_ = eliminate(sys_, var)
    pruned = prune_redundant(sys_)
    assert len(pruned.inequalities) < len(sys_.inequalities)
    names = sys_.variables()
    for _ in range(200):
        vals = split_sample(rng, names)
        assert all_hold(sys_.inequalities, vals) == all_hold(pruned.inequalities, vals)


def test_soundness_hits_feasible_points():
    # a tighter sampler that lands inside the region often
    rng = random.Random(5)
    sys_ = parse_system("x + y <= a0\nx - y < b0\ny >= 0\nx >= c0")
    post = eliminate(sys_, "x")
    agree = feasible = 0
    for _ in range(200):
        vals = {"a0": Fraction(rng.randint(0, 10)), "b0": Fraction(rng.randint(-3, 5)),
                "c0": Fraction(rng.randint(-3, 3)), "y": Fraction(rng.randint(0, 10), 2)}
        pre_ok = interval_feasible(sys_.inequalities, "x", vals)
        feasible += pre_ok
        agree += pre_ok == all_hold(post.inequalities, vals)
    assert agree == 200 and feasible > 20


# ---------------------------------------------------------------------------
# redundancy


def test_prune_sum_bound_drops_single_rate():
    sys_ = parse_system(
        f"c21cc: R1 + R2 < {I2} + {I1} - {Z1} - {Z2}\n"
        f"c25: R2 < {I2} + {I1} - {Z1} - {Z2}\n"
        "#nonneg R1\n"
    )
    kept = prune_redundant(sys_).inequalities
    assert {q.label for q in kept} == {"c21cc", None}


def test_prune_uses_independence_assumption():
    text = (
        f"c21c: R1 + R2 < {I2} + {I1} - {Z12}\n"
        f"c21cc: R1 + R2 < {I2} + {I1} - {Z1} - {Z2}\n"
    )
    kept = prune_redundant(parse_system(text + f"#assume {Z12} >= {Z1} + {Z2}\n")).inequalities
    assert [q.label for q in kept] == ["c21c"]
    # without the assumption neither implies the other
    assert len(prune_redundant(parse_system(text)).inequalities) == 2


def test_irredundant_triangle_unchanged():
    sys_ = parse_system("x >= 0\ny >= 0\nx + y <= 1")
    assert prune_redundant(sys_).inequalities == sys_.inequalities


def test_strict_target_needs_strict_parent():
    le = parse_inequality("x <= 1")
    lt = parse_inequality("x < 1")
    assert implied_by(le, [lt], [])
    assert not implied_by(lt, [le], [])
    assert implied_by(lt, [parse_inequality("x <= 1/2")], [])


def test_infeasible_parents_imply_anything():
    assert implied_by(parse_inequality("x < -5"), [parse_inequality("x < 0"), parse_inequality("x > 1")], [])


def test_lift_feasible_small():
    sys_ = parse_system("x + y <= a0\nx > 0\ny > 0")
    assert lift_feasible(sys_, {"a0": 1})
    assert not lift_feasible(sys_, {"a0": 0})
    assert lift_feasible(sys_, {"a0": 1, "x": Fraction(1, 2)})
    assert not lift_feasible(sys_, {"a0": 1, "x": 1})


# ---------------------------------------------------------------------------
# end to end


def test_appendix_a_pipeline():
    t0 = time.perf_counter()
    sys_ = load_fixture("appendix-a")
    res = run_pipeline(sys_)
    assert time.perf_counter() - t0 < 1.0
    assert same_inequalities(res.rate_part(), sys_.copy(sys_.expected).rate_part())
    conds = res.conditions()
    assert same_inequalities(conds, forms(f"{Z2} <= {I2}\n{Z1} <= {I1}"))


def test_appendix_b_pipeline_and_min_sum():
    sys_ = load_fixture("appendix-b")
    res = run_pipeline(sys_)
    assert same_inequalities(res.rate_part(), sys_.copy(sys_.expected).rate_part())
    lhs = LinearForm.make({"R1": 1, "R2": 1})
    s = LinearForm.make(syms={I1: 1, I2: 1, Z12: -1})
    first = [LinearForm.make(syms={I1: 1, Z1: -1}), s]
    second = [LinearForm.make(syms={I2: 1, Z2: -1}), s]
    status = recover_min_sum(res, lhs, first, second)
    assert all(status.values())
    assert list(status.values()).count("explicit") == 3


def _check_same_feasible(a, b, names, rng, count=100):
    inside = 0
    for _ in range(count):
        vals = split_sample(rng, names)
        ok = all_hold(a, vals)
        inside += ok
        assert ok == all_hold(b, vals)
    assert inside > 0


def test_order_independence_appendix_a():
    sys_ = load_fixture("appendix-a")
    ref = run_pipeline(sys_)
    alt = run_pipeline(sys_, list(reversed(sys_.eliminate_order)))
    _check_same_feasible(ref.inequalities, alt.inequalities, ["R1", "R2"], random.Random(1))
    assert same_inequalities(ref.rate_part(), alt.rate_part())


def test_order_independence_appendix_b():
    sys_ = load_fixture("appendix-b")
    ref = run_pipeline(sys_)
    alt = run_pipeline(sys_, ["R2e", "R1e", "R2o", "R1o", "R2k", "R1k", "R2s", "R1s"])
    _check_same_feasible(ref.inequalities, alt.inequalities, ["R1", "R2"], random.Random(2))


def test_pipeline_without_intermediate_pruning_agrees():
    sys_ = parse_system(
        "x + y <= a0\nx - y <= b0\n-x + 2 y <= c0\ny >= 0\nz >= x\nz <= a0\n#eliminate z, x\n"
    )
    fast = run_pipeline(sys_)
    slow = run_pipeline(sys_, prune_between=False)
    assert same_inequalities(fast.inequalities, slow.inequalities, ignore_strict=False)


def test_all_symbols_names():
    sys_ = load_fixture("appendix-a")
    assert set(sys_.symbols()) == set(SYMS)
    assert set(SPLITS) | {"R1", "R2"} == set(sys_.variables())
