import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from roughmix import tensor as ta
from roughmix.errors import CompositionError, ConfigurationError
from roughmix.tensor import TruncatedTensor


def random_tensor(rng, dim, level, zero_scalar=False):
    levels = [rng.normal(size=dim ** n) for n in range(level + 1)]
    if zero_scalar:
        levels[0][0] = 0.0
    return TruncatedTensor(dim, level, levels)


# --------------------------------------------------------------------------- #
# storage and indexing


def test_word_index_round_trip():
    d = 3
    for n in range(1, 4):
        for idx in range(d ** n):
            word = ta.index_to_word(idx, d, n)
            assert ta.word_to_index(word, d) == idx


def test_lexicographic_order():
    # (1,2) comes before (2,1) in d=2 level-2 storage
    assert ta.word_to_index((1, 2), 2) == 1
    assert ta.word_to_index((2, 1), 2) == 2
    assert ta.word_to_index((1, 1), 2) == 0


def test_entry_cap_enforced():
    with pytest.raises(ConfigurationError):
        TruncatedTensor(10, 8, [np.zeros(10 ** n) for n in range(9)])


def test_level_shape_validation():
    with pytest.raises(ValueError):
        TruncatedTensor(2, 2, [[1.0], [1.0, 2.0], [1.0]])


# --------------------------------------------------------------------------- #
# product


def test_unit_is_identity():
    assert ta.unit(2, 3).scalar == 1.0
    rng = np.random.default_rng(0)
    x = random_tensor(rng, 2, 3)
    u = ta.unit(2, 3)
    assert ta.mul(u, x).allclose(x)
    assert ta.mul(x, u).allclose(x)


def test_two_letter_product_expansion():
    # (1 + e1)(1 + e2) = 1 + e1 + e2 + e1e2 with no e2e1 term
    x = ta.unit(2, 2) + ta.from_level1([1.0, 0.0], 2)
    y = ta.unit(2, 2) + ta.from_level1([0.0, 1.0], 2)
    z = ta.mul(x, y)
    assert z.scalar == 1.0
    assert z.coeff((1,)) == 1.0 and z.coeff((2,)) == 1.0
    assert z.coeff((1, 2)) == 1.0 and z.coeff((2, 1)) == 0.0


def test_binomial_cube():
    one_plus = ta.unit(1, 3) + ta.from_level1([1.0], 3)
    left = ta.mul(ta.mul(one_plus, one_plus), one_plus)
    right = ta.mul(one_plus, ta.mul(one_plus, one_plus))
    assert left.allclose(right)
    assert [lv[0] for lv in left.levels] == [1.0, 3.0, 3.0, 1.0]


def test_product_shape_mismatch():
    with pytest.raises(CompositionError):
        ta.mul(ta.unit(2, 2), ta.unit(2, 3))
    with pytest.raises(CompositionError):
        ta.mul(ta.unit(2, 2), ta.unit(3, 2))


@given(st.integers(0, 10_000))
@settings(max_examples=50, deadline=None)
def test_product_associative(seed):
    rng = np.random.default_rng(seed)
    dim = int(rng.integers(1, 4))
    level = int(rng.integers(1, 5))
    x, y, z = (random_tensor(rng, dim, level) for _ in range(3))
    left = ta.mul(ta.mul(x, y), z)
    right = ta.mul(x, ta.mul(y, z))
    scale = max(1.0, max(left.norm_level(n) for n in range(level + 1)))
    assert left.max_diff(right) / scale < 1e-12


# --------------------------------------------------------------------------- #
# exp / log


def test_exp_of_zero_is_unit():
    assert ta.exp(ta.zero(2, 3)).allclose(ta.unit(2, 3))


def test_exp_scalar_series():
    x = ta.from_level1([2.0], 3)
    got = ta.exp(x)
    assert [lv[0] for lv in got.levels] == pytest.approx([1.0, 2.0, 2.0, 4.0 / 3.0])


def test_exp_rejects_nonzero_scalar():
    with pytest.raises(ValueError):
        ta.exp(ta.unit(2, 2))


def test_log_of_unit_is_zero():
    assert ta.log(ta.unit(2, 3)).allclose(ta.zero(2, 3))


def test_log_scalar_series():
    x = TruncatedTensor(1, 2, [[1.0], [1.0], [0.5]])
    got = ta.log(x)
    assert [lv[0] for lv in got.levels] == pytest.approx([0.0, 1.0, 0.0], abs=1e-14)


def test_log_rejects_bad_scalar():
    with pytest.raises(ValueError):
        ta.log(ta.zero(2, 2))


@given(st.integers(0, 10_000))
@settings(max_examples=50, deadline=None)
def test_exp_log_inverse(seed):
    rng = np.random.default_rng(seed)
    dim = int(rng.integers(1, 4))
    level = int(rng.integers(1, 5))
    x = random_tensor(rng, dim, level, zero_scalar=True)
    back = ta.log(ta.exp(x))
    assert back.max_diff(x) < 1e-10
    g = ta.exp(x)
    assert ta.exp(ta.log(g)).max_diff(g) < 1e-10


def test_commuting_exponentials_add():
    x = ta.from_level1([0.7], 4)
    y = ta.from_level1([-0.3], 4)
    lhs = ta.mul(ta.exp(x), ta.exp(y))
    rhs = ta.exp(x + y)
    assert lhs.max_diff(rhs) < 1e-12


def test_exp_of_increment_matches_exp():
    delta = np.array([0.4, -1.1, 0.2])
    a = ta.exp_of_increment(delta, 4)
    b = ta.exp(ta.from_level1(delta, 4))
    assert a.max_diff(b) < 1e-14


# --------------------------------------------------------------------------- #
# shuffle product and group-likeness


def test_shuffle_single_letters():
    assert ta.shuffle((1,), (2,)) == {(1, 2): 1, (2, 1): 1}


def test_shuffle_empty_word():
    assert ta.shuffle((1,), ()) == {(1,): 1}


def test_shuffle_three_riffles():
    assert ta.shuffle((1, 2), (3,)) == {(1, 2, 3): 1, (1, 3, 2): 1, (3, 1, 2): 1}


def test_shuffle_multiplicity():
    # same letter on both sides gives multiplicity 2
    assert ta.shuffle((1,), (1,)) == {(1, 1): 2}


def test_group_like_unit_and_exponentials():
    ok, viol = ta.is_group_like(ta.unit(2, 4))
    assert ok and viol == 0.0
    g = ta.exp(ta.from_level1([0.5, -1.2], 4))
    ok, viol = ta.is_group_like(g)
    assert ok and viol < 1e-12


def test_group_like_detects_pure_level2():
    # x = 1 + e1 (x) e1: <x,(1)>^2 = 0 but <x, (1) sh (1)> = 2 * <x,(11)> = 2
    x = TruncatedTensor(2, 2, [[1.0], np.zeros(2), [1.0, 0.0, 0.0, 0.0]])
    ok, viol = ta.is_group_like(x)
    assert not ok
    assert viol == pytest.approx(2.0)


def test_factorial_decay_for_straight_lines():
    # signature of a line with increment delta has level n equal to
    # delta^{(x)n}/n!, so its max-norm is exactly |delta|_inf^n / n!
    delta = np.array([0.9, -0.4])
    sig = ta.exp_of_increment(delta, 6)
    var1 = np.abs(delta).max()
    for n in range(1, 7):
        assert sig.norm_level(n) <= var1 ** n / math.factorial(n) + 1e-15


def test_json_round_trip():
    rng = np.random.default_rng(7)
    x = random_tensor(rng, 2, 3)
    back = TruncatedTensor.from_json(x.to_json())
    assert back.allclose(x)
    assert (back.dim, back.level) == (2, 3)
