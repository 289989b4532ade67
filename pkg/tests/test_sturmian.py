import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from toeplitz_pnt.averaging import ObservableSpec
from toeplitz_pnt.errors import ContractError, OutOfRangeError
from toeplitz_pnt.sturmian import (
    RotationSpec,
    atom_lengths,
    code,
    codes,
    golden_convergent,
    lebesgue_integral,
    phase,
    prime_orbit_average,
    squeeze_check,
    vinogradov_sum,
    word,
)

GOLDEN = (math.sqrt(5) - 1) / 2


@pytest.fixture(scope="module")
def golden():
    return RotationSpec.golden()


def test_convergent():
    p, q = golden_convergent()
    assert q > 2**80 and math.gcd(p, q) == 1
    assert q * q - p * q - p * p in (1, -1)  # consecutive Fibonacci numbers
    assert abs(p / q - GOLDEN) < 1e-15


def test_first_code_is_zero(golden):
    assert code(golden, 0) == 0
    assert phase(golden, 0) == 0


def test_fibonacci_prefix(golden):
    # the Fibonacci word starts at k = 2 (equivalently x0 = alpha, k = 1)
    assert word(golden, 2, 13) == "0100101001001"
    shifted = RotationSpec.golden(beta=Fraction(golden.beta, golden.modulus), x0=golden.alpha_fraction())
    assert word(shifted, 1, 13) == "0100101001001"
    assert word(golden, 1, 13) == "1010010100100"


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 10**6))
def test_codes_match_float_rotation(k):
    x = math.fmod(k * GOLDEN, 1.0)
    if min(abs(x - GOLDEN), x, 1 - x) < 1e-8:
        return  # too close to a cut for doubles
    assert code(RotationSpec.golden(), k) == (0 if x < GOLDEN else 1)


def test_period_shift_agrees_off_cut():
    alpha, beta = Fraction(5, 13), Fraction(1, 3)
    spec = RotationSpec.from_fractions(alpha, beta)
    rng = np.random.default_rng(0)
    ks = rng.integers(0, 10**9, 500)
    a, b = codes(spec, ks), codes(spec, ks + 13)
    x = [Fraction(int(k) * 5 % 13, 13) for k in ks]
    near = np.array([min(abs(v - beta), v, 1 - v) < Fraction(1, 10**6) for v in x])
    assert (a[~near] == b[~near]).all()


@pytest.mark.parametrize("radius", [0, 1, 2, 4])
def test_atoms_partition_circle(golden, radius):
    lengths = atom_lengths(golden, radius)
    assert sum(lengths.values()) == golden.modulus
    assert all(v > 0 for v in lengths.values())
    assert len(lengths) == 2 * radius + 2  # Sturmian complexity


def test_atoms_match_empirical_windows(golden):
    lengths = atom_lengths(golden, 1)
    ks = np.arange(1, 200001)
    c = codes(golden, ks - 1).astype(int) | codes(golden, ks).astype(int) << 1 | codes(golden, ks + 1).astype(int) << 2
    freq = np.bincount(c, minlength=8) / len(ks)
    for key, L in lengths.items():
        assert abs(freq[key] - L / golden.modulus) < 1e-3


def test_indicator_prediction_is_beta(golden):
    assert lebesgue_integral(golden, ObservableSpec.indicator(0)) == float(golden.beta_fraction())
    assert lebesgue_integral(golden, ObservableSpec.constant(2.0, radius=3)) == 2.0


def test_prime_average_three_coordinates(golden, table):
    F = ObservableSpec.from_function(lambda w: w[0] - 2 * w[1] * w[2] + 0.5 * w[2], radius=1)
    rep = prime_orbit_average(golden, F, 10**7, table)
    assert abs(rep.value - rep.predicted) <= 0.01
    assert rep.extra["drift_bound"] < 1e-20
    assert rep.kind == "sturmian-primes"


def test_prime_average_rejects_non_binary(golden):
    with pytest.raises(ContractError):
        prime_orbit_average(golden, ObservableSpec.indicator(0, alphabet_size=3), 100)
    with pytest.raises(OutOfRangeError):
        prime_orbit_average(golden, ObservableSpec.indicator(0), 1)


def test_vinogradov(golden, table):
    assert vinogradov_sum(Fraction(0), 10**4, table) == pytest.approx(1.0)
    n = table.pi(10**4)
    # every prime but 2 contributes -1 at alpha = 1/2
    assert vinogradov_sum(Fraction(1, 2), 10**4, table) == pytest.approx((n - 2) / n)
    assert vinogradov_sum(golden, 10**7, table) <= 0.05


def test_squeeze(golden, table):
    rep = squeeze_check(golden, 10**6, 0.01, table)
    assert rep.sandwiched and rep.passed
    assert rep.upper_integral - rep.lower_integral == pytest.approx(0.01)
    with pytest.raises(ContractError):
        squeeze_check(golden, 10**3, 0.9, table)


def test_precision_budget(golden):
    assert golden.max_steps() == 2**68
    phase(golden, -(2**68))
    with pytest.raises(OutOfRangeError):
        phase(golden, 2**68 + 1)
    small = RotationSpec.from_fractions(Fraction(1, 3), Fraction(1, 2), bits=96)
    with pytest.raises(OutOfRangeError):
        codes(small, np.array([0, 2**36 + 1]))


def test_spec_validation():
    with pytest.raises(ContractError):
        RotationSpec(1, 1, bits=64)
    with pytest.raises(ContractError):
        RotationSpec.from_fractions(Fraction(1, 3), Fraction(0))
    spec = RotationSpec.from_fractions(Fraction(1, 3), Fraction(1, 2), bits=96)
    assert spec.to_dict()["surrogate"] == [1, 3]
    assert spec.surrogate_error > 0
