import json
import math
from fractions import Fraction

import numpy as np
import pytest

from toeplitz_pnt.arith import euler_phi, is_perfect_square, semiprime_noncoprime_count, semiprime_pi, table_for
from toeplitz_pnt.averaging import ObservableSpec, oscillation_witness
from toeplitz_pnt.constructions import (
    BuildConfig,
    StageCertificate,
    build_bounded_holes,
    build_spnt_counterexample,
    build_squares_counterexample,
    build_theorem_a,
    certificates_to_jsonl,
    squares_beta,
    validate_stage,
)
from toeplitz_pnt.errors import BuildError, CertificateError, ContractError
from toeplitz_pnt.toeplitz import HOLE, ToeplitzSkeleton, hole_report, tower_diameter

A_CONDITIONS = ["consistency", "t1", "t2", "t3", "t4", "t5", "t6", "t6.5", "t6++a", "t6++b", "t7", "l1", "l2"]


@pytest.fixture(scope="module")
def spnt():
    return build_spnt_counterexample()


# ------------------------------------------------------------------ config


def test_config_validation():
    with pytest.raises(ContractError):
        BuildConfig(growth_constant=1)
    with pytest.raises(ContractError):
        BuildConfig(fill_policy="whatever")
    with pytest.raises(ContractError):
        BuildConfig(oscillation_target=Fraction(3, 2))
    with pytest.raises(ContractError):
        BuildConfig.from_dict({"nonsense": 1})


def test_config_round_trip():
    cfg = BuildConfig.strict(seed=4, prime_support=(7, 3))
    assert cfg.growth_constant == 100 and cfg.totient_ratio == Fraction(1, 2)
    back = BuildConfig.from_dict(json.loads(json.dumps(cfg.to_dict())))
    assert back == cfg


# --------------------------------------------------------------- Theorem A


def test_theorem_a_certificates(theorem_a):
    skel, certs = theorem_a
    assert skel.periods == (30, 2310, 9699690)
    assert [c.stage for c in certs] == [2, 3]
    for cert in certs:
        assert cert.passed and cert.conditions() == A_CONDITIONS
    assert skel.check_consistency() == []


def test_theorem_a_recomputation_matches(theorem_a):
    skel, certs = theorem_a
    for cert in certs:
        again = validate_stage(skel, cert.stage, "A")  # config read back from metadata
        assert again.records() == cert.records()


def test_theorem_a_base_stage(theorem_a):
    skel, _ = theorem_a
    base = validate_stage(skel, 1, "A")
    assert base.passed
    assert base.check("t2").lhs == Fraction(4, 15) == Fraction(euler_phi(30), 30)


def test_theorem_a_regular(theorem_a):
    skel, _ = theorem_a
    cfg = BuildConfig.from_dict(skel.metadata["config"])
    for t in range(1, skel.n_stages + 1):
        assert Fraction(euler_phi(skel.period(t)), skel.period(t)) <= cfg.totient_ratio**t
    rows = hole_report(skel).rows
    assert all(b.per_period < a.per_period for a, b in zip(rows, rows[1:]))


def test_theorem_a_holes_are_coprime(theorem_a):
    skel, _ = theorem_a
    for t in range(1, skel.n_stages + 1):
        assert (np.gcd(skel.holes(t), skel.period(t)) == 1).all()


def test_theorem_a_gaps(theorem_a):
    skel, _ = theorem_a
    gaps = [g for _, _, g in oscillation_witness(skel, "primes") if g is not None]
    assert min(gaps) >= 0.5


def test_single_stage_budget():
    skel, certs = build_theorem_a(BuildConfig(stage_budget=1))
    assert skel.periods == (30,) and certs == []


def test_growth_100_refuses_past_stage_2():
    with pytest.raises(BuildError) as info:
        build_theorem_a(BuildConfig(growth_constant=100))
    assert info.value.stage == 3 and info.value.condition == "t6.5"
    assert "modulus_budget" in str(info.value)
    with pytest.raises(BuildError) as info:
        build_theorem_a(BuildConfig.strict())
    assert info.value.stage == 2 and info.value.condition == "t6"


def test_small_budget_error_names_budget():
    with pytest.raises(BuildError) as info:
        build_theorem_a(BuildConfig(modulus_budget=1000))
    assert info.value.record()["stage"] == 2


def test_bad_initial_modulus():
    # 7 has phi(7)/7 = 6/7 > 17/20, so t2 fails at the base stage
    with pytest.raises(CertificateError) as info:
        build_theorem_a(BuildConfig(initial_modulus=7))
    assert info.value.condition == "t2"


def test_deterministic_builds(theorem_a):
    skel, certs = theorem_a
    again, certs2 = build_theorem_a(BuildConfig(growth_constant=2, stage_budget=3, seed=0))
    assert again.to_text() == skel.to_text()
    assert certificates_to_jsonl(certs2) == certificates_to_jsonl(certs)


def test_seeded_random_fill():
    cfg = BuildConfig(stage_budget=2, fill_policy="seeded-random", seed=3)
    a, ca = build_theorem_a(cfg)
    b, _ = build_theorem_a(cfg)
    c, _ = build_theorem_a(BuildConfig(stage_budget=2, fill_policy="seeded-random", seed=4))
    assert all(x.passed for x in ca)
    assert a.to_text() == b.to_text() != c.to_text()
    assert a.metadata["config"]["fill_policy"] == "seeded-random"


def test_hand_made_t3_violation():
    word = np.zeros(30, dtype=np.int8)
    word[np.gcd(np.arange(30), 30) == 1] = HOLE
    word[4] = HOLE  # even position while 2 | 30
    skel = ToeplitzSkeleton(("0", "1"), (30,), (word,))
    cert = validate_stage(skel, 1, "A", BuildConfig())
    assert cert.failed() == ["t3"]
    assert "t4" in cert.conditions() and "t5" in cert.conditions()
    assert cert.check("t3").lhs == 1


def test_validate_stage_errors(theorem_a):
    skel, _ = theorem_a
    with pytest.raises(ValueError):
        validate_stage(skel, 1, "B")
    with pytest.raises(ContractError):
        validate_stage(skel, 4, "A")


def test_certificate_records(theorem_a):
    _, certs = theorem_a
    lines = certificates_to_jsonl(certs).splitlines()
    assert len(lines) == sum(len(c.checks) for c in certs)
    recs = [json.loads(x) for x in lines]
    t2 = next(r for r in recs if r["condition"] == "t2")
    assert t2["lhs"] == "16/77" and Fraction(t2["rhs"]) == Fraction(17, 20) ** 2
    log_rec = next(r for r in recs if r["condition"] == "t6++a")
    assert "natural" in log_rec["note"]
    assert all(set(r) == {"stage", "theorem", "condition", "lhs", "relation", "rhs", "passed", "note"} for r in recs)
    assert isinstance(certs[0], StageCertificate)


def test_lemma_checks_independently(theorem_a):
    skel, _ = theorem_a
    n1, n2 = skel.periods[:2]
    k = n2 // n1
    cop2 = [a for a in range(n2) if math.gcd(a, n2) == 1]
    assert all(math.gcd(a % n1, n1) == 1 for a in cop2)
    for a in [a for a in range(n1) if math.gcd(a, n1) == 1]:
        assert sum(1 for j in range(k) if math.gcd(a + j * n1, n2) == 1) == euler_phi(k)


# -------------------------------------------------------------------- SPNT


def test_spnt_squares_and_certificates(spnt):
    skel, certs = spnt
    assert all(is_perfect_square(n) for n in skel.periods)
    assert len(certs) == skel.n_stages - 1 >= 1
    assert all(c.passed for c in certs)


def test_spnt_noncoprime_mass(spnt):
    skel, certs = spnt
    cfg = BuildConfig.from_dict(skel.metadata["config"])
    for cert in certs:
        n, prev = skel.period(cert.stage), skel.period(cert.stage - 1)
        table = table_for(n)
        mass = semiprime_noncoprime_count(table, n, prev, mode="ordered")
        assert cert.check("noncoprime").lhs == mass
        assert mass <= cfg.noncoprime_fraction * semiprime_pi(table, n)


def test_spnt_gap(spnt):
    skel, _ = spnt
    cfg = BuildConfig.from_dict(skel.metadata["config"])
    gaps = [g for _, _, g in oscillation_witness(skel, "semiprimes") if g is not None]
    assert min(gaps) >= cfg.oscillation_target


def test_spnt_strict_constants_fail_at_base():
    with pytest.raises(CertificateError) as info:
        build_spnt_counterexample(BuildConfig.strict())
    assert info.value.stage == 1 and info.value.condition == "t5a"


def test_spnt_needs_square_initial_modulus():
    with pytest.raises(ContractError):
        build_spnt_counterexample(BuildConfig.spnt_desk(initial_modulus=30))


# ----------------------------------------------------------------- squares


def test_squares_beta():
    assert squares_beta((2, 3, 5)) == Fraction(1, 60)


def test_squares_build(squares):
    skel, certs = squares
    assert skel.periods == (5, 640, 12597120)
    assert skel.metadata["beta"] == "1/60"
    for cert in certs:
        assert cert.passed
        assert cert.check("growth").lhs >= 16 * skel.period(cert.stage - 1) ** 2
    for t in range(1, skel.n_stages + 1):
        cert = validate_stage(skel, t, "squares")
        assert cert.passed
        n = skel.period(t)
        m = np.arange(math.isqrt(n - 1) + 1)
        count = int(np.count_nonzero(skel.word(t)[m * m] == HOLE))
        assert count**2 >= Fraction(1, 60) ** 2 * n


def test_squares_single_stage():
    skel, certs = build_squares_counterexample(BuildConfig(stage_budget=1))
    assert skel.n_stages == 1 and certs == []
    assert validate_stage(skel, 1, "squares").passed


def test_squares_support_exhausted():
    with pytest.raises(BuildError) as info:
        build_squares_counterexample(BuildConfig(stage_budget=4, prime_support=(5, 2)))
    assert info.value.condition == "support"


def test_squares_empty_support():
    with pytest.raises(ContractError):
        build_squares_counterexample(BuildConfig(prime_support=()))


# ----------------------------------------------------------------- bounded


def test_bounded_powers_of_two():
    skel = build_bounded_holes(2, [2**k for k in range(1, 11)], 1)
    assert [skel.hole_count(t) for t in range(1, 11)] == [1] * 10
    ratios = [r.per_phi for r in hole_report(skel).rows]
    assert all(b < a for a, b in zip(ratios, ratios[1:]))
    assert all(tower_diameter(skel, t) <= 3 for t in range(1, 11))
    assert skel.check_consistency() == []


def test_bounded_family(bounded):
    assert [bounded.hole_count(t) for t in range(1, 5)] == [1, 1, 1, 1]
    assert bounded.metadata["fallback_stages"] == []
    for t in range(1, 5):
        assert (np.gcd(bounded.holes(t), bounded.period(t)) == 1).all()
        assert validate_stage(bounded, t, "bounded").passed


def test_bounded_rejects_bad_input():
    with pytest.raises(ContractError):
        build_bounded_holes(2, [4, 6], 1)
    with pytest.raises(ContractError):
        build_bounded_holes(2, [4, 8], 0)


def test_bounded_many_holes():
    skel = build_bounded_holes(3, [6, 36, 216], 4, seed=9)
    assert all(skel.hole_count(t) <= 4 for t in (1, 2, 3))
    assert skel.check_consistency() == []
    F = ObservableSpec.constant(1.0, alphabet_size=3)
    assert F.sup_norm == 1.0
