"""Tests for bit tables, sparsity reports, benchmarks, attacks and randomness tests."""

import hashlib
import math

import numpy as np
import pytest

from h2b.analysis import (
    AttackKind,
    BodyScenario,
    agreement_rate,
    benchmark_reconciliation,
    binary_entropy,
    bit_table,
    parallel_map,
    quantized_pairs,
    randomness_suite,
    simulate_passive_attack,
    simulate_presentation_attack,
    sketch_inversion_errors,
    sparsity_histogram,
)
from h2b.analysis.nist import (
    approximate_entropy,
    block_frequency,
    cumulative_sums,
    monobit,
    runs,
)
from h2b.errors import ParameterError
from h2b.quantizer import BitKey
from h2b.signalgen import HeartModel


def key(bits, width=1):
    return BitKey(np.asarray(bits, dtype=np.uint8), width, (1, width))


def hash_stream(seed, n_bits):
    """SHA-256 in counter mode as a seeded known-good bit source."""
    blocks = (hashlib.sha256(seed.to_bytes(8, "big") + i.to_bytes(8, "big")).digest()
              for i in range((n_bits + 255) // 256))
    return np.unpackbits(np.frombuffer(b"".join(blocks), dtype=np.uint8))[:n_bits]


def as_bits(text):
    return np.array([int(c) for c in text])


class TestBinaryEntropy:
    """Binary entropy helper."""

    def test_values(self):
        """Test H(0) = H(1) = 0, H(0.5) = 1 and H(0.11) ≈ 0.5."""
        np.testing.assert_allclose(binary_entropy([0, 1, 0.5]), [0, 0, 1])
        assert binary_entropy(0.11) == pytest.approx(0.4999, abs=1e-3)


class TestBitTable:
    """Per-bit entropy and mismatch tables."""

    def test_all_zero(self):
        """Test that all-zero keys have zero entropy and mismatch."""
        z = key(np.zeros(60), 6)
        stats = bit_table([(z, z)] * 5, 6)
        assert not stats.per_bit_entropy.any() and not stats.per_bit_mismatch.any()

    def test_independent_random(self):
        """Test entropy ≈ 1 and mismatch ≈ 0.5 for 10^4 independent pairs, ±0.02."""
        rng = np.random.default_rng(0)
        pairs = [(key(rng.integers(0, 2, 6), 6), key(rng.integers(0, 2, 6), 6))
                 for _ in range(10_000)]
        stats = bit_table(pairs, 6)
        np.testing.assert_allclose(stats.per_bit_entropy, 1.0, atol=0.02)
        np.testing.assert_allclose(stats.per_bit_mismatch, 0.5, atol=0.02)

    def test_bit_one_is_lsb(self):
        """Test that row 1 describes the last character of each word."""
        a = key([0, 0, 0, 0, 0, 0], 6)
        b = key([0, 0, 0, 0, 0, 1], 6)
        stats = bit_table([(a, b)], 6)
        assert stats.rows()[0] == (1, 0.5 * 0 + binary_entropy(0.5).item(), 1.0)
        assert stats.per_bit_mismatch[1:].sum() == 0

    def test_csv(self):
        """Test the CSV header and row count."""
        z = key(np.zeros(6), 6)
        lines = bit_table([(z, z)], 6).to_csv().splitlines()
        assert lines[0] == "bit,entropy,mismatch" and len(lines) == 7

    def test_empty(self):
        """Test that an empty pair list is rejected."""
        with pytest.raises(ParameterError):
            bit_table([], 6)


@pytest.fixture(scope="module")
def pipeline_table():
    return bit_table(quantized_pairs(60, seed=3), 6)


class TestBitStructure:
    """Per-bit behaviour of the default synthetic pipeline."""

    def test_kept_band(self, pipeline_table):
        """Test that bits 4..6 have entropy >= 0.95 and mismatch <= 20%."""
        assert np.all(pipeline_table.per_bit_entropy[3:] >= 0.95)
        assert np.all(pipeline_table.per_bit_mismatch[3:] <= 0.20)

    def test_low_bits_noisy(self, pipeline_table):
        """Test that bits 1 and 2 mismatch more than 30% of the time."""
        assert np.all(pipeline_table.per_bit_mismatch[:2] > 0.30)

    @pytest.mark.xfail(strict=True, reason=(
        "At the calibration that pairs >= 90% of chest-waist sessions, bit 3 "
        "mismatches about 25%; pushing it past 30% needs timing noise that breaks pairing"))
    def test_bit_three_noisy(self, pipeline_table):
        """Test that bit 3 also mismatches more than 30% of the time."""
        assert pipeline_table.per_bit_mismatch[2] > 0.30

    def test_monotone_lsb_to_msb(self, pipeline_table):
        """Test that mismatch does not increase from bit 1 to bit 6."""
        e = pipeline_table.per_bit_mismatch
        assert np.all(np.diff(e) <= 0)


@pytest.fixture(scope="module")
def default_report():
    return sparsity_histogram(100, seed=2)


class TestSparsityHistogram:
    """Mismatch, key and attacker sparsity per trial."""

    def test_noise_free(self):
        """Test that noise-free sensors never mismatch."""
        rep = sparsity_histogram(100, scenario=BodyScenario(noise_free=True), seed=1)
        assert rep.failed == 0
        assert not rep.s_mismatch.any() and not rep.p_threshold.any()


    def test_default_fraction(self, default_report):
        """Test that fewer than 15% of default trials have P >= 50."""
        assert default_report.trials >= 95
        assert default_report.fraction_not_effective < 0.15

    def test_attacker_near_half(self, default_report):
        """Test that an independent user's mismatch clusters around N/2 = 64."""
        s = default_report.s_attacker
        assert abs(s.mean() - 64) < 3
        assert np.mean(np.abs(s - 64) <= 16) >= 0.95

    def test_q_is_minimum(self, default_report):
        """Test that Q is min(S_key, S_attacker) and P follows S·log2(N/S)."""
        r = default_report
        np.testing.assert_array_equal(r.q_threshold, np.minimum(r.s_key, r.s_attacker))
        s = r.s_mismatch
        expected = np.where(s > 0, s * np.log2(128 / np.maximum(s, 1)), 0.0)
        np.testing.assert_allclose(r.p_threshold, expected)

    def test_csv(self, default_report):
        """Test one CSV row per trial."""
        assert len(default_report.to_csv().splitlines()) == default_report.trials + 1

    def test_minimum_trials(self):
        """Test that fewer than 100 trials are rejected."""
        with pytest.raises(ParameterError):
            sparsity_histogram(99)


class TestBenchmark:
    """CS against RS(15, 3) at fixed mismatch rates."""

    @pytest.mark.parametrize("method", ["cs", "rs"])
    def test_no_mismatch(self, method):
        """Test that zero mismatch always reconciles."""
        assert benchmark_reconciliation(method, mismatch_rate=0.0, trials=50).success_rate == 1.0

    def test_cs_ten_percent(self):
        """Test CS >= 0.95 and RS lower by >= 0.30 at 10% mismatch over 500 trials."""
        cs = benchmark_reconciliation("cs", mismatch_rate=0.1, trials=500, seed=0)
        rs = benchmark_reconciliation("rs", mismatch_rate=0.1, trials=500, seed=0)
        assert cs.success_rate >= 0.95
        assert cs.success_rate - rs.success_rate >= 0.30

    def test_deterministic(self):
        """Test that the same seed reproduces the CSV byte for byte."""
        a = benchmark_reconciliation("cs", mismatch_rate=0.15, trials=60, seed=7).to_csv()
        b = benchmark_reconciliation("cs", mismatch_rate=0.15, trials=60, seed=7).to_csv()
        assert a == b

    def test_thread_independent(self):
        """Test that the thread count does not change any outcome."""
        a = benchmark_reconciliation("rs", mismatch_rate=0.1, trials=80, seed=5, threads=1)
        b = benchmark_reconciliation("rs", mismatch_rate=0.1, trials=80, seed=5, threads=4)
        assert a.outcomes == b.outcomes

    def test_csv_shape(self):
        """Test the CSV header and the exact flip count."""
        res = benchmark_reconciliation("cs", mismatch_rate=0.1, trials=3)
        lines = res.to_csv().splitlines()
        assert lines[0] == "trial,method,n,m,flips,success"
        assert all(line.split(",")[4] == "13" for line in lines[1:])

    @pytest.mark.parametrize("kwargs", [dict(trials=0), dict(mismatch_rate=1.5)])
    def test_invalid(self, kwargs):
        """Test that bad trial counts and rates are rejected."""
        with pytest.raises(ParameterError):
            benchmark_reconciliation("cs", **kwargs)

    def test_parallel_map_order(self):
        """Test that parallel_map keeps input order."""
        assert parallel_map(lambda x: x * x, range(20), threads=4) == [x * x for x in range(20)]


class TestAttacks:
    """Passive and presentation attackers."""

    def test_same_model_different_people(self):
        """Test that two people with identical heart statistics never pair."""
        rep = simulate_passive_attack([HeartModel(seed=1), HeartModel(seed=2)], trials=20)
        assert rep.success_count == 0 and rep.trials == 20

    def test_ten_users(self):
        """Test zero successes and agreement below 0.85 over all 90 cross-pairs."""
        users = [HeartModel(mean_ipi=800 + 10 * i, seed=i) for i in range(10)]
        rep = simulate_passive_attack(users, seed=4)
        assert rep.trials == 90
        assert rep.success_count == 0
        assert rep.max_agreement < 0.85

    def test_self_pairing_control(self):
        """Test that a key agrees with itself exactly."""
        k = key(np.random.default_rng(0).integers(0, 2, 128))
        assert agreement_rate(k, k) == 1.0

    def test_presentation(self):
        """Test that replaying an earlier recording never pairs."""
        rep = simulate_presentation_attack(HeartModel(ar_coefficient=0.5, seed=3), trials=40)
        assert rep.kind is AttackKind.PRESENTATION
        assert rep.success_count == 0
        assert np.all((0 <= rep.agreement_rates) & (rep.agreement_rates <= 1))

    def test_degenerate_excluded(self):
        """Test that a zero-variance heart is excluded without trials."""
        rep = simulate_presentation_attack(HeartModel(ipi_std=0.0))
        assert rep.excluded and rep.trials == 0 and rep.success_count == 0

    def test_single_user_rejected(self):
        """Test that a passive attack needs two distinct users."""
        with pytest.raises(ParameterError):
            simulate_passive_attack([HeartModel(seed=1)] * 3)

    def test_confidence_interval(self):
        """Test that the 95% interval is centred on the mean with half-width 1.96·s/√k."""
        rep = simulate_passive_attack([HeartModel(seed=1), HeartModel(seed=2)], trials=10)
        lo, hi = rep.confidence_interval()
        rates = rep.agreement_rates
        half = 1.959963984540054 * rates.std(ddof=1) / math.sqrt(rates.size)
        assert lo == pytest.approx(rates.mean() - half) and hi == pytest.approx(rates.mean() + half)
        doc = rep.to_json()
        assert doc["kind"] == "passive" and doc["success_count"] == 0

    def test_sketch_inversion(self):
        """Test that ℓ1 inversion of balanced keys misses >= 25 bits in >= 95% of trials."""
        errors = sketch_inversion_errors(trials=60, seed=1)
        assert np.mean(errors >= 25) >= 0.95


PI_100 = ("1100100100001111110110101010001000100001011010001100"
          "001000110100110001001100011001100010100010111000")


class TestRandomness:
    """Five SP 800-22 tests against the published worked examples."""

    def test_monobit_examples(self):
        """Test the 10-bit and 100-bit monobit examples."""
        assert monobit(as_bits("1011010101")) == pytest.approx(0.527089, abs=1e-6)
        assert monobit(as_bits(PI_100)) == pytest.approx(0.109599, abs=1e-6)

    def test_block_frequency_examples(self):
        """Test the M = 3 and M = 10 block frequency examples."""
        assert block_frequency(as_bits("0110011010"), 3) == pytest.approx(0.801252, abs=1e-6)
        assert block_frequency(as_bits(PI_100), 10) == pytest.approx(0.706438, abs=1e-6)

    def test_runs_examples(self):
        """Test the runs examples."""
        assert runs(as_bits("1001101011")) == pytest.approx(0.147232, abs=1e-6)
        assert runs(as_bits(PI_100)) == pytest.approx(0.500798, abs=1e-6)

    def test_cusum_examples(self):
        """Test forward and reverse cumulative sums examples."""
        assert cumulative_sums(as_bits("1011010111")) == pytest.approx(0.4116588, abs=1e-6)
        assert cumulative_sums(as_bits(PI_100)) == pytest.approx(0.219194, abs=1e-6)
        assert cumulative_sums(as_bits(PI_100), reverse=True) == pytest.approx(0.114866, abs=1e-6)

    def test_approximate_entropy_examples(self):
        """Test the m = 3 and m = 2 approximate entropy examples."""
        assert approximate_entropy(as_bits("0100110101"), 3) == pytest.approx(0.261961, abs=1e-6)
        assert approximate_entropy(as_bits(PI_100), 2) == pytest.approx(0.235301, abs=1e-6)

    def test_exact_balance_monobit(self):
        """Test that an exactly balanced vector has monobit p = 1."""
        assert monobit(np.tile([0, 1], 500)) == 1.0

    def test_alternating_runs(self):
        """Test that perfect alternation fails the runs test."""
        assert runs(np.tile([0, 1], 5000)) < 0.01

    def test_all_zeros_monobit(self):
        """Test that all zeros fail the monobit test."""
        assert monobit(np.zeros(1000, dtype=int)) < 0.01

    @pytest.mark.parametrize("bits,failing", [
        (np.repeat(np.arange(10_000 // 128) % 2, 128), "block_frequency"),
        (np.r_[np.ones(5000, int), np.zeros(5000, int)], "cumulative_sums"),
        (np.tile([0, 0, 1, 1], 2500), "approximate_entropy"),
    ], ids=["blocky", "drift", "periodic"])
    def test_biased_inputs_fail(self, bits, failing):
        """Test that balanced but structured inputs fail the matching test."""
        assert monobit(bits) == 1.0
        assert randomness_suite(bits)[failing] < 0.01

    def test_known_good_source(self):
        """Test that a seeded SHA-256 stream passes all five tests."""
        p = randomness_suite(hash_stream(0, 20_000))
        assert set(p) == {"monobit", "block_frequency", "runs", "cumulative_sums",
                          "approximate_entropy"}
        assert min(p.values()) >= 0.01

    def test_false_alarm_rate(self):
        """Test that each test rejects about 1% of 100 known-good streams."""
        fails = dict.fromkeys(["monobit", "block_frequency", "runs", "cumulative_sums",
                               "approximate_entropy"], 0)
        for s in range(100):
            for name, p in randomness_suite(hash_stream(1000 + s, 10_000)).items():
                fails[name] += p < 0.01
        # Cusum takes the worse of two directions, so it may reject up to ~2%.
        assert all(v <= 6 for v in fails.values()), fails

    def test_minimum_length(self):
        """Test that the suite needs 1000 bits."""
        with pytest.raises(ParameterError):
            randomness_suite(np.zeros(999, dtype=int))

    def test_non_binary_rejected(self):
        """Test that values other than 0 and 1 are rejected."""
        with pytest.raises(ParameterError):
            monobit([0, 1, 2])
