#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "choirlab/mfeval.hpp"
#include "oracles.hpp"

using namespace choirlab;

namespace {

std::vector<double> random_pitch_set(std::mt19937_64& rng, int max_size) {
    const int n = static_cast<int>(rng() % static_cast<std::uint64_t>(max_size + 1));
    std::vector<double> set(static_cast<std::size_t>(n));
    for (auto& f : set)
        f = 80.0 + (1000.0 - 80.0) * static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return set;
}

MultiF0Sequence random_sequence(std::mt19937_64& rng, std::size_t n_frames, int max_size) {
    MultiF0Sequence seq;
    for (std::size_t n = 0; n < n_frames; ++n) {
        seq.timestamps.push_back(0.01 * static_cast<double>(n));
        seq.frames.push_back(random_pitch_set(rng, max_size));
    }
    return seq;
}

}  // namespace

TEST_CASE("match_frame identity and simple mixes") {
    EvalConfig cfg;
    SUBCASE("exact match") {
        const auto counts = match_frame({220.0}, {220.0}, cfg);
        CHECK(counts.tp == 1);
        CHECK(counts.fp == 0);
        CHECK(counts.fn == 0);
    }
    SUBCASE("one hit one miss one false alarm") {
        // 222 vs 220 is ~15.7 cents (hit); 440 vs 330 is ~498 cents (no hit)
        const auto counts = match_frame({220.0, 330.0}, {222.0, 440.0}, cfg);
        CHECK(counts.tp == 1);
        CHECK(counts.fp == 1);
        CHECK(counts.fn == 1);
        CHECK(counts.tp == oracles::exhaustive_matching_tp({220.0, 330.0}, {222.0, 440.0},
                                                           cfg.tolerance_cents, false));
    }
    SUBCASE("empty sets are fine") {
        const auto counts = match_frame({}, {}, cfg);
        CHECK(counts.tp == 0);
        CHECK(counts.n_ref == 0);
        CHECK(counts.n_est == 0);
    }
    SUBCASE("sets beyond 16 pitches are rejected") {
        std::vector<double> too_many(17, 220.0);
        CHECK_THROWS_AS(match_frame(too_many, {220.0}, cfg), std::invalid_argument);
    }
    SUBCASE("dense 16x16 unison frames stay fast and exact") {
        const std::vector<double> ref(16, 220.0);
        const std::vector<double> est(16, 221.0);
        const auto counts = match_frame(ref, est, cfg);
        CHECK(counts.tp == 16);
        CHECK(counts.fp == 0);
        CHECK(counts.fn == 0);
    }
}

TEST_CASE("chroma folds octaves") {
    EvalConfig cfg;
    cfg.chroma = true;
    CHECK(match_frame({220.0}, {440.0}, cfg).tp == 1);
    CHECK(match_frame({220.0}, {110.0}, cfg).tp == 1);
    CHECK(match_frame({220.0}, {880.0}, cfg).tp == 1);  // two octaves fold too
    cfg.chroma = false;
    CHECK(match_frame({220.0}, {440.0}, cfg).tp == 0);
}

TEST_CASE("matching equals the exhaustive oracle on random frames") {
    EvalConfig cfg;
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 500; ++trial) {
        const auto ref = random_pitch_set(rng, 6);
        const auto est = random_pitch_set(rng, 6);
        for (bool chroma : {false, true}) {
            cfg.chroma = chroma;
            const int got = match_frame(ref, est, cfg).tp;
            const int expected =
                oracles::exhaustive_matching_tp(ref, est, cfg.tolerance_cents, chroma);
            REQUIRE(got == expected);
        }
    }
}

TEST_CASE("exhaustive matching dominates greedy; greedy can undercount") {
    EvalConfig cfg;
    std::mt19937_64 rng(77);
    for (int trial = 0; trial < 300; ++trial) {
        const auto ref = random_pitch_set(rng, 6);
        const auto est = random_pitch_set(rng, 6);
        const int exhaustive = match_frame(ref, est, cfg).tp;
        const int greedy = oracles::greedy_matching_tp(ref, est, cfg.tolerance_cents, false);
        REQUIRE(exhaustive >= greedy);
    }
    // the adversarial shape: the globally closest pair steals the only
    // possible partner of the other reference pitch
    const std::vector<double> ref = {200.0, 206.0};
    const std::vector<double> est = {201.0, 195.0};
    CHECK(oracles::greedy_matching_tp(ref, est, cfg.tolerance_cents, false) == 1);
    CHECK(match_frame(ref, est, cfg).tp == 2);  // the maximum matching is authoritative
    CHECK(oracles::exhaustive_matching_tp(ref, est, cfg.tolerance_cents, false) == 2);
}

TEST_CASE("chroma tp dominates plain tp") {
    std::mt19937_64 rng(31);
    EvalConfig plain, chroma;
    chroma.chroma = true;
    for (int trial = 0; trial < 200; ++trial) {
        const auto ref = random_pitch_set(rng, 6);
        const auto est = random_pitch_set(rng, 6);
        CHECK(match_frame(ref, est, chroma).tp >= match_frame(ref, est, plain).tp);
    }
}

TEST_CASE("tp is stable under sub-half-tolerance shifts of isolated pitches") {
    // pitches spaced > 2*tolerance apart, estimate shifted < tolerance/2
    EvalConfig cfg;
    const std::vector<double> ref = {100.0, 150.0, 300.0, 700.0};
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> est;
        for (double r : ref) {
            const double shift_cents =
                (static_cast<double>(rng() >> 11) * 0x1.0p-53 - 0.5) * cfg.tolerance_cents;
            est.push_back(r * std::exp2(shift_cents / 1200.0));
        }
        CHECK(match_frame(ref, est, cfg).tp == 4);
    }
}

TEST_CASE("score: identical sequences are perfect") {
    std::mt19937_64 rng(55);
    const MultiF0Sequence ref = random_sequence(rng, 40, 4);
    const EvalReport report = score(ref, ref, EvalConfig{});
    CHECK(report.precision == 1.0);
    CHECK(report.recall == 1.0);
    CHECK(report.accuracy == 1.0);
    CHECK(report.e_sub == 0.0);
    CHECK(report.e_miss == 0.0);
    CHECK(report.e_fa == 0.0);
    CHECK(report.e_tot == 0.0);
    CHECK(report.chroma_accuracy == 1.0);
}

TEST_CASE("score: dropping one of two pitches per frame") {
    MultiF0Sequence ref, est;
    for (int n = 0; n < 25; ++n) {
        ref.timestamps.push_back(0.01 * n);
        ref.frames.push_back({220.0, 330.0});
        est.timestamps.push_back(0.01 * n);
        est.frames.push_back({220.0});
    }
    const EvalReport report = score(ref, est, EvalConfig{});
    CHECK(report.recall == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(report.e_miss == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(report.e_sub == 0.0);
    CHECK(report.e_fa == 0.0);
    CHECK(report.e_tot == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(report.precision == 1.0);
}

TEST_CASE("score: error identity E_tot = E_sub + E_miss + E_fa") {
    std::mt19937_64 rng(123);
    for (int trial = 0; trial < 30; ++trial) {
        const MultiF0Sequence ref = random_sequence(rng, 30, 5);
        const MultiF0Sequence est = random_sequence(rng, 30, 5);
        const EvalReport r = score(ref, est, EvalConfig{});
        CHECK(std::abs(r.e_tot - (r.e_sub + r.e_miss + r.e_fa)) < 1e-12);
        CHECK(std::abs(r.chroma_e_tot - (r.chroma_e_sub + r.chroma_e_miss + r.chroma_e_fa)) < 1e-12);
        CHECK(r.chroma_accuracy >= r.accuracy);
    }
}

TEST_CASE("score: nearest-frame alignment with half-hop cutoff") {
    MultiF0Sequence ref;
    ref.timestamps = {0.0, 0.1, 0.2, 0.3};
    ref.frames = {{220.0}, {220.0}, {220.0}, {220.0}};

    // estimate on a slightly shifted grid still aligns
    MultiF0Sequence est;
    est.timestamps = {0.04, 0.14, 0.24};
    est.frames = {{220.0}, {220.0}, {220.0}};
    const EvalReport aligned = score(ref, est, EvalConfig{});
    CHECK(aligned.recall == doctest::Approx(0.75).epsilon(1e-15));

    // estimate too far from every ref timestamp pairs with empty frames
    MultiF0Sequence far;
    far.timestamps = {0.36};
    far.frames = {{220.0}};
    const EvalReport unaligned = score(ref, far, EvalConfig{});
    CHECK(unaligned.recall == 0.0);
    CHECK(unaligned.e_miss == 1.0);
}

TEST_CASE("score rejects an empty reference") {
    CHECK_THROWS_AS(score(MultiF0Sequence{}, MultiF0Sequence{}, EvalConfig{}), std::invalid_argument);
}
