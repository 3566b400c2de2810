#pragma once

#include <vector>

#include "choirlab/annotations.hpp"

namespace choirlab {

struct EvalConfig {
    double tolerance_cents = 50.0;
    bool chroma = false;

    void validate() const;
};

/// Frame-level matching counts. fp = n_est - tp, fn = n_ref - tp.
struct EvalCounts {
    int tp = 0;
    int fp = 0;
    int fn = 0;
    int n_ref = 0;
    int n_est = 0;
};

/// Aggregated frame-level transcription metrics, plain and chroma.
/// Every ratio with a zero denominator is reported as 0.
struct EvalReport {
    double precision = 0, recall = 0, accuracy = 0;
    double e_sub = 0, e_miss = 0, e_fa = 0, e_tot = 0;
    double chroma_precision = 0, chroma_recall = 0, chroma_accuracy = 0;
    double chroma_e_sub = 0, chroma_e_miss = 0, chroma_e_fa = 0, chroma_e_tot = 0;
    long n_frames = 0;
    long n_ref_total = 0;
    long n_est_total = 0;
};

// Published frame-level error rates of the strongest 2019-era multi-f0
// system evaluated on 256-quartet SATB material; kept as reference points
// for regression fixtures, not reproduced by this toolkit.
inline constexpr double kVocalQuartetBenchmarkESub = 0.023;
inline constexpr double kVocalQuartetBenchmarkEMiss = 0.35;
inline constexpr double kVocalQuartetBenchmarkEFa = 0.004;
inline constexpr double kVocalQuartetBenchmarkETot = 0.38;

/// True-positive count of a maximum one-to-one matching between the two
/// pitch sets. A pair matches when |1200*log2(est/ref)| <= tolerance_cents;
/// in chroma mode the distance is taken on the 1200-cent circle instead.
/// The matching is computed exactly (sets are capped at 16 pitches).
EvalCounts match_frame(const std::vector<double>& ref, const std::vector<double>& est,
                       const EvalConfig& cfg);

/// Scores an estimate against a reference. Estimate frames are aligned to
/// reference timestamps by nearest-time lookup within half the reference
/// hop; reference timestamps with no estimate nearby pair with an empty
/// frame. Frames where both sets are empty contribute nothing.
EvalReport score(const MultiF0Sequence& ref, const MultiF0Sequence& est, const EvalConfig& cfg);

}  // namespace choirlab
