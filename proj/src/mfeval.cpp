#include "choirlab/mfeval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>

#include "choirlab/pitch.hpp"

namespace choirlab {

namespace {

constexpr std::size_t kMaxSetSize = 16;

bool pitches_match(double ref_hz, double est_hz, double tolerance_cents, bool chroma) {
    const double interval = std::abs(kCentsPerOctave * std::log2(est_hz / ref_hz));
    if (!chroma) return interval <= tolerance_cents;
    const double folded = std::fmod(interval, kCentsPerOctave);
    return std::min(folded, kCentsPerOctave - folded) <= tolerance_cents;
}

// Exact maximum-cardinality matching: enumerate every assignment of the
// smaller side into the bigger side, memoized on (index, used-mask) so
// dense instances (e.g. 16 unison pitches against 16) stay cheap. Sets are
// capped at 16, so the table is at most 17 * 2^16 entries.
struct MatchSearch {
    const std::vector<std::uint32_t>& masks;
    std::size_t n_big;
    std::vector<std::int8_t> memo;

    explicit MatchSearch(const std::vector<std::uint32_t>& m, std::size_t big)
        : masks(m), n_big(big), memo((m.size() + 1) << big, -1) {}

    int run(std::size_t i, std::uint32_t used_big) {
        if (i == masks.size()) return 0;
        std::int8_t& slot = memo[(i << n_big) | used_big];
        if (slot >= 0) return slot;
        int best = run(i + 1, used_big);  // leave pitch i unmatched
        std::uint32_t avail = masks[i] & ~used_big;
        while (avail) {
            const std::uint32_t bit = avail & (~avail + 1);
            avail ^= bit;
            best = std::max(best, 1 + run(i + 1, used_big | bit));
        }
        slot = static_cast<std::int8_t>(best);
        return best;
    }
};

}  // namespace

void EvalConfig::validate() const {
    if (!(tolerance_cents > 0.0))
        throw std::invalid_argument("EvalConfig: tolerance_cents must be positive");
}

EvalCounts match_frame(const std::vector<double>& ref, const std::vector<double>& est,
                       const EvalConfig& cfg) {
    cfg.validate();
    if (ref.size() > kMaxSetSize || est.size() > kMaxSetSize)
        throw std::invalid_argument("match_frame: pitch sets are capped at 16 values");
    for (double f : ref)
        if (!(f > 0.0)) throw std::invalid_argument("match_frame: non-positive reference pitch");
    for (double f : est)
        if (!(f > 0.0)) throw std::invalid_argument("match_frame: non-positive estimate pitch");

    EvalCounts counts;
    counts.n_ref = static_cast<int>(ref.size());
    counts.n_est = static_cast<int>(est.size());

    // Enumerate over the smaller set so the used-mask stays narrow.
    const bool ref_small = ref.size() <= est.size();
    const auto& small = ref_small ? ref : est;
    const auto& big = ref_small ? est : ref;
    std::vector<std::uint32_t> masks(small.size(), 0);
    for (std::size_t i = 0; i < small.size(); ++i)
        for (std::size_t j = 0; j < big.size(); ++j) {
            const double r = ref_small ? small[i] : big[j];
            const double e = ref_small ? big[j] : small[i];
            if (pitches_match(r, e, cfg.tolerance_cents, cfg.chroma))
                masks[i] |= (1u << j);
        }
    counts.tp = MatchSearch(masks, big.size()).run(0, 0);
    counts.fp = counts.n_est - counts.tp;
    counts.fn = counts.n_ref - counts.tp;
    return counts;
}

namespace {

struct ErrorSums {
    long tp = 0, n_ref = 0, n_est = 0;
    long sub = 0, miss = 0, fa = 0, tot = 0;

    void add(const EvalCounts& c) {
        tp += c.tp;
        n_ref += c.n_ref;
        n_est += c.n_est;
        sub += std::min(c.n_ref, c.n_est) - c.tp;
        miss += std::max(0, c.n_ref - c.n_est);
        fa += std::max(0, c.n_est - c.n_ref);
        tot += std::max(c.n_ref, c.n_est) - c.tp;
    }
};

double ratio(long num, long den) { return den > 0 ? static_cast<double>(num) / den : 0.0; }

}  // namespace

EvalReport score(const MultiF0Sequence& ref, const MultiF0Sequence& est, const EvalConfig& cfg) {
    cfg.validate();
    if (ref.size() == 0) throw std::invalid_argument("score: empty reference sequence");
    ref.validate();
    est.validate();

    // Half-hop alignment cutoff; the reference hop is the median timestamp step.
    double ref_hop = std::numeric_limits<double>::infinity();
    if (ref.size() >= 2) {
        std::vector<double> steps(ref.size() - 1);
        for (std::size_t n = 1; n < ref.size(); ++n) steps[n - 1] = ref.timestamps[n] - ref.timestamps[n - 1];
        std::nth_element(steps.begin(), steps.begin() + steps.size() / 2, steps.end());
        ref_hop = steps[steps.size() / 2];
    }

    EvalConfig plain_cfg = cfg;
    plain_cfg.chroma = false;
    EvalConfig chroma_cfg = cfg;
    chroma_cfg.chroma = true;

    static const std::vector<double> kEmptyFrame;
    ErrorSums plain, chroma;
    long n_scored = 0;
    for (std::size_t n = 0; n < ref.size(); ++n) {
        const double t = ref.timestamps[n];
        // nearest estimate frame by timestamp
        const std::vector<double>* est_frame = &kEmptyFrame;
        if (est.size() > 0) {
            auto it = std::lower_bound(est.timestamps.begin(), est.timestamps.end(), t);
            std::size_t idx;
            if (it == est.timestamps.begin()) {
                idx = 0;
            } else if (it == est.timestamps.end()) {
                idx = est.size() - 1;
            } else {
                const std::size_t hi = static_cast<std::size_t>(it - est.timestamps.begin());
                idx = (t - est.timestamps[hi - 1] <= est.timestamps[hi] - t) ? hi - 1 : hi;
            }
            if (std::abs(est.timestamps[idx] - t) <= 0.5 * ref_hop) est_frame = &est.frames[idx];
        }
        if (ref.frames[n].empty() && est_frame->empty()) continue;
        ++n_scored;
        plain.add(match_frame(ref.frames[n], *est_frame, plain_cfg));
        chroma.add(match_frame(ref.frames[n], *est_frame, chroma_cfg));
    }

    EvalReport report;
    report.n_frames = n_scored;
    report.n_ref_total = plain.n_ref;
    report.n_est_total = plain.n_est;
    report.precision = ratio(plain.tp, plain.n_est);
    report.recall = ratio(plain.tp, plain.n_ref);
    report.accuracy = ratio(plain.tp, plain.n_ref + plain.n_est - plain.tp);
    report.e_sub = ratio(plain.sub, plain.n_ref);
    report.e_miss = ratio(plain.miss, plain.n_ref);
    report.e_fa = ratio(plain.fa, plain.n_ref);
    report.e_tot = ratio(plain.tot, plain.n_ref);
    report.chroma_precision = ratio(chroma.tp, chroma.n_est);
    report.chroma_recall = ratio(chroma.tp, chroma.n_ref);
    report.chroma_accuracy = ratio(chroma.tp, chroma.n_ref + chroma.n_est - chroma.tp);
    report.chroma_e_sub = ratio(chroma.sub, chroma.n_ref);
    report.chroma_e_miss = ratio(chroma.miss, chroma.n_ref);
    report.chroma_e_fa = ratio(chroma.fa, chroma.n_ref);
    report.chroma_e_tot = ratio(chroma.tot, chroma.n_ref);
    return report;
}

}  // namespace choirlab
