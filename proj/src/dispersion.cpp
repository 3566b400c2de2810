#include "choirlab/dispersion.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace choirlab {

namespace {

constexpr double kDbFloor = -600.0;      // stands in for log(0)
constexpr double kCollisionCents = 1.0;  // two sections on one peak

double to_db(double magnitude, double frame_max) {
    if (!(magnitude > 0.0)) return kDbFloor;
    return std::max(kDbFloor, 20.0 * std::log10(magnitude / frame_max));
}

// Running median of `values` with an odd span, truncated at the edges.
// Insertion into a sorted window keeps this O(n * span) worst case but far
// cheaper in practice than re-sorting per bin.
Eigen::ArrayXd running_median(const Eigen::ArrayXd& values, int span) {
    const Eigen::Index n = values.size();
    const Eigen::Index half = span / 2;
    Eigen::ArrayXd out(n);
    std::vector<double> window;
    window.reserve(static_cast<std::size_t>(span));
    Eigen::Index lo = 0, hi = -1;  // current window [lo, hi]
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::Index want_lo = std::max<Eigen::Index>(0, i - half);
        const Eigen::Index want_hi = std::min<Eigen::Index>(n - 1, i + half);
        while (hi < want_hi) {
            ++hi;
            window.insert(std::lower_bound(window.begin(), window.end(), values[hi]), values[hi]);
        }
        while (lo < want_lo) {
            window.erase(std::lower_bound(window.begin(), window.end(), values[lo]));
            ++lo;
        }
        const std::size_t m = window.size();
        out[i] = (m % 2 == 1) ? window[m / 2] : 0.5 * (window[m / 2 - 1] + window[m / 2]);
    }
    return out;
}

}  // namespace

void DispersionConfig::validate() const {
    if (!(search_half_width_cents > 0.0))
        throw std::invalid_argument("DispersionConfig: search_half_width_cents must be positive");
    if (!(db_drop > 0.0)) throw std::invalid_argument("DispersionConfig: db_drop must be positive");
    if (median_envelope_bins < 1 || median_envelope_bins % 2 == 0)
        throw std::invalid_argument("DispersionConfig: median_envelope_bins must be a positive odd integer");
    if (!(ref_hz > 0.0)) throw std::invalid_argument("DispersionConfig: ref_hz must be positive");
}

const char* to_string(SkipReason reason) {
    switch (reason) {
        case SkipReason::UnvoicedAnchor: return "unvoiced";
        case SkipReason::NoAlignedFrame: return "no_aligned_frame";
        case SkipReason::NoPeakInWindow: return "no_peak";
        case SkipReason::BandwidthUndefined: return "no_bandwidth";
        case SkipReason::Collision: return "collision";
    }
    return "?";
}

std::map<SkipReason, int> DispersionTrack::skip_counts() const {
    std::map<SkipReason, int> counts;
    for (const FrameSkip& s : skips) ++counts[s.reason];
    return counts;
}

Eigen::ArrayXd whiten_frame(const Eigen::ArrayXd& magnitudes, const DispersionConfig& cfg) {
    cfg.validate();
    const double frame_max = magnitudes.maxCoeff();
    Eigen::ArrayXd db(magnitudes.size());
    if (!(frame_max > 0.0)) {
        db.setConstant(kDbFloor);
        return db;
    }
    for (Eigen::Index i = 0; i < magnitudes.size(); ++i) db[i] = to_db(magnitudes[i], frame_max);
    if (cfg.whitening == Whitening::MedianEnvelope)
        db -= running_median(db, cfg.median_envelope_bins);
    return db;
}

InterpolatedPeak interpolate_peak(double alpha_db, double beta_db, double gamma_db, double bin_hz,
                                  Eigen::Index k) {
    if (beta_db < alpha_db || beta_db < gamma_db)
        throw std::invalid_argument("interpolate_peak: centre bin is not a local maximum");
    const double denom = alpha_db - 2.0 * beta_db + gamma_db;
    double p = 0.0;
    if (denom != 0.0) p = 0.5 * (alpha_db - gamma_db) / denom;
    p = std::clamp(p, -0.5, 0.5);
    InterpolatedPeak peak;
    peak.bin = static_cast<double>(k) + p;
    peak.freq_hz = peak.bin * bin_hz;
    peak.amp_db = beta_db - 0.25 * (alpha_db - gamma_db) * p;
    return peak;
}

std::optional<InterpolatedPeak> locate_peak(const Eigen::ArrayXd& db_frame, double bin_hz,
                                            double anchor_hz, const DispersionConfig& cfg) {
    cfg.validate();
    if (!(anchor_hz > 0.0)) throw std::invalid_argument("locate_peak: anchor must be voiced (> 0 Hz)");
    if (!(bin_hz > 0.0)) throw std::invalid_argument("locate_peak: bin_hz must be positive");

    const double lo_hz = anchor_hz * std::exp2(-cfg.search_half_width_cents / kCentsPerOctave);
    const double hi_hz = anchor_hz * std::exp2(cfg.search_half_width_cents / kCentsPerOctave);
    // candidate bins need both neighbours, so stay off the spectrum edges
    const Eigen::Index lo_bin = std::max<Eigen::Index>(1, static_cast<Eigen::Index>(std::ceil(lo_hz / bin_hz)));
    const Eigen::Index hi_bin =
        std::min<Eigen::Index>(db_frame.size() - 2, static_cast<Eigen::Index>(std::floor(hi_hz / bin_hz)));
    if (lo_bin > hi_bin)
        throw std::invalid_argument("locate_peak: search window around " + std::to_string(anchor_hz) +
                                    " Hz does not intersect the spectrum");

    Eigen::Index best = -1;
    for (Eigen::Index k = lo_bin; k <= hi_bin; ++k) {
        const double a = db_frame[k - 1], b = db_frame[k], g = db_frame[k + 1];
        const bool local_max = b >= a && b >= g && (b > a || b > g);
        if (local_max && (best < 0 || b > db_frame[best])) best = k;
    }
    if (best < 0) return std::nullopt;
    return interpolate_peak(db_frame[best - 1], db_frame[best], db_frame[best + 1], bin_hz, best);
}

namespace {

// One-sided threshold crossing. `step` is +1 (towards b2) or -1 (towards
// b1). Returns the crossing position in fractional bins, or nullopt when
// the curve never reaches the threshold before the spectrum edge.
std::optional<std::pair<double, bool>> walk_to_crossing(const Eigen::ArrayXd& db_frame,
                                                        const InterpolatedPeak& peak,
                                                        double threshold_db, int step) {
    const Eigen::Index n = db_frame.size();
    const Eigen::Index k0 =
        static_cast<Eigen::Index>(step > 0 ? std::ceil(peak.bin) : std::floor(peak.bin));

    double prev_pos = peak.bin;
    double prev_db = peak.amp_db;
    for (Eigen::Index j = k0; j >= 0 && j < n; j += step) {
        const double cur = db_frame[j];
        if (cur < threshold_db) {
            // linear interpolation between the last point above and this bin
            const double frac = (prev_db - threshold_db) / (prev_db - cur);
            return std::pair{prev_pos + frac * (static_cast<double>(j) - prev_pos), false};
        }
        // rising again above the threshold: merged with the neighbouring peak
        if (static_cast<double>(j) != prev_pos && cur > prev_db)
            return std::pair{prev_pos, true};
        prev_pos = static_cast<double>(j);
        prev_db = cur;
    }
    return std::nullopt;
}

}  // namespace

std::optional<Bandwidth> measure_bandwidth(const Eigen::ArrayXd& db_frame, double bin_hz,
                                           const InterpolatedPeak& peak,
                                           const DispersionConfig& cfg) {
    cfg.validate();
    const double threshold = peak.amp_db - cfg.db_drop;
    const auto left = walk_to_crossing(db_frame, peak, threshold, -1);
    const auto right = walk_to_crossing(db_frame, peak, threshold, +1);
    if (!left || !right) return std::nullopt;

    Bandwidth bw;
    bw.b1_hz = left->first * bin_hz;
    bw.b2_hz = right->first * bin_hz;
    bw.merged = left->second || right->second;
    if (!(bw.b1_hz > 0.0) || !(bw.b2_hz > bw.b1_hz)) return std::nullopt;
    bw.dispersion_cents = kCentsPerOctave * std::log2(bw.b2_hz / bw.b1_hz);
    return bw;
}

namespace {

struct PendingEstimate {
    Section section;
    Eigen::Index stft_frame;
    UnisonEstimate estimate;
};

}  // namespace

std::vector<DispersionTrack> analyze_unison(const AudioClip& clip,
                                            const std::map<Section, F0Track>& anchors,
                                            const StftConfig& stft_cfg,
                                            const DispersionConfig& disp_cfg) {
    disp_cfg.validate();
    if (anchors.empty()) throw std::invalid_argument("analyze_unison: no anchor tracks given");
    for (const auto& [section, track] : anchors) {
        (void)section;
        track.validate();
    }

    const Spectrogram spec = stft(clip, stft_cfg);
    const double half_hop = 0.5 * spec.hop_s;

    // whitened/dB frames computed on demand, shared across sections
    std::vector<Eigen::ArrayXd> db_frames(static_cast<std::size_t>(spec.num_frames()));
    std::vector<bool> db_ready(static_cast<std::size_t>(spec.num_frames()), false);
    auto db_frame = [&](Eigen::Index k) -> const Eigen::ArrayXd& {
        auto idx = static_cast<std::size_t>(k);
        if (!db_ready[idx]) {
            db_frames[idx] = whiten_frame(spec.magnitudes.col(k), disp_cfg);
            db_ready[idx] = true;
        }
        return db_frames[idx];
    };

    std::vector<DispersionTrack> tracks;
    std::vector<PendingEstimate> pending;
    bool any_aligned = false;

    for (const auto& [section, anchor] : anchors) {
        DispersionTrack track;
        track.section = section;
        for (Eigen::Index n = 0; n < anchor.size(); ++n) {
            const double t = anchor.time(n);
            const double f_anchor = anchor.frames[n];
            // nearest STFT frame centre
            const double pos = (t - spec.start_time_s) / spec.hop_s;
            const Eigen::Index k =
                std::clamp<Eigen::Index>(static_cast<Eigen::Index>(std::llround(pos)), 0,
                                         spec.num_frames() - 1);
            const bool aligned = std::abs(t - spec.frame_time(k)) <= half_hop;
            if (aligned) any_aligned = true;
            if (!anchor.voiced(n)) {
                track.skips.push_back({t, f_anchor, SkipReason::UnvoicedAnchor});
                continue;
            }
            if (!aligned) {
                track.skips.push_back({t, f_anchor, SkipReason::NoAlignedFrame});
                continue;
            }

            const auto peak = locate_peak(db_frame(k), spec.bin_hz, f_anchor, disp_cfg);
            // the vertex of an edge-bin parabola can land outside the search
            // window; such frames have no usable peak either
            if (!peak || std::abs(cents_between(f_anchor, peak->freq_hz)) >
                             disp_cfg.search_half_width_cents) {
                track.skips.push_back({t, f_anchor, SkipReason::NoPeakInWindow});
                continue;
            }
            const auto bw = measure_bandwidth(db_frame(k), spec.bin_hz, *peak, disp_cfg);
            if (!bw) {
                track.skips.push_back({t, f_anchor, SkipReason::BandwidthUndefined});
                continue;
            }
            UnisonEstimate est;
            est.frame_time = spec.frame_time(k);
            est.anchor_hz = f_anchor;
            est.mean_f0_hz = peak->freq_hz;
            est.peak_db = peak->amp_db;
            est.b1_hz = bw->b1_hz;
            est.b2_hz = bw->b2_hz;
            est.dispersion_cents = bw->dispersion_cents;
            est.merged = bw->merged;
            pending.push_back({section, k, est});
        }
        tracks.push_back(std::move(track));
    }
    if (!any_aligned)
        throw std::runtime_error("analyze_unison: anchor and frame timelines do not intersect");

    // cross-section collisions: estimates at the same STFT frame whose peaks
    // lie within 1 cent are dropped on both sides
    std::vector<bool> collided(pending.size(), false);
    for (std::size_t a = 0; a < pending.size(); ++a)
        for (std::size_t b = a + 1; b < pending.size(); ++b) {
            if (pending[a].section == pending[b].section) continue;
            if (pending[a].stft_frame != pending[b].stft_frame) continue;
            const double gap = std::abs(cents_between(pending[a].estimate.mean_f0_hz,
                                                      pending[b].estimate.mean_f0_hz));
            if (gap <= kCollisionCents) collided[a] = collided[b] = true;
        }

    for (std::size_t i = 0; i < pending.size(); ++i) {
        auto track = std::find_if(tracks.begin(), tracks.end(),
                                  [&](const DispersionTrack& tr) { return tr.section == pending[i].section; });
        if (collided[i]) {
            track->skips.push_back(
                {pending[i].estimate.frame_time, pending[i].estimate.anchor_hz, SkipReason::Collision});
        } else {
            track->estimates.push_back(pending[i].estimate);
        }
    }

    for (DispersionTrack& track : tracks) {
        std::stable_sort(track.estimates.begin(), track.estimates.end(),
                         [](const UnisonEstimate& x, const UnisonEstimate& y) {
                             return x.frame_time < y.frame_time;
                         });
        std::stable_sort(track.skips.begin(), track.skips.end(),
                         [](const FrameSkip& x, const FrameSkip& y) { return x.frame_time < y.frame_time; });
    }
    std::sort(tracks.begin(), tracks.end(),
              [](const DispersionTrack& x, const DispersionTrack& y) { return x.section < y.section; });
    return tracks;
}

namespace {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

void write_dispersion_csv(std::ostream& out, const std::vector<DispersionTrack>& tracks) {
    out << "section,time,anchor_hz,mean_f0_hz,b1_hz,b2_hz,dispersion_cents,merged,skipped_reason\n";
    for (const DispersionTrack& track : tracks) {
        // merge estimates and voiced skips in time order; unvoiced frames are
        // summary-only and get no row
        std::size_t e = 0, s = 0;
        auto skip_emittable = [&](std::size_t i) {
            return track.skips[i].reason != SkipReason::UnvoicedAnchor;
        };
        while (e < track.estimates.size() || s < track.skips.size()) {
            while (s < track.skips.size() && !skip_emittable(s)) ++s;
            const bool take_estimate =
                e < track.estimates.size() &&
                (s >= track.skips.size() || track.estimates[e].frame_time <= track.skips[s].frame_time);
            if (take_estimate) {
                const UnisonEstimate& est = track.estimates[e++];
                out << to_string(track.section) << ',' << format_double(est.frame_time) << ','
                    << format_double(est.anchor_hz) << ',' << format_double(est.mean_f0_hz) << ','
                    << format_double(est.b1_hz) << ',' << format_double(est.b2_hz) << ','
                    << format_double(est.dispersion_cents) << ',' << (est.merged ? 1 : 0) << ",\n";
            } else if (s < track.skips.size()) {
                const FrameSkip& skip = track.skips[s++];
                out << to_string(track.section) << ',' << format_double(skip.frame_time) << ','
                    << format_double(skip.anchor_hz) << ",,,,,," << to_string(skip.reason) << '\n';
            }
        }
    }
}

void write_dispersion_csv(const std::filesystem::path& path,
                          const std::vector<DispersionTrack>& tracks) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    write_dispersion_csv(out, tracks);
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

std::vector<DispersionTrack> read_dispersion_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string() + " for reading");

    std::map<Section, DispersionTrack> by_section;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.rfind("section,", 0) == 0) continue;
        std::vector<std::string> fields;
        std::string field;
        std::istringstream ss(line);
        while (std::getline(ss, field, ',')) fields.push_back(field);
        fields.resize(9);
        const auto section = section_from_string(fields[0]);
        if (!section)
            throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                                     ": unknown section '" + fields[0] + "'");
        DispersionTrack& track = by_section[*section];
        track.section = *section;
        auto num = [&](const std::string& text) {
            char* end = nullptr;
            const double v = std::strtod(text.c_str(), &end);
            if (end == text.c_str())
                throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                                         ": non-numeric field '" + text + "'");
            return v;
        };
        if (!fields[8].empty()) {
            FrameSkip skip;
            skip.frame_time = num(fields[1]);
            skip.anchor_hz = num(fields[2]);
            if (fields[8] == "unvoiced") skip.reason = SkipReason::UnvoicedAnchor;
            else if (fields[8] == "no_aligned_frame") skip.reason = SkipReason::NoAlignedFrame;
            else if (fields[8] == "no_peak") skip.reason = SkipReason::NoPeakInWindow;
            else if (fields[8] == "no_bandwidth") skip.reason = SkipReason::BandwidthUndefined;
            else if (fields[8] == "collision") skip.reason = SkipReason::Collision;
            else
                throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                                         ": unknown skip reason '" + fields[8] + "'");
            track.skips.push_back(skip);
        } else {
            UnisonEstimate est;
            est.frame_time = num(fields[1]);
            est.anchor_hz = num(fields[2]);
            est.mean_f0_hz = num(fields[3]);
            est.b1_hz = num(fields[4]);
            est.b2_hz = num(fields[5]);
            est.dispersion_cents = num(fields[6]);
            est.merged = num(fields[7]) != 0.0;
            track.estimates.push_back(est);
        }
    }

    std::vector<DispersionTrack> tracks;
    tracks.reserve(by_section.size());
    for (auto& [section, track] : by_section) {
        (void)section;
        tracks.push_back(std::move(track));
    }
    return tracks;
}

}  // namespace choirlab
