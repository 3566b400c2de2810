#pragma once

#include <Eigen/Core>

#include <filesystem>
#include <vector>

namespace choirlab {

/// Uniformly hopped f0 trajectory of a single voice or section.
/// Values <= 0 mark unvoiced frames; frame n sits at time
/// start_seconds + n * hop_seconds.
struct F0Track {
    double hop_seconds = 0.0;
    double start_seconds = 0.0;
    Eigen::ArrayXd frames;

    Eigen::Index size() const { return frames.size(); }
    double time(Eigen::Index n) const { return start_seconds + static_cast<double>(n) * hop_seconds; }
    bool voiced(Eigen::Index n) const { return frames[n] > 0.0; }
    Eigen::Index voiced_count() const { return (frames > 0.0).count(); }

    void validate() const;
};

/// Per-frame sets of concurrent f0 values in Hz. Frames may be empty
/// (silence) and duplicates are meaningful (two voices on the same pitch).
struct MultiF0Sequence {
    std::vector<double> timestamps;               // strictly increasing, seconds
    std::vector<std::vector<double>> frames;      // one pitch list per timestamp

    std::size_t size() const { return timestamps.size(); }

    void validate() const;
};

/// CSV with rows "time_sec,f0_hz" (header optional). The hop is inferred
/// from the first two rows; timestamps off the uniform grid by more than
/// 1e-6 s are rejected.
F0Track load_f0_track(const std::filesystem::path& path);
void write_f0_track(const F0Track& track, const std::filesystem::path& path);

/// CSV with rows "time_sec[,f0_hz...]"; a row with no pitch values is a
/// silent frame.
MultiF0Sequence load_multif0(const std::filesystem::path& path);
void write_multif0(const MultiF0Sequence& seq, const std::filesystem::path& path);

}  // namespace choirlab
