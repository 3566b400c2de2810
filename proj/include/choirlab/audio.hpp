#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <utility>

namespace choirlab {

/// Mono audio buffer. Samples are dimensionless amplitudes, nominally in
/// [-1, 1]; sample_rate is in Hz.
struct AudioClip {
    Eigen::ArrayXd samples;
    int sample_rate = 0;

    AudioClip() = default;
    AudioClip(Eigen::ArrayXd s, int rate) : samples(std::move(s)), sample_rate(rate) {
        validate();
    }

    Eigen::Index size() const { return samples.size(); }
    double duration_s() const {
        return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
    }

    void validate() const {
        if (sample_rate <= 0)
            throw std::invalid_argument("AudioClip: sample_rate must be positive");
        if (!samples.isFinite().all())
            throw std::invalid_argument("AudioClip: samples must be finite");
    }
};

}  // namespace choirlab
