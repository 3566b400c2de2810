#include "choirlab/stft.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace choirlab {

namespace {

bool is_power_of_two(int v) { return v > 0 && (v & (v - 1)) == 0; }

}  // namespace

void StftConfig::validate() const {
    if (window_size < 2)
        throw std::invalid_argument("StftConfig: window_size must be >= 2, got " +
                                    std::to_string(window_size));
    if (!is_power_of_two(window_size))
        throw std::invalid_argument("StftConfig: window_size must be a power of two, got " +
                                    std::to_string(window_size));
    if (!is_power_of_two(fft_size))
        throw std::invalid_argument("StftConfig: fft_size must be a power of two, got " +
                                    std::to_string(fft_size));
    if (fft_size < window_size)
        throw std::invalid_argument("StftConfig: fft_size (" + std::to_string(fft_size) +
                                    ") must be >= window_size (" + std::to_string(window_size) + ")");
    if (hop_size <= 0 || hop_size > window_size)
        throw std::invalid_argument("StftConfig: hop_size must be in [1, window_size], got " +
                                    std::to_string(hop_size));
}

Eigen::ArrayXd make_window(WindowKind kind, int size) {
    if (size < 2)
        throw std::invalid_argument("make_window: size must be >= 2, got " + std::to_string(size));
    Eigen::ArrayXd w(size);
    switch (kind) {
        case WindowKind::Hann: {
            const double step = 2.0 * std::numbers::pi / static_cast<double>(size);
            for (int i = 0; i < size; ++i) w[i] = 0.5 - 0.5 * std::cos(step * i);
            break;
        }
    }
    return w;
}

Eigen::ArrayXXcd complex_stft(const AudioClip& clip, const StftConfig& cfg) {
    cfg.validate();
    clip.validate();
    if (clip.size() < cfg.window_size)
        throw std::invalid_argument("stft: clip has " + std::to_string(clip.size()) +
                                    " samples, need at least one window of " +
                                    std::to_string(cfg.window_size));

    const Eigen::Index n_frames = (clip.size() - cfg.window_size) / cfg.hop_size + 1;
    const Eigen::Index n_bins = cfg.fft_size / 2 + 1;
    const Eigen::ArrayXd window = make_window(cfg.window, cfg.window_size);

    Eigen::ArrayXXcd out(n_bins, n_frames);
    Eigen::FFT<double> fft;
    fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);

    Eigen::VectorXd buffer = Eigen::VectorXd::Zero(cfg.fft_size);
    Eigen::VectorXcd spectrum(n_bins);
    for (Eigen::Index k = 0; k < n_frames; ++k) {
        buffer.head(cfg.window_size) =
            (clip.samples.segment(k * cfg.hop_size, cfg.window_size) * window).matrix();
        fft.fwd(spectrum, buffer);
        out.col(k) = spectrum.array();
    }
    return out;
}

Spectrogram stft(const AudioClip& clip, const StftConfig& cfg) {
    Spectrogram spec;
    spec.magnitudes = complex_stft(clip, cfg).abs();
    spec.bin_hz = static_cast<double>(clip.sample_rate) / cfg.fft_size;
    spec.start_time_s = 0.5 * cfg.window_size / clip.sample_rate;
    spec.hop_s = static_cast<double>(cfg.hop_size) / clip.sample_rate;
    spec.sample_rate = clip.sample_rate;
    spec.config = cfg;
    return spec;
}

}  // namespace choirlab
