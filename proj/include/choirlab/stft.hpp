#pragma once

#include <Eigen/Core>

#include "choirlab/audio.hpp"

namespace choirlab {

enum class WindowKind { Hann };

/// Short-time analysis parameters. The defaults give a 4096-point Hann
/// window zero-padded to an 8192-point FFT with 75% overlap.
struct StftConfig {
    int window_size = 4096;
    int fft_size = 8192;
    int hop_size = 1024;
    WindowKind window = WindowKind::Hann;

    /// Throws std::invalid_argument naming the offending field.
    void validate() const;
};

/// Periodic analysis window of the given size.
/// Hann: w[i] = 0.5 - 0.5*cos(2*pi*i/size), so w[0] == 0 and w sums to size/2.
Eigen::ArrayXd make_window(WindowKind kind, int size);

/// Magnitude spectrogram. Column k holds the linear magnitudes of the
/// non-negative-frequency half of frame k (fft_size/2 + 1 bins). Frame
/// times follow the window-centre convention.
struct Spectrogram {
    Eigen::ArrayXXd magnitudes;  // (fft_size/2 + 1) x n_frames
    double bin_hz = 0.0;         // sample_rate / fft_size
    double start_time_s = 0.0;   // centre time of frame 0
    double hop_s = 0.0;
    int sample_rate = 0;
    StftConfig config;

    Eigen::Index num_bins() const { return magnitudes.rows(); }
    Eigen::Index num_frames() const { return magnitudes.cols(); }
    double frame_time(Eigen::Index k) const { return start_time_s + static_cast<double>(k) * hop_s; }
    double bin_frequency(double bin) const { return bin * bin_hz; }
};

/// Complex STFT: column k is the non-negative-frequency half of the FFT of
/// frame k (samples [k*hop, k*hop + window_size), windowed, zero-padded to
/// fft_size). The last partial frame is dropped. Linear in the input.
Eigen::ArrayXXcd complex_stft(const AudioClip& clip, const StftConfig& cfg = {});

Spectrogram stft(const AudioClip& clip, const StftConfig& cfg = {});

}  // namespace choirlab
