#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "choirlab/stft.hpp"
#include "oracles.hpp"

using namespace choirlab;

namespace {

AudioClip sine_clip(double freq, double amp, int sample_rate, double duration_s,
                    double phase = 0.0) {
    const Eigen::Index n = static_cast<Eigen::Index>(duration_s * sample_rate);
    Eigen::ArrayXd samples(n);
    for (Eigen::Index i = 0; i < n; ++i)
        samples[i] = amp * std::sin(2.0 * std::numbers::pi * freq * static_cast<double>(i) /
                                        sample_rate +
                                    phase);
    return AudioClip(std::move(samples), sample_rate);
}

}  // namespace

TEST_CASE("make_window closed forms") {
    const Eigen::ArrayXd w4 = make_window(WindowKind::Hann, 4);
    REQUIRE(w4.size() == 4);
    CHECK(w4[0] == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(w4[1] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(w4[2] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(w4[3] == doctest::Approx(0.5).epsilon(1e-15));

    for (int size : {16, 256, 4096}) CHECK(make_window(WindowKind::Hann, size)[0] == 0.0);

    CHECK_THROWS_AS(make_window(WindowKind::Hann, 1), std::invalid_argument);
}

TEST_CASE("make_window sum matches direct summation") {
    const Eigen::ArrayXd w = make_window(WindowKind::Hann, 4096);
    const std::vector<double> reference = oracles::hann(4096);
    CHECK(w.sum() == doctest::Approx(oracles::compensated_sum(reference)).epsilon(1e-12));
    // periodic Hann sums to exactly size/2
    CHECK(w.sum() == doctest::Approx(2048.0).epsilon(1e-12));
}

TEST_CASE("StftConfig validation") {
    StftConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.fft_size = 4095;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = StftConfig{};
    cfg.fft_size = 2048;  // smaller than the window
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = StftConfig{};
    cfg.hop_size = 8192;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("stft of silence is silent") {
    AudioClip clip(Eigen::ArrayXd::Zero(8192), 44100);
    const Spectrogram spec = stft(clip);
    CHECK(spec.num_bins() == 4097);
    CHECK(spec.num_frames() == (8192 - 4096) / 1024 + 1);
    CHECK(spec.magnitudes.maxCoeff() == 0.0);
}

TEST_CASE("stft rejects short clips") {
    AudioClip clip(Eigen::ArrayXd::Zero(4095), 44100);
    CHECK_THROWS_AS(stft(clip), std::invalid_argument);
}

TEST_CASE("bin-aligned sinusoid peaks at its bin with the coherent gain") {
    // place the tone on an exact FFT bin that is also >= 1 window bin off DC
    const StftConfig cfg;
    const int sr = 44100;
    const double bin_hz = static_cast<double>(sr) / cfg.fft_size;
    const int bin = 164;  // even -> integer cycles inside the 4096 window
    const double freq = bin * bin_hz;
    const double amp = 0.7;
    const AudioClip clip = sine_clip(freq, amp, sr, 0.4, 0.3);
    const Spectrogram spec = stft(clip, cfg);

    for (Eigen::Index k = 0; k < spec.num_frames(); ++k) {
        Eigen::Index argmax = 0;
        spec.magnitudes.col(k).maxCoeff(&argmax);
        CHECK(argmax == bin);
        // A * (coherent gain 0.5) * window/2
        const double expected = amp * 0.5 * cfg.window_size / 2.0;
        CHECK(spec.magnitudes(bin, k) == doctest::Approx(expected).epsilon(1e-6));
    }
}

TEST_CASE("stft frame magnitudes match a direct DFT oracle") {
    const StftConfig cfg;
    const int sr = 44100;
    const AudioClip clip = sine_clip(220.0, 0.8, sr, 0.15, 1.1);
    const Spectrogram spec = stft(clip, cfg);
    REQUIRE(spec.num_frames() >= 3);

    const Eigen::Index k = 2;
    std::vector<double> frame(static_cast<std::size_t>(cfg.fft_size), 0.0);
    const std::vector<double> window = oracles::hann(cfg.window_size);
    for (int i = 0; i < cfg.window_size; ++i)
        frame[static_cast<std::size_t>(i)] =
            clip.samples[k * cfg.hop_size + i] * window[static_cast<std::size_t>(i)];
    const auto reference = oracles::dft(frame, cfg.fft_size);

    double ref_max = 0.0;
    for (const auto& c : reference) ref_max = std::max(ref_max, std::abs(c));
    double worst = 0.0;
    for (Eigen::Index b = 0; b < spec.num_bins(); ++b)
        worst = std::max(worst,
                         std::abs(spec.magnitudes(b, k) - std::abs(reference[static_cast<std::size_t>(b)])));
    CHECK(worst / ref_max < 1e-6);
}

TEST_CASE("complex stft is linear") {
    const StftConfig cfg{.window_size = 1024, .fft_size = 2048, .hop_size = 256};
    std::mt19937_64 rng(11);
    auto noise = [&](Eigen::Index n) {
        Eigen::ArrayXd s(n);
        for (Eigen::Index i = 0; i < n; ++i)
            s[i] = 2.0 * static_cast<double>(rng() >> 11) * 0x1.0p-53 - 1.0;
        return s;
    };
    const Eigen::ArrayXd a = noise(4096), b = noise(4096);
    const AudioClip ca(a, 48000), cb(b, 48000), cab(0.6 * a + 0.4 * b, 48000);
    const Eigen::ArrayXXcd sa = complex_stft(ca, cfg);
    const Eigen::ArrayXXcd sb = complex_stft(cb, cfg);
    const Eigen::ArrayXXcd sab = complex_stft(cab, cfg);
    const double scale = sa.abs().maxCoeff();
    CHECK(((0.6 * sa + 0.4 * sb) - sab).abs().maxCoeff() / scale < 1e-9);
}

TEST_CASE("Parseval per frame") {
    const StftConfig cfg{.window_size = 1024, .fft_size = 2048, .hop_size = 512};
    std::mt19937_64 rng(23);
    Eigen::ArrayXd samples(3000);
    for (Eigen::Index i = 0; i < samples.size(); ++i)
        samples[i] = 2.0 * static_cast<double>(rng() >> 11) * 0x1.0p-53 - 1.0;
    const AudioClip clip(samples, 44100);

    const Eigen::ArrayXXcd frames = complex_stft(clip, cfg);
    const Eigen::ArrayXd window = make_window(cfg.window, cfg.window_size);
    for (Eigen::Index k = 0; k < frames.cols(); ++k) {
        const Eigen::ArrayXd windowed = clip.samples.segment(k * cfg.hop_size, cfg.window_size) * window;
        const double time_energy = windowed.square().sum();
        // reassemble the full-spectrum energy from the half spectrum of a
        // real signal: DC and Nyquist once, everything else twice
        const Eigen::ArrayXd mag2 = frames.col(k).abs2();
        const double freq_energy =
            (mag2[0] + mag2[mag2.size() - 1] + 2.0 * mag2.segment(1, mag2.size() - 2).sum()) /
            cfg.fft_size;
        CHECK(freq_energy == doctest::Approx(time_energy).epsilon(1e-6));
    }
}

TEST_CASE("frame times follow the window-centre convention") {
    const StftConfig cfg;
    AudioClip clip(Eigen::ArrayXd::Zero(44100), 44100);
    const Spectrogram spec = stft(clip, cfg);
    CHECK(spec.frame_time(0) == doctest::Approx(2048.0 / 44100.0).epsilon(1e-15));
    for (Eigen::Index k = 1; k < spec.num_frames(); ++k)
        CHECK(spec.frame_time(k) - spec.frame_time(k - 1) ==
              doctest::Approx(1024.0 / 44100.0).epsilon(1e-12));
}
