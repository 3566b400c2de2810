#include "choirlab/synth.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

#include "choirlab/pitch.hpp"

namespace choirlab {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// mt19937_64 output mapped to [0, 1); pinned here rather than relying on
// std::uniform_real_distribution, whose stream is implementation-defined.
double next_unit(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double next_gaussian(std::mt19937_64& rng) {
    // Box-Muller; discards the second deviate to keep the stream simple.
    double u1 = next_unit(rng);
    while (u1 <= 0.0) u1 = next_unit(rng);
    const double u2 = next_unit(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

}  // namespace

void UnisonSpec::validate() const {
    if (n_singers < 1) throw std::invalid_argument("UnisonSpec: n_singers must be >= 1");
    if (static_cast<int>(detune_cents.size()) != n_singers)
        throw std::invalid_argument("UnisonSpec: detune_cents must have one entry per singer (" +
                                    std::to_string(detune_cents.size()) + " given, " +
                                    std::to_string(n_singers) + " singers)");
    if (!(center_f0_hz > 0.0)) throw std::invalid_argument("UnisonSpec: center_f0_hz must be positive");
    if (n_harmonics < 1) throw std::invalid_argument("UnisonSpec: n_harmonics must be >= 1");
    if (sample_rate <= 0) throw std::invalid_argument("UnisonSpec: sample_rate must be positive");
    if (!(duration_s > 0.0)) throw std::invalid_argument("UnisonSpec: duration_s must be positive");
    if (!(truth_hop_s > 0.0)) throw std::invalid_argument("UnisonSpec: truth_hop_s must be positive");
    if (vibrato_depth_cents < 0.0 || vibrato_rate_hz < 0.0)
        throw std::invalid_argument("UnisonSpec: vibrato parameters must be non-negative");

    // reject aliasing including the worst-case detune + vibrato excursion
    double max_detune = detune_cents.front();
    for (double d : detune_cents) max_detune = std::max(max_detune, d);
    const double max_f0 =
        center_f0_hz * std::exp2((max_detune + vibrato_depth_cents) / kCentsPerOctave);
    if (max_f0 * n_harmonics >= 0.5 * sample_rate)
        throw std::invalid_argument("UnisonSpec: harmonic " + std::to_string(n_harmonics) +
                                    " reaches " + std::to_string(max_f0 * n_harmonics) +
                                    " Hz, at or above Nyquist");
}

UnisonRender synth_unison(const UnisonSpec& spec, std::uint64_t seed) {
    spec.validate();

    const int sr = spec.sample_rate;
    const Eigen::Index n_samples = static_cast<Eigen::Index>(std::llround(spec.duration_s * sr));
    const Eigen::Index n_truth =
        static_cast<Eigen::Index>(std::floor(spec.duration_s / spec.truth_hop_s)) + 1;

    std::mt19937_64 rng(seed);

    // harmonic amplitudes, normalized so each singer peaks at <= 1
    Eigen::ArrayXd harmonic_amp(spec.n_harmonics);
    for (int k = 0; k < spec.n_harmonics; ++k)
        harmonic_amp[k] = std::pow(10.0, -spec.harmonic_rolloff_db_per_harmonic * k / 20.0);
    harmonic_amp /= harmonic_amp.sum();

    const double singer_gain = 1.0 / spec.n_singers;

    UnisonRender out;
    out.clip.sample_rate = sr;
    out.clip.samples = Eigen::ArrayXd::Zero(n_samples);
    out.singer_f0.reserve(spec.n_singers);

    for (int i = 0; i < spec.n_singers; ++i) {
        const double vibrato_phase = kTwoPi * next_unit(rng);
        Eigen::ArrayXd partial_phase(spec.n_harmonics);
        for (int k = 0; k < spec.n_harmonics; ++k) partial_phase[k] = kTwoPi * next_unit(rng);

        auto f0_at = [&](double t) {
            const double cents = spec.detune_cents[static_cast<std::size_t>(i)] +
                                 spec.vibrato_depth_cents *
                                     std::sin(kTwoPi * spec.vibrato_rate_hz * t + vibrato_phase);
            return spec.center_f0_hz * std::exp2(cents / kCentsPerOctave);
        };

        double cycles = 0.0;  // running integral of f0, in cycles
        for (Eigen::Index n = 0; n < n_samples; ++n) {
            const double f0 = f0_at(static_cast<double>(n) / sr);
            double s = 0.0;
            for (int k = 0; k < spec.n_harmonics; ++k)
                s += harmonic_amp[k] * std::sin(kTwoPi * (k + 1) * cycles + partial_phase[k]);
            out.clip.samples[n] += singer_gain * s;
            cycles += f0 / sr;
        }

        F0Track track;
        track.hop_seconds = spec.truth_hop_s;
        track.frames.resize(n_truth);
        for (Eigen::Index n = 0; n < n_truth; ++n)
            track.frames[n] = f0_at(static_cast<double>(n) * spec.truth_hop_s);
        out.singer_f0.push_back(std::move(track));
    }

    if (std::isfinite(spec.noise_db)) {
        const double noise_amp = std::pow(10.0, spec.noise_db / 20.0);
        for (Eigen::Index n = 0; n < n_samples; ++n)
            out.clip.samples[n] += noise_amp * next_gaussian(rng);
    }

    out.truth.timestamps.resize(static_cast<std::size_t>(n_truth));
    out.truth.frames.resize(static_cast<std::size_t>(n_truth));
    for (Eigen::Index n = 0; n < n_truth; ++n) {
        out.truth.timestamps[static_cast<std::size_t>(n)] = static_cast<double>(n) * spec.truth_hop_s;
        auto& frame = out.truth.frames[static_cast<std::size_t>(n)];
        frame.reserve(static_cast<std::size_t>(spec.n_singers));
        for (const F0Track& track : out.singer_f0) frame.push_back(track.frames[n]);
    }
    return out;
}

}  // namespace choirlab
