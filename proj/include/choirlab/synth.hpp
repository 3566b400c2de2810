#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "choirlab/annotations.hpp"
#include "choirlab/audio.hpp"

namespace choirlab {

/// A synthetic unison: n_singers harmonic tones around a common centre
/// pitch, each detuned by a fixed cent offset and optionally modulated by
/// vibrato with a random (seeded) phase.
struct UnisonSpec {
    int n_singers = 1;
    double center_f0_hz = 220.0;
    std::vector<double> detune_cents;  // one offset per singer
    int n_harmonics = 1;
    double harmonic_rolloff_db_per_harmonic = 12.0;
    double vibrato_rate_hz = 0.0;
    double vibrato_depth_cents = 0.0;
    double duration_s = 1.0;
    int sample_rate = 44100;
    double noise_db = -std::numeric_limits<double>::infinity();  // re tone peak
    double truth_hop_s = 1024.0 / 44100.0;  // ground-truth sampling hop

    void validate() const;
};

struct UnisonRender {
    AudioClip clip;
    std::vector<F0Track> singer_f0;  // exact per-singer trajectories
    MultiF0Sequence truth;           // all singers' voiced f0s per frame
};

/// Deterministic for a given (spec, seed) pair. Each singer is a sum of
/// n_harmonics sinusoids at k*f0_i(t) with
///   f0_i(t) = center * 2^((detune_i + depth*sin(2*pi*rate*t + phi_i))/1200),
/// random start phases per partial, amplitudes rolling off per harmonic,
/// and singers summed with equal gain. The mix peak stays within [-1, 1]
/// before any noise is added.
UnisonRender synth_unison(const UnisonSpec& spec, std::uint64_t seed);

}  // namespace choirlab
