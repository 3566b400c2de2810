#pragma once

#include <cmath>
#include <stdexcept>

namespace choirlab {

inline constexpr double kCentsPerOctave = 1200.0;

/// Default reference for absolute cent values (A3).
inline constexpr double kDefaultRefHz = 220.0;

inline double hz_to_cents(double f_hz, double ref_hz = kDefaultRefHz) {
    if (!(f_hz > 0.0))
        throw std::invalid_argument("hz_to_cents: frequency must be positive");
    if (!(ref_hz > 0.0))
        throw std::invalid_argument("hz_to_cents: reference must be positive");
    return kCentsPerOctave * std::log2(f_hz / ref_hz);
}

inline double cents_to_hz(double cents, double ref_hz = kDefaultRefHz) {
    return ref_hz * std::exp2(cents / kCentsPerOctave);
}

/// Signed interval between two frequencies, in cents.
inline double cents_between(double from_hz, double to_hz) {
    if (!(from_hz > 0.0) || !(to_hz > 0.0))
        throw std::invalid_argument("cents_between: frequencies must be positive");
    return kCentsPerOctave * std::log2(to_hz / from_hz);
}

}  // namespace choirlab
