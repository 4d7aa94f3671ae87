#pragma once

#include <cmath>
#include <compare>

namespace cola {

// Instant on a continuous TAI-like timescale (no leap seconds), stored as
// seconds since the 2000-01-01T00:00:00 reference.
struct Epoch {
    double seconds_since_reference = 0.0;

    constexpr auto operator<=>(const Epoch&) const = default;

    constexpr Epoch operator+(double seconds) const { return {seconds_since_reference + seconds}; }
    constexpr Epoch operator-(double seconds) const { return {seconds_since_reference - seconds}; }
    constexpr double operator-(const Epoch& other) const {
        return seconds_since_reference - other.seconds_since_reference;
    }
};

} // namespace cola
