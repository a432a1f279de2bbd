#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace picofail {

using SimTime = std::chrono::microseconds;
using Counts = std::uint16_t;
using Duty = std::uint8_t;

inline constexpr Counts kAdcMax = 1023;
inline constexpr Duty kDutyMax = 255;
inline constexpr SimTime kPwmPeriod{1000};

// Raised when a caller breaks a documented precondition of a state function.
class ContractViolation : public std::logic_error {
  public:
    using std::logic_error::logic_error;
};

// Per-channel failsafe parameters. `scale` is derived from `range` and must
// only be changed through set_range().
struct ChannelParams {
    Counts threshold = 128;
    Counts range = 118;
    std::uint16_t scale = 553;
    std::uint16_t hold_ms = 100;

    friend bool operator==(const ChannelParams&, const ChannelParams&) = default;
};

struct RangeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// round(255 * 256 / range). Only called when the range is reconfigured.
std::uint16_t scale_for_range(Counts range);

/// Returns a copy of `params` with the new range and recomputed scale.
/// Throws RangeError (leaving the caller's params untouched) if range is
/// outside 1..1023.
ChannelParams set_range(const ChannelParams& params, int range);

ChannelParams set_threshold(const ChannelParams& params, int threshold);
ChannelParams set_hold_time(const ChannelParams& params, int hold_ms);

ChannelParams make_params(int threshold, int range, int hold_ms);

// Multiply-add-shift core of the duty computation. Templated on the integer
// type so tests can instantiate it with an instrumented type that has no
// division operator.
template <class Int>
constexpr Int scaled_overvoltage(Int scale, Int over) {
    return (scale * over + Int(128)) >> 8;
}

/// Linear dump duty for one sample, 0..255. No division on this path.
constexpr Duty compute_duty(const ChannelParams& params, Counts sample) {
    if (sample <= params.threshold) return 0;
    const std::uint32_t over = static_cast<std::uint32_t>(sample - params.threshold);
    const std::uint32_t duty = scaled_overvoltage<std::uint32_t>(params.scale, over);
    return duty > kDutyMax ? kDutyMax : static_cast<Duty>(duty);
}

// Selectable diversion algorithm slot; only the linear law ships.
using DutyAlgorithm = Duty (*)(const ChannelParams&, Counts);

struct ChannelState {
    Counts last_sample = 0;
    Duty commanded_duty = 0;
    Duty applied_duty = 0;
    // Increase waiting for the next PWM boundary.
    std::optional<Duty> staged_duty;
    // Most recent decrease waiting for the hold time to expire.
    std::optional<Duty> pending_duty;
    SimTime last_sample_at{0};
    std::optional<SimTime> last_increase_at;
    std::optional<SimTime> last_boundary_at;

    friend bool operator==(const ChannelState&, const ChannelState&) = default;
};

constexpr bool is_pwm_boundary(SimTime t) { return t.count() % kPwmPeriod.count() == 0; }

/// First PWM boundary at or after t.
constexpr SimTime next_pwm_boundary(SimTime t) {
    const auto p = kPwmPeriod.count();
    return SimTime{(t.count() + p - 1) / p * p};
}

/// Feeds one voltage sample. Increases are staged for the next PWM boundary;
/// decreases are parked in pending_duty (latest wins) until the hold expires.
ChannelState on_sample(ChannelState state, const ChannelParams& params, Counts sample, SimTime now,
                       DutyAlgorithm algorithm = &compute_duty);

struct BoundaryResult {
    ChannelState state;
    Duty applied_duty;
    bool changed;
};

/// Called on each 1 ms PWM boundary. Throws ContractViolation when `now` is
/// not a boundary or goes backwards.
BoundaryResult tick_boundary(ChannelState state, const ChannelParams& params, SimTime now);

}  // namespace picofail
