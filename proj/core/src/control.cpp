#include "picofail/control.hpp"

namespace picofail {

std::uint16_t scale_for_range(Counts range) {
    if (range < 1 || range > kAdcMax) {
        throw RangeError("v_range must be in 1..1023, got " + std::to_string(range));
    }
    constexpr std::uint32_t numerator = 255u * 256u;
    return static_cast<std::uint16_t>((numerator + range / 2u) / range);
}

ChannelParams set_range(const ChannelParams& params, int range) {
    if (range < 1 || range > kAdcMax) {
        throw RangeError("v_range must be in 1..1023, got " + std::to_string(range));
    }
    ChannelParams out = params;
    out.range = static_cast<Counts>(range);
    out.scale = scale_for_range(out.range);
    return out;
}

ChannelParams set_threshold(const ChannelParams& params, int threshold) {
    if (threshold < 0 || threshold > kAdcMax) {
        throw RangeError("v_th must be in 0..1023, got " + std::to_string(threshold));
    }
    ChannelParams out = params;
    out.threshold = static_cast<Counts>(threshold);
    return out;
}

ChannelParams set_hold_time(const ChannelParams& params, int hold_ms) {
    if (hold_ms < 0 || hold_ms > 60000) {
        throw RangeError("T_hold must be in 0..60000 ms, got " + std::to_string(hold_ms));
    }
    ChannelParams out = params;
    out.hold_ms = static_cast<std::uint16_t>(hold_ms);
    return out;
}

ChannelParams make_params(int threshold, int range, int hold_ms) {
    return set_hold_time(set_range(set_threshold(ChannelParams{}, threshold), range), hold_ms);
}

ChannelState on_sample(ChannelState state, const ChannelParams& params, Counts sample, SimTime now,
                       DutyAlgorithm algorithm) {
    if (now < state.last_sample_at) {
        throw ContractViolation("sample time went backwards");
    }
    state.last_sample = sample;
    state.last_sample_at = now;
    state.commanded_duty = algorithm(params, sample);

    // Compare against what the output will be after the next boundary, so a
    // sample that falls back below a staged increase is treated as a decrease
    // from that increase.
    const Duty reference = state.staged_duty.value_or(state.applied_duty);
    if (state.commanded_duty > reference) {
        state.staged_duty = state.commanded_duty;
        state.pending_duty.reset();
    } else if (state.commanded_duty < reference) {
        // A staged peak stays staged; this lower value waits out the hold
        // that starts when the peak is applied.
        state.pending_duty = state.commanded_duty;
    } else {
        state.pending_duty.reset();
    }
    return state;
}

BoundaryResult tick_boundary(ChannelState state, const ChannelParams& params, SimTime now) {
    if (!is_pwm_boundary(now)) {
        throw ContractViolation("tick_boundary called off a PWM boundary at t=" +
                                std::to_string(now.count()) + "us");
    }
    if (state.last_boundary_at && now <= *state.last_boundary_at) {
        throw ContractViolation("tick_boundary time did not advance");
    }
    state.last_boundary_at = now;
    const Duty before = state.applied_duty;

    bool increased_now = false;
    if (state.staged_duty) {
        if (*state.staged_duty > state.applied_duty) {
            state.applied_duty = *state.staged_duty;
            state.last_increase_at = now;
            increased_now = true;
        }
        state.staged_duty.reset();
    }

    if (state.pending_duty && !increased_now) {
        const SimTime hold{static_cast<std::int64_t>(params.hold_ms) * 1000};
        const bool expired = !state.last_increase_at || now >= *state.last_increase_at + hold;
        if (expired) {
            if (*state.pending_duty < state.applied_duty) {
                state.applied_duty = *state.pending_duty;
            }
            state.pending_duty.reset();
        }
    }
    return {state, state.applied_duty, state.applied_duty != before};
}

}  // namespace picofail
