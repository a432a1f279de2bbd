#pragma once

#include <array>
#include <vector>

#include "picofail/control.hpp"

namespace picofail {

inline constexpr int kChannels = 3;

struct PlantConfig {
    double ramp_rate = 5833.0;  // V/s with no load and no dump
    double v_nominal = 300.0;
    double v_crowbar = 500.0;
    double dump_capacity = 1.2;  // dump authority relative to full generation
    double v_open_circuit = 600.0;
    SimTime dt{10};
};

void validate(const PlantConfig& cfg);

struct PlantState {
    std::array<double, kChannels> v{};
    std::array<double, kChannels> load_fraction{};
    std::array<bool, kChannels> crowbar_latched{};
};

PlantState initial_plant(const PlantConfig& cfg, double load_fraction = 1.0);

struct PlantEvent {
    enum class Kind { Crowbar, Reset, ResetIgnored };
    Kind kind;
    int channel;
    double voltage;  // voltage at the moment of the event
};

/// dv/dt for one channel at the given duty.
double voltage_slope(const PlantConfig& cfg, double load_fraction, Duty duty);

/// Explicit Euler step of every channel. Channels reaching v_crowbar latch at
/// 0 V and are reported through `events`.
PlantState step(const PlantConfig& cfg, PlantState state, const std::array<Duty, kChannels>& duty, SimTime dt,
                std::vector<PlantEvent>* events = nullptr);

/// Clears a latched crowbar; the channel restarts from 0 V. Unlatched
/// channels are left alone and a ResetIgnored event is reported.
PlantState manual_reset(PlantState state, int channel, std::vector<PlantEvent>* events = nullptr);

}  // namespace picofail
