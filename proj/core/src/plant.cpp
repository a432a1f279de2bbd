#include "picofail/plant.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace picofail {

void validate(const PlantConfig& cfg) {
    if (!(cfg.ramp_rate > 0)) throw std::invalid_argument("ramp_rate must be > 0");
    if (!(cfg.v_nominal < cfg.v_crowbar)) throw std::invalid_argument("v_nominal must be below v_crowbar");
    if (!(cfg.v_crowbar <= cfg.v_open_circuit)) {
        throw std::invalid_argument("v_crowbar must not exceed v_open_circuit");
    }
    if (!(cfg.dump_capacity >= 1.0)) throw std::invalid_argument("dump_capacity must be >= 1");
    if (cfg.dt <= SimTime{0} || cfg.dt.count() * 2 > 67) {
        throw std::invalid_argument("dt must be in 1..33 us, got " + std::to_string(cfg.dt.count()));
    }
}

PlantState initial_plant(const PlantConfig& cfg, double load_fraction) {
    PlantState s;
    s.v.fill(cfg.v_nominal);
    s.load_fraction.fill(load_fraction);
    s.crowbar_latched.fill(false);
    return s;
}

double voltage_slope(const PlantConfig& cfg, double load_fraction, Duty duty) {
    return cfg.ramp_rate * (1.0 - load_fraction - cfg.dump_capacity * duty / 255.0);
}

PlantState step(const PlantConfig& cfg, PlantState state, const std::array<Duty, kChannels>& duty, SimTime dt,
                std::vector<PlantEvent>* events) {
    if (dt <= SimTime{0}) throw ContractViolation("plant step needs dt > 0");
    const double seconds = static_cast<double>(dt.count()) * 1e-6;
    for (int ch = 0; ch < kChannels; ++ch) {
        if (state.crowbar_latched[ch]) {
            state.v[ch] = 0.0;
            continue;
        }
        double v = state.v[ch] + voltage_slope(cfg, state.load_fraction[ch], duty[ch]) * seconds;
        v = std::clamp(v, 0.0, cfg.v_open_circuit);
        if (v >= cfg.v_crowbar) {
            if (events) events->push_back({PlantEvent::Kind::Crowbar, ch, v});
            state.crowbar_latched[ch] = true;
            v = 0.0;
        }
        state.v[ch] = v;
    }
    return state;
}

PlantState manual_reset(PlantState state, int channel, std::vector<PlantEvent>* events) {
    if (channel < 0 || channel >= kChannels) {
        throw std::out_of_range("channel must be 0..2, got " + std::to_string(channel));
    }
    if (!state.crowbar_latched[channel]) {
        if (events) events->push_back({PlantEvent::Kind::ResetIgnored, channel, state.v[channel]});
        return state;
    }
    state.crowbar_latched[channel] = false;
    state.v[channel] = 0.0;
    if (events) events->push_back({PlantEvent::Kind::Reset, channel, 0.0});
    return state;
}

}  // namespace picofail
