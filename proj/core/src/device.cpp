#include "picofail/device.hpp"

namespace picofail {

Device::Device() { params_.fill(ChannelParams{}); }

Device::Device(const std::array<ChannelParams, kChannels>& params) : params_(params) {}

std::array<Duty, kChannels> Device::applied_duties() const {
    std::array<Duty, kChannels> out{};
    for (int ch = 0; ch < kChannels; ++ch) out[ch] = states_[ch].applied_duty;
    return out;
}

void Device::on_sample(int channel, Counts sample, SimTime now) {
    auto& st = states_.at(channel);
    st = picofail::on_sample(st, params_[channel], sample, now, algorithm_);
}

std::array<bool, kChannels> Device::tick_boundary(SimTime now) {
    std::array<bool, kChannels> changed{};
    for (int ch = 0; ch < kChannels; ++ch) {
        auto r = picofail::tick_boundary(states_[ch], params_[ch], now);
        states_[ch] = r.state;
        changed[ch] = r.changed;
    }
    return changed;
}

void Device::reset(SimTime now) {
    for (auto& st : states_) {
        ChannelState fresh;
        fresh.last_sample_at = now;
        fresh.last_boundary_at = st.last_boundary_at;
        st = fresh;
    }
    boot_time_ = now;
}

}  // namespace picofail
