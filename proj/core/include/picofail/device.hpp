#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "picofail/control.hpp"
#include "picofail/plant.hpp"

namespace picofail {

// Firmware-side state of the failsafe board. Sensor readings live here too
// because getStatus reports them.
class Device {
  public:
    static constexpr int kId = 1;
    static constexpr const char* kManufacturer = "RDIS";
    static constexpr const char* kModel = "Failsafe";

    Device();
    explicit Device(const std::array<ChannelParams, kChannels>& params);

    const ChannelParams& params(int channel) const { return params_.at(channel); }
    const std::array<ChannelParams, kChannels>& params() const { return params_; }
    void set_params(int channel, const ChannelParams& p) { params_.at(channel) = p; }

    const ChannelState& channel(int ch) const { return states_.at(ch); }
    std::array<Duty, kChannels> applied_duties() const;

    void on_sample(int channel, Counts sample, SimTime now);
    /// Runs the PWM boundary for every channel; returns which channels changed.
    std::array<bool, kChannels> tick_boundary(SimTime now);

    /// Software restart: controller state and uptime start over; parameters
    /// are kept.
    void reset(SimTime now);
    std::int64_t uptime_ms(SimTime now) const { return (now - boot_time_).count() / 1000; }

    void set_algorithm(DutyAlgorithm algorithm) { algorithm_ = algorithm; }

    // Sensor readings reported through getStatus.
    int current = 0;
    int pressure = 0;
    std::vector<std::string> temp_addresses;
    std::map<std::string, double> temperatures;

  private:
    std::array<ChannelParams, kChannels> params_;
    std::array<ChannelState, kChannels> states_{};
    SimTime boot_time_{0};
    DutyAlgorithm algorithm_ = &compute_duty;
};

}  // namespace picofail
