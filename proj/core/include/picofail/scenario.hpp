#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "picofail/acquisition.hpp"
#include "picofail/control.hpp"
#include "picofail/plant.hpp"
#include "picofail/protocol.hpp"

namespace picofail {

// Invalid scenario input. The message names the line, field and, where one
// applies, the timeline time.
class ScenarioError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct LoadPoint {
    SimTime time;
    int channel;  // -1 for every channel
    double fraction;
};

struct InjectedBytes {
    SimTime time;
    protocol::Transport transport;
    // Bus commands are framed before delivery; raw entries are delivered as is.
    std::string text;
    bool raw = false;
};

struct TempFixture {
    std::string address;
    double celsius;
    std::optional<SimTime> absent_from;
};

struct SeriesPoint {
    SimTime time;
    int value;
};

struct CrowbarResetPoint {
    SimTime time;
    int channel;
};

struct Scenario {
    std::string name = "scenario";
    SimTime duration{2'000'000};
    AcquisitionMode mode = AcquisitionMode::OptimizedInterrupt;
    std::optional<SimTime> channel_period;  // overrides the mode's default
    int noise = 0;
    std::uint64_t seed = 1;
    double volts_per_count = 0.5;
    double initial_load = 1.0;

    bool stats = true;
    bool log_samples = false;
    bool log_led = false;

    PlantConfig plant;
    std::array<ChannelParams, kChannels> params{};

    int current = 0;
    int pressure = 0;

    std::vector<LoadPoint> load;
    std::vector<InjectedBytes> commands;
    std::vector<TempFixture> temp_sensors;
    std::vector<SeriesPoint> current_series;
    std::vector<SeriesPoint> pressure_series;
    std::vector<CrowbarResetPoint> crowbar_resets;

    AdcConfig adc() const;
};

/// Parses "250us", "33.3ms", "2s" (and a bare "0").
SimTime parse_time(const std::string& text);
std::string format_time(SimTime t);

Scenario parse_scenario(std::istream& in, const std::string& name = "scenario");
Scenario parse_scenario_text(const std::string& text, const std::string& name = "scenario");
Scenario load_scenario(const std::string& path);

/// Re-checks cross-field invariants; parse_scenario calls this.
void validate(const Scenario& scenario);

}  // namespace picofail
