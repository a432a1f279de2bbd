#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "picofail/control.hpp"

namespace picofail {

enum class AcquisitionMode { LegacyBlocking, OptimizedInterrupt };

const char* to_string(AcquisitionMode mode);
std::optional<AcquisitionMode> parse_acquisition_mode(const std::string& text);

/// ADC conversion time for a prescaler in {16, 32, 64, 128}: 13 us at 16,
/// 100 us at 128, linear in between. Throws std::invalid_argument otherwise.
SimTime conversion_time(int prescaler);

struct AdcConfig {
    int prescaler = 16;
    AcquisitionMode mode = AcquisitionMode::OptimizedInterrupt;
    // Fixed loop cost added once per round-robin cycle.
    SimTime cycle_overhead{161};
    int noise_amplitude = 0;
    int channels = 3;

    SimTime conversion() const { return conversion_time(prescaler); }
    /// Time between two samples of the same channel.
    SimTime channel_period() const { return conversion() * channels + cycle_overhead; }
};

/// Interrupt-driven prescaler-16 acquisition: 200 us per channel.
AdcConfig optimized_adc();
/// analogRead() with default prescaler and a 100 ms per-channel loop.
AdcConfig legacy_adc();
/// Prescaler-16 acquisition tuned to an arbitrary per-channel period.
AdcConfig adc_with_channel_period(SimTime period, AcquisitionMode mode = AcquisitionMode::OptimizedInterrupt);

void validate(const AdcConfig& cfg);

struct Conversion {
    int channel;
    SimTime start;
    SimTime completion;
};

// Round-robin conversion sequencer. Conversion k starts at
// floor(k * channel_period / channels), so spacing is uniform to within 1 us
// and each channel's period is exact.
class RoundRobin {
  public:
    explicit RoundRobin(AdcConfig cfg, SimTime origin = SimTime{0});

    /// Issues the next conversion, starting at max(now, its slot).
    Conversion next_conversion(SimTime now);
    /// Start time of the next conversion without issuing it.
    SimTime next_start() const;
    std::uint64_t issued() const { return index_; }
    const AdcConfig& config() const { return cfg_; }

  private:
    SimTime slot_start(std::uint64_t k) const;

    AdcConfig cfg_;
    SimTime origin_;
    std::uint64_t index_ = 0;
};

/// Quantizes a plant voltage to ADC counts, with optional uniform noise.
Counts sample_voltage(const AdcConfig& cfg, double plant_voltage, double volts_per_count, std::mt19937_64& rng);

inline constexpr SimTime kTempReadPeriod{30'000'000};
inline constexpr SimTime kTempAcquisition{750'000};

struct TempResult {
    std::string address;
    // nullopt: the sensor did not answer at completion and the reading was dropped.
    std::optional<double> celsius;
};

// Non-blocking DS18B20-style round robin. Sensor i of N is first read at
// i * period / N and then every period; at most one read is in flight.
class TempScheduler {
  public:
    using Reader = std::function<std::optional<double>(const std::string& address, SimTime now)>;

    explicit TempScheduler(std::vector<std::string> addresses, SimTime origin = SimTime{0},
                           SimTime period = kTempReadPeriod, SimTime acquisition = kTempAcquisition);

    /// Completes an in-flight read whose acquisition time has elapsed, then
    /// starts the next due read if the bus is idle.
    std::optional<TempResult> poll(SimTime now, const Reader& reader);

    /// Earliest time poll() can do anything; nullopt with no sensors.
    std::optional<SimTime> next_event() const;

    const std::vector<std::string>& addresses() const { return addresses_; }
    bool busy() const { return in_flight_.has_value(); }

  private:
    struct InFlight {
        std::size_t sensor;
        SimTime completion;
    };

    std::vector<std::string> addresses_;
    SimTime period_;
    SimTime acquisition_;
    std::vector<SimTime> due_;
    std::size_t cursor_ = 0;
    std::optional<InFlight> in_flight_;
};

}  // namespace picofail
