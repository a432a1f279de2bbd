#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <string>

#include <nlohmann/json.hpp>

#include "picofail/plant.hpp"

namespace picofail {

struct LedStatus {
    int channel;   // channel the blue LED is identifying, 0-based
    Duty duty;     // red LED intensity
    bool activity; // green LED: any serial traffic since the last LED frame
};

/// "LED ch=1 blink=2 red=127 green=on"
std::string render_led(const LedStatus& status);

inline constexpr SimTime kStatsPeriod{2'000'000};
inline constexpr SimTime kLedPeriod{100'000};

// Per-channel sample statistics between two reports.
class SampleStats {
  public:
    void add(int channel, double volts);
    /// Report payload for the window that just ended; starts a new window.
    nlohmann::ordered_json emit();
    std::uint64_t count(int channel) const { return windows_.at(channel).count; }

  private:
    struct Window {
        std::uint64_t count = 0;
        double min = std::numeric_limits<double>::infinity();
        double max = -std::numeric_limits<double>::infinity();
        double sum = 0.0;
    };
    std::array<Window, kChannels> windows_{};
};

}  // namespace picofail
