#include "picofail/console.hpp"

#include <algorithm>
#include <cmath>

namespace picofail {

namespace {
double round4(double v) { return std::round(v * 1e4) / 1e4; }
}  // namespace

std::string render_led(const LedStatus& status) {
    return "LED ch=" + std::to_string(status.channel) + " blink=" + std::to_string(status.channel + 1) +
           " red=" + std::to_string(status.duty) + " green=" + (status.activity ? "on" : "off");
}

void SampleStats::add(int channel, double volts) {
    auto& w = windows_.at(channel);
    ++w.count;
    w.sum += volts;
    w.min = std::min(w.min, volts);
    w.max = std::max(w.max, volts);
}

nlohmann::ordered_json SampleStats::emit() {
    nlohmann::ordered_json channels = nlohmann::ordered_json::array();
    for (auto& w : windows_) {
        nlohmann::ordered_json entry;
        entry["samples"] = w.count;
        if (w.count > 0) {
            entry["min"] = round4(w.min);
            entry["mean"] = round4(w.sum / static_cast<double>(w.count));
            entry["max"] = round4(w.max);
        } else {
            entry["min"] = nullptr;
            entry["mean"] = nullptr;
            entry["max"] = nullptr;
        }
        channels.push_back(std::move(entry));
        w = Window{};
    }
    nlohmann::ordered_json payload;
    payload["channels"] = std::move(channels);
    return payload;
}

}  // namespace picofail
