#include "picofail/acquisition.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace picofail {

const char* to_string(AcquisitionMode mode) {
    return mode == AcquisitionMode::LegacyBlocking ? "legacy" : "optimized";
}

std::optional<AcquisitionMode> parse_acquisition_mode(const std::string& text) {
    if (text == "legacy" || text == "legacy-blocking") return AcquisitionMode::LegacyBlocking;
    if (text == "optimized" || text == "optimized-interrupt") return AcquisitionMode::OptimizedInterrupt;
    return std::nullopt;
}

SimTime conversion_time(int prescaler) {
    switch (prescaler) {
        case 16:
        case 32:
        case 64:
        case 128: {
            // 13 us + (p - 16) * 87/112 us, rounded to the nearest microsecond.
            const int extra = ((prescaler - 16) * 87 + 56) / 112;
            return SimTime{13 + extra};
        }
        default:
            throw std::invalid_argument("prescaler must be one of 16, 32, 64, 128; got " +
                                        std::to_string(prescaler));
    }
}

AdcConfig optimized_adc() { return adc_with_channel_period(SimTime{200}); }

AdcConfig legacy_adc() {
    AdcConfig cfg;
    cfg.prescaler = 128;
    cfg.mode = AcquisitionMode::LegacyBlocking;
    cfg.cycle_overhead = SimTime{100'000} - cfg.conversion() * cfg.channels;
    return cfg;
}

AdcConfig adc_with_channel_period(SimTime period, AcquisitionMode mode) {
    AdcConfig cfg;
    cfg.mode = mode;
    cfg.cycle_overhead = period - cfg.conversion() * cfg.channels;
    validate(cfg);
    return cfg;
}

void validate(const AdcConfig& cfg) {
    conversion_time(cfg.prescaler);
    if (cfg.channels < 1) throw std::invalid_argument("at least one ADC channel is required");
    if (cfg.cycle_overhead < SimTime{0}) {
        throw std::invalid_argument("channel period shorter than the conversions it contains");
    }
    if (cfg.noise_amplitude < 0) throw std::invalid_argument("noise amplitude must be >= 0");
}

RoundRobin::RoundRobin(AdcConfig cfg, SimTime origin) : cfg_(cfg), origin_(origin) { validate(cfg_); }

SimTime RoundRobin::slot_start(std::uint64_t k) const {
    const auto period = static_cast<std::uint64_t>(cfg_.channel_period().count());
    const auto n = static_cast<std::uint64_t>(cfg_.channels);
    const std::uint64_t cycle = k / n;
    const std::uint64_t within = k % n;
    return origin_ + SimTime{static_cast<std::int64_t>(cycle * period + within * period / n)};
}

SimTime RoundRobin::next_start() const { return slot_start(index_); }

Conversion RoundRobin::next_conversion(SimTime now) {
    const SimTime start = std::max(now, slot_start(index_));
    const int channel = static_cast<int>(index_ % static_cast<std::uint64_t>(cfg_.channels));
    ++index_;
    return {channel, start, start + cfg_.conversion()};
}

Counts sample_voltage(const AdcConfig& cfg, double plant_voltage, double volts_per_count, std::mt19937_64& rng) {
    double counts = std::round(std::max(plant_voltage, 0.0) / volts_per_count);
    if (cfg.noise_amplitude > 0) {
        std::uniform_int_distribution<int> noise(-cfg.noise_amplitude, cfg.noise_amplitude);
        counts += noise(rng);
    }
    return static_cast<Counts>(std::clamp(counts, 0.0, static_cast<double>(kAdcMax)));
}

TempScheduler::TempScheduler(std::vector<std::string> addresses, SimTime origin, SimTime period,
                             SimTime acquisition)
    : addresses_(std::move(addresses)), period_(period), acquisition_(acquisition) {
    const auto n = static_cast<std::int64_t>(addresses_.size());
    due_.reserve(addresses_.size());
    for (std::int64_t i = 0; i < n; ++i) {
        due_.push_back(origin + SimTime{period_.count() * i / n});
    }
}

std::optional<TempResult> TempScheduler::poll(SimTime now, const Reader& reader) {
    std::optional<TempResult> result;
    if (in_flight_ && now >= in_flight_->completion) {
        const auto& address = addresses_[in_flight_->sensor];
        result = TempResult{address, reader(address, now)};
        in_flight_.reset();
    }
    if (!in_flight_ && !addresses_.empty() && now >= due_[cursor_]) {
        in_flight_ = InFlight{cursor_, now + acquisition_};
        due_[cursor_] += period_;
        cursor_ = (cursor_ + 1) % addresses_.size();
    }
    return result;
}

std::optional<SimTime> TempScheduler::next_event() const {
    if (in_flight_) return in_flight_->completion;
    if (addresses_.empty()) return std::nullopt;
    return due_[cursor_];
}

}  // namespace picofail
