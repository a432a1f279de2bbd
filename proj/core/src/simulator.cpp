#include "picofail/simulator.hpp"

#include <algorithm>
#include <cmath>

namespace picofail {

namespace {

using Json = nlohmann::ordered_json;

double round4(double v) { return std::round(v * 1e4) / 1e4; }

std::vector<std::string> sensor_addresses(const Scenario& s) {
    std::vector<std::string> out;
    for (const auto& f : s.temp_sensors) out.push_back(f.address);
    return out;
}

}  // namespace

Simulator::Simulator(Scenario scenario)
    : scenario_(std::move(scenario)),
      adc_cfg_(scenario_.adc()),
      plant_(initial_plant(scenario_.plant, scenario_.initial_load)),
      device_(scenario_.params),
      adc_(adc_cfg_),
      temps_(sensor_addresses(scenario_)),
      rng_(scenario_.seed) {
    validate(scenario_);
    peak_ = plant_.v;
    device_.current = scenario_.current;
    device_.pressure = scenario_.pressure;
    // Addresses are discovered at boot; readings appear as they complete.
    device_.temp_addresses = temps_.addresses();
    for (const auto& f : scenario_.temp_sensors) fixtures_[f.address] = f;

    for (const auto& p : scenario_.load) schedule(p.time, Priority::Plant, LoadChange{p.channel, p.fraction});
    for (const auto& r : scenario_.crowbar_resets) schedule(r.time, Priority::Plant, CrowbarReset{r.channel});
    for (const auto& p : scenario_.current_series) schedule(p.time, Priority::Plant, SeriesUpdate{true, p.value});
    for (const auto& p : scenario_.pressure_series) schedule(p.time, Priority::Plant, SeriesUpdate{false, p.value});
    for (const auto& c : scenario_.commands) {
        std::string bytes = c.text;
        if (!c.raw) bytes = c.transport == protocol::Transport::Bus ? protocol::encode_frame(c.text) : c.text + "\n";
        schedule(c.time, Priority::Serial, Inbound{c.transport, std::move(bytes)});
    }

    const Conversion first = adc_.next_conversion(SimTime{0});
    schedule(first.completion, Priority::Adc, AdcComplete{first.channel});
    schedule(SimTime{0}, Priority::Pwm, PwmBoundary{});
    schedule_next_temp_poll();
    if (scenario_.stats) schedule(kStatsPeriod, Priority::Stats, StatsReport{});
    if (scenario_.log_led) schedule(SimTime{0}, Priority::Led, LedSample{});
}

void Simulator::schedule(SimTime t, Priority p, Payload payload) {
    queue_.push(Queued{t, static_cast<int>(p), seq_++, std::move(payload)});
}

void Simulator::advance_plant(SimTime t) {
    const auto duties = device_.applied_duties();
    while (plant_time_ < t) {
        const SimTime h = std::min(scenario_.plant.dt, t - plant_time_);
        plant_events_.clear();
        plant_ = step(scenario_.plant, plant_, duties, h, &plant_events_);
        plant_time_ += h;
        for (int ch = 0; ch < kChannels; ++ch) peak_[ch] = std::max(peak_[ch], plant_.v[ch]);
        for (const auto& ev : plant_events_) {
            peak_[ev.channel] = std::max(peak_[ev.channel], ev.voltage);
            ++crowbar_events_;
            Json payload;
            payload["ch"] = ev.channel;
            payload["v"] = round4(ev.voltage);
            log_.append(plant_time_, EventKind::Crowbar, std::move(payload));
        }
    }
}

void Simulator::run_until(SimTime t) {
    while (!queue_.empty() && queue_.top().time <= t) {
        Queued ev = queue_.top();
        queue_.pop();
        advance_plant(ev.time);
        now_ = ev.time;
        handle(ev);
    }
    advance_plant(t);
    now_ = std::max(now_, t);
}

SimResult Simulator::run() {
    run_until(scenario_.duration);
    return result();
}

SimResult Simulator::result() const {
    SimResult r;
    r.end = now_;
    r.crowbar_events = crowbar_events_;
    r.peak_voltage = peak_;
    r.events = log_.size();
    return r;
}

void Simulator::handle(const Queued& ev) {
    std::visit(
        [this](const auto& p) {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, LoadChange>) {
                set_load(p.channel, p.fraction);
            } else if constexpr (std::is_same_v<T, CrowbarReset>) {
                crowbar_reset(p.channel);
            } else if constexpr (std::is_same_v<T, SeriesUpdate>) {
                (p.current ? device_.current : device_.pressure) = p.value;
            } else if constexpr (std::is_same_v<T, AdcComplete>) {
                on_adc_complete(p.channel);
            } else if constexpr (std::is_same_v<T, Inbound>) {
                if (adc_cfg_.mode == AcquisitionMode::LegacyBlocking) {
                    // The blocking loop only looks at the serial ports between
                    // conversions.
                    deferred_.push_back(p);
                } else {
                    on_inbound(p.transport, p.bytes);
                }
            } else if constexpr (std::is_same_v<T, FrameTimeoutCheck>) {
                timeout_check_at_.reset();
                if (auto fe = bus_fsm_.poll(now_.count() / 1000)) on_frame_event(*fe);
                schedule_frame_timeout();
            } else if constexpr (std::is_same_v<T, PwmBoundary>) {
                on_pwm_boundary();
            } else if constexpr (std::is_same_v<T, TempPoll>) {
                on_temp_poll();
            } else if constexpr (std::is_same_v<T, StatsReport>) {
                log_.append(now_, EventKind::Stats, stats_.emit());
                schedule(now_ + kStatsPeriod, Priority::Stats, StatsReport{});
            } else if constexpr (std::is_same_v<T, LedSample>) {
                LedStatus led{led_channel_, device_.channel(led_channel_).applied_duty, activity_};
                Json payload;
                payload["text"] = render_led(led);
                log_.append(now_, EventKind::Led, std::move(payload));
                activity_ = false;
                led_channel_ = (led_channel_ + 1) % kChannels;
                schedule(now_ + kLedPeriod, Priority::Led, LedSample{});
            }
        },
        ev.payload);
}

void Simulator::on_adc_complete(int channel) {
    const double v = plant_.v[channel];
    const Counts counts = sample_voltage(adc_cfg_, v, scenario_.volts_per_count, rng_);
    device_.on_sample(channel, counts, now_);
    stats_.add(channel, counts * scenario_.volts_per_count);
    if (sample_observer_) sample_observer_({now_, channel, counts, v});
    if (scenario_.log_samples) {
        Json payload;
        payload["ch"] = channel;
        payload["counts"] = counts;
        payload["v"] = round4(v);
        log_.append(now_, EventKind::Sample, std::move(payload));
    }
    flush_deferred();
    const Conversion next = adc_.next_conversion(now_);
    schedule(next.completion, Priority::Adc, AdcComplete{next.channel});
}

void Simulator::flush_deferred() {
    if (deferred_.empty()) return;
    auto pending = std::move(deferred_);
    deferred_.clear();
    for (const auto& in : pending) on_inbound(in.transport, in.bytes);
}

void Simulator::inject(protocol::Transport transport, const std::string& bytes) {
    schedule(now_, Priority::Serial, Inbound{transport, bytes});
    run_until(now_);
}

void Simulator::inject_command(protocol::Transport transport, const std::string& json) {
    inject(transport, transport == protocol::Transport::Bus ? protocol::encode_frame(json) : json + "\n");
}

void Simulator::on_inbound(protocol::Transport transport, const std::string& bytes) {
    if (!bytes.empty()) activity_ = true;
    if (transport == protocol::Transport::Bus) {
        const auto now_ms = now_.count() / 1000;
        for (char c : bytes) {
            if (auto fe = bus_fsm_.feed_byte(static_cast<std::uint8_t>(c), now_ms)) on_frame_event(*fe);
        }
        schedule_frame_timeout();
        return;
    }
    for (char c : bytes) {
        if (c == '\n') {
            std::string line = std::move(console_line_);
            console_line_.clear();
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (!line.empty()) on_console_line(line);
        } else {
            console_line_.push_back(c);
        }
    }
}

void Simulator::schedule_frame_timeout() {
    if (bus_fsm_.state() == protocol::FrameFsm::State::Idle) return;
    // First millisecond at which the partial frame is more than 5 s old.
    const SimTime at{(bus_fsm_.last_byte_at() + protocol::kFrameTimeoutMs + 1) * 1000};
    if (timeout_check_at_ && *timeout_check_at_ <= at) return;
    timeout_check_at_ = at;
    schedule(at, Priority::Serial, FrameTimeoutCheck{});
}

void Simulator::on_frame_event(const protocol::FrameEvent& fe) {
    if (const auto* ok = std::get_if<protocol::FrameOk>(&fe)) {
        Json payload;
        payload["bytes"] = ok->payload.size();
        log_.append(now_, EventKind::FrameRx, std::move(payload));
        execute(protocol::Transport::Bus, ok->payload);
    } else if (const auto* err = std::get_if<protocol::FrameCrcError>(&fe)) {
        Json payload;
        payload["reason"] = err->reason;
        log_.append(now_, EventKind::FrameErr, std::move(payload));
    } else {
        Json payload;
        payload["reason"] = "timeout";
        log_.append(now_, EventKind::FrameErr, std::move(payload));
    }
}

void Simulator::on_console_line(const std::string& line) { execute(protocol::Transport::Console, line); }

void Simulator::execute(protocol::Transport transport, const std::string& text) {
    auto result = protocol::dispatch_text(text, device_, now_, transport);

    Json cmd;
    cmd["transport"] = protocol::to_string(transport);
    if (!result.command.empty()) cmd["command"] = result.command;
    if (!result.error.empty()) cmd["error"] = result.error;
    cmd["request"] = text;
    log_.append(now_, EventKind::Cmd, std::move(cmd));

    if (result.device_reset) {
        Json payload;
        payload["device"] = true;
        log_.append(now_, EventKind::Reset, std::move(payload));
    }
    if (result.response) {
        activity_ = true;
        Json resp;
        resp["transport"] = protocol::to_string(transport);
        resp["bytes"] = protocol::encode_response(result.response, transport).size();
        resp["response"] = *result.response;
        log_.append(now_, EventKind::Resp, std::move(resp));
    }
}

void Simulator::on_pwm_boundary() {
    const auto changed = device_.tick_boundary(now_);
    for (int ch = 0; ch < kChannels; ++ch) {
        if (!changed[ch]) continue;
        Json payload;
        payload["ch"] = ch;
        payload["duty"] = device_.channel(ch).applied_duty;
        log_.append(now_, EventKind::DutyApplied, std::move(payload));
    }
    schedule(now_ + kPwmPeriod, Priority::Pwm, PwmBoundary{});
}

void Simulator::schedule_next_temp_poll() {
    const auto next = temps_.next_event();
    if (!next) return;
    const SimTime at = std::max(*next, now_);
    if (temp_poll_at_ && *temp_poll_at_ == at) return;
    temp_poll_at_ = at;
    schedule(at, Priority::Temp, TempPoll{});
}

void Simulator::on_temp_poll() {
    if (temp_poll_at_ && *temp_poll_at_ != now_) return;  // superseded
    temp_poll_at_.reset();
    auto reader = [this](const std::string& address, SimTime now) -> std::optional<double> {
        auto it = fixtures_.find(address);
        if (it == fixtures_.end()) return std::nullopt;
        if (it->second.absent_from && now >= *it->second.absent_from) return std::nullopt;
        return it->second.celsius;
    };
    if (auto r = temps_.poll(now_, reader)) {
        Json payload;
        payload["addr"] = r->address;
        if (r->celsius) {
            device_.temperatures[r->address] = *r->celsius;
            payload["celsius"] = *r->celsius;
        } else {
            device_.temperatures.erase(r->address);
            payload["dropped"] = true;
        }
        log_.append(now_, EventKind::Temp, std::move(payload));
    }
    schedule_next_temp_poll();
}

void Simulator::set_load(int channel, double fraction) {
    advance_plant(now_);
    fraction = std::clamp(fraction, 0.0, 1.0);
    if (channel < 0) {
        plant_.load_fraction.fill(fraction);
    } else {
        plant_.load_fraction.at(channel) = fraction;
    }
}

void Simulator::crowbar_reset(int channel) {
    advance_plant(now_);
    std::vector<PlantEvent> events;
    plant_ = manual_reset(plant_, channel, &events);
    for (const auto& ev : events) {
        Json payload;
        payload["crowbar"] = ev.channel;
        if (ev.kind == PlantEvent::Kind::ResetIgnored) {
            payload["ignored"] = true;
            payload["warning"] = "crowbar not latched";
        }
        log_.append(now_, EventKind::Reset, std::move(payload));
    }
}

}  // namespace picofail
