#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <queue>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "picofail/acquisition.hpp"
#include "picofail/console.hpp"
#include "picofail/device.hpp"
#include "picofail/event_log.hpp"
#include "picofail/plant.hpp"
#include "picofail/protocol.hpp"
#include "picofail/scenario.hpp"

namespace picofail {

struct SimResult {
    SimTime end;
    std::size_t crowbar_events = 0;
    std::array<double, kChannels> peak_voltage{};
    std::size_t events = 0;

    bool crowbar() const { return crowbar_events > 0; }
};

// Observation hook for tests and tools: sees every ADC sample with the plant
// voltage at the sampling instant.
struct SampleObservation {
    SimTime time;
    int channel;
    Counts counts;
    double plant_voltage;
};

// Deterministic discrete-event simulation of the failsafe board driving the
// turbine plant. Everything advances on sim time; the plant is integrated in
// steps of at most PlantConfig::dt between events.
class Simulator {
  public:
    explicit Simulator(Scenario scenario);

    /// Processes every event up to and including `t`.
    void run_until(SimTime t);
    /// Runs to the scenario duration.
    SimResult run();
    SimResult result() const;

    SimTime now() const { return now_; }
    const Scenario& scenario() const { return scenario_; }
    const PlantState& plant() const { return plant_; }
    Device& device() { return device_; }
    const Device& device() const { return device_; }
    EventLog& log() { return log_; }
    const EventLog& log() const { return log_; }

    // Operator actions, applied at the current sim time.
    void inject(protocol::Transport transport, const std::string& bytes);
    void inject_command(protocol::Transport transport, const std::string& json);
    void set_load(int channel, double fraction);
    void crowbar_reset(int channel);

    void set_sample_observer(std::function<void(const SampleObservation&)> observer) {
        sample_observer_ = std::move(observer);
    }

  private:
    enum class Priority : int { Plant = 0, Adc = 1, Serial = 2, Pwm = 3, Temp = 4, Stats = 5, Led = 6 };

    struct LoadChange {
        int channel;
        double fraction;
    };
    struct CrowbarReset {
        int channel;
    };
    struct SeriesUpdate {
        bool current;
        int value;
    };
    struct AdcComplete {
        int channel;
    };
    struct Inbound {
        protocol::Transport transport;
        std::string bytes;
    };
    struct FrameTimeoutCheck {};
    struct PwmBoundary {};
    struct TempPoll {};
    struct StatsReport {};
    struct LedSample {};

    using Payload = std::variant<LoadChange, CrowbarReset, SeriesUpdate, AdcComplete, Inbound, FrameTimeoutCheck,
                                 PwmBoundary, TempPoll, StatsReport, LedSample>;

    struct Queued {
        SimTime time;
        int priority;
        std::uint64_t seq;
        Payload payload;
    };
    struct Later {
        bool operator()(const Queued& a, const Queued& b) const {
            if (a.time != b.time) return a.time > b.time;
            if (a.priority != b.priority) return a.priority > b.priority;
            return a.seq > b.seq;
        }
    };

    void schedule(SimTime t, Priority p, Payload payload);
    void advance_plant(SimTime t);
    void handle(const Queued& ev);

    void on_adc_complete(int channel);
    void on_inbound(protocol::Transport transport, const std::string& bytes);
    void on_frame_event(const protocol::FrameEvent& ev);
    void on_console_line(const std::string& line);
    void execute(protocol::Transport transport, const std::string& text);
    void on_pwm_boundary();
    void on_temp_poll();
    void flush_deferred();
    void schedule_next_temp_poll();
    void schedule_frame_timeout();

    Scenario scenario_;
    AdcConfig adc_cfg_;
    PlantState plant_;
    Device device_;
    EventLog log_;
    RoundRobin adc_;
    TempScheduler temps_;
    protocol::FrameFsm bus_fsm_;
    std::string console_line_;
    SampleStats stats_;
    std::mt19937_64 rng_;

    std::priority_queue<Queued, std::vector<Queued>, Later> queue_;
    std::uint64_t seq_ = 0;
    SimTime now_{0};
    SimTime plant_time_{0};
    std::vector<Inbound> deferred_;
    std::optional<SimTime> temp_poll_at_;
    std::optional<SimTime> timeout_check_at_;
    std::map<std::string, TempFixture> fixtures_;

    bool activity_ = false;
    int led_channel_ = 0;
    std::size_t crowbar_events_ = 0;
    std::array<double, kChannels> peak_{};
    std::function<void(const SampleObservation&)> sample_observer_;
    std::vector<PlantEvent> plant_events_;
};

}  // namespace picofail
