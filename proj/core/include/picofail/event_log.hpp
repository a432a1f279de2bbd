#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "picofail/control.hpp"

namespace picofail {

enum class EventKind { Sample, DutyApplied, Crowbar, Reset, FrameRx, FrameErr, Cmd, Resp, Temp, Stats, Led };

const char* to_string(EventKind kind);
std::optional<EventKind> parse_event_kind(const std::string& text);

struct EventRecord {
    SimTime time;
    EventKind kind;
    nlohmann::ordered_json payload;
};

/// `time<TAB>KIND<TAB>payload-json`, no trailing newline.
std::string format_record(const EventRecord& record);
/// Inverse of format_record; nullopt on a malformed line.
std::optional<EventRecord> parse_record(const std::string& line);

// Append-only, time-ordered record of a simulation run.
class EventLog {
  public:
    using Observer = std::function<void(const EventRecord&)>;

    /// Throws ContractViolation if `time` is earlier than the last record.
    void append(SimTime time, EventKind kind, nlohmann::ordered_json payload);

    /// Records are only kept in memory when retention is on (default).
    void set_retain(bool retain) { retain_ = retain; }
    void set_observer(Observer observer) { observer_ = std::move(observer); }
    void set_stream(std::ostream* out) { out_ = out; }

    const std::vector<EventRecord>& records() const { return records_; }
    std::size_t count(EventKind kind) const;
    std::size_t size() const { return total_; }
    std::string str() const;

  private:
    std::vector<EventRecord> records_;
    std::vector<std::size_t> counts_ = std::vector<std::size_t>(11, 0);
    std::size_t total_ = 0;
    SimTime last_{0};
    bool retain_ = true;
    Observer observer_;
    std::ostream* out_ = nullptr;
};

}  // namespace picofail
