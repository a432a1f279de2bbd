#include "picofail/event_log.hpp"

#include <array>
#include <ostream>
#include <sstream>

namespace picofail {

namespace {
constexpr std::array<const char*, 11> kKindNames = {"SAMPLE", "DUTY_APPLIED", "CROWBAR", "RESET",
                                                    "FRAME_RX", "FRAME_ERR", "CMD", "RESP",
                                                    "TEMP", "STATS", "LED"};
}

const char* to_string(EventKind kind) { return kKindNames[static_cast<std::size_t>(kind)]; }

std::optional<EventKind> parse_event_kind(const std::string& text) {
    for (std::size_t i = 0; i < kKindNames.size(); ++i) {
        if (text == kKindNames[i]) return static_cast<EventKind>(i);
    }
    return std::nullopt;
}

std::string format_record(const EventRecord& record) {
    std::string line = std::to_string(record.time.count());
    line += '\t';
    line += to_string(record.kind);
    line += '\t';
    line += record.payload.dump();
    return line;
}

std::optional<EventRecord> parse_record(const std::string& line) {
    const auto tab1 = line.find('\t');
    if (tab1 == std::string::npos) return std::nullopt;
    const auto tab2 = line.find('\t', tab1 + 1);
    if (tab2 == std::string::npos) return std::nullopt;
    EventRecord rec;
    try {
        std::size_t used = 0;
        rec.time = SimTime{std::stoll(line.substr(0, tab1), &used)};
        if (used != tab1) return std::nullopt;
    } catch (const std::exception&) {
        return std::nullopt;
    }
    auto kind = parse_event_kind(line.substr(tab1 + 1, tab2 - tab1 - 1));
    if (!kind) return std::nullopt;
    rec.kind = *kind;
    rec.payload = nlohmann::ordered_json::parse(line.substr(tab2 + 1), nullptr, false);
    if (rec.payload.is_discarded()) return std::nullopt;
    return rec;
}

void EventLog::append(SimTime time, EventKind kind, nlohmann::ordered_json payload) {
    if (time < last_) {
        throw ContractViolation("event log time went backwards: " + std::to_string(time.count()) + " < " +
                                std::to_string(last_.count()));
    }
    last_ = time;
    ++total_;
    ++counts_[static_cast<std::size_t>(kind)];
    EventRecord rec{time, kind, std::move(payload)};
    if (out_) *out_ << format_record(rec) << '\n';
    if (observer_) observer_(rec);
    if (retain_) records_.push_back(std::move(rec));
}

std::size_t EventLog::count(EventKind kind) const { return counts_[static_cast<std::size_t>(kind)]; }

std::string EventLog::str() const {
    std::ostringstream os;
    for (const auto& r : records_) os << format_record(r) << '\n';
    return os.str();
}

}  // namespace picofail
