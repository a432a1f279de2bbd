#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "picofail/device.hpp"

namespace picofail::protocol {

using Json = nlohmann::ordered_json;

enum class Transport { Bus, Console };

const char* to_string(Transport t);

/// CRC-16/MODBUS: reflected poly 0xA001, init 0xFFFF, no final xor.
std::uint16_t crc16(std::span<const std::uint8_t> bytes);
std::uint16_t crc16(std::string_view text);

inline constexpr std::size_t kMaxPayload = 4096;
inline constexpr std::int64_t kFrameTimeoutMs = 5000;

/// Bus wire form: payload LF, four uppercase hex CRC digits, LF.
std::string encode_frame(std::string_view payload);

struct FrameOk {
    std::string payload;
};
struct FrameCrcError {
    std::string reason;
};
struct FrameTimeout {};

using FrameEvent = std::variant<FrameOk, FrameCrcError, FrameTimeout>;

// Byte-at-a-time receiver for the bus framing.
class FrameFsm {
  public:
    enum class State { Idle, Payload, CrcHex };

    std::optional<FrameEvent> feed_byte(std::uint8_t byte, std::int64_t now_ms);
    /// Fires the 5 s timeout without a new byte.
    std::optional<FrameEvent> poll(std::int64_t now_ms);

    State state() const { return state_; }
    std::int64_t last_byte_at() const { return last_byte_at_; }

  private:
    void reset();

    State state_ = State::Idle;
    std::string payload_;
    std::string crc_hex_;
    std::int64_t last_byte_at_ = 0;
};

/// Collects every event produced while feeding `bytes` at one instant.
std::vector<FrameEvent> feed_all(FrameFsm& fsm, std::string_view bytes, std::int64_t now_ms);

// Thrown by handlers for malformed parameters.
struct CommandError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CommandContext {
    Device& device;
    SimTime now;
    // Set by handlers that must not answer (RESET).
    bool suppress_response = false;
    bool device_reset = false;
};

using Handler = std::function<void(const Json& command, Json& response, CommandContext& ctx)>;

struct CommandEntry {
    std::string key;
    Handler handler;
};

class CommandTable {
  public:
    CommandTable() = default;
    explicit CommandTable(std::vector<CommandEntry> entries) : entries_(std::move(entries)) {}

    void add(std::string key, Handler handler);
    const CommandEntry* find(std::string_view key) const;
    const std::vector<CommandEntry>& entries() const { return entries_; }

  private:
    std::vector<CommandEntry> entries_;
};

/// getStatus, getParameter, getTempAddress, setRange, setThreshold,
/// setHoldTime, RESET.
const CommandTable& failsafe_commands();

struct DispatchResult {
    std::optional<Json> response;
    std::string command;  // handler key that fired, empty if none
    std::string error;    // why the command was rejected
    bool device_reset = false;
};

bool is_addressed_to_device(const Json& doc);

/// Runs one parsed command against the device. Addressing mismatches and
/// errors are silent on the bus and answered with {"responseId":1,"error":...}
/// on the console.
DispatchResult dispatch(const Json& doc, Device& device, SimTime now, Transport transport,
                        const CommandTable& table = failsafe_commands());

/// Parses then dispatches; a parse failure is handled like any other error.
DispatchResult dispatch_text(std::string_view text, Device& device, SimTime now, Transport transport,
                             const CommandTable& table = failsafe_commands());

/// Bus responses are framed with a CRC, console responses are JSON + LF. No
/// response encodes to zero bytes.
std::string encode_response(const std::optional<Json>& response, Transport transport);

}  // namespace picofail::protocol
