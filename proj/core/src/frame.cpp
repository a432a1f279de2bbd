#include <array>
#include <cstdio>

#include "picofail/protocol.hpp"

namespace picofail::protocol {

namespace {

constexpr std::array<std::uint16_t, 256> make_crc_table() {
    std::array<std::uint16_t, 256> table{};
    for (std::uint16_t i = 0; i < 256; ++i) {
        std::uint16_t crc = i;
        for (int bit = 0; bit < 8; ++bit) {
            crc = (crc & 1u) ? static_cast<std::uint16_t>((crc >> 1) ^ 0xA001u) : static_cast<std::uint16_t>(crc >> 1);
        }
        table[i] = crc;
    }
    return table;
}

constexpr auto kCrcTable = make_crc_table();

bool is_upper_hex(std::uint8_t c) { return (c >= '0' && c <= '9') || (c >= 'A' && c <= 'F'); }

std::uint16_t parse_hex4(const std::string& s) {
    std::uint16_t v = 0;
    for (char c : s) v = static_cast<std::uint16_t>((v << 4) | (c <= '9' ? c - '0' : c - 'A' + 10));
    return v;
}

}  // namespace

const char* to_string(Transport t) { return t == Transport::Bus ? "bus" : "console"; }

std::uint16_t crc16(std::span<const std::uint8_t> bytes) {
    std::uint16_t crc = 0xFFFF;
    for (std::uint8_t b : bytes) crc = static_cast<std::uint16_t>((crc >> 8) ^ kCrcTable[(crc ^ b) & 0xFFu]);
    return crc;
}

std::uint16_t crc16(std::string_view text) {
    return crc16(std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::string encode_frame(std::string_view payload) {
    char hex[5];
    std::snprintf(hex, sizeof hex, "%04X", crc16(payload));
    std::string out;
    out.reserve(payload.size() + 6);
    out.append(payload);
    out.push_back('\n');
    out.append(hex, 4);
    out.push_back('\n');
    return out;
}

void FrameFsm::reset() {
    state_ = State::Idle;
    payload_.clear();
    crc_hex_.clear();
}

std::optional<FrameEvent> FrameFsm::poll(std::int64_t now_ms) {
    if (state_ != State::Idle && now_ms - last_byte_at_ > kFrameTimeoutMs) {
        reset();
        return FrameTimeout{};
    }
    return std::nullopt;
}

std::optional<FrameEvent> FrameFsm::feed_byte(std::uint8_t byte, std::int64_t now_ms) {
    // A stale partial frame is dropped before this byte is looked at; the byte
    // then starts a fresh frame.
    std::optional<FrameEvent> timed_out = poll(now_ms);
    last_byte_at_ = now_ms;

    switch (state_) {
        case State::Idle:
            if (byte == '\n' || byte == '\r') return timed_out;
            payload_.push_back(static_cast<char>(byte));
            state_ = State::Payload;
            return timed_out;

        case State::Payload:
            if (byte == '\n') {
                state_ = State::CrcHex;
                return std::nullopt;
            }
            if (payload_.size() >= kMaxPayload) {
                reset();
                return FrameCrcError{"payload too long"};
            }
            payload_.push_back(static_cast<char>(byte));
            return std::nullopt;

        case State::CrcHex:
            if (crc_hex_.size() < 4) {
                if (!is_upper_hex(byte)) {
                    reset();
                    return FrameCrcError{"malformed crc"};
                }
                crc_hex_.push_back(static_cast<char>(byte));
                return std::nullopt;
            }
            if (byte != '\n') {
                reset();
                return FrameCrcError{"missing frame terminator"};
            }
            {
                const std::uint16_t expected = parse_hex4(crc_hex_);
                const std::uint16_t actual = crc16(payload_);
                std::string payload = std::move(payload_);
                reset();
                if (expected != actual) return FrameCrcError{"crc mismatch"};
                return FrameOk{std::move(payload)};
            }
    }
    return std::nullopt;
}

std::vector<FrameEvent> feed_all(FrameFsm& fsm, std::string_view bytes, std::int64_t now_ms) {
    std::vector<FrameEvent> out;
    for (char c : bytes) {
        if (auto ev = fsm.feed_byte(static_cast<std::uint8_t>(c), now_ms)) out.push_back(std::move(*ev));
    }
    return out;
}

}  // namespace picofail::protocol
