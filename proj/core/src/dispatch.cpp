#include <array>
#include <cmath>
#include <cstdint>

#include "picofail/protocol.hpp"

namespace picofail::protocol {

namespace {

constexpr std::array<const char*, 3> kAddressKeys = {"requestId", "manufacturerName", "modelName"};

bool is_address_key(const std::string& key) {
    for (const char* k : kAddressKeys) {
        if (key == k) return true;
    }
    return false;
}

// Reads a [channel, value] pair.
std::pair<int, int> channel_value(const Json& args, const char* command) {
    if (!args.is_array() || args.size() != 2 || !args[0].is_number_integer() || !args[1].is_number_integer()) {
        throw CommandError(std::string(command) + " expects [channel, value]");
    }
    const auto channel = args[0].get<std::int64_t>();
    const auto value = args[1].get<std::int64_t>();
    if (channel < 0 || channel >= kChannels) {
        throw CommandError(std::string(command) + ": channel must be 0..2");
    }
    if (value < INT32_MIN || value > INT32_MAX) throw CommandError(std::string(command) + ": value out of range");
    return {static_cast<int>(channel), static_cast<int>(value)};
}

template <class Setter>
void apply_setter(const Json& cmd, Json& resp, CommandContext& ctx, const char* command, const char* echo_key,
                  Setter setter) {
    const auto [channel, value] = channel_value(cmd.at(command), command);
    try {
        ctx.device.set_params(channel, setter(ctx.device.params(channel), value));
    } catch (const RangeError& e) {
        throw CommandError(std::string(command) + ": " + e.what());
    }
    resp[echo_key] = Json::array({channel, value});
}

void get_status(const Json&, Json& resp, CommandContext& ctx) {
    const Device& dev = ctx.device;
    resp["upTime"] = dev.uptime_ms(ctx.now);
    resp["current"] = dev.current;
    resp["pressure"] = dev.pressure;
    Json temps = Json::array();
    for (const auto& addr : dev.temp_addresses) {
        auto it = dev.temperatures.find(addr);
        if (it != dev.temperatures.end()) temps.push_back(static_cast<int>(std::lround(it->second)));
    }
    resp["temp"] = std::move(temps);
    Json voltage = Json::array();
    Json dump = Json::array();
    for (int ch = 0; ch < kChannels; ++ch) {
        voltage.push_back(dev.channel(ch).last_sample);
        dump.push_back(dev.channel(ch).applied_duty);
    }
    resp["voltage"] = std::move(voltage);
    resp["dump"] = std::move(dump);
}

void get_parameter(const Json&, Json& resp, CommandContext& ctx) {
    Json th = Json::array(), range = Json::array(), hold = Json::array();
    for (const auto& p : ctx.device.params()) {
        th.push_back(p.threshold);
        range.push_back(p.range);
        hold.push_back(p.hold_ms);
    }
    // Lower-case here, upper-case in the setter echoes.
    resp["v_th"] = std::move(th);
    resp["v_range"] = std::move(range);
    resp["T_hold"] = std::move(hold);
}

void get_temp_address(const Json&, Json& resp, CommandContext& ctx) {
    resp["tempAddr"] = ctx.device.temp_addresses;
}

void set_range_cmd(const Json& cmd, Json& resp, CommandContext& ctx) {
    apply_setter(cmd, resp, ctx, "setRange", "V_range",
                 [](const ChannelParams& p, int v) { return set_range(p, v); });
}

void set_threshold_cmd(const Json& cmd, Json& resp, CommandContext& ctx) {
    apply_setter(cmd, resp, ctx, "setThreshold", "V_th",
                 [](const ChannelParams& p, int v) { return set_threshold(p, v); });
}

void set_hold_time_cmd(const Json& cmd, Json& resp, CommandContext& ctx) {
    apply_setter(cmd, resp, ctx, "setHoldTime", "T_hold",
                 [](const ChannelParams& p, int v) { return set_hold_time(p, v); });
}

void reset_cmd(const Json&, Json&, CommandContext& ctx) {
    ctx.device.reset(ctx.now);
    ctx.suppress_response = true;
    ctx.device_reset = true;
}

Json error_response(const std::string& message) {
    Json resp;
    resp["responseId"] = Device::kId;
    resp["error"] = message;
    return resp;
}

}  // namespace

void CommandTable::add(std::string key, Handler handler) { entries_.push_back({std::move(key), std::move(handler)}); }

const CommandEntry* CommandTable::find(std::string_view key) const {
    for (const auto& e : entries_) {
        if (e.key == key) return &e;
    }
    return nullptr;
}

const CommandTable& failsafe_commands() {
    static const CommandTable table({
        {"getStatus", get_status},
        {"getParameter", get_parameter},
        {"getTempAddress", get_temp_address},
        {"setRange", set_range_cmd},
        {"setThreshold", set_threshold_cmd},
        {"setHoldTime", set_hold_time_cmd},
        {"RESET", reset_cmd},
    });
    return table;
}

bool is_addressed_to_device(const Json& doc) {
    if (!doc.is_object()) return false;
    auto id = doc.find("requestId");
    auto mfr = doc.find("manufacturerName");
    auto model = doc.find("modelName");
    return id != doc.end() && id->is_number_integer() && id->get<std::int64_t>() == Device::kId &&
           mfr != doc.end() && *mfr == Device::kManufacturer && model != doc.end() && *model == Device::kModel;
}

DispatchResult dispatch(const Json& doc, Device& device, SimTime now, Transport transport,
                        const CommandTable& table) {
    DispatchResult result;
    auto reject = [&](std::string message) {
        result.error = std::move(message);
        if (transport == Transport::Console) result.response = error_response(result.error);
        return result;
    };

    if (!doc.is_object()) return reject("command must be a JSON object");
    if (!is_addressed_to_device(doc)) return reject("not addressed to device 1 (RDIS Failsafe)");

    std::vector<std::string> commands;
    for (const auto& [key, value] : doc.items()) {
        if (!is_address_key(key)) commands.push_back(key);
    }
    if (commands.empty()) return reject("no command");
    if (commands.size() > 1) return reject("more than one command in request");

    const CommandEntry* entry = table.find(commands.front());
    if (!entry) return reject("unknown command: " + commands.front());

    Json response;
    response["responseId"] = Device::kId;
    CommandContext ctx{device, now};
    try {
        entry->handler(doc, response, ctx);
    } catch (const CommandError& e) {
        return reject(e.what());
    }
    result.command = entry->key;
    result.device_reset = ctx.device_reset;
    if (!ctx.suppress_response) result.response = std::move(response);
    return result;
}

DispatchResult dispatch_text(std::string_view text, Device& device, SimTime now, Transport transport,
                             const CommandTable& table) {
    Json doc = Json::parse(text, nullptr, false);
    if (doc.is_discarded()) {
        DispatchResult result;
        result.error = "malformed JSON";
        if (transport == Transport::Console) result.response = error_response(result.error);
        return result;
    }
    return dispatch(doc, device, now, transport, table);
}

std::string encode_response(const std::optional<Json>& response, Transport transport) {
    if (!response) return {};
    const std::string payload = response->dump();
    if (transport == Transport::Bus) return encode_frame(payload);
    return payload + "\n";
}

}  // namespace picofail::protocol
