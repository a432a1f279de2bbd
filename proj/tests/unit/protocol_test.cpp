#include <gtest/gtest.h>

#include <random>

#include "picofail/protocol.hpp"

using namespace picofail;
using namespace picofail::protocol;
using namespace std::chrono_literals;

namespace {

// Bit-at-a-time reference for the table-driven implementation.
std::uint16_t crc16_bitwise(std::string_view s) {
    std::uint16_t crc = 0xFFFF;
    for (unsigned char c : s) {
        crc ^= c;
        for (int i = 0; i < 8; ++i) crc = (crc & 1) ? (crc >> 1) ^ 0xA001 : crc >> 1;
    }
    return crc;
}

std::string request(const std::string& command_fragment, int id = 1) {
    return R"({"requestId":)" + std::to_string(id) +
           R"(,"manufacturerName":"RDIS","modelName":"Failsafe",)" + command_fragment + "}";
}

std::vector<FrameEvent> feed(FrameFsm& fsm, std::string_view bytes, std::int64_t ms = 0) {
    return feed_all(fsm, bytes, ms);
}

}  // namespace

TEST(Crc16, CheckValue) {
    EXPECT_EQ(crc16("123456789"), 0x4B37);
    EXPECT_EQ(crc16(""), 0xFFFF);
}

TEST(Crc16, MatchesBitwiseReference) {
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<int> byte(0, 255), len(0, 300);
    for (int i = 0; i < 500; ++i) {
        std::string s(len(rng), '\0');
        for (auto& c : s) c = static_cast<char>(byte(rng));
        ASSERT_EQ(crc16(s), crc16_bitwise(s));
    }
}

TEST(Crc16, DetectsEverySingleBitFlip) {
    std::string s(256, '\0');
    for (int i = 0; i < 256; ++i) s[i] = static_cast<char>(i);
    const auto good = crc16(s);
    for (std::size_t i = 0; i < s.size(); ++i) {
        for (int bit = 0; bit < 8; ++bit) {
            std::string t = s;
            t[i] = static_cast<char>(t[i] ^ (1 << bit));
            ASSERT_NE(crc16(t), good) << i << ':' << bit;
        }
    }
}

TEST(Frame, EncodesPayloadCrcAndTerminators) {
    EXPECT_EQ(encode_frame("123456789"), "123456789\n4B37\n");
    const auto f = encode_frame("{}");
    ASSERT_EQ(f.size(), 8u);
    for (char c : f.substr(3, 4)) EXPECT_TRUE(std::isxdigit(static_cast<unsigned char>(c)) && !std::islower(c));
}

TEST(FrameFsm, RoundTrip) {
    FrameFsm fsm;
    const std::string payload = request(R"("getStatus":null)");
    const auto events = feed(fsm, encode_frame(payload));
    ASSERT_EQ(events.size(), 1u);
    ASSERT_TRUE(std::holds_alternative<FrameOk>(events[0]));
    EXPECT_EQ(std::get<FrameOk>(events[0]).payload, payload);
    EXPECT_EQ(fsm.state(), FrameFsm::State::Idle);
}

TEST(FrameFsm, BackToBackFramesAndLeadingNewlines) {
    FrameFsm fsm;
    const auto events = feed(fsm, "\r\n\n" + encode_frame("a") + encode_frame("b"));
    ASSERT_EQ(events.size(), 2u);
    EXPECT_EQ(std::get<FrameOk>(events[0]).payload, "a");
    EXPECT_EQ(std::get<FrameOk>(events[1]).payload, "b");
}

TEST(FrameFsm, CorruptPayloadIsACrcError) {
    FrameFsm fsm;
    std::string f = encode_frame("hello");
    f[1] = 'E';
    const auto events = feed(fsm, f);
    ASSERT_EQ(events.size(), 1u);
    EXPECT_EQ(std::get<FrameCrcError>(events[0]).reason, "crc mismatch");
}

TEST(FrameFsm, LowercaseHexIsRejected) {
    FrameFsm fsm;
    const auto events = feed(fsm, "123456789\n4b37\n");
    ASSERT_EQ(events.size(), 1u);
    EXPECT_EQ(std::get<FrameCrcError>(events[0]).reason, "malformed crc");
}

TEST(FrameFsm, MissingTerminator) {
    FrameFsm fsm;
    const auto events = feed(fsm, "123456789\n4B37x");
    ASSERT_EQ(events.size(), 1u);
    EXPECT_EQ(std::get<FrameCrcError>(events[0]).reason, "missing frame terminator");
}

TEST(FrameFsm, OversizePayload) {
    FrameFsm fsm;
    const auto events = feed(fsm, std::string(kMaxPayload + 1, 'x'));
    ASSERT_EQ(events.size(), 1u);
    EXPECT_EQ(std::get<FrameCrcError>(events[0]).reason, "payload too long");
}

TEST(FrameFsm, TimeoutDiscardsPartialFrame) {
    FrameFsm fsm;
    EXPECT_TRUE(feed(fsm, "{\"partial", 1000).empty());
    EXPECT_FALSE(fsm.poll(6000));  // exactly 5 s of silence is still inside
    const auto t = fsm.poll(6001);
    ASSERT_TRUE(t);
    EXPECT_TRUE(std::holds_alternative<FrameTimeout>(*t));
    EXPECT_EQ(fsm.state(), FrameFsm::State::Idle);

    const auto events = feed(fsm, encode_frame("ok"), 7000);
    ASSERT_EQ(events.size(), 1u);
    EXPECT_EQ(std::get<FrameOk>(events[0]).payload, "ok");
}

TEST(FrameFsm, LateByteTimesOutThenStartsNewFrame) {
    FrameFsm fsm;
    feed(fsm, "junk", 0);
    const auto events = feed(fsm, encode_frame("fresh"), 10'000);
    ASSERT_EQ(events.size(), 2u);
    EXPECT_TRUE(std::holds_alternative<FrameTimeout>(events[0]));
    EXPECT_EQ(std::get<FrameOk>(events[1]).payload, "fresh");
}

TEST(FrameFsm, IdleNeverTimesOut) {
    FrameFsm fsm;
    EXPECT_FALSE(fsm.poll(1'000'000));
}

TEST(FrameProperty, RandomPayloadsRoundTripAndFlipsAreCaught) {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<int> byte(0x20, 0x7E), len(1, 4096);
    for (int i = 0; i < 200; ++i) {
        std::string p(len(rng), ' ');
        for (auto& c : p) c = static_cast<char>(byte(rng));
        FrameFsm fsm;
        const auto ok = feed(fsm, encode_frame(p));
        ASSERT_EQ(ok.size(), 1u);
        ASSERT_EQ(std::get<FrameOk>(ok[0]).payload, p);

        std::string bad = encode_frame(p);
        const std::size_t pos = std::uniform_int_distribution<std::size_t>(0, p.size() - 1)(rng);
        bad[pos] = static_cast<char>(bad[pos] ^ (1 << (i % 7)));
        const auto evs = feed(fsm, bad);
        for (const auto& ev : evs) ASSERT_FALSE(std::holds_alternative<FrameOk>(ev));
    }
}

class DispatchTest : public ::testing::Test {
  protected:
    DispatchResult run(const std::string& text, Transport t = Transport::Bus, SimTime now = 55'247'000us) {
        return dispatch_text(text, device, now, t);
    }
    Device device;
};

TEST_F(DispatchTest, GetStatusKeysInOrder) {
    device.current = 509;
    device.temp_addresses = {"28:98:2C:77:91:06:02:6C"};
    device.temperatures["28:98:2C:77:91:06:02:6C"] = 23.4;
    const auto r = run(request(R"("getStatus":null)"));
    ASSERT_TRUE(r.response);
    EXPECT_EQ(r.command, "getStatus");
    EXPECT_EQ(r.response->dump(),
              R"({"responseId":1,"upTime":55247,"current":509,"pressure":0,"temp":[23],"voltage":[0,0,0],"dump":[0,0,0]})");
}

TEST_F(DispatchTest, GetParameterDefaults) {
    const auto r = run(request(R"("getParameter":null)"));
    ASSERT_TRUE(r.response);
    EXPECT_EQ(r.response->dump(),
              R"({"responseId":1,"v_th":[128,128,128],"v_range":[118,118,118],"T_hold":[100,100,100]})");
}

TEST_F(DispatchTest, GetTempAddress) {
    device.temp_addresses = {"28:98:2C:77:91:06:02:6C"};
    const auto r = run(request(R"("getTempAddress":null)"));
    EXPECT_EQ(r.response->dump(), R"({"responseId":1,"tempAddr":["28:98:2C:77:91:06:02:6C"]})");
}

TEST_F(DispatchTest, SettersEchoAndApply) {
    auto r = run(request(R"("setRange":[1,90])"));
    EXPECT_EQ(r.response->dump(), R"({"responseId":1,"V_range":[1,90]})");
    EXPECT_EQ(device.params(1).range, 90);
    EXPECT_EQ(device.params(1).scale, 725);
    EXPECT_EQ(device.params(0).range, 118);

    r = run(request(R"("setThreshold":[0,120])"));
    EXPECT_EQ(r.response->dump(), R"({"responseId":1,"V_th":[0,120]})");
    EXPECT_EQ(device.params(0).threshold, 120);

    r = run(request(R"("setHoldTime":[2,50])"));
    EXPECT_EQ(r.response->dump(), R"({"responseId":1,"T_hold":[2,50]})");
    EXPECT_EQ(device.params(2).hold_ms, 50);
}

TEST_F(DispatchTest, WrongAddressIsSilentOnBus) {
    const auto before = device.params();
    for (const auto& text : {request(R"("setRange":[1,90])", 2),
                             std::string(R"({"requestId":1,"manufacturerName":"rdis","modelName":"Failsafe","getStatus":null})"),
                             std::string(R"({"requestId":1,"manufacturerName":"RDIS","getStatus":null})")}) {
        const auto bus = run(text, Transport::Bus);
        EXPECT_FALSE(bus.response) << text;
        EXPECT_FALSE(bus.error.empty());
        EXPECT_EQ(encode_response(bus.response, Transport::Bus), "");
        const auto con = run(text, Transport::Console);
        ASSERT_TRUE(con.response);
        EXPECT_EQ((*con.response)["responseId"], 1);
        EXPECT_TRUE(con.response->contains("error"));
    }
    EXPECT_EQ(device.params(), before);
}

TEST_F(DispatchTest, MalformedParameters) {
    const auto before = device.params();
    const std::vector<std::pair<std::string, std::string>> cases = {
        {R"("setRange":[3,90])", "setRange: channel must be 0..2"},
        {R"("setRange":[-1,90])", "setRange: channel must be 0..2"},
        {R"("setRange":[1,0])", "setRange: "},
        {R"("setRange":[1,1024])", "setRange: "},
        {R"("setThreshold":[0,2000])", "setThreshold: "},
        {R"("setHoldTime":[0,-5])", "setHoldTime: "},
        {R"("setRange":[1])", "setRange expects [channel, value]"},
        {R"("setRange":"1,90")", "setRange expects [channel, value]"},
        {R"("setRange":[1,90.5])", "setRange expects [channel, value]"},
    };
    for (const auto& [frag, prefix] : cases) {
        const auto r = run(request(frag), Transport::Console);
        ASSERT_TRUE(r.response) << frag;
        EXPECT_EQ(r.error.rfind(prefix, 0), 0u) << r.error;
        EXPECT_EQ((*r.response)["error"], r.error);
        EXPECT_FALSE(run(request(frag), Transport::Bus).response);
    }
    EXPECT_EQ(device.params(), before);
}

TEST_F(DispatchTest, UnknownMissingAndMultipleCommands) {
    EXPECT_EQ(run(request(R"("getstatus":null)"), Transport::Console).error, "unknown command: getstatus");
    EXPECT_EQ(run(R"({"requestId":1,"manufacturerName":"RDIS","modelName":"Failsafe"})", Transport::Console).error,
              "no command");
    EXPECT_EQ(run(request(R"("getStatus":null,"getParameter":null)"), Transport::Console).error,
              "more than one command in request");
    EXPECT_EQ(run("[1,2]", Transport::Console).error, "command must be a JSON object");
    EXPECT_EQ(run("{nope", Transport::Console).error, "malformed JSON");
    EXPECT_FALSE(run("{nope", Transport::Bus).response);
}

TEST_F(DispatchTest, ResetIsSilentKeepsParametersAndRestartsUptime) {
    run(request(R"("setRange":[1,90])"));
    device.on_sample(0, 1023, 10'000'000us);
    device.tick_boundary(10'000'000us);
    ASSERT_GT(device.channel(0).applied_duty, 0);

    const auto r = run(request(R"("RESET":null)"), Transport::Bus, 20'000'000us);
    EXPECT_FALSE(r.response);
    EXPECT_TRUE(r.device_reset);
    EXPECT_EQ(encode_response(r.response, Transport::Bus), "");
    EXPECT_EQ(run(request(R"("RESET":null)"), Transport::Console, 20'000'000us).response, std::nullopt);

    EXPECT_EQ(device.params(1).range, 90);
    EXPECT_EQ(device.channel(0).applied_duty, 0);
    const auto s = run(request(R"("getStatus":null)"), Transport::Bus, 20'000'000us);
    EXPECT_EQ((*s.response)["upTime"], 0);
    const auto later = run(request(R"("getStatus":null)"), Transport::Bus, 20'250'000us);
    EXPECT_EQ((*later.response)["upTime"], 250);
}

TEST_F(DispatchTest, CustomTableFiresExactlyOneHandler) {
    int fired = 0;
    CommandTable table;
    table.add("ping", [&](const Json&, Json& resp, CommandContext&) {
        ++fired;
        resp["pong"] = true;
    });
    table.add("other", [&](const Json&, Json&, CommandContext&) { fired += 100; });
    const auto r = dispatch_text(request(R"("ping":null)"), device, 0us, Transport::Console, table);
    EXPECT_EQ(fired, 1);
    EXPECT_EQ(r.response->dump(), R"({"responseId":1,"pong":true})");
    const auto u = dispatch_text(request(R"("getStatus":null)"), device, 0us, Transport::Console, table);
    EXPECT_EQ(u.error, "unknown command: getStatus");
    EXPECT_EQ(fired, 1);
}

// Any addressed object either runs exactly one handler or is rejected with an
// error; it never throws.
TEST_F(DispatchTest, TotalOverRandomCommands) {
    std::mt19937_64 rng(5);
    const std::vector<std::string> keys = {"getStatus", "getParameter", "getTempAddress", "setRange",
                                           "setThreshold", "setHoldTime", "bogus", "RESET"};
    std::uniform_int_distribution<int> pick(0, static_cast<int>(keys.size()) - 1), val(-10, 70000), ch(-1, 3);
    for (int i = 0; i < 2000; ++i) {
        Json doc;
        doc["requestId"] = 1;
        doc["manufacturerName"] = "RDIS";
        doc["modelName"] = "Failsafe";
        doc[keys[pick(rng)]] = i % 3 ? Json::array({ch(rng), val(rng)}) : Json(nullptr);
        DispatchResult r;
        ASSERT_NO_THROW(r = dispatch(doc, device, SimTime{i * 1000}, Transport::Console));
        EXPECT_NE(r.command.empty(), r.error.empty());
    }
}

TEST(EncodeResponse, Transports) {
    const std::optional<Json> r = Json::parse(R"({"responseId":1,"V_range":[1,90]})");
    EXPECT_EQ(encode_response(r, Transport::Console), "{\"responseId\":1,\"V_range\":[1,90]}\n");
    EXPECT_EQ(encode_response(r, Transport::Bus), encode_frame(R"({"responseId":1,"V_range":[1,90]})"));
    EXPECT_EQ(encode_response(std::nullopt, Transport::Console), "");
}
