#include <gtest/gtest.h>

#include <map>

#include "picofail/acquisition.hpp"

using namespace picofail;
using namespace std::chrono_literals;

TEST(ConversionTime, PrescalerTable) {
    EXPECT_EQ(conversion_time(128), 100us);
    EXPECT_EQ(conversion_time(16), 13us);
    // Linear between the two measured points.
    EXPECT_EQ(conversion_time(64), 50us);
    EXPECT_EQ(conversion_time(32), 25us);
    EXPECT_THROW(conversion_time(8), std::invalid_argument);
    EXPECT_THROW(conversion_time(100), std::invalid_argument);
}

TEST(AdcConfig, OptimizedGivesTwoHundredMicrosecondsPerChannel) {
    const auto cfg = optimized_adc();
    EXPECT_EQ(cfg.prescaler, 16);
    EXPECT_EQ(cfg.mode, AcquisitionMode::OptimizedInterrupt);
    EXPECT_EQ(cfg.channel_period(), 200us);
    EXPECT_EQ(cfg.cycle_overhead, 161us);
}

TEST(AdcConfig, LegacyGivesOneHundredMillisecondsPerChannel) {
    const auto cfg = legacy_adc();
    EXPECT_EQ(cfg.prescaler, 128);
    EXPECT_EQ(cfg.mode, AcquisitionMode::LegacyBlocking);
    EXPECT_EQ(cfg.channel_period(), 100'000us);
}

TEST(AdcConfig, RejectsPeriodShorterThanConversions) {
    EXPECT_THROW(adc_with_channel_period(30us), std::invalid_argument);
    EXPECT_NO_THROW(adc_with_channel_period(39us));
}

TEST(RoundRobin, VisitsChannelsCyclicallyAtSixtySevenMicrosecondSpacing) {
    RoundRobin rr(optimized_adc());
    std::vector<Conversion> conv;
    for (int i = 0; i < 9; ++i) conv.push_back(rr.next_conversion(0us));
    for (int i = 0; i < 9; ++i) {
        EXPECT_EQ(conv[i].channel, i % 3);
        EXPECT_EQ(conv[i].completion - conv[i].start, 13us);
    }
    EXPECT_EQ(conv[0].start, 0us);
    EXPECT_EQ(conv[1].start, 66us);
    EXPECT_EQ(conv[2].start, 133us);
    EXPECT_EQ(conv[3].start, 200us);
    for (int i = 3; i < 9; ++i) EXPECT_EQ(conv[i].start - conv[i - 3].start, 200us);
}

TEST(RoundRobin, LegacySpacingIsOneThirdOfOneHundredMilliseconds) {
    RoundRobin rr(legacy_adc());
    const auto a = rr.next_conversion(0us);
    const auto b = rr.next_conversion(0us);
    const auto c = rr.next_conversion(0us);
    const auto d = rr.next_conversion(0us);
    EXPECT_EQ(b.start - a.start, 33'333us);
    EXPECT_EQ(c.start - b.start, 33'333us);
    EXPECT_EQ(d.start - c.start, 33'334us);
    EXPECT_EQ(a.completion - a.start, 100us);
}

TEST(RoundRobin, SingleChannelEveryConversion) {
    AdcConfig cfg = optimized_adc();
    cfg.channels = 1;
    RoundRobin rr(cfg);
    for (int i = 0; i < 5; ++i) EXPECT_EQ(rr.next_conversion(0us).channel, 0);
}

TEST(RoundRobin, LateCallerStartsImmediately) {
    RoundRobin rr(optimized_adc());
    rr.next_conversion(0us);
    const auto c = rr.next_conversion(500us);
    EXPECT_EQ(c.start, 500us);
}

TEST(RoundRobin, FairOverAnyWindow) {
    RoundRobin rr(optimized_adc());
    std::vector<int> seq;
    for (int i = 0; i < 600; ++i) seq.push_back(rr.next_conversion(0us).channel);
    for (std::size_t start = 0; start < 300; start += 7) {
        for (int n : {1, 5, 33}) {
            std::map<int, int> counts;
            for (std::size_t k = start; k < start + 3 * n; ++k) ++counts[seq[k]];
            for (int ch = 0; ch < 3; ++ch) EXPECT_EQ(counts[ch], n);
        }
    }
}

TEST(SampleVoltage, QuantizesAndSaturates) {
    std::mt19937_64 rng(1);
    const auto cfg = optimized_adc();
    EXPECT_EQ(sample_voltage(cfg, 300.0, 0.5, rng), 600);
    EXPECT_EQ(sample_voltage(cfg, 0.0, 0.5, rng), 0);
    EXPECT_EQ(sample_voltage(cfg, 10'000.0, 0.5, rng), 1023);
    EXPECT_EQ(sample_voltage(cfg, 300.2, 0.5, rng), 600);
    EXPECT_EQ(sample_voltage(cfg, 300.3, 0.5, rng), 601);
}

TEST(SampleVoltage, NoiseIsBoundedAndSeeded) {
    AdcConfig cfg = optimized_adc();
    cfg.noise_amplitude = 3;
    std::mt19937_64 a(42), b(42);
    bool varied = false;
    for (int i = 0; i < 1000; ++i) {
        const int x = sample_voltage(cfg, 300.0, 0.5, a);
        EXPECT_EQ(x, sample_voltage(cfg, 300.0, 0.5, b));
        EXPECT_GE(x, 597);
        EXPECT_LE(x, 603);
        varied |= x != 600;
    }
    EXPECT_TRUE(varied);
}

TEST(InterSampleRise, RampTimesPeriod) {
    // Unobserved rise between two samples of one channel at 5833 V/s.
    EXPECT_NEAR(5833.0 * 2e-3, 11.67, 0.01);
    EXPECT_NEAR(5833.0 * legacy_adc().channel_period().count() * 1e-6 / 3.0, 194.4, 0.1);
}

namespace {

std::optional<double> always(const std::string&, SimTime) { return 21.5; }

struct Reading {
    SimTime at;
    std::string address;
};

std::vector<Reading> drive(TempScheduler& sched, SimTime until) {
    std::vector<Reading> out;
    while (auto next = sched.next_event()) {
        if (*next > until) break;
        if (auto r = sched.poll(*next, always)) out.push_back({*next, r->address});
    }
    return out;
}

}  // namespace

TEST(TempScheduler, OneSensor) {
    TempScheduler sched({"28:98:2C:77:91:06:02:6C"});
    EXPECT_FALSE(sched.poll(0us, always));
    EXPECT_TRUE(sched.busy());
    EXPECT_EQ(sched.next_event(), 750'000us);
    EXPECT_FALSE(sched.poll(749'999us, always));
    auto r = sched.poll(750'000us, always);
    ASSERT_TRUE(r);
    EXPECT_EQ(r->celsius, 21.5);
    EXPECT_EQ(sched.next_event(), 30'000'000us);
}

TEST(TempScheduler, NoSensorsNeverReads) {
    TempScheduler sched({});
    EXPECT_FALSE(sched.next_event());
    for (int s = 0; s < 100; ++s) EXPECT_FALSE(sched.poll(SimTime{s * 1'000'000}, always));
}

TEST(TempScheduler, TwoSensorsAlternate) {
    TempScheduler sched({"A", "B"});
    const auto reads = drive(sched, 61'000'000us);
    // Enumerated by hand: A starts at 0 s, B at 15 s, each every 30 s.
    const std::vector<Reading> expected = {
        {750'000us, "A"}, {15'750'000us, "B"}, {30'750'000us, "A"}, {45'750'000us, "B"}, {60'750'000us, "A"}};
    ASSERT_EQ(reads.size(), expected.size());
    for (std::size_t i = 0; i < reads.size(); ++i) {
        EXPECT_EQ(reads[i].at, expected[i].at) << i;
        EXPECT_EQ(reads[i].address, expected[i].address) << i;
    }
}

TEST(TempScheduler, AtMostOneInFlight) {
    // 100 sensors want a read every 300 ms, longer than a read takes 0.75 s.
    std::vector<std::string> addrs;
    for (int i = 0; i < 100; ++i) addrs.push_back("S" + std::to_string(i));
    TempScheduler sched(addrs);
    SimTime last{-1'000'000};
    for (int i = 0; i < 50; ++i) {
        const auto next = *sched.next_event();
        if (auto r = sched.poll(next, always)) {
            EXPECT_GE(next - last, 750'000us);
            last = next;
        }
    }
}

TEST(TempScheduler, AbsentSensorDropsReading) {
    TempScheduler sched({"A"});
    sched.poll(0us, always);
    auto r = sched.poll(750'000us, [](const std::string&, SimTime) -> std::optional<double> { return std::nullopt; });
    ASSERT_TRUE(r);
    EXPECT_EQ(r->address, "A");
    EXPECT_FALSE(r->celsius);
}
