#include "picofail/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace picofail {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string strip_comment(const std::string& line) {
    // JSON payloads may contain '#', so only a '#' at the start of a token
    // outside of braces/quotes begins a comment.
    bool in_string = false;
    int depth = 0;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (in_string) {
            if (c == '\\') ++i;
            else if (c == '"') in_string = false;
            continue;
        }
        if (c == '"') in_string = true;
        else if (c == '{' || c == '[') ++depth;
        else if (c == '}' || c == ']') --depth;
        else if (c == '#' && depth <= 0 && (i == 0 || line[i - 1] == ' ' || line[i - 1] == '\t')) {
            return line.substr(0, i);
        }
    }
    return line;
}

std::vector<std::string> split_ws(const std::string& s, std::size_t max_parts = 0) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
        if (i >= s.size()) break;
        if (max_parts && out.size() + 1 == max_parts) {
            out.push_back(trim(s.substr(i)));
            break;
        }
        const auto j = s.find_first_of(" \t", i);
        out.push_back(s.substr(i, j == std::string::npos ? std::string::npos : j - i));
        i = j == std::string::npos ? s.size() : j;
    }
    return out;
}

std::string unescape(const std::string& s) {
    std::string out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] != '\\' || i + 1 >= s.size()) {
            out.push_back(s[i]);
            continue;
        }
        const char c = s[++i];
        switch (c) {
            case 'n': out.push_back('\n'); break;
            case 'r': out.push_back('\r'); break;
            case 't': out.push_back('\t'); break;
            case '\\': out.push_back('\\'); break;
            case 'x':
                if (i + 2 < s.size()) {
                    out.push_back(static_cast<char>(std::stoi(s.substr(i + 1, 2), nullptr, 16)));
                    i += 2;
                    break;
                }
                throw std::invalid_argument("truncated \\x escape");
            default:
                throw std::invalid_argument(std::string("unknown escape \\") + c);
        }
    }
    return out;
}

double parse_double(const std::string& text) {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size() || !std::isfinite(v)) throw std::invalid_argument("not a number: " + text);
    return v;
}

long long parse_int(const std::string& text) {
    std::size_t used = 0;
    const long long v = std::stoll(text, &used);
    if (used != text.size()) throw std::invalid_argument("not an integer: " + text);
    return v;
}

bool parse_bool(const std::string& text) {
    if (text == "on" || text == "true" || text == "yes" || text == "1") return true;
    if (text == "off" || text == "false" || text == "no" || text == "0") return false;
    throw std::invalid_argument("expected on/off, got " + text);
}

protocol::Transport parse_transport(const std::string& text) {
    if (text == "bus") return protocol::Transport::Bus;
    if (text == "console") return protocol::Transport::Console;
    throw std::invalid_argument("transport must be bus or console, got " + text);
}

int parse_channel(const std::string& text, bool allow_all) {
    if (allow_all && text == "all") return -1;
    const auto v = parse_int(text);
    if (v < 0 || v >= kChannels) throw std::invalid_argument("channel must be 0..2, got " + text);
    return static_cast<int>(v);
}

class Parser {
  public:
    Parser(std::string name) : name_(std::move(name)) { s_.name = name_; }

    void line(const std::string& raw) {
        ++line_no_;
        const std::string text = trim(strip_comment(raw));
        if (text.empty()) return;
        try {
            if (text.front() == '[') {
                if (text.back() != ']') throw std::invalid_argument("unterminated block header");
                section_ = trim(text.substr(1, text.size() - 2));
                field_ = section_;
                static const std::vector<std::string> known = {"load",    "commands", "raw",          "temp_sensors",
                                                               "current", "pressure", "crowbar_reset"};
                if (std::find(known.begin(), known.end(), section_) == known.end()) {
                    throw std::invalid_argument("unknown block [" + section_ + "]");
                }
                return;
            }
            if (section_.empty()) {
                setting(text);
            } else {
                timeline(text);
            }
        } catch (const ScenarioError&) {
            throw;
        } catch (const std::exception& e) {
            fail(e.what());
        }
    }

    Scenario finish() {
        line_no_ = 0;
        time_.reset();
        try {
            validate(s_);
        } catch (const ScenarioError&) {
            throw;
        } catch (const std::exception& e) {
            throw ScenarioError(name_ + ": " + e.what());
        }
        return std::move(s_);
    }

  private:
    [[noreturn]] void fail(const std::string& message) const {
        std::string where = name_;
        if (line_no_ > 0) where += ":" + std::to_string(line_no_);
        where += ": field '" + field_ + "'";
        if (time_) where += " at t=" + format_time(*time_);
        throw ScenarioError(where + ": " + message);
    }

    std::array<ChannelParams, kChannels> per_channel(const std::string& value, auto apply) {
        const auto parts = split_ws(value);
        if (parts.size() != 1 && parts.size() != kChannels) {
            throw std::invalid_argument("expected 1 or 3 values");
        }
        auto params = s_.params;
        for (int ch = 0; ch < kChannels; ++ch) {
            const auto v = parse_int(parts[parts.size() == 1 ? 0 : ch]);
            params[ch] = apply(params[ch], static_cast<int>(v));
        }
        return params;
    }

    void setting(const std::string& text) {
        const auto eq = text.find('=');
        if (eq == std::string::npos) {
            field_ = text;
            throw std::invalid_argument("expected key = value");
        }
        field_ = trim(text.substr(0, eq));
        time_.reset();
        const std::string value = trim(text.substr(eq + 1));
        if (value.empty()) throw std::invalid_argument("missing value");

        if (field_ == "name") s_.name = value;
        else if (field_ == "duration") s_.duration = parse_time(value);
        else if (field_ == "mode") {
            auto m = parse_acquisition_mode(value);
            if (!m) throw std::invalid_argument("mode must be legacy or optimized, got " + value);
            s_.mode = *m;
        } else if (field_ == "channel_period") s_.channel_period = parse_time(value);
        else if (field_ == "noise") s_.noise = static_cast<int>(parse_int(value));
        else if (field_ == "seed") s_.seed = static_cast<std::uint64_t>(parse_int(value));
        else if (field_ == "calibration") s_.volts_per_count = parse_double(value);
        else if (field_ == "initial_load") s_.initial_load = parse_double(value);
        else if (field_ == "stats") s_.stats = parse_bool(value);
        else if (field_ == "log_samples") s_.log_samples = parse_bool(value);
        else if (field_ == "log_led") s_.log_led = parse_bool(value);
        else if (field_ == "ramp_rate") s_.plant.ramp_rate = parse_double(value);
        else if (field_ == "v_nominal") s_.plant.v_nominal = parse_double(value);
        else if (field_ == "v_crowbar") s_.plant.v_crowbar = parse_double(value);
        else if (field_ == "dump_capacity") s_.plant.dump_capacity = parse_double(value);
        else if (field_ == "v_open_circuit") s_.plant.v_open_circuit = parse_double(value);
        else if (field_ == "dt") s_.plant.dt = parse_time(value);
        else if (field_ == "v_th") s_.params = per_channel(value, [](auto p, int v) { return set_threshold(p, v); });
        else if (field_ == "v_range") s_.params = per_channel(value, [](auto p, int v) { return set_range(p, v); });
        else if (field_ == "t_hold") s_.params = per_channel(value, [](auto p, int v) { return set_hold_time(p, v); });
        else if (field_ == "current") s_.current = static_cast<int>(parse_int(value));
        else if (field_ == "pressure") s_.pressure = static_cast<int>(parse_int(value));
        else throw std::invalid_argument("unknown setting");
    }

    SimTime timeline_time(const std::string& token, SimTime& last) {
        time_.reset();
        const SimTime t = parse_time(token);
        time_ = t;
        if (t < last) throw std::invalid_argument("timeline not sorted by time");
        last = t;
        return t;
    }

    void timeline(const std::string& text) {
        field_ = section_;
        if (section_ == "temp_sensors") {
            time_.reset();
            const auto parts = split_ws(text);
            if (parts.size() < 2 || parts.size() > 3) throw std::invalid_argument("expected <address> <celsius> [absent_from=<time>]");
            TempFixture f{parts[0], parse_double(parts[1]), std::nullopt};
            if (parts.size() == 3) {
                const std::string prefix = "absent_from=";
                if (parts[2].rfind(prefix, 0) != 0) throw std::invalid_argument("unknown sensor option " + parts[2]);
                f.absent_from = parse_time(parts[2].substr(prefix.size()));
            }
            s_.temp_sensors.push_back(std::move(f));
            return;
        }

        auto& last = last_time_[section_];
        if (section_ == "load") {
            const auto parts = split_ws(text);
            if (parts.size() != 3) throw std::invalid_argument("expected <time> <channel|all> <fraction>");
            const SimTime t = timeline_time(parts[0], last);
            const double fraction = parse_double(parts[2]);
            if (fraction < 0.0 || fraction > 1.0) throw std::invalid_argument("load fraction must be in [0, 1]");
            s_.load.push_back({t, parse_channel(parts[1], true), fraction});
        } else if (section_ == "commands" || section_ == "raw") {
            const auto parts = split_ws(text, 3);
            if (parts.size() != 3) throw std::invalid_argument("expected <time> <bus|console> <payload>");
            const SimTime t = timeline_time(parts[0], last);
            InjectedBytes cmd{t, parse_transport(parts[1]), parts[2], section_ == "raw"};
            if (cmd.raw) cmd.text = unescape(cmd.text);
            s_.commands.push_back(std::move(cmd));
        } else if (section_ == "current" || section_ == "pressure") {
            const auto parts = split_ws(text);
            if (parts.size() != 2) throw std::invalid_argument("expected <time> <value>");
            const SimTime t = timeline_time(parts[0], last);
            SeriesPoint p{t, static_cast<int>(parse_int(parts[1]))};
            (section_ == "current" ? s_.current_series : s_.pressure_series).push_back(p);
        } else if (section_ == "crowbar_reset") {
            const auto parts = split_ws(text);
            if (parts.size() != 2) throw std::invalid_argument("expected <time> <channel>");
            const SimTime t = timeline_time(parts[0], last);
            s_.crowbar_resets.push_back({t, parse_channel(parts[1], false)});
        }
    }

    std::string name_;
    Scenario s_;
    std::string section_;
    std::string field_;
    std::optional<SimTime> time_;
    int line_no_ = 0;
    std::map<std::string, SimTime> last_time_;
};

}  // namespace

AdcConfig Scenario::adc() const {
    AdcConfig cfg = mode == AcquisitionMode::LegacyBlocking ? legacy_adc() : optimized_adc();
    if (channel_period) {
        cfg.cycle_overhead = *channel_period - cfg.conversion() * cfg.channels;
    }
    cfg.noise_amplitude = noise;
    return cfg;
}

SimTime parse_time(const std::string& text) {
    if (text == "0") return SimTime{0};
    struct Unit {
        const char* suffix;
        double micros;
    };
    static constexpr Unit units[] = {{"us", 1.0}, {"ms", 1e3}, {"s", 1e6}};
    for (const auto& u : units) {
        const std::string suffix = u.suffix;
        if (text.size() > suffix.size() && text.compare(text.size() - suffix.size(), suffix.size(), suffix) == 0) {
            const std::string number = text.substr(0, text.size() - suffix.size());
            // "ms" also ends in "s"; make sure the number part is numeric.
            std::size_t used = 0;
            double v = 0;
            try {
                v = std::stod(number, &used);
            } catch (const std::exception&) {
                continue;
            }
            if (used != number.size()) continue;
            if (!(v >= 0) || !std::isfinite(v)) throw std::invalid_argument("time must be >= 0: " + text);
            return SimTime{std::llround(v * u.micros)};
        }
    }
    throw std::invalid_argument("time needs a unit (us, ms, s): " + text);
}

std::string format_time(SimTime t) {
    const auto us = t.count();
    if (us % 1'000'000 == 0) return std::to_string(us / 1'000'000) + "s";
    if (us % 1000 == 0) return std::to_string(us / 1000) + "ms";
    return std::to_string(us) + "us";
}

void validate(const Scenario& s) {
    auto fail = [&](const std::string& field, std::optional<SimTime> t, const std::string& msg) {
        std::string where = s.name + ": field '" + field + "'";
        if (t) where += " at t=" + format_time(*t);
        throw ScenarioError(where + ": " + msg);
    };
    if (s.duration <= SimTime{0}) fail("duration", std::nullopt, "must be > 0");
    try {
        validate(s.plant);
    } catch (const std::exception& e) {
        fail("plant", std::nullopt, e.what());
    }
    try {
        validate(s.adc());
    } catch (const std::exception& e) {
        fail(s.channel_period ? "channel_period" : "mode", std::nullopt, e.what());
    }
    if (!(s.volts_per_count > 0)) fail("calibration", std::nullopt, "must be > 0");
    if (s.initial_load < 0 || s.initial_load > 1) fail("initial_load", std::nullopt, "must be in [0, 1]");
    for (const auto& p : s.load) {
        if (p.time > s.duration) fail("load", p.time, "after the end of the run");
    }
    for (const auto& c : s.commands) {
        if (c.time > s.duration) fail(c.raw ? "raw" : "commands", c.time, "after the end of the run");
        if (!c.raw && c.text.find('\n') != std::string::npos) fail("commands", c.time, "payload contains a newline");
    }
    for (const auto& p : s.current_series) {
        if (p.time > s.duration) fail("current", p.time, "after the end of the run");
    }
    for (const auto& p : s.pressure_series) {
        if (p.time > s.duration) fail("pressure", p.time, "after the end of the run");
    }
    for (const auto& r : s.crowbar_resets) {
        if (r.time > s.duration) fail("crowbar_reset", r.time, "after the end of the run");
    }
}

Scenario parse_scenario(std::istream& in, const std::string& name) {
    Parser parser(name);
    std::string line;
    while (std::getline(in, line)) parser.line(line);
    Scenario s = parser.finish();
    // [commands] and [raw] are each sorted; merge them into one timeline.
    std::stable_sort(s.commands.begin(), s.commands.end(),
                     [](const InjectedBytes& a, const InjectedBytes& b) { return a.time < b.time; });
    return s;
}

Scenario parse_scenario_text(const std::string& text, const std::string& name) {
    std::istringstream in(text);
    return parse_scenario(in, name);
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ScenarioError(path + ": cannot open scenario file");
    return parse_scenario(in, path);
}

}  // namespace picofail
