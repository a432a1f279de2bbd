#include "repl.hpp"

#include <chrono>
#include <condition_variable>
#include <deque>
#include <iomanip>
#include <iostream>
#include <memory>
#include <mutex>
#include <sstream>
#include <thread>

namespace picofail::cli {

namespace {

using Json = nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;

// Lines from the input thread to the simulation thread.
class LineChannel {
  public:
    void push(std::string line) {
        {
            std::lock_guard lock(mu_);
            lines_.push_back(std::move(line));
        }
        cv_.notify_one();
    }

    void close() {
        {
            std::lock_guard lock(mu_);
            closed_ = true;
        }
        cv_.notify_one();
    }

    enum class Status { Line, Timeout, Closed };

    Status pop(std::string& line, std::chrono::milliseconds wait) {
        std::unique_lock lock(mu_);
        cv_.wait_for(lock, wait, [&] { return !lines_.empty() || closed_; });
        if (!lines_.empty()) {
            line = std::move(lines_.front());
            lines_.pop_front();
            return Status::Line;
        }
        return closed_ ? Status::Closed : Status::Timeout;
    }

  private:
    std::mutex mu_;
    std::condition_variable cv_;
    std::deque<std::string> lines_;
    bool closed_ = false;
};

std::string row(const std::string& label, const Json& values) {
    std::ostringstream os;
    os << std::left << std::setw(9) << label << std::right;
    for (const auto& v : values) os << std::setw(7) << v.dump();
    return os.str();
}

void print_help(std::ostream& out) {
    out << "device commands: any JSON line, e.g.\n"
           "  {\"requestId\":1,\"manufacturerName\":\"RDIS\",\"modelName\":\"Failsafe\",\"getStatus\":null}\n"
           "meta commands:\n"
           "  !load <ch|all> <fraction>   set external load (0..1)\n"
           "  !crowbar-reset <ch>         manual crowbar reset\n"
           "  !speed <multiplier>         sim-time pacing, 0 = advance only with !run\n"
           "  !run <time>                 advance sim time, e.g. !run 250ms\n"
           "  !status                     plant voltages and duties\n"
           "  !quit\n";
}

}  // namespace

std::string format_response(const Json& response) {
    if (response.contains("error")) return "error: " + response["error"].get<std::string>();
    if (response.contains("v_th") && response.contains("v_range")) {
        std::ostringstream os;
        os << std::left << std::setw(9) << "" << std::right;
        for (int ch = 0; ch < kChannels; ++ch) os << std::setw(7) << ("ch" + std::to_string(ch));
        os << '\n'
           << row("v_th", response["v_th"]) << '\n'
           << row("v_range", response["v_range"]) << '\n'
           << row("T_hold", response["T_hold"]);
        return os.str();
    }
    if (response.contains("upTime")) {
        std::ostringstream os;
        os << "upTime " << response["upTime"].dump() << " ms  current " << response["current"].dump()
           << "  pressure " << response["pressure"].dump() << "  temp " << response["temp"].dump() << '\n';
        os << std::left << std::setw(9) << "" << std::right;
        for (int ch = 0; ch < kChannels; ++ch) os << std::setw(7) << ("ch" + std::to_string(ch));
        os << '\n' << row("voltage", response["voltage"]) << '\n' << row("dump", response["dump"]);
        return os.str();
    }
    return response.dump(2);
}

int run_repl(Simulator& sim, std::istream& in, std::ostream& out, double speed) {
    sim.log().set_retain(false);
    sim.log().set_observer([&out](const EventRecord& rec) {
        switch (rec.kind) {
            case EventKind::Resp:
                out << format_response(rec.payload["response"]) << std::endl;
                break;
            case EventKind::Crowbar:
            case EventKind::Reset:
            case EventKind::FrameErr:
                out << "[" << format_time(rec.time) << "] " << to_string(rec.kind) << ' ' << rec.payload.dump()
                    << std::endl;
                break;
            default:
                break;
        }
    });

    auto channel = std::make_shared<LineChannel>();
    std::thread reader([channel, &in] {
        std::string line;
        while (std::getline(in, line)) channel->push(line);
        channel->close();
    });
    // A getline blocked on a terminal cannot be interrupted, so on !quit the
    // reader is left detached.
    struct ReaderGuard {
        std::thread& t;
        bool finished = false;
        ~ReaderGuard() { finished ? t.join() : t.detach(); }
    } guard{reader};

    auto wall_origin = Clock::now();
    auto sim_origin = sim.now();
    auto rebase = [&] {
        wall_origin = Clock::now();
        sim_origin = sim.now();
    };
    auto catch_up = [&] {
        if (speed <= 0) return;
        const auto wall = std::chrono::duration<double, std::micro>(Clock::now() - wall_origin).count();
        const SimTime target = sim_origin + SimTime{static_cast<std::int64_t>(wall * speed)};
        if (target > sim.now()) sim.run_until(target);
    };

    out << "picofail console (sim t=" << format_time(sim.now()) << "), !help for commands" << std::endl;
    for (;;) {
        std::string line;
        const auto status = channel->pop(line, std::chrono::milliseconds(20));
        catch_up();
        if (status == LineChannel::Status::Closed) {
            guard.finished = true;
            return 0;
        }
        if (status == LineChannel::Status::Timeout) continue;

        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;

        if (line.front() != '!') {
            try {
                const Json doc = Json::parse(line);
            } catch (const nlohmann::json::parse_error& e) {
                out << "parse error: " << e.what() << std::endl;
                continue;
            }
            sim.inject_command(protocol::Transport::Console, line);
            continue;
        }

        std::istringstream args(line.substr(1));
        std::string verb;
        args >> verb;
        try {
            if (verb == "quit" || verb == "exit") {
                return 0;
            } else if (verb == "help") {
                print_help(out);
            } else if (verb == "load") {
                std::string ch;
                double fraction = 0;
                if (!(args >> ch >> fraction)) throw std::invalid_argument("usage: !load <ch|all> <fraction>");
                if (fraction < 0 || fraction > 1) throw std::invalid_argument("fraction must be in [0, 1]");
                const int c = ch == "all" ? -1 : std::stoi(ch);
                if (c < -1 || c >= kChannels) throw std::invalid_argument("channel must be 0..2 or all");
                sim.set_load(c, fraction);
                out << "load " << ch << " = " << fraction << " at t=" << format_time(sim.now()) << std::endl;
            } else if (verb == "crowbar-reset") {
                int c = -1;
                if (!(args >> c) || c < 0 || c >= kChannels) throw std::invalid_argument("usage: !crowbar-reset <0..2>");
                sim.crowbar_reset(c);
            } else if (verb == "speed") {
                double s = 0;
                if (!(args >> s) || s < 0) throw std::invalid_argument("usage: !speed <multiplier >= 0>");
                speed = s;
                rebase();
                out << "speed " << speed << std::endl;
            } else if (verb == "run") {
                std::string t;
                if (!(args >> t)) throw std::invalid_argument("usage: !run <time>");
                sim.run_until(sim.now() + parse_time(t));
                rebase();
                out << "t=" << format_time(sim.now()) << std::endl;
            } else if (verb == "status") {
                const auto& plant = sim.plant();
                out << "t=" << format_time(sim.now());
                for (int ch = 0; ch < kChannels; ++ch) {
                    out << "  ch" << ch << ' ' << std::fixed << std::setprecision(1) << plant.v[ch] << "V duty "
                        << int(sim.device().channel(ch).applied_duty) << (plant.crowbar_latched[ch] ? " CROWBAR" : "");
                }
                out << std::defaultfloat << std::endl;
            } else {
                out << "unknown meta command !" << verb << " (try !help)" << std::endl;
            }
        } catch (const std::exception& e) {
            out << "error: " << e.what() << std::endl;
        }
    }
}

}  // namespace picofail::cli
