#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "picofail/scenario.hpp"
#include "picofail/simulator.hpp"
#include "repl.hpp"

namespace {

constexpr int kExitCrowbar = 1;
constexpr int kExitError = 2;

int run_command(const std::string& path, const std::string& log_path, std::optional<std::uint64_t> seed) {
    picofail::Scenario scenario = picofail::load_scenario(path);
    if (seed) scenario.seed = *seed;

    std::ofstream file;
    std::ostream* out = &std::cout;
    if (!log_path.empty()) {
        file.open(log_path);
        if (!file) {
            std::cerr << "picofail: cannot write " << log_path << '\n';
            return kExitError;
        }
        out = &file;
    }

    picofail::Simulator sim(std::move(scenario));
    sim.log().set_retain(false);
    sim.log().set_stream(out);
    const auto result = sim.run();
    out->flush();

    std::cerr << "scenario " << sim.scenario().name << ": " << picofail::format_time(result.end) << " simulated, "
              << result.events << " events, peak";
    for (double v : result.peak_voltage) std::cerr << ' ' << v << 'V';
    std::cerr << ", crowbar events " << result.crowbar_events << '\n';
    return result.crowbar() ? kExitCrowbar : 0;
}

int repl_command(const std::string& path, double speed) {
    picofail::Scenario scenario;
    scenario.name = "repl";
    if (!path.empty()) scenario = picofail::load_scenario(path);
    picofail::Simulator sim(std::move(scenario));
    return picofail::cli::run_repl(sim, std::cin, std::cout, speed);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"picofail - turbine failsafe simulator"};
    app.require_subcommand(1);

    std::string scenario_path;
    std::string log_path;
    std::optional<std::uint64_t> seed;
    auto* run = app.add_subcommand("run", "Run a scenario and write its event log");
    run->add_option("scenario", scenario_path, "Scenario file")->required()->check(CLI::ExistingFile);
    run->add_option("--log", log_path, "Write the event log here instead of stdout");
    run->add_option("--seed", seed, "Override the scenario RNG seed");

    std::string repl_scenario;
    double speed = 1.0;
    auto* repl = app.add_subcommand("repl", "Interactive console attached to a simulated device");
    repl->add_option("--scenario", repl_scenario, "Initial plant and parameters")->check(CLI::ExistingFile);
    repl->add_option("--speed", speed, "Sim-time multiplier against wall time (0 = manual !run)")
        ->check(CLI::NonNegativeNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitError;
    }

    try {
        if (*run) return run_command(scenario_path, log_path, seed);
        return repl_command(repl_scenario, speed);
    } catch (const picofail::ScenarioError& e) {
        std::cerr << "invalid scenario: " << e.what() << '\n';
        return kExitError;
    } catch (const std::exception& e) {
        std::cerr << "picofail: internal error: " << e.what() << '\n';
        return kExitError;
    }
}
