// Command-line front end: igame <solve|oracle|simulate|check|compare> [flags]
//
// Exit codes: 0 success, 1 validation failure (bad config, failed assumption
// or check suite), 2 numerical non-convergence.

#include <cstdint>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"

#include "igame/io/run.hpp"

namespace {

std::vector<double> parse_probe(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(igame::io::parse_double(item));
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Impulse-control game toolkit: PDE solver, lattice oracle, Monte Carlo"};
    app.require_subcommand(1, 1);

    std::string config_path, problem, out_dir, probe;
    std::uint64_t seed = 0;
    int threads = -1;

    for (const char* name : {"solve", "oracle", "simulate", "check", "compare"}) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "JSON config file");
        sub->add_option("--problem", problem, "registry problem name (P0..P3)");
        sub->add_option("--out", out_dir, "output directory");
        sub->add_option("--seed", seed, "random seed");
        sub->add_option("--probe", probe, "value probe point t,x...");
        sub->add_option("--threads", threads, "worker threads (0 = all)");
    }
    CLI11_PARSE(app, argc, argv);
    const std::string cmd_name = app.get_subcommands().front()->get_name();
    auto* sub = app.get_subcommands().front();

    try {
        igame::io::RunConfig cfg = config_path.empty() ? igame::io::RunConfig{} : igame::io::load_config(config_path);
        if (!problem.empty()) {
            cfg.problem_name = problem;
            cfg.inline_problem.reset();
        }
        if (!out_dir.empty()) cfg.output = out_dir;
        if (sub->count("--seed")) cfg.seed = seed;
        if (!probe.empty()) cfg.probe = parse_probe(probe);
        if (threads >= 0) cfg.threads = threads;

        const auto report = igame::io::run(igame::io::command_from_string(cmd_name), cfg);
        std::cout << igame::io::report_text(report);
        return report.checks_passed() ? 0 : 1;
    } catch (const igame::ConvergenceError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
