#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "wavemap/harness.hpp"

namespace {

void print_report(const wavemap::VerifyReport& rep) {
    for (const auto& c : rep.checks)
        std::printf("[%s] %2d  %-60s measured=%.6g target=%.6g%s%s\n", c.pass ? "PASS" : "FAIL", c.criterion,
                    c.name.c_str(), c.measured, c.target, c.note.empty() ? "" : "  ", c.note.c_str());
    std::printf("overall: %s\n", rep.pass() ? "pass" : "fail");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"wavemap: two-bubble equivariant wave map experiments"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    int k = 0;
    long long seed = -1;
    app.add_option("--config", config_path, "INI configuration file")->check(CLI::ExistingFile);
    app.add_option("--k", k, "equivariance class (>= 4)");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--seed", seed, "seed for randomized test fields");

    const std::vector<std::pair<std::string, wavemap::Scenario>> verbs = {
        {"profiles", wavemap::Scenario::profiles},      {"ansatz", wavemap::Scenario::ansatz},
        {"evolve", wavemap::Scenario::evolve},          {"modulate", wavemap::Scenario::modulate},
        {"reduced-ode", wavemap::Scenario::reduced_ode}, {"verify", wavemap::Scenario::verify_all}};
    std::map<CLI::App*, wavemap::Scenario> subs;
    for (const auto& [name, sc] : verbs) subs[app.add_subcommand(name, "run the " + name + " scenario")] = sc;
    auto* defaults = app.add_subcommand("defaults", "print the default configuration");

    CLI11_PARSE(app, argc, argv);

    try {
        const std::optional<int> k_flag = k != 0 ? std::optional<int>(k) : std::nullopt;
        auto cfg = config_path.empty() ? wavemap::ScenarioConfig::for_k(k_flag.value_or(4))
                                       : wavemap::ScenarioConfig::from_ini(config_path, k_flag);
        if (!out_dir.empty()) cfg.out_dir = out_dir;
        if (seed >= 0) cfg.seed = static_cast<unsigned>(seed);
        if (defaults->parsed()) {
            std::cout << cfg.to_ini();
            return 0;
        }
        for (const auto& [sub, sc] : subs)
            if (sub->parsed()) cfg.scenario = sc;
        const auto rep = wavemap::run(cfg);
        print_report(rep);
        return wavemap::exit_code(rep);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
