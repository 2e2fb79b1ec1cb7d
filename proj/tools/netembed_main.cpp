#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "netembed/harness.hpp"

using namespace netembed;

namespace {

void print_report(const SubcommandReport& report) {
    std::printf("== %s / %s%s\n", report.scenario.c_str(), report.subcommand.c_str(),
                report.not_applicable ? " (not applicable)" : "");
    for (const auto& c : report.checks) {
        std::printf("  [%s] %-32s worst=%.6g bound=%.6g slack=%.6g samples=%ld%s%s\n",
                    c.pass ? "PASS" : "FAIL", c.name.c_str(), c.worst, c.bound, c.slack,
                    c.samples, c.note.empty() ? "" : "  -- ", c.note.c_str());
    }
    std::printf("  wall: %.1f ms\n", report.wall_ms);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"netembed: round-preserving map construction and net verification"};
    app.require_subcommand(1);
    app.fallthrough();  // allow global options after the subcommand name

    std::string config, out_dir;
    int threads = 0;
    std::uint64_t seed = 0;
    app.add_option("--config", config, "scenario configuration file")->required();
    app.add_option("--threads", threads, "worker threads (default: machine parallelism)");
    app.add_option("--out", out_dir, "output directory (default: scenario's output.dir)");
    app.add_option("--seed", seed, "override the scenario seed");

    for (const std::string& name : Harness::subcommands())
        app.add_subcommand(name, "run the '" + name + "' verifier set");

    CLI11_PARSE(app, argc, argv);
    std::string sub = app.get_subcommands().front()->get_name();

    try {
        Harness harness(load_scenario(config), threads, out_dir, seed);
        const Scenario& s = harness.scenario();
        std::printf("scenario %s: n=%d family=%s eps=%g delta=%g | offset radius %.6g, "
                    "separation radius %.6g, covering bound %.6g\n",
                    s.name.c_str(), s.dimension, family_name(s.family).c_str(),
                    s.lattice_epsilon, s.delta, s.derived_offset_radius(),
                    s.derived_separation_radius(), s.derived_covering_bound());
        bool ok = true;
        std::vector<SubcommandReport> reports;
        if (sub == "all") {
            if (!harness.directions_enabled())
                std::printf("directions verifier disabled: the drift schedule does not fit the "
                            "net box (use a directions scenario)\n");
            reports = harness.run_all();
        } else {
            reports.push_back(harness.run(sub));
        }
        for (const auto& r : reports) {
            harness.write_report(r);
            print_report(r);
            ok = ok && r.all_pass();
        }
        std::printf("%s\n", ok ? "ALL CHECKS PASSED" : "CHECK FAILURES PRESENT");
        return ok ? 0 : 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}
