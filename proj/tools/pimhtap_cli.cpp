#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pimhtap/error.hpp"
#include "pimhtap/experiments.hpp"
#include "pimhtap/verify.hpp"

using namespace pimhtap;

namespace {

ExperimentConfig make_config(const std::string& path, const std::vector<double>& th, const std::string& out,
                             const uint64_t* seed) {
    ExperimentConfig c = path.empty() ? ExperimentConfig{} : load_config(path);
    if (!th.empty()) c.th_list = th;
    if (!out.empty()) c.out_dir = out;
    if (seed) c.seed = *seed;
    c.validate();
    return c;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"pimhtap: unified-layout HTAP simulator on PIM-enabled DIMMs"};
    app.require_subcommand(1);

    std::string config_path, out_dir, experiment;
    std::vector<double> th;
    uint64_t seed = 0;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "experiment config JSON")->check(CLI::ExistingFile);
        sub->add_option("--seed", seed, "random seed");
        sub->add_option("--th", th, "layout thresholds")->delimiter(',');
        sub->add_option("--out", out_dir, "output directory");
    };

    auto* layout = app.add_subcommand("layout", "print the compact layout of every table");
    add_common(layout);
    std::string table_filter;
    bool naive = false;
    layout->add_option("--table", table_filter, "only this table");
    layout->add_flag("--naive", naive, "print the naive layout instead");

    auto* simulate = app.add_subcommand("simulate", "run one experiment and write its CSV");
    add_common(simulate);
    simulate->add_option("--experiment", experiment, "experiment name")->required()->check(CLI::IsMember(experiment_names()));

    auto* sweep = app.add_subcommand("sweep", "run every experiment (or a comma list)");
    add_common(sweep);
    std::vector<std::string> which;
    sweep->add_option("--experiment", which, "experiments to run")->delimiter(',')->check(CLI::IsMember(experiment_names()));

    auto* verify_cmd = app.add_subcommand("verify", "run the oracle suites");
    add_common(verify_cmd);
    uint64_t rounds = 5;
    verify_cmd->add_option("--rounds", rounds, "histories / query rounds per suite");

    CLI11_PARSE(app, argc, argv);
    const uint64_t* seed_ptr = nullptr;
    for (auto* sub : {layout, simulate, sweep, verify_cmd})
        if (sub->parsed() && sub->count("--seed")) seed_ptr = &seed;

    try {
        const auto config = make_config(config_path, th, out_dir, seed_ptr);
        if (layout->parsed()) {
            const std::vector<double> ths = th.empty() ? std::vector<double>{config.th} : th;
            for (const auto& t : config.catalog.tables) {
                if (!table_filter.empty() && t.name != table_filter) continue;
                if (naive) {
                    std::cout << generate_naive_layout(t, config.geometry).to_text() << "\n";
                    continue;
                }
                for (double x : ths) std::cout << generate_compact_layout(t, config.geometry, x).to_text() << "\n";
            }
        } else if (simulate->parsed()) {
            const auto files = run_experiment(experiment, config);
            write_outputs(files, config.out_dir);
            for (const auto& [name, _] : files) std::cout << config.out_dir << "/" << name << "\n";
        } else if (sweep->parsed()) {
            const auto& names = which.empty() ? experiment_names() : which;
            for (const auto& n : names) {
                const auto files = run_experiment(n, config);
                write_outputs(files, config.out_dir);
                for (const auto& [name, _] : files) std::cout << config.out_dir << "/" << name << "\n";
            }
        } else if (verify_cmd->parsed()) {
            uint64_t bad = 0;
            for (uint64_t r = 0; r < rounds; ++r) {
                const auto s = verify::snapshot_history(config.seed + r, 2000, 1000);
                const auto q = verify::query_round(config.seed + r, 1000);
                std::printf("round %llu: snapshot checks %llu mismatches %llu; queries %llu mismatches %llu\n",
                            (unsigned long long)r, (unsigned long long)s.checks, (unsigned long long)s.mismatches,
                            (unsigned long long)q.queries, (unsigned long long)q.mismatches);
                if (!q.first_failure.empty()) std::printf("  first failure: %s\n", q.first_failure.c_str());
                bad += s.mismatches + q.mismatches;
            }
            std::printf("%s\n", bad ? "FAIL" : "OK");
            return bad ? 1 : 0;
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
