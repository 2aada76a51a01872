#include <iostream>

#include <CLI11.hpp>

#include "bellkl/cli.hpp"
#include "bellkl/error.hpp"

namespace {

void add_common(CLI::App *sub, bellkl::cli::RunConfig &config, std::string &format) {
    sub->add_option("--tol", config.tol, "Local-fit tolerance")->capture_default_str();
    sub->add_option("--mode", config.mode, "auto, exact or conjectured")
        ->check(CLI::IsMember({"auto", "exact", "conjectured"}))
        ->capture_default_str();
    sub->add_option("--out", config.out, "Output path (stdout when omitted)");
    sub->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
}

}  // namespace

int main(int argc, char **argv) {
    using bellkl::cli::RunConfig;

    CLI::App app{"Statistical strength of CGLMP Bell tests"};
    app.require_subcommand(1);
    RunConfig config;
    std::string format = "csv";

    auto *table1 = app.add_subcommand("table1", "Strength and entanglement of the qutrit states");
    add_common(table1, config, format);

    auto *figure1 = app.add_subcommand("figure1", "Optimal strength against d");
    figure1->add_option("--d", config.d, "Smallest d")->capture_default_str();
    figure1->add_option("--d-max", config.d_max, "Largest d")->capture_default_str();
    add_common(figure1, config, format);

    auto *additivity = app.add_subcommand("additivity", "k copies of the d test against one d^k test");
    additivity->add_option("--d", config.d, "Single-copy dimension")->capture_default_str();
    additivity->add_option("--copies", config.copies, "Number of copies")->capture_default_str();
    add_common(additivity, config, format);

    auto *simulate = app.add_subcommand("simulate", "Empirical strength from sampled trials");
    simulate->add_option("--d", config.d, "Dimension")->capture_default_str();
    simulate->add_option("--seed", config.seed, "Base seed; repeat r uses seed + r")->capture_default_str();
    simulate->add_option("--repeats", config.repeats, "Seeds per trial count")->capture_default_str();
    simulate->add_option("--trials", config.trials, "Trial schedule")->delimiter(',');
    add_common(simulate, config, format);

    CLI11_PARSE(app, argc, argv);
    config.command = app.get_subcommands().front()->get_name();

    try {
        config.format = bellkl::cli::parse_format(format);
        const auto result = bellkl::cli::run_command(config);
        if (config.out.empty()) {
            std::cout << bellkl::cli::render(result.table, config.format);
        } else {
            bellkl::cli::write_table_atomic(result.table, config.out, config.format);
        }
        return result.all_ok ? 0 : 1;
    } catch (const bellkl::Error &e) {
        std::cerr << e.what() << '\n';
        return 2;
    }
}
