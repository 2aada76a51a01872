#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace bellkl::cli {

enum class OutputFormat { csv, json };

struct RunConfig {
    std::string command;
    int d = 2;
    int d_max = 8;
    double tol = 1e-9;
    std::string mode = "auto";  // auto | exact | conjectured
    int copies = 2;
    std::uint64_t seed = 12345;
    int repeats = 20;
    std::vector<std::uint64_t> trials{1'000, 10'000, 100'000, 1'000'000};
    std::string out;  // empty: stdout
    OutputFormat format = OutputFormat::csv;

    /// Throws bellkl::Error(invalid_parameter) on out-of-range values.
    void validate() const;
    std::vector<std::pair<std::string, std::string>> echo() const;
};

OutputFormat parse_format(std::string_view text);
const char *to_string(OutputFormat format);

/// Plain table of string cells. Numeric cells are written with 9 significant
/// digits; JSON output stores cells that parse as finite numbers as numbers.
struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::pair<std::string, std::string>> config;
    std::vector<std::pair<std::string, std::string>> summary;

    friend bool operator==(const Table &, const Table &) = default;
};

inline const std::vector<std::string> &base_columns() {
    static const std::vector<std::string> columns{"d", "divergence_bits", "entanglement_bits", "mode",
                                                  "certificate_gap"};
    return columns;
}

std::string format_number(double value);
double median_of(std::vector<double> values);

std::string render(const Table &table, OutputFormat format);
Table parse(std::string_view text, OutputFormat format);

/// Writes through a temporary file in the target directory and renames it
/// into place.
void write_table_atomic(const Table &table, const std::string &path, OutputFormat format);
Table read_table(const std::string &path, OutputFormat format);

struct CommandResult {
    Table table;
    bool all_ok = true;
};

CommandResult run_table1(const RunConfig &config);
CommandResult run_figure1(const RunConfig &config);
CommandResult run_additivity(const RunConfig &config);
/// One row per trial count: median empirical strength over `repeats` seeds
/// and, as gap, the median distance of the per-seed values from the
/// asymptotic strength.
CommandResult run_simulate(const RunConfig &config);
CommandResult run_command(const RunConfig &config);

}  // namespace bellkl::cli
