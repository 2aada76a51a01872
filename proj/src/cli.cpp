#include "bellkl/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "bellkl/error.hpp"
#include "bellkl/experiment.hpp"
#include "bellkl/optimizer.hpp"
#include "bellkl/quantum.hpp"

namespace bellkl::cli {

namespace {

using ordered_json = nlohmann::ordered_json;

const std::set<std::string> &known_commands() {
    static const std::set<std::string> commands{"table1", "figure1", "additivity", "simulate"};
    return commands;
}

std::string join(const std::vector<std::uint64_t> &values, char sep) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i > 0) {
            out += sep;
        }
        out += std::to_string(values[i]);
    }
    return out;
}

bool parse_double(const std::string &text, double &value) {
    if (text.empty() || std::isspace(static_cast<unsigned char>(text.front())) != 0) {
        return false;
    }
    char *end = nullptr;
    value = std::strtod(text.c_str(), &end);
    return end == text.c_str() + text.size() && std::isfinite(value);
}

bool is_integer_text(const std::string &text) {
    const std::size_t start = !text.empty() && text[0] == '-' ? 1 : 0;
    return text.size() > start && text.size() - start <= 18 &&
           std::all_of(text.begin() + static_cast<std::ptrdiff_t>(start), text.end(),
                       [](char c) { return c >= '0' && c <= '9'; });
}

std::string csv_escape(const std::string &cell) {
    if (cell.find_first_of(",\"\n\r") == std::string::npos) {
        return cell;
    }
    std::string out = "\"";
    for (char c : cell) {
        if (c == '"') {
            out += '"';
        }
        out += c;
    }
    return out + "\"";
}

std::vector<std::string> csv_split(const std::string &line) {
    std::vector<std::string> cells;
    std::string cell;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cell += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cell += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            cells.push_back(std::move(cell));
            cell.clear();
        } else {
            cell += c;
        }
    }
    if (quoted) {
        throw Error(ErrorCode::io_error, "unterminated quote in CSV line");
    }
    cells.push_back(std::move(cell));
    return cells;
}

std::string render_csv(const Table &table) {
    std::ostringstream out;
    for (const auto &[key, value] : table.config) {
        out << "# config." << key << '=' << value << '\n';
    }
    for (const auto &[key, value] : table.summary) {
        out << "# summary." << key << '=' << value << '\n';
    }
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
        out << (c > 0 ? "," : "") << csv_escape(table.columns[c]);
    }
    out << '\n';
    for (const auto &row : table.rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            out << (c > 0 ? "," : "") << csv_escape(row[c]);
        }
        out << '\n';
    }
    return out.str();
}

Table parse_csv(std::string_view text) {
    Table table;
    std::istringstream in{std::string(text)};
    std::string line;
    bool header = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (!header && line.starts_with("# ")) {
            const auto eq = line.find('=');
            if (eq == std::string::npos) {
                throw Error(ErrorCode::io_error, "malformed comment line: " + line);
            }
            const std::string key = line.substr(2, eq - 2);
            const std::string value = line.substr(eq + 1);
            if (key.starts_with("config.")) {
                table.config.emplace_back(key.substr(7), value);
            } else if (key.starts_with("summary.")) {
                table.summary.emplace_back(key.substr(8), value);
            } else {
                throw Error(ErrorCode::io_error, "unknown comment key: " + key);
            }
            continue;
        }
        if (!header) {
            table.columns = csv_split(line);
            header = true;
            continue;
        }
        if (line.empty()) {
            continue;
        }
        auto cells = csv_split(line);
        if (cells.size() != table.columns.size()) {
            throw Error(ErrorCode::io_error, "CSV row width does not match header");
        }
        table.rows.push_back(std::move(cells));
    }
    if (!header) {
        throw Error(ErrorCode::io_error, "CSV input has no header");
    }
    return table;
}

ordered_json cell_to_json(const std::string &cell) {
    if (is_integer_text(cell)) {
        return std::stoll(cell);
    }
    double value = 0.0;
    if (parse_double(cell, value)) {
        return value;
    }
    return cell;
}

std::string json_to_cell(const ordered_json &value) {
    if (value.is_string()) {
        return value.get<std::string>();
    }
    if (value.is_number_integer()) {
        return std::to_string(value.get<long long>());
    }
    if (value.is_number_float()) {
        return format_number(value.get<double>());
    }
    throw Error(ErrorCode::io_error, "unsupported JSON cell type");
}

std::string render_json(const Table &table) {
    ordered_json doc;
    doc["config"] = ordered_json::object();
    for (const auto &[key, value] : table.config) {
        doc["config"][key] = value;
    }
    doc["summary"] = ordered_json::object();
    for (const auto &[key, value] : table.summary) {
        doc["summary"][key] = value;
    }
    doc["columns"] = table.columns;
    doc["records"] = ordered_json::array();
    for (const auto &row : table.rows) {
        ordered_json record = ordered_json::object();
        for (std::size_t c = 0; c < row.size(); ++c) {
            record[table.columns[c]] = cell_to_json(row[c]);
        }
        doc["records"].push_back(std::move(record));
    }
    return doc.dump(2) + "\n";
}

Table parse_json(std::string_view text) {
    ordered_json doc;
    try {
        doc = ordered_json::parse(text);
    } catch (const nlohmann::json::exception &e) {
        throw Error(ErrorCode::io_error, e.what());
    }
    Table table;
    try {
        for (const auto &[key, value] : doc.at("config").items()) {
            table.config.emplace_back(key, value.get<std::string>());
        }
        for (const auto &[key, value] : doc.at("summary").items()) {
            table.summary.emplace_back(key, value.get<std::string>());
        }
        table.columns = doc.at("columns").get<std::vector<std::string>>();
        for (const auto &record : doc.at("records")) {
            std::vector<std::string> row;
            for (const auto &column : table.columns) {
                row.push_back(json_to_cell(record.at(column)));
            }
            table.rows.push_back(std::move(row));
        }
    } catch (const nlohmann::json::exception &e) {
        throw Error(ErrorCode::io_error, e.what());
    }
    return table;
}

std::string status_text(bool ok, const std::string &error) { return ok ? "ok" : "error: " + error; }

StrengthOptions strength_options(const RunConfig &config) {
    StrengthOptions opts;
    opts.tol = config.tol;
    return opts;
}

SweepMode sweep_mode(const std::string &mode) {
    if (mode == "exact") {
        return SweepMode::exact;
    }
    if (mode == "conjectured") {
        return SweepMode::conjectured;
    }
    return SweepMode::automatic;
}

Table start_table(const RunConfig &config, std::vector<std::string> extra) {
    Table table;
    table.columns = base_columns();
    table.columns.insert(table.columns.end(), extra.begin(), extra.end());
    table.config = config.echo();
    return table;
}

OptimizationReport optimum_for(const RunConfig &config, int d) {
    const bool exact = config.mode == "exact" || (config.mode == "auto" && d <= 6);
    if (exact) {
        ExactOptions opts;
        opts.inner_tol = config.tol;
        opts.max_dim = std::max(6, d);
        return optimize_state_exact(d, cglmp_measurements(d, Party::alice), cglmp_measurements(d, Party::bob),
                                    SettingsDistribution::uniform(2), opts);
    }
    ConjecturedOptions opts;
    opts.inner_tol = config.tol;
    return conjectured_optimum(d, opts);
}

}  // namespace

double median_of(std::vector<double> values) {
    if (values.empty()) {
        throw Error(ErrorCode::invalid_parameter, "median of an empty sample");
    }
    std::sort(values.begin(), values.end());
    const std::size_t mid = values.size() / 2;
    return values.size() % 2 == 1 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

void RunConfig::validate() const {
    const auto fail = [](const std::string &what) { throw Error(ErrorCode::invalid_parameter, what); };
    if (!known_commands().contains(command)) {
        fail("unknown command '" + command + "'");
    }
    if (d < 2) {
        fail("d must be at least 2");
    }
    if (command == "figure1" && d_max < d) {
        fail("d-max must be at least d");
    }
    if (!(tol > 0.0) || !std::isfinite(tol)) {
        fail("tolerance must be positive");
    }
    if (mode != "auto" && mode != "exact" && mode != "conjectured") {
        fail("mode must be auto, exact or conjectured");
    }
    if (copies < 1) {
        fail("copies must be at least 1");
    }
    if (repeats < 1) {
        fail("repeats must be at least 1");
    }
    if (trials.empty() || std::any_of(trials.begin(), trials.end(), [](auto n) { return n < 1; })) {
        fail("trial schedule must be non-empty and positive");
    }
}

std::vector<std::pair<std::string, std::string>> RunConfig::echo() const {
    return {{"command", command},
            {"d", std::to_string(d)},
            {"d_max", std::to_string(d_max)},
            {"tol", format_number(tol)},
            {"mode", mode},
            {"copies", std::to_string(copies)},
            {"seed", std::to_string(seed)},
            {"repeats", std::to_string(repeats)},
            {"trials", join(trials, ';')},
            {"format", to_string(format)},
            {"out", out}};
}

OutputFormat parse_format(std::string_view text) {
    if (text == "csv") {
        return OutputFormat::csv;
    }
    if (text == "json") {
        return OutputFormat::json;
    }
    throw Error(ErrorCode::invalid_parameter, "format must be csv or json");
}

const char *to_string(OutputFormat format) { return format == OutputFormat::csv ? "csv" : "json"; }

std::string format_number(double value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", value);
    return buf;
}

std::string render(const Table &table, OutputFormat format) {
    return format == OutputFormat::csv ? render_csv(table) : render_json(table);
}

Table parse(std::string_view text, OutputFormat format) {
    return format == OutputFormat::csv ? parse_csv(text) : parse_json(text);
}

void write_table_atomic(const Table &table, const std::string &path, OutputFormat format) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    std::random_device entropy;
    fs::path tmp = target;
    tmp += ".tmp" + std::to_string(entropy());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw Error(ErrorCode::io_error, "cannot open " + tmp.string());
        }
        out << render(table, format);
        out.flush();
        if (!out) {
            throw Error(ErrorCode::io_error, "write failed for " + tmp.string());
        }
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw Error(ErrorCode::io_error, "cannot move output into " + path);
    }
}

Table read_table(const std::string &path, OutputFormat format) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::io_error, "cannot open " + path);
    }
    std::ostringstream text;
    text << in.rdbuf();
    return parse(text.str(), format);
}

CommandResult run_table1(const RunConfig &config) {
    CommandResult result{start_table(config, {"state", "parameter", "status"}), true};
    const auto alice = cglmp_measurements(3, Party::alice);
    const auto bob = cglmp_measurements(3, Party::bob);
    const auto opts = strength_options(config);

    const auto evaluated = [&](const std::string &name, const SchmidtState &state, const std::string &parameter) {
        try {
            const auto fit = cglmp_strength(state, opts);
            result.table.rows.push_back({"3", format_number(fit.divergence_bits),
                                         format_number(entropy_of_entanglement(state)), "evaluated",
                                         format_number(fit.certificate_gap), name, parameter, "ok"});
        } catch (const std::exception &e) {
            result.all_ok = false;
            result.table.rows.push_back({"3", "", "", "evaluated", "", name, parameter, status_text(false, e.what())});
        }
    };

    evaluated("Phi3", maximally_entangled(3), "");
    evaluated("Psi3_mv", three_level_state(0.617), format_number(0.617));
    try {
        const auto report = optimum_for(config, 3);
        const double gap = report.mode == OptimizationMode::exact ? report.certificate_gap
                                                                  : report.consistency_residual;
        result.table.rows.push_back({"3", format_number(report.divergence_bits),
                                     format_number(report.entanglement_bits), to_string(report.mode),
                                     format_number(gap), "Psi3", format_number(three_level_parameter(report.best_state)),
                                     status_text(report.converged, "optimizer did not converge")});
        result.all_ok = result.all_ok && report.converged;
    } catch (const std::exception &e) {
        result.all_ok = false;
        result.table.rows.push_back({"3", "", "", config.mode, "", "Psi3", "", status_text(false, e.what())});
    }
    evaluated("Psi3_quoted", three_level_state(0.642), format_number(0.642));
    return result;
}

CommandResult run_figure1(const RunConfig &config) {
    CommandResult result{start_table(config, {"status"}), true};
    SweepOptions opts;
    opts.inner_tol = config.tol;
    opts.parallel = true;
    for (const auto &row : figure1_sweep(config.d, config.d_max, sweep_mode(config.mode), opts)) {
        result.all_ok = result.all_ok && row.ok;
        if (row.ok) {
            result.table.rows.push_back({std::to_string(row.d), format_number(row.divergence_bits),
                                         format_number(row.entanglement_bits), to_string(row.mode),
                                         format_number(row.certificate_gap), "ok"});
        } else {
            result.table.rows.push_back(
                {std::to_string(row.d), "", "", to_string(row.mode), "", status_text(false, row.error)});
        }
    }
    return result;
}

CommandResult run_additivity(const RunConfig &config) {
    CommandResult result{start_table(config, {"label", "copies", "status"}), true};
    AdditivityOptions opts;
    opts.inner_tol = config.tol;
    try {
        const auto report = additivity_comparison(config.d, config.copies, opts);
        const auto single_fit = cglmp_strength(report.single_state, strength_options(config));
        const double single_e = entropy_of_entanglement(report.single_state);
        const std::string k = std::to_string(config.copies);
        const std::string big = std::to_string(report.compare_dim);
        result.table.rows.push_back({std::to_string(config.d), format_number(report.single_bits),
                                     format_number(single_e), "exact", format_number(single_fit.certificate_gap),
                                     "single", "1", "ok"});
        result.table.rows.push_back({big, format_number(report.product_bits),
                                     format_number(config.copies * single_e), "product", "", "product", k, "ok"});
        if (report.product_form_bits) {
            result.table.rows.push_back({big, format_number(*report.product_form_bits),
                                         format_number(config.copies * single_e), "product_form", "",
                                         "product_form", k, "ok"});
        }
        if (report.verified_product_bits) {
            result.table.rows.push_back({big, format_number(*report.verified_product_bits),
                                         format_number(config.copies * single_e), "explicit",
                                         format_number(*report.verified_certificate_gap), "product_explicit", k,
                                         "ok"});
        }
        if (report.compare_bits) {
            result.table.rows.push_back({big, format_number(*report.compare_bits),
                                         format_number(*report.compare_entanglement_bits), "conjectured",
                                         format_number(*report.compare_residual), "single_large", "1", "ok"});
            result.table.summary.emplace_back("verdict", report.product_wins ? "product_wins" : "single_wins");
        }
    } catch (const std::exception &e) {
        result.all_ok = false;
        result.table.rows.push_back(
            {std::to_string(config.d), "", "", config.mode, "", "single", "1", status_text(false, e.what())});
    }
    return result;
}

CommandResult run_simulate(const RunConfig &config) {
    CommandResult result{start_table(config, {"trials", "asymptotic_bits", "gap", "status"}), true};
    std::optional<OptimizationReport> report;
    try {
        report = optimum_for(config, config.d);
    } catch (const std::exception &e) {
        result.all_ok = false;
        result.table.rows.push_back({std::to_string(config.d), "", "", "empirical", "", "", "", "",
                                     status_text(false, e.what())});
        return result;
    }
    const auto q = quantum_behavior(report->best_pure, cglmp_measurements(config.d, Party::alice),
                                    cglmp_measurements(config.d, Party::bob), SettingsDistribution::uniform(2));
    const auto opts = strength_options(config);
    const std::string e_text = format_number(report->entanglement_bits);
    const std::string asym = format_number(report->divergence_bits);
    for (const auto trials : config.trials) {
        try {
            std::vector<double> values;
            double worst_gap = 0.0;
            for (int r = 0; r < config.repeats; ++r) {
                const auto counts = sample_trials(q, trials, config.seed + static_cast<std::uint64_t>(r));
                const auto fit = empirical_strength(counts, opts);
                values.push_back(fit.divergence_bits);
                worst_gap = std::max(worst_gap, fit.certificate_gap);
            }
            std::vector<double> distances;
            for (const double v : values) {
                distances.push_back(std::abs(v - report->divergence_bits));
            }
            result.table.rows.push_back({std::to_string(config.d), format_number(median_of(values)), e_text,
                                         "empirical", format_number(worst_gap), std::to_string(trials), asym,
                                         format_number(median_of(distances)), "ok"});
        } catch (const std::exception &e) {
            result.all_ok = false;
            result.table.rows.push_back({std::to_string(config.d), "", e_text, "empirical", "",
                                         std::to_string(trials), asym, "", status_text(false, e.what())});
        }
    }
    return result;
}

CommandResult run_command(const RunConfig &config) {
    config.validate();
    if (config.command == "table1") {
        return run_table1(config);
    }
    if (config.command == "figure1") {
        return run_figure1(config);
    }
    if (config.command == "additivity") {
        return run_additivity(config);
    }
    return run_simulate(config);
}

}  // namespace bellkl::cli
