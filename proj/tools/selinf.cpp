// Command-line front end: CSV in, selection/inference reports out.
//
//   selinf fit-select  --data d.csv --response y --strategy aic-forward ...
//   selinf infer       --data d.csv --response y --event-log events.json ...
//   selinf group-test  --data d.csv --response y --group x1 --group x2 --sigma 1.5
//   selinf simulate    --n 150 --p 5 --snr 1 --iterations 2000 --seed 7 ...
//
// Exit codes: 0 success, 2 input/validation error, 3 numerical error.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "selinf/csv.hpp"
#include "selinf/dataset.hpp"
#include "selinf/errors.hpp"
#include "selinf/event_log_io.hpp"
#include "selinf/events.hpp"
#include "selinf/inference.hpp"
#include "selinf/intervals.hpp"
#include "selinf/simulate.hpp"

namespace {

using nlohmann::ordered_json;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitNumeric = 3;

ordered_json endpoint_json(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}

ordered_json interval_set_json(const selinf::IntervalSet& set) {
    ordered_json out = ordered_json::array();
    for (const selinf::Interval& iv : set.intervals())
        out.push_back(ordered_json::array({endpoint_json(iv.lo), endpoint_json(iv.hi)}));
    return out;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw selinf::ValidationError("cannot write '" + path + "'");
    out << text;
    if (!out) throw selinf::ValidationError("write to '" + path + "' failed");
}

/// Emit to out_dir/filename when out_dir is set, stdout otherwise.
void emit(const std::optional<std::string>& out_dir, const std::string& filename,
          const std::string& text) {
    if (out_dir) {
        std::filesystem::create_directories(*out_dir);
        const std::string path = (std::filesystem::path(*out_dir) / filename).string();
        write_text(path, text);
        std::cout << "wrote " << path << '\n';
    } else {
        std::cout << text;
    }
}

std::vector<int> resolve_columns(const selinf::Dataset& data,
                                 const std::vector<std::string>& names) {
    std::vector<int> out;
    for (const std::string& name : names) out.push_back(data.column_index(name));
    return out;
}

int intercept_column(const selinf::Dataset& data) {
    for (int j = 0; j < data.p(); ++j)
        if (data.name(j) == "(Intercept)") return j;
    return -1;
}

struct StrategyOptions {
    std::string strategy = "aic-forward";
    double alpha = 0.05;
    std::vector<std::string> start;
    std::vector<std::string> scope;
    std::vector<std::string> protect;
};

selinf::EventLog run_strategy(const selinf::Dataset& data, const StrategyOptions& opt) {
    if (opt.strategy == "aic-forward" || opt.strategy == "bic-forward") {
        const selinf::Criterion criterion =
            opt.strategy == "aic-forward" ? selinf::Criterion::aic : selinf::Criterion::bic;
        std::vector<int> start = resolve_columns(data, opt.start);
        if (start.empty()) {
            const int ic = intercept_column(data);
            if (ic < 0)
                throw selinf::ValidationError(
                    "forward selection needs a start model; pass --start or --intercept");
            start.push_back(ic);
        }
        std::sort(start.begin(), start.end());
        const selinf::ModelSubset start_model(start);
        std::vector<int> scope;
        if (opt.scope.empty()) {
            for (int j = 0; j < data.p(); ++j)
                if (!start_model.contains(j)) scope.push_back(j);
        } else {
            scope = resolve_columns(data, opt.scope);
        }
        return selinf::stepwise_forward(data, criterion, start_model, scope);
    }
    if (opt.strategy == "backward-significance") {
        std::vector<int> start;
        if (opt.start.empty()) {
            for (int j = 0; j < data.p(); ++j) start.push_back(j);
        } else {
            start = resolve_columns(data, opt.start);
            std::sort(start.begin(), start.end());
        }
        std::vector<int> protect;
        if (opt.protect.empty()) {
            const int ic = intercept_column(data);
            if (ic >= 0) protect.push_back(ic);
        } else {
            protect = resolve_columns(data, opt.protect);
        }
        return selinf::backward_significance_hunting(data, selinf::ModelSubset(start), opt.alpha,
                                                     protect);
    }
    throw selinf::ValidationError("unknown strategy '" + opt.strategy + "'");
}

// ---------------------------------------------------------------- fit-select

struct FitSelectArgs {
    std::string data_path;
    std::string response;
    bool intercept = true;
    StrategyOptions strategy;
    std::optional<std::string> event_log_path;
    std::optional<std::string> out_dir;
};

int cmd_fit_select(const FitSelectArgs& args) {
    const selinf::Dataset data = selinf::load_csv(args.data_path, args.response, args.intercept);
    const selinf::EventLog log = run_strategy(data, args.strategy);

    ordered_json report;
    report["strategy"] = args.strategy.strategy;
    if (args.strategy.strategy == "backward-significance") report["alpha"] = args.strategy.alpha;
    report["dataset_hash"] = selinf::dataset_hash(data);
    report["selected_indices"] = log.selected.indices();
    std::vector<std::string> names;
    for (int col : log.selected.indices()) names.push_back(data.name(col));
    report["selected"] = names;
    report["event_count"] = log.events.size();
    report["trace"] = log.trace;
    if (args.event_log_path) {
        selinf::save_event_log(log, data, *args.event_log_path);
        report["event_log"] = *args.event_log_path;
    }
    emit(args.out_dir, "selection.json", report.dump(2) + "\n");
    return kExitOk;
}

// --------------------------------------------------------------------- infer

struct InferArgs {
    std::string data_path;
    std::string response;
    bool intercept = true;
    std::optional<std::string> event_log_path;
    StrategyOptions strategy;
    std::string variance = "plugin";
    std::optional<double> sigma;
    double level = 0.95;
    std::string format = "csv";
    std::optional<std::string> out_dir;
};

int cmd_infer(const InferArgs& args) {
    const selinf::Dataset data = selinf::load_csv(args.data_path, args.response, args.intercept);
    const selinf::EventLog log = args.event_log_path
                                     ? selinf::load_event_log(*args.event_log_path, data)
                                     : run_strategy(data, args.strategy);

    const selinf::VarianceMode mode = args.variance == "known" ? selinf::VarianceMode::known
                                                               : selinf::VarianceMode::reml_plugin;
    const std::vector<selinf::CoefficientReport> reports =
        selinf::analyze_coefficients(data, log, mode, args.sigma, args.level);

    // The naive columns use the same sigma the selective analysis used.
    double sigma = 0.0;
    if (mode == selinf::VarianceMode::known) {
        sigma = *args.sigma;
    } else {
        sigma = std::sqrt(selinf::reml_variance(selinf::fit_ols(data, log.selected)));
    }
    const double z = selinf::std_normal_quantile(1.0 - 0.5 * (1.0 - args.level));

    if (args.format == "json") {
        ordered_json root;
        root["variance_mode"] = selinf::variance_mode_name(mode);
        root["sigma"] = sigma;
        root["level"] = args.level;
        root["event_count"] = log.events.size();
        ordered_json rows = ordered_json::array();
        for (const selinf::CoefficientReport& r : reports) {
            ordered_json row;
            row["name"] = r.name;
            if (!r.ok) {
                row["error"] = r.error;
                rows.push_back(std::move(row));
                continue;
            }
            const double scale = sigma * std::sqrt(r.test.v_norm2);
            row["estimate"] = r.test.statistic;
            row["selective_p"] = r.test.p_value;
            row["selective_lower"] = r.ci.lower;
            row["selective_upper"] = r.ci.upper;
            row["naive_p"] =
                std::min(1.0, 2.0 * selinf::std_normal_sf(std::abs(r.test.statistic) / scale).value);
            row["naive_lower"] = r.test.statistic - z * scale;
            row["naive_upper"] = r.test.statistic + z * scale;
            row["truncation"] = interval_set_json(r.test.truncation);
            rows.push_back(std::move(row));
        }
        root["coefficients"] = std::move(rows);
        emit(args.out_dir, "inference.json", root.dump(2) + "\n");
        return kExitOk;
    }

    std::ostringstream os;
    os << "name,estimate,selective_p,selective_lower,selective_upper,naive_p,naive_lower,"
          "naive_upper,error\n";
    for (const selinf::CoefficientReport& r : reports) {
        os << r.name << ',';
        if (!r.ok) {
            os << ",,,,,,," << '"' << r.error << '"' << '\n';
            continue;
        }
        const double scale = sigma * std::sqrt(r.test.v_norm2);
        const double naive_p =
            std::min(1.0, 2.0 * selinf::std_normal_sf(std::abs(r.test.statistic) / scale).value);
        os << selinf::format_double(r.test.statistic) << ','
           << selinf::format_double(r.test.p_value) << ','
           << selinf::format_double(r.ci.lower) << ',' << selinf::format_double(r.ci.upper) << ','
           << selinf::format_double(naive_p) << ','
           << selinf::format_double(r.test.statistic - z * scale) << ','
           << selinf::format_double(r.test.statistic + z * scale) << ",\n";
    }
    emit(args.out_dir, "inference.csv", os.str());
    return kExitOk;
}

// ---------------------------------------------------------------- group-test

struct GroupTestArgs {
    std::string data_path;
    std::string response;
    bool intercept = true;
    std::optional<std::string> event_log_path;
    std::vector<std::string> group;
    double sigma = 0.0;
    std::optional<std::string> out_dir;
};

int cmd_group_test(const GroupTestArgs& args) {
    const selinf::Dataset data = selinf::load_csv(args.data_path, args.response, args.intercept);
    selinf::EventLog log = [&]() -> selinf::EventLog {
        if (args.event_log_path) return selinf::load_event_log(*args.event_log_path, data);
        // Without prior selection the conditioning is vacuous: full model,
        // no events — the classical chi test.
        std::vector<int> all;
        for (int j = 0; j < data.p(); ++j) all.push_back(j);
        return selinf::EventLog{{}, selinf::ModelSubset(all), {}};
    }();
    std::vector<int> group = resolve_columns(data, args.group);
    std::sort(group.begin(), group.end());
    const selinf::ModelSubset group_model(group);
    if (log.selected.nested_in(group_model))
        throw selinf::ValidationError("group must be a strict sub-block of the selected model");
    const selinf::SelectiveTest test =
        selinf::analyze_group(data, log, group_model, args.sigma);

    ordered_json root;
    root["group"] = args.group;
    root["model"] = log.selected.label(data);
    root["sigma"] = args.sigma;
    root["event_count"] = log.events.size();
    root["t_obs"] = test.statistic;
    root["df"] = test.df;
    root["truncation"] = interval_set_json(test.truncation);
    root["p_value"] = test.p_value;
    emit(args.out_dir, "group_test.json", root.dump(2) + "\n");
    return kExitOk;
}

// ------------------------------------------------------------------ simulate

struct SimulateArgs {
    selinf::SimulationConfig config;
    std::string design = "ind";
    std::string variance = "known";
    std::string screen = "extras";
    std::string criterion = "aic";
    std::string out_dir = ".";
    bool stratify = false;
};

int cmd_simulate(SimulateArgs& args) {
    args.config.design = args.design == "cor" ? selinf::DesignKind::equicorrelated
                                              : selinf::DesignKind::independent;
    args.config.variance_mode = args.variance == "plugin" ? selinf::VarianceMode::reml_plugin
                                                          : selinf::VarianceMode::known;
    args.config.screen = args.screen == "exact"  ? selinf::ScreenRule::exact
                         : args.screen == "none" ? selinf::ScreenRule::none
                                                 : selinf::ScreenRule::extras;
    args.config.criterion =
        args.criterion == "bic" ? selinf::Criterion::bic : selinf::Criterion::aic;

    const selinf::SimulationReport report = selinf::run_simulation(args.config);
    const std::optional<std::string> out_dir = args.out_dir;
    emit(out_dir, "simulation_pvalues.csv", selinf::pvalue_table_csv(report, args.stratify));
    emit(out_dir, "simulation_summary.json",
         selinf::report_summary_json(report).dump(2) + "\n");
    if (report.empty_setting)
        std::cout << "note: no iteration passed the screen; summary marks the setting empty\n";
    return kExitOk;
}

void add_data_options(CLI::App* cmd, std::string& data_path, std::string& response,
                      bool& intercept) {
    cmd->add_option("--data", data_path, "input CSV with header row")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--response", response, "name of the response column")->required();
    cmd->add_flag("--intercept,!--no-intercept", intercept,
                  "prepend an all-ones (Intercept) column (default on)");
}

void add_strategy_options(CLI::App* cmd, StrategyOptions& opt) {
    cmd->add_option("--strategy", opt.strategy, "selection strategy")
        ->check(CLI::IsMember({"aic-forward", "bic-forward", "backward-significance"}));
    cmd->add_option("--alpha", opt.alpha, "test level for backward-significance")
        ->check(CLI::Range(0.0, 1.0));
    cmd->add_option("--start", opt.start, "columns of the starting model (default: intercept)");
    cmd->add_option("--scope", opt.scope,
                    "columns eligible for forward addition (default: all others)");
    cmd->add_option("--protect", opt.protect,
                    "columns never dropped by backward-significance (default: intercept)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Exact post-selection tests and confidence intervals for stepwise-selected "
                 "linear models"};
    app.require_subcommand(1);

    FitSelectArgs fit_args;
    CLI::App* fit = app.add_subcommand("fit-select", "run model selection and record its events");
    add_data_options(fit, fit_args.data_path, fit_args.response, fit_args.intercept);
    add_strategy_options(fit, fit_args.strategy);
    std::string fit_event_log, fit_out_dir;
    fit->add_option("--event-log", fit_event_log, "write the event log JSON here");
    fit->add_option("--out-dir", fit_out_dir, "write selection.json here instead of stdout");

    InferArgs infer_args;
    CLI::App* infer = app.add_subcommand("infer", "selective per-coefficient tests and intervals");
    add_data_options(infer, infer_args.data_path, infer_args.response, infer_args.intercept);
    add_strategy_options(infer, infer_args.strategy);
    std::string infer_event_log, infer_out_dir;
    double infer_sigma = 0.0;
    infer->add_option("--event-log", infer_event_log,
                      "read a recorded event log instead of selecting in-process");
    infer->add_option("--variance", infer_args.variance, "variance handling")
        ->check(CLI::IsMember({"known", "plugin"}));
    CLI::Option* infer_sigma_opt =
        infer->add_option("--sigma", infer_sigma, "noise standard deviation for --variance known");
    infer->add_option("--level", infer_args.level, "confidence level (default 0.95)")
        ->check(CLI::Range(0.0, 1.0));
    infer->add_option("--format", infer_args.format, "output format")
        ->check(CLI::IsMember({"csv", "json"}));
    infer->add_option("--out-dir", infer_out_dir, "write the table here instead of stdout");

    GroupTestArgs group_args;
    CLI::App* group = app.add_subcommand("group-test", "selective chi test for a coefficient group");
    add_data_options(group, group_args.data_path, group_args.response, group_args.intercept);
    std::string group_event_log, group_out_dir;
    group->add_option("--event-log", group_event_log, "recorded event log (optional)");
    group->add_option("--group", group_args.group, "columns forming the tested group")->required();
    group->add_option("--sigma", group_args.sigma, "known noise standard deviation")->required();
    group->add_option("--out-dir", group_out_dir, "write group_test.json here instead of stdout");

    SimulateArgs sim_args;
    CLI::App* sim = app.add_subcommand("simulate", "Monte Carlo uniformity and coverage study");
    sim->add_option("--n", sim_args.config.n, "observations per replicate");
    sim->add_option("--p", sim_args.config.p, "number of covariates");
    sim->add_option("--snr", sim_args.config.snr, "signal-to-noise ratio");
    sim->add_option("--design", sim_args.design, "covariate design")
        ->check(CLI::IsMember({"ind", "cor"}));
    sim->add_option("--rho", sim_args.config.rho, "pairwise correlation for --design cor");
    sim->add_option("--beta", sim_args.config.beta_active,
                    "active coefficients (default 4 -2 1 -0.5)");
    sim->add_option("--iterations", sim_args.config.iterations,
                    "screened iterations to retain");
    sim->add_option("--seed", sim_args.config.seed, "master seed");
    sim->add_option("--level", sim_args.config.level, "confidence level");
    sim->add_option("--criterion", sim_args.criterion, "stepwise criterion")
        ->check(CLI::IsMember({"aic", "bic"}));
    sim->add_option("--variance", sim_args.variance, "variance mode for the p-value table")
        ->check(CLI::IsMember({"known", "plugin"}));
    sim->add_option("--screen", sim_args.screen, "which iterations to keep")
        ->check(CLI::IsMember({"extras", "exact", "none"}));
    sim->add_option("--workers", sim_args.config.workers, "worker threads");
    sim->add_option("--max-raw", sim_args.config.max_raw_iterations,
                    "safety cap on raw iterations (0 = derived)");
    sim->add_option("--out-dir", sim_args.out_dir, "output directory (default .)");
    sim->add_flag("--stratify-by-model", sim_args.stratify,
                  "add the selected model to each p-value row");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitValidation;
    }

    try {
        if (fit->parsed()) {
            if (!fit_event_log.empty()) fit_args.event_log_path = fit_event_log;
            if (!fit_out_dir.empty()) fit_args.out_dir = fit_out_dir;
            return cmd_fit_select(fit_args);
        }
        if (infer->parsed()) {
            if (!infer_event_log.empty()) infer_args.event_log_path = infer_event_log;
            if (!infer_out_dir.empty()) infer_args.out_dir = infer_out_dir;
            if (infer_sigma_opt->count() > 0) infer_args.sigma = infer_sigma;
            return cmd_infer(infer_args);
        }
        if (group->parsed()) {
            if (!group_event_log.empty()) group_args.event_log_path = group_event_log;
            if (!group_out_dir.empty()) group_args.out_dir = group_out_dir;
            return cmd_group_test(group_args);
        }
        if (sim->parsed()) return cmd_simulate(sim_args);
        std::cerr << "error: no subcommand\n";
        return kExitValidation;
    } catch (const selinf::ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const selinf::NumericError& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return kExitNumeric;
    }
}
