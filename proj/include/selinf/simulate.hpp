#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "selinf/csv.hpp"
#include "selinf/dataset.hpp"
#include "selinf/errors.hpp"
#include "selinf/events.hpp"
#include "selinf/inference.hpp"
#include "selinf/rng.hpp"
#include "selinf/truncation.hpp"

// Monte Carlo study of the selective procedures: draw a design and response,
// run forward stepwise selection, keep (screen) the iterations whose selected
// model meets the requested condition, and collect selective p-values and
// confidence-interval coverage for every selected covariate under both the
// true and the plug-in variance.
//
// Reports are bit-reproducible: iteration i draws from its own stream keyed
// by (seed, i), results merge in index order, and the run retains exactly the
// first `iterations` screened indices — so the worker count can only change
// how much discarded work happens past the stopping point.

namespace selinf {

enum class DesignKind { independent, equicorrelated };
enum class ScreenRule { extras, exact, none };

struct SimulationConfig {
    int n = 150;
    int p = 5;
    double snr = 1.0;
    DesignKind design = DesignKind::independent;
    double rho = 0.4;  // pairwise correlation for the equicorrelated design
    std::vector<double> beta_active{4.0, -2.0, 1.0, -0.5};
    int iterations = 100;  // screened iterations to retain
    std::uint64_t seed = 1;
    double level = 0.95;
    Criterion criterion = Criterion::aic;
    VarianceMode variance_mode = VarianceMode::known;  // mode used in the p-value table
    ScreenRule screen = ScreenRule::extras;
    int workers = 1;
    long max_raw_iterations = 0;  // 0: derived safety cap
};

/// One covariate's selective results in one screened iteration.
struct ObservationRecord {
    int column = 0;    // dataset column index (intercept is column 0, never reported)
    int model_id = 0;  // index into SimulationReport::model_labels
    double p_known = 0.0;
    double p_plugin = 0.0;
    bool cover_known = false;
    bool cover_plugin = false;
};

struct VariableSummary {
    std::string name;
    bool active = false;
    long appearances = 0;
    long failures = 0;  // coefficient-level numerical failures
    double ks_known = 0.0;
    double ks_plugin = 0.0;
    double coverage_known = 0.0;
    double coverage_plugin = 0.0;
};

struct SimulationReport {
    SimulationConfig config;
    long raw_iterations = 0;
    long screened_iterations = 0;
    long failed_iterations = 0;      // whole iterations lost to numerical errors
    long coefficient_failures = 0;   // per-coefficient failures inside kept iterations
    bool empty_setting = false;      // no iteration passed the screen
    std::vector<std::string> model_labels;
    std::vector<ObservationRecord> records;
    std::vector<VariableSummary> variables;  // one per covariate x1..xp
    VariableSummary pooled_active;
    VariableSummary pooled_inactive;
};

/// Kolmogorov-Smirnov distance of a sample from U[0,1].
inline double ks_distance_uniform(std::vector<double> p) {
    if (p.empty()) return 0.0;
    std::sort(p.begin(), p.end());
    const double m = static_cast<double>(p.size());
    double d = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        d = std::max(d, (i + 1.0) / m - p[i]);
        d = std::max(d, p[i] - i / m);
    }
    return d;
}

namespace detail {

struct CoefficientOutcome {
    int column = 0;
    bool ok = false;
    double p_known = 0.0, p_plugin = 0.0;
    bool cover_known = false, cover_plugin = false;
};

struct IterationOutcome {
    bool screened = false;
    bool failed = false;
    std::string model_label;
    std::vector<CoefficientOutcome> coefficients;
};

inline void validate(const SimulationConfig& cfg) {
    const int k = static_cast<int>(cfg.beta_active.size());
    if (k < 1) throw ValidationError("simulation needs at least one active coefficient");
    if (cfg.p < k) throw ValidationError("p must be at least the number of active coefficients");
    if (cfg.n <= k) throw ValidationError("n must exceed the number of active coefficients");
    if (!(cfg.snr > 0.0)) throw ValidationError("snr must be positive");
    if (!(cfg.rho >= 0.0 && cfg.rho < 1.0)) throw ValidationError("rho must lie in [0,1)");
    if (cfg.iterations < 1) throw ValidationError("iterations must be at least 1");
    if (!(cfg.level > 0.0 && cfg.level < 1.0))
        throw ValidationError("level must lie strictly in (0,1)");
    if (cfg.workers < 1) throw ValidationError("workers must be at least 1");
}

/// One full iteration: draw, select, screen, infer. Pure function of
/// (config, index); all randomness comes from the per-index stream.
inline IterationOutcome simulate_one(const SimulationConfig& cfg, std::uint64_t index) {
    SplitMix64 rng(stream_seed(cfg.seed, index));
    const int n = cfg.n, p = cfg.p;
    const int k = static_cast<int>(cfg.beta_active.size());

    // Design draw order is part of the reproducibility contract:
    // independent fills column-major; equicorrelated draws the shared factor
    // first, then the idiosyncratic part column-major.
    Eigen::MatrixXd x(n, p);
    if (cfg.design == DesignKind::independent) {
        for (int j = 0; j < p; ++j)
            for (int i = 0; i < n; ++i) x(i, j) = rng.normal();
    } else {
        Eigen::VectorXd g(n);
        for (int i = 0; i < n; ++i) g[i] = rng.normal();
        const double sr = std::sqrt(cfg.rho), se = std::sqrt(1.0 - cfg.rho);
        for (int j = 0; j < p; ++j)
            for (int i = 0; i < n; ++i) x(i, j) = sr * g[i] + se * rng.normal();
    }

    Eigen::VectorXd beta(k);
    for (int j = 0; j < k; ++j) beta[j] = cfg.beta_active[static_cast<std::size_t>(j)];
    const Eigen::VectorXd mu = x.leftCols(k) * beta;
    const double mu_var = (mu.array() - mu.mean()).square().sum() / (n - 1);
    IterationOutcome out;
    if (!(mu_var > 0.0)) {
        out.failed = true;
        return out;
    }
    const double sigma = std::sqrt(mu_var / cfg.snr);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) y[i] = mu[i] + sigma * rng.normal();

    Eigen::MatrixXd x_full(n, p + 1);
    x_full.col(0).setOnes();
    x_full.rightCols(p) = x;
    std::vector<std::string> names{"(Intercept)"};
    for (int j = 1; j <= p; ++j) names.push_back("x" + std::to_string(j));
    const Dataset data(std::move(y), std::move(x_full), std::move(names));

    std::vector<int> scope;
    for (int j = 1; j <= p; ++j) scope.push_back(j);
    const SelectionPath path =
        stepwise_forward_path(data, cfg.criterion, ModelSubset({0}), scope);

    // Screening looks at the covariate part of the selection (columns 1..k
    // are the active ones by construction).
    int active_selected = 0, inactive_selected = 0;
    for (int col : path.selected.indices()) {
        if (col == 0) continue;
        (col <= k ? active_selected : inactive_selected) += 1;
    }
    const bool all_active = active_selected == k;
    bool keep = true;
    if (cfg.screen == ScreenRule::extras) keep = all_active && inactive_selected > 0;
    if (cfg.screen == ScreenRule::exact) keep = all_active && inactive_selected == 0;
    if (!keep) return out;
    out.screened = true;
    out.model_label = path.selected.label(data);

    const EventLog log = materialize(path, data);
    const FittedModel fit = fit_ols(data, log.selected);
    const double plugin_var = reml_variance(fit);
    if (!(plugin_var > 0.0)) {
        out.failed = true;
        out.screened = false;
        return out;
    }
    const double sigma_plugin = std::sqrt(plugin_var);
    // Coverage target: the projection of the true mean onto the selected
    // model, coefficient by coefficient.
    const Eigen::VectorXd theta = selinf::detail::DesignQr(data, log.selected).solve(mu);

    const auto& ix = log.selected.indices();
    for (std::size_t pos = 0; pos < ix.size(); ++pos) {
        const int col = ix[pos];
        if (col == 0) continue;  // intercept is nuisance, not reported
        CoefficientOutcome c;
        c.column = col;
        try {
            const Eigen::VectorXd v = test_vector(data, log.selected, col);
            const double stat = v.dot(data.y());
            const double vn2 = v.squaredNorm();
            const IntervalSet trunc = truncation_for_coefficient(log, v, data.y());
            const double target = theta[static_cast<Eigen::Index>(pos)];
            c.p_known = selective_p_value(stat, 0.0, sigma, vn2, trunc);
            const ConfidenceInterval ci_known =
                selective_confidence_interval(stat, sigma, vn2, trunc, cfg.level);
            c.cover_known = ci_known.lower <= target && target <= ci_known.upper;
            c.p_plugin = selective_p_value(stat, 0.0, sigma_plugin, vn2, trunc);
            const ConfidenceInterval ci_plugin =
                selective_confidence_interval(stat, sigma_plugin, vn2, trunc, cfg.level);
            c.cover_plugin = ci_plugin.lower <= target && target <= ci_plugin.upper;
            c.ok = true;
        } catch (const NumericError&) {
            c.ok = false;
        }
        out.coefficients.push_back(c);
    }
    return out;
}

inline VariableSummary summarize(std::string name, bool active,
                                 const std::vector<const ObservationRecord*>& obs, long failures) {
    VariableSummary s;
    s.name = std::move(name);
    s.active = active;
    s.appearances = static_cast<long>(obs.size());
    s.failures = failures;
    if (obs.empty()) return s;
    std::vector<double> pk, pp;
    long ck = 0, cp = 0;
    for (const ObservationRecord* r : obs) {
        pk.push_back(r->p_known);
        pp.push_back(r->p_plugin);
        ck += r->cover_known ? 1 : 0;
        cp += r->cover_plugin ? 1 : 0;
    }
    s.ks_known = ks_distance_uniform(pk);
    s.ks_plugin = ks_distance_uniform(pp);
    s.coverage_known = static_cast<double>(ck) / static_cast<double>(obs.size());
    s.coverage_plugin = static_cast<double>(cp) / static_cast<double>(obs.size());
    return s;
}

}  // namespace detail

inline SimulationReport run_simulation(const SimulationConfig& cfg) {
    detail::validate(cfg);
    const int k = static_cast<int>(cfg.beta_active.size());
    const long cap = cfg.max_raw_iterations > 0
                         ? cfg.max_raw_iterations
                         : std::max<long>(1000, 2000L * cfg.iterations);

    SimulationReport report;
    report.config = cfg;
    std::map<std::string, int> model_ids;
    std::vector<long> failures(static_cast<std::size_t>(cfg.p) + 1, 0);

    const int batch = std::max(64, 8 * cfg.workers);
    std::uint64_t next_index = 0;
    bool done = false;
    while (!done && report.raw_iterations < cap) {
        std::vector<detail::IterationOutcome> outcomes(static_cast<std::size_t>(batch));
        std::vector<std::thread> pool;
        for (int w = 0; w < cfg.workers; ++w) {
            pool.emplace_back([&, w]() {
                for (int b = w; b < batch; b += cfg.workers) {
                    try {
                        outcomes[static_cast<std::size_t>(b)] =
                            detail::simulate_one(cfg, next_index + static_cast<std::uint64_t>(b));
                    } catch (...) {
                        outcomes[static_cast<std::size_t>(b)].failed = true;
                        outcomes[static_cast<std::size_t>(b)].screened = false;
                    }
                }
            });
        }
        for (std::thread& t : pool) t.join();

        // Merge strictly in index order; stop the moment the target count of
        // screened iterations is reached so later indices never contribute.
        for (int b = 0; b < batch && report.raw_iterations < cap; ++b) {
            detail::IterationOutcome& o = outcomes[static_cast<std::size_t>(b)];
            ++report.raw_iterations;
            if (o.failed) {
                ++report.failed_iterations;
                continue;
            }
            if (!o.screened) continue;
            ++report.screened_iterations;
            const auto [it, inserted] =
                model_ids.try_emplace(o.model_label, static_cast<int>(report.model_labels.size()));
            if (inserted) report.model_labels.push_back(o.model_label);
            for (const detail::CoefficientOutcome& c : o.coefficients) {
                if (!c.ok) {
                    ++report.coefficient_failures;
                    ++failures[static_cast<std::size_t>(c.column)];
                    continue;
                }
                report.records.push_back({c.column, it->second, c.p_known, c.p_plugin,
                                          c.cover_known, c.cover_plugin});
            }
            if (report.screened_iterations >= cfg.iterations) {
                done = true;
                break;
            }
        }
        next_index += static_cast<std::uint64_t>(batch);
    }
    report.empty_setting = report.screened_iterations == 0;

    // Per-variable and pooled summaries.
    std::vector<std::vector<const ObservationRecord*>> by_col(static_cast<std::size_t>(cfg.p) + 1);
    std::vector<const ObservationRecord*> pooled_active, pooled_inactive;
    for (const ObservationRecord& r : report.records) {
        by_col[static_cast<std::size_t>(r.column)].push_back(&r);
        (r.column <= k ? pooled_active : pooled_inactive).push_back(&r);
    }
    long pooled_active_failures = 0, pooled_inactive_failures = 0;
    for (int j = 1; j <= cfg.p; ++j) {
        const bool active = j <= k;
        report.variables.push_back(detail::summarize(
            "x" + std::to_string(j), active, by_col[static_cast<std::size_t>(j)],
            failures[static_cast<std::size_t>(j)]));
        (active ? pooled_active_failures : pooled_inactive_failures) +=
            failures[static_cast<std::size_t>(j)];
    }
    report.pooled_active =
        detail::summarize("(pooled active)", true, pooled_active, pooled_active_failures);
    report.pooled_inactive =
        detail::summarize("(pooled inactive)", false, pooled_inactive, pooled_inactive_failures);
    return report;
}

/// Plot-ready table: for each covariate, its sorted p-values in the
/// configured variance mode against uniform plotting positions (i-1/2)/m.
/// With stratify = true each row also names the selected model it came from.
inline std::string pvalue_table_csv(const SimulationReport& report, bool stratify = false) {
    std::ostringstream os;
    os << "variable,role,variance_mode,uniform_quantile,p_value";
    if (stratify) os << ",model";
    os << '\n';
    const bool known = report.config.variance_mode == VarianceMode::known;
    const char* mode = variance_mode_name(report.config.variance_mode);
    const int k = static_cast<int>(report.config.beta_active.size());
    for (int j = 1; j <= report.config.p; ++j) {
        std::vector<const ObservationRecord*> obs;
        for (const ObservationRecord& r : report.records)
            if (r.column == j) obs.push_back(&r);
        std::sort(obs.begin(), obs.end(),
                  [known](const ObservationRecord* a, const ObservationRecord* b) {
                      const double pa = known ? a->p_known : a->p_plugin;
                      const double pb = known ? b->p_known : b->p_plugin;
                      if (pa != pb) return pa < pb;
                      return a->model_id < b->model_id;  // stable tie-break for reruns
                  });
        const double m = static_cast<double>(obs.size());
        for (std::size_t i = 0; i < obs.size(); ++i) {
            os << 'x' << j << ',' << (j <= k ? "active" : "inactive") << ',' << mode << ','
               << format_double((i + 0.5) / m) << ','
               << format_double(known ? obs[i]->p_known : obs[i]->p_plugin);
            if (stratify)
                os << ',' << report.model_labels[static_cast<std::size_t>(obs[i]->model_id)];
            os << '\n';
        }
    }
    return os.str();
}

namespace detail {

inline nlohmann::ordered_json summary_json(const VariableSummary& s) {
    nlohmann::ordered_json v;
    v["name"] = s.name;
    v["role"] = s.active ? "active" : "inactive";
    v["appearances"] = s.appearances;
    v["failures"] = s.failures;
    if (s.appearances > 0) {
        v["ks_known"] = s.ks_known;
        v["ks_plugin"] = s.ks_plugin;
        v["coverage_known"] = s.coverage_known;
        v["coverage_plugin"] = s.coverage_plugin;
    }
    return v;
}

}  // namespace detail

/// Structured summary. Coverage and KS are always reported for both
/// variance modes; the worker count is deliberately absent so reruns with
/// different parallelism stay byte-identical.
inline nlohmann::ordered_json report_summary_json(const SimulationReport& report) {
    const SimulationConfig& cfg = report.config;
    nlohmann::ordered_json root;
    nlohmann::ordered_json config;
    config["n"] = cfg.n;
    config["p"] = cfg.p;
    config["snr"] = cfg.snr;
    config["design"] = cfg.design == DesignKind::independent ? "ind" : "cor";
    if (cfg.design == DesignKind::equicorrelated) config["rho"] = cfg.rho;
    config["beta_active"] = cfg.beta_active;
    config["iterations"] = cfg.iterations;
    config["seed"] = cfg.seed;
    config["level"] = cfg.level;
    config["criterion"] = criterion_name(cfg.criterion);
    config["variance_mode"] = variance_mode_name(cfg.variance_mode);
    config["screen"] = cfg.screen == ScreenRule::extras  ? "extras"
                       : cfg.screen == ScreenRule::exact ? "exact"
                                                         : "none";
    root["config"] = std::move(config);
    root["sigma_rule"] = "sigma^2 = sample variance of the linear predictor / snr, per replicate";
    root["raw_iterations"] = report.raw_iterations;
    root["screened_iterations"] = report.screened_iterations;
    root["failed_iterations"] = report.failed_iterations;
    root["coefficient_failures"] = report.coefficient_failures;
    root["empty_setting"] = report.empty_setting;
    nlohmann::ordered_json variables = nlohmann::ordered_json::array();
    for (const VariableSummary& s : report.variables) variables.push_back(detail::summary_json(s));
    root["variables"] = std::move(variables);
    root["pooled"]["active"] = detail::summary_json(report.pooled_active);
    root["pooled"]["inactive"] = detail::summary_json(report.pooled_inactive);
    return root;
}

}  // namespace selinf
