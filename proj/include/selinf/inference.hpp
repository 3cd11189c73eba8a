#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "selinf/dataset.hpp"
#include "selinf/distributions.hpp"
#include "selinf/errors.hpp"
#include "selinf/events.hpp"
#include "selinf/intervals.hpp"
#include "selinf/linalg.hpp"
#include "selinf/truncation.hpp"

// Selective inference proper: p-values and confidence intervals for the
// truncated-normal coefficient statistics, the truncated-chi group test, and
// the per-model assembly that the command-line tools expose.

namespace selinf {

enum class VarianceMode { known, reml_plugin };

inline const char* variance_mode_name(VarianceMode m) {
    return m == VarianceMode::known ? "known" : "reml_plugin";
}

/// One selective test: the observed statistic, its conditioning region, and
/// the resulting p-value. df is the chi degrees of freedom for group tests
/// and 0 for coefficient tests.
struct SelectiveTest {
    double statistic = 0.0;
    double theta0 = 0.0;
    double sigma = 0.0;
    double v_norm2 = 1.0;
    IntervalSet truncation;
    double p_value = 1.0;
    VarianceMode variance_mode = VarianceMode::known;
    double df = 0.0;
};

struct ConfidenceInterval {
    double lower = 0.0;
    double upper = 0.0;
    double level = 0.0;
};

namespace detail {

struct MassSplit {
    double log_below = negative_infinity();
    double log_above = negative_infinity();
    double log_total = negative_infinity();
};

/// Mass of N(theta, scale^2) over the truncation set, split at x. Summing
/// the below/above parts separately keeps both one-sided tail ratios exact;
/// 1 - p would cancel catastrophically for p near 1.
inline MassSplit split_normal_mass(double x, double theta, double scale,
                                   const IntervalSet& trunc) {
    MassSplit split;
    for (const Interval& iv : trunc.intervals()) {
        const double za = (iv.lo - theta) / scale;
        const double zb = (iv.hi - theta) / scale;
        const double zx = (x - theta) / scale;
        split.log_total = log_sum_exp(split.log_total, std_normal_interval_log_mass(za, zb));
        if (zx <= za) {
            split.log_above = log_sum_exp(split.log_above, std_normal_interval_log_mass(za, zb));
        } else if (zx >= zb) {
            split.log_below = log_sum_exp(split.log_below, std_normal_interval_log_mass(za, zb));
        } else {
            split.log_above = log_sum_exp(split.log_above, std_normal_interval_log_mass(zx, zb));
            split.log_below = log_sum_exp(split.log_below, std_normal_interval_log_mass(za, zx));
        }
    }
    return split;
}

/// Same split for the chi_df law; the set must already lie inside [0, inf).
inline MassSplit split_chi_mass(double x, double df, const IntervalSet& trunc) {
    MassSplit split;
    for (const Interval& iv : trunc.intervals()) {
        split.log_total = log_sum_exp(split.log_total, chi_interval_log_mass(iv.lo, iv.hi, df));
        if (x <= iv.lo) {
            split.log_above = log_sum_exp(split.log_above, chi_interval_log_mass(iv.lo, iv.hi, df));
        } else if (x >= iv.hi) {
            split.log_below = log_sum_exp(split.log_below, chi_interval_log_mass(iv.lo, iv.hi, df));
        } else {
            split.log_above = log_sum_exp(split.log_above, chi_interval_log_mass(x, iv.hi, df));
            split.log_below = log_sum_exp(split.log_below, chi_interval_log_mass(iv.lo, x, df));
        }
    }
    return split;
}

inline void require_member(double x, const IntervalSet& trunc, const char* what) {
    if (!trunc.contains(x, kContainmentSlack * (1.0 + std::abs(x))))
        throw ValidationError(std::string(what) + " lies outside the truncation set " +
                              trunc.describe());
}

inline void require_mass(const MassSplit& split, const IntervalSet& trunc) {
    if (std::isinf(split.log_total))
        throw PrecisionError("truncation set " + trunc.describe() +
                             " carries no probability mass even in the log channel");
}

}  // namespace detail

/// Conditional probability P_theta(S > x | S in trunc) for S ~ N(theta,
/// scale^2) restricted to the truncation set.
inline double truncated_normal_survival(double x, double theta, double scale,
                                        const IntervalSet& trunc) {
    if (!(scale > 0.0)) throw ValidationError("scale must be positive");
    detail::require_member(x, trunc, "statistic");
    const detail::MassSplit split = detail::split_normal_mass(x, theta, scale, trunc);
    detail::require_mass(split, trunc);
    return std::min(1.0, std::exp(split.log_above - split.log_total));
}

/// Two-sided selective p-value for H0: v'mu = theta0, conditioning on the
/// truncation set: p = 2 min(p_tilde, 1 - p_tilde) with p_tilde the
/// conditional survival of the observed statistic.
inline double selective_p_value(double statistic, double theta0, double sigma, double v_norm2,
                                const IntervalSet& trunc) {
    if (!(sigma > 0.0)) throw ValidationError("sigma must be positive");
    if (!(v_norm2 > 0.0)) throw ValidationError("v_norm2 must be positive");
    const double scale = sigma * std::sqrt(v_norm2);
    detail::require_member(statistic, trunc, "statistic");
    const detail::MassSplit split = detail::split_normal_mass(statistic, theta0, scale, trunc);
    detail::require_mass(split, trunc);
    const double log_min_tail = std::min(split.log_above, split.log_below);
    return std::min(1.0, 2.0 * std::exp(log_min_tail - split.log_total));
}

/// Equal-tailed selective confidence interval, found by inverting the
/// survival function over its mean parameter. Survival is nondecreasing in
/// theta, so each endpoint is a bracketed bisection; the bracket starts at
/// statistic +- 10 scale and doubles until it straddles the target.
inline ConfidenceInterval selective_confidence_interval(double statistic, double sigma,
                                                        double v_norm2, const IntervalSet& trunc,
                                                        double level) {
    if (!(level > 0.0 && level < 1.0)) throw ValidationError("level must lie strictly in (0,1)");
    if (!(sigma > 0.0)) throw ValidationError("sigma must be positive");
    if (!(v_norm2 > 0.0)) throw ValidationError("v_norm2 must be positive");
    const double scale = sigma * std::sqrt(v_norm2);
    detail::require_member(statistic, trunc, "statistic");

    const auto survival = [&](double theta) {
        const detail::MassSplit split =
            detail::split_normal_mass(statistic, theta, scale, trunc);
        detail::require_mass(split, trunc);
        return std::exp(split.log_above - split.log_total);
    };

    const double alpha = 1.0 - level;
    const auto solve = [&](double target) {
        double lo = statistic - 10.0 * scale;
        double hi = statistic + 10.0 * scale;
        int expansions = 0;
        while (survival(lo) > target) {
            const double width = hi - lo;
            lo -= width;
            if (++expansions > 60)
                throw BracketError("confidence endpoint escaped the downward search bracket");
        }
        expansions = 0;
        while (survival(hi) < target) {
            const double width = hi - lo;
            hi += width;
            if (++expansions > 60)
                throw BracketError("confidence endpoint escaped the upward search bracket");
        }
        for (int i = 0; i < 200; ++i) {
            if (hi - lo <= 1e-12 * std::max({1.0, std::abs(lo), std::abs(hi)})) break;
            const double mid = 0.5 * (lo + hi);
            if (survival(mid) < target)
                lo = mid;
            else
                hi = mid;
        }
        return 0.5 * (lo + hi);
    };

    return {solve(0.5 * alpha), solve(1.0 - 0.5 * alpha), level};
}

/// Conditional survival P(T > T_obs | T in trunc) for T chi-distributed
/// with df degrees of freedom; this is also the one-sided group p-value.
inline double truncated_chi_survival(double t_obs, double df, const IntervalSet& trunc) {
    if (!(df > 0.0)) throw ValidationError("chi degrees of freedom must be positive");
    if (!(t_obs >= 0.0)) throw ValidationError("chi statistic must be nonnegative");
    detail::require_member(t_obs, trunc, "group statistic");
    const detail::MassSplit split = detail::split_chi_mass(t_obs, df, trunc);
    detail::require_mass(split, trunc);
    return std::min(1.0, std::exp(split.log_above - split.log_total));
}

inline double group_chi_p_value(double t_obs, double df, const IntervalSet& trunc) {
    return truncated_chi_survival(t_obs, df, trunc);
}

/// Per-coefficient selective report. A coefficient whose truncation or
/// inversion degenerates carries its error message instead of results, so
/// one bad direction never hides the others.
struct CoefficientReport {
    int column = -1;
    std::string name;
    bool ok = false;
    std::string error;
    SelectiveTest test;
    ConfidenceInterval ci;
};

/// Selective tests and intervals for every coefficient of the selected
/// model, at theta0 = 0, with either a supplied sigma or the residual-df
/// plug-in estimate from the selected fit.
inline std::vector<CoefficientReport> analyze_coefficients(const Dataset& data,
                                                           const EventLog& log,
                                                           VarianceMode variance_mode,
                                                           std::optional<double> sigma_known,
                                                           double level) {
    if (!(level > 0.0 && level < 1.0)) throw ValidationError("level must lie strictly in (0,1)");
    double sigma = 0.0;
    if (variance_mode == VarianceMode::known) {
        if (!sigma_known || !(*sigma_known > 0.0))
            throw ValidationError("known-variance mode requires a positive sigma");
        sigma = *sigma_known;
    } else {
        const double est = reml_variance(fit_ols(data, log.selected));
        if (!(est > 0.0))
            throw ValidationError("plug-in variance estimate is zero; supply sigma explicitly");
        sigma = std::sqrt(est);
    }

    std::vector<CoefficientReport> reports;
    for (int col : log.selected.indices()) {
        CoefficientReport report;
        report.column = col;
        report.name = data.name(col);
        try {
            const Eigen::VectorXd v = test_vector(data, log.selected, col);
            SelectiveTest test;
            test.statistic = v.dot(data.y());
            test.theta0 = 0.0;
            test.sigma = sigma;
            test.v_norm2 = v.squaredNorm();
            test.truncation = truncation_for_coefficient(log, v, data.y());
            test.p_value =
                selective_p_value(test.statistic, 0.0, sigma, test.v_norm2, test.truncation);
            test.variance_mode = variance_mode;
            report.ci = selective_confidence_interval(test.statistic, sigma, test.v_norm2,
                                                      test.truncation, level);
            report.test = test;
            report.ok = true;
        } catch (const NumericError& e) {
            report.error = e.what();
        }
        reports.push_back(std::move(report));
    }
    return reports;
}

/// Selective chi test that a group of selected columns is jointly null,
/// conditioning on the recorded events. The group statistic needs a known
/// sigma; there is no plug-in variant.
inline SelectiveTest analyze_group(const Dataset& data, const EventLog& log,
                                   const ModelSubset& group, double sigma) {
    if (!(sigma > 0.0)) throw ValidationError("group test requires a positive sigma");
    const Eigen::MatrixXd proj = group_projection(data, log.selected, group);
    const Eigen::VectorXd projected = proj * data.y();
    const double norm = projected.norm();
    if (norm <= kDegenerateDirectionTol * data.y().norm())
        throw DegenerateDirectionError(
            "response is numerically orthogonal to the residualized group columns");
    SelectiveTest test;
    test.statistic = norm / sigma;
    test.theta0 = 0.0;
    test.sigma = sigma;
    test.v_norm2 = 1.0;
    test.df = proj.trace();
    test.variance_mode = VarianceMode::known;
    const Eigen::VectorXd u = projected / norm;
    const Eigen::VectorXd z = data.y() - projected;
    test.truncation = chi_truncation(log, u, z, sigma, test.statistic);
    test.p_value = truncated_chi_survival(test.statistic, test.df, test.truncation);
    return test;
}

}  // namespace selinf
