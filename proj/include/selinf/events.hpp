#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <iomanip>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "selinf/dataset.hpp"
#include "selinf/distributions.hpp"
#include "selinf/errors.hpp"
#include "selinf/linalg.hpp"

// Quadratic selection events: every supported model-choice rule is recorded
// as a matrix/offset pair (A, c) meaning "this choice happened" iff
// y'Ay + c >= 0. Selection procedures return the chosen model together with
// the ordered log of every event the data decided.

namespace selinf {

enum class Criterion { aic, bic };

inline const char* criterion_name(Criterion c) { return c == Criterion::aic ? "aic" : "bic"; }

/// Penalty on -2 log-likelihood for a model with p_k mean coefficients; the
/// +1 counts the scale parameter.
inline double penalty_aic(int p_k) {
    if (p_k < 1) throw ValidationError("penalty needs at least one coefficient");
    return 2.0 * (p_k + 1);
}

inline double penalty_bic(int p_k, int n) {
    if (p_k < 1) throw ValidationError("penalty needs at least one coefficient");
    if (n < 2) throw ValidationError("penalty needs at least two observations");
    return std::log(static_cast<double>(n)) * (p_k + 1);
}

inline double penalty(Criterion crit, int p_k, int n) {
    return crit == Criterion::aic ? penalty_aic(p_k) : penalty_bic(p_k, n);
}

/// Penalized-likelihood criterion value of a fit, up to a shared additive
/// constant. Uses the residual-df scale estimate RSS/(n-p), whose (n-p)
/// factors are the ones appearing in the event matrices; smaller is better.
inline double penalized_criterion(const FittedModel& fit, double pen, int n) {
    if (fit.df_resid < 1) throw ValidationError("criterion undefined for saturated model");
    const double scale = fit.rss / fit.df_resid;
    return n * std::log(scale) + fit.df_resid + pen;
}

/// One recorded selection decision: satisfied by a response y iff
/// y'Ay + c >= 0.
struct QuadraticEvent {
    Eigen::MatrixXd a;
    double c = 0.0;
    std::string label;

    double evaluate(const Eigen::VectorXd& y) const { return y.dot(a * y) + c; }
};

/// Everything a selection procedure decided: the ordered events, the final
/// model, and a human-readable trace of the steps.
struct EventLog {
    std::vector<QuadraticEvent> events;
    ModelSubset selected;
    std::vector<std::string> trace;
};

/// Event "model 1 preferred over model 2" under penalized Gaussian
/// likelihood with per-model scale RSS_k/(n-p_k):
///   A = (n-p1) e^{-gamma/n} (I - P2) - (n-p2)(I - P1),  c = 0,
/// gamma = p2 - p1 + pen1 - pen2. Works for arbitrary (not necessarily
/// nested) full-rank pairs.
inline QuadraticEvent event_penalized_likelihood(const Dataset& data, const ModelSubset& m1,
                                                 const ModelSubset& m2, double pen1, double pen2) {
    if (!std::isfinite(pen1) || !std::isfinite(pen2))
        throw ValidationError("penalties must be finite");
    const int n = data.n();
    const int p1 = m1.size(), p2 = m2.size();
    if (p1 >= n || p2 >= n)
        throw ValidationError("scale estimate undefined: model has no residual degrees of freedom");
    const double gamma = (p2 - p1) + pen1 - pen2;
    const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(n, n);
    const Eigen::MatrixXd proj1 = projection_matrix(data, m1);
    const Eigen::MatrixXd proj2 = projection_matrix(data, m2);
    QuadraticEvent event;
    event.a = (n - p1) * std::exp(-gamma / n) * (identity - proj2) -
              static_cast<double>(n - p2) * (identity - proj1);
    event.c = 0.0;
    std::ostringstream label;
    label << "penalized-likelihood: " << m1.label(data) << " over " << m2.label(data)
          << " pen=(" << pen1 << "," << pen2 << ") gamma=" << gamma;
    event.label = label.str();
    return event;
}

namespace detail {

inline void require_strict_nesting(const ModelSubset& m_small, const ModelSubset& m_large) {
    if (!m_small.nested_in(m_large) || m_small.size() >= m_large.size())
        throw ValidationError("comparison requires strictly nested models");
}

}  // namespace detail

/// Likelihood-ratio decision at level alpha between nested models: the small
/// model is kept iff the deviance gain stays below the chi-square critical
/// value, which is the penalized-likelihood event with pen1 = 0 and pen2 the
/// critical value. keep_small = false gives the negated event.
inline QuadraticEvent event_lrt(const Dataset& data, const ModelSubset& m_small,
                                const ModelSubset& m_large, double alpha, bool keep_small) {
    detail::require_strict_nesting(m_small, m_large);
    if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("alpha must lie strictly in (0,1)");
    const int df = m_large.size() - m_small.size();
    const double critical = chi_square_quantile(1.0 - alpha, df);
    QuadraticEvent event = event_penalized_likelihood(data, m_small, m_large, 0.0, critical);
    std::ostringstream label;
    label << "lrt alpha=" << alpha << ": " << (keep_small ? "keep " : "reject ")
          << m_small.label(data) << " vs " << m_large.label(data) << " critical=" << critical;
    event.label = label.str();
    if (!keep_small) {
        event.a = -event.a;
        event.c = -event.c;
    }
    return event;
}

/// F-test decision at level alpha between nested models:
///   A = P1 + kappa (I - P2) - P2,  kappa = F_crit * (p2-p1)/(n-p2),
/// satisfied iff the F statistic stays below its critical value (small model
/// kept); negated when the large model is chosen.
inline QuadraticEvent event_f_test(const Dataset& data, const ModelSubset& m_small,
                                   const ModelSubset& m_large, double alpha, bool keep_small) {
    detail::require_strict_nesting(m_small, m_large);
    if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("alpha must lie strictly in (0,1)");
    const int n = data.n();
    const int df1 = m_large.size() - m_small.size();
    const int df2 = n - m_large.size();
    if (df2 < 1) throw ValidationError("F comparison needs residual degrees of freedom");
    const double kappa =
        f_quantile(1.0 - alpha, df1, df2) * static_cast<double>(df1) / static_cast<double>(df2);
    const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(n, n);
    const Eigen::MatrixXd proj1 = projection_matrix(data, m_small);
    const Eigen::MatrixXd proj2 = projection_matrix(data, m_large);
    QuadraticEvent event;
    event.a = proj1 + kappa * (identity - proj2) - proj2;
    event.c = 0.0;
    std::ostringstream label;
    label << "f-test alpha=" << alpha << ": " << (keep_small ? "keep " : "reject ")
          << m_small.label(data) << " vs " << m_large.label(data) << " kappa=" << kappa;
    event.label = label.str();
    if (!keep_small) {
        event.a = -event.a;
        event.c = -event.c;
    }
    return event;
}

namespace detail {

/// Rank-one projector v v'/(v'v) onto a test direction.
inline Eigen::MatrixXd direction_projector(const Eigen::VectorXd& v) {
    const double nsq = v.squaredNorm();
    if (!(nsq > 0.0)) throw NumericError("test direction is numerically zero");
    return (v * v.transpose()) / nsq;
}

}  // namespace detail

/// Event "column j_star has the smallest absolute t statistic, in particular
/// no larger than column j's": A = P_{v_j} - P_{v_j*}, c = 0. Both columns
/// are dataset indices and must belong to the model.
inline QuadraticEvent event_drop_smallest_t(const Dataset& data, const ModelSubset& model,
                                            int j_star, int j) {
    if (j == j_star) throw ValidationError("smallest-t comparison needs two distinct columns");
    QuadraticEvent event;
    event.a = detail::direction_projector(test_vector(data, model, j)) -
              detail::direction_projector(test_vector(data, model, j_star));
    event.c = 0.0;
    std::ostringstream label;
    label << "drop-smallest-t in " << model.label(data) << ": |t(" << data.name(j_star)
          << ")| <= |t(" << data.name(j) << ")|";
    event.label = label.str();
    return event;
}

/// Event "column j_star is not significant at level alpha in this model":
///   A = Q^2 (n-p_k)^{-1} (I - P_Xk) - P_{v_j*},  c = 0,
/// with Q the two-sided t critical value; y'Ay >= 0 iff |t_j*| <= Q.
inline QuadraticEvent event_t_nonsignificant(const Dataset& data, const ModelSubset& model,
                                             int j_star, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("alpha must lie strictly in (0,1)");
    const int n = data.n();
    const int df = n - model.size();
    if (df < 1) throw ValidationError("t test needs residual degrees of freedom");
    const double critical = student_t_quantile(1.0 - 0.5 * alpha, df);
    const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(n, n);
    QuadraticEvent event;
    event.a = (critical * critical / df) * (identity - projection_matrix(data, model)) -
              detail::direction_projector(test_vector(data, model, j_star));
    event.c = 0.0;
    std::ostringstream label;
    label << "t-nonsignificant in " << model.label(data) << ": |t(" << data.name(j_star)
          << ")| <= " << critical << " (alpha=" << alpha << ")";
    event.label = label.str();
    return event;
}

/// One candidate considered at a stepwise step.
struct StepCandidate {
    ModelSubset model;
    double penalty_value = 0.0;
    double criterion_value = 0.0;
};

/// One stepwise step: the candidates in evaluation order and the winner's
/// position among them. Candidate 0 is always "stay with the current model".
struct SelectionStep {
    std::vector<StepCandidate> candidates;
    std::size_t winner = 0;
};

/// A stepwise run recorded without event matrices. Materializing the
/// matrices is deferred so bulk simulation can screen runs cheaply first.
struct SelectionPath {
    std::vector<SelectionStep> steps;
    ModelSubset selected;
    std::vector<std::string> trace;
};

/// Forward stepwise search under AIC or BIC. Each step scores the current
/// model and every full-rank one-column augmentation from the scope, then
/// moves to the minimizer; ties prefer the smaller model, then the smallest
/// added column index (candidates are evaluated in exactly that order).
/// The search stops on the first step the current model wins.
inline SelectionPath stepwise_forward_path(const Dataset& data, Criterion criterion,
                                           const ModelSubset& start,
                                           const std::vector<int>& scope) {
    start.check_against(data);
    for (int col : scope) {
        if (col < 0 || col >= data.p())
            throw ValidationError("scope column index " + std::to_string(col) + " out of range");
        if (start.contains(col))
            throw ValidationError("scope column " + data.name(col) + " already in start model");
    }

    const int n = data.n();
    auto scored = [&](const ModelSubset& m) {
        StepCandidate cand{m, penalty(criterion, m.size(), n), 0.0};
        cand.criterion_value = penalized_criterion(fit_ols(data, m), cand.penalty_value, n);
        return cand;
    };

    SelectionPath path{{}, start, {}};
    ModelSubset current = start;
    std::vector<int> remaining = scope;
    for (int step = 1;; ++step) {
        SelectionStep record;
        record.candidates.push_back(scored(current));
        for (int col : remaining) {
            if (current.size() + 1 >= n) {
                path.trace.push_back("step " + std::to_string(step) + ": skip " + data.name(col) +
                                     " (no residual degrees of freedom)");
                continue;
            }
            try {
                record.candidates.push_back(scored(current.with(col)));
            } catch (const RankError&) {
                path.trace.push_back("step " + std::to_string(step) + ": skip " + data.name(col) +
                                     " (rank deficient)");
            }
        }
        record.winner = 0;
        for (std::size_t k = 1; k < record.candidates.size(); ++k)
            if (record.candidates[k].criterion_value <
                record.candidates[record.winner].criterion_value)
                record.winner = k;

        const bool stays = record.winner == 0;
        std::ostringstream note;
        note << "step " << step << ": " << (stays ? "stop at " : "move to ")
             << record.candidates[record.winner].model.label(data) << " (" << criterion_name(criterion)
             << ' ' << std::setprecision(10) << record.candidates[record.winner].criterion_value
             << ", " << record.candidates.size() << " candidates)";
        path.trace.push_back(note.str());
        if (record.candidates.size() > 1) path.steps.push_back(record);

        if (stays) break;
        current = path.steps.back().candidates[path.steps.back().winner].model;
        std::vector<int> next_remaining;
        for (int col : remaining)
            if (!current.contains(col)) next_remaining.push_back(col);
        remaining = std::move(next_remaining);
    }
    path.selected = current;
    return path;
}

/// Build the event matrices for a recorded stepwise run: at every step, one
/// penalized-likelihood event per (winner, loser) candidate pair.
inline EventLog materialize(const SelectionPath& path, const Dataset& data) {
    EventLog log{{}, path.selected, path.trace};
    for (const SelectionStep& step : path.steps) {
        const StepCandidate& winner = step.candidates[step.winner];
        for (std::size_t k = 0; k < step.candidates.size(); ++k) {
            if (k == step.winner) continue;
            const StepCandidate& loser = step.candidates[k];
            log.events.push_back(event_penalized_likelihood(
                data, winner.model, loser.model, winner.penalty_value, loser.penalty_value));
        }
    }
    return log;
}

/// Forward stepwise selection with the full event log.
inline EventLog stepwise_forward(const Dataset& data, Criterion criterion,
                                 const ModelSubset& start, const std::vector<int>& scope) {
    return materialize(stepwise_forward_path(data, criterion, start, scope), data);
}

/// Backward elimination by t-test ("significance hunting"): repeatedly drop
/// the unprotected coefficient with the smallest |t| while it stays below
/// the two-sided critical value at level alpha. Each drop logs the pairwise
/// smallest-|t| events against every other unprotected column plus the
/// non-significance event for the dropped column; the final stop decision is
/// not logged.
inline EventLog backward_significance_hunting(const Dataset& data, const ModelSubset& start,
                                              double alpha, const std::vector<int>& protect) {
    start.check_against(data);
    if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("alpha must lie strictly in (0,1)");
    for (int col : protect)
        if (!start.contains(col))
            throw ValidationError("protected column " + std::to_string(col) + " not in start model");

    const int n = data.n();
    EventLog log{{}, start, {}};
    ModelSubset current = start;
    for (int step = 1;; ++step) {
        if (current.size() >= n)
            throw ValidationError("t tests need residual degrees of freedom");
        std::vector<int> unprotected;
        for (int col : current.indices())
            if (std::find(protect.begin(), protect.end(), col) == protect.end())
                unprotected.push_back(col);
        if (unprotected.empty()) {
            log.trace.push_back("step " + std::to_string(step) + ": stop (all columns protected)");
            break;
        }
        if (current.size() == 1) {
            log.trace.push_back("step " + std::to_string(step) + ": stop (single column left)");
            break;
        }

        const FittedModel fit = fit_ols(data, current);
        const double sigma_sq = reml_variance(fit);
        int j_star = unprotected.front();
        double smallest = positive_infinity();
        for (int col : unprotected) {
            const Eigen::VectorXd v = test_vector(data, current, col);
            const double t = v.dot(data.y()) / std::sqrt(sigma_sq * v.squaredNorm());
            if (std::abs(t) < smallest) {
                smallest = std::abs(t);
                j_star = col;
            }
        }
        const double critical = student_t_quantile(1.0 - 0.5 * alpha, n - current.size());
        if (smallest >= critical) {
            log.trace.push_back("step " + std::to_string(step) + ": stop (|t(" +
                                data.name(j_star) + ")| significant)");
            break;
        }
        for (int col : unprotected)
            if (col != j_star)
                log.events.push_back(event_drop_smallest_t(data, current, j_star, col));
        log.events.push_back(event_t_nonsignificant(data, current, j_star, alpha));
        log.trace.push_back("step " + std::to_string(step) + ": drop " + data.name(j_star));
        current = current.without(j_star);
    }
    log.selected = current;
    return log;
}

}  // namespace selinf
