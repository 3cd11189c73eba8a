#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <string>
#include <vector>

#include "selinf/errors.hpp"
#include "selinf/events.hpp"
#include "selinf/intervals.hpp"

// Truncation engine: restrict a test statistic to the region where every
// recorded selection event still holds. Each event's quadratic is reduced to
// a univariate polynomial along the conditioning line, solved exactly, and
// the per-event regions are intersected.

namespace selinf {

/// |v'y| below this multiple of ||v|| ||y|| counts as a degenerate direction.
inline constexpr double kDegenerateDirectionTol = 1e-12;

/// Relative slack allowed when asserting that a truncation region contains
/// its observed statistic; near-tie events put the statistic on a boundary.
inline constexpr double kContainmentSlack = 1e-8;

/// Coefficients of delta t^2 + zeta t + xi, the event quadratic restricted
/// to a one-parameter family of responses.
struct QuadraticCoefficients {
    double delta = 0.0;
    double zeta = 0.0;
    double xi = 0.0;
};

/// Restrict an event to the line Y(t) = P_v_perp y + t P_v y, where P_v is
/// the rank-one projector onto the test direction v. Conditioning on the
/// complement P_v_perp Y = P_v_perp y is implicit in this parametrization.
inline QuadraticCoefficients line_coefficients(const QuadraticEvent& event,
                                               const Eigen::VectorXd& v,
                                               const Eigen::VectorXd& y) {
    const double vsq = v.squaredNorm();
    if (!(vsq > 0.0)) throw DegenerateDirectionError("test direction is zero");
    const double vy = v.dot(y);
    if (std::abs(vy) <= kDegenerateDirectionTol * std::sqrt(vsq) * y.norm())
        throw DegenerateDirectionError(
            "test direction is numerically orthogonal to the observed response");
    const Eigen::VectorXd y_par = v * (vy / vsq);
    const Eigen::VectorXd y_perp = y - y_par;
    const Eigen::VectorXd a_par = event.a * y_par;
    const Eigen::VectorXd a_perp = event.a * y_perp;
    return {y_par.dot(a_par), 2.0 * y_par.dot(a_perp), y_perp.dot(a_perp) + event.c};
}

/// Solution set {t : delta t^2 + zeta t + xi >= 0}. A quadratic coefficient
/// tiny relative to the others is treated as zero, falling through to the
/// linear (and then constant) case.
inline IntervalSet solve_t_region(const QuadraticCoefficients& q) {
    if (!std::isfinite(q.delta) || !std::isfinite(q.zeta) || !std::isfinite(q.xi))
        throw ValidationError("quadratic coefficients must be finite");
    const double inf = positive_infinity();
    const double delta = std::abs(q.delta) < 1e-12 * (std::abs(q.zeta) + std::abs(q.xi) + 1.0)
                             ? 0.0
                             : q.delta;
    if (delta == 0.0) {
        const double zeta =
            std::abs(q.zeta) < 1e-12 * (std::abs(q.xi) + 1.0) ? 0.0 : q.zeta;
        if (zeta == 0.0) return q.xi >= 0.0 ? IntervalSet::all() : IntervalSet::empty_set();
        const double root = -q.xi / zeta;
        return zeta > 0.0 ? IntervalSet::single(root, inf) : IntervalSet::single(-inf, root);
    }
    const double disc = q.zeta * q.zeta - 4.0 * delta * q.xi;
    if (disc <= 0.0)
        return delta > 0.0 ? IntervalSet::all() : IntervalSet::empty_set();
    // Stable root pairing: the larger-magnitude root from the standard
    // formula, its companion via the product xi/delta.
    const double sq = std::sqrt(disc);
    const double qq = -0.5 * (q.zeta + (q.zeta >= 0.0 ? sq : -sq));
    const double r1 = qq / delta;
    const double r2 = qq != 0.0 ? q.xi / qq : 0.0;
    const double tau1 = std::min(r1, r2);
    const double tau2 = std::max(r1, r2);
    if (delta > 0.0)
        return IntervalSet({Interval{-inf, tau1}, Interval{tau2, inf}});
    return IntervalSet::single(tau1, tau2);
}

/// Map a region in the line parameter t to the scale of the statistic
/// s = t * observed. Negative observed reverses the intervals.
inline IntervalSet to_statistic_space(const IntervalSet& t_region, double observed) {
    if (observed == 0.0 || std::isnan(observed))
        throw DegenerateDirectionError("observed statistic is zero; scaling undefined");
    return t_region.scaled(observed);
}

/// Truncation region of the coefficient statistic v'Y given every event in
/// the log. Throws if the intersection is empty or fails to contain the
/// observed v'y, which indicates an event the data never actually satisfied.
inline IntervalSet truncation_for_coefficient(const EventLog& log, const Eigen::VectorXd& v,
                                              const Eigen::VectorXd& y) {
    const double observed = v.dot(y);
    IntervalSet region = IntervalSet::all();
    for (const QuadraticEvent& event : log.events)
        region = region.intersect(
            to_statistic_space(solve_t_region(line_coefficients(event, v, y)), observed));
    const double slack = kContainmentSlack * (1.0 + std::abs(observed));
    if (!region.contains(observed, slack)) {
        for (const QuadraticEvent& event : log.events) {
            const IntervalSet one =
                to_statistic_space(solve_t_region(line_coefficients(event, v, y)), observed);
            if (!one.contains(observed, slack))
                throw InconsistencyError(
                    "truncation region excludes the observed statistic; offending event: " +
                    event.label);
        }
        throw InconsistencyError("truncation region excludes the observed statistic");
    }
    return region;
}

/// Restrict an event to the ray Y(T) = z + sigma T u used by the group test;
/// u must be a unit vector and z the part of y orthogonal to the group span.
inline QuadraticCoefficients chi_line_coefficients(const QuadraticEvent& event,
                                                   const Eigen::VectorXd& u,
                                                   const Eigen::VectorXd& z, double sigma) {
    if (std::abs(u.norm() - 1.0) > 1e-10)
        throw ValidationError("group-test direction must be a unit vector");
    if (!(sigma > 0.0)) throw ValidationError("sigma must be positive");
    const Eigen::VectorXd au = event.a * u;
    return {sigma * sigma * u.dot(au), 2.0 * sigma * z.dot(au), z.dot(event.a * z) + event.c};
}

/// Truncation region of the nonnegative group statistic T: per-event region
/// clipped to [0, inf), then intersected across events. observed_t is the
/// realized statistic and must belong to the result.
inline IntervalSet chi_truncation(const EventLog& log, const Eigen::VectorXd& u,
                                  const Eigen::VectorXd& z, double sigma, double observed_t) {
    IntervalSet region = IntervalSet::single(0.0, positive_infinity());
    for (const QuadraticEvent& event : log.events)
        region = region.intersect(solve_t_region(chi_line_coefficients(event, u, z, sigma)));
    const double slack = kContainmentSlack * (1.0 + std::abs(observed_t));
    if (region.empty() || !region.contains(observed_t, slack))
        throw InconsistencyError("group-statistic truncation excludes the observed value");
    return region;
}

}  // namespace selinf
