#pragma once

// Independent reference implementations the tests compare against. Every
// routine here recomputes its answer from first principles (explicit normal
// equations, adaptive quadrature of densities, brute-force enumeration,
// direct decision rules, rejection sampling) and shares no code with the
// library paths under test.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

namespace oracles {

// ------------------------------------------------------------- least squares

struct OlsFit {
    Eigen::VectorXd coefficients;
    double rss = 0.0;
};

/// Least squares via the normal equations and explicit inversion.
inline OlsFit normal_equations(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
    const Eigen::MatrixXd xtx = x.transpose() * x;
    OlsFit fit;
    fit.coefficients = xtx.inverse() * (x.transpose() * y);
    fit.rss = (y - x * fit.coefficients).squaredNorm();
    return fit;
}

inline Eigen::MatrixXd take_columns(const Eigen::MatrixXd& x, const std::vector<int>& cols) {
    Eigen::MatrixXd out(x.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = x.col(cols[j]);
    return out;
}

inline double rss_of(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                     const std::vector<int>& cols) {
    return normal_equations(take_columns(x, cols), y).rss;
}

/// Hat matrix X (X'X)^-1 X' by explicit inversion.
inline Eigen::MatrixXd hat_matrix(const Eigen::MatrixXd& x) {
    return x * (x.transpose() * x).inverse() * x.transpose();
}

/// t statistic of coefficient `pos` (0-based within `cols`) using the
/// residual-df variance estimate.
inline double t_statistic(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                          const std::vector<int>& cols, int pos) {
    const Eigen::MatrixXd sub = take_columns(x, cols);
    const OlsFit fit = normal_equations(sub, y);
    const int df = static_cast<int>(x.rows()) - static_cast<int>(cols.size());
    if (df < 1) throw std::runtime_error("oracle t statistic needs residual df");
    const double sigma_sq = fit.rss / df;
    const Eigen::MatrixXd inv = (sub.transpose() * sub).inverse();
    return fit.coefficients[pos] / std::sqrt(sigma_sq * inv(pos, pos));
}

// ----------------------------------------------------- penalized criterion

/// Criterion value n log(rss/(n-p)) + (n-p) + penalty, recomputed from raw
/// sums of squares.
inline double criterion_value(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                              const std::vector<int>& cols, double penalty) {
    const int n = static_cast<int>(x.rows());
    const int df = n - static_cast<int>(cols.size());
    if (df < 1) throw std::runtime_error("oracle criterion needs residual df");
    const double rss = rss_of(x, y, cols);
    return n * std::log(rss / df) + df + penalty;
}

struct OraclePath {
    std::vector<std::vector<int>> winners;  // model after each decided step
    std::vector<int> selected;
};

/// Brute-force forward stepwise: at each step score the current model and
/// every one-column augmentation (ascending column order), move to the strict
/// minimizer, stop when staying wins. `penalty_of` maps model size to its
/// penalty.
inline OraclePath stepwise_forward(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                   std::vector<int> start, std::vector<int> scope,
                                   const std::function<double(int)>& penalty_of) {
    const int n = static_cast<int>(x.rows());
    std::sort(start.begin(), start.end());
    OraclePath path;
    std::vector<int> current = start;
    while (true) {
        double best = criterion_value(x, y, current, penalty_of(static_cast<int>(current.size())));
        std::vector<int> best_cols = current;
        int feasible = 1;
        for (int col : scope) {
            if (std::find(current.begin(), current.end(), col) != current.end()) continue;
            if (static_cast<int>(current.size()) + 1 >= n) continue;
            std::vector<int> cand = current;
            cand.insert(std::upper_bound(cand.begin(), cand.end(), col), col);
            ++feasible;
            const double crit =
                criterion_value(x, y, cand, penalty_of(static_cast<int>(cand.size())));
            if (crit < best) {
                best = crit;
                best_cols = cand;
            }
        }
        if (feasible > 1) path.winners.push_back(best_cols);
        if (best_cols == current) break;
        current = best_cols;
    }
    path.selected = current;
    return path;
}

/// Brute-force backward elimination by |t|: drop the smallest-|t| unprotected
/// column while it stays below `critical_of(df)`, protecting the given
/// columns. Mirrors the documented procedure using only oracle t statistics.
inline std::vector<int> backward_by_t(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                      std::vector<int> start, const std::vector<int>& protect,
                                      const std::function<double(int)>& critical_of) {
    std::sort(start.begin(), start.end());
    std::vector<int> current = start;
    while (true) {
        std::vector<int> unprotected;
        for (int col : current)
            if (std::find(protect.begin(), protect.end(), col) == protect.end())
                unprotected.push_back(col);
        if (unprotected.empty() || current.size() == 1) break;
        int j_star = unprotected.front();
        double smallest = std::numeric_limits<double>::infinity();
        for (int col : unprotected) {
            const int pos = static_cast<int>(
                std::find(current.begin(), current.end(), col) - current.begin());
            const double t = std::abs(t_statistic(x, y, current, pos));
            if (t < smallest) {
                smallest = t;
                j_star = col;
            }
        }
        const int df = static_cast<int>(x.rows()) - static_cast<int>(current.size());
        if (smallest >= critical_of(df)) break;
        current.erase(std::find(current.begin(), current.end(), j_star));
    }
    return current;
}

// ----------------------------------------------------------- quadrature

namespace detail {

inline double simpson(double a, double fa, double b, double fb, double fm) {
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

inline double adaptive(const std::function<double(double)>& f, double a, double fa, double b,
                       double fb, double m, double fm, double whole, double eps, int depth) {
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = simpson(a, fa, m, fm, flm);
    const double right = simpson(m, fm, b, fb, frm);
    if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * eps)
        return left + right + (left + right - whole) / 15.0;
    return adaptive(f, a, fa, m, fm, lm, flm, left, 0.5 * eps, depth - 1) +
           adaptive(f, m, fm, b, fb, rm, frm, right, 0.5 * eps, depth - 1);
}

}  // namespace detail

/// Adaptive Simpson integral of f over [a, b] to (roughly) relative accuracy
/// 1e-11 of the integral's own magnitude.
inline double integrate(const std::function<double(double)>& f, double a, double b) {
    if (!(a < b)) return 0.0;
    // Seed the error budget with a coarse composite estimate of the scale.
    double coarse = 0.0;
    const int panels = 64;
    for (int i = 0; i < panels; ++i) {
        const double lo = a + (b - a) * i / panels;
        const double hi = a + (b - a) * (i + 1) / panels;
        coarse += (hi - lo) / 6.0 * (f(lo) + 4.0 * f(0.5 * (lo + hi)) + f(hi));
    }
    const double eps = std::max(1e-11 * std::abs(coarse), 1e-300);
    const double m = 0.5 * (a + b);
    const double fa = f(a), fb = f(b), fm = f(m);
    return detail::adaptive(f, a, fa, b, fb, m, fm, detail::simpson(a, fa, b, fb, fm), eps, 46);
}

inline double normal_density(double x, double mean, double sd) {
    const double z = (x - mean) / sd;
    return std::exp(-0.5 * z * z) / (sd * 2.5066282746310005024);
}

/// P(a <= X <= b) for X ~ N(mean, sd^2) by quadrature, endpoints may be
/// infinite.
inline double normal_mass(double a, double b, double mean, double sd) {
    const double lo = std::max(a, mean - 42.0 * sd);
    const double hi = std::min(b, mean + 42.0 * sd);
    if (!(lo < hi)) return 0.0;
    return integrate([&](double x) { return normal_density(x, mean, sd); }, lo, hi);
}

inline double chi_density(double t, double df) {
    if (t < 0.0) return 0.0;
    const double log_norm = (1.0 - 0.5 * df) * std::log(2.0) - std::lgamma(0.5 * df);
    if (t == 0.0) return df == 1.0 ? std::exp(log_norm) : 0.0;
    return std::exp(log_norm + (df - 1.0) * std::log(t) - 0.5 * t * t);
}

/// P(a <= T <= b) for T chi-distributed with df degrees of freedom.
inline double chi_mass(double a, double b, double df) {
    const double lo = std::max(a, 0.0);
    const double hi = std::min(b, std::sqrt(df) + 46.0);
    if (!(lo < hi)) return 0.0;
    return integrate([&](double t) { return chi_density(t, df); }, lo, hi);
}

using IntervalList = std::vector<std::pair<double, double>>;

/// Two-sided selective p-value by quadrature over the truncation set.
inline double selective_p_quadrature(double statistic, double theta0, double scale,
                                     const IntervalList& trunc) {
    double total = 0.0, above = 0.0;
    for (const auto& [lo, hi] : trunc) {
        total += normal_mass(lo, hi, theta0, scale);
        above += normal_mass(std::max(lo, statistic), hi, theta0, scale);
    }
    if (!(total > 0.0)) throw std::runtime_error("oracle: truncation mass vanished");
    const double p_tilde = above / total;
    return 2.0 * std::min(p_tilde, 1.0 - p_tilde);
}

/// Conditional chi survival by quadrature.
inline double chi_survival_quadrature(double t_obs, double df, const IntervalList& trunc) {
    double total = 0.0, above = 0.0;
    for (const auto& [lo, hi] : trunc) {
        total += chi_mass(lo, hi, df);
        above += chi_mass(std::max(lo, t_obs), hi, df);
    }
    if (!(total > 0.0)) throw std::runtime_error("oracle: truncation mass vanished");
    return above / total;
}

// ------------------------------------------------------ event polynomials

/// Quadratic q(t) = (base + t dir)' A (base + t dir) + c evaluated through
/// its coefficients; used by the rejection samplers to test event membership
/// directly, without the truncation machinery.
struct LinePoly {
    double a2 = 0.0, a1 = 0.0, a0 = 0.0;
    double value(double t) const { return (a2 * t + a1) * t + a0; }
};

inline LinePoly line_poly(const Eigen::MatrixXd& a, double c, const Eigen::VectorXd& base,
                          const Eigen::VectorXd& dir) {
    LinePoly poly;
    const Eigen::VectorXd a_dir = a * dir;
    const Eigen::VectorXd a_base = a * base;
    poly.a2 = dir.dot(a_dir);
    poly.a1 = base.dot(a_dir) + dir.dot(a_base);
    poly.a0 = base.dot(a_base) + c;
    return poly;
}

}  // namespace oracles
