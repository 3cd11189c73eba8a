#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include "selinf/errors.hpp"

// Distribution kernels: standard normal, chi, chi-square, Student t and F,
// each with enough tail accuracy for the truncated-distribution arithmetic
// downstream. Everything here is self-contained (no Eigen, no global state).

namespace selinf {

inline constexpr double kInvSqrt2 = 0.70710678118654752440;   // 1/sqrt(2)
inline constexpr double kLogSqrt2Pi = 0.91893853320467274178;  // log(2*pi)/2

inline double negative_infinity() { return -std::numeric_limits<double>::infinity(); }
inline double positive_infinity() { return std::numeric_limits<double>::infinity(); }

/// A probability carried in both linear and log scale. The log channel stays
/// informative long after the linear value underflows to zero.
struct TailProbability {
    double value = 0.0;      // in [0, 1]
    double log_value = 0.0;  // natural log of value; -inf when value == 0

    static TailProbability from_log(double lv) { return {std::exp(lv), lv}; }
    static TailProbability from_linear(double v) { return {v, std::log(v)}; }
};

namespace detail {

/// log(exp(la) + exp(lb)) without overflow.
inline double log_sum_exp(double la, double lb) {
    if (la < lb) std::swap(la, lb);
    if (std::isinf(la) && la < 0) return la;  // both -inf
    return la + std::log1p(std::exp(lb - la));
}

/// log(exp(la) - exp(lb)) for la >= lb. Noise that pushes lb above la is
/// clamped to an empty difference instead of producing NaN.
inline double log_diff_exp(double la, double lb) {
    if (lb >= la) return negative_infinity();
    if (std::isinf(lb) && lb < 0) return la;
    const double d = lb - la;  // < 0
    // log(1 - e^d): use expm1 when e^d is close to 1, log1p otherwise.
    const double log1m = d > -0.6931471805599453 ? std::log(-std::expm1(d)) : std::log1p(-std::exp(d));
    return la + log1m;
}

/// Bisect a monotone nondecreasing f to f(z) = target on a valid bracket.
template <typename F>
inline double bisect_increasing(F&& f, double target, double lo, double hi) {
    for (int i = 0; i < 200; ++i) {
        if (hi - lo <= 1e-15 * std::max({1.0, std::abs(lo), std::abs(hi)})) break;
        const double mid = 0.5 * (lo + hi);
        if (f(mid) < target)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace detail

/// log Phi(x). Direct logarithm in the bulk; in the deep lower tail the
/// Mills-ratio asymptotic series, which reaches machine precision for
/// x <= -14 long before its divergent terms turn around.
inline double std_normal_log_cdf(double x) {
    if (std::isnan(x)) throw ValidationError("normal CDF argument is NaN");
    if (x > 6.0) {
        const double sf = 0.5 * std::erfc(x * kInvSqrt2);
        return std::log1p(-sf);
    }
    if (x > -14.0) return std::log(0.5 * std::erfc(-x * kInvSqrt2));
    const double z = -x;
    const double zsq_inv = 1.0 / (z * z);
    double sum = 1.0, term = 1.0, sign = -1.0, last;
    int i = 0;
    do {
        last = sum;
        ++i;
        term *= (2 * i - 1) * zsq_inv;
        sum += sign * term;
        sign = -sign;
    } while (std::abs(sum - last) > 1e-17 * sum && i < 60);
    return -0.5 * z * z - std::log(z) - kLogSqrt2Pi + std::log(sum);
}

inline TailProbability std_normal_cdf(double x) {
    return TailProbability::from_log(std_normal_log_cdf(x));
}

/// P(Z > x) = Phi(-x).
inline TailProbability std_normal_sf(double x) { return std_normal_cdf(-x); }

inline double std_normal_quantile(double q) {
    if (!(q > 0.0 && q < 1.0)) throw ValidationError("quantile level must lie strictly in (0,1)");
    if (q == 0.5) return 0.0;
    if (q > 0.5) return -std_normal_quantile(1.0 - q);
    const double target = std::log(q);
    return detail::bisect_increasing([](double z) { return std_normal_log_cdf(z); }, target, -40.0,
                                     0.0);
}

/// log P(a <= Z <= b) for standard normal Z, a <= b, endpoints may be
/// infinite. Evaluated tail-inward: when both endpoints sit on one side of
/// zero the matching one-sided channel is used, so the difference of two
/// nearly-equal tail masses never cancels in linear space.
inline double std_normal_interval_log_mass(double a, double b) {
    if (std::isnan(a) || std::isnan(b)) throw ValidationError("interval endpoint is NaN");
    if (!(a <= b)) throw ValidationError("interval endpoints out of order");
    if (a == b) return negative_infinity();
    if (b <= 0.0) return detail::log_diff_exp(std_normal_log_cdf(b), std_normal_log_cdf(a));
    if (a >= 0.0) return detail::log_diff_exp(std_normal_log_cdf(-a), std_normal_log_cdf(-b));
    // Straddles zero: the two erf magnitudes add, no cancellation.
    const double mass = 0.5 * (std::erf(b * kInvSqrt2) - std::erf(a * kInvSqrt2));
    if (mass > 0.0) return std::log(mass);
    return std::log(b - a) - kLogSqrt2Pi;  // sliver at the mode
}

namespace detail {

struct GammaTails {
    TailProbability lower;  // regularized P(a, x)
    TailProbability upper;  // regularized Q(a, x)
};

/// Regularized incomplete gamma pair. Power series below the crossover
/// x = a+1, modified-Lentz continued fraction above; the complementary side
/// follows through expm1 so both channels stay accurate.
inline GammaTails gamma_tails(double a, double x) {
    if (!(a > 0.0)) throw ValidationError("incomplete gamma needs a positive shape");
    if (std::isnan(x) || x < 0.0) throw ValidationError("incomplete gamma needs x >= 0");
    if (x == 0.0) return {{0.0, negative_infinity()}, {1.0, 0.0}};
    if (std::isinf(x)) return {{1.0, 0.0}, {0.0, negative_infinity()}};
    const double log_prefactor = a * std::log(x) - x - std::lgamma(a);
    if (x < a + 1.0) {
        double ap = a, del = 1.0 / a, sum = del;
        for (int i = 0; i < 10000; ++i) {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if (std::abs(del) < std::abs(sum) * 1e-17) break;
        }
        const double lp = log_prefactor + std::log(sum);
        const double p = std::exp(lp);
        const double q = -std::expm1(lp);
        return {{p, lp}, {q, std::log(q)}};
    }
    const double fpmin = 1e-300;
    double b = x + 1.0 - a, c = 1.0 / fpmin, d = 1.0 / b, h = d;
    for (int i = 1; i <= 10000; ++i) {
        const double an = -static_cast<double>(i) * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < fpmin) d = fpmin;
        c = b + an / c;
        if (std::abs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < 1e-16) break;
    }
    const double lq = log_prefactor + std::log(h);
    const double q = std::exp(lq);
    const double p = -std::expm1(lq);
    return {{p, std::log(p)}, {q, lq}};
}

}  // namespace detail

/// CDF of the chi distribution (the square root of a chi-square variate).
inline TailProbability chi_cdf(double x, double df) {
    if (!(df > 0.0)) throw ValidationError("chi distribution needs positive degrees of freedom");
    if (std::isnan(x) || x < 0.0) throw ValidationError("chi CDF argument must be >= 0");
    return detail::gamma_tails(0.5 * df, 0.5 * x * x).lower;
}

inline TailProbability chi_sf(double x, double df) {
    if (!(df > 0.0)) throw ValidationError("chi distribution needs positive degrees of freedom");
    if (std::isnan(x) || x < 0.0) throw ValidationError("chi SF argument must be >= 0");
    return detail::gamma_tails(0.5 * df, 0.5 * x * x).upper;
}

inline TailProbability chi_square_cdf(double x, double df) {
    if (!(df > 0.0)) throw ValidationError("chi-square needs positive degrees of freedom");
    if (std::isnan(x) || x < 0.0) throw ValidationError("chi-square CDF argument must be >= 0");
    return detail::gamma_tails(0.5 * df, 0.5 * x).lower;
}

/// log P(a <= X <= b) for X chi-distributed with the given df; the interval
/// is intersected with the support first. Same tail-inward channel policy as
/// the normal version.
inline double chi_interval_log_mass(double a, double b, double df) {
    a = std::max(a, 0.0);
    if (std::isnan(a) || std::isnan(b)) throw ValidationError("interval endpoint is NaN");
    if (!(a <= b)) return negative_infinity();
    if (a == b) return negative_infinity();
    const TailProbability cdf_b = chi_cdf(std::isinf(b) ? positive_infinity() : b, df);
    const TailProbability cdf_a = chi_cdf(a, df);
    if (cdf_b.value <= 0.5)
        return detail::log_diff_exp(cdf_b.log_value, cdf_a.log_value);
    const TailProbability sf_a = chi_sf(a, df);
    if (sf_a.value <= 0.5) {
        const TailProbability sf_b = std::isinf(b) ? TailProbability{0.0, negative_infinity()}
                                                   : chi_sf(b, df);
        return detail::log_diff_exp(sf_a.log_value, sf_b.log_value);
    }
    // Straddles the bulk; the linear difference is well scaled here.
    const double mass = cdf_b.value - cdf_a.value;
    return mass > 0.0 ? std::log(mass) : negative_infinity();
}

inline double chi_square_quantile(double q, int df) {
    if (!(q > 0.0 && q < 1.0)) throw ValidationError("quantile level must lie strictly in (0,1)");
    if (df < 1) throw ValidationError("chi-square quantile needs df >= 1");
    double hi = std::max(4.0, 2.0 * df);
    for (int i = 0; i < 1100 && chi_square_cdf(hi, df).value < q; ++i) {
        hi *= 2.0;
        if (!std::isfinite(hi)) throw BracketError("chi-square quantile bracket overflow");
    }
    const double target = std::log(q);
    return detail::bisect_increasing(
        [df](double x) { return chi_square_cdf(x, df).log_value; }, target, 0.0, hi);
}

namespace detail {

/// Continued fraction for the regularized incomplete beta (modified Lentz).
inline double beta_cf(double a, double b, double x) {
    const double fpmin = 1e-300;
    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < fpmin) d = fpmin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 10000; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::abs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::abs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < 1e-16) break;
    }
    return h;
}

/// Regularized incomplete beta I_x(a, b), linear scale.
inline double reg_incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0 && b > 0.0)) throw ValidationError("incomplete beta needs positive shapes");
    if (std::isnan(x) || x < 0.0 || x > 1.0)
        throw ValidationError("incomplete beta argument must lie in [0,1]");
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;
    const double log_bt = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                          a * std::log(x) + b * std::log1p(-x);
    const double bt = std::exp(log_bt);
    if (x < (a + 1.0) / (a + b + 2.0)) return bt * beta_cf(a, b, x) / a;
    return 1.0 - bt * beta_cf(b, a, 1.0 - x) / b;
}

}  // namespace detail

inline double student_t_cdf(double t, int df) {
    if (df < 1) throw ValidationError("t distribution needs df >= 1");
    if (std::isnan(t)) throw ValidationError("t CDF argument is NaN");
    if (std::isinf(t)) return t > 0 ? 1.0 : 0.0;
    const double ib = detail::reg_incomplete_beta(0.5 * df, 0.5, df / (df + t * t));
    return t >= 0.0 ? 1.0 - 0.5 * ib : 0.5 * ib;
}

inline double student_t_quantile(double q, int df) {
    if (!(q > 0.0 && q < 1.0)) throw ValidationError("quantile level must lie strictly in (0,1)");
    if (df < 1) throw ValidationError("t distribution needs df >= 1");
    if (q == 0.5) return 0.0;
    if (q > 0.5) return -student_t_quantile(1.0 - q, df);
    double lo = -2.0;
    for (int i = 0; i < 1100 && student_t_cdf(lo, df) > q; ++i) {
        lo *= 2.0;
        if (!std::isfinite(lo)) throw BracketError("t quantile bracket overflow");
    }
    return detail::bisect_increasing([df](double t) { return student_t_cdf(t, df); }, q, lo, 0.0);
}

inline double f_cdf(double x, int df1, int df2) {
    if (df1 < 1 || df2 < 1) throw ValidationError("F distribution needs df >= 1");
    if (std::isnan(x)) throw ValidationError("F CDF argument is NaN");
    if (x <= 0.0) return 0.0;
    if (std::isinf(x)) return 1.0;
    return detail::reg_incomplete_beta(0.5 * df1, 0.5 * df2, df1 * x / (df1 * x + df2));
}

inline double f_quantile(double q, int df1, int df2) {
    if (!(q > 0.0 && q < 1.0)) throw ValidationError("quantile level must lie strictly in (0,1)");
    if (df1 < 1 || df2 < 1) throw ValidationError("F distribution needs df >= 1");
    double hi = 4.0;
    for (int i = 0; i < 1100 && f_cdf(hi, df1, df2) < q; ++i) {
        hi *= 2.0;
        if (!std::isfinite(hi)) throw BracketError("F quantile bracket overflow");
    }
    return detail::bisect_increasing([df1, df2](double x) { return f_cdf(x, df1, df2); }, q, 0.0,
                                     hi);
}

}  // namespace selinf
