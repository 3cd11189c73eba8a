#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <string>
#include <vector>

#include "selinf/dataset.hpp"
#include "selinf/errors.hpp"

namespace selinf {

/// Relative pivot threshold below which a design column counts as linearly
/// dependent on the columns before it.
inline constexpr double kRankTolerance = 1e-10;

namespace detail {

/// Column-pivoted Householder QR of one design submatrix, with an explicit
/// full-rank check. Everything downstream (fits, projectors, test vectors)
/// goes through this decomposition so that rank handling lives in one place.
class DesignQr {
public:
    DesignQr(const Dataset& data, const ModelSubset& subset) {
        subset.check_against(data);
        cols_ = Eigen::MatrixXd(data.n(), subset.size());
        for (int j = 0; j < subset.size(); ++j)
            cols_.col(j) = data.x().col(subset.indices()[static_cast<std::size_t>(j)]);
        qr_.compute(cols_);
        qr_.setThreshold(kRankTolerance);
        if (qr_.rank() < subset.size()) {
            // Pivots beyond the numerical rank name the redundant columns.
            std::vector<std::string> redundant;
            const auto& perm = qr_.colsPermutation().indices();
            for (int j = static_cast<int>(qr_.rank()); j < subset.size(); ++j)
                redundant.push_back(data.name(subset.indices()[static_cast<std::size_t>(perm[j])]));
            throw RankError("design submatrix is rank deficient", std::move(redundant));
        }
    }

    const Eigen::MatrixXd& columns() const { return cols_; }

    Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const { return qr_.solve(rhs); }

    /// Thin Q factor (n x p), an orthonormal basis of the column span.
    Eigen::MatrixXd thin_q() const {
        const int p = static_cast<int>(cols_.cols());
        return qr_.householderQ() * Eigen::MatrixXd::Identity(static_cast<int>(cols_.rows()), p);
    }

    /// Orthogonal projector onto the column span, symmetrized to kill the
    /// last-bit asymmetry of the Q1 Q1' product.
    Eigen::MatrixXd projector() const {
        Eigen::MatrixXd q1 = thin_q();
        Eigen::MatrixXd p = q1 * q1.transpose();
        return 0.5 * (p + p.transpose());
    }

    /// Row j of the pseudo-inverse, i.e. the vector v with v'y = coefficient j
    /// for every response y. Computed as v = Q1 R1^-T P' e_j from X P = Q1 R1.
    Eigen::VectorXd dual_row(int j) const {
        const int p = static_cast<int>(cols_.cols());
        Eigen::VectorXd ej = Eigen::VectorXd::Zero(p);
        ej[j] = 1.0;
        Eigen::VectorXd permuted = qr_.colsPermutation().transpose() * ej;
        Eigen::MatrixXd r1 = qr_.matrixR().topLeftCorner(p, p).template triangularView<Eigen::Upper>();
        Eigen::VectorXd w = r1.transpose().triangularView<Eigen::Lower>().solve(permuted);
        return thin_q() * w;
    }

private:
    Eigen::MatrixXd cols_;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr_;
};

}  // namespace detail

/// Ordinary least squares on a column subset.
inline FittedModel fit_ols(const Dataset& data, const ModelSubset& subset) {
    detail::DesignQr qr(data, subset);
    FittedModel fit{subset, qr.solve(data.y()), 0.0, data.n() - subset.size()};
    fit.rss = (data.y() - qr.columns() * fit.coefficients).squaredNorm();
    return fit;
}

/// Orthogonal projector onto the span of the subset's columns.
inline Eigen::MatrixXd projection_matrix(const Dataset& data, const ModelSubset& subset) {
    return detail::DesignQr(data, subset).projector();
}

/// Direction v such that v'y equals the least-squares coefficient of column
/// `col` within the given subset. `col` is a dataset column index and must be
/// a member of the subset.
inline Eigen::VectorXd test_vector(const Dataset& data, const ModelSubset& subset, int col) {
    const auto& ix = subset.indices();
    auto it = std::find(ix.begin(), ix.end(), col);
    if (it == ix.end())
        throw ValidationError("column " + data.name(col) + " is not part of the model subset");
    detail::DesignQr qr(data, subset);
    return qr.dual_row(static_cast<int>(it - ix.begin()));
}

/// Residual-based variance estimate rss / (n - p) for the given fit.
inline double reml_variance(const FittedModel& fit) {
    if (fit.df_resid <= 0)
        throw ValidationError("variance estimate needs positive residual degrees of freedom");
    return fit.rss / fit.df_resid;
}

/// Orthogonal projector onto the span of the group's columns after
/// residualizing them against the rest of the model. `group` must be a
/// non-empty sub-block of `subset`; the returned projector has rank
/// group.size() whenever the full subset has full column rank.
inline Eigen::MatrixXd group_projection(const Dataset& data, const ModelSubset& subset,
                                        const ModelSubset& group) {
    if (!group.nested_in(subset))
        throw ValidationError("group columns must all belong to the model subset");
    std::vector<int> rest;
    for (int c : subset.indices())
        if (!group.contains(c)) rest.push_back(c);
    if (rest.empty())
        throw ValidationError(
            "group equals the whole model; nothing to residualize against — use the plain "
            "projector of the model columns instead");

    Eigen::MatrixXd g(data.n(), group.size());
    for (int j = 0; j < group.size(); ++j)
        g.col(j) = data.x().col(group.indices()[static_cast<std::size_t>(j)]);
    const double block_scale = g.norm();

    Eigen::MatrixXd p_rest = projection_matrix(data, ModelSubset(rest));
    g -= p_rest * g;

    // Rank of the residualized block, judged against the scale of the
    // original columns: a block that the complement absorbs entirely would
    // otherwise look full-rank relative to its own numerical noise.
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(g);
    int rank = 0;
    const double pivot_floor = kRankTolerance * std::max(block_scale, 1e-300);
    for (int j = 0; j < group.size(); ++j) {
        if (std::abs(qr.matrixR()(j, j)) <= pivot_floor) break;
        ++rank;
    }
    if (rank < group.size()) {
        std::vector<std::string> cols;
        for (int c : group.indices()) cols.push_back(data.name(c));
        throw RankError("residualized group block lost rank", std::move(cols));
    }
    Eigen::MatrixXd q1 =
        qr.householderQ() * Eigen::MatrixXd::Identity(data.n(), group.size());
    Eigen::MatrixXd proj = q1 * q1.transpose();
    return 0.5 * (proj + proj.transpose());
}

}  // namespace selinf
