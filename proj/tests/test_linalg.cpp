#include <catch2/catch_amalgamated.hpp>

#include <selinf/dataset.hpp>
#include <selinf/errors.hpp>
#include <selinf/linalg.hpp>
#include <selinf/rng.hpp>

#include "oracles.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <string>
#include <vector>

using Catch::Matchers::WithinAbs;
using selinf::Dataset;
using selinf::ModelSubset;

namespace {

std::vector<std::string> auto_names(int p) {
    std::vector<std::string> names;
    for (int j = 0; j < p; ++j) names.push_back("c" + std::to_string(j));
    return names;
}

Dataset random_dataset(int n, int p, std::uint64_t seed, bool ones_column = false) {
    selinf::SplitMix64 rng(seed);
    Eigen::MatrixXd x(n, p);
    for (int j = 0; j < p; ++j)
        for (int i = 0; i < n; ++i) x(i, j) = rng.normal();
    if (ones_column) x.col(0).setOnes();
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) y[i] = rng.normal();
    return Dataset(y, x, auto_names(p));
}

std::vector<int> all_columns(int p) {
    std::vector<int> cols;
    for (int j = 0; j < p; ++j) cols.push_back(j);
    return cols;
}

}  // namespace

TEST_CASE("ols on an exact linear response", "[linalg]") {
    Eigen::MatrixXd x(5, 2);
    x << 1, 1, 1, 2, 1, 3, 1, 4, 1, 5;
    Eigen::VectorXd beta(2);
    beta << 1.0, 2.0;
    const Eigen::VectorXd y = x * beta;
    const Dataset data(y, x, auto_names(2));
    const selinf::FittedModel fit = selinf::fit_ols(data, ModelSubset({0, 1}));
    REQUIRE_THAT(fit.coefficients[0], WithinAbs(1.0, 1e-10));
    REQUIRE_THAT(fit.coefficients[1], WithinAbs(2.0, 1e-10));
    REQUIRE_THAT(fit.rss, WithinAbs(0.0, 1e-10));
    REQUIRE(fit.df_resid == 3);
}

TEST_CASE("ols mean model", "[linalg]") {
    Eigen::VectorXd y(5);
    y << 1, 2, 3, 4, 5;
    const Dataset data(y, Eigen::MatrixXd::Ones(5, 1), {"ones"});
    const selinf::FittedModel fit = selinf::fit_ols(data, ModelSubset({0}));
    REQUIRE_THAT(fit.coefficients[0], WithinAbs(3.0, 1e-12));
    REQUIRE_THAT(fit.rss, WithinAbs(10.0, 1e-12));
}

TEST_CASE("ols matches the normal-equations oracle", "[linalg]") {
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        const int n = 10 + static_cast<int>(seed % 7);
        const Dataset data = random_dataset(n, 3, 900 + seed);
        const selinf::FittedModel fit = selinf::fit_ols(data, ModelSubset({0, 1, 2}));
        const oracles::OlsFit ref = oracles::normal_equations(data.x(), data.y());
        for (int j = 0; j < 3; ++j)
            REQUIRE_THAT(fit.coefficients[j], WithinAbs(ref.coefficients[j], 1e-10));
        REQUIRE_THAT(fit.rss, WithinAbs(ref.rss, 1e-10));
    }
}

TEST_CASE("projector of a square full-rank design is the identity", "[linalg]") {
    const Dataset data = random_dataset(3, 3, 17);
    const Eigen::MatrixXd p = selinf::projection_matrix(data, ModelSubset({0, 1, 2}));
    REQUIRE((p - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("projector of the ones column averages", "[linalg]") {
    Eigen::VectorXd y(4);
    y << 1, 2, 3, 4;
    const Dataset data(y, Eigen::MatrixXd::Ones(4, 1), {"ones"});
    const Eigen::MatrixXd p = selinf::projection_matrix(data, ModelSubset({0}));
    REQUIRE((p.array() - 0.25).abs().maxCoeff() < 1e-12);
}

TEST_CASE("projector is symmetric idempotent with trace = rank", "[linalg]") {
    const Dataset data = random_dataset(8, 2, 23);
    const Eigen::MatrixXd p = selinf::projection_matrix(data, ModelSubset({0, 1}));
    REQUIRE((p * p - p).cwiseAbs().maxCoeff() < 1e-10);
    REQUIRE((p - p.transpose()).cwiseAbs().maxCoeff() < 1e-10);
    REQUIRE_THAT(p.trace(), WithinAbs(2.0, 1e-10));
    // matches the oracle hat matrix
    const Eigen::MatrixXd ref = oracles::hat_matrix(data.x());
    REQUIRE((p - ref).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("test vector of an orthonormal design is the column itself", "[linalg]") {
    Eigen::MatrixXd x(4, 2);
    x.setZero();
    x(0, 0) = 1.0;
    x(1, 1) = 1.0;
    Eigen::VectorXd y(4);
    y << 1, 2, 3, 4;
    const Dataset data(y, x, auto_names(2));
    const Eigen::VectorXd v = selinf::test_vector(data, ModelSubset({0, 1}), 1);
    REQUIRE((v - x.col(1)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("test vector reproduces unit coefficients", "[linalg]") {
    // v' X_subset = e_j': applying v to each design column picks out column j.
    const Dataset data = random_dataset(9, 3, 31);
    for (int j = 0; j < 3; ++j) {
        const Eigen::VectorXd v = selinf::test_vector(data, ModelSubset({0, 1, 2}), j);
        for (int kcol = 0; kcol < 3; ++kcol)
            REQUIRE_THAT(v.dot(data.x().col(kcol)), WithinAbs(j == kcol ? 1.0 : 0.0, 1e-10));
    }
}

TEST_CASE("test vector against the ols oracle", "[linalg]") {
    const Dataset data = random_dataset(10, 3, 47);
    const oracles::OlsFit ref = oracles::normal_equations(data.x(), data.y());
    for (int j = 0; j < 3; ++j) {
        const Eigen::VectorXd v = selinf::test_vector(data, ModelSubset({0, 1, 2}), j);
        REQUIRE_THAT(v.dot(data.y()), WithinAbs(ref.coefficients[j], 1e-10));
    }
    REQUIRE_THROWS_AS(selinf::test_vector(data, ModelSubset({0, 1}), 2), selinf::ValidationError);
}

TEST_CASE("reml variance", "[linalg]") {
    selinf::FittedModel fit{ModelSubset({0}), Eigen::VectorXd::Zero(1), 10.0, 5};
    REQUIRE_THAT(selinf::reml_variance(fit), WithinAbs(2.0, 1e-15));

    fit.df_resid = 0;
    REQUIRE_THROWS_AS(selinf::reml_variance(fit), selinf::ValidationError);

    // noiseless exact fit -> zero estimate
    Eigen::MatrixXd x(5, 1);
    x << 1, 2, 3, 4, 5;
    const Dataset data(x.col(0), x, {"c0"});
    REQUIRE_THAT(selinf::reml_variance(selinf::fit_ols(data, ModelSubset({0}))),
                 WithinAbs(0.0, 1e-20));

    // seeded instance: rss/(n-p) equals y'(I-P)y/(n-p) via the projector
    const Dataset rnd = random_dataset(12, 3, 59);
    const selinf::FittedModel rfit = selinf::fit_ols(rnd, ModelSubset({0, 1, 2}));
    const Eigen::MatrixXd p = selinf::projection_matrix(rnd, ModelSubset({0, 1, 2}));
    const double direct =
        rnd.y().dot((Eigen::MatrixXd::Identity(12, 12) - p) * rnd.y()) / (12 - 3);
    REQUIRE_THAT(selinf::reml_variance(rfit), WithinAbs(direct, 1e-10));
}

TEST_CASE("rank deficiency names the redundant columns", "[linalg]") {
    Eigen::MatrixXd x(6, 3);
    selinf::SplitMix64 rng(71);
    for (int i = 0; i < 6; ++i) {
        x(i, 0) = 1.0;
        x(i, 1) = rng.normal();
        x(i, 2) = 2.0 * x(i, 1);  // exact duplicate direction
    }
    Eigen::VectorXd y(6);
    for (int i = 0; i < 6; ++i) y[i] = rng.normal();
    const Dataset data(y, x, {"ones", "a", "twice_a"});
    try {
        selinf::fit_ols(data, ModelSubset({0, 1, 2}));
        FAIL("expected a rank error");
    } catch (const selinf::RankError& e) {
        REQUIRE(e.columns().size() == 1);
        const std::string& col = e.columns().front();
        REQUIRE((col == "a" || col == "twice_a"));
    }
}

TEST_CASE("near-collinear columns trip the relative rank threshold", "[linalg]") {
    Eigen::MatrixXd x(6, 2);
    selinf::SplitMix64 rng(73);
    for (int i = 0; i < 6; ++i) {
        x(i, 0) = rng.normal();
        // off-span component ~1e-14 of the column scale, below the 1e-10 threshold
        x(i, 1) = x(i, 0) + 1e-14 * rng.normal();
    }
    Eigen::VectorXd y(6);
    for (int i = 0; i < 6; ++i) y[i] = rng.normal();
    const Dataset data(y, x, {"a", "almost_a"});
    REQUIRE_THROWS_AS(selinf::projection_matrix(data, ModelSubset({0, 1})), selinf::RankError);
}

TEST_CASE("group projection properties", "[linalg]") {
    const int n = 12;
    const Dataset data = random_dataset(n, 4, 83, true);
    const ModelSubset model({0, 1, 2, 3});
    const ModelSubset group({2, 3});
    const Eigen::MatrixXd pg = selinf::group_projection(data, model, group);

    REQUIRE((pg * pg - pg).cwiseAbs().maxCoeff() < 1e-10);
    REQUIRE((pg - pg.transpose()).cwiseAbs().maxCoeff() < 1e-10);
    REQUIRE_THAT(pg.trace(), WithinAbs(2.0, 1e-10));

    // residualization kills the complement block
    const Eigen::MatrixXd p_rest = selinf::projection_matrix(data, ModelSubset({0, 1}));
    REQUIRE((pg * p_rest).cwiseAbs().maxCoeff() < 1e-10);

    // the group and complement projectors tile the full model projector
    const Eigen::MatrixXd p_full = selinf::projection_matrix(data, model);
    REQUIRE((p_rest + pg - p_full).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("group projection with orthogonal blocks reduces to the plain projector", "[linalg]") {
    Eigen::MatrixXd x(8, 3);
    x.setZero();
    // columns 0 and {1,2} live on disjoint coordinates, hence orthogonal
    x(0, 0) = 1.0;
    x(1, 0) = -2.0;
    x(2, 1) = 1.0;
    x(3, 1) = 1.0;
    x(4, 2) = 3.0;
    Eigen::VectorXd y = Eigen::VectorXd::LinSpaced(8, 1.0, 8.0);
    const Dataset data(y, x, auto_names(3));
    const Eigen::MatrixXd pg =
        selinf::group_projection(data, ModelSubset({0, 1, 2}), ModelSubset({1, 2}));
    const Eigen::MatrixXd direct = selinf::projection_matrix(data, ModelSubset({1, 2}));
    REQUIRE((pg - direct).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("group projection guards", "[linalg]") {
    const Dataset data = random_dataset(10, 3, 97);
    const ModelSubset model({0, 1, 2});
    REQUIRE_THROWS_AS(selinf::group_projection(data, model, model), selinf::ValidationError);
    REQUIRE_THROWS_AS(
        selinf::group_projection(data, ModelSubset({0, 1}), ModelSubset({2})),
        selinf::ValidationError);

    // residualized block losing rank: group column equals a non-group column
    Eigen::MatrixXd x(8, 3);
    selinf::SplitMix64 rng(101);
    for (int i = 0; i < 8; ++i) {
        x(i, 0) = rng.normal();
        x(i, 1) = rng.normal();
        x(i, 2) = x(i, 0);  // duplicates the complement column
    }
    Eigen::VectorXd y(8);
    for (int i = 0; i < 8; ++i) y[i] = rng.normal();
    const Dataset dup(y, x, auto_names(3));
    REQUIRE_THROWS_AS(selinf::group_projection(dup, ModelSubset({0, 1, 2}), ModelSubset({2})),
                      selinf::RankError);
}

TEST_CASE("fit_ols on a column subset ignores other columns", "[linalg]") {
    const Dataset data = random_dataset(15, 4, 113);
    const std::vector<int> cols{1, 3};
    const selinf::FittedModel fit = selinf::fit_ols(data, ModelSubset(cols));
    const oracles::OlsFit ref = oracles::normal_equations(
        oracles::take_columns(data.x(), cols), data.y());
    REQUIRE_THAT(fit.coefficients[0], WithinAbs(ref.coefficients[0], 1e-10));
    REQUIRE_THAT(fit.coefficients[1], WithinAbs(ref.coefficients[1], 1e-10));
    REQUIRE_THAT(fit.rss, WithinAbs(ref.rss, 1e-10));
    REQUIRE(fit.df_resid == 13);
}

TEST_CASE("all columns helper sanity", "[linalg]") {
    REQUIRE(all_columns(3) == std::vector<int>{0, 1, 2});
}
