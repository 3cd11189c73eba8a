#include <catch2/catch_amalgamated.hpp>

#include <selinf/dataset.hpp>
#include <selinf/errors.hpp>

#include <Eigen/Dense>

#include <limits>
#include <vector>

using selinf::Dataset;
using selinf::ModelSubset;
using selinf::ValidationError;

namespace {

Dataset tiny() {
    Eigen::VectorXd y(3);
    y << 1.0, 2.0, 3.0;
    Eigen::MatrixXd x(3, 2);
    x << 1.0, 0.5, 1.0, -0.5, 1.0, 2.0;
    return Dataset(y, x, {"(Intercept)", "x1"});
}

}  // namespace

TEST_CASE("dataset construction and accessors", "[dataset]") {
    const Dataset d = tiny();
    REQUIRE(d.n() == 3);
    REQUIRE(d.p() == 2);
    REQUIRE(d.name(1) == "x1");
    REQUIRE(d.column_index("(Intercept)") == 0);
    REQUIRE(d.y()[2] == 3.0);
    REQUIRE(d.x()(2, 1) == 2.0);
    REQUIRE_THROWS_AS(d.column_index("nope"), ValidationError);
}

TEST_CASE("dataset rejects malformed input", "[dataset]") {
    Eigen::VectorXd y1(1);
    y1 << 1.0;
    REQUIRE_THROWS_AS(Dataset(y1, Eigen::MatrixXd::Ones(1, 1), {"a"}), ValidationError);

    Eigen::VectorXd y(3);
    y << 1.0, 2.0, 3.0;
    REQUIRE_THROWS_AS(Dataset(y, Eigen::MatrixXd::Ones(2, 1), {"a"}), ValidationError);
    REQUIRE_THROWS_AS(Dataset(y, Eigen::MatrixXd::Ones(3, 2), {"a"}), ValidationError);
    REQUIRE_THROWS_AS(Dataset(y, Eigen::MatrixXd::Ones(3, 2), {"a", "a"}), ValidationError);

    Eigen::MatrixXd bad = Eigen::MatrixXd::Ones(3, 1);
    bad(1, 0) = std::numeric_limits<double>::quiet_NaN();
    REQUIRE_THROWS_AS(Dataset(y, bad, {"a"}), ValidationError);
    Eigen::VectorXd ybad = y;
    ybad[0] = std::numeric_limits<double>::infinity();
    REQUIRE_THROWS_AS(Dataset(ybad, Eigen::MatrixXd::Ones(3, 1), {"a"}), ValidationError);
}

TEST_CASE("model subset ordering rules", "[dataset]") {
    REQUIRE_NOTHROW(ModelSubset({0, 2, 5}));
    REQUIRE_THROWS_AS(ModelSubset(std::vector<int>{}), ValidationError);
    REQUIRE_THROWS_AS(ModelSubset({2, 1}), ValidationError);
    REQUIRE_THROWS_AS(ModelSubset({1, 1}), ValidationError);
    REQUIRE_THROWS_AS(ModelSubset({-1, 0}), ValidationError);
}

TEST_CASE("model subset set operations", "[dataset]") {
    const ModelSubset m({0, 2, 5});
    REQUIRE(m.size() == 3);
    REQUIRE(m.contains(2));
    REQUIRE_FALSE(m.contains(3));

    REQUIRE(ModelSubset({0, 2}).nested_in(m));
    REQUIRE(m.nested_in(m));  // non-strict
    REQUIRE_FALSE(m.nested_in(ModelSubset({0, 2})));
    REQUIRE_FALSE(ModelSubset({1}).nested_in(m));

    REQUIRE(m.with(3) == ModelSubset({0, 2, 3, 5}));
    REQUIRE(m.without(2) == ModelSubset({0, 5}));
    REQUIRE_THROWS_AS(m.with(2), ValidationError);       // duplicate insert
    REQUIRE_THROWS_AS(m.without(5).without(0).without(2), ValidationError);  // empties out
}

TEST_CASE("model subset against a dataset", "[dataset]") {
    const Dataset d = tiny();
    REQUIRE_NOTHROW(ModelSubset({0, 1}).check_against(d));
    REQUIRE_THROWS_AS(ModelSubset({0, 2}).check_against(d), ValidationError);
    REQUIRE(ModelSubset({0, 1}).label(d) == "{(Intercept),x1}");
    REQUIRE(ModelSubset({1}).label(d) == "{x1}");
}
