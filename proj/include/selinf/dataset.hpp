#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "selinf/errors.hpp"

namespace selinf {

/// Immutable response vector plus fixed design matrix with unique column
/// labels. All analyses, selection procedures and simulations work on a
/// Dataset; nothing ever mutates one after construction.
class Dataset {
public:
    Dataset(Eigen::VectorXd y, Eigen::MatrixXd x, std::vector<std::string> names)
        : y_(std::move(y)), x_(std::move(x)), names_(std::move(names)) {
        if (y_.size() < 2) throw ValidationError("dataset needs at least two observations");
        if (x_.cols() < 1) throw ValidationError("dataset needs at least one column");
        if (x_.rows() != y_.size())
            throw ValidationError("design matrix has " + std::to_string(x_.rows()) +
                                  " rows but response has " + std::to_string(y_.size()));
        if (static_cast<Eigen::Index>(names_.size()) != x_.cols())
            throw ValidationError("expected " + std::to_string(x_.cols()) + " column labels, got " +
                                  std::to_string(names_.size()));
        if (!y_.allFinite() || !x_.allFinite())
            throw ValidationError("dataset contains non-finite entries");
        std::set<std::string> seen;
        for (const auto& name : names_) {
            if (!seen.insert(name).second)
                throw ValidationError("duplicate column label '" + name + "'");
        }
    }

    const Eigen::VectorXd& y() const { return y_; }
    const Eigen::MatrixXd& x() const { return x_; }
    const std::vector<std::string>& names() const { return names_; }

    int n() const { return static_cast<int>(y_.size()); }
    int p() const { return static_cast<int>(x_.cols()); }

    const std::string& name(int col) const { return names_.at(static_cast<std::size_t>(col)); }

    int column_index(const std::string& name) const {
        auto it = std::find(names_.begin(), names_.end(), name);
        if (it == names_.end()) throw ValidationError("no column named '" + name + "'");
        return static_cast<int>(it - names_.begin());
    }

private:
    Eigen::VectorXd y_;
    Eigen::MatrixXd x_;
    std::vector<std::string> names_;
};

/// Strictly increasing list of 0-based column indices selecting a submodel.
class ModelSubset {
public:
    explicit ModelSubset(std::vector<int> indices) : indices_(std::move(indices)) {
        if (indices_.empty()) throw ValidationError("model subset must be non-empty");
        for (std::size_t i = 0; i < indices_.size(); ++i) {
            if (indices_[i] < 0) throw ValidationError("negative column index in model subset");
            if (i > 0 && indices_[i] <= indices_[i - 1])
                throw ValidationError("model subset indices must be strictly increasing");
        }
    }

    ModelSubset(std::initializer_list<int> indices) : ModelSubset(std::vector<int>(indices)) {}

    const std::vector<int>& indices() const { return indices_; }
    int size() const { return static_cast<int>(indices_.size()); }

    bool contains(int col) const {
        return std::binary_search(indices_.begin(), indices_.end(), col);
    }

    /// Subset relation (not necessarily strict).
    bool nested_in(const ModelSubset& other) const {
        return std::includes(other.indices_.begin(), other.indices_.end(), indices_.begin(),
                             indices_.end());
    }

    ModelSubset with(int col) const {
        std::vector<int> ix = indices_;
        ix.insert(std::upper_bound(ix.begin(), ix.end(), col), col);
        return ModelSubset(std::move(ix));
    }

    ModelSubset without(int col) const {
        std::vector<int> ix;
        ix.reserve(indices_.size());
        for (int c : indices_)
            if (c != col) ix.push_back(c);
        return ModelSubset(std::move(ix));
    }

    void check_against(const Dataset& data) const {
        if (indices_.back() >= data.p())
            throw ValidationError("model subset index " + std::to_string(indices_.back()) +
                                  " out of range for " + std::to_string(data.p()) + " columns");
    }

    std::string label(const Dataset& data) const {
        std::ostringstream out;
        out << '{';
        for (std::size_t i = 0; i < indices_.size(); ++i) {
            if (i) out << ',';
            out << data.name(indices_[i]);
        }
        out << '}';
        return out.str();
    }

    bool operator==(const ModelSubset& other) const = default;

private:
    std::vector<int> indices_;
};

/// Least-squares fit of one column subset.
struct FittedModel {
    ModelSubset subset;
    Eigen::VectorXd coefficients;  // one per subset column, subset order
    double rss = 0.0;
    int df_resid = 0;
};

}  // namespace selinf
