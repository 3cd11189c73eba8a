#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace selinf {

// Input and precondition violations. The CLI maps these to exit code 2.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Numerical failures and internal inconsistencies. CLI exit code 3.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Design submatrix is not of full column rank.
class RankError : public ValidationError {
public:
    RankError(const std::string& message, std::vector<std::string> columns)
        : ValidationError(message), columns_(std::move(columns)) {}

    // Labels of the columns the decomposition flagged as redundant.
    const std::vector<std::string>& columns() const { return columns_; }

private:
    std::vector<std::string> columns_;
};

// Test direction has (numerically) zero inner product with the response.
class DegenerateDirectionError : public NumericError {
public:
    using NumericError::NumericError;
};

// A truncation set came out empty or does not contain its observed statistic.
class InconsistencyError : public NumericError {
public:
    using NumericError::NumericError;
};

// Probability mass lost to underflow even in the log channel.
class PrecisionError : public NumericError {
public:
    using NumericError::NumericError;
};

// Monotone search bracket could not be expanded far enough.
class BracketError : public NumericError {
public:
    using NumericError::NumericError;
};

}  // namespace selinf
