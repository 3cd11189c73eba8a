#pragma once

#include <Eigen/Dense>

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "selinf/dataset.hpp"
#include "selinf/errors.hpp"

namespace selinf {

/// Shortest decimal string that round-trips the double exactly. Used for
/// every number the tools emit, so reruns are byte-identical.
inline std::string format_double(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

namespace detail {

inline double parse_cell(std::string_view cell, std::size_t line_no, const std::string& column) {
    // Trim spaces and a trailing CR from Windows line endings.
    while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.remove_prefix(1);
    while (!cell.empty() &&
           (cell.back() == ' ' || cell.back() == '\t' || cell.back() == '\r'))
        cell.remove_suffix(1);
    if (cell.empty())
        throw ValidationError("blank cell at line " + std::to_string(line_no) + ", column '" +
                              column + "'");
    double value = 0.0;
    const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), value);
    if (res.ec != std::errc() || res.ptr != cell.data() + cell.size())
        throw ValidationError("non-numeric cell '" + std::string(cell) + "' at line " +
                              std::to_string(line_no) + ", column '" + column + "'");
    return value;
}

inline std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string::size_type start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        if (comma == std::string::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return fields;
}

inline std::string trim_header(std::string field) {
    while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.erase(0, 1);
    while (!field.empty() &&
           (field.back() == ' ' || field.back() == '\t' || field.back() == '\r'))
        field.pop_back();
    return field;
}

}  // namespace detail

/// Load a headered numeric CSV into a Dataset. The named response column
/// becomes y; every other column becomes a design column in file order,
/// optionally behind a prepended all-ones "(Intercept)" column.
inline Dataset load_csv(const std::string& path, const std::string& response_column,
                        bool intercept) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw ValidationError("'" + path + "' is empty");
    std::vector<std::string> header;
    for (std::string& field : detail::split_line(line)) {
        std::string name = detail::trim_header(std::move(field));
        if (name.empty()) throw ValidationError("empty header field in '" + path + "'");
        for (const std::string& seen : header)
            if (seen == name) throw ValidationError("duplicate header '" + name + "' in '" + path + "'");
        header.push_back(std::move(name));
    }
    int response_ix = -1;
    for (std::size_t k = 0; k < header.size(); ++k)
        if (header[k] == response_column) response_ix = static_cast<int>(k);
    if (response_ix < 0)
        throw ValidationError("response column '" + response_column + "' not found in '" + path +
                              "'");

    std::vector<std::vector<double>> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;  // ignore blank lines
        const std::vector<std::string> fields = detail::split_line(line);
        if (fields.size() != header.size())
            throw ValidationError("line " + std::to_string(line_no) + " has " +
                                  std::to_string(fields.size()) + " fields, expected " +
                                  std::to_string(header.size()));
        std::vector<double> row(fields.size());
        for (std::size_t k = 0; k < fields.size(); ++k)
            row[k] = detail::parse_cell(fields[k], line_no, header[k]);
        rows.push_back(std::move(row));
    }
    if (rows.size() < 2) throw ValidationError("'" + path + "' needs at least two data rows");

    const int n = static_cast<int>(rows.size());
    const int p_file = static_cast<int>(header.size()) - 1;
    if (p_file < 1) throw ValidationError("'" + path + "' has no covariate columns");
    const int offset = intercept ? 1 : 0;
    Eigen::VectorXd y(n);
    Eigen::MatrixXd x(n, p_file + offset);
    std::vector<std::string> names;
    if (intercept) {
        x.col(0).setOnes();
        names.push_back("(Intercept)");
    }
    for (std::size_t k = 0, out = 0; k < header.size(); ++k) {
        if (static_cast<int>(k) == response_ix) continue;
        for (int i = 0; i < n; ++i) x(i, static_cast<int>(out) + offset) = rows[i][k];
        names.push_back(header[k]);
        ++out;
    }
    for (int i = 0; i < n; ++i) y[i] = rows[i][response_ix];
    return Dataset(std::move(y), std::move(x), std::move(names));
}

/// Write a Dataset as CSV with the response first; loading the file back
/// with intercept = false reproduces the dataset exactly.
inline void save_csv(const Dataset& data, const std::string& response_name,
                     const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write '" + path + "'");
    out << response_name;
    for (const std::string& name : data.names()) out << ',' << name;
    out << '\n';
    for (int i = 0; i < data.n(); ++i) {
        out << format_double(data.y()[i]);
        for (int j = 0; j < data.p(); ++j) out << ',' << format_double(data.x()(i, j));
        out << '\n';
    }
    if (!out) throw ValidationError("write to '" + path + "' failed");
}

}  // namespace selinf
