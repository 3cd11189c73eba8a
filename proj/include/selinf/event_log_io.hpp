#pragma once

#include <Eigen/Dense>

#include <bit>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "selinf/dataset.hpp"
#include "selinf/errors.hpp"
#include "selinf/events.hpp"

// Persistence of event logs. The file carries a content hash of the dataset
// it was computed from, so inference on a mismatched dataset is refused
// instead of silently producing nonsense.

namespace selinf {

namespace detail {

inline std::uint64_t fnv1a_bytes(const void* data, std::size_t len, std::uint64_t h) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
    }
    return h;
}

inline std::uint64_t fnv1a_double(double v, std::uint64_t h) {
    const std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
    return fnv1a_bytes(&bits, sizeof(bits), h);
}

}  // namespace detail

/// FNV-1a hash over the dataset's dimensions, exact double bit patterns and
/// column labels, rendered as 16 hex digits.
inline std::string dataset_hash(const Dataset& data) {
    std::uint64_t h = 1469598103934665603ull;
    const std::uint64_t dims[2] = {static_cast<std::uint64_t>(data.n()),
                                   static_cast<std::uint64_t>(data.p())};
    h = detail::fnv1a_bytes(dims, sizeof(dims), h);
    for (int i = 0; i < data.n(); ++i) h = detail::fnv1a_double(data.y()[i], h);
    for (int j = 0; j < data.p(); ++j)
        for (int i = 0; i < data.n(); ++i) h = detail::fnv1a_double(data.x()(i, j), h);
    for (const std::string& name : data.names()) {
        h = detail::fnv1a_bytes(name.data(), name.size(), h);
        h = detail::fnv1a_bytes("\0", 1, h);
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

inline nlohmann::ordered_json event_log_to_json(const EventLog& log, const Dataset& data) {
    nlohmann::ordered_json root;
    root["dataset_hash"] = dataset_hash(data);
    root["selected"] = log.selected.indices();
    std::vector<std::string> names;
    for (int col : log.selected.indices()) names.push_back(data.name(col));
    root["selected_names"] = names;
    root["trace"] = log.trace;
    nlohmann::ordered_json events = nlohmann::ordered_json::array();
    for (const QuadraticEvent& event : log.events) {
        nlohmann::ordered_json e;
        e["label"] = event.label;
        e["n"] = static_cast<int>(event.a.rows());
        e["c"] = event.c;
        std::vector<double> lower;
        lower.reserve(static_cast<std::size_t>(event.a.rows()) * (event.a.rows() + 1) / 2);
        for (Eigen::Index i = 0; i < event.a.rows(); ++i)
            for (Eigen::Index j = 0; j <= i; ++j) lower.push_back(event.a(i, j));
        e["a_lower"] = lower;
        events.push_back(std::move(e));
    }
    root["events"] = std::move(events);
    return root;
}

inline void save_event_log(const EventLog& log, const Dataset& data, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write '" + path + "'");
    out << event_log_to_json(log, data).dump(2) << '\n';
    if (!out) throw ValidationError("write to '" + path + "' failed");
}

/// Load an event log and verify it belongs to this dataset.
inline EventLog load_event_log(const std::string& path, const Dataset& data) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open '" + path + "'");
    nlohmann::json root;
    try {
        in >> root;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("cannot parse event log '" + path + "': " + e.what());
    }
    try {
        const std::string hash = root.at("dataset_hash").get<std::string>();
        if (hash != dataset_hash(data))
            throw ValidationError("event log '" + path +
                                  "' was computed from a different dataset (hash mismatch)");
        EventLog log{{}, ModelSubset(root.at("selected").get<std::vector<int>>()), {}};
        log.selected.check_against(data);
        if (root.contains("trace")) log.trace = root.at("trace").get<std::vector<std::string>>();
        for (const auto& e : root.at("events")) {
            QuadraticEvent event;
            event.label = e.at("label").get<std::string>();
            event.c = e.at("c").get<double>();
            const int n = e.at("n").get<int>();
            if (n != data.n())
                throw ValidationError("event dimension " + std::to_string(n) +
                                      " does not match dataset rows");
            const auto lower = e.at("a_lower").get<std::vector<double>>();
            if (lower.size() != static_cast<std::size_t>(n) * (n + 1) / 2)
                throw ValidationError("event matrix in '" + path + "' has wrong length");
            event.a.resize(n, n);
            std::size_t k = 0;
            for (int i = 0; i < n; ++i)
                for (int j = 0; j <= i; ++j) {
                    event.a(i, j) = lower[k];
                    event.a(j, i) = lower[k];
                    ++k;
                }
            log.events.push_back(std::move(event));
        }
        return log;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("malformed event log '" + path + "': " + e.what());
    }
}

}  // namespace selinf
