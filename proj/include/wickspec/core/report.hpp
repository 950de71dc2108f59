#pragma once

#include <cmath>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace wickspec {

enum class Status { pass, fail, undetermined };

inline const char* to_string(Status s) {
    switch (s) {
        case Status::pass: return "pass";
        case Status::fail: return "fail";
        default: return "undetermined";
    }
}

/// Norm used for |p| in every geometric quantity of the library.
inline constexpr const char* kNormConvention = "euclidean";

/// Outcome of a bound verification.
///
/// Invariant: a failed report carries a witness, a passed report carries
/// its constants and budgets. `finalize()` enforces both.
struct BoundReport {
    std::string check;
    Status status = Status::undetermined;
    std::map<std::string, double> constants;
    std::map<std::string, double> witness;
    std::map<std::string, double> budgets;
    std::vector<std::string> warnings;
    std::vector<std::string> notes;
    nlohmann::json details = nlohmann::json::object();

    bool passed() const { return status == Status::pass; }
    bool failed() const { return status == Status::fail; }

    BoundReport& set_constant(const std::string& k, double v) {
        constants[k] = v;
        return *this;
    }
    BoundReport& set_witness(const std::string& k, double v) {
        witness[k] = v;
        return *this;
    }
    BoundReport& set_budget(const std::string& k, double v) {
        budgets[k] = v;
        return *this;
    }
    BoundReport& warn(std::string w) {
        warnings.push_back(std::move(w));
        return *this;
    }
    BoundReport& note(std::string n) {
        notes.push_back(std::move(n));
        return *this;
    }

    BoundReport& finalize() {
        if (status == Status::fail && witness.empty()) witness["unspecified"] = 0.0;
        if (status == Status::pass && budgets.empty()) budgets["samples"] = 0.0;
        return *this;
    }
};

/// JSON number, with infinities encoded as the strings "+inf"/"-inf".
inline nlohmann::json json_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "+inf" : "-inf";
    return v;
}

inline nlohmann::json json_map(const std::map<std::string, double>& m) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [k, v] : m) j[k] = json_number(v);
    return j;
}

inline nlohmann::json to_json(const BoundReport& r) {
    nlohmann::json j;
    j["check"] = r.check;
    j["status"] = to_string(r.status);
    j["constants"] = json_map(r.constants);
    j["witness"] = json_map(r.witness);
    j["budgets"] = json_map(r.budgets);
    j["warnings"] = r.warnings;
    j["notes"] = r.notes;
    j["norm"] = kNormConvention;
    if (!r.details.empty()) j["details"] = r.details;
    return j;
}

}  // namespace wickspec
