#pragma once

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "igame/io/config.hpp"
#include "igame/problem_model.hpp"

namespace igame::io {

/// JSON has no inf/nan; they are stored as the strings "inf", "-inf", "nan".
inline json number_to_json(double v) {
    if (std::isfinite(v)) return v;
    if (std::isnan(v)) return "nan";
    return v > 0 ? "inf" : "-inf";
}

inline double number_from_json(const json& j) {
    if (j.is_number()) return j.get<double>();
    const auto s = j.get<std::string>();
    if (s == "inf") return INFINITY;
    if (s == "-inf") return -INFINITY;
    if (s == "nan") return std::nan("");
    throw ValidationError("not a number: " + s);
}

inline json assumptions_to_json(const AssumptionReport& r) {
    json j;
    j["passed"] = r.passed();
    j["a1"] = r.a1_pass;
    j["a2"] = r.a2_pass;
    j["a3"] = r.a3_pass;
    j["a4"] = r.a4_pass;
    j["A4_increasing"] = r.A4_monotone_pass;
    j["A4_decreasing"] = r.A4_reverse_monotone_pass;
    j["domain"] = r.domain_pass;
    j["lipschitz_b"] = number_to_json(r.lipschitz_b);
    j["lipschitz_sigma"] = number_to_json(r.lipschitz_sigma);
    j["lipschitz_f"] = number_to_json(r.lipschitz_f);
    j["violations"] = json::array();
    for (const auto& v : r.violations) {
        json w = json::array();
        for (double x : v.witness) w.push_back(number_to_json(x));
        j["violations"].push_back({{"id", v.id}, {"witness", w}, {"lhs", number_to_json(v.lhs)}, {"rhs", number_to_json(v.rhs)}});
    }
    j["warnings"] = r.warnings;
    return j;
}

struct RunReport {
    std::string command;
    json config;                          ///< fully-resolved configuration
    std::map<std::string, double> metrics;
    std::map<std::string, bool> checks;   ///< suite name -> pass
    json assumptions;                     ///< null unless the check command ran
    std::vector<std::string> artifacts;
    double wall_time_s = 0.0;

    bool checks_passed() const {
        for (const auto& [k, v] : checks)
            if (!v) return false;
        return true;
    }
    bool operator==(const RunReport&) const = default;
};

inline json report_to_json(const RunReport& r) {
    json j;
    j["command"] = r.command;
    j["config"] = r.config;
    json m = json::object();
    for (const auto& [k, v] : r.metrics) m[k] = number_to_json(v);
    j["metrics"] = m;
    json c = json::object();
    for (const auto& [k, v] : r.checks) c[k] = v;
    j["checks"] = c;
    j["assumptions"] = r.assumptions;
    j["artifacts"] = r.artifacts;
    j["wall_time_s"] = r.wall_time_s;
    return j;
}

inline RunReport report_from_json(const json& j) {
    RunReport r;
    r.command = j.at("command").get<std::string>();
    r.config = j.at("config");
    for (const auto& [k, v] : j.at("metrics").items()) r.metrics[k] = number_from_json(v);
    for (const auto& [k, v] : j.at("checks").items()) r.checks[k] = v.get<bool>();
    r.assumptions = j.at("assumptions");
    r.artifacts = j.at("artifacts").get<std::vector<std::string>>();
    r.wall_time_s = j.at("wall_time_s").get<double>();
    return r;
}

inline std::string report_text(const RunReport& r) { return report_to_json(r).dump(2) + "\n"; }

inline void write_report(const RunReport& r, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path);
    out << report_text(r);
    if (!out) throw Error("write failed: " + path);
}

inline RunReport read_report(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return report_from_json(json::parse(ss.str()));
}

}  // namespace igame::io
