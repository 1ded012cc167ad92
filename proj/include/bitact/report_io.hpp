#pragma once

#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "bitact/hexfloat.hpp"
#include "bitact/verify.hpp"

namespace bitact {

// Reports travel as JSON lines, one record per check.

inline nlohmann::json report_to_json(const VerificationReport& r) {
    nlohmann::json j;
    j["check"] = r.check;
    j["instance"] = r.instance;
    j["seed"] = r.seed;
    j["deviation"] = to_hexfloat(r.deviation);
    j["tolerance"] = to_hexfloat(r.tolerance);
    j["passed"] = r.passed;
    j["runtime_seconds"] = r.runtime_seconds;
    return j;
}

inline VerificationReport report_from_json(const nlohmann::json& j) {
    VerificationReport r;
    r.check = j.at("check").get<std::string>();
    r.instance = j.at("instance").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.deviation = from_hexfloat(j.at("deviation").get<std::string>());
    r.tolerance = from_hexfloat(j.at("tolerance").get<std::string>());
    r.passed = j.at("passed").get<bool>();
    r.runtime_seconds = j.at("runtime_seconds").get<double>();
    if (r.passed != (r.deviation <= r.tolerance))
        throw IngestionError("report pass flag contradicts its deviation");
    return r;
}

inline void write_reports(std::ostream& out, const std::vector<VerificationReport>& reports) {
    for (const auto& r : reports) out << report_to_json(r).dump() << '\n';
}

inline std::vector<VerificationReport> read_reports(std::istream& in) {
    std::vector<VerificationReport> reports;
    std::string line;
    int line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (line.empty()) continue;
        try {
            reports.push_back(report_from_json(nlohmann::json::parse(line)));
        } catch (const nlohmann::json::exception& e) {
            throw IngestionError(std::string("malformed report line: ") + e.what(),
                                 line_number, 1);
        }
    }
    return reports;
}

}  // namespace bitact
