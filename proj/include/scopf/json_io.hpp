#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "scopf/drivers.hpp"
#include "scopf/stresstest.hpp"

namespace scopf::io {

inline constexpr int schema_version = 1;

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path);             // throws IoError
void write_file(const std::string& path, const std::string& content);
void ensure_dir(const std::string& path);

// FNV-1a 64-bit content hash, reported as 16 hex digits.
std::string fnv1a64_hex(const std::string& content);

nlohmann::json severity_to_json(const SeverityReport& rep);
SeverityReport severity_from_json(const nlohmann::json& j);

nlohmann::json dispatch_to_json(const Dispatch& d);
Dispatch dispatch_from_json(const nlohmann::json& j, const Network& net);

nlohmann::json scopf_result_to_json(const ScopfResult& r);
nlohmann::json predict_result_to_json(const PredictResult& r);

nlohmann::json stress_report_to_json(const StressReport& r);
StressReport stress_report_from_json(const nlohmann::json& j);

// Load pieces of previously written result files.
Dispatch load_dispatch(const std::string& path, const Network& net);
std::vector<Contingency> load_contingencies(const std::string& path,
                                            const Network& net);
StressReport load_stress_report(const std::string& path);

}  // namespace scopf::io
