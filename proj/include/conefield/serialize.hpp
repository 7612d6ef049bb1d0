#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "conefield/analysis.hpp"
#include "conefield/cone_stats.hpp"
#include "conefield/filtering.hpp"
#include "conefield/prediction.hpp"
#include "conefield/reconstruction.hpp"

namespace conefield {

inline constexpr const char* kToolName = "conefield";
inline constexpr const char* kToolVersion = "0.1.0";

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);
std::string hash_hex(const std::string& content);
std::string hash_hex(std::uint64_t h);

nlohmann::json test_config_to_json(const TestConfig& cfg);
TestConfig test_config_from_json(const nlohmann::json& j);

nlohmann::json cone_params_to_json(const ConeParams& p);
ConeParams cone_params_from_json(const nlohmann::json& j);

nlohmann::json state_set_to_json(const StateSet& s);
StateSet state_set_from_json(const nlohmann::json& j);

nlohmann::json database_to_json(const ConeDatabase& db, const Geometry& geom);

/// Label grid: header `states <max_id+1>`, then one row per time slice with
/// `?` for unknown points. `#` lines are comments.
std::string save_state_field(const StateField& sf);
StateField load_state_field(std::istream& in);

/// Filter estimate grid: per point `k:id1,id2,...` (k = candidate count) or
/// `!` for contradiction.
std::string save_state_estimate(const StateEstimate& est);

nlohmann::json evaluation_to_json(const EvaluationReport& r);
std::string evaluation_tsv(const EvaluationReport& r);

nlohmann::json complexity_to_json(const ComplexityReport& r);
std::string complexity_csv(const ComplexityReport& r);

nlohmann::json markov_to_json(const MarkovReport& r);
nlohmann::json patch_to_json(const PatchReport& r);

nlohmann::json filter_summary_to_json(const FilterResult& r, const Geometry& geom);

}  // namespace conefield
