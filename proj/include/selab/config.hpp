#pragma once

#include <map>
#include <optional>
#include <string>

#include <json.hpp>

#include "selab/experiments.hpp"
#include "selab/generator.hpp"
#include "selab/sqf.hpp"

namespace selab {

// Decision-rule block: {"c":0.45,"tau":0.3,"variant":"baseline",
// "noise":{"family":"logistic","scale":1.0}}
DecisionRule rule_from_json(const nlohmann::json& j);
nlohmann::json rule_to_json(const DecisionRule& rule);

SweepConfig sweep_config_from_json(const nlohmann::json& j);
nlohmann::json sweep_config_to_json(const SweepConfig& cfg);

SchemaConfig schema_config_from_json(const nlohmann::json& j);
nlohmann::json schema_config_to_json(const SchemaConfig& schema);

PipelineConfig pipeline_config_from_json(const nlohmann::json& j);
nlohmann::json pipeline_config_to_json(const PipelineConfig& cfg);

// Population block: inline {"cells":[...]} or {"path":"pop.json"}.
Population population_from_config(const nlohmann::json& j, const std::string& config_dir);

nlohmann::json load_json_file(const std::string& path);

// Every run writes a manifest alongside its outputs: the fully resolved
// config, the effective seed, and an fnv1a-64 digest per artifact.
// Re-running with the manifest as --config reproduces the run.
struct Manifest {
  std::string command;
  nlohmann::json config;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> output_hashes;

  nlohmann::json to_json() const;
};

bool looks_like_manifest(const nlohmann::json& j);

}  // namespace selab
