#include "selab/config.hpp"

#include <fstream>

#include "selab/util.hpp"

namespace selab {

namespace {

template <typename T>
void read_if(const nlohmann::json& j, const char* key, T& slot) {
  if (j.contains(key)) slot = j.at(key).get<T>();
}

[[noreturn]] void bad(const std::string& what, const nlohmann::json::exception& e) {
  throw ValidationError(what + ": " + e.what());
}

}  // namespace

DecisionRule rule_from_json(const nlohmann::json& j) {
  DecisionRule rule;
  try {
    rule.c = j.at("c").get<double>();
    read_if(j, "tau", rule.tau);
    if (j.contains("variant")) rule.variant = variant_from_string(j.at("variant").get<std::string>());
    if (j.contains("noise") && !j.at("noise").is_null()) {
      const auto& nj = j.at("noise");
      NoiseSpec spec;
      spec.family = noise_family_from_string(nj.at("family").get<std::string>());
      read_if(nj, "scale", spec.scale);
      if (nj.contains("scale_group1")) spec.scale_group1 = nj.at("scale_group1").get<double>();
      rule.noise = spec;
    }
  } catch (const nlohmann::json::exception& e) {
    bad("rule config", e);
  }
  rule.validate();
  return rule;
}

nlohmann::json rule_to_json(const DecisionRule& rule) {
  nlohmann::json j{{"c", rule.c}, {"tau", rule.tau}, {"variant", to_string(rule.variant)}};
  if (rule.noise) {
    nlohmann::json nj{{"family", to_string(rule.noise->family)}, {"scale", rule.noise->scale}};
    if (rule.noise->scale_group1) nj["scale_group1"] = *rule.noise->scale_group1;
    j["noise"] = nj;
  }
  return j;
}

SweepConfig sweep_config_from_json(const nlohmann::json& j) {
  SweepConfig cfg;
  try {
    if (j.contains("tau_grid")) {
      const auto& g = j.at("tau_grid");
      if (g.is_array()) {
        cfg.tau_grid = g.get<std::vector<double>>();
      } else {
        const double from = g.at("from").get<double>();
        const double to = g.at("to").get<double>();
        const int count = g.at("count").get<int>();
        if (count < 2 || !(to > from)) {
          throw ValidationError("sweep config: tau_grid range needs count >= 2 and to > from");
        }
        for (int i = 0; i < count; ++i) {
          cfg.tau_grid.push_back(from + (to - from) * i / (count - 1));
        }
      }
    }
    cfg.rule = rule_from_json(j.at("rule"));
    if (j.contains("exercises")) {
      cfg.exercises.clear();
      for (const auto& e : j.at("exercises")) {
        cfg.exercises.push_back(exercise_from_string(e.get<std::string>()));
      }
    }
    if (j.contains("group_blind")) {
      cfg.group_blind.clear();
      for (const auto& b : j.at("group_blind")) cfg.group_blind.push_back(b.get<bool>());
    }
    read_if(j, "c_min", cfg.c_min);
    read_if(j, "top_share_q", cfg.top_share_q);
    if (j.contains("mode")) {
      const auto& m = j.at("mode");
      if (m.is_string()) {
        if (m.get<std::string>() != "exact") {
          throw ValidationError("sweep config: mode string must be \"exact\"");
        }
      } else if (m.contains("monte_carlo")) {
        const auto& mc = m.at("monte_carlo");
        MonteCarloSpec spec;
        spec.n = mc.at("n").get<std::size_t>();
        read_if(mc, "seed", spec.seed);
        if (mc.contains("form")) {
          spec.fit.form = mc.at("form").get<std::string>() == "logistic"
                              ? PredictorForm::logistic
                              : PredictorForm::saturated;
        }
        read_if(mc, "interact_group", spec.fit.interact_group);
        cfg.monte_carlo = spec;
      } else {
        throw ValidationError("sweep config: mode must be \"exact\" or {\"monte_carlo\":{...}}");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    bad("sweep config", e);
  }
  cfg.validate();
  return cfg;
}

nlohmann::json sweep_config_to_json(const SweepConfig& cfg) {
  nlohmann::json j;
  j["tau_grid"] = cfg.tau_grid;
  j["rule"] = rule_to_json(cfg.rule);
  nlohmann::json ex = nlohmann::json::array();
  for (Exercise e : cfg.exercises) ex.push_back(to_string(e));
  j["exercises"] = ex;
  j["group_blind"] = cfg.group_blind;
  j["c_min"] = cfg.c_min;
  j["top_share_q"] = cfg.top_share_q;
  if (cfg.monte_carlo) {
    j["mode"] = {{"monte_carlo",
                  {{"n", cfg.monte_carlo->n},
                   {"seed", cfg.monte_carlo->seed},
                   {"form", cfg.monte_carlo->fit.form == PredictorForm::logistic ? "logistic"
                                                                                  : "saturated"},
                   {"interact_group", cfg.monte_carlo->fit.interact_group}}}};
  } else {
    j["mode"] = "exact";
  }
  return j;
}

SchemaConfig schema_config_from_json(const nlohmann::json& j) {
  SchemaConfig schema = SchemaConfig::defaults();
  try {
    read_if(j, "x_cols", schema.x_cols);
    read_if(j, "u_cols", schema.u_cols);
    read_if(j, "race_col", schema.race_col);
    read_if(j, "searched_col", schema.searched_col);
    read_if(j, "contraband_col", schema.contraband_col);
    read_if(j, "group0_values", schema.group0_values);
    read_if(j, "group1_values", schema.group1_values);
    read_if(j, "true_values", schema.true_values);
    read_if(j, "false_values", schema.false_values);
    if (j.contains("numeric_bins")) {
      schema.numeric_bins.clear();
      for (const auto& [col, cuts] : j.at("numeric_bins").items()) {
        schema.numeric_bins[col] = cuts.get<std::vector<double>>();
      }
    }
  } catch (const nlohmann::json::exception& e) {
    bad("schema config", e);
  }
  return schema;
}

nlohmann::json schema_config_to_json(const SchemaConfig& schema) {
  nlohmann::json bins = nlohmann::json::object();
  for (const auto& [col, cuts] : schema.numeric_bins) bins[col] = cuts;
  return nlohmann::json{{"x_cols", schema.x_cols},
                        {"u_cols", schema.u_cols},
                        {"race_col", schema.race_col},
                        {"searched_col", schema.searched_col},
                        {"contraband_col", schema.contraband_col},
                        {"group0_values", schema.group0_values},
                        {"group1_values", schema.group1_values},
                        {"true_values", schema.true_values},
                        {"false_values", schema.false_values},
                        {"numeric_bins", bins}};
}

PipelineConfig pipeline_config_from_json(const nlohmann::json& j) {
  PipelineConfig cfg;
  try {
    read_if(j, "split_fraction", cfg.split_fraction);
    read_if(j, "search_rate", cfg.search_rate);
    if (j.contains("share_grid")) {
      const auto& g = j.at("share_grid");
      if (g.is_array()) {
        cfg.share_grid = g.get<std::vector<double>>();
      } else {
        const double from = g.at("from").get<double>();
        const double to = g.at("to").get<double>();
        const double step = g.at("step").get<double>();
        if (!(step > 0.0)) throw ValidationError("pipeline config: step must be positive");
        for (double s = from; s <= to + 1e-9; s += step) cfg.share_grid.push_back(s);
      }
    }
    read_if(j, "top_share_q", cfg.top_share_q);
    read_if(j, "bootstrap_resamples", cfg.bootstrap_resamples);
  } catch (const nlohmann::json::exception& e) {
    bad("pipeline config", e);
  }
  cfg.validate();
  return cfg;
}

nlohmann::json pipeline_config_to_json(const PipelineConfig& cfg) {
  return nlohmann::json{{"split_fraction", cfg.split_fraction},
                        {"search_rate", cfg.search_rate},
                        {"share_grid", cfg.share_grid},
                        {"top_share_q", cfg.top_share_q},
                        {"bootstrap_resamples", cfg.bootstrap_resamples}};
}

Population population_from_config(const nlohmann::json& j, const std::string& config_dir) {
  if (j.contains("cells")) return population_from_json(j);
  if (j.contains("path")) {
    std::string path = j.at("path").get<std::string>();
    if (!path.empty() && path[0] != '/' && !config_dir.empty()) {
      path = config_dir + "/" + path;
    }
    return load_population(path);
  }
  throw ValidationError("population config: expected \"cells\" or \"path\"");
}

nlohmann::json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file: " + path);
  try {
    nlohmann::json j;
    in >> j;
    return j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

nlohmann::json Manifest::to_json() const {
  nlohmann::json outputs = nlohmann::json::object();
  for (const auto& [name, hash] : output_hashes) outputs[name] = hash;
  return nlohmann::json{
      {"command", command}, {"config", config}, {"seed", seed}, {"outputs", outputs}};
}

bool looks_like_manifest(const nlohmann::json& j) {
  return j.is_object() && j.contains("command") && j.contains("config") && j.contains("outputs");
}

}  // namespace selab
