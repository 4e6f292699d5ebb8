#pragma once

#include <cstdint>
#include <ostream>
#include <vector>

#include <json.hpp>

#include "selab/sqf.hpp"

namespace selab {

// Synthetic stop-level data with the documented CSV schema. Every marginal
// below is part of the generator's contract and is what the oracle checks
// test against. Coefficients are log-odds.
struct GeneratorConfig {
  // calibrated so group 1 is roughly four fifths of searched stops, which
  // puts the 0.80 end of the usual share grid near tau = 0
  double group1_share = 0.74;

  // observables: age band via young/old mixture, then uniform within
  double p_young_g0 = 0.40;
  double p_young_g1 = 0.60;
  double p_male = 0.88;
  std::vector<double> build_probs{0.30, 0.52, 0.18};           // T, M, H
  std::vector<double> location_probs_g0{0.25, 0.20, 0.18, 0.15, 0.12, 0.10};
  std::vector<double> location_probs_g1{0.10, 0.12, 0.15, 0.18, 0.20, 0.25};
  std::vector<double> hour_probs{0.12, 0.20, 0.28, 0.40};

  // stated stop reasons (the unobservables): P(u_j=1) = sigmoid(u_logit_j
  // + r * u_shift_j)
  std::vector<double> u_logit{-1.2, -1.5, -1.8, -1.0, -2.0, -1.4};
  std::vector<double> u_shift{0.2, 0.1, 0.3, 0.0, 0.2, 0.1};

  // contraband model; observable effects are sized so the two groups'
  // score distributions overlap instead of separating outright
  double y_intercept = -2.6;
  std::vector<double> y_u{1.6, 1.3, 1.0, 0.8, 0.6, 0.4};
  double y_young = 0.8;
  double y_male = 0.6;
  double y_build_heavy = 0.5;
  double y_r = -0.1;
  std::vector<double> y_location{0.0, 0.3, -0.3, 0.5, -0.5, 0.2};

  // search decision in the source data
  double s_intercept = -1.6;
  std::vector<double> s_u{1.1, 0.9, 0.8, 0.6, 0.5, 0.4};
  double s_young = 0.2;
  double s_r = 0.35;

  void validate() const;
};

GeneratorConfig generator_config_from_json(const nlohmann::json& j);
nlohmann::json generator_config_to_json(const GeneratorConfig& cfg);

// Deterministic in (cfg, n, seed). Contraband is realized for everyone but
// recorded only on searched stops.
std::vector<StopRecord> generate_stops(const GeneratorConfig& cfg, std::size_t n,
                                       std::uint64_t seed);

// CSV in the default SchemaConfig layout; ingesting it with
// SchemaConfig::defaults() recovers an equivalent record set.
void write_stops_csv(const std::vector<StopRecord>& records, std::ostream& out);

}  // namespace selab
