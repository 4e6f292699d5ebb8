#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "selab/estimation.hpp"

namespace selab {

struct MonteCarloSpec {
  std::size_t n = 100000;
  std::uint64_t seed = 0;
  FitSpec fit{PredictorForm::saturated, false, {}};
};

struct SweepConfig {
  std::vector<double> tau_grid;
  DecisionRule rule;  // template; tau is taken from the grid
  std::vector<Exercise> exercises{Exercise::y_given_selected, Exercise::s_full,
                                  Exercise::ys_full};
  std::vector<bool> group_blind{false};
  double c_min = 0.5;
  double top_share_q = 0.5;
  std::optional<MonteCarloSpec> monte_carlo;  // absent -> exact enumeration

  void validate() const;
};

// Group-level metrics of a score distribution: `fraction[r]` is the share
// of group r at or above the pooled top-q cutoff (the spec'd metric);
// `share_of_top[r]` is group r's share of the top set (alternate reading).
struct TopShareResult {
  std::array<double, 2> fraction{0.0, 0.0};
  std::array<double, 2> share_of_top{0.0, 0.0};
  double threshold = 0.0;
  double top_mass = 0.0;  // may exceed q under ties; ties are included
};

TopShareResult top_share(const std::vector<double>& scores, const std::vector<int>& groups,
                         double q);
TopShareResult top_share_weighted(const std::vector<double>& scores,
                                  const std::vector<double>& weights,
                                  const std::vector<int>& groups, double q);

// Threshold rule over fitted predictions; throws on a missing stratum.
std::map<std::pair<int, int>, int> automated_rule(
    const std::map<std::pair<int, int>, double>& predictions, double c_min);

struct SweepRow {
  double tau = 0.0;
  Exercise exercise = Exercise::y_given_selected;
  bool group_blind = false;
  int x = 0;
  int r = 0;
  bool positivity = true;                 // false -> prediction skipped and flagged
  std::optional<double> prediction;
  std::optional<int> searched;            // automated-rule indicator for this stratum
  std::optional<double> group_fraction;   // automated-rule fraction for this row's group
  std::optional<double> top_share;        // top-q fraction for this row's group
};

struct SweepResult {
  SweepConfig config;
  std::vector<SweepRow> rows;

  std::string to_csv() const;
  // Prediction lookup for tests: (tau index, exercise, x, r).
  std::optional<double> prediction(std::size_t tau_index, Exercise e, int x, int r,
                                   bool group_blind = false) const;
};

SweepResult run_sweep(const Population& pop, const SweepConfig& cfg, int threads = 1);

// Exact posterior-odds diagnostic for the selected pool: the ratio
// P(mu=mu_low | S=1) / P(mu=mu_high | S=1) inside the (x, r) stratum,
// evaluated at each tau of the pair. Requires a noisy rule.
struct MlrResult {
  double ratio_at_tau_low = 0.0;
  double ratio_at_tau_high = 0.0;
};

MlrResult mlr_diagnostic(const Population& pop, const DecisionRule& noisy_rule,
                         std::pair<double, double> taus, std::pair<double, double> mus,
                         int x, int r);

// Two-group binary-X construction showing that a group-blind predictor's
// group averages can move either way as bias grows, depending on where the
// marginally selected group-1 individual sits.
struct ReconstructionReport {
  double epsilon = 0.0;
  int marginal_x = 1;
  std::vector<double> tau_grid;
  std::array<std::vector<double>, 2> avg_blind_prediction;  // per group, per tau
  std::array<double, 2> movement{0.0, 0.0};                 // last minus first
  int group_moved_most = 0;
};

// The constructed two-group population itself (c=0.5 rule assumed by the
// demo); exposed so the directional claims can be re-derived externally.
Population reconstruction_population(double epsilon, int marginal_x);

ReconstructionReport reconstruction_demo(double epsilon, int marginal_x,
                                         std::vector<double> tau_grid = {});

}  // namespace selab
