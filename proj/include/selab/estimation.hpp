#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "selab/decision.hpp"
#include "selab/logistic.hpp"
#include "selab/population.hpp"

namespace selab {

// Categorical feature vector (one code per column).
using Features = std::vector<int>;

// One row of the data scientist's view. The label slot exists only for
// selected records; observe() never fills y when s = 0.
struct ObservedRecord {
  Features x;
  int r = 0;
  int s = 0;
  std::optional<int> y;
};

struct Provenance {
  DecisionRule rule;
  std::uint64_t seed = 0;
  std::size_t n = 0;
  std::string source;
};

struct ObservedDataset {
  std::vector<ObservedRecord> records;
  Provenance provenance;
};

enum class Exercise { y_given_selected, s_full, ys_full };

Exercise exercise_from_string(const std::string& s);
std::string to_string(Exercise e);

// Samples n individuals, runs the rule on each (drawing a fresh prediction
// error per individual when the rule is noisy) and masks y wherever s = 0.
ObservedDataset observe(const Population& pop, const DecisionRule& rule, std::size_t n,
                        std::uint64_t seed);

enum class PredictorForm { saturated, logistic };

struct FitSpec {
  PredictorForm form = PredictorForm::logistic;
  bool interact_group = false;  // add full X x R interaction dummies
  LogisticFitOptions logistic;
};

// Fitted conditional-probability model over (x [, r]). Immutable after fit.
class Predictor {
 public:
  double predict(const Features& x, std::optional<int> r = std::nullopt) const;

  Exercise exercise() const { return exercise_; }
  bool group_blind() const { return group_blind_; }
  PredictorForm form() const { return form_; }
  const FitMeta& fit_meta() const { return meta_; }
  const std::vector<double>& coefficients() const { return beta_; }

  nlohmann::json to_json() const;
  static Predictor from_json(const nlohmann::json& j);

 private:
  friend Predictor fit(const ObservedDataset&, Exercise, bool, const FitSpec&);

  std::vector<double> encode(const Features& x, int r) const;

  Exercise exercise_ = Exercise::y_given_selected;
  bool group_blind_ = false;
  PredictorForm form_ = PredictorForm::logistic;
  bool interact_ = false;
  std::vector<std::vector<int>> x_levels_;          // per column, sorted
  std::vector<double> beta_;                        // logistic form
  std::map<std::pair<Features, int>, double> table_;  // saturated form; r = -1 when blind
  FitMeta meta_;
};

// Trains the requested exercise. y_given_selected uses only s=1 records;
// s_full and ys_full use every record, the latter with label y*s (zero
// whenever s=0, so the masked slot is never read).
Predictor fit(const ObservedDataset& data, Exercise exercise, bool group_blind,
              const FitSpec& spec = {});

// Exact population values by cell enumeration:
//   y_given_selected -> E[Y | x, r, S=1]
//   s_full           -> E[S | x, r]
//   ys_full          -> E[Y*S | x, r]
// Noisy rules enter through closed-form selection probabilities. Throws
// PositivityError when the conditioning event has zero mass.
double exact_prediction(const Population& pop, const DecisionRule& rule, Exercise exercise,
                        int x, int r);

// Group-blind analogue, pooling both groups within the x stratum.
double exact_prediction_group_blind(const Population& pop, const DecisionRule& rule,
                                    Exercise exercise, int x);

// True iff stratum (x, r) has positive selected mass under the rule.
bool stratum_positive(const Population& pop, const DecisionRule& rule, int x, int r);

}  // namespace selab
