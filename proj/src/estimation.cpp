#include "selab/estimation.hpp"

#include <algorithm>
#include <set>
#include <tuple>

namespace selab {

Exercise exercise_from_string(const std::string& s) {
  if (s == "y_given_selected") return Exercise::y_given_selected;
  if (s == "s_full") return Exercise::s_full;
  if (s == "ys_full") return Exercise::ys_full;
  throw ValidationError("unknown exercise: " + s);
}

std::string to_string(Exercise e) {
  switch (e) {
    case Exercise::y_given_selected: return "y_given_selected";
    case Exercise::s_full: return "s_full";
    default: return "ys_full";
  }
}

ObservedDataset observe(const Population& pop, const DecisionRule& rule, std::size_t n,
                        std::uint64_t seed) {
  if (n < 1) throw ValidationError("observe: n must be >= 1");
  rule.validate();

  // Separate streams for population draws and prediction errors so the
  // individual sequence is unchanged by toggling noise on or off.
  SplitMix64 pop_rng(derive_seed(seed, 0));
  SplitMix64 eps_rng(derive_seed(seed, 1));

  std::map<std::tuple<int, int, int>, double> mu_by_cell;
  for (const Cell& c : pop.cells()) mu_by_cell[{c.x, c.u, c.r}] = c.mu;

  ObservedDataset data;
  data.provenance = Provenance{rule, seed, n, "observe"};
  data.records.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Individual ind = pop.sample_one(pop_rng);
    const double mu = mu_by_cell.at({ind.x, ind.u, ind.r});
    int s;
    if (rule.noise) {
      const double eps = sample_noise(*rule.noise, ind.r, eps_rng);
      s = select_noisy(rule, mu, ind.r, eps);
    } else {
      s = select(rule, mu, ind.r);
    }
    ObservedRecord rec;
    rec.x = Features{ind.x};
    rec.r = ind.r;
    rec.s = s;
    if (s == 1) rec.y = ind.y;
    data.records.push_back(std::move(rec));
  }
  return data;
}

namespace {

// Label for a record under an exercise, plus whether the record enters the
// training sample at all. y is read only when s = 1.
bool training_label(const ObservedRecord& rec, Exercise ex, double* label) {
  switch (ex) {
    case Exercise::y_given_selected:
      if (rec.s != 1) return false;
      if (!rec.y) throw ValidationError("observed dataset: selected record without label");
      *label = static_cast<double>(*rec.y);
      return true;
    case Exercise::s_full:
      *label = static_cast<double>(rec.s);
      return true;
    default:  // ys_full: impute 0 for unselected records
      *label = rec.s == 1 ? static_cast<double>(rec.y.value()) : 0.0;
      return true;
  }
}

}  // namespace

std::vector<double> Predictor::encode(const Features& x, int r) const {
  if (x.size() != x_levels_.size()) {
    throw ValidationError("predict: expected " + std::to_string(x_levels_.size()) +
                          " feature columns, got " + std::to_string(x.size()));
  }
  std::vector<double> row;
  for (std::size_t col = 0; col < x.size(); ++col) {
    const auto& levels = x_levels_[col];
    const auto it = std::lower_bound(levels.begin(), levels.end(), x[col]);
    if (it == levels.end() || *it != x[col]) {
      throw PositivityError("predict: unseen level " + std::to_string(x[col]) +
                            " in feature column " + std::to_string(col));
    }
    for (std::size_t l = 1; l < levels.size(); ++l) {
      row.push_back(levels[l] == x[col] ? 1.0 : 0.0);
    }
  }
  if (!group_blind_) {
    row.push_back(static_cast<double>(r));
    if (interact_) {
      const std::size_t nx = row.size() - 1;
      for (std::size_t j = 0; j < nx; ++j) row.push_back(row[j] * r);
    }
  }
  return row;
}

double Predictor::predict(const Features& x, std::optional<int> r) const {
  if (!group_blind_ && !r) {
    throw ValidationError("predict: group-aware predictor requires r");
  }
  const int rv = group_blind_ ? -1 : *r;
  if (form_ == PredictorForm::saturated) {
    const auto it = table_.find({x, rv});
    if (it == table_.end()) {
      throw PositivityError("predict: stratum outside the fitted table");
    }
    return it->second;
  }
  const std::vector<double> row = encode(x, group_blind_ ? 0 : rv);
  double eta = beta_[0];
  for (std::size_t j = 0; j < row.size(); ++j) eta += beta_[j + 1] * row[j];
  return sigmoid(eta);
}

Predictor fit(const ObservedDataset& data, Exercise exercise, bool group_blind,
              const FitSpec& spec) {
  Predictor p;
  p.exercise_ = exercise;
  p.group_blind_ = group_blind;
  p.form_ = spec.form;
  p.interact_ = spec.interact_group && !group_blind;

  if (data.records.empty()) throw ValidationError("fit: empty dataset");
  const std::size_t ncols = data.records.front().x.size();

  // Encoder levels come from every record's features; labels never do.
  std::vector<std::set<int>> levels(ncols);
  for (const ObservedRecord& rec : data.records) {
    if (rec.x.size() != ncols) throw ValidationError("fit: ragged feature rows");
    for (std::size_t c = 0; c < ncols; ++c) levels[c].insert(rec.x[c]);
  }
  p.x_levels_.resize(ncols);
  for (std::size_t c = 0; c < ncols; ++c) {
    p.x_levels_[c].assign(levels[c].begin(), levels[c].end());
  }

  if (spec.form == PredictorForm::saturated) {
    std::map<std::pair<Features, int>, std::pair<double, double>> acc;  // sum, count
    for (const ObservedRecord& rec : data.records) {
      double label;
      if (!training_label(rec, exercise, &label)) continue;
      auto& slot = acc[{rec.x, group_blind ? -1 : rec.r}];
      slot.first += label;
      slot.second += 1.0;
    }
    if (acc.empty()) {
      throw PositivityError("fit: no selected records for y_given_selected");
    }
    for (const auto& [key, sums] : acc) p.table_[key] = sums.first / sums.second;
    p.meta_ = FitMeta{0, 0.0, true};
    return p;
  }

  // Aggregate identical design rows into binomial counts before IRLS.
  std::map<std::vector<double>, std::pair<double, double>> grouped;  // successes, trials
  for (const ObservedRecord& rec : data.records) {
    double label;
    if (!training_label(rec, exercise, &label)) continue;
    auto& slot = grouped[p.encode(rec.x, rec.r)];
    slot.first += label;
    slot.second += 1.0;
  }
  if (grouped.empty()) {
    throw PositivityError("fit: no selected records for y_given_selected");
  }
  std::vector<std::vector<double>> rows;
  std::vector<double> successes, trials;
  rows.reserve(grouped.size());
  for (const auto& [row, counts] : grouped) {
    rows.push_back(row);
    successes.push_back(counts.first);
    trials.push_back(counts.second);
  }
  const LogisticFit lf = fit_logistic(rows, successes, trials, spec.logistic);
  p.beta_ = lf.beta;
  p.meta_ = lf.meta;
  return p;
}

nlohmann::json Predictor::to_json() const {
  nlohmann::json j;
  j["exercise"] = selab::to_string(exercise_);
  j["group_blind"] = group_blind_;
  j["form"] = form_ == PredictorForm::saturated ? "saturated" : "logistic";
  j["interact_group"] = interact_;
  j["x_levels"] = x_levels_;
  j["fit_meta"] = {{"iterations", meta_.iterations},
                   {"grad_max_norm", meta_.grad_max_norm},
                   {"converged", meta_.converged}};
  if (form_ == PredictorForm::saturated) {
    nlohmann::json table = nlohmann::json::array();
    for (const auto& [key, value] : table_) {
      table.push_back({{"x", key.first}, {"r", key.second}, {"p", value}});
    }
    j["table"] = table;
  } else {
    j["coefficients"] = beta_;
  }
  return j;
}

Predictor Predictor::from_json(const nlohmann::json& j) {
  Predictor p;
  try {
    p.exercise_ = exercise_from_string(j.at("exercise").get<std::string>());
    p.group_blind_ = j.at("group_blind").get<bool>();
    p.form_ = j.at("form").get<std::string>() == "saturated" ? PredictorForm::saturated
                                                             : PredictorForm::logistic;
    p.interact_ = j.at("interact_group").get<bool>();
    p.x_levels_ = j.at("x_levels").get<std::vector<std::vector<int>>>();
    const auto& m = j.at("fit_meta");
    p.meta_ = FitMeta{m.at("iterations").get<int>(), m.at("grad_max_norm").get<double>(),
                      m.at("converged").get<bool>()};
    if (p.form_ == PredictorForm::saturated) {
      for (const auto& row : j.at("table")) {
        p.table_[{row.at("x").get<Features>(), row.at("r").get<int>()}] =
            row.at("p").get<double>();
      }
    } else {
      p.beta_ = j.at("coefficients").get<std::vector<double>>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("predictor json: ") + e.what());
  }
  return p;
}

namespace {

struct StratumSums {
  double mass = 0.0;          // total stratum mass
  double selected = 0.0;      // sum m * p
  double selected_mu = 0.0;   // sum m * p * mu
};

StratumSums stratum_sums(const Population& pop, const DecisionRule& rule, int x,
                         std::optional<int> r) {
  StratumSums s;
  for (const Cell& c : pop.cells()) {
    if (c.x != x || (r && c.r != *r)) continue;
    const double p = cell_selection_probability(rule, c);
    s.mass += c.mass;
    s.selected += c.mass * p;
    s.selected_mu += c.mass * p * c.mu;
  }
  return s;
}

double prediction_from_sums(const StratumSums& s, Exercise exercise, int x) {
  if (s.mass == 0.0) {
    throw PositivityError("exact_prediction: empty stratum x=" + std::to_string(x));
  }
  switch (exercise) {
    case Exercise::y_given_selected:
      if (s.selected == 0.0) {
        throw PositivityError("exact_prediction: zero selected mass at x=" + std::to_string(x));
      }
      return s.selected_mu / s.selected;
    case Exercise::s_full:
      return s.selected / s.mass;
    default:
      return s.selected_mu / s.mass;
  }
}

}  // namespace

double exact_prediction(const Population& pop, const DecisionRule& rule, Exercise exercise,
                        int x, int r) {
  rule.validate();
  return prediction_from_sums(stratum_sums(pop, rule, x, r), exercise, x);
}

double exact_prediction_group_blind(const Population& pop, const DecisionRule& rule,
                                    Exercise exercise, int x) {
  rule.validate();
  return prediction_from_sums(stratum_sums(pop, rule, x, std::nullopt), exercise, x);
}

bool stratum_positive(const Population& pop, const DecisionRule& rule, int x, int r) {
  return stratum_sums(pop, rule, x, r).selected > 0.0;
}

}  // namespace selab
