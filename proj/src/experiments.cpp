#include "selab/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "selab/util.hpp"

namespace selab {

void SweepConfig::validate() const {
  if (tau_grid.empty()) throw ValidationError("sweep: empty tau grid");
  for (std::size_t i = 1; i < tau_grid.size(); ++i) {
    if (!(tau_grid[i] > tau_grid[i - 1])) {
      throw ValidationError("sweep: tau grid must be strictly ascending");
    }
  }
  if (!(c_min >= 0.0 && c_min <= 1.0)) throw ValidationError("sweep: c_min must lie in [0,1]");
  if (!(top_share_q > 0.0 && top_share_q < 1.0)) {
    throw ValidationError("sweep: top_share_q must lie in (0,1)");
  }
  if (exercises.empty()) throw ValidationError("sweep: no exercises configured");
  if (group_blind.empty()) throw ValidationError("sweep: no group_blind flags configured");
  DecisionRule probe = rule;
  probe.validate();
  if (monte_carlo && monte_carlo->n < 1) throw ValidationError("sweep: monte carlo n must be >= 1");
}

TopShareResult top_share_weighted(const std::vector<double>& scores,
                                  const std::vector<double>& weights,
                                  const std::vector<int>& groups, double q) {
  if (!(q > 0.0 && q < 1.0)) throw ValidationError("top_share: q must lie in (0,1)");
  if (scores.empty() || scores.size() != weights.size() || scores.size() != groups.size()) {
    throw ValidationError("top_share: empty or mismatched inputs");
  }
  std::array<double, 2> group_w{0.0, 0.0};
  double total = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (groups[i] != 0 && groups[i] != 1) throw ValidationError("top_share: group must be 0 or 1");
    if (!(weights[i] >= 0.0)) throw ValidationError("top_share: negative weight");
    group_w[groups[i]] += weights[i];
    total += weights[i];
  }
  if (group_w[0] <= 0.0 || group_w[1] <= 0.0) {
    throw ValidationError("top_share: a group has no mass");
  }

  // Cutoff = smallest score t with P(score >= t) >= q; everything tied at
  // the cutoff is included.
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] > scores[b];
  });
  const double target = q * total;
  double cum = 0.0;
  double threshold = scores[order.back()];
  for (std::size_t i = 0; i < order.size();) {
    const double s = scores[order[i]];
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == s) {
      cum += weights[order[j]];
      ++j;
    }
    if (cum >= target - 1e-12 * std::max(total, 1.0)) {
      threshold = s;
      break;
    }
    i = j;
  }

  TopShareResult out;
  out.threshold = threshold;
  std::array<double, 2> top_w{0.0, 0.0};
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (scores[i] >= threshold) top_w[groups[i]] += weights[i];
  }
  const double top_total = top_w[0] + top_w[1];
  out.top_mass = top_total / total;
  for (int r = 0; r <= 1; ++r) {
    out.fraction[r] = top_w[r] / group_w[r];
    out.share_of_top[r] = top_total > 0.0 ? top_w[r] / top_total : 0.0;
  }
  return out;
}

TopShareResult top_share(const std::vector<double>& scores, const std::vector<int>& groups,
                         double q) {
  return top_share_weighted(scores, std::vector<double>(scores.size(), 1.0), groups, q);
}

std::map<std::pair<int, int>, int> automated_rule(
    const std::map<std::pair<int, int>, double>& predictions, double c_min) {
  if (!(c_min >= 0.0 && c_min <= 1.0)) {
    throw ValidationError("automated_rule: c_min must lie in [0,1]");
  }
  if (predictions.empty()) throw ValidationError("automated_rule: no predictions");
  std::map<std::pair<int, int>, int> out;
  for (const auto& [key, pred] : predictions) out[key] = pred >= c_min ? 1 : 0;
  return out;
}

namespace {

struct GroupMetrics {
  std::optional<double> fraction;
  std::optional<double> top_share;
};

// One (tau, exercise, blind) block of rows plus its per-group metrics.
struct BlockResult {
  std::vector<SweepRow> rows;
};

void attach_group_metrics(std::vector<SweepRow>& rows,
                          const std::array<GroupMetrics, 2>& metrics) {
  for (SweepRow& row : rows) {
    row.group_fraction = metrics[row.r].fraction;
    row.top_share = metrics[row.r].top_share;
  }
}

BlockResult exact_block(const Population& pop, const SweepConfig& cfg, double tau,
                        Exercise ex, bool blind) {
  const DecisionRule rule = cfg.rule.with_tau(tau);
  BlockResult block;

  // prediction per stratum; blind predictions repeat per group row
  std::map<std::pair<int, int>, std::optional<double>> preds;  // (x, r) -> pred
  std::map<int, std::optional<double>> blind_preds;            // x -> pred
  for (int x : pop.x_domain()) {
    if (blind) {
      std::optional<double> p;
      try {
        p = exact_prediction_group_blind(pop, rule, ex, x);
      } catch (const PositivityError&) {
        p = std::nullopt;
      }
      blind_preds[x] = p;
    }
    for (int r = 0; r <= 1; ++r) {
      if (pop.stratum_mass(x, r) <= 0.0) continue;
      if (blind) {
        preds[{x, r}] = blind_preds[x];
        continue;
      }
      std::optional<double> p;
      try {
        p = exact_prediction(pop, rule, ex, x, r);
      } catch (const PositivityError&) {
        p = std::nullopt;
      }
      preds[{x, r}] = p;
    }
  }

  // automated rule + group fractions over defined strata
  std::array<GroupMetrics, 2> metrics;
  std::array<double, 2> searched_mass{0.0, 0.0};
  for (const auto& [key, pred] : preds) {
    if (pred && *pred >= cfg.c_min) searched_mass[key.second] += pop.stratum_mass(key.first, key.second);
  }
  for (int r = 0; r <= 1; ++r) {
    const double gm = pop.group_mass(r);
    if (gm > 0.0) metrics[r].fraction = searched_mass[r] / gm;
  }

  // mass-weighted top-share over defined strata
  std::vector<double> scores, weights;
  std::vector<int> groups;
  for (const auto& [key, pred] : preds) {
    if (!pred) continue;
    scores.push_back(*pred);
    weights.push_back(pop.stratum_mass(key.first, key.second));
    groups.push_back(key.second);
  }
  try {
    const TopShareResult ts = top_share_weighted(scores, weights, groups, cfg.top_share_q);
    for (int r = 0; r <= 1; ++r) metrics[r].top_share = ts.fraction[r];
  } catch (const ValidationError&) {
    // a group vanished from the scored set; leave top_share empty
  }

  for (const auto& [key, pred] : preds) {
    SweepRow row;
    row.tau = tau;
    row.exercise = ex;
    row.group_blind = blind;
    row.x = key.first;
    row.r = key.second;
    row.positivity = pred.has_value();
    row.prediction = pred;
    if (pred) row.searched = *pred >= cfg.c_min ? 1 : 0;
    block.rows.push_back(row);
  }
  attach_group_metrics(block.rows, metrics);
  return block;
}

BlockResult monte_carlo_block(const Population& pop, const SweepConfig& cfg, double tau,
                              std::size_t tau_index, Exercise ex, bool blind) {
  const MonteCarloSpec& mc = *cfg.monte_carlo;
  const DecisionRule rule = cfg.rule.with_tau(tau);
  const ObservedDataset data = observe(pop, rule, mc.n, derive_seed(mc.seed, tau_index));

  BlockResult block;
  std::optional<Predictor> predictor;
  try {
    predictor = fit(data, ex, blind, mc.fit);
  } catch (const PositivityError&) {
    // nothing selected anywhere at this tau; every stratum gets flagged
  }

  std::map<std::pair<int, int>, std::optional<double>> preds;
  for (int x : pop.x_domain()) {
    for (int r = 0; r <= 1; ++r) {
      if (pop.stratum_mass(x, r) <= 0.0) continue;
      std::optional<double> p;
      if (predictor) {
        try {
          p = predictor->predict(Features{x},
                                 blind ? std::optional<int>() : std::optional<int>(r));
        } catch (const PositivityError&) {
          p = std::nullopt;
        }
      }
      preds[{x, r}] = p;
    }
  }

  std::array<GroupMetrics, 2> metrics;
  std::array<double, 2> searched_mass{0.0, 0.0};
  for (const auto& [key, pred] : preds) {
    if (pred && *pred >= cfg.c_min) searched_mass[key.second] += pop.stratum_mass(key.first, key.second);
  }
  for (int r = 0; r <= 1; ++r) {
    const double gm = pop.group_mass(r);
    if (gm > 0.0) metrics[r].fraction = searched_mass[r] / gm;
  }

  // top-share of the fitted scores, weighted by exact stratum masses so the
  // pooled quantile cannot wobble on empirical-mass noise
  std::vector<double> scores, weights;
  std::vector<int> groups;
  for (const auto& [key, pred] : preds) {
    if (!pred) continue;
    scores.push_back(*pred);
    weights.push_back(pop.stratum_mass(key.first, key.second));
    groups.push_back(key.second);
  }
  try {
    const TopShareResult ts = top_share_weighted(scores, weights, groups, cfg.top_share_q);
    for (int r = 0; r <= 1; ++r) metrics[r].top_share = ts.fraction[r];
  } catch (const ValidationError&) {
  }

  for (const auto& [key, pred] : preds) {
    SweepRow row;
    row.tau = tau;
    row.exercise = ex;
    row.group_blind = blind;
    row.x = key.first;
    row.r = key.second;
    row.positivity = pred.has_value();
    row.prediction = pred;
    if (pred) row.searched = *pred >= cfg.c_min ? 1 : 0;
    block.rows.push_back(row);
  }
  attach_group_metrics(block.rows, metrics);
  return block;
}

}  // namespace

SweepResult run_sweep(const Population& pop, const SweepConfig& cfg, int threads) {
  cfg.validate();
  SweepResult result;
  result.config = cfg;

  std::vector<std::vector<SweepRow>> per_tau(cfg.tau_grid.size());
  parallel_for(cfg.tau_grid.size(), threads, [&](std::size_t i) {
    const double tau = cfg.tau_grid[i];
    std::vector<SweepRow> rows;
    for (bool blind : cfg.group_blind) {
      for (Exercise ex : cfg.exercises) {
        BlockResult block = cfg.monte_carlo ? monte_carlo_block(pop, cfg, tau, i, ex, blind)
                                            : exact_block(pop, cfg, tau, ex, blind);
        rows.insert(rows.end(), block.rows.begin(), block.rows.end());
      }
    }
    per_tau[i] = std::move(rows);
  });
  for (auto& rows : per_tau) {
    result.rows.insert(result.rows.end(), rows.begin(), rows.end());
  }
  return result;
}

std::string SweepResult::to_csv() const {
  std::ostringstream out;
  out << "tau,exercise,group_blind,x,r,prediction,searched,group_fraction,top_share,"
         "positivity_flag\n";
  for (const SweepRow& row : rows) {
    out << fmt_double(row.tau) << ',' << to_string(row.exercise) << ','
        << (row.group_blind ? 1 : 0) << ',' << row.x << ',' << row.r << ',';
    if (row.prediction) out << fmt_double(*row.prediction);
    out << ',';
    if (row.searched) out << *row.searched;
    out << ',';
    if (row.group_fraction) out << fmt_double(*row.group_fraction);
    out << ',';
    if (row.top_share) out << fmt_double(*row.top_share);
    out << ',' << (row.positivity ? 1 : 0) << '\n';
  }
  return out.str();
}

std::optional<double> SweepResult::prediction(std::size_t tau_index, Exercise e, int x, int r,
                                              bool group_blind) const {
  if (tau_index >= config.tau_grid.size()) return std::nullopt;
  const double tau = config.tau_grid[tau_index];
  for (const SweepRow& row : rows) {
    if (row.tau == tau && row.exercise == e && row.group_blind == group_blind && row.x == x &&
        row.r == r) {
      return row.prediction;
    }
  }
  return std::nullopt;
}

MlrResult mlr_diagnostic(const Population& pop, const DecisionRule& noisy_rule,
                         std::pair<double, double> taus, std::pair<double, double> mus,
                         int x, int r) {
  if (!noisy_rule.noise) throw ValidationError("mlr_diagnostic: rule must be noisy");
  noisy_rule.validate();
  if (!(taus.first <= taus.second)) throw ValidationError("mlr_diagnostic: taus out of order");
  if (!(mus.first < mus.second)) throw ValidationError("mlr_diagnostic: need mu_low < mu_high");

  auto mass_at = [&](double mu) {
    double m = 0.0;
    for (const Cell& c : pop.cells()) {
      if (c.x == x && c.r == r && std::fabs(c.mu - mu) <= 1e-12) m += c.mass;
    }
    if (m <= 0.0) {
      throw PositivityError("mlr_diagnostic: mu=" + fmt_double(mu) +
                            " not in the stratum's support");
    }
    return m;
  };
  const double m_low = mass_at(mus.first);
  const double m_high = mass_at(mus.second);

  auto ratio = [&](double tau) {
    const DecisionRule rule = noisy_rule.with_tau(tau);
    const double p_low = selection_probability(rule, mus.first, r);
    const double p_high = selection_probability(rule, mus.second, r);
    return (m_low * p_low) / (m_high * p_high);
  };
  return MlrResult{ratio(taus.first), ratio(taus.second)};
}

Population reconstruction_population(double epsilon, int marginal_x) {
  if (!(epsilon >= 0.0 && epsilon < 0.5)) {
    throw ValidationError("reconstruction_demo: epsilon must lie in [0, 0.5)");
  }
  if (marginal_x != 0 && marginal_x != 1) {
    throw ValidationError("reconstruction_demo: marginal_x must be 0 or 1");
  }
  // Two groups of equal size. Group 0 sits at x=1 with probability
  // 1-epsilon, group 1 at x=0 with probability 1-epsilon. Within every
  // (x, r) stratum the high-u half has mu=0.7 (always selected at c=0.5);
  // the low-u half has mu=0.45 at the marginal x and mu=0.05 elsewhere, so
  // rising bias pulls group-1 low-u individuals into the selected pool at
  // the marginal x first.
  std::vector<Cell> cells;
  for (int r = 0; r <= 1; ++r) {
    for (int x = 0; x <= 1; ++x) {
      const double px = (r == 0) ? (x == 1 ? 1.0 - epsilon : epsilon)
                                 : (x == 0 ? 1.0 - epsilon : epsilon);
      for (int u = 0; u <= 1; ++u) {
        const double mu = u == 1 ? 0.7 : (x == marginal_x ? 0.45 : 0.05);
        cells.push_back(Cell{x, u, r, 0.5 * px * 0.5, mu});
      }
    }
  }
  return Population::build(std::move(cells));
}

ReconstructionReport reconstruction_demo(double epsilon, int marginal_x,
                                         std::vector<double> tau_grid) {
  if (tau_grid.empty()) tau_grid = {0.0, 0.05, 0.1, 0.15, 0.2};
  const Population pop = reconstruction_population(epsilon, marginal_x);
  const DecisionRule base{0.5, 0.0, Variant::baseline, std::nullopt};

  ReconstructionReport report;
  report.epsilon = epsilon;
  report.marginal_x = marginal_x;
  report.tau_grid = tau_grid;
  const std::array<std::array<double, 2>, 2> px_given_r{{{epsilon, 1.0 - epsilon},
                                                         {1.0 - epsilon, epsilon}}};
  for (double tau : tau_grid) {
    const DecisionRule rule = base.with_tau(tau);
    std::array<double, 2> blind_pred{};
    for (int x = 0; x <= 1; ++x) {
      blind_pred[x] =
          exact_prediction_group_blind(pop, rule, Exercise::y_given_selected, x);
    }
    for (int r = 0; r <= 1; ++r) {
      report.avg_blind_prediction[r].push_back(px_given_r[r][0] * blind_pred[0] +
                                               px_given_r[r][1] * blind_pred[1]);
    }
  }
  for (int r = 0; r <= 1; ++r) {
    report.movement[r] =
        report.avg_blind_prediction[r].back() - report.avg_blind_prediction[r].front();
  }
  report.group_moved_most =
      std::fabs(report.movement[1]) > std::fabs(report.movement[0]) ? 1 : 0;
  return report;
}

}  // namespace selab
