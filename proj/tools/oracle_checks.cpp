#include "oracle_checks.hpp"

#include <cmath>
#include <map>
#include <ostream>
#include <sstream>

#include "selab/experiments.hpp"
#include "selab/generator.hpp"
#include "selab/sqf.hpp"

namespace selab::checks {

namespace {

std::optional<std::string> ok() { return std::nullopt; }

std::optional<std::string> fail(const std::string& msg) { return msg; }

std::string num(double v) { return fmt_double(v); }

std::optional<std::string> expect_near(const std::string& what, double got, double want,
                                       double tol) {
  if (std::fabs(got - want) <= tol) return std::nullopt;
  return what + ": got " + num(got) + ", expected " + num(want) + " within " + num(tol);
}

double logistic_cdf(double z) { return 1.0 / (1.0 + std::exp(-z)); }

DecisionRule det_rule(double c, double tau) {
  return DecisionRule{c, tau, Variant::baseline, std::nullopt};
}

DecisionRule logistic_rule(double c, double tau) {
  return DecisionRule{c, tau, Variant::baseline, NoiseSpec{NoiseFamily::logistic, 1.0, {}}};
}

std::optional<std::string> check_conditional_means() {
  const Population pop = fixtures::pop_a();
  // brute enumeration over the raw cells
  auto brute = [&](int x, int r) {
    double m = 0.0, my = 0.0;
    for (const Cell& c : pop.cells()) {
      if (c.x == x && c.r == r) {
        m += c.mass;
        my += c.mass * c.mu;
      }
    }
    return my / m;
  };
  if (auto e = expect_near("E[Y|x=0,r=1]", pop.conditional_mean_y(0, 1), brute(0, 1), 1e-15))
    return e;
  if (auto e = expect_near("E[Y|x=0,r=1] literal", pop.conditional_mean_y(0, 1), 0.3, 1e-12))
    return e;
  if (auto e = expect_near("E[Y|x=1,r=0] literal", pop.conditional_mean_y(1, 0), 0.4, 1e-12))
    return e;
  return ok();
}

std::optional<std::string> check_sampling_marginal() {
  const Population pop = fixtures::pop_a();
  const std::size_t n = 1000000;
  std::size_t r1 = 0;
  for (const Individual& ind : pop.sample(n, 1)) r1 += ind.r;
  return expect_near("P(R=1) at n=1e6", static_cast<double>(r1) / n, 0.5, 0.002);
}

std::optional<std::string> check_noisy_selection_mc() {
  const std::size_t n = 1000000;
  for (double tau : {0.0, 0.2}) {
    const DecisionRule rule = logistic_rule(0.5, tau);
    SplitMix64 rng(11);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < n; ++i) {
      hits += select_noisy(rule, 0.2, 1, sample_standard_logistic(rng));
    }
    const double expected = 1.0 - logistic_cdf(0.5 - tau - 0.2);
    if (auto e = expect_near("P(S=1) tau=" + num(tau), static_cast<double>(hits) / n, expected,
                             0.002))
      return e;
  }
  return ok();
}

std::optional<std::string> check_selection_probability() {
  if (auto e = expect_near("1-F(0.3)", selection_probability(logistic_rule(0.5, 0.0), 0.2, 1),
                           1.0 - logistic_cdf(0.3), 1e-15))
    return e;
  if (auto e = expect_near("1-F(-0.1)", selection_probability(logistic_rule(0.5, 0.0), 0.6, 1),
                           0.5250, 5e-5))
    return e;
  if (selection_probability(logistic_rule(0.5, 0.0), 10.0, 1) < 0.9999) {
    return fail("selection probability should saturate far above the threshold");
  }
  return ok();
}

std::optional<std::string> check_apply_rule() {
  const Population pop = fixtures::pop_a();
  for (const CellSelection& row : apply_rule(pop, det_rule(0.45, 0.0)).rows) {
    const double want = row.cell.mu >= 0.45 ? 1.0 : 0.0;
    if (row.p_select != want) return fail("tau=0 selection set mismatch");
    if (row.cell.x == 0 && row.cell.r == 1 && row.p_select == 1.0 && row.cell.u != 2) {
      return fail("tau=0, (x=0,r=1): only the u=2 cell should be selected");
    }
  }
  for (const CellSelection& row : apply_rule(pop, det_rule(0.45, 0.45)).rows) {
    if (row.cell.r == 1 && row.p_select != 1.0) {
      return fail("tau=c should select every group-1 cell");
    }
  }
  for (const CellSelection& row : apply_rule(pop, logistic_rule(0.45, 0.0)).rows) {
    if (!(row.selected_mass > 0.0 && row.selected_mass < row.cell.mass)) {
      return fail("full-support noise must select interior mass in every cell");
    }
  }
  return ok();
}

std::optional<std::string> check_observe_full_coverage() {
  const Population pop = fixtures::pop_a();
  const ObservedDataset data = observe(pop, det_rule(0.45, 0.45), 100000, 5);
  for (const ObservedRecord& rec : data.records) {
    if (rec.r == 1 && rec.s != 1) return fail("a group-1 record escaped selection at tau=c");
    if (rec.y.has_value() != (rec.s == 1)) return fail("label masking violated");
  }
  return ok();
}

std::optional<std::string> check_exact_prediction_tables() {
  const Population pop = fixtures::pop_a();
  const double taus[] = {0.0, 0.3, 0.45};
  const double y_sel[] = {0.5, 0.4, 0.3};
  const double s_full[] = {1.0 / 3.0, 2.0 / 3.0, 1.0};
  const double ys_full[] = {1.0 / 6.0, 4.0 / 15.0, 0.3};
  for (int i = 0; i < 3; ++i) {
    const DecisionRule rule = det_rule(0.45, taus[i]);
    if (auto e = expect_near("y_given_selected tau=" + num(taus[i]),
                             exact_prediction(pop, rule, Exercise::y_given_selected, 0, 1),
                             y_sel[i], 1e-12))
      return e;
    if (auto e = expect_near("s_full tau=" + num(taus[i]),
                             exact_prediction(pop, rule, Exercise::s_full, 0, 1), s_full[i],
                             1e-12))
      return e;
    if (auto e = expect_near("ys_full tau=" + num(taus[i]),
                             exact_prediction(pop, rule, Exercise::ys_full, 0, 1), ys_full[i],
                             1e-12))
      return e;
  }
  return ok();
}

std::optional<std::string> check_saturated_fit_agreement() {
  const Population pop = fixtures::pop_a();
  const ObservedDataset data = observe(pop, det_rule(0.45, 0.3), 200000, 31);
  FitSpec interacted;
  interacted.interact_group = true;
  const Predictor logit = fit(data, Exercise::y_given_selected, false, interacted);

  std::map<std::pair<int, int>, std::pair<double, double>> sums;
  for (const ObservedRecord& rec : data.records) {
    if (rec.s != 1) continue;
    auto& slot = sums[{rec.x[0], rec.r}];
    slot.first += *rec.y;
    slot.second += 1.0;
  }
  for (const auto& [key, sum] : sums) {
    if (auto e = expect_near("interacted fit at (x=" + std::to_string(key.first) +
                                 ",r=" + std::to_string(key.second) + ")",
                             logit.predict(Features{key.first}, key.second),
                             sum.first / sum.second, 1e-3))
      return e;
  }

  FitSpec saturated;
  saturated.form = PredictorForm::saturated;
  const Predictor sat = fit(data, Exercise::y_given_selected, false, saturated);
  return expect_near("saturated prediction at (0,1), tau=0.3", sat.predict(Features{0}, 1), 0.4,
                     0.02);
}

std::optional<std::string> check_sweep_tables() {
  const Population pop = fixtures::pop_a();
  SweepConfig cfg;
  cfg.tau_grid = {0.0, 0.3, 0.45};
  cfg.rule = det_rule(0.45, 0.0);
  cfg.c_min = 0.45;
  const SweepResult res = run_sweep(pop, cfg);
  for (const SweepRow& row : res.rows) {
    if (!row.prediction) continue;
    const double expected =
        exact_prediction(pop, cfg.rule.with_tau(row.tau), row.exercise, row.x, row.r);
    if (auto e = expect_near("sweep row", *row.prediction, expected, 1e-14)) return e;
  }
  const auto first = res.prediction(0, Exercise::y_given_selected, 0, 1);
  if (!first || std::fabs(*first - 0.5) > 1e-12) return fail("sweep table anchor mismatch");
  return ok();
}

std::optional<std::string> check_automated_rule() {
  const Population pop = fixtures::pop_a();
  for (double tau : {0.0, 0.3}) {
    std::map<std::pair<int, int>, double> preds;
    for (int x = 0; x <= 1; ++x)
      for (int r = 0; r <= 1; ++r)
        preds[{x, r}] =
            exact_prediction(pop, det_rule(0.45, tau), Exercise::y_given_selected, x, r);
    const auto ind = automated_rule(preds, 0.45);
    const int want = tau == 0.0 ? 1 : 0;
    if (ind.at({0, 1}) != want) {
      return fail("automated rule at (0,1), tau=" + num(tau) + ": expected " +
                  std::to_string(want));
    }
  }
  return ok();
}

std::optional<std::string> check_top_share_mc() {
  const Population pop = fixtures::pop_a();
  SweepConfig cfg;
  cfg.tau_grid = {0.0, 0.3, 0.45};
  cfg.rule = det_rule(0.45, 0.0);
  cfg.c_min = 0.45;
  cfg.exercises = {Exercise::y_given_selected};
  cfg.monte_carlo = MonteCarloSpec{100000, 5, FitSpec{PredictorForm::saturated, false, {}}};
  const SweepResult res = run_sweep(pop, cfg);
  std::vector<double> fractions;
  for (const SweepRow& row : res.rows) {
    if (row.x == 0 && row.r == 1 && row.top_share) fractions.push_back(*row.top_share);
  }
  if (fractions.size() != 3) return fail("expected three group-1 top-share values");
  if (!(fractions[0] >= fractions[1] - 1e-9 && fractions[1] >= fractions[2] - 1e-9)) {
    return fail("group-1 top share must fall as bias grows: " + num(fractions[0]) + ", " +
                num(fractions[1]) + ", " + num(fractions[2]));
  }
  return ok();
}

std::optional<std::string> check_mlr_values() {
  const Population pop = Population::build(
      {Cell{0, 0, 1, 0.25, 0.2}, Cell{0, 1, 1, 0.25, 0.6},
       Cell{0, 0, 0, 0.25, 0.2}, Cell{0, 1, 0, 0.25, 0.6}});
  const MlrResult res = mlr_diagnostic(pop, logistic_rule(0.5, 0.0), {0.0, 0.2}, {0.2, 0.6}, 0, 1);
  if (auto e = expect_near("mlr ratio at tau=0", res.ratio_at_tau_low, 0.8107, 1e-4)) return e;
  if (auto e = expect_near("mlr ratio at tau=0.2", res.ratio_at_tau_high, 0.8269, 1e-4)) return e;
  if (!(res.ratio_at_tau_high >= res.ratio_at_tau_low)) {
    return fail("low/high ratio must weakly rise with tau");
  }
  return ok();
}

std::optional<std::string> check_reconstruction() {
  const ReconstructionReport at_x1 = reconstruction_demo(0.05, 1);
  if (at_x1.group_moved_most != 0) {
    return fail("marginal at x=1 should move the group-0 average most");
  }
  const ReconstructionReport at_x0 = reconstruction_demo(0.05, 0);
  if (at_x0.group_moved_most != 1) {
    return fail("marginal at x=0 should move the group-1 average most");
  }
  const ReconstructionReport flat = reconstruction_demo(0.0, 1);
  const Population pop = reconstruction_population(0.0, 1);
  for (double tau : {0.0, 0.2}) {
    const DecisionRule rule = det_rule(0.5, tau);
    const double blind = exact_prediction_group_blind(pop, rule, Exercise::y_given_selected, 1);
    const double aware = exact_prediction(pop, rule, Exercise::y_given_selected, 1, 0);
    if (auto e = expect_near("eps=0 blind equals aware", blind, aware, 1e-15)) return e;
  }
  (void)flat;
  return ok();
}

std::optional<std::string> check_generator_marginals() {
  const GeneratorConfig cfg;
  const std::size_t n = 100000;
  const auto records = generate_stops(cfg, n, 4);
  std::size_t g1 = 0, male = 0, u0 = 0;
  for (const StopRecord& rec : records) {
    g1 += rec.r;
    male += rec.x[1];
    u0 += rec.u[0];
    if (rec.contraband.has_value() != (rec.searched == 1)) {
      return fail("generator must mask contraband on unsearched stops");
    }
  }
  auto bound = [&](double p) { return 4.0 * std::sqrt(p * (1.0 - p) / n); };
  if (auto e = expect_near("generator P(R=1)", static_cast<double>(g1) / n, cfg.group1_share,
                           bound(cfg.group1_share)))
    return e;
  if (auto e = expect_near("generator P(male)", static_cast<double>(male) / n, cfg.p_male,
                           bound(cfg.p_male)))
    return e;
  const double p_u0 = (1.0 - cfg.group1_share) * sigmoid(cfg.u_logit[0]) +
                      cfg.group1_share * sigmoid(cfg.u_logit[0] + cfg.u_shift[0]);
  return expect_near("generator P(u0=1)", static_cast<double>(u0) / n, p_u0, bound(p_u0));
}

std::optional<std::string> check_calibration_monotone() {
  SplitMix64 rng(5);
  std::array<std::vector<double>, 2> scores;
  for (int i = 0; i < 400; ++i) scores[0].push_back(rng.uniform01());
  for (int i = 0; i < 600; ++i) scores[1].push_back(rng.uniform01());
  double prev_c1 = 2.0, prev_c0 = -1.0;
  for (double share = 0.3; share <= 0.71; share += 0.05) {
    const Thresholds thr = calibrate_thresholds(scores, 0.4, share);
    if (thr.c1 > prev_c1 + 1e-12) return fail("raising the share raised c1");
    if (thr.c0 < prev_c0 - 1e-12) return fail("raising the share lowered c0");
    prev_c1 = thr.c1;
    prev_c0 = thr.c0;
  }
  return ok();
}

std::optional<std::string> check_synthesize_rate() {
  const auto records = generate_stops(GeneratorConfig{}, 40000, 11);
  const auto [a, b] = split_searched(records, 0.5, 3);
  std::vector<StopRecord> all_searched = a;
  all_searched.insert(all_searched.end(), b.begin(), b.end());
  const RiskModel risk = fit_risk_model(a, all_searched);
  std::array<std::vector<double>, 2> scores;
  for (const StopRecord& rec : b) scores[rec.r].push_back(risk.score(rec));
  const Thresholds thr = calibrate_thresholds(scores, 0.5, 0.9);
  const SyntheticSearchSet synth = synthesize(b, thr, risk);
  const double tie_slack = static_cast<double>((thr.target[0] - thr.realized[0]) +
                                               (thr.target[1] - thr.realized[1]));
  return expect_near("synthetic search rate", synth.realized_rate, 0.5,
                     (tie_slack + 1.0) / static_cast<double>(b.size()) + 1.0 / b.size());
}

std::optional<std::string> check_figure_directions() {
  const auto records = generate_stops(GeneratorConfig{}, 60000, 42);
  PipelineConfig cfg;
  cfg.share_grid = {0.80, 0.85, 0.90, 0.95};
  cfg.bootstrap_resamples = 30;
  const FigureResult fig = replicate_figure(records, cfg, 7, 2);

  for (Exercise ex : {Exercise::y_given_selected, Exercise::s_full, Exercise::ys_full}) {
    std::vector<const FigurePoint*> curve;
    for (const FigurePoint& p : fig.points) {
      if (p.exercise == ex && p.group == 1) curve.push_back(&p);
    }
    const double sign = ex == Exercise::y_given_selected ? -1.0 : 1.0;
    int inversions = 0;
    for (std::size_t i = 1; i < curve.size(); ++i) {
      const double step = sign * (curve[i]->top_share - curve[i - 1]->top_share);
      if (step < 0.0) {
        const double slack =
            2.0 * std::sqrt(curve[i]->se * curve[i]->se + curve[i - 1]->se * curve[i - 1]->se);
        if (-step > slack) {
          return fail(to_string(ex) + ": inversion of " + num(-step) + " exceeds 2se=" +
                      num(slack));
        }
        ++inversions;
      }
    }
    if (inversions > 1) {
      return fail(to_string(ex) + ": " + std::to_string(inversions) + " inversions, one allowed");
    }
  }
  return ok();
}

}  // namespace

std::vector<OracleCheck> all_checks() {
  return {
      {"population/conditional-means", check_conditional_means},
      {"population/sampling-marginal", check_sampling_marginal},
      {"decision/noisy-selection-monte-carlo", check_noisy_selection_mc},
      {"decision/selection-probability-closed-form", check_selection_probability},
      {"decision/apply-rule-enumeration", check_apply_rule},
      {"estimation/observe-full-coverage", check_observe_full_coverage},
      {"estimation/exact-prediction-tables", check_exact_prediction_tables},
      {"estimation/saturated-fit-agreement", check_saturated_fit_agreement},
      {"experiments/sweep-tables", check_sweep_tables},
      {"experiments/automated-rule-direction", check_automated_rule},
      {"experiments/top-share-monte-carlo", check_top_share_mc},
      {"experiments/mlr-closed-form", check_mlr_values},
      {"experiments/reconstruction-directions", check_reconstruction},
      {"sqf/generator-marginals", check_generator_marginals},
      {"sqf/calibration-monotonicity", check_calibration_monotone},
      {"sqf/synthetic-search-rate", check_synthesize_rate},
      {"sqf/figure-directions", check_figure_directions},
  };
}

int run_all(std::ostream& out) {
  int failures = 0;
  for (const OracleCheck& check : all_checks()) {
    std::optional<std::string> error;
    try {
      error = check.run();
    } catch (const std::exception& e) {
      error = std::string("exception: ") + e.what();
    }
    if (error) {
      ++failures;
      out << "FAIL  " << check.name << "  (" << *error << ")\n";
    } else {
      out << "PASS  " << check.name << "\n";
    }
  }
  return failures;
}

}  // namespace selab::checks
