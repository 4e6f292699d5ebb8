#include "selab/estimation.hpp"

#include <cmath>
#include <map>

#include <gtest/gtest.h>

#include "oracle_utils.hpp"

namespace selab {
namespace {

DecisionRule det_rule(double c, double tau, Variant v = Variant::baseline) {
  return DecisionRule{c, tau, v, std::nullopt};
}

TEST(Observe, FullGroupCoverageAtLargeTau) {
  const Population pop = fixtures::pop_a();
  const ObservedDataset data = observe(pop, det_rule(0.45, 0.45), 100000, 5);
  for (const ObservedRecord& rec : data.records) {
    if (rec.r == 1) {
      EXPECT_EQ(rec.s, 1);
      EXPECT_TRUE(rec.y.has_value());
    }
  }
}

TEST(Observe, EmptySelectionYieldsNoLabels) {
  const Population pop = fixtures::pop_a();  // mu tops out at 0.6
  const ObservedDataset data = observe(pop, det_rule(1.0, 0.0), 5000, 5);
  for (const ObservedRecord& rec : data.records) {
    EXPECT_EQ(rec.s, 0);
    EXPECT_FALSE(rec.y.has_value());
  }
}

TEST(Observe, DeterministicInSeed) {
  const Population pop = fixtures::pop_a();
  const DecisionRule rule{0.45, 0.2, Variant::baseline,
                          NoiseSpec{NoiseFamily::logistic, 0.5, std::nullopt}};
  const ObservedDataset a = observe(pop, rule, 2000, 99);
  const ObservedDataset b = observe(pop, rule, 2000, 99);
  ASSERT_EQ(a.records.size(), b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    EXPECT_EQ(a.records[i].x, b.records[i].x);
    EXPECT_EQ(a.records[i].r, b.records[i].r);
    EXPECT_EQ(a.records[i].s, b.records[i].s);
    EXPECT_EQ(a.records[i].y, b.records[i].y);
  }
}

TEST(Observe, MasksLabelsWheneverUnselected) {
  const Population pop = fixtures::pop_a();
  const ObservedDataset data = observe(pop, det_rule(0.45, 0.2), 20000, 17);
  std::size_t selected = 0;
  for (const ObservedRecord& rec : data.records) {
    EXPECT_EQ(rec.y.has_value(), rec.s == 1);
    selected += rec.s;
  }
  EXPECT_GT(selected, 0u);
  EXPECT_LT(selected, data.records.size());
}

TEST(ExactPrediction, HandComputedTables) {
  const Population pop = fixtures::pop_a();
  const double taus[] = {0.0, 0.3, 0.45};
  const double y_sel[] = {0.5, 0.4, 0.3};
  const double s_full[] = {1.0 / 3.0, 2.0 / 3.0, 1.0};
  const double ys_full[] = {1.0 / 6.0, 4.0 / 15.0, 0.3};
  for (int i = 0; i < 3; ++i) {
    const DecisionRule rule = det_rule(0.45, taus[i]);
    EXPECT_NEAR(exact_prediction(pop, rule, Exercise::y_given_selected, 0, 1), y_sel[i], 1e-12);
    EXPECT_NEAR(exact_prediction(pop, rule, Exercise::s_full, 0, 1), s_full[i], 1e-12);
    EXPECT_NEAR(exact_prediction(pop, rule, Exercise::ys_full, 0, 1), ys_full[i], 1e-12);
  }
}

TEST(ExactPrediction, AgreesWithBruteForceOracleUnderNoise) {
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    const Population pop = fixtures::random_population(seed);
    for (NoiseFamily family : {NoiseFamily::logistic, NoiseFamily::normal}) {
      const DecisionRule rule{0.5, 0.2, Variant::baseline,
                              NoiseSpec{family, 0.7, std::nullopt}};
      const auto p = [&](const Cell& c) {
        const double z = (0.5 - 0.2 * c.r) - c.mu;
        return family == NoiseFamily::logistic ? 1.0 - oracle::logistic_cdf(z, 0.7)
                                               : 1.0 - oracle::normal_cdf(z, 0.7);
      };
      for (int x : pop.x_domain()) {
        for (int r = 0; r <= 1; ++r) {
          EXPECT_NEAR(exact_prediction(pop, rule, Exercise::y_given_selected, x, r),
                      oracle::selected_conditional_mean(pop.cells(), p, x, r), 1e-12);
          EXPECT_NEAR(exact_prediction(pop, rule, Exercise::s_full, x, r),
                      oracle::selection_rate(pop.cells(), p, x, r), 1e-12);
          EXPECT_NEAR(exact_prediction(pop, rule, Exercise::ys_full, x, r),
                      oracle::joint_label_rate(pop.cells(), p, x, r), 1e-12);
        }
      }
    }
  }
}

TEST(ExactPrediction, PositivityViolationThrows) {
  const Population pop = fixtures::pop_a();
  EXPECT_THROW(exact_prediction(pop, det_rule(1.0, 0.0), Exercise::y_given_selected, 0, 1),
               PositivityError);
  // full-sample exercises stay defined
  EXPECT_NEAR(exact_prediction(pop, det_rule(1.0, 0.0), Exercise::s_full, 0, 1), 0.0, 1e-15);
  EXPECT_THROW(exact_prediction(pop, det_rule(0.45, 0.0), Exercise::s_full, 9, 1),
               PositivityError);
}

TEST(ExactPrediction, SelectionBiasVanishesWhenAllSelected) {
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    const Population pop = fixtures::random_population(seed);
    const DecisionRule rule = det_rule(0.4, 0.4);  // tau >= c: group 1 fully selected
    for (int x : pop.x_domain()) {
      EXPECT_NEAR(exact_prediction(pop, rule, Exercise::y_given_selected, x, 1),
                  pop.conditional_mean_y(x, 1), 1e-12);
    }
  }
}

TEST(ExactPrediction, JointNeverExceedsSelectionRate) {
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    const Population pop = fixtures::random_population(seed);
    for (double tau : {-0.2, 0.0, 0.25}) {
      for (auto noise : {std::optional<NoiseSpec>{},
                         std::optional<NoiseSpec>{NoiseSpec{NoiseFamily::normal, 0.6}}}) {
        const DecisionRule rule{0.5, tau, Variant::baseline, noise};
        for (int x : pop.x_domain()) {
          for (int r = 0; r <= 1; ++r) {
            EXPECT_LE(exact_prediction(pop, rule, Exercise::ys_full, x, r),
                      exact_prediction(pop, rule, Exercise::s_full, x, r) + 1e-15);
          }
        }
      }
    }
  }
}

TEST(ExactPredictionGroupBlind, EqualsGroupAwareWhenGroupIsFunctionOfX) {
  // r is determined by x, so pooling r adds nothing
  const Population pop = Population::build({Cell{0, 0, 1, 0.2, 0.2}, Cell{0, 1, 1, 0.2, 0.7},
                                            Cell{1, 0, 0, 0.3, 0.3}, Cell{1, 1, 0, 0.3, 0.8}});
  for (double tau : {0.0, 0.1, 0.3}) {
    const DecisionRule rule = det_rule(0.6, tau);
    EXPECT_NEAR(exact_prediction_group_blind(pop, rule, Exercise::y_given_selected, 0),
                exact_prediction(pop, rule, Exercise::y_given_selected, 0, 1), 1e-15);
    EXPECT_NEAR(exact_prediction_group_blind(pop, rule, Exercise::y_given_selected, 1),
                exact_prediction(pop, rule, Exercise::y_given_selected, 1, 0), 1e-15);
  }
}

ObservedDataset intercept_only_dataset() {
  ObservedDataset data;
  for (int i = 0; i < 10; ++i) {
    ObservedRecord rec;
    rec.x = Features{0};
    rec.r = i % 2;
    rec.s = 1;
    rec.y = i < 5 ? 1 : 0;
    data.records.push_back(rec);
  }
  return data;
}

TEST(Fit, InterceptOnlyRecoverMean) {
  const ObservedDataset data = intercept_only_dataset();
  FitSpec spec;
  const Predictor p = fit(data, Exercise::y_given_selected, /*group_blind=*/true, spec);
  EXPECT_NEAR(p.predict(Features{0}), 0.5, 1e-9);
  EXPECT_TRUE(p.fit_meta().converged);
}

TEST(Fit, FullyInteractedLogisticMatchesStratumMeans) {
  const Population pop = fixtures::pop_a();
  const ObservedDataset data = observe(pop, det_rule(0.45, 0.3), 200000, 31);

  FitSpec logistic_spec;
  logistic_spec.interact_group = true;
  const Predictor logit = fit(data, Exercise::y_given_selected, false, logistic_spec);
  EXPECT_TRUE(logit.fit_meta().converged);
  EXPECT_LT(logit.fit_meta().grad_max_norm, 1e-8);

  // test-side stratum means over the selected records
  std::map<std::pair<int, int>, std::pair<double, double>> sums;
  for (const ObservedRecord& rec : data.records) {
    if (rec.s != 1) continue;
    auto& slot = sums[{rec.x[0], rec.r}];
    slot.first += *rec.y;
    slot.second += 1.0;
  }
  for (const auto& [key, sum] : sums) {
    const double stratum_mean = sum.first / sum.second;
    EXPECT_NEAR(logit.predict(Features{key.first}, key.second), stratum_mean, 1e-3);
  }
}

TEST(Fit, SaturatedMatchesExactWithinSamplingError) {
  const Population pop = fixtures::pop_a();
  const DecisionRule rule = det_rule(0.45, 0.3);
  const ObservedDataset data = observe(pop, rule, 200000, 13);
  FitSpec spec;
  spec.form = PredictorForm::saturated;
  const Predictor p = fit(data, Exercise::y_given_selected, false, spec);
  EXPECT_NEAR(p.predict(Features{0}, 1), 0.4, 0.02);
  for (int x = 0; x <= 1; ++x) {
    for (int r = 0; r <= 1; ++r) {
      EXPECT_NEAR(p.predict(Features{x}, r),
                  exact_prediction(pop, rule, Exercise::y_given_selected, x, r), 0.02);
    }
  }
}

TEST(Fit, PerfectSeparationStaysFinite) {
  ObservedDataset data;
  for (int i = 0; i < 40; ++i) {
    ObservedRecord rec;
    rec.x = Features{i % 2};
    rec.r = 0;
    rec.s = 1;
    rec.y = i % 2;  // label == x: separated
    data.records.push_back(rec);
  }
  const Predictor p = fit(data, Exercise::y_given_selected, true, FitSpec{});
  for (double b : p.coefficients()) EXPECT_TRUE(std::isfinite(b));
  EXPECT_GT(p.predict(Features{1}), 0.0);
  EXPECT_LT(p.predict(Features{1}), 1.0);
  EXPECT_GT(p.predict(Features{1}), 0.99);  // ridge keeps it finite, not vague
}

TEST(Fit, ZeroSelectedRecordsThrows) {
  const Population pop = fixtures::pop_a();
  const ObservedDataset data = observe(pop, det_rule(1.0, 0.0), 1000, 3);
  EXPECT_THROW(fit(data, Exercise::y_given_selected, false, FitSpec{}), PositivityError);
  // full-sample exercises still fit
  EXPECT_NO_THROW(fit(data, Exercise::s_full, false, FitSpec{}));
}

TEST(Fit, NonConvergenceIsReported) {
  ObservedDataset data;
  for (int i = 0; i < 10; ++i) {
    ObservedRecord rec;
    rec.x = Features{0};
    rec.r = 0;
    rec.s = 1;
    rec.y = i < 7 ? 1 : 0;  // asymmetric, so beta=0 is not already optimal
    data.records.push_back(rec);
  }
  FitSpec spec;
  spec.logistic.max_iter = 0;
  const Predictor p = fit(data, Exercise::y_given_selected, true, spec);
  EXPECT_FALSE(p.fit_meta().converged);
  EXPECT_GT(p.fit_meta().grad_max_norm, 1e-8);
}

TEST(Fit, MaskedSlotsArePoisonProof) {
  const Population pop = fixtures::pop_a();
  const ObservedDataset clean = observe(pop, det_rule(0.45, 0.2), 30000, 23);
  ObservedDataset poisoned = clean;
  for (ObservedRecord& rec : poisoned.records) {
    if (rec.s == 0) rec.y = 1;  // hostile labels where none should be read
  }
  for (Exercise ex : {Exercise::y_given_selected, Exercise::s_full, Exercise::ys_full}) {
    for (PredictorForm form : {PredictorForm::saturated, PredictorForm::logistic}) {
      FitSpec spec;
      spec.form = form;
      const Predictor a = fit(clean, ex, false, spec);
      const Predictor b = fit(poisoned, ex, false, spec);
      for (int x = 0; x <= 1; ++x) {
        for (int r = 0; r <= 1; ++r) {
          double pa, pb;
          try {
            pa = a.predict(Features{x}, r);
          } catch (const PositivityError&) {
            EXPECT_THROW(b.predict(Features{x}, r), PositivityError);
            continue;
          }
          pb = b.predict(Features{x}, r);
          EXPECT_EQ(pa, pb) << to_string(ex) << " x=" << x << " r=" << r;
        }
      }
    }
  }
}

TEST(Predict, ContractViolations) {
  const ObservedDataset data = intercept_only_dataset();
  FitSpec spec;
  spec.form = PredictorForm::saturated;
  const Predictor aware = fit(data, Exercise::y_given_selected, false, spec);
  EXPECT_THROW(aware.predict(Features{0}), ValidationError);       // r required
  EXPECT_THROW(aware.predict(Features{9}, 0), PositivityError);    // off support
  const Predictor blind = fit(data, Exercise::y_given_selected, true, spec);
  EXPECT_NO_THROW(blind.predict(Features{0}));
  EXPECT_NEAR(blind.predict(Features{0}, 1), blind.predict(Features{0}), 1e-15);
}

TEST(PredictorJson, RoundTripPreservesPredictions) {
  const Population pop = fixtures::pop_a();
  const ObservedDataset data = observe(pop, det_rule(0.45, 0.3), 20000, 41);
  for (PredictorForm form : {PredictorForm::saturated, PredictorForm::logistic}) {
    FitSpec spec;
    spec.form = form;
    spec.interact_group = form == PredictorForm::logistic;
    const Predictor p = fit(data, Exercise::ys_full, false, spec);
    const Predictor q = Predictor::from_json(p.to_json());
    for (int x = 0; x <= 1; ++x) {
      for (int r = 0; r <= 1; ++r) {
        EXPECT_DOUBLE_EQ(p.predict(Features{x}, r), q.predict(Features{x}, r));
      }
    }
  }
}

}  // namespace
}  // namespace selab
