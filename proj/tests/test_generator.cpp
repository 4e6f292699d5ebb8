#include "selab/generator.hpp"

#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "oracle_utils.hpp"

namespace selab {
namespace {

TEST(Generator, DeterministicInSeed) {
  const GeneratorConfig cfg;
  const auto a = generate_stops(cfg, 500, 9);
  const auto b = generate_stops(cfg, 500, 9);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].x, b[i].x);
    EXPECT_EQ(a[i].r, b[i].r);
    EXPECT_EQ(a[i].u, b[i].u);
    EXPECT_EQ(a[i].searched, b[i].searched);
    EXPECT_EQ(a[i].contraband, b[i].contraband);
  }
}

TEST(Generator, MarginalsMatchConfigWithinFourSigma) {
  const GeneratorConfig cfg;
  const std::size_t n = 100000;
  const auto records = generate_stops(cfg, n, 4);

  auto near_binomial = [&](double freq, double p, double count) {
    const double bound = 4.0 * std::sqrt(p * (1.0 - p) / count);
    EXPECT_NEAR(freq, p, bound);
  };

  std::size_t g1 = 0, male = 0;
  std::array<std::size_t, 2> group_n{0, 0};
  std::array<std::array<std::size_t, 6>, 2> loc{};
  std::array<std::array<std::size_t, 2>, 2> young{};
  std::vector<std::array<std::size_t, 2>> u_hits(cfg.u_logit.size(), {0, 0});
  for (const StopRecord& rec : records) {
    g1 += rec.r;
    ++group_n[rec.r];
    male += rec.x[1];
    ++loc[rec.r][rec.x[3]];
    young[rec.r][0] += rec.x[0] <= 1;
    ++young[rec.r][1];
    for (std::size_t j = 0; j < rec.u.size(); ++j) u_hits[j][rec.r] += rec.u[j];
  }
  near_binomial(static_cast<double>(g1) / n, cfg.group1_share, n);
  near_binomial(static_cast<double>(male) / n, cfg.p_male, n);
  for (int r = 0; r <= 1; ++r) {
    const double nr = static_cast<double>(group_n[r]);
    near_binomial(young[r][0] / nr, r == 1 ? cfg.p_young_g1 : cfg.p_young_g0, nr);
    const auto& probs = r == 1 ? cfg.location_probs_g1 : cfg.location_probs_g0;
    for (std::size_t l = 0; l < probs.size(); ++l) {
      near_binomial(loc[r][l] / nr, probs[l], nr);
    }
    for (std::size_t j = 0; j < cfg.u_logit.size(); ++j) {
      near_binomial(u_hits[j][r] / nr, sigmoid(cfg.u_logit[j] + r * cfg.u_shift[j]), nr);
    }
  }
}

TEST(Generator, ContrabandRecordedOnlyWhenSearched) {
  const auto records = generate_stops(GeneratorConfig{}, 5000, 12);
  std::size_t searched = 0;
  for (const StopRecord& rec : records) {
    EXPECT_EQ(rec.contraband.has_value(), rec.searched == 1);
    searched += rec.searched;
  }
  EXPECT_GT(searched, 0u);
  EXPECT_LT(searched, records.size());
}

TEST(Generator, ConfigValidation) {
  GeneratorConfig cfg;
  cfg.group1_share = 1.0;
  EXPECT_THROW(cfg.validate(), ValidationError);
  cfg = GeneratorConfig{};
  cfg.build_probs = {0.5, 0.4};  // does not sum to 1
  EXPECT_THROW(cfg.validate(), ValidationError);
  cfg = GeneratorConfig{};
  cfg.y_u.pop_back();
  EXPECT_THROW(cfg.validate(), ValidationError);
  EXPECT_THROW(generate_stops(GeneratorConfig{}, 0, 1), ValidationError);
}

TEST(Generator, ConfigJsonRoundTrip) {
  GeneratorConfig cfg;
  cfg.group1_share = 0.61;
  cfg.y_intercept = -2.0;
  const GeneratorConfig back = generator_config_from_json(generator_config_to_json(cfg));
  EXPECT_DOUBLE_EQ(back.group1_share, 0.61);
  EXPECT_DOUBLE_EQ(back.y_intercept, -2.0);
  EXPECT_EQ(back.u_logit, cfg.u_logit);
  // partial documents override only what they mention
  const GeneratorConfig partial = generator_config_from_json({{"p_male", 0.5}});
  EXPECT_DOUBLE_EQ(partial.p_male, 0.5);
  EXPECT_DOUBLE_EQ(partial.group1_share, GeneratorConfig{}.group1_share);
}

TEST(Generator, CsvRoundTripsThroughDefaultSchema) {
  const GeneratorConfig cfg;
  const auto records = generate_stops(cfg, 4000, 21);
  std::ostringstream csv;
  write_stops_csv(records, csv);

  std::istringstream in(csv.str());
  const IngestResult result = ingest(in, SchemaConfig::defaults());
  ASSERT_EQ(result.records.size(), records.size());
  EXPECT_EQ(result.report.dropped_missing, 0u);
  EXPECT_EQ(result.report.dropped_inconsistent, 0u);
  EXPECT_EQ(result.report.filtered_group, 0u);

  // group, search, label, and reason flags survive byte-for-byte; the coded
  // x features survive up to the schema's level coding
  for (std::size_t i = 0; i < records.size(); ++i) {
    EXPECT_EQ(result.records[i].r, records[i].r);
    EXPECT_EQ(result.records[i].searched, records[i].searched);
    EXPECT_EQ(result.records[i].contraband, records[i].contraband);
    EXPECT_EQ(result.records[i].u, records[i].u);
    EXPECT_EQ(result.records[i].x[0], records[i].x[0]);  // age bands align by construction
    EXPECT_EQ(result.records[i].x[4], records[i].x[4]);  // hour bands too
  }
}

}  // namespace
}  // namespace selab
