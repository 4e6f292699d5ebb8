#include "selab/population.hpp"

#include <cmath>
#include <map>

#include <gtest/gtest.h>

#include "oracle_utils.hpp"

namespace selab {
namespace {

TEST(PopulationBuild, UniformMassesSumToOne) {
  const Population pop = fixtures::pop_a();
  ASSERT_EQ(pop.cells().size(), 12u);
  double total = 0.0;
  for (const Cell& c : pop.cells()) total += c.mass;
  EXPECT_NEAR(total, 1.0, 1e-12);
  EXPECT_FALSE(pop.was_renormalized());
  EXPECT_EQ(pop.x_domain(), (std::vector<int>{0, 1}));
  EXPECT_EQ(pop.u_domain(), (std::vector<int>{0, 1, 2}));
}

TEST(PopulationBuild, RenormalizesAndRecordsFactor) {
  const Population pop = Population::build({Cell{0, 0, 0, 0.999, 0.25}});
  EXPECT_TRUE(pop.was_renormalized());
  EXPECT_NEAR(pop.renorm_factor(), 0.999, 1e-15);
  EXPECT_NEAR(pop.cells()[0].mass, 1.0, 1e-15);
}

TEST(PopulationBuild, RejectsDuplicateTriple) {
  EXPECT_THROW(Population::build({Cell{0, 0, 0, 0.5, 0.1}, Cell{0, 0, 0, 0.5, 0.2}}),
               ValidationError);
}

TEST(PopulationBuild, RejectsBadCells) {
  EXPECT_THROW(Population::build({}), ValidationError);
  EXPECT_THROW(Population::build({Cell{0, 0, 0, -0.1, 0.5}}), ValidationError);
  EXPECT_THROW(Population::build({Cell{0, 0, 0, 1.0, 1.5}}), ValidationError);
  EXPECT_THROW(Population::build({Cell{0, 0, 2, 1.0, 0.5}}), ValidationError);
  EXPECT_THROW(Population::build({Cell{0, 0, 0, 0.0, 0.5}}), ValidationError);  // zero total
}

TEST(ConditionalMeanY, MatchesHandEnumeration) {
  const Population pop = fixtures::pop_a();
  // three equal cells per stratum: (0.1 + 0.3 + 0.5)/3 and (0.2 + 0.4 + 0.6)/3
  EXPECT_NEAR(pop.conditional_mean_y(0, 1), 0.3, 1e-12);
  EXPECT_NEAR(pop.conditional_mean_y(1, 0), 0.4, 1e-12);
}

TEST(ConditionalMeanY, SingleCellDegenerate) {
  const Population pop = Population::build({Cell{3, 7, 1, 1.0, 0.25}});
  EXPECT_DOUBLE_EQ(pop.conditional_mean_y(3, 1), 0.25);
}

TEST(ConditionalMeanY, ThrowsOnEmptyStratum) {
  const Population pop = Population::build({Cell{0, 0, 0, 1.0, 0.25}});
  EXPECT_THROW(pop.conditional_mean_y(0, 1), PositivityError);
  EXPECT_THROW(pop.conditional_mean_y(5, 0), PositivityError);
}

TEST(ConditionalMeanY, IteratedExpectationsHoldOnRandomPopulations) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const Population pop = fixtures::random_population(seed);
    double reconstructed = 0.0;
    for (int x : pop.x_domain()) {
      for (int r = 0; r <= 1; ++r) {
        const double mass = pop.stratum_mass(x, r);
        if (mass > 0.0) reconstructed += mass * pop.conditional_mean_y(x, r);
      }
    }
    EXPECT_NEAR(reconstructed, pop.mean_y(), 1e-12) << "seed " << seed;
  }
}

TEST(Sample, DeterministicInSeed) {
  const Population pop = fixtures::pop_a();
  const auto a = pop.sample(10, 7);
  const auto b = pop.sample(10, 7);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].x, b[i].x);
    EXPECT_EQ(a[i].u, b[i].u);
    EXPECT_EQ(a[i].r, b[i].r);
    EXPECT_EQ(a[i].y, b[i].y);
  }
  const auto c = pop.sample(10, 8);
  bool any_diff = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    any_diff |= a[i].x != c[i].x || a[i].u != c[i].u || a[i].y != c[i].y;
  }
  EXPECT_TRUE(any_diff);
}

TEST(Sample, DegenerateBernoulli) {
  const Population pop = Population::build({Cell{0, 0, 1, 1.0, 1.0}});
  for (const Individual& ind : pop.sample(5, 3)) EXPECT_EQ(ind.y, 1);
}

TEST(Sample, GroupMarginalWithinFourSigma) {
  const Population pop = fixtures::pop_a();
  const std::size_t n = 1000000;
  std::size_t r1 = 0;
  for (const Individual& ind : pop.sample(n, 1)) r1 += ind.r;
  // exact marginal from the cell table is 1/2
  EXPECT_NEAR(static_cast<double>(r1) / n, 0.5, 0.002);
}

TEST(Sample, CellFrequenciesWithinFourSigma) {
  const Population pop = fixtures::pop_a();
  const std::size_t n = 1000000;
  std::map<std::tuple<int, int, int>, std::size_t> counts;
  for (const Individual& ind : pop.sample(n, 2)) counts[{ind.x, ind.u, ind.r}]++;
  for (const Cell& c : pop.cells()) {
    const double p = c.mass;
    const double bound = 4.0 * std::sqrt(p * (1.0 - p) / n);
    const double freq = static_cast<double>(counts[{c.x, c.u, c.r}]) / n;
    EXPECT_NEAR(freq, p, bound);
  }
}

TEST(PopulationJson, RoundTrip) {
  const Population pop = fixtures::pop_a();
  const Population back = population_from_json(population_to_json(pop));
  ASSERT_EQ(back.cells().size(), pop.cells().size());
  for (std::size_t i = 0; i < pop.cells().size(); ++i) {
    EXPECT_EQ(back.cells()[i].x, pop.cells()[i].x);
    EXPECT_EQ(back.cells()[i].u, pop.cells()[i].u);
    EXPECT_EQ(back.cells()[i].r, pop.cells()[i].r);
    EXPECT_DOUBLE_EQ(back.cells()[i].mass, pop.cells()[i].mass);
    EXPECT_DOUBLE_EQ(back.cells()[i].mu, pop.cells()[i].mu);
  }
}

TEST(PopulationJson, RejectsMalformedDocuments) {
  EXPECT_THROW(population_from_json(nlohmann::json{{"cells", 3}}), ValidationError);
  EXPECT_THROW(population_from_json(nlohmann::json::object()), ValidationError);
  EXPECT_THROW(population_from_json(nlohmann::json{{"cells", {{{"x", 0}}}}}), ValidationError);
}

}  // namespace
}  // namespace selab
