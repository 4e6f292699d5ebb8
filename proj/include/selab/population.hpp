#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "selab/rng.hpp"
#include "selab/util.hpp"

namespace selab {

// One atom of the joint distribution of (X, U, R, Y). X and U are
// categorical codes, R is the group indicator, `mass` the probability of
// the (x, u, r) triple and `mu` = P(Y=1 | x, u, r).
struct Cell {
  int x = 0;
  int u = 0;
  int r = 0;
  double mass = 0.0;
  double mu = 0.0;
};

struct Individual {
  int x = 0;
  int u = 0;
  int r = 0;
  int y = 0;
};

// Finite categorical population. Immutable after build(); every
// conditional expectation downstream is computed by exact enumeration of
// the cell table.
class Population {
 public:
  // Validates and renormalizes. Throws ValidationError on an empty list,
  // duplicate (x,u,r) triples, negative mass, mu outside [0,1], or
  // non-positive total mass. Masses are divided by their total so the
  // built population always sums to 1; the applied factor is recorded.
  static Population build(std::vector<Cell> cells);

  const std::vector<Cell>& cells() const { return cells_; }
  const std::vector<int>& x_domain() const { return x_domain_; }
  const std::vector<int>& u_domain() const { return u_domain_; }

  // Total mass of the input divided out at build time (1.0 for an already
  // normalized list).
  double renorm_factor() const { return renorm_factor_; }
  bool was_renormalized() const { return std::fabs(renorm_factor_ - 1.0) > 1e-9; }

  double group_mass(int r) const;
  double stratum_mass(int x, int r) const;

  // E[Y | X=x, R=r] by enumeration. Throws PositivityError on an empty
  // stratum.
  double conditional_mean_y(int x, int r) const;

  // Unconditional E[Y].
  double mean_y() const;

  // n i.i.d. draws; the cell is drawn from the mass table, then y from
  // Bernoulli(mu). Same (n, seed) gives a bit-identical sequence.
  std::vector<Individual> sample(std::size_t n, std::uint64_t seed) const;

  // Draws a single individual from an already-seeded stream. Exposed so
  // observers can interleave other variates on the same stream.
  Individual sample_one(SplitMix64& rng) const;

 private:
  Population() = default;

  std::vector<Cell> cells_;
  std::vector<int> x_domain_;
  std::vector<int> u_domain_;
  std::vector<double> cum_mass_;
  double renorm_factor_ = 1.0;
};

Population population_from_json(const nlohmann::json& j);
nlohmann::json population_to_json(const Population& pop);
Population load_population(const std::string& path);

namespace fixtures {

// Canonical 12-cell test population: x in {0,1}, u in {0,1,2}, r in {0,1},
// equal masses, mu = 0.1 + 0.2*u + 0.1*x (independent of r).
Population pop_a();

// Seeded random population on a full (x,u,r) grid with |X| <= max_x and
// |U| <= max_u; every stratum has positive mass.
Population random_population(std::uint64_t seed, int max_x = 4, int max_u = 8);

}  // namespace fixtures

}  // namespace selab
