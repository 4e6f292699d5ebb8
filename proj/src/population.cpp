#include "selab/population.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "selab/rng.hpp"

namespace selab {

Population Population::build(std::vector<Cell> cells) {
  if (cells.empty()) throw ValidationError("population: cell list is empty");

  std::set<std::tuple<int, int, int>> seen;
  double total = 0.0;
  for (const Cell& c : cells) {
    if (!(c.mass >= 0.0)) {
      throw ValidationError("population: negative mass at (x=" + std::to_string(c.x) +
                            ",u=" + std::to_string(c.u) + ",r=" + std::to_string(c.r) + ")");
    }
    if (!(c.mu >= 0.0 && c.mu <= 1.0)) {
      throw ValidationError("population: mu outside [0,1] at (x=" + std::to_string(c.x) +
                            ",u=" + std::to_string(c.u) + ",r=" + std::to_string(c.r) + ")");
    }
    if (c.r != 0 && c.r != 1) {
      throw ValidationError("population: r must be 0 or 1");
    }
    if (!seen.insert({c.x, c.u, c.r}).second) {
      throw ValidationError("population: duplicate cell (x=" + std::to_string(c.x) +
                            ",u=" + std::to_string(c.u) + ",r=" + std::to_string(c.r) + ")");
    }
    total += c.mass;
  }
  if (!(total > 0.0)) throw ValidationError("population: total mass is not positive");

  Population pop;
  pop.renorm_factor_ = total;
  pop.cells_ = std::move(cells);
  for (Cell& c : pop.cells_) c.mass /= total;

  std::set<int> xs, us;
  pop.cum_mass_.reserve(pop.cells_.size());
  double acc = 0.0;
  for (const Cell& c : pop.cells_) {
    xs.insert(c.x);
    us.insert(c.u);
    acc += c.mass;
    pop.cum_mass_.push_back(acc);
  }
  pop.cum_mass_.back() = 1.0;  // guard the last bucket against rounding
  pop.x_domain_.assign(xs.begin(), xs.end());
  pop.u_domain_.assign(us.begin(), us.end());
  return pop;
}

double Population::group_mass(int r) const {
  double m = 0.0;
  for (const Cell& c : cells_)
    if (c.r == r) m += c.mass;
  return m;
}

double Population::stratum_mass(int x, int r) const {
  double m = 0.0;
  for (const Cell& c : cells_)
    if (c.x == x && c.r == r) m += c.mass;
  return m;
}

double Population::conditional_mean_y(int x, int r) const {
  double m = 0.0, my = 0.0;
  for (const Cell& c : cells_) {
    if (c.x == x && c.r == r) {
      m += c.mass;
      my += c.mass * c.mu;
    }
  }
  if (m == 0.0) {
    throw PositivityError("conditional_mean_y: empty stratum (x=" + std::to_string(x) +
                          ",r=" + std::to_string(r) + ")");
  }
  return my / m;
}

double Population::mean_y() const {
  double my = 0.0;
  for (const Cell& c : cells_) my += c.mass * c.mu;
  return my;
}

Individual Population::sample_one(SplitMix64& rng) const {
  const double u = rng.uniform01();
  const auto it = std::upper_bound(cum_mass_.begin(), cum_mass_.end(), u);
  const std::size_t idx = std::min<std::size_t>(
      static_cast<std::size_t>(it - cum_mass_.begin()), cells_.size() - 1);
  const Cell& c = cells_[idx];
  return Individual{c.x, c.u, c.r, rng.bernoulli(c.mu) ? 1 : 0};
}

std::vector<Individual> Population::sample(std::size_t n, std::uint64_t seed) const {
  if (n < 1) throw ValidationError("sample: n must be >= 1");
  SplitMix64 rng(seed);
  std::vector<Individual> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(sample_one(rng));
  return out;
}

Population population_from_json(const nlohmann::json& j) {
  if (!j.contains("cells") || !j["cells"].is_array()) {
    throw ValidationError("population json: missing \"cells\" array");
  }
  std::vector<Cell> cells;
  cells.reserve(j["cells"].size());
  for (const auto& cj : j["cells"]) {
    Cell c;
    try {
      c.x = cj.at("x").get<int>();
      c.u = cj.at("u").get<int>();
      c.r = cj.at("r").get<int>();
      c.mass = cj.at("mass").get<double>();
      c.mu = cj.at("mu").get<double>();
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(std::string("population json: bad cell: ") + e.what());
    }
    cells.push_back(c);
  }
  return Population::build(std::move(cells));
}

nlohmann::json population_to_json(const Population& pop) {
  nlohmann::json cells = nlohmann::json::array();
  for (const Cell& c : pop.cells()) {
    cells.push_back({{"x", c.x}, {"u", c.u}, {"r", c.r}, {"mass", c.mass}, {"mu", c.mu}});
  }
  return nlohmann::json{{"cells", cells}};
}

Population load_population(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open population file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("population file " + path + ": " + e.what());
  }
  return population_from_json(j);
}

namespace fixtures {

Population pop_a() {
  std::vector<Cell> cells;
  for (int x = 0; x <= 1; ++x)
    for (int u = 0; u <= 2; ++u)
      for (int r = 0; r <= 1; ++r)
        cells.push_back(Cell{x, u, r, 1.0 / 12.0, 0.1 + 0.2 * u + 0.1 * x});
  return Population::build(std::move(cells));
}

Population random_population(std::uint64_t seed, int max_x, int max_u) {
  SplitMix64 rng(seed);
  const int nx = 1 + static_cast<int>(rng.next() % static_cast<std::uint64_t>(max_x));
  const int nu = 1 + static_cast<int>(rng.next() % static_cast<std::uint64_t>(max_u));
  std::vector<Cell> cells;
  for (int x = 0; x < nx; ++x)
    for (int u = 0; u < nu; ++u)
      for (int r = 0; r <= 1; ++r)
        cells.push_back(Cell{x, u, r, 0.05 + rng.uniform01(), rng.uniform01()});
  return Population::build(std::move(cells));
}

}  // namespace fixtures

}  // namespace selab
