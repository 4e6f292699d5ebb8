#include "selab/decision.hpp"

#include <cmath>

namespace selab {

namespace {
constexpr double kSqrt2 = 1.4142135623730950488;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;
}  // namespace

Variant variant_from_string(const std::string& s) {
  if (s == "baseline") return Variant::baseline;
  if (s == "fewer_labels") return Variant::fewer_labels;
  throw ValidationError("unknown rule variant: " + s);
}

std::string to_string(Variant v) {
  return v == Variant::baseline ? "baseline" : "fewer_labels";
}

NoiseFamily noise_family_from_string(const std::string& s) {
  if (s == "logistic") return NoiseFamily::logistic;
  if (s == "normal") return NoiseFamily::normal;
  throw ValidationError("unsupported noise family: " + s);
}

std::string to_string(NoiseFamily f) {
  return f == NoiseFamily::logistic ? "logistic" : "normal";
}

void DecisionRule::validate() const {
  // c = 1 is allowed so "nobody is ever searched" rules stay expressible.
  if (!(c > 0.0 && c <= 1.0)) throw ValidationError("rule: c must lie in (0, 1]");
  if (noise) {
    if (!(noise->scale > 0.0)) throw ValidationError("rule: noise scale must be positive");
    if (noise->scale_group1 && !(*noise->scale_group1 > 0.0))
      throw ValidationError("rule: group-1 noise scale must be positive");
  }
}

double noise_cdf(const NoiseSpec& spec, int r, double z) {
  const double t = z / spec.scale_for(r);
  if (spec.family == NoiseFamily::logistic) return 1.0 / (1.0 + std::exp(-t));
  return 0.5 * std::erfc(-t / kSqrt2);
}

double noise_survival(const NoiseSpec& spec, int r, double z) {
  const double t = z / spec.scale_for(r);
  if (spec.family == NoiseFamily::logistic) return 1.0 / (1.0 + std::exp(t));
  return 0.5 * std::erfc(t / kSqrt2);
}

double noise_pdf(const NoiseSpec& spec, int r, double z) {
  const double s = spec.scale_for(r);
  const double t = z / s;
  if (spec.family == NoiseFamily::logistic) {
    const double e = std::exp(-std::fabs(t));
    const double denom = (1.0 + e) * (1.0 + e);
    return e / (s * denom);
  }
  return kInvSqrt2Pi * std::exp(-0.5 * t * t) / s;
}

double noise_hazard(const NoiseSpec& spec, int r, double z) {
  return noise_pdf(spec, r, z) / noise_survival(spec, r, z);
}

double sample_noise(const NoiseSpec& spec, int r, SplitMix64& rng) {
  const double s = spec.scale_for(r);
  if (spec.family == NoiseFamily::logistic) return s * sample_standard_logistic(rng);
  return s * sample_standard_normal(rng);
}

int select(const DecisionRule& rule, double mu, int r) {
  if (rule.noise) throw ValidationError("select: rule is noisy, use select_noisy");
  return mu >= rule.threshold(r) ? 1 : 0;
}

int select_noisy(const DecisionRule& rule, double mu, int r, double eps) {
  if (!rule.noise) throw ValidationError("select_noisy: rule has no noise spec");
  return mu + eps >= rule.threshold(r) ? 1 : 0;
}

double selection_probability(const DecisionRule& rule, double mu, int r) {
  if (!rule.noise) {
    throw ValidationError("selection_probability: deterministic rule has no noise CDF");
  }
  return noise_survival(*rule.noise, r, rule.threshold(r) - mu);
}

double cell_selection_probability(const DecisionRule& rule, const Cell& cell) {
  if (rule.noise) return selection_probability(rule, cell.mu, cell.r);
  return cell.mu >= rule.threshold(cell.r) ? 1.0 : 0.0;
}

double SelectionTable::selected_mass(int x, int r) const {
  double m = 0.0;
  for (const CellSelection& row : rows)
    if (row.cell.x == x && row.cell.r == r) m += row.selected_mass;
  return m;
}

double SelectionTable::group_selected_mass(int r) const {
  double m = 0.0;
  for (const CellSelection& row : rows)
    if (row.cell.r == r) m += row.selected_mass;
  return m;
}

SelectionTable apply_rule(const Population& pop, const DecisionRule& rule) {
  rule.validate();
  SelectionTable table;
  table.rows.reserve(pop.cells().size());
  for (const Cell& cell : pop.cells()) {
    const double p = cell_selection_probability(rule, cell);
    table.rows.push_back(CellSelection{cell, p, cell.mass * p});
  }
  return table;
}

}  // namespace selab
